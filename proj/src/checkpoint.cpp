#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "jointnlu/model.hpp"

namespace jointnlu {

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kFormatName = "jointnlu-checkpoint";

nlohmann::json vocab_to_json(const Vocabularies& v) {
  return {{"tokens", v.tokens.labels()},
          {"chars", v.chars.labels()},
          {"slots", v.slots.labels()},
          {"intents", v.intents.labels()}};
}

Vocabularies vocab_from_json(const nlohmann::json& j) {
  Vocabularies v;
  v.tokens = LabelIndex(j.at("tokens").get<std::vector<std::string>>());
  v.chars = LabelIndex(j.at("chars").get<std::vector<std::string>>());
  v.slots = LabelIndex(j.at("slots").get<std::vector<std::string>>());
  v.intents = LabelIndex(j.at("intents").get<std::vector<std::string>>());
  return v;
}

}  // namespace

void save_checkpoint(const JointModel<float>& model, std::ostream& out) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : model.parameters()) {
    std::vector<Index> shape;
    for (int a = 0; a < p.value.shape().rank(); ++a) shape.push_back(p.value.shape()[a]);
    params.push_back({{"name", p.name}, {"shape", shape}});
  }
  const nlohmann::json manifest = {{"format", kFormatName},
                                   {"format_version", kFormatVersion},
                                   {"config", to_json(model.config())},
                                   {"vocabularies", vocab_to_json(model.vocabularies())},
                                   {"parameters", params}};
  const std::string text = manifest.dump();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.put('\0');
  for (const auto& p : model.parameters()) {
    for (Index i = 0; i < p.value.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(p.value[i]);
      const std::array<char, 4> bytes{static_cast<char>(bits & 0xFF),
                                      static_cast<char>((bits >> 8) & 0xFF),
                                      static_cast<char>((bits >> 16) & 0xFF),
                                      static_cast<char>((bits >> 24) & 0xFF)};
      out.write(bytes.data(), bytes.size());
    }
  }
  if (!out) throw Error("failed to write checkpoint");
}

void save_checkpoint(const JointModel<float>& model, const std::filesystem::path& path) {
  // Written to a sibling file first so a failed save never leaves a partial
  // checkpoint under the final name.
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    save_checkpoint(model, out);
  }
  std::filesystem::rename(tmp, path);
}

JointModel<float> load_checkpoint(std::istream& in, std::optional<Variant> expected) {
  std::string text;
  if (!std::getline(in, text, '\0') || in.eof()) {
    throw Error("checkpoint is truncated: missing manifest terminator");
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }
  try {
    if (manifest.value("format", std::string{}) != kFormatName) {
      throw Error("not a jointnlu checkpoint");
    }
    const int version = manifest.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error("unsupported checkpoint format_version " + std::to_string(version));
    }
    const ModelConfig config = model_config_from_json(manifest.at("config"));
    if (expected && *expected != config.variant) {
      throw Error("checkpoint variant is " + std::string(to_string(config.variant)) +
                  ", expected " + std::string(to_string(*expected)));
    }
    Vocabularies vocab = vocab_from_json(manifest.at("vocabularies"));

    ParameterSet<float> params;
    for (const auto& entry : manifest.at("parameters")) {
      const auto dims = entry.at("shape").get<std::vector<Index>>();
      Shape shape;
      switch (dims.size()) {
        case 1: shape = Shape{dims[0]}; break;
        case 2: shape = Shape{dims[0], dims[1]}; break;
        case 3: shape = Shape{dims[0], dims[1], dims[2]}; break;
        default: throw Error("parameter shape must have rank 1..3");
      }
      Tensor<float> value(shape);
      for (Index i = 0; i < value.size(); ++i) {
        std::array<unsigned char, 4> b{};
        if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
          throw Error("checkpoint is truncated in parameter '" +
                      entry.at("name").get<std::string>() + "'");
        }
        const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) |
                                   (static_cast<std::uint32_t>(b[3]) << 24);
        value[i] = std::bit_cast<float>(bits);
      }
      params.add(entry.at("name").get<std::string>(), std::move(value));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
      throw Error("checkpoint has trailing bytes after the parameter section");
    }
    return JointModel<float>(config, std::move(vocab), std::move(params));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed checkpoint manifest: ") + e.what());
  }
}

JointModel<float> load_checkpoint(const std::filesystem::path& path,
                                  std::optional<Variant> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return load_checkpoint(in, expected);
}

}  // namespace jointnlu
