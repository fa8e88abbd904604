#include "jointnlu/embeddings.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "jointnlu/error.hpp"

namespace jointnlu {

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool is_unsigned_integer(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

void fnv1a(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

// Little-endian helpers; independent of host byte order.
template <typename UInt>
void put_le(std::ostream& out, UInt v) {
  std::array<char, sizeof(UInt)> bytes;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(UInt)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw Error(std::string("contextual store truncated while reading ") + what);
  }
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    v |= static_cast<UInt>(bytes[i]) << (8 * i);
  }
  return v;
}

constexpr std::array<char, 4> kContextualMagic{'C', 'T', 'X', 'V'};
constexpr std::uint8_t kContextualVersion = 1;

}  // namespace

EmbeddingTable::EmbeddingTable(int dim, std::string source_name)
    : dim_(dim), source_name_(std::move(source_name)) {
  if (dim < 1) throw Error("embedding dimension must be at least 1");
}

void EmbeddingTable::insert(const std::string& token,
                            std::span<const float> vector) {
  if (static_cast<int>(vector.size()) != dim_) {
    throw Error("embedding for '" + token + "' has " +
                std::to_string(vector.size()) + " values, expected " +
                std::to_string(dim_));
  }
  if (const auto it = index_.find(token); it != index_.end()) {
    ++duplicates_;
    std::copy(vector.begin(), vector.end(), data_.begin() + it->second * dim_);
    return;
  }
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
  data_.insert(data_.end(), vector.begin(), vector.end());
}

std::optional<Eigen::Map<const Eigen::VectorXf>> EmbeddingTable::find(
    std::string_view token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return Eigen::Map<const Eigen::VectorXf>(data_.data() + it->second * dim_,
                                           dim_);
}

EmbeddingTable::Lookup EmbeddingTable::lookup(std::string_view token) const {
  if (auto v = find(token)) return {*v, false};
  if (auto v = find(ascii_lower(token))) return {*v, false};
  return {Eigen::VectorXf::Zero(dim_), true};
}

std::uint64_t EmbeddingTable::checksum() const {
  std::vector<std::size_t> order(tokens_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return tokens_[a] < tokens_[b]; });
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i : order) {
    fnv1a(h, tokens_[i].data(), tokens_[i].size());
    fnv1a(h, data_.data() + i * dim_, sizeof(float) * dim_);
  }
  return h;
}

EmbeddingTable load_embedding_text(std::istream& in,
                                   std::optional<int> expected_dim,
                                   std::string source_name) {
  std::optional<EmbeddingTable> table;
  std::vector<float> values;
  std::string line;
  std::size_t line_no = 0;
  bool first_data_line = true;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (first_data_line && fields.size() == 2 &&
        is_unsigned_integer(fields[0]) && is_unsigned_integer(fields[1])) {
      first_data_line = false;
      continue;
    }
    first_data_line = false;
    if (fields.size() < 2) throw ParseError(line_no, "embedding line has no values");

    const int dim = static_cast<int>(fields.size()) - 1;
    if (!table) {
      if (expected_dim && *expected_dim != dim) {
        throw ParseError(line_no, "expected dimension " +
                                      std::to_string(*expected_dim) + ", found " +
                                      std::to_string(dim));
      }
      table.emplace(dim, source_name);
    } else if (dim != table->dim()) {
      throw ParseError(line_no, "inconsistent dimension: expected " +
                                    std::to_string(table->dim()) + ", found " +
                                    std::to_string(dim));
    }
    values.resize(dim);
    for (int i = 0; i < dim; ++i) {
      const std::string_view f = fields[i + 1];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), values[i]);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw ParseError(line_no, "non-numeric component '" + std::string(f) + "'");
      }
    }
    table->insert(std::string(fields[0]), values);
  }
  if (!table) throw Error("embedding file contains no vectors");
  return std::move(*table);
}

EmbeddingTable load_embedding_text(const std::filesystem::path& path,
                                   std::optional<int> expected_dim) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings file " + path.string());
  try {
    return load_embedding_text(in, expected_dim, path.filename().string());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

OovReport oov_report(const EmbeddingTable& table, const Corpus& corpus) {
  OovReport report;
  std::size_t total = 0;
  std::size_t missed = 0;
  std::unordered_map<std::string, bool> seen;
  for (const Utterance& u : corpus.utterances) {
    for (const std::string& token : u.tokens) {
      ++total;
      if (!table.lookup(token).oov) continue;
      ++missed;
      if (seen.emplace(token, true).second) report.oov_tokens.push_back(token);
    }
  }
  report.oov_rate = total == 0 ? 0.0 : static_cast<double>(missed) / total;
  return report;
}

ContextualStore::ContextualStore(int dim) : dim_(dim) {
  if (dim < 1) throw Error("contextual dimension must be at least 1");
}

void ContextualStore::insert(std::uint32_t utterance_id, std::uint16_t position,
                             std::span<const float> vector) {
  if (static_cast<int>(vector.size()) != dim_) {
    throw Error("contextual vector has " + std::to_string(vector.size()) +
                " values, expected " + std::to_string(dim_));
  }
  const auto key = pack(utterance_id, position);
  if (const auto it = index_.find(key); it != index_.end()) {
    std::copy(vector.begin(), vector.end(), data_.begin() + it->second * dim_);
    return;
  }
  index_.emplace(key, keys_.size());
  keys_.push_back({utterance_id, position});
  data_.insert(data_.end(), vector.begin(), vector.end());
}

bool ContextualStore::contains(std::uint32_t utterance_id,
                               std::uint16_t position) const {
  return index_.contains(pack(utterance_id, position));
}

Eigen::Map<const Eigen::VectorXf> ContextualStore::at(
    std::size_t utterance_id, std::size_t position) const {
  const auto it =
      utterance_id <= UINT32_MAX && position <= UINT16_MAX
          ? index_.find(pack(static_cast<std::uint32_t>(utterance_id),
                             static_cast<std::uint16_t>(position)))
          : index_.end();
  if (it == index_.end()) {
    throw Error("missing contextual vector for utterance " +
                std::to_string(utterance_id) + " position " +
                std::to_string(position));
  }
  return Eigen::Map<const Eigen::VectorXf>(data_.data() + it->second * dim_, dim_);
}

bool ContextualStore::operator==(const ContextualStore& other) const {
  if (dim_ != other.dim_ || size() != other.size()) return false;
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    const Key& k = keys_[i];
    if (!other.contains(k.utterance_id, k.position)) return false;
    const auto a = at(k.utterance_id, k.position);
    const auto b = other.at(k.utterance_id, k.position);
    if (std::memcmp(a.data(), b.data(), sizeof(float) * dim_) != 0) return false;
  }
  return true;
}

ContextualStore load_contextual(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size())) {
    throw Error("contextual store truncated while reading magic");
  }
  if (magic != kContextualMagic) throw Error("not a contextual store (bad magic)");
  const auto version = get_le<std::uint8_t>(in, "version");
  if (version != kContextualVersion) {
    throw Error("unsupported contextual store version " + std::to_string(version));
  }
  const auto dim = get_le<std::uint32_t>(in, "dim");
  const auto count = get_le<std::uint64_t>(in, "count");
  if (dim == 0 || dim > (1u << 20)) {
    throw Error("invalid contextual dimension " + std::to_string(dim));
  }
  ContextualStore store(static_cast<int>(dim));
  std::vector<float> vec(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto id = get_le<std::uint32_t>(in, "record id");
    const auto pos = get_le<std::uint16_t>(in, "record position");
    for (std::uint32_t d = 0; d < dim; ++d) {
      vec[d] = std::bit_cast<float>(get_le<std::uint32_t>(in, "record vector"));
    }
    store.insert(id, pos, vec);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error("contextual store has trailing bytes; record length does not "
                "match header dim " + std::to_string(dim));
  }
  return store;
}

ContextualStore load_contextual(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open contextual store " + path.string());
  return load_contextual(in);
}

void write_contextual(const ContextualStore& store, std::ostream& out) {
  out.write(kContextualMagic.data(), kContextualMagic.size());
  put_le<std::uint8_t>(out, kContextualVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
  put_le<std::uint64_t>(out, store.size());
  for (const auto& key : store.keys()) {
    put_le<std::uint32_t>(out, key.utterance_id);
    put_le<std::uint16_t>(out, key.position);
    for (float v : store.at(key.utterance_id, key.position)) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
    }
  }
}

void write_contextual(const ContextualStore& store,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_contextual(store, out);
  if (!out) throw Error("write failed: " + path.string());
}

Eigen::VectorXf StaticVectors::vector(const Utterance& utterance,
                                      std::size_t position) const {
  return table_.lookup(utterance.tokens.at(position)).vector;
}

Eigen::VectorXf ContextualVectors::vector(const Utterance& utterance,
                                          std::size_t position) const {
  return store_.at(utterance.id, position);
}

}  // namespace jointnlu
