#include "jointnlu/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "jointnlu/eval.hpp"
#include "jointnlu/lstm.hpp"

namespace jointnlu {

std::string_view to_string(Variant v) {
  return v == Variant::recurrent ? "recurrent" : "time_distributed";
}

Variant parse_variant(std::string_view name) {
  if (name == "recurrent" || name == "model1") return Variant::recurrent;
  if (name == "time_distributed" || name == "model2") return Variant::time_distributed;
  throw Error("unknown variant '" + std::string(name) +
              "' (expected recurrent or time_distributed)");
}

std::string_view to_string(Task t) {
  switch (t) {
    case Task::joint: return "joint";
    case Task::intent_only: return "intent";
    case Task::ner_only: return "ner";
  }
  return "joint";
}

Task parse_task(std::string_view name) {
  if (name == "joint") return Task::joint;
  if (name == "intent" || name == "intent_only") return Task::intent_only;
  if (name == "ner" || name == "ner_only") return Task::ner_only;
  throw Error("unknown task '" + std::string(name) + "' (expected joint, intent or ner)");
}

LossWeights weights_for(Task task, LossWeights base) {
  switch (task) {
    case Task::intent_only: return {0.0, base.intent};
    case Task::ner_only: return {base.slot, 0.0};
    case Task::joint: break;
  }
  return base;
}

void ModelConfig::validate() const {
  const int dims[] = {word_dim, char_emb_dim, char_filters, char_width, max_char_len, hidden};
  if (std::any_of(std::begin(dims), std::end(dims), [](int d) { return d < 1; })) {
    throw Error("model dimensions must all be at least 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error("dropout_rate must lie in [0, 1)");
  }
  if (slot_loss_weight < 0.0 || intent_loss_weight < 0.0) {
    throw Error("loss weights must be non-negative");
  }
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"variant", std::string(to_string(c.variant))},
          {"word_dim", c.word_dim},
          {"char_emb_dim", c.char_emb_dim},
          {"char_filters", c.char_filters},
          {"char_width", c.char_width},
          {"max_char_len", c.max_char_len},
          {"flags_dim", ModelConfig::flags_dim},
          {"hidden", c.hidden},
          {"dropout_rate", c.dropout_rate},
          {"slot_loss_weight", c.slot_loss_weight},
          {"intent_loss_weight", c.intent_loss_weight},
          {"init_seed", c.init_seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.word_dim = j.at("word_dim").get<int>();
  c.char_emb_dim = j.at("char_emb_dim").get<int>();
  c.char_filters = j.at("char_filters").get<int>();
  c.char_width = j.at("char_width").get<int>();
  c.max_char_len = j.at("max_char_len").get<int>();
  if (j.value("flags_dim", ModelConfig::flags_dim) != ModelConfig::flags_dim) {
    throw Error("unsupported flags_dim in model config");
  }
  c.hidden = j.at("hidden").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.slot_loss_weight = j.at("slot_loss_weight").get<double>();
  c.intent_loss_weight = j.at("intent_loss_weight").get<double>();
  c.init_seed = j.at("init_seed").get<std::uint64_t>();
  c.validate();
  return c;
}

nlohmann::json to_json(const Prediction& p) {
  nlohmann::json entities = nlohmann::json::array();
  for (const Entity& e : p.entities) {
    entities.push_back({{"type", e.type}, {"start", e.start}, {"end", e.end}, {"text", e.text}});
  }
  return {{"intent", p.intent}, {"entities", entities}, {"tags", p.tags}};
}

namespace {

// Parameter names, in checkpoint order.
constexpr const char* kCharEmbedding = "char_embedding";
constexpr const char* kConvKernel = "char_conv.kernel";
constexpr const char* kConvBias = "char_conv.bias";
constexpr const char* kLstmFwdWeight = "lstm_fwd.weight";
constexpr const char* kLstmFwdBias = "lstm_fwd.bias";
constexpr const char* kLstmBwdWeight = "lstm_bwd.weight";
constexpr const char* kLstmBwdBias = "lstm_bwd.bias";
constexpr const char* kMlp1Weight = "mlp1.weight";
constexpr const char* kMlp1Bias = "mlp1.bias";
constexpr const char* kMlp2Weight = "mlp2.weight";
constexpr const char* kMlp2Bias = "mlp2.bias";
constexpr const char* kSlotWeight = "slot_head.weight";
constexpr const char* kSlotBias = "slot_head.bias";
constexpr const char* kIntentWeight = "intent_head.weight";
constexpr const char* kIntentBias = "intent_head.bias";

// Mixes a base seed with a call-site index so each dropout site draws an
// independent mask.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t site) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (site + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

template <typename Scalar>
JointModel<Scalar>::JointModel(ModelConfig config, Vocabularies vocab)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  build_parameters();
}

template <typename Scalar>
JointModel<Scalar>::JointModel(ModelConfig config, Vocabularies vocab,
                               ParameterSet<Scalar> params)
    : JointModel(config, std::move(vocab)) {
  if (params.size() != params_.size()) {
    throw Error("parameter list has " + std::to_string(params.size()) + " entries, expected " +
                std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params[i].name != params_[i].name) {
      throw Error("parameter " + std::to_string(i) + " is '" + params[i].name +
                  "', expected '" + params_[i].name + "'");
    }
    if (!(params[i].value.shape() == params_[i].value.shape())) {
      throw Error("parameter '" + params[i].name + "' has shape " +
                  params[i].value.shape().str() + ", config implies " +
                  params_[i].value.shape().str());
    }
  }
  params_ = std::move(params);
  params_.zero_grad();
}

template <typename Scalar>
void JointModel<Scalar>::build_parameters() {
  if (vocab_.slots.size() == 0 || vocab_.intents.size() == 0 || vocab_.chars.size() < 2) {
    throw Error("vocabularies are incomplete");
  }
  std::mt19937_64 rng(config_.init_seed);
  auto glorot = [&](const Shape& shape, Index fan_in, Index fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor<Scalar> t(shape);
    for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(dist(rng));
    return t;
  };
  auto dense = [&](const char* weight, const char* bias, Index in, Index out) {
    params_.add(weight, glorot(Shape{in, out}, in, out));
    params_.add(bias, Tensor<Scalar>(Shape{out}));
  };

  const Index chars = static_cast<Index>(vocab_.chars.size());
  const Index e = config_.char_emb_dim, f = config_.char_filters, w = config_.char_width;
  const Index in = config_.input_dim(), h = config_.hidden;

  Tensor<Scalar> char_table = glorot(Shape{chars, e}, chars, e);
  char_table.mat().row(kPadIndex).setZero();
  params_.add(kCharEmbedding, std::move(char_table));
  params_.add(kConvKernel, glorot(Shape{w, e, f}, w * e, f));
  params_.add(kConvBias, Tensor<Scalar>(Shape{f}));

  if (config_.variant == Variant::recurrent) {
    for (const auto& [weight, bias] : {std::pair{kLstmFwdWeight, kLstmFwdBias},
                                       std::pair{kLstmBwdWeight, kLstmBwdBias}}) {
      params_.add(weight, glorot(Shape{in + h, 4 * h}, in + h, 4 * h));
      Tensor<Scalar> b(Shape{4 * h});
      b.data().segment(h, h).setOnes();  // forget gate
      params_.add(bias, std::move(b));
    }
  } else {
    dense(kMlp1Weight, kMlp1Bias, in, h);
    dense(kMlp2Weight, kMlp2Bias, h, h);
  }
  const Index head = config_.head_dim();
  dense(kSlotWeight, kSlotBias, head, static_cast<Index>(vocab_.slots.size()));
  dense(kIntentWeight, kIntentBias, head, static_cast<Index>(vocab_.intents.size()));
}

template <typename Scalar>
template <typename Leaf>
typename JointModel<Scalar>::Outputs JointModel<Scalar>::run(Tape<Scalar>& tape,
                                                             const Batch<Scalar>& batch,
                                                             bool train_mode,
                                                             std::uint64_t dropout_seed,
                                                             Leaf&& leaf) const {
  const Index b = batch.batch_size, steps = batch.max_len;
  const Index tokens = b * steps;
  if (batch.word_vectors.shape() != Shape{b, steps, config_.word_dim}) {
    throw ShapeError("forward: word vectors " + batch.word_vectors.shape().str() +
                     " do not match word_dim " + std::to_string(config_.word_dim));
  }
  if (static_cast<Index>(batch.mask.size()) != tokens ||
      static_cast<Index>(batch.char_lengths.size()) != tokens ||
      static_cast<Index>(batch.char_ids.size()) != tokens * batch.char_len) {
    throw ShapeError("forward: batch arrays disagree with [" + std::to_string(b) + "," +
                     std::to_string(steps) + "]");
  }
  for (Index i = 0; i < b; ++i) {
    for (Index t = 0; t < steps; ++t) {
      if (static_cast<bool>(batch.mask[i * steps + t]) != (t < batch.lengths[i])) {
        throw ShapeError("forward: mask disagrees with utterance lengths");
      }
    }
  }
  auto p = [&](const char* name) { return leaf(params_.find(name)); };
  const double rate = config_.dropout_rate;

  // Character CNN.
  const Var char_emb = embedding_gather(tape, p(kCharEmbedding), std::span(batch.char_ids),
                                        Shape{tokens, batch.char_len}, kPadIndex);
  const Var conv = conv1d_over_time(tape, char_emb, p(kConvKernel), p(kConvBias));
  const Var pooled = tanh(tape, max_pool_over_time(tape, conv, std::span(batch.char_lengths)));
  const Var char_feat = reshape(tape, pooled, Shape{b, steps, config_.char_filters});

  const Var parts[] = {tape.constant(batch.word_vectors), char_feat, tape.constant(batch.flags)};
  Var x = concat_last_axis<Scalar>(tape, parts);
  x = dropout(tape, x, rate, train_mode, mix_seed(dropout_seed, 0));

  Var features;        // [B, T, head_dim]
  Var intent_features;  // [B, head_dim]
  if (config_.variant == Variant::recurrent) {
    const BiLstmOutput bi =
        bilstm(tape, x, std::span(batch.mask), LstmParams{p(kLstmFwdWeight), p(kLstmFwdBias)},
               LstmParams{p(kLstmBwdWeight), p(kLstmBwdBias)});
    features = dropout(tape, bi.outputs, rate, train_mode, mix_seed(dropout_seed, 1));
    const Var finals[] = {bi.final_forward.h, bi.final_backward.h};
    intent_features = dropout(tape, concat_last_axis<Scalar>(tape, finals), rate, train_mode,
                              mix_seed(dropout_seed, 2));
  } else {
    Var hid = relu(tape, add_bias(tape, matmul(tape, x, p(kMlp1Weight)), p(kMlp1Bias)));
    hid = relu(tape, add_bias(tape, matmul(tape, hid, p(kMlp2Weight)), p(kMlp2Bias)));
    features = dropout(tape, hid, rate, train_mode, mix_seed(dropout_seed, 1));
    intent_features = masked_mean_over_time(tape, features, std::span(batch.mask));
  }
  Outputs out;
  out.slot_logits = add_bias(tape, matmul(tape, features, p(kSlotWeight)), p(kSlotBias));
  out.intent_logits =
      add_bias(tape, matmul(tape, intent_features, p(kIntentWeight)), p(kIntentBias));
  return out;
}

template <typename Scalar>
typename JointModel<Scalar>::Outputs JointModel<Scalar>::forward(Tape<Scalar>& tape,
                                                                 const Batch<Scalar>& batch,
                                                                 bool train_mode,
                                                                 std::uint64_t dropout_seed) {
  return run(tape, batch, train_mode, dropout_seed,
             [&](std::size_t i) { return tape.parameter(params_[i]); });
}

template <typename Scalar>
typename JointModel<Scalar>::Outputs JointModel<Scalar>::forward(
    Tape<Scalar>& tape, const Batch<Scalar>& batch) const {
  return run(tape, batch, false, 0,
             [&](std::size_t i) { return tape.constant(params_[i].value); });
}

template <typename Scalar>
std::size_t JointModel<Scalar>::count_parameters(Task task) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    const bool slot_head = p.name.starts_with("slot_head.");
    const bool intent_head = p.name.starts_with("intent_head.");
    if (task == Task::intent_only && slot_head) continue;
    if (task == Task::ner_only && intent_head) continue;
    n += static_cast<std::size_t>(p.value.size());
  }
  return n;
}

template <typename Scalar>
Var joint_loss(Tape<Scalar>& tape, Var slot_logits, Var intent_logits,
               std::span<const int> gold_slots, std::span<const int> gold_intents,
               std::span<const std::uint8_t> mask, LossWeights weights) {
  if (weights.slot < 0 || weights.intent < 0) throw Error("joint_loss: negative weight");
  if (weights.slot == 0 && weights.intent == 0) throw Error("joint_loss: both weights are zero");
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
    throw Error("joint_loss: mask has no valid tokens");
  }
  std::optional<Var> total;
  if (weights.slot > 0) {
    std::vector<std::uint8_t> slot_mask(mask.begin(), mask.end());
    for (std::size_t i = 0; i < slot_mask.size(); ++i) {
      if (gold_slots[i] < 0) slot_mask[i] = 0;
    }
    total = scale(tape, masked_cross_entropy(tape, slot_logits, gold_slots,
                                             std::span<const std::uint8_t>(slot_mask)),
                  static_cast<Scalar>(weights.slot));
  }
  if (weights.intent > 0) {
    std::vector<std::uint8_t> intent_mask(gold_intents.size());
    for (std::size_t i = 0; i < intent_mask.size(); ++i) intent_mask[i] = gold_intents[i] >= 0;
    const Var term = scale(tape, masked_cross_entropy(tape, intent_logits, gold_intents,
                                                      std::span<const std::uint8_t>(intent_mask)),
                           static_cast<Scalar>(weights.intent));
    total = total ? add(tape, *total, term) : term;
  }
  return *total;
}

template <typename Scalar>
Var batch_loss(Tape<Scalar>& tape, const typename JointModel<Scalar>::Outputs& out,
               const Batch<Scalar>& batch, LossWeights weights) {
  return joint_loss(tape, out.slot_logits, out.intent_logits, std::span(batch.slot_targets),
                    std::span(batch.intent_targets), std::span(batch.mask), weights);
}

namespace {

template <typename Scalar>
std::vector<Prediction> decode_batch(const JointModel<Scalar>& model, const Batch<Scalar>& batch,
                                     std::span<const Utterance* const> utterances) {
  Tape<Scalar> tape;
  const auto out = model.forward(tape, batch);
  const auto slots = tape.value(out.slot_logits).mat();
  const auto intents = tape.value(out.intent_logits).mat();
  const Vocabularies& vocab = model.vocabularies();
  std::vector<Prediction> result;
  for (Index i = 0; i < batch.batch_size; ++i) {
    const Utterance& u = *utterances[i];
    Prediction p;
    p.intent = vocab.intents.label(static_cast<int>(argmax(intents.row(i))));
    for (Index t = 0; t < batch.lengths[i]; ++t) {
      p.tags.push_back(
          vocab.slots.label(static_cast<int>(argmax(slots.row(i * batch.max_len + t)))));
    }
    for (const Span& s : decode_spans(p.tags)) {
      std::string text;
      for (int k = s.start; k <= s.end; ++k) {
        if (k > s.start) text += ' ';
        text += u.tokens[k];
      }
      p.entities.push_back({s.type, s.start, s.end, std::move(text)});
    }
    result.push_back(std::move(p));
  }
  return result;
}

}  // namespace

template <typename Scalar>
Prediction predict(const JointModel<Scalar>& model, const Utterance& utterance,
                   const WordVectorSource& vectors) {
  if (utterance.tokens.empty()) throw Error("predict: empty utterance");
  const Utterance* one[] = {&utterance};
  const auto batch = make_batch<Scalar>(one, model.vocabularies(), vectors,
                                        model.config().max_char_len);
  return std::move(decode_batch(model, batch, one).front());
}

template <typename Scalar>
std::vector<Prediction> predict_all(const JointModel<Scalar>& model, const Corpus& corpus,
                                    const WordVectorSource& vectors, int batch_size) {
  std::vector<const Utterance*> all;
  for (const Utterance& u : corpus.utterances) all.push_back(&u);
  std::vector<Prediction> out;
  for (std::size_t start = 0; start < all.size(); start += batch_size) {
    const auto group = std::span(all).subspan(
        start, std::min<std::size_t>(batch_size, all.size() - start));
    const auto batch = make_batch<Scalar>(group, model.vocabularies(), vectors,
                                          model.config().max_char_len);
    for (Prediction& p : decode_batch(model, batch, group)) out.push_back(std::move(p));
  }
  return out;
}

template class JointModel<float>;
template class JointModel<double>;

#define JOINTNLU_INSTANTIATE_MODEL(S)                                                         \
  template Var joint_loss(Tape<S>&, Var, Var, std::span<const int>, std::span<const int>,    \
                          std::span<const std::uint8_t>, LossWeights);                       \
  template Var batch_loss(Tape<S>&, const JointModel<S>::Outputs&, const Batch<S>&,          \
                          LossWeights);                                                      \
  template Prediction predict(const JointModel<S>&, const Utterance&, const WordVectorSource&); \
  template std::vector<Prediction> predict_all(const JointModel<S>&, const Corpus&,          \
                                               const WordVectorSource&, int);

JOINTNLU_INSTANTIATE_MODEL(float)
JOINTNLU_INSTANTIATE_MODEL(double)

#undef JOINTNLU_INSTANTIATE_MODEL

}  // namespace jointnlu
