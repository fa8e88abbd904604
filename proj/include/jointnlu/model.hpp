#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "jointnlu/batch.hpp"
#include "jointnlu/corpus.hpp"
#include "jointnlu/embeddings.hpp"
#include "jointnlu/features.hpp"
#include "jointnlu/ops.hpp"

namespace jointnlu {

/// recurrent: biLSTM over the token sequence ("Model 1").
/// time_distributed: one feed-forward network applied at every step ("Model 2").
enum class Variant { recurrent, time_distributed };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

enum class Task { joint, intent_only, ner_only };

std::string_view to_string(Task t);
/// Accepts joint, intent / intent_only, ner / ner_only.
Task parse_task(std::string_view name);

struct LossWeights {
  double slot = 1.0;
  double intent = 1.0;
};

/// Loss weights that train only the requested heads.
LossWeights weights_for(Task task, LossWeights base = {});

struct ModelConfig {
  Variant variant = Variant::recurrent;
  int word_dim = 100;
  int char_emb_dim = 25;
  int char_filters = 30;
  int char_width = 3;
  int max_char_len = kDefaultMaxCharLen;
  static constexpr int flags_dim = WordFlags::kCount;
  int hidden = 100;  // per direction for the recurrent variant
  double dropout_rate = 0.5;
  double slot_loss_weight = 1.0;
  double intent_loss_weight = 1.0;
  std::uint64_t init_seed = 0;

  /// Width of the per-token input: word vector, char-CNN features, flags.
  int input_dim() const { return word_dim + char_filters + flags_dim; }
  /// Width of the features each head reads.
  int head_dim() const { return variant == Variant::recurrent ? 2 * hidden : hidden; }
  LossWeights loss_weights() const { return {slot_loss_weight, intent_loss_weight}; }

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Entity {
  std::string type;
  int start = 0;
  int end = 0;  // inclusive
  std::string text;

  bool operator==(const Entity&) const = default;
};

struct Prediction {
  std::string intent;
  std::vector<Entity> entities;
  std::vector<std::string> tags;
};

nlohmann::json to_json(const Prediction& p);

/// Joint intent classifier and IOB slot tagger.
///
/// Per token the input is concat(word vector, char-CNN feature, word flags).
/// The char-CNN embeds code points (pad row fixed at zero), applies a
/// same-padded temporal convolution, max-pools over the token's characters
/// and squashes with tanh. The recurrent variant feeds the sequence through a
/// biLSTM; the slot head reads each step and the intent head reads
/// concat(final forward state, final backward state). The time-distributed
/// variant applies dense-relu-dense-relu independently per step; its intent
/// head reads the masked mean of those features. Dropout hits the token
/// inputs and the features entering both heads.
///
/// Parameters are Glorot-uniform from init_seed; biases start at zero except
/// the LSTM forget gate, which starts at 1.
template <typename Scalar>
class JointModel {
 public:
  JointModel(ModelConfig config, Vocabularies vocab);
  /// Adopts existing parameter values; names and shapes must match what
  /// `config` and `vocab` would build.
  JointModel(ModelConfig config, Vocabularies vocab, ParameterSet<Scalar> params);

  const ModelConfig& config() const { return config_; }
  const Vocabularies& vocabularies() const { return vocab_; }
  ParameterSet<Scalar>& parameters() { return params_; }
  const ParameterSet<Scalar>& parameters() const { return params_; }

  std::size_t n_slots() const { return vocab_.slots.size(); }
  std::size_t n_intents() const { return vocab_.intents.size(); }

  struct Outputs {
    Var slot_logits;    // [B, T, n_slots]
    Var intent_logits;  // [B, n_intents]
  };

  /// Records a forward pass whose backward accumulates into parameters().grad.
  Outputs forward(Tape<Scalar>& tape, const Batch<Scalar>& batch, bool train_mode,
                  std::uint64_t dropout_seed = 0);
  /// Eval-mode forward; parameters enter the tape as constants.
  Outputs forward(Tape<Scalar>& tape, const Batch<Scalar>& batch) const;

  /// Trainable scalars. Task-specific counts leave out the unused head.
  std::size_t count_parameters(Task task = Task::joint) const;

  template <typename Other>
  JointModel<Other> cast() const {
    ParameterSet<Other> params;
    for (const auto& p : params_) params.add(p.name, p.value.template cast<Other>());
    return JointModel<Other>(config_, vocab_, std::move(params));
  }

 private:
  template <typename Leaf>
  Outputs run(Tape<Scalar>& tape, const Batch<Scalar>& batch, bool train_mode,
              std::uint64_t dropout_seed, Leaf&& leaf) const;
  void build_parameters();

  ModelConfig config_;
  Vocabularies vocab_;
  ParameterSet<Scalar> params_;
};

/// weights.slot * mean token cross-entropy + weights.intent * mean utterance
/// cross-entropy. A term with zero weight is not evaluated at all. Rows with
/// target -1 are excluded.
template <typename Scalar>
Var joint_loss(Tape<Scalar>& tape, Var slot_logits, Var intent_logits,
               std::span<const int> gold_slots, std::span<const int> gold_intents,
               std::span<const std::uint8_t> mask, LossWeights weights);

/// Loss of `model` on `batch` via joint_loss with the model's configured
/// weights, or `weights` when given.
template <typename Scalar>
Var batch_loss(Tape<Scalar>& tape, const typename JointModel<Scalar>::Outputs& out,
               const Batch<Scalar>& batch, LossWeights weights);

/// Index of the largest entry; ties go to the lowest index.
template <typename Derived>
Index argmax(const Eigen::DenseBase<Derived>& row) {
  Index best = 0;
  for (Index i = 1; i < row.size(); ++i) {
    if (row(i) > row(best)) best = i;
  }
  return best;
}

/// Greedy per-token argmax decoded into spans, plus the argmax intent.
template <typename Scalar>
Prediction predict(const JointModel<Scalar>& model, const Utterance& utterance,
                   const WordVectorSource& vectors);

/// Batched predict over a corpus, in corpus order.
template <typename Scalar>
std::vector<Prediction> predict_all(const JointModel<Scalar>& model, const Corpus& corpus,
                                    const WordVectorSource& vectors, int batch_size = 64);

/// Manifest (UTF-8 JSON) with format_version, config, vocabularies and the
/// ordered {name, shape} list; a NUL byte; then every parameter as f32 LE in
/// manifest order.
void save_checkpoint(const JointModel<float>& model, std::ostream& out);
void save_checkpoint(const JointModel<float>& model, const std::filesystem::path& path);

/// Rejects truncated or malformed files, shape disagreements, and (when
/// given) a variant other than `expected`.
JointModel<float> load_checkpoint(std::istream& in, std::optional<Variant> expected = {});
JointModel<float> load_checkpoint(const std::filesystem::path& path,
                                  std::optional<Variant> expected = {});

}  // namespace jointnlu
