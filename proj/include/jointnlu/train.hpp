#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "jointnlu/adam.hpp"
#include "jointnlu/model.hpp"

namespace jointnlu {

struct TrainConfig {
  int batch_size = 32;
  int max_epochs = 50;
  int patience = 2;
  std::uint64_t shuffle_seed = 0;
  AdamConfig adam;
  /// Defaults to the model's configured weights when unset.
  std::optional<LossWeights> weights;
  double clip_norm = 5.0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  bool stopped_early = false;
  int best_epoch = -1;
  LossWeights weights;
};

/// Best-so-far tracking with strict improvement. Stops once the value has
/// failed to improve for more than `patience` consecutive epochs.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);

  /// Records one epoch; true when training should stop after it.
  bool update(double val_loss);

  int best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }
  bool improved_last() const { return improved_last_; }
  int epochs_seen() const { return epochs_; }

 private:
  int patience_;
  int epochs_ = 0;
  int best_epoch_ = -1;
  int since_best_ = 0;
  bool improved_last_ = false;
  double best_ = std::numeric_limits<double>::infinity();
};

/// Called after each epoch with the record just appended.
using EpochCallback = std::function<void(const EpochRecord&)>;

/// One pass of mini-batch updates; returns the mean batch loss.
template <typename Scalar>
double train_epoch(JointModel<Scalar>& model, std::span<const Batch<Scalar>> batches,
                   AdamState<Scalar>& optimizer, LossWeights weights, double clip_norm,
                   std::uint64_t dropout_seed);

/// Eval-mode loss averaged over batches weighted by their size.
template <typename Scalar>
double evaluate_loss(const JointModel<Scalar>& model, std::span<const Batch<Scalar>> batches,
                     LossWeights weights);

/// Trains with early stopping on `val` and leaves the model holding the
/// parameters of the best epoch.
template <typename Scalar>
TrainHistory fit(JointModel<Scalar>& model, const Corpus& train, const Corpus& val,
                 const WordVectorSource& vectors, const TrainConfig& config,
                 const EpochCallback& on_epoch = {});

/// fit() with the other head's loss weight forced to zero.
template <typename Scalar>
TrainHistory fit_single_task(JointModel<Scalar>& model, const Corpus& train, const Corpus& val,
                             const WordVectorSource& vectors, TrainConfig config, Task task,
                             const EpochCallback& on_epoch = {});

/// Mean wall-clock seconds per recorded epoch.
double epoch_timer(const TrainHistory& history);

nlohmann::json to_json(const EpochRecord& record, const LossWeights& weights);
void write_history_jsonl(const TrainHistory& history, std::ostream& out);

}  // namespace jointnlu
