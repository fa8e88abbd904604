#include "jointnlu/train.hpp"

#include <chrono>
#include <ostream>

namespace jointnlu {

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
  if (patience < 0) throw Error("patience must be non-negative");
}

bool EarlyStopping::update(double val_loss) {
  improved_last_ = val_loss < best_;
  if (improved_last_) {
    best_ = val_loss;
    best_epoch_ = epochs_;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  ++epochs_;
  return since_best_ > patience_;
}

template <typename Scalar>
double train_epoch(JointModel<Scalar>& model, std::span<const Batch<Scalar>> batches,
                   AdamState<Scalar>& optimizer, LossWeights weights, double clip_norm,
                   std::uint64_t dropout_seed) {
  double total = 0.0;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    model.parameters().zero_grad();
    Tape<Scalar> tape;
    const auto out = model.forward(tape, batches[i], true, dropout_seed + i);
    const Var loss = batch_loss(tape, out, batches[i], weights);
    tape.backward(loss);
    if (clip_norm > 0) clip_grad_norm(model.parameters(), clip_norm);
    optimizer.apply(model.parameters());
    total += static_cast<double>(tape.value(loss)[0]);
  }
  return batches.empty() ? 0.0 : total / static_cast<double>(batches.size());
}

template <typename Scalar>
double evaluate_loss(const JointModel<Scalar>& model, std::span<const Batch<Scalar>> batches,
                     LossWeights weights) {
  double total = 0.0;
  double count = 0.0;
  for (const auto& batch : batches) {
    Tape<Scalar> tape;
    const auto out = model.forward(tape, batch);
    const Var loss = batch_loss(tape, out, batch, weights);
    total += static_cast<double>(tape.value(loss)[0]) * static_cast<double>(batch.batch_size);
    count += static_cast<double>(batch.batch_size);
  }
  if (count == 0.0) throw Error("evaluate_loss: no batches");
  return total / count;
}

template <typename Scalar>
TrainHistory fit(JointModel<Scalar>& model, const Corpus& train, const Corpus& val,
                 const WordVectorSource& vectors, const TrainConfig& config,
                 const EpochCallback& on_epoch) {
  if (val.empty()) throw Error("fit: validation set is empty");
  if (train.empty()) throw Error("fit: training set is empty");
  if (config.batch_size < 1) throw Error("fit: batch_size must be at least 1");
  if (config.max_epochs < 1) throw Error("fit: max_epochs must be at least 1");

  TrainHistory history;
  history.weights = config.weights.value_or(model.config().loss_weights());
  const int max_char_len = model.config().max_char_len;
  const auto val_batches = make_batches<Scalar>(val, model.vocabularies(), vectors,
                                                config.batch_size, 0, 0, max_char_len, false);
  AdamState<Scalar> optimizer(model.parameters(), config.adam);
  EarlyStopping stopper(config.patience);
  ParameterSet<Scalar> best = model.parameters();

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto batches =
        make_batches<Scalar>(train, model.vocabularies(), vectors, config.batch_size,
                             config.shuffle_seed, static_cast<std::uint64_t>(epoch), max_char_len);
    const std::uint64_t dropout_seed =
        (config.shuffle_seed + 1) * 1000003ULL + static_cast<std::uint64_t>(epoch) * 7919ULL;
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = train_epoch<Scalar>(model, batches, optimizer, history.weights,
                                            config.clip_norm, dropout_seed);
    record.val_loss = evaluate_loss<Scalar>(model, val_batches, history.weights);
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.epochs.push_back(record);

    const bool stop = stopper.update(record.val_loss);
    if (stopper.improved_last()) best = model.parameters();
    if (on_epoch) on_epoch(record);
    if (stop) {
      history.stopped_early = true;
      break;
    }
  }
  history.best_epoch = stopper.best_epoch();
  if (history.best_epoch < 0) {
    // Every validation loss was NaN; keep the final parameters.
    history.best_epoch = static_cast<int>(history.epochs.size()) - 1;
  } else {
    model.parameters() = std::move(best);
  }
  model.parameters().zero_grad();
  return history;
}

template <typename Scalar>
TrainHistory fit_single_task(JointModel<Scalar>& model, const Corpus& train, const Corpus& val,
                             const WordVectorSource& vectors, TrainConfig config, Task task,
                             const EpochCallback& on_epoch) {
  config.weights =
      weights_for(task, config.weights.value_or(model.config().loss_weights()));
  return fit(model, train, val, vectors, config, on_epoch);
}

double epoch_timer(const TrainHistory& history) {
  if (history.epochs.empty()) throw Error("epoch_timer: no epochs recorded");
  double total = 0.0;
  for (const auto& e : history.epochs) total += e.seconds;
  return total / static_cast<double>(history.epochs.size());
}

nlohmann::json to_json(const EpochRecord& r, const LossWeights& weights) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"val_loss", r.val_loss},
          {"seconds", r.seconds},
          {"slot_loss_weight", weights.slot},
          {"intent_loss_weight", weights.intent}};
}

void write_history_jsonl(const TrainHistory& history, std::ostream& out) {
  for (const auto& r : history.epochs) out << to_json(r, history.weights).dump() << '\n';
}

#define JOINTNLU_INSTANTIATE_TRAIN(S)                                                          \
  template double train_epoch(JointModel<S>&, std::span<const Batch<S>>, AdamState<S>&,       \
                              LossWeights, double, std::uint64_t);                            \
  template double evaluate_loss(const JointModel<S>&, std::span<const Batch<S>>, LossWeights); \
  template TrainHistory fit(JointModel<S>&, const Corpus&, const Corpus&,                     \
                            const WordVectorSource&, const TrainConfig&, const EpochCallback&); \
  template TrainHistory fit_single_task(JointModel<S>&, const Corpus&, const Corpus&,         \
                                        const WordVectorSource&, TrainConfig, Task,           \
                                        const EpochCallback&);

JOINTNLU_INSTANTIATE_TRAIN(float)
JOINTNLU_INSTANTIATE_TRAIN(double)

#undef JOINTNLU_INSTANTIATE_TRAIN

}  // namespace jointnlu
