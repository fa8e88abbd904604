#pragma once

#include <cstdint>
#include <vector>

#include "jointnlu/tape.hpp"

namespace jointnlu {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam moments for one ParameterSet, with bias correction.
template <typename Scalar>
class AdamState {
 public:
  AdamState(const ParameterSet<Scalar>& params, AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  std::int64_t step() const { return step_; }
  const Tensor<Scalar>& first_moment(std::size_t i) const { return m_.at(i); }
  const Tensor<Scalar>& second_moment(std::size_t i) const { return v_.at(i); }

  /// One update from the gradients currently stored in `params`.
  void apply(ParameterSet<Scalar>& params);

 private:
  AdamConfig config_;
  std::vector<Tensor<Scalar>> m_;
  std::vector<Tensor<Scalar>> v_;
  std::int64_t step_ = 0;
};

template <typename Scalar>
void adam_step(ParameterSet<Scalar>& params, AdamState<Scalar>& state) {
  state.apply(params);
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename Scalar>
double clip_grad_norm(ParameterSet<Scalar>& params, double max_norm);

}  // namespace jointnlu
