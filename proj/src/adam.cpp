#include "jointnlu/adam.hpp"

#include <cmath>

namespace jointnlu {

template <typename Scalar>
AdamState<Scalar>::AdamState(const ParameterSet<Scalar>& params, AdamConfig config)
    : config_(config) {
  for (const auto& p : params) {
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

template <typename Scalar>
void AdamState<Scalar>::apply(ParameterSet<Scalar>& params) {
  if (params.size() != m_.size()) {
    throw ShapeError("adam_step: state tracks " + std::to_string(m_.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const Scalar step_size = static_cast<Scalar>(config_.learning_rate / correction1);
  const Scalar inv_sqrt_c2 = static_cast<Scalar>(1.0 / std::sqrt(correction2));
  const Scalar eps = static_cast<Scalar>(config_.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!(p.grad.shape() == m_[i].shape()) || !(p.value.shape() == m_[i].shape())) {
      throw ShapeError("adam_step: parameter '" + p.name + "' has shape " +
                       p.value.shape().str() + ", state " + m_[i].shape().str());
    }
    auto g = p.grad.data().array();
    auto m = m_[i].data().array();
    auto v = v_[i].data().array();
    m = Scalar(b1) * m + Scalar(1 - b1) * g;
    v = Scalar(b2) * v + Scalar(1 - b2) * g * g;
    p.value.data().array() -= step_size * m / (v.sqrt() * inv_sqrt_c2 + eps);
  }
}

template <typename Scalar>
double clip_grad_norm(ParameterSet<Scalar>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) sq += static_cast<double>(p.grad.data().squaredNorm());
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const Scalar factor = static_cast<Scalar>(max_norm / norm);
    for (auto& p : params) p.grad.data() *= factor;
  }
  return norm;
}

template class AdamState<float>;
template class AdamState<double>;
template double clip_grad_norm(ParameterSet<float>&, double);
template double clip_grad_norm(ParameterSet<double>&, double);

}  // namespace jointnlu
