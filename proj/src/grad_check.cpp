#include "jointnlu/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace jointnlu {

GradCheckResult grad_check(ParameterSet<double>& params, const LossBuilder& build_loss,
                           double eps, std::size_t max_coordinates, std::uint64_t seed) {
  params.zero_grad();
  {
    Tape<double> tape;
    tape.backward(build_loss(tape, params));
  }

  std::vector<std::pair<std::size_t, Index>> coords;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Index i = 0; i < params[p].value.size(); ++i) coords.emplace_back(p, i);
  }
  if (coords.size() > max_coordinates) {
    std::mt19937_64 rng(seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coordinates);
  }

  auto loss_value = [&] {
    Tape<double> tape;
    return tape.value(build_loss(tape, params))[0];
  };

  GradCheckResult result;
  for (const auto& [p, i] : coords) {
    double& x = params[p].value[i];
    const double saved = x;
    x = saved + eps;
    const double plus = loss_value();
    x = saved - eps;
    const double minus = loss_value();
    x = saved;

    const double numeric = (plus - minus) / (2.0 * eps);
    const double analytic = params[p].grad[i];
    const double err =
        std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
    ++result.coordinates_checked;
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_parameter = params[p].name;
      result.worst_coordinate = i;
      result.analytic = analytic;
      result.numeric = numeric;
    }
  }
  return result;
}

}  // namespace jointnlu
