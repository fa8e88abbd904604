#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "jointnlu/tape.hpp"

namespace jointnlu {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Index worst_coordinate = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates_checked = 0;
};

/// Builds the loss on `tape` from the current values in `params`. Must be
/// deterministic (dropout off or seeded).
using LossBuilder = std::function<Var(Tape<double>& tape, ParameterSet<double>& params)>;

/// Compares backward() against central differences on every coordinate, or
/// on a seeded random subsample of `max_coordinates` when there are more.
/// Relative error is |a - n| / max(1e-8, |a| + |n|).
GradCheckResult grad_check(ParameterSet<double>& params, const LossBuilder& build_loss,
                           double eps = 1e-5, std::size_t max_coordinates = 10000,
                           std::uint64_t seed = 0);

}  // namespace jointnlu
