#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jointnlu/grad_check.hpp"
#include "jointnlu/model.hpp"

namespace jointnlu::testing {

/// A named finite-difference check over one layer or loss.
struct GradientCase {
  std::string name;
  std::function<GradCheckResult()> run;  // grad_check with eps 1e-5
};

/// One case per differentiable primitive plus the LSTM cell and biLSTM.
/// Each loss contracts the layer output with fixed random weights so that
/// every output coordinate matters.
std::vector<GradientCase> layer_gradient_cases(std::uint64_t seed = 1);

/// Joint loss of a tiny model of `variant` on a two-utterance batch.
GradientCase joint_loss_gradient_case(Variant variant, std::uint64_t seed = 1);

}  // namespace jointnlu::testing
