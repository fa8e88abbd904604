#pragma once

#include <cstdint>
#include <span>

#include "jointnlu/tape.hpp"

// Differentiable primitives. Each one computes its forward value eagerly and,
// when any input requires a gradient, records how to push the output
// gradient back to its inputs. Tensors of rank > 2 are treated as
// leading() x last() matrices wherever a primitive works on the last axis.
namespace jointnlu {

/// x[..., K] * w[K, N] -> [..., N]
template <typename Scalar>
Var matmul(Tape<Scalar>& tape, Var x, Var w);

/// x[..., N] + b[N]
template <typename Scalar>
Var add_bias(Tape<Scalar>& tape, Var x, Var b);

template <typename Scalar>
Var add(Tape<Scalar>& tape, Var a, Var b);

/// Elementwise product of equally shaped tensors.
template <typename Scalar>
Var mul(Tape<Scalar>& tape, Var a, Var b);

template <typename Scalar>
Var scale(Tape<Scalar>& tape, Var x, Scalar factor);

/// Same data, new shape of equal size.
template <typename Scalar>
Var reshape(Tape<Scalar>& tape, Var x, const Shape& shape);

/// Sum of all elements, shape [1].
template <typename Scalar>
Var sum(Tape<Scalar>& tape, Var x);

/// Concatenation along the last axis; leading shapes must agree.
template <typename Scalar>
Var concat_last_axis(Tape<Scalar>& tape, std::span<const Var> parts);

template <typename Scalar>
Var tanh(Tape<Scalar>& tape, Var x);

template <typename Scalar>
Var sigmoid(Tape<Scalar>& tape, Var x);

template <typename Scalar>
Var relu(Tape<Scalar>& tape, Var x);

template <typename Scalar>
Var softmax_last_axis(Tape<Scalar>& tape, Var x);

/// Rows of table[V, E] selected by `ids`, shaped `leading` + [E]. Rows equal
/// to `padding_id` (if >= 0) produce zeros and receive no gradient.
template <typename Scalar>
Var embedding_gather(Tape<Scalar>& tape, Var table, std::span<const int> ids,
                     const Shape& leading, int padding_id = -1);

/// Same-padded (zero) temporal convolution. x[N, L, E], kernel[W, E, F],
/// bias[F] -> [N, L, F]. For even W the extra tap sits on the right.
template <typename Scalar>
Var conv1d_over_time(Tape<Scalar>& tape, Var x, Var kernel, Var bias);

/// Max over the first lengths[n] steps of x[N, L, F] -> [N, F].
/// Lengths are clamped to [1, L].
template <typename Scalar>
Var max_pool_over_time(Tape<Scalar>& tape, Var x, std::span<const int> lengths);

/// Inverted dropout: in train mode each element is zeroed with probability
/// `rate` and survivors are scaled by 1 / (1 - rate). Identity otherwise.
template <typename Scalar>
Var dropout(Tape<Scalar>& tape, Var x, double rate, bool train_mode,
            std::uint64_t seed);

/// Mean cross-entropy of softmax(logits[..., C]) against `targets` over rows
/// whose mask is set; shape [1]. Masked rows never influence the result.
/// Throws if no row is selected.
template <typename Scalar>
Var masked_cross_entropy(Tape<Scalar>& tape, Var logits,
                         std::span<const int> targets,
                         std::span<const std::uint8_t> mask);

// Sequence helpers over [B, T, D] tensors.

/// x[B, T, D] -> [B, D] at step t.
template <typename Scalar>
Var time_slice(Tape<Scalar>& tape, Var x, Index t);

/// T tensors of shape [B, D] -> [B, T, D].
template <typename Scalar>
Var stack_time(Tape<Scalar>& tape, std::span<const Var> steps);

/// Row b of the result is a[b] where mask[b] is set, else b[b].
template <typename Scalar>
Var select_rows(Tape<Scalar>& tape, Var a, Var b,
                std::span<const std::uint8_t> mask);

/// Zeroes rows whose mask is clear.
template <typename Scalar>
Var mask_rows(Tape<Scalar>& tape, Var x, std::span<const std::uint8_t> mask);

/// Mean over valid steps of x[B, T, D] -> [B, D]; mask is [B * T].
template <typename Scalar>
Var masked_mean_over_time(Tape<Scalar>& tape, Var x,
                          std::span<const std::uint8_t> mask);

}  // namespace jointnlu
