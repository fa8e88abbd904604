#pragma once

#include <cstdint>
#include <span>

#include "jointnlu/ops.hpp"

namespace jointnlu {

/// Packed LSTM weights on a tape: weight [input + hidden, 4 * hidden] and
/// bias [4 * hidden]. Gate blocks are ordered (i, f, g, o) along the columns.
struct LstmParams {
  Var weight;
  Var bias;
};

struct LstmState {
  Var h;  // [B, hidden]
  Var c;  // [B, hidden]
};

/// Activated gates [B, 4h] = act([x, h_prev] * W + b) with sigmoid on
/// i, f, o and tanh on g.
template <typename Scalar>
Var lstm_gates(Tape<Scalar>& tape, Var x, Var h_prev, const LstmParams& params);

/// c_t = f * c_prev + i * g
template <typename Scalar>
Var lstm_cell_state(Tape<Scalar>& tape, Var gates, Var c_prev);

/// h_t = o * tanh(c_t)
template <typename Scalar>
Var lstm_hidden(Tape<Scalar>& tape, Var gates, Var c);

template <typename Scalar>
LstmState lstm_cell(Tape<Scalar>& tape, Var x, const LstmState& prev,
                    const LstmParams& params);

struct BiLstmOutput {
  Var outputs;  // [B, T, 2h]: forward state at t, then backward state at t
  LstmState final_forward;   // state at each row's last valid step
  LstmState final_backward;  // state at step 0
};

/// Runs both directions over x[B, T, D]. `mask` is [B * T] and must mark a
/// prefix of each row. Padded steps emit zeros and leave the state untouched,
/// so the backward direction starts at each row's last valid step.
template <typename Scalar>
BiLstmOutput bilstm(Tape<Scalar>& tape, Var x, std::span<const std::uint8_t> mask,
                    const LstmParams& forward, const LstmParams& backward);

}  // namespace jointnlu
