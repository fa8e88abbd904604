#include "jointnlu/lstm.hpp"

#include <memory>
#include <vector>

namespace jointnlu {

template <typename Scalar>
Var lstm_gates(Tape<Scalar>& tape, Var x, Var h_prev, const LstmParams& params) {
  const Shape& xs = tape.shape(x);
  const Shape& hs = tape.shape(h_prev);
  const Shape& ws = tape.shape(params.weight);
  const Shape& bs = tape.shape(params.bias);
  const Index hidden = hs.last();
  if (xs.rank() != 2 || hs.rank() != 2 || xs[0] != hs[0] || ws.rank() != 2 ||
      ws[0] != xs[1] + hidden || ws[1] != 4 * hidden || bs.rank() != 1 ||
      bs[0] != 4 * hidden) {
    throw ShapeError("lstm_cell: x " + xs.str() + ", h " + hs.str() + ", weight " +
                     ws.str() + ", bias " + bs.str());
  }
  const Index in = xs[1];
  const auto w = tape.value(params.weight).mat();
  Tensor<Scalar> out(Shape{xs[0], 4 * hidden});
  auto g = out.mat();
  g.noalias() = tape.value(x).mat() * w.topRows(in);
  g.noalias() += tape.value(h_prev).mat() * w.bottomRows(hidden);
  g.rowwise() += tape.value(params.bias).data().transpose();
  auto sig = [](auto block) {
    block.array() = Scalar(1) / (Scalar(1) + (-block.array()).exp());
  };
  sig(g.middleCols(0, hidden));
  sig(g.middleCols(hidden, hidden));
  g.middleCols(2 * hidden, hidden).array() = g.middleCols(2 * hidden, hidden).array().tanh();
  sig(g.middleCols(3 * hidden, hidden));

  const Var weight = params.weight, bias = params.bias;
  const bool grad = tape.requires_grad(x) || tape.requires_grad(h_prev) ||
                    tape.requires_grad(weight) || tape.requires_grad(bias);
  return tape.record(
      std::move(out), grad,
      [x, h_prev, weight, bias, in, hidden](Tape<Scalar>& t, std::size_t self) {
        const auto y = t.value(Var{self}).mat();
        // Gradient w.r.t. the pre-activations.
        typename Tensor<Scalar>::Matrix dpre = t.grad(Var{self}).mat();
        for (int block = 0; block < 4; ++block) {
          auto d = dpre.middleCols(block * hidden, hidden).array();
          const auto a = y.middleCols(block * hidden, hidden).array();
          if (block == 2) {
            d *= Scalar(1) - a * a;
          } else {
            d *= a * (Scalar(1) - a);
          }
        }
        const auto w = t.value(weight).mat();
        if (t.requires_grad(x)) t.grad(x).mat().noalias() += dpre * w.topRows(in).transpose();
        if (t.requires_grad(h_prev)) {
          t.grad(h_prev).mat().noalias() += dpre * w.bottomRows(hidden).transpose();
        }
        if (t.requires_grad(weight)) {
          auto gw = t.grad(weight).mat();
          gw.topRows(in).noalias() += t.value(x).mat().transpose() * dpre;
          gw.bottomRows(hidden).noalias() += t.value(h_prev).mat().transpose() * dpre;
        }
        if (t.requires_grad(bias)) t.grad(bias).data() += dpre.colwise().sum().transpose();
      });
}

template <typename Scalar>
Var lstm_cell_state(Tape<Scalar>& tape, Var gates, Var c_prev) {
  const Shape& cs = tape.shape(c_prev);
  const Index hidden = cs.last();
  if (!(tape.shape(gates) == cs.with_last(4 * hidden))) {
    throw ShapeError("lstm_cell: gates " + tape.shape(gates).str() + ", c " + cs.str());
  }
  const auto g = tape.value(gates).mat();
  Tensor<Scalar> out(cs);
  out.mat().array() = g.middleCols(hidden, hidden).array() * tape.value(c_prev).mat().array() +
                      g.middleCols(0, hidden).array() * g.middleCols(2 * hidden, hidden).array();
  const bool grad = tape.requires_grad(gates) || tape.requires_grad(c_prev);
  return tape.record(std::move(out), grad,
                     [gates, c_prev, hidden](Tape<Scalar>& t, std::size_t self) {
                       const auto dc = t.grad(Var{self}).mat().array();
                       const auto g = t.value(gates).mat();
                       if (t.requires_grad(gates)) {
                         auto dg = t.grad(gates).mat();
                         dg.middleCols(0, hidden).array() +=
                             dc * g.middleCols(2 * hidden, hidden).array();
                         dg.middleCols(hidden, hidden).array() +=
                             dc * t.value(c_prev).mat().array();
                         dg.middleCols(2 * hidden, hidden).array() +=
                             dc * g.middleCols(0, hidden).array();
                       }
                       if (t.requires_grad(c_prev)) {
                         t.grad(c_prev).mat().array() += dc * g.middleCols(hidden, hidden).array();
                       }
                     });
}

template <typename Scalar>
Var lstm_hidden(Tape<Scalar>& tape, Var gates, Var c) {
  const Shape& cs = tape.shape(c);
  const Index hidden = cs.last();
  if (!(tape.shape(gates) == cs.with_last(4 * hidden))) {
    throw ShapeError("lstm_cell: gates " + tape.shape(gates).str() + ", c " + cs.str());
  }
  using Matrix = typename Tensor<Scalar>::Matrix;
  auto tanh_c = std::make_shared<Matrix>(tape.value(c).mat().array().tanh().matrix());
  Tensor<Scalar> out(cs);
  out.mat().array() =
      tape.value(gates).mat().middleCols(3 * hidden, hidden).array() * tanh_c->array();
  const bool grad = tape.requires_grad(gates) || tape.requires_grad(c);
  return tape.record(std::move(out), grad,
                     [gates, c, hidden, tanh_c](Tape<Scalar>& t, std::size_t self) {
                       const auto dh = t.grad(Var{self}).mat().array();
                       const auto o = t.value(gates).mat().middleCols(3 * hidden, hidden).array();
                       const auto tc = tanh_c->array();
                       if (t.requires_grad(gates)) {
                         t.grad(gates).mat().middleCols(3 * hidden, hidden).array() += dh * tc;
                       }
                       if (t.requires_grad(c)) {
                         t.grad(c).mat().array() += dh * o * (Scalar(1) - tc * tc);
                       }
                     });
}

template <typename Scalar>
LstmState lstm_cell(Tape<Scalar>& tape, Var x, const LstmState& prev,
                    const LstmParams& params) {
  const Var gates = lstm_gates(tape, x, prev.h, params);
  const Var c = lstm_cell_state(tape, gates, prev.c);
  const Var h = lstm_hidden(tape, gates, c);
  return {h, c};
}

namespace {

template <typename Scalar>
LstmState run_direction(Tape<Scalar>& tape, Var x, std::span<const std::uint8_t> mask,
                        const LstmParams& params, bool reverse, std::vector<Var>& outputs) {
  const Shape& xs = tape.shape(x);
  const Index batch = xs[0], steps = xs[1];
  const Index hidden = tape.shape(params.bias)[0] / 4;
  LstmState state{tape.constant(Tensor<Scalar>(Shape{batch, hidden})),
                  tape.constant(Tensor<Scalar>(Shape{batch, hidden}))};
  outputs.assign(static_cast<std::size_t>(steps), Var{});
  std::vector<std::uint8_t> step_mask(static_cast<std::size_t>(batch));
  for (Index k = 0; k < steps; ++k) {
    const Index t = reverse ? steps - 1 - k : k;
    bool all_valid = true;
    for (Index b = 0; b < batch; ++b) {
      step_mask[b] = mask[b * steps + t];
      all_valid = all_valid && step_mask[b];
    }
    const LstmState next = lstm_cell(tape, time_slice(tape, x, t), state, params);
    if (all_valid) {
      state = next;
      outputs[t] = next.h;
    } else {
      state = {select_rows(tape, next.h, state.h, step_mask),
               select_rows(tape, next.c, state.c, step_mask)};
      outputs[t] = mask_rows(tape, next.h, step_mask);
    }
  }
  return state;
}

}  // namespace

template <typename Scalar>
BiLstmOutput bilstm(Tape<Scalar>& tape, Var x, std::span<const std::uint8_t> mask,
                    const LstmParams& forward, const LstmParams& backward) {
  const Shape& xs = tape.shape(x);
  if (xs.rank() != 3 || static_cast<Index>(mask.size()) != xs[0] * xs[1]) {
    throw ShapeError("bilstm: input " + xs.str() + " with mask of " +
                     std::to_string(mask.size()));
  }
  std::vector<Var> fwd, bwd;
  BiLstmOutput out;
  out.final_forward = run_direction(tape, x, mask, forward, false, fwd);
  out.final_backward = run_direction(tape, x, mask, backward, true, bwd);
  const Var parts[] = {stack_time<Scalar>(tape, fwd), stack_time<Scalar>(tape, bwd)};
  out.outputs = concat_last_axis<Scalar>(tape, parts);
  return out;
}

#define JOINTNLU_INSTANTIATE_LSTM(S)                                                \
  template Var lstm_gates(Tape<S>&, Var, Var, const LstmParams&);                   \
  template Var lstm_cell_state(Tape<S>&, Var, Var);                                 \
  template Var lstm_hidden(Tape<S>&, Var, Var);                                     \
  template LstmState lstm_cell(Tape<S>&, Var, const LstmState&, const LstmParams&); \
  template BiLstmOutput bilstm(Tape<S>&, Var, std::span<const std::uint8_t>,        \
                               const LstmParams&, const LstmParams&);

JOINTNLU_INSTANTIATE_LSTM(float)
JOINTNLU_INSTANTIATE_LSTM(double)

#undef JOINTNLU_INSTANTIATE_LSTM

}  // namespace jointnlu
