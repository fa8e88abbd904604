#include "jointnlu/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <vector>

namespace jointnlu {

namespace {

template <typename Scalar>
bool needs_grad(const Tape<Scalar>& tape, std::initializer_list<Var> inputs) {
  return std::any_of(inputs.begin(), inputs.end(),
                     [&](Var v) { return tape.requires_grad(v); });
}

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

Shape append_axis(const Shape& s, Index n) {
  switch (s.rank()) {
    case 1: return Shape{s[0], n};
    case 2: return Shape{s[0], s[1], n};
    default: throw ShapeError("cannot append an axis to shape " + s.str());
  }
}

template <typename Scalar>
void check_mask(const char* op, std::size_t mask_size, Index rows) {
  if (static_cast<Index>(mask_size) != rows) {
    shape_error(op, "mask has " + std::to_string(mask_size) + " entries for " +
                        std::to_string(rows) + " rows");
  }
}

}  // namespace

template <typename Scalar>
Var matmul(Tape<Scalar>& tape, Var x, Var w) {
  const auto& xs = tape.shape(x);
  const auto& ws = tape.shape(w);
  if (ws.rank() != 2 || xs.last() != ws[0]) {
    shape_error("matmul", "cannot multiply " + xs.str() + " by " + ws.str());
  }
  Tensor<Scalar> out(xs.with_last(ws[1]));
  out.mat().noalias() = tape.value(x).mat() * tape.value(w).mat();
  return tape.record(std::move(out), needs_grad(tape, {x, w}),
                     [x, w](Tape<Scalar>& t, std::size_t self) {
                       const auto g = t.grad(Var{self}).mat();
                       if (t.requires_grad(x)) {
                         t.grad(x).mat().noalias() +=
                             g * t.value(w).mat().transpose();
                       }
                       if (t.requires_grad(w)) {
                         t.grad(w).mat().noalias() +=
                             t.value(x).mat().transpose() * g;
                       }
                     });
}

template <typename Scalar>
Var add_bias(Tape<Scalar>& tape, Var x, Var b) {
  const auto& xs = tape.shape(x);
  const auto& bs = tape.shape(b);
  if (bs.rank() != 1 || bs[0] != xs.last()) {
    shape_error("add_bias", "bias " + bs.str() + " does not match " + xs.str());
  }
  Tensor<Scalar> out = tape.value(x);
  out.mat().rowwise() += tape.value(b).data().transpose();
  return tape.record(std::move(out), needs_grad(tape, {x, b}),
                     [x, b](Tape<Scalar>& t, std::size_t self) {
                       const auto g = t.grad(Var{self}).mat();
                       if (t.requires_grad(x)) t.grad(x).mat() += g;
                       if (t.requires_grad(b)) {
                         t.grad(b).data() += g.colwise().sum().transpose();
                       }
                     });
}

template <typename Scalar>
Var add(Tape<Scalar>& tape, Var a, Var b) {
  if (!(tape.shape(a) == tape.shape(b))) {
    shape_error("add", tape.shape(a).str() + " vs " + tape.shape(b).str());
  }
  Tensor<Scalar> out(tape.shape(a), tape.value(a).data() + tape.value(b).data());
  return tape.record(std::move(out), needs_grad(tape, {a, b}),
                     [a, b](Tape<Scalar>& t, std::size_t self) {
                       const auto& g = t.grad(Var{self}).data();
                       if (t.requires_grad(a)) t.grad(a).data() += g;
                       if (t.requires_grad(b)) t.grad(b).data() += g;
                     });
}

template <typename Scalar>
Var mul(Tape<Scalar>& tape, Var a, Var b) {
  if (!(tape.shape(a) == tape.shape(b))) {
    shape_error("mul", tape.shape(a).str() + " vs " + tape.shape(b).str());
  }
  Tensor<Scalar> out(tape.shape(a), tape.value(a).data().cwiseProduct(
                                        tape.value(b).data()));
  return tape.record(std::move(out), needs_grad(tape, {a, b}),
                     [a, b](Tape<Scalar>& t, std::size_t self) {
                       const auto& g = t.grad(Var{self}).data();
                       if (t.requires_grad(a)) {
                         t.grad(a).data() += g.cwiseProduct(t.value(b).data());
                       }
                       if (t.requires_grad(b)) {
                         t.grad(b).data() += g.cwiseProduct(t.value(a).data());
                       }
                     });
}

template <typename Scalar>
Var scale(Tape<Scalar>& tape, Var x, Scalar factor) {
  Tensor<Scalar> out(tape.shape(x), tape.value(x).data() * factor);
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, factor](Tape<Scalar>& t, std::size_t self) {
                       t.grad(x).data() += t.grad(Var{self}).data() * factor;
                     });
}

template <typename Scalar>
Var reshape(Tape<Scalar>& tape, Var x, const Shape& shape) {
  if (tape.shape(x).size() != shape.size()) {
    shape_error("reshape", "cannot view " + tape.shape(x).str() + " as " + shape.str());
  }
  return tape.record(tape.value(x).reshaped(shape), tape.requires_grad(x),
                     [x](Tape<Scalar>& t, std::size_t self) {
                       t.grad(x).data() += t.grad(Var{self}).data();
                     });
}

template <typename Scalar>
Var sum(Tape<Scalar>& tape, Var x) {
  Tensor<Scalar> out(Shape{1});
  out[0] = tape.value(x).data().sum();
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x](Tape<Scalar>& t, std::size_t self) {
                       t.grad(x).data().array() += t.grad(Var{self})[0];
                     });
}

template <typename Scalar>
Var concat_last_axis(Tape<Scalar>& tape, std::span<const Var> parts) {
  if (parts.empty()) shape_error("concat_last_axis", "no inputs");
  const Shape& first = tape.shape(parts[0]);
  Index width = 0;
  bool grad = false;
  for (Var p : parts) {
    const Shape& s = tape.shape(p);
    if (!(s.with_last(first.last()) == first)) {
      shape_error("concat_last_axis",
                  "leading shapes differ: " + first.str() + " vs " + s.str());
    }
    width += s.last();
    grad = grad || tape.requires_grad(p);
  }
  Tensor<Scalar> out(first.with_last(width));
  Index offset = 0;
  for (Var p : parts) {
    const Index w = tape.shape(p).last();
    out.mat().middleCols(offset, w) = tape.value(p).mat();
    offset += w;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape.record(std::move(out), grad,
                     [inputs](Tape<Scalar>& t, std::size_t self) {
                       const auto g = t.grad(Var{self}).mat();
                       Index off = 0;
                       for (Var p : inputs) {
                         const Index w = t.shape(p).last();
                         if (t.requires_grad(p)) {
                           t.grad(p).mat() += g.middleCols(off, w);
                         }
                         off += w;
                       }
                     });
}

template <typename Scalar>
Var tanh(Tape<Scalar>& tape, Var x) {
  Tensor<Scalar> out(tape.shape(x), tape.value(x).data().array().tanh().matrix());
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x](Tape<Scalar>& t, std::size_t self) {
                       const auto y = t.value(Var{self}).data().array();
                       t.grad(x).data().array() +=
                           t.grad(Var{self}).data().array() * (Scalar(1) - y * y);
                     });
}

template <typename Scalar>
Var sigmoid(Tape<Scalar>& tape, Var x) {
  Tensor<Scalar> out(
      tape.shape(x),
      (Scalar(1) / (Scalar(1) + (-tape.value(x).data().array()).exp())).matrix());
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x](Tape<Scalar>& t, std::size_t self) {
                       const auto y = t.value(Var{self}).data().array();
                       t.grad(x).data().array() +=
                           t.grad(Var{self}).data().array() * y * (Scalar(1) - y);
                     });
}

template <typename Scalar>
Var relu(Tape<Scalar>& tape, Var x) {
  Tensor<Scalar> out(tape.shape(x), tape.value(x).data().cwiseMax(Scalar(0)));
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x](Tape<Scalar>& t, std::size_t self) {
                       const auto in = t.value(x).data().array();
                       t.grad(x).data().array() +=
                           (in > Scalar(0))
                               .select(t.grad(Var{self}).data().array(), Scalar(0));
                     });
}

template <typename Scalar>
Var softmax_last_axis(Tape<Scalar>& tape, Var x) {
  Tensor<Scalar> out = tape.value(x);
  auto m = out.mat();
  for (Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x](Tape<Scalar>& t, std::size_t self) {
                       const auto y = t.value(Var{self}).mat();
                       const auto g = t.grad(Var{self}).mat();
                       auto gx = t.grad(x).mat();
                       for (Index r = 0; r < y.rows(); ++r) {
                         const Scalar dot = g.row(r).dot(y.row(r));
                         gx.row(r).array() +=
                             y.row(r).array() * (g.row(r).array() - dot);
                       }
                     });
}

template <typename Scalar>
Var embedding_gather(Tape<Scalar>& tape, Var table, std::span<const int> ids,
                     const Shape& leading, int padding_id) {
  const Shape& ts = tape.shape(table);
  if (ts.rank() != 2) shape_error("embedding_gather", "table must be rank 2, got " + ts.str());
  if (static_cast<Index>(ids.size()) != leading.size()) {
    shape_error("embedding_gather", std::to_string(ids.size()) +
                                        " ids for leading shape " + leading.str());
  }
  const Index vocab = ts[0];
  Tensor<Scalar> out(append_axis(leading, ts[1]));
  const auto tm = tape.value(table).mat();
  auto om = out.mat();
  for (Index i = 0; i < om.rows(); ++i) {
    const int id = ids[i];
    if (id < 0 || id >= vocab) {
      shape_error("embedding_gather", "id " + std::to_string(id) +
                                          " outside table of " + std::to_string(vocab) + " rows");
    }
    if (id != padding_id) om.row(i) = tm.row(id);
  }
  std::vector<int> kept(ids.begin(), ids.end());
  return tape.record(std::move(out), tape.requires_grad(table),
                     [table, kept = std::move(kept), padding_id](Tape<Scalar>& t,
                                                                 std::size_t self) {
                       const auto g = t.grad(Var{self}).mat();
                       auto gt = t.grad(table).mat();
                       for (Index i = 0; i < g.rows(); ++i) {
                         if (kept[i] != padding_id) gt.row(kept[i]) += g.row(i);
                       }
                     });
}

template <typename Scalar>
Var conv1d_over_time(Tape<Scalar>& tape, Var x, Var kernel, Var bias) {
  const Shape& xs = tape.shape(x);
  const Shape& ks = tape.shape(kernel);
  const Shape& bs = tape.shape(bias);
  if (xs.rank() != 3 || ks.rank() != 3 || ks[1] != xs[2] || bs.rank() != 1 ||
      bs[0] != ks[2]) {
    shape_error("conv1d_over_time", "input " + xs.str() + ", kernel " + ks.str() +
                                        ", bias " + bs.str());
  }
  const Index n = xs[0], len = xs[1], emb = xs[2];
  const Index width = ks[0], filters = ks[2];
  const Index left = (width - 1) / 2;

  // Unfold windows into rows: cols[(n, l), (w, e)] = x[n, l + w - left, e].
  using Matrix = typename Tensor<Scalar>::Matrix;
  auto cols = std::make_shared<Matrix>(Matrix::Zero(n * len, width * emb));
  const auto xm = tape.value(x).mat();  // [n * len, emb]
  for (Index s = 0; s < n; ++s) {
    for (Index l = 0; l < len; ++l) {
      for (Index w = 0; w < width; ++w) {
        const Index src = l + w - left;
        if (src < 0 || src >= len) continue;
        cols->row(s * len + l).segment(w * emb, emb) = xm.row(s * len + src);
      }
    }
  }
  const auto km = tape.value(kernel).mat();  // [width * emb, filters]
  Tensor<Scalar> out(Shape{n, len, filters});
  out.mat().noalias() = *cols * km;
  out.mat().rowwise() += tape.value(bias).data().transpose();

  return tape.record(
      std::move(out), needs_grad(tape, {x, kernel, bias}),
      [x, kernel, bias, cols, n, len, emb, width, left](Tape<Scalar>& t,
                                                        std::size_t self) {
        const auto g = t.grad(Var{self}).mat();
        if (t.requires_grad(kernel)) {
          t.grad(kernel).mat().noalias() += cols->transpose() * g;
        }
        if (t.requires_grad(bias)) {
          t.grad(bias).data() += g.colwise().sum().transpose();
        }
        if (t.requires_grad(x)) {
          const Matrix dcols = g * t.value(kernel).mat().transpose();
          auto gx = t.grad(x).mat();
          for (Index s = 0; s < n; ++s) {
            for (Index l = 0; l < len; ++l) {
              for (Index w = 0; w < width; ++w) {
                const Index src = l + w - left;
                if (src < 0 || src >= len) continue;
                gx.row(s * len + src) += dcols.row(s * len + l).segment(w * emb, emb);
              }
            }
          }
        }
      });
}

template <typename Scalar>
Var max_pool_over_time(Tape<Scalar>& tape, Var x, std::span<const int> lengths) {
  const Shape& xs = tape.shape(x);
  if (xs.rank() != 3 || static_cast<Index>(lengths.size()) != xs[0]) {
    shape_error("max_pool_over_time", "input " + xs.str() + " with " +
                                          std::to_string(lengths.size()) + " lengths");
  }
  const Index n = xs[0], len = xs[1], f = xs[2];
  const auto xm = tape.value(x).mat();
  Tensor<Scalar> out(Shape{n, f});
  auto om = out.mat();
  std::vector<Index> argmax(static_cast<std::size_t>(n * f));
  for (Index s = 0; s < n; ++s) {
    const Index valid = std::clamp<Index>(lengths[s], 1, len);
    for (Index c = 0; c < f; ++c) {
      Index best = s * len;
      for (Index l = 1; l < valid; ++l) {
        if (xm(s * len + l, c) > xm(best, c)) best = s * len + l;
      }
      om(s, c) = xm(best, c);
      argmax[s * f + c] = best;
    }
  }
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, argmax = std::move(argmax), f](Tape<Scalar>& t,
                                                        std::size_t self) {
                       const auto g = t.grad(Var{self}).mat();
                       auto gx = t.grad(x).mat();
                       for (Index s = 0; s < g.rows(); ++s) {
                         for (Index c = 0; c < f; ++c) {
                           gx(argmax[s * f + c], c) += g(s, c);
                         }
                       }
                     });
}

template <typename Scalar>
Var dropout(Tape<Scalar>& tape, Var x, double rate, bool train_mode,
            std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!train_mode || rate == 0.0) return x;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Scalar keep_scale = Scalar(1.0 / (1.0 - rate));
  typename Tensor<Scalar>::Vector mask(tape.value(x).size());
  for (Index i = 0; i < mask.size(); ++i) {
    mask[i] = uniform(rng) < rate ? Scalar(0) : keep_scale;
  }
  Tensor<Scalar> out(tape.shape(x), tape.value(x).data().cwiseProduct(mask));
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, mask = std::move(mask)](Tape<Scalar>& t, std::size_t self) {
                       t.grad(x).data() += t.grad(Var{self}).data().cwiseProduct(mask);
                     });
}

template <typename Scalar>
Var masked_cross_entropy(Tape<Scalar>& tape, Var logits,
                         std::span<const int> targets,
                         std::span<const std::uint8_t> mask) {
  const Shape& ls = tape.shape(logits);
  const auto lm = tape.value(logits).mat();
  const Index rows = lm.rows(), classes = lm.cols();
  if (static_cast<Index>(targets.size()) != rows) {
    shape_error("masked_cross_entropy", std::to_string(targets.size()) +
                                            " targets for logits " + ls.str());
  }
  check_mask<Scalar>("masked_cross_entropy", mask.size(), rows);

  std::vector<Index> valid;
  for (Index r = 0; r < rows; ++r) {
    if (!mask[r]) continue;
    if (targets[r] < 0 || targets[r] >= classes) {
      shape_error("masked_cross_entropy",
                  "target " + std::to_string(targets[r]) + " outside " +
                      std::to_string(classes) + " classes");
    }
    valid.push_back(r);
  }
  if (valid.empty()) throw Error("masked_cross_entropy: mask selects no rows");

  using Matrix = typename Tensor<Scalar>::Matrix;
  auto probs = std::make_shared<Matrix>(static_cast<Index>(valid.size()), classes);
  Scalar total = 0;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    const auto row = lm.row(valid[i]);
    const Scalar mx = row.maxCoeff();
    auto p = probs->row(static_cast<Index>(i));
    p.array() = (row.array() - mx).exp();
    const Scalar z = p.sum();
    p /= z;
    total += (mx + std::log(z)) - row(targets[valid[i]]);
  }
  const Scalar count = static_cast<Scalar>(valid.size());
  Tensor<Scalar> out(Shape{1});
  out[0] = total / count;

  std::vector<int> kept_targets(targets.begin(), targets.end());
  return tape.record(
      std::move(out), tape.requires_grad(logits),
      [logits, probs, valid = std::move(valid),
       kept_targets = std::move(kept_targets), count](Tape<Scalar>& t,
                                                      std::size_t self) {
        const Scalar g = t.grad(Var{self})[0] / count;
        auto gl = t.grad(logits).mat();
        for (std::size_t i = 0; i < valid.size(); ++i) {
          const Index r = valid[i];
          gl.row(r) += g * probs->row(static_cast<Index>(i));
          gl(r, kept_targets[r]) -= g;
        }
      });
}

template <typename Scalar>
Var time_slice(Tape<Scalar>& tape, Var x, Index t) {
  const Shape& xs = tape.shape(x);
  if (xs.rank() != 3 || t < 0 || t >= xs[1]) {
    shape_error("time_slice", "step " + std::to_string(t) + " of " + xs.str());
  }
  const Index b = xs[0], steps = xs[1], d = xs[2];
  const auto xm = tape.value(x).mat();
  Tensor<Scalar> out(Shape{b, d});
  for (Index i = 0; i < b; ++i) out.mat().row(i) = xm.row(i * steps + t);
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, t, steps](Tape<Scalar>& tp, std::size_t self) {
                       const auto g = tp.grad(Var{self}).mat();
                       auto gx = tp.grad(x).mat();
                       for (Index i = 0; i < g.rows(); ++i) gx.row(i * steps + t) += g.row(i);
                     });
}

template <typename Scalar>
Var stack_time(Tape<Scalar>& tape, std::span<const Var> steps) {
  if (steps.empty()) shape_error("stack_time", "no steps");
  const Shape& s0 = tape.shape(steps[0]);
  if (s0.rank() != 2) shape_error("stack_time", "steps must be rank 2, got " + s0.str());
  const Index b = s0[0], d = s0[1], count = static_cast<Index>(steps.size());
  bool grad = false;
  Tensor<Scalar> out(Shape{b, count, d});
  auto om = out.mat();
  for (Index t = 0; t < count; ++t) {
    if (!(tape.shape(steps[t]) == s0)) {
      shape_error("stack_time", s0.str() + " vs " + tape.shape(steps[t]).str());
    }
    grad = grad || tape.requires_grad(steps[t]);
    const auto sm = tape.value(steps[t]).mat();
    for (Index i = 0; i < b; ++i) om.row(i * count + t) = sm.row(i);
  }
  std::vector<Var> inputs(steps.begin(), steps.end());
  return tape.record(std::move(out), grad,
                     [inputs](Tape<Scalar>& t, std::size_t self) {
                       const auto g = t.grad(Var{self}).mat();
                       const Index count = static_cast<Index>(inputs.size());
                       for (Index s = 0; s < count; ++s) {
                         if (!t.requires_grad(inputs[s])) continue;
                         auto gs = t.grad(inputs[s]).mat();
                         for (Index i = 0; i < gs.rows(); ++i) gs.row(i) += g.row(i * count + s);
                       }
                     });
}

template <typename Scalar>
Var select_rows(Tape<Scalar>& tape, Var a, Var b,
                std::span<const std::uint8_t> mask) {
  if (!(tape.shape(a) == tape.shape(b))) {
    shape_error("select_rows", tape.shape(a).str() + " vs " + tape.shape(b).str());
  }
  Tensor<Scalar> out = tape.value(b);
  auto om = out.mat();
  check_mask<Scalar>("select_rows", mask.size(), om.rows());
  const auto am = tape.value(a).mat();
  for (Index r = 0; r < om.rows(); ++r) {
    if (mask[r]) om.row(r) = am.row(r);
  }
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return tape.record(std::move(out), needs_grad(tape, {a, b}),
                     [a, b, m = std::move(m)](Tape<Scalar>& t, std::size_t self) {
                       const auto g = t.grad(Var{self}).mat();
                       for (Index r = 0; r < g.rows(); ++r) {
                         const Var target = m[r] ? a : b;
                         if (t.requires_grad(target)) t.grad(target).mat().row(r) += g.row(r);
                       }
                     });
}

template <typename Scalar>
Var mask_rows(Tape<Scalar>& tape, Var x, std::span<const std::uint8_t> mask) {
  Tensor<Scalar> out = tape.value(x);
  auto om = out.mat();
  check_mask<Scalar>("mask_rows", mask.size(), om.rows());
  for (Index r = 0; r < om.rows(); ++r) {
    if (!mask[r]) om.row(r).setZero();
  }
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return tape.record(std::move(out), tape.requires_grad(x),
                     [x, m = std::move(m)](Tape<Scalar>& t, std::size_t self) {
                       const auto g = t.grad(Var{self}).mat();
                       auto gx = t.grad(x).mat();
                       for (Index r = 0; r < g.rows(); ++r) {
                         if (m[r]) gx.row(r) += g.row(r);
                       }
                     });
}

template <typename Scalar>
Var masked_mean_over_time(Tape<Scalar>& tape, Var x,
                          std::span<const std::uint8_t> mask) {
  const Shape& xs = tape.shape(x);
  if (xs.rank() != 3) shape_error("masked_mean_over_time", "input " + xs.str());
  const Index b = xs[0], steps = xs[1], d = xs[2];
  check_mask<Scalar>("masked_mean_over_time", mask.size(), b * steps);
  const auto xm = tape.value(x).mat();
  Tensor<Scalar> out(Shape{b, d});
  std::vector<Scalar> inv_count(static_cast<std::size_t>(b), Scalar(0));
  for (Index i = 0; i < b; ++i) {
    Index count = 0;
    for (Index t = 0; t < steps; ++t) {
      if (!mask[i * steps + t]) continue;
      out.mat().row(i) += xm.row(i * steps + t);
      ++count;
    }
    if (count > 0) {
      inv_count[i] = Scalar(1) / static_cast<Scalar>(count);
      out.mat().row(i) *= inv_count[i];
    }
  }
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return tape.record(
      std::move(out), tape.requires_grad(x),
      [x, m = std::move(m), inv_count = std::move(inv_count), steps](Tape<Scalar>& t,
                                                                     std::size_t self) {
        const auto g = t.grad(Var{self}).mat();
        auto gx = t.grad(x).mat();
        for (Index i = 0; i < g.rows(); ++i) {
          for (Index s = 0; s < steps; ++s) {
            if (m[i * steps + s]) gx.row(i * steps + s) += inv_count[i] * g.row(i);
          }
        }
      });
}

#define JOINTNLU_INSTANTIATE_OPS(S)                                                  \
  template Var matmul(Tape<S>&, Var, Var);                                           \
  template Var add_bias(Tape<S>&, Var, Var);                                         \
  template Var add(Tape<S>&, Var, Var);                                              \
  template Var mul(Tape<S>&, Var, Var);                                              \
  template Var scale(Tape<S>&, Var, S);                                              \
  template Var reshape(Tape<S>&, Var, const Shape&);                                 \
  template Var sum(Tape<S>&, Var);                                                   \
  template Var concat_last_axis(Tape<S>&, std::span<const Var>);                     \
  template Var tanh(Tape<S>&, Var);                                                  \
  template Var sigmoid(Tape<S>&, Var);                                               \
  template Var relu(Tape<S>&, Var);                                                  \
  template Var softmax_last_axis(Tape<S>&, Var);                                     \
  template Var embedding_gather(Tape<S>&, Var, std::span<const int>, const Shape&, int); \
  template Var conv1d_over_time(Tape<S>&, Var, Var, Var);                            \
  template Var max_pool_over_time(Tape<S>&, Var, std::span<const int>);              \
  template Var dropout(Tape<S>&, Var, double, bool, std::uint64_t);                  \
  template Var masked_cross_entropy(Tape<S>&, Var, std::span<const int>,             \
                                    std::span<const std::uint8_t>);                  \
  template Var time_slice(Tape<S>&, Var, Index);                                     \
  template Var stack_time(Tape<S>&, std::span<const Var>);                           \
  template Var select_rows(Tape<S>&, Var, Var, std::span<const std::uint8_t>);       \
  template Var mask_rows(Tape<S>&, Var, std::span<const std::uint8_t>);              \
  template Var masked_mean_over_time(Tape<S>&, Var, std::span<const std::uint8_t>);

JOINTNLU_INSTANTIATE_OPS(float)
JOINTNLU_INSTANTIATE_OPS(double)

#undef JOINTNLU_INSTANTIATE_OPS

}  // namespace jointnlu
