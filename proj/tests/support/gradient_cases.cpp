#include "support/gradient_cases.hpp"

#include <memory>
#include <random>

#include "jointnlu/lstm.hpp"
#include "support/fixtures.hpp"

namespace jointnlu::testing {

namespace {

using T = Tensor<double>;

T random_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  T t(shape);
  for (Index i = 0; i < t.size(); ++i) t[i] = normal(rng);
  return t;
}

/// sum(y * r) for a fixed random r shaped like y.
Var contract(Tape<double>& tape, Var y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Var r = tape.constant(random_tensor(tape.shape(y), rng));
  return sum(tape, mul(tape, y, r));
}

using Body = std::function<Var(Tape<double>&, ParameterSet<double>&)>;

GradientCase checked(std::string name, ParameterSet<double> params, LossBuilder loss) {
  auto shared = std::make_shared<ParameterSet<double>>(std::move(params));
  return {std::move(name), [shared, loss = std::move(loss)] {
            return grad_check(*shared, loss, 1e-5);
          }};
}

GradientCase make_case(std::string name, ParameterSet<double> params, Body body,
                       std::uint64_t seed) {
  return checked(std::move(name), std::move(params),
                 [body = std::move(body), seed](Tape<double>& tape, ParameterSet<double>& p) {
                   return contract(tape, body(tape, p), seed);
                 });
}

}  // namespace

std::vector<GradientCase> layer_gradient_cases(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<GradientCase> cases;
  auto leaf = [](Tape<double>& t, ParameterSet<double>& p, const char* n) {
    return t.parameter(p.at(n));
  };

  {
    ParameterSet<double> p;
    p.add("x", random_tensor({2, 3, 4}, rng));
    p.add("w", random_tensor({4, 5}, rng));
    p.add("b", random_tensor({5}, rng));
    cases.push_back(make_case("matmul+add_bias", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) {
          return add_bias(t, matmul(t, leaf(t, p, "x"), leaf(t, p, "w")), leaf(t, p, "b"));
        }, seed + 1));
  }
  {
    ParameterSet<double> p;
    p.add("a", random_tensor({3, 2}, rng));
    p.add("b", random_tensor({3, 4}, rng));
    cases.push_back(make_case("concat_last_axis", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) {
          const Var parts[] = {leaf(t, p, "a"), leaf(t, p, "b"), leaf(t, p, "a")};
          return concat_last_axis<double>(t, parts);
        }, seed + 2));
  }
  {
    ParameterSet<double> p;
    p.add("x", random_tensor({4, 5}, rng));
    cases.push_back(make_case("tanh", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) { return tanh(t, leaf(t, p, "x")); },
        seed + 3));
  }
  {
    ParameterSet<double> p;
    p.add("x", random_tensor({4, 5}, rng));
    cases.push_back(make_case("sigmoid", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) { return sigmoid(t, leaf(t, p, "x")); },
        seed + 4));
  }
  {
    // Keep inputs away from the kink at zero.
    T x = random_tensor({4, 5}, rng);
    for (Index i = 0; i < x.size(); ++i) x[i] += x[i] >= 0 ? 0.1 : -0.1;
    ParameterSet<double> p;
    p.add("x", std::move(x));
    cases.push_back(make_case("relu", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) { return relu(t, leaf(t, p, "x")); },
        seed + 5));
  }
  {
    ParameterSet<double> p;
    p.add("x", random_tensor({2, 3, 4}, rng));
    cases.push_back(make_case("softmax_last_axis", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) {
          return softmax_last_axis(t, leaf(t, p, "x"));
        }, seed + 6));
  }
  {
    ParameterSet<double> p;
    p.add("table", random_tensor({6, 3}, rng));
    cases.push_back(make_case("embedding_gather", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) {
          static const int ids[] = {1, 0, 5, 2, 2, 0};
          return embedding_gather(t, leaf(t, p, "table"), ids, Shape{2, 3}, 0);
        }, seed + 7));
  }
  for (int width : {3, 2, 1}) {
    ParameterSet<double> p;
    p.add("x", random_tensor({2, 5, 3}, rng));
    p.add("kernel", random_tensor({width, 3, 4}, rng));
    p.add("bias", random_tensor({4}, rng));
    cases.push_back(make_case("conv1d_over_time(width " + std::to_string(width) + ")",
        std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) {
          return conv1d_over_time(t, leaf(t, p, "x"), leaf(t, p, "kernel"), leaf(t, p, "bias"));
        }, seed + 8 + width));
  }
  {
    ParameterSet<double> p;
    p.add("x", random_tensor({3, 4, 2}, rng));
    cases.push_back(make_case("max_pool_over_time", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) {
          static const int lengths[] = {4, 1, 2};
          return max_pool_over_time(t, leaf(t, p, "x"), lengths);
        }, seed + 12));
  }
  {
    ParameterSet<double> p;
    p.add("x", random_tensor({4, 6}, rng));
    cases.push_back(make_case("dropout(train, fixed seed)", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) {
          return dropout(t, leaf(t, p, "x"), 0.5, true, 99);
        }, seed + 13));
  }
  {
    ParameterSet<double> p;
    p.add("logits", random_tensor({2, 3, 5}, rng));
    cases.push_back(checked("masked_cross_entropy", std::move(p),
        [](Tape<double>& t, ParameterSet<double>& p) {
          static const int targets[] = {0, 4, -1, 2, 1, 3};
          static const std::uint8_t mask[] = {1, 1, 0, 1, 1, 0};
          return masked_cross_entropy(t, t.parameter(p.at("logits")), targets, mask);
        }));
  }
  {
    ParameterSet<double> p;
    p.add("x", random_tensor({2, 3, 4}, rng));
    cases.push_back(make_case("masked_mean_over_time", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) {
          static const std::uint8_t mask[] = {1, 1, 0, 1, 0, 0};
          return masked_mean_over_time(t, leaf(t, p, "x"), mask);
        }, seed + 14));
  }
  {
    const int d = 3, h = 2;
    ParameterSet<double> p;
    p.add("x", random_tensor({2, d}, rng));
    p.add("h", random_tensor({2, h}, rng));
    p.add("c", random_tensor({2, h}, rng));
    p.add("weight", random_tensor({d + h, 4 * h}, rng));
    p.add("bias", random_tensor({4 * h}, rng));
    cases.push_back(make_case("lstm_cell", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) {
          const LstmParams lp{leaf(t, p, "weight"), leaf(t, p, "bias")};
          const LstmState s = lstm_cell(t, leaf(t, p, "x"), {leaf(t, p, "h"), leaf(t, p, "c")}, lp);
          const Var parts[] = {s.h, s.c};
          return concat_last_axis<double>(t, parts);
        }, seed + 15));
  }
  {
    const int d = 3, h = 2;
    ParameterSet<double> p;
    p.add("x", random_tensor({2, 4, d}, rng));
    p.add("fwd.weight", random_tensor({d + h, 4 * h}, rng, 0.5));
    p.add("fwd.bias", random_tensor({4 * h}, rng, 0.5));
    p.add("bwd.weight", random_tensor({d + h, 4 * h}, rng, 0.5));
    p.add("bwd.bias", random_tensor({4 * h}, rng, 0.5));
    cases.push_back(make_case("bilstm", std::move(p),
        [leaf](Tape<double>& t, ParameterSet<double>& p) {
          static const std::uint8_t mask[] = {1, 1, 1, 1, 1, 1, 0, 0};
          const BiLstmOutput out = bilstm(t, leaf(t, p, "x"), mask,
                                          {leaf(t, p, "fwd.weight"), leaf(t, p, "fwd.bias")},
                                          {leaf(t, p, "bwd.weight"), leaf(t, p, "bwd.bias")});
          const Var finals[] = {out.final_forward.h, out.final_backward.h,
                                out.final_forward.c, out.final_backward.c};
          const Var flat[] = {reshape(t, out.outputs, Shape{2, 16}),
                              concat_last_axis<double>(t, finals)};
          return concat_last_axis<double>(t, flat);
        }, seed + 16));
  }
  return cases;
}

GradientCase joint_loss_gradient_case(Variant variant, std::uint64_t seed) {
  const Corpus corpus = tiny_corpus();
  const Vocabularies vocab = build_vocabularies(corpus);
  const int word_dim = 4;
  const EmbeddingTable table = random_embeddings(corpus, word_dim, seed);
  const StaticVectors vectors(table);
  auto batch = std::make_shared<const Batch<double>>(
      make_batches<double>(corpus, vocab, vectors, 2, 0, 0, kDefaultMaxCharLen, false).at(0));

  ModelConfig config = tiny_config(variant, word_dim);
  config.init_seed = seed;
  auto model = std::make_shared<JointModel<double>>(config, vocab);

  // Perturb the zero-initialized biases so no gradient is trivially exact.
  std::mt19937_64 rng(seed + 100);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (auto& p : model->parameters()) {
    for (Index i = 0; i < p.value.size(); ++i) {
      if (p.name != "char_embedding" || i >= p.value.shape().last()) p.value[i] += normal(rng);
    }
  }

  LossBuilder loss = [model, batch](Tape<double>& tape, ParameterSet<double>&) {
    const auto out = model->forward(tape, *batch, false);
    return batch_loss(tape, out, *batch, model->config().loss_weights());
  };
  return {"joint loss (" + std::string(to_string(variant)) + ")",
          [model, loss] { return grad_check(model->parameters(), loss, 1e-5); }};
}

}  // namespace jointnlu::testing
