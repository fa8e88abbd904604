#include <doctest.h>

#include <cmath>
#include <sstream>

#include "jointnlu/model.hpp"
#include "jointnlu/train.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace jointnlu;
namespace fx = jointnlu::testing;

namespace {

struct Setup {
  Corpus corpus = fx::memorization_fixture();
  Vocabularies vocab = build_vocabularies(corpus);
  EmbeddingTable table = fx::random_embeddings(corpus, 8, 3);
  StaticVectors vectors{table};
};

ModelConfig small(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.word_dim = 8;
  c.char_emb_dim = 4;
  c.char_filters = 5;
  c.hidden = 6;
  c.dropout_rate = 0.0;
  c.init_seed = 4;
  return c;
}

template <typename S>
std::pair<Tensor<S>, Tensor<S>> eval_forward(const JointModel<S>& model, const Batch<S>& batch) {
  Tape<S> tape;
  const auto out = model.forward(tape, batch);
  return {tape.value(out.slot_logits), tape.value(out.intent_logits)};
}

}  // namespace

TEST_CASE("same config and seed build identical parameters") {
  Setup s;
  const JointModel<float> a(small(Variant::recurrent), s.vocab);
  const JointModel<float> b(small(Variant::recurrent), s.vocab);
  REQUIRE(a.parameters().size() == b.parameters().size());
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].value.data() == b.parameters()[i].value.data());
  }
}

TEST_CASE("char embedding pad row and LSTM forget bias initialization") {
  Setup s;
  const JointModel<float> m(small(Variant::recurrent), s.vocab);
  const auto& emb = m.parameters().at("char_embedding").value;
  CHECK(emb.mat().row(0).isZero(0));
  const auto& bias = m.parameters().at("lstm_fwd.bias").value;
  const int h = 6;
  for (int j = 0; j < 4 * h; ++j) CHECK(bias[j] == (j >= h && j < 2 * h ? 1.0f : 0.0f));
}

TEST_CASE("hidden=1 builds and runs forward") {
  Setup s;
  for (Variant v : {Variant::recurrent, Variant::time_distributed}) {
    ModelConfig c = small(v);
    c.hidden = 1;
    const JointModel<float> m(c, s.vocab);
    const auto [slots, intents] =
        eval_forward(m, make_batch<float>(s.corpus.utterances[0], s.vocab, s.vectors));
    CHECK(slots.data().allFinite());
    CHECK(intents.data().allFinite());
  }
}

TEST_CASE("forward shape contract") {
  Setup s;
  Utterance u{0, {"a", "b", "c", "d", "e"}, {"O", "O", "O", "O", "O"}, "flight"};
  for (Variant v : {Variant::recurrent, Variant::time_distributed}) {
    const JointModel<float> m(small(v), s.vocab);
    const auto [slots, intents] = eval_forward(m, make_batch<float>(u, s.vocab, s.vectors));
    CHECK(slots.shape() == Shape{1, 5, static_cast<Index>(m.n_slots())});
    CHECK(intents.shape() == Shape{1, static_cast<Index>(m.n_intents())});
  }
}

TEST_CASE("property: shape contract across batch sizes and lengths") {
  Setup s;
  const JointModel<float> m(small(Variant::recurrent), s.vocab);
  for (int bs : {1, 3, 7}) {
    const auto batches = make_batches<float>(s.corpus, s.vocab, s.vectors, bs, 2);
    for (const auto& b : batches) {
      const auto [slots, intents] = eval_forward(m, b);
      CHECK(slots.shape() == Shape{b.batch_size, b.max_len, static_cast<Index>(m.n_slots())});
      CHECK(intents.shape() == Shape{b.batch_size, static_cast<Index>(m.n_intents())});
    }
  }
}

TEST_CASE("forward rejects batches that do not fit the model") {
  Setup s;
  const JointModel<float> m(small(Variant::recurrent), s.vocab);
  Batch<float> b = make_batch<float>(s.corpus.utterances[0], s.vocab, s.vectors);
  Batch<float> wrong_dim = b;
  wrong_dim.word_vectors = Tensor<float>(Shape{1, b.max_len, 3});
  Tape<float> tape;
  CHECK_THROWS_AS(m.forward(tape, wrong_dim), ShapeError);
  Batch<float> bad_mask = b;
  bad_mask.mask.back() = 0;
  CHECK_THROWS_AS(m.forward(tape, bad_mask), ShapeError);
}

TEST_CASE("time-distributed slot logits are local to each token") {
  Setup s;
  const JointModel<float> m(small(Variant::time_distributed), s.vocab);
  const Utterance& u = s.corpus.utterances[2];
  REQUIRE(u.tokens.size() >= 3);
  const auto [base, base_intent] = eval_forward(m, make_batch<float>(u, s.vocab, s.vectors));
  const Index n = static_cast<Index>(m.n_slots());
  for (std::size_t j = 0; j < u.tokens.size(); ++j) {
    Utterance changed = u;
    changed.tokens[j] = j % 2 ? "Zed9" : "xylophone";
    const auto [slots, intents] = eval_forward(m, make_batch<float>(changed, s.vocab, s.vectors));
    for (std::size_t t = 0; t < u.tokens.size(); ++t) {
      const bool same = slots.mat().row(static_cast<Index>(t)) == base.mat().row(static_cast<Index>(t));
      CHECK(same == (t != j));
    }
    (void)n;
  }
}

TEST_CASE("joint loss: uniform logits give ln K + ln M") {
  const Index k = 7, m = 3;
  Tape<double> tape;
  Var slots = tape.constant(Tensor<double>(Shape{2, 4, k}));
  Var intents = tape.constant(Tensor<double>(Shape{2, m}));
  const int gold_slots[] = {0, 1, 2, 3, 6, 5, -1, -1};
  const int gold_intents[] = {0, 2};
  const std::uint8_t mask[] = {1, 1, 1, 1, 1, 1, 0, 0};
  const Var loss = joint_loss(tape, slots, intents, gold_slots, gold_intents, mask, {});
  CHECK(std::abs(tape.value(loss)[0] - (std::log(7.0) + std::log(3.0))) < 1e-6);
}

TEST_CASE("joint loss: large margins drive the loss to zero") {
  Tape<double> tape;
  Tensor<double> s(Shape{1, 2, 3}), i(Shape{1, 2});
  s[0] = 50;
  s[3 + 2] = 50;
  i[1] = 50;
  const int gold_slots[] = {0, 2};
  const int gold_intents[] = {1};
  const std::uint8_t mask[] = {1, 1};
  const Var loss = joint_loss(tape, tape.constant(s), tape.constant(i), gold_slots, gold_intents,
                              mask, {});
  CHECK(tape.value(loss)[0] < 1e-18);
}

TEST_CASE("joint loss: slot weight 0 is the pure intent loss") {
  Tape<double> tape;
  Tensor<double> s(Shape{1, 2, 3}), i(Shape{1, 2});
  s.data() << 1, 2, 3, -1, 0, 4;
  i.data() << 0.5, -0.25;
  const int gold_slots[] = {0, 2};
  const int gold_intents[] = {1};
  const std::uint8_t mask[] = {1, 1};
  const std::uint8_t batch_mask[] = {1};
  const double joint = tape.value(joint_loss(tape, tape.constant(s), tape.constant(i), gold_slots,
                                             gold_intents, mask, {0.0, 1.0}))[0];
  const double intent_only = tape.value(
      masked_cross_entropy(tape, tape.constant(i), std::span<const int>(gold_intents), batch_mask))[0];
  CHECK(joint == intent_only);

  const std::uint8_t none[] = {0, 0};
  CHECK_THROWS(joint_loss(tape, tape.constant(s), tape.constant(i), gold_slots, gold_intents, none,
                          {}));
}

TEST_CASE("count_parameters matches array lengths and the closed form") {
  Setup s;
  for (Variant v : {Variant::recurrent, Variant::time_distributed}) {
    ModelConfig c;
    c.variant = v;
    const JointModel<float> m(c, s.vocab);
    CHECK(m.count_parameters() == m.parameters().coordinates());
    CHECK(m.count_parameters() == fx::closed_form_parameter_count(c, s.vocab.chars.size(),
                                                                   s.vocab.slots.size(),
                                                                   s.vocab.intents.size()));
  }
}

TEST_CASE("closed form for the default recurrent config by hand") {
  // chars 30, slots 9, intents 3, defaults: E 25, F 30, W 3, D 136, h 100.
  const std::size_t expected = 30 * 25 + 3 * 25 * 30 + 30 +
                               2 * ((136 + 100) * 400 + 400) + 200 * 9 + 9 + 200 * 3 + 3;
  CHECK(fx::closed_form_parameter_count(ModelConfig{}, 30, 9, 3) == expected);
}

TEST_CASE("single 3x4 dense layer with bias has 16 parameters") {
  ParameterSet<float> p;
  p.add("w", Tensor<float>(Shape{3, 4}));
  p.add("b", Tensor<float>(Shape{4}));
  CHECK(p.coordinates() == 16);
}

TEST_CASE("time-distributed model is smaller than recurrent at equal dims") {
  Setup s;
  ModelConfig c1, c2;
  c2.variant = Variant::time_distributed;
  CHECK(JointModel<float>(c2, s.vocab).count_parameters() <
        JointModel<float>(c1, s.vocab).count_parameters());
}

TEST_CASE("single-task counts leave out the unused head") {
  Setup s;
  const JointModel<float> m(small(Variant::recurrent), s.vocab);
  const std::size_t head = m.config().head_dim();
  CHECK(m.count_parameters(Task::ner_only) ==
        m.count_parameters() - (head + 1) * m.n_intents());
  CHECK(m.count_parameters(Task::intent_only) ==
        m.count_parameters() - (head + 1) * m.n_slots());
}

TEST_CASE("prediction decodes entities") {
  Setup s;
  const JointModel<float> m(small(Variant::recurrent), s.vocab);
  const Prediction p = predict(m, s.corpus.utterances[0], s.vectors);
  CHECK(p.tags.size() == s.corpus.utterances[0].tokens.size());
  CHECK(m.vocabularies().intents.find(p.intent) >= 0);
  Utterance empty{0, {}, {}, "flight"};
  CHECK_THROWS(predict(m, empty, s.vectors));

  const auto all = predict_all(m, s.corpus, s.vectors, 7);
  REQUIRE(all.size() == s.corpus.utterances.size());
  CHECK(all[0].tags == p.tags);
  CHECK(all[0].intent == p.intent);
}

TEST_CASE("prediction JSON carries entity text") {
  Prediction p{"flight", {{"city", 0, 1, "new york"}}, {"B-city", "I-city"}};
  const auto j = to_json(p);
  CHECK(j["intent"] == "flight");
  CHECK(j["entities"][0]["text"] == "new york");
  CHECK(j["entities"][0]["type"] == "city");
  Prediction none{"flight", {}, {"O", "O"}};
  CHECK(to_json(none)["entities"].empty());
}

TEST_CASE("memorized model predicts the flight-info entities") {
  const Corpus corpus = fx::pittsburgh_fixture();
  const Vocabularies vocab = build_vocabularies(corpus);
  const EmbeddingTable table = fx::random_embeddings(corpus, 16, 5);
  const StaticVectors vectors(table);
  ModelConfig c = small(Variant::recurrent);
  c.word_dim = 16;
  c.hidden = 16;
  JointModel<float> m(c, vocab);
  TrainConfig tc;
  tc.batch_size = 2;
  tc.max_epochs = 150;
  tc.patience = 150;
  tc.adam.learning_rate = 0.01;
  fit(m, corpus, corpus, vectors, tc);
  const Prediction p = predict(m, corpus.utterances[0], vectors);
  CHECK(p.intent == "flight_info");
  const std::vector<Entity> expected = {{"from_city", 5, 5, "pittsburgh"},
                                        {"to_city", 7, 7, "baltimore"},
                                        {"depart_date", 9, 9, "thursday"},
                                        {"depart_time", 10, 10, "morning"}};
  CHECK(p.entities == expected);
}

TEST_CASE("checkpoint round-trip gives bitwise-identical forward") {
  Setup s;
  for (Variant v : {Variant::recurrent, Variant::time_distributed}) {
    const JointModel<float> m(small(v), s.vocab);
    std::stringstream buf;
    save_checkpoint(m, buf);
    const JointModel<float> back = load_checkpoint(buf);
    CHECK(back.config() == m.config());
    const auto batch = make_batches<float>(s.corpus, s.vocab, s.vectors, 20, 0).at(0);
    const auto a = eval_forward(m, batch);
    const auto b = eval_forward(back, batch);
    CHECK(a.first.data() == b.first.data());
    CHECK(a.second.data() == b.second.data());
    CHECK(back.vocabularies().slots.labels() == m.vocabularies().slots.labels());
  }
}

TEST_CASE("checkpoint load errors") {
  Setup s;
  const JointModel<float> m(small(Variant::recurrent), s.vocab);
  std::stringstream buf;
  save_checkpoint(m, buf);
  const std::string bytes = buf.str();

  std::istringstream truncated(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_WITH_AS(load_checkpoint(truncated), doctest::Contains("truncated"), Error);

  std::istringstream trailing(bytes + "x");
  CHECK_THROWS_AS(load_checkpoint(trailing), Error);

  std::istringstream other(bytes);
  CHECK_THROWS_WITH_AS(load_checkpoint(other, Variant::time_distributed),
                       doctest::Contains("variant"), Error);

  std::string bumped = bytes;
  const auto pos = bumped.find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  bumped.replace(pos, 18, "\"format_version\":9");
  std::istringstream version(bumped);
  CHECK_THROWS_WITH_AS(load_checkpoint(version), doctest::Contains("version"), Error);

  std::istringstream garbage("not a checkpoint");
  CHECK_THROWS_AS(load_checkpoint(garbage), Error);
}

TEST_CASE("checkpoint file save is atomic and loadable") {
  Setup s;
  fx::TempDir dir;
  const JointModel<float> m(small(Variant::time_distributed), s.vocab);
  save_checkpoint(m, dir / "model.ckpt");
  CHECK_FALSE(std::filesystem::exists(dir / "model.ckpt.tmp"));
  CHECK(load_checkpoint(dir / "model.ckpt", Variant::time_distributed).config() == m.config());
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
}

TEST_CASE("config JSON round-trip and validation") {
  ModelConfig c = small(Variant::time_distributed);
  c.slot_loss_weight = 0.5;
  CHECK(model_config_from_json(to_json(c)) == c);
  ModelConfig bad = c;
  bad.hidden = 0;
  CHECK_THROWS(bad.validate());
  bad = c;
  bad.dropout_rate = 1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("variant and task names") {
  CHECK(parse_variant("recurrent") == Variant::recurrent);
  CHECK(parse_variant("model2") == Variant::time_distributed);
  CHECK_THROWS(parse_variant("crf"));
  CHECK(parse_task("ner") == Task::ner_only);
  CHECK(parse_task("intent_only") == Task::intent_only);
  CHECK_THROWS(parse_task("both"));
  CHECK(weights_for(Task::ner_only).intent == 0.0);
  CHECK(weights_for(Task::intent_only).slot == 0.0);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  Eigen::VectorXf v(4);
  v << 1, 3, 3, 2;
  CHECK(argmax(v) == 1);
  CHECK(argmax(Eigen::VectorXf::Zero(3)) == 0);
}
