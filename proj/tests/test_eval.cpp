#include <doctest.h>

#include <random>

#include "jointnlu/eval.hpp"
#include "jointnlu/model.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace jointnlu;
namespace fx = jointnlu::testing;
using Tags = std::vector<std::string>;

namespace {

std::vector<Span> spans(const Tags& tags) { return decode_spans(tags); }

Tags random_tags(std::mt19937_64& rng, int length) {
  static const char* types[] = {"city", "date", "time", "airline"};
  Tags tags;
  for (int i = 0; i < length; ++i) {
    const int r = static_cast<int>(rng() % 9);
    if (r == 0) {
      tags.push_back("O");
    } else {
      tags.push_back(std::string(r <= 4 ? "B-" : "I-") + types[(r - 1) % 4]);
    }
  }
  return tags;
}

}  // namespace

TEST_CASE("decode_spans reference cases") {
  CHECK(spans({"O", "O", "O"}).empty());
  CHECK(spans({"B-city", "I-city", "O", "B-date"}) ==
        std::vector<Span>{{"city", 0, 1}, {"date", 3, 3}});
  CHECK(spans({"I-city", "B-city"}) == std::vector<Span>{{"city", 0, 0}, {"city", 1, 1}});
  CHECK(spans({"B-city", "I-date"}) == std::vector<Span>{{"city", 0, 0}, {"date", 1, 1}});
  CHECK(spans({"O", "I-time", "I-time"}) == std::vector<Span>{{"time", 1, 2}});
  CHECK(spans({"B-fromloc.city_name", "I-fromloc.city_name"}) ==
        std::vector<Span>{{"fromloc.city_name", 0, 1}});
}

TEST_CASE("property: decode_spans agrees with the brute-force segmenter") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const Tags tags = random_tags(rng, 1 + static_cast<int>(rng() % 15));
    const auto expected = fx::brute_force_spans(tags);
    const auto got = spans(tags);
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].type == expected[i].type);
      CHECK(got[i].start == expected[i].start);
      CHECK(got[i].end == expected[i].end);
    }
  }
}

TEST_CASE("property: decode after encode is the identity") {
  std::mt19937_64 rng(22);
  static const char* types[] = {"city", "date", "time"};
  for (int trial = 0; trial < 500; ++trial) {
    const int length = 1 + static_cast<int>(rng() % 15);
    std::vector<Span> set;
    int pos = 0;
    while (pos < length) {
      pos += static_cast<int>(rng() % 3);
      if (pos >= length) break;
      const int end = std::min(length - 1, pos + static_cast<int>(rng() % 3));
      set.push_back({types[rng() % 3], pos, end});
      pos = end + 1;
    }
    const Tags tags = encode_spans(set, static_cast<std::size_t>(length));
    CHECK(tags.size() == static_cast<std::size_t>(length));
    CHECK(decode_spans(tags) == set);
  }
}

TEST_CASE("entity_f1 on perfect and empty predictions") {
  const std::vector<Tags> gold = {{"B-city", "I-city", "O"}, {"O", "B-date"}};
  const SlotMetrics perfect = entity_f1(gold, gold);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.token_f1 == 1.0);

  const std::vector<Tags> none = {{"O", "O", "O"}, {"O", "O"}};
  const SlotMetrics zero = entity_f1(none, gold);
  CHECK(zero.recall == 0.0);
  CHECK(zero.f1 == 0.0);
  CHECK(zero.counts.predicted == 0);

  CHECK_THROWS(entity_f1({{"O"}}, gold));
  CHECK_THROWS(entity_f1({{"O"}, {"O"}}, gold));
}

TEST_CASE("partial span overlap is a miss") {
  const std::vector<Tags> gold = {{"B-city", "I-city", "O"}};
  const std::vector<Tags> pred = {{"B-city", "O", "O"}};
  const SlotMetrics m = entity_f1(pred, gold);
  CHECK(m.counts.matched == 0);
  CHECK(m.per_type.at("city").gold == 1);
  CHECK(m.token_f1 > 0.0);
}

TEST_CASE("property: entity_f1 equals the brute-force matcher exactly") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Tags> pred, gold;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) {
      const int length = 1 + static_cast<int>(rng() % 15);
      pred.push_back(random_tags(rng, length));
      gold.push_back(random_tags(rng, length));
    }
    const SlotMetrics m = entity_f1(pred, gold);
    const fx::OracleF1 o = fx::brute_force_f1(pred, gold);
    CHECK(m.counts.matched == o.matched);
    CHECK(m.counts.gold == o.gold);
    CHECK(m.counts.predicted == o.predicted);
    CHECK(m.precision == o.precision);
    CHECK(m.recall == o.recall);
    CHECK(m.f1 == o.f1);

    // Swapping roles swaps precision and recall.
    const SlotMetrics swapped = entity_f1(gold, pred);
    CHECK(swapped.precision == m.recall);
    CHECK(swapped.recall == m.precision);

    for (double v : {m.precision, m.recall, m.f1, m.token_f1}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(m.counts.matched <= std::min(m.counts.gold, m.counts.predicted));
  }
}

TEST_CASE("intent accuracy") {
  const std::vector<std::string> a = {"x", "y", "z"};
  const std::vector<std::string> b = {"p", "q", "r"};
  CHECK(intent_accuracy(a, a) == 1.0);
  CHECK(intent_accuracy(a, b) == 0.0);
  std::vector<std::string> pred(893, "flight"), gold(893, "flight");
  for (int i = 0; i < 893 - 855; ++i) gold[i] = "airfare";
  CHECK(intent_accuracy(pred, gold) == doctest::Approx(855.0 / 893.0));
  CHECK(std::abs(intent_accuracy(pred, gold) - 0.9575) < 1e-4);
  CHECK_THROWS(intent_accuracy(std::vector<std::string>{}, std::vector<std::string>{}));
  CHECK_THROWS(intent_accuracy(a, std::vector<std::string>{"x"}));
}

TEST_CASE("evaluate counts unseen gold labels as misses") {
  const Corpus corpus = fx::memorization_fixture();
  const Vocabularies vocab = build_vocabularies(corpus);
  const EmbeddingTable table = fx::random_embeddings(corpus, 8, 3);
  const StaticVectors vectors(table);
  ModelConfig c;
  c.word_dim = 8;
  c.hidden = 4;
  const JointModel<float> m(c, vocab);

  Corpus test;
  test.utterances.push_back({0, {"to", "atlantis"}, {"O", "B-planet"}, "space_travel"});
  const MetricsReport r = evaluate(m, test, vectors);
  CHECK(r.utterances == 1);
  CHECK(r.intent_accuracy == 0.0);
  CHECK(r.slot.counts.gold == 1);
  CHECK(r.slot.recall == 0.0);
  CHECK_THROWS(evaluate(m, Corpus{}, vectors));

  const auto j = to_json(r);
  CHECK(j.contains("intent_accuracy"));
  CHECK(j["slot"].contains("f1"));
  CHECK(j["slot"].contains("token_f1"));
  CHECK(j["counts"]["utterances"] == 1);
}

TEST_CASE("uniform intent head predicts the lowest-index intent") {
  const Corpus corpus = fx::memorization_fixture();
  const Vocabularies vocab = build_vocabularies(corpus);
  const EmbeddingTable table = fx::random_embeddings(corpus, 8, 3);
  const StaticVectors vectors(table);
  ModelConfig c;
  c.word_dim = 8;
  c.hidden = 4;
  c.variant = Variant::time_distributed;
  JointModel<float> m(c, vocab);
  m.parameters().at("intent_head.weight").value.data().setZero();
  m.parameters().at("intent_head.bias").value.data().setZero();
  const MetricsReport r = evaluate(m, corpus, vectors);
  std::size_t first = 0;
  for (const auto& u : corpus.utterances) first += u.intent == vocab.intents.label(0);
  CHECK(r.intent_accuracy == doctest::Approx(static_cast<double>(first) / corpus.utterances.size()));
}
