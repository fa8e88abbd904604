#include "jointnlu/eval.hpp"

#include "jointnlu/error.hpp"
#include "jointnlu/model.hpp"

namespace jointnlu {

std::vector<Span> decode_spans(std::span<const std::string> tags) {
  std::vector<Span> spans;
  bool open = false;
  Span current;
  auto close = [&] {
    if (open) spans.push_back(current);
    open = false;
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& tag = tags[i];
    const int pos = static_cast<int>(i);
    if (tag == "O" || tag.size() < 3) {
      close();
      continue;
    }
    const std::string_view type = tag_type(tag);
    const bool continues = tag[0] == 'I' && open && current.type == type;
    if (continues) {
      current.end = pos;
      continue;
    }
    close();
    current = Span{std::string(type), pos, pos};
    open = true;
  }
  close();
  return spans;
}

std::vector<std::string> encode_spans(std::span<const Span> spans, std::size_t length) {
  std::vector<std::string> tags(length, "O");
  for (const Span& s : spans) {
    if (s.start < 0 || s.end < s.start || static_cast<std::size_t>(s.end) >= length) {
      throw Error("encode_spans: span out of range");
    }
    for (int i = s.start; i <= s.end; ++i) {
      if (tags[i] != "O") throw Error("encode_spans: overlapping spans");
      tags[i] = (i == s.start ? "B-" : "I-") + s.type;
    }
  }
  return tags;
}

double SpanCounts::precision() const {
  return predicted == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(predicted);
}

double SpanCounts::recall() const {
  return gold == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(gold);
}

double SpanCounts::f1() const {
  const double p = precision(), r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

SlotMetrics entity_f1(const TagSequences& predicted, const TagSequences& gold) {
  if (predicted.size() != gold.size()) {
    throw Error("entity_f1: " + std::to_string(predicted.size()) + " predicted vs " +
                std::to_string(gold.size()) + " gold utterances");
  }
  SlotMetrics m;
  std::size_t token_tp = 0, token_pred = 0, token_gold = 0;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    if (predicted[u].size() != gold[u].size()) {
      throw Error("entity_f1: utterance " + std::to_string(u) + " has " +
                  std::to_string(predicted[u].size()) + " predicted vs " +
                  std::to_string(gold[u].size()) + " gold tags");
    }
    const auto pred_spans = decode_spans(predicted[u]);
    const auto gold_spans = decode_spans(gold[u]);
    for (const Span& s : gold_spans) ++m.per_type[s.type].gold;
    for (const Span& s : pred_spans) {
      ++m.per_type[s.type].predicted;
      // Spans within one sequence never overlap, so at most one gold match.
      if (std::find(gold_spans.begin(), gold_spans.end(), s) != gold_spans.end()) {
        ++m.per_type[s.type].matched;
        ++m.counts.matched;
      }
    }
    m.counts.gold += gold_spans.size();
    m.counts.predicted += pred_spans.size();

    for (std::size_t i = 0; i < gold[u].size(); ++i) {
      const std::string_view p = tag_type(predicted[u][i]);
      const std::string_view g = tag_type(gold[u][i]);
      token_pred += !p.empty();
      token_gold += !g.empty();
      token_tp += !p.empty() && p == g;
    }
  }
  m.precision = m.counts.precision();
  m.recall = m.counts.recall();
  m.f1 = m.counts.f1();
  const SpanCounts token{token_gold, token_pred, token_tp};
  m.token_f1 = token.f1();
  return m;
}

double intent_accuracy(std::span<const std::string> predicted,
                       std::span<const std::string> gold) {
  if (predicted.size() != gold.size()) {
    throw Error("intent_accuracy: length mismatch");
  }
  if (gold.empty()) throw Error("intent_accuracy: no labels");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += predicted[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

MetricsReport evaluate(const JointModel<float>& model, const Corpus& corpus,
                       const WordVectorSource& vectors) {
  if (corpus.empty()) throw Error("evaluate: empty corpus");
  const auto predictions = predict_all(model, corpus, vectors);
  TagSequences pred_tags, gold_tags;
  std::vector<std::string> pred_intents, gold_intents;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    pred_tags.push_back(predictions[i].tags);
    gold_tags.push_back(corpus.utterances[i].tags);
    pred_intents.push_back(predictions[i].intent);
    gold_intents.push_back(corpus.utterances[i].intent);
  }
  MetricsReport report;
  report.intent_accuracy = intent_accuracy(pred_intents, gold_intents);
  report.slot = entity_f1(pred_tags, gold_tags);
  report.utterances = corpus.size();
  return report;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json per_type = nlohmann::json::object();
  for (const auto& [type, c] : r.slot.per_type) {
    per_type[type] = {{"precision", c.precision()}, {"recall", c.recall()}, {"f1", c.f1()},
                      {"gold_spans", c.gold}, {"pred_spans", c.predicted},
                      {"matched", c.matched}};
  }
  return {{"intent_accuracy", r.intent_accuracy},
          {"slot",
           {{"precision", r.slot.precision},
            {"recall", r.slot.recall},
            {"f1", r.slot.f1},
            {"token_f1", r.slot.token_f1},
            {"per_type", per_type}}},
          {"counts",
           {{"utterances", r.utterances},
            {"gold_spans", r.slot.counts.gold},
            {"pred_spans", r.slot.counts.predicted},
            {"matched", r.slot.counts.matched}}}};
}

}  // namespace jointnlu
