#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jointnlu/corpus.hpp"

namespace jointnlu {

class WordVectorSource;
template <typename Scalar>
class JointModel;

/// Entity span over tokens [start, end], both inclusive.
struct Span {
  std::string type;
  int start = 0;
  int end = 0;

  bool operator==(const Span&) const = default;
  auto operator<=>(const Span&) const = default;
};

/// conlleval chunking: a span opens at B-X, or at I-X after O, at sequence
/// start, or after a tag of another type. It closes before O, any B-, or an
/// I- of another type.
std::vector<Span> decode_spans(std::span<const std::string> tags);

/// Canonical B-/I- tagging of non-overlapping spans over `length` tokens.
std::vector<std::string> encode_spans(std::span<const Span> spans,
                                      std::size_t length);

struct SpanCounts {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t matched = 0;

  double precision() const;
  double recall() const;
  double f1() const;
};

struct SlotMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  SpanCounts counts;
  std::map<std::string, SpanCounts> per_type;
  // Token-level F1 over entity types, ignoring B/I distinction. Reported
  // alongside the span-level score, never instead of it.
  double token_f1 = 0.0;
};

using TagSequences = std::vector<std::vector<std::string>>;

/// Micro-averaged exact-match span F1 over aligned utterances.
SlotMetrics entity_f1(const TagSequences& predicted, const TagSequences& gold);

double intent_accuracy(std::span<const std::string> predicted,
                       std::span<const std::string> gold);

struct MetricsReport {
  double intent_accuracy = 0.0;
  SlotMetrics slot;
  std::size_t utterances = 0;
};

/// Runs the model in eval mode over every utterance. Gold labels the model
/// has never seen simply count as misses.
MetricsReport evaluate(const JointModel<float>& model, const Corpus& corpus,
                       const WordVectorSource& vectors);

nlohmann::json to_json(const MetricsReport& report);

}  // namespace jointnlu
