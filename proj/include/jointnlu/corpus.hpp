#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace jointnlu {

/// One pre-tokenized query with token-aligned IOB tags and an intent label.
struct Utterance {
  std::size_t id = 0;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::string intent;

  bool operator==(const Utterance&) const = default;
};

struct Corpus {
  std::string name;
  std::vector<Utterance> utterances;

  std::size_t size() const { return utterances.size(); }
  bool empty() const { return utterances.empty(); }
  bool operator==(const Corpus& other) const {
    return utterances == other.utterances;
  }
};

enum class CorpusFormat { native, ctf };

CorpusFormat parse_corpus_format(std::string_view name);

/// Reads every record of `in`. Ids are assigned 0..n-1 in file order.
Corpus parse_corpus(std::istream& in, CorpusFormat format,
                    std::string name = {});
Corpus read_corpus(const std::filesystem::path& path, CorpusFormat format);

void write_native(const Corpus& corpus, std::ostream& out);
void write_native(const Corpus& corpus, const std::filesystem::path& path);

/// "O", "B-<type>" or "I-<type>" with a non-empty type.
bool is_valid_tag(std::string_view tag);

/// Type part of a B-/I- tag; empty for "O".
std::string_view tag_type(std::string_view tag);

/// Checks tag syntax and returns the sequence as-is. Orphan I- tags are kept:
/// span decoding treats them as span starts.
std::vector<std::string> validate_iob(std::span<const std::string> tags);

/// Dense bijection between labels and indices 0..size()-1.
class LabelIndex {
 public:
  LabelIndex() = default;
  explicit LabelIndex(std::vector<std::string> labels);

  /// Index of `label`, inserting it at the end if new.
  int add(const std::string& label);
  /// -1 when absent.
  int find(std::string_view label) const;
  bool contains(std::string_view label) const { return find(label) >= 0; }
  const std::string& label(int index) const { return labels_.at(index); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  bool operator==(const LabelIndex& other) const {
    return labels_ == other.labels_;
  }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int, Hash, std::equal_to<>> index_;
};

inline constexpr int kPadIndex = 0;
inline constexpr int kUnknownIndex = 1;
inline constexpr std::string_view kPadLabel = "<pad>";
inline constexpr std::string_view kUnknownLabel = "<unk>";

struct Vocabularies {
  LabelIndex tokens;   // <pad>, <unk>, then first-occurrence order
  LabelIndex chars;    // one UTF-8 code point per entry, same reserved ids
  LabelIndex slots;    // always contains "O"
  LabelIndex intents;

  int token_id(std::string_view token) const;
  int char_id(std::string_view code_point) const;

  bool operator==(const Vocabularies&) const = default;
};

Vocabularies build_vocabularies(const Corpus& train);

/// Seeded disjoint split; the validation part has round(fraction * n)
/// utterances. Both parts keep file order and original ids.
std::pair<Corpus, Corpus> split_validation(const Corpus& train,
                                           double fraction,
                                           std::uint64_t seed);

struct CorpusStats {
  std::size_t utterances = 0;
  std::size_t tokens = 0;
  std::size_t entity_spans = 0;
  std::size_t tagged_tokens = 0;  // tokens whose tag is not "O"
  std::size_t intents = 0;        // distinct intent labels
};

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace jointnlu
