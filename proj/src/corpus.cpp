#include "jointnlu/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "jointnlu/error.hpp"
#include "jointnlu/eval.hpp"
#include "jointnlu/utf8.hpp"

namespace jointnlu {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

void check_utterance(const Utterance& u, std::size_t line) {
  if (u.tokens.empty()) throw ParseError(line, "empty utterance");
  if (u.tokens.size() != u.tags.size()) {
    throw ParseError(line, "tag/token length mismatch (" +
                               std::to_string(u.tokens.size()) + " tokens, " +
                               std::to_string(u.tags.size()) + " tags)");
  }
  if (u.intent.empty()) throw ParseError(line, "missing intent label");
}

// Native format: "#intent\t<label>" then "<token>\t<tag>" lines; blank line
// between records.
Corpus parse_native(std::istream& in) {
  Corpus corpus;
  Utterance current;
  bool open = false;
  std::size_t record_line = 0;
  std::size_t line_no = 0;
  std::string line;

  auto close = [&] {
    if (!open) return;
    check_utterance(current, record_line);
    current.id = corpus.utterances.size();
    corpus.utterances.push_back(std::move(current));
    current = Utterance{};
    open = false;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      close();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(line_no, "expected <TAB>-separated fields");
    }
    const std::string_view head(line.data(), tab);
    const std::string_view rest(line.data() + tab + 1, line.size() - tab - 1);
    if (!open) {
      if (head != "#intent") {
        throw ParseError(line_no, "record must start with '#intent<TAB><label>'");
      }
      if (rest.empty() || rest.find('\t') != std::string_view::npos) {
        throw ParseError(line_no, "malformed intent line");
      }
      current.intent = std::string(rest);
      record_line = line_no;
      open = true;
      continue;
    }
    if (head.empty()) throw ParseError(line_no, "empty token");
    if (rest.find('\t') != std::string_view::npos) {
      throw ParseError(line_no, "expected exactly two fields");
    }
    if (!is_valid_tag(rest)) {
      throw ParseError(line_no, "malformed tag '" + std::string(rest) + "'");
    }
    current.tokens.emplace_back(head);
    current.tags.emplace_back(rest);
  }
  close();
  return corpus;
}

// CTF: "<seq> |S0 i:1 |# word |S1 j:1 |# intent |S2 k:1 |# tag". Lines with
// the same leading sequence id form one utterance.
Corpus parse_ctf(std::istream& in) {
  Corpus corpus;
  Utterance current;
  std::string current_seq;
  std::size_t record_line = 0;
  std::size_t line_no = 0;
  std::string line;

  auto close = [&] {
    if (current_seq.empty()) return;
    check_utterance(current, record_line);
    current.id = corpus.utterances.size();
    corpus.utterances.push_back(std::move(current));
    current = Utterance{};
    current_seq.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;

    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto bar = rest.find('|');
      fields.push_back(trim(rest.substr(0, bar)));
      if (bar == std::string_view::npos) break;
      rest.remove_prefix(bar + 1);
    }
    const std::string_view seq = fields.front();
    if (seq.empty() ||
        !std::all_of(seq.begin(), seq.end(),
                     [](char c) { return c >= '0' && c <= '9'; })) {
      throw ParseError(line_no, "missing numeric sequence id");
    }
    if (seq != current_seq) {
      close();
      current_seq = std::string(seq);
      record_line = line_no;
    }

    std::string_view word, intent, tag;
    bool have_word = false, have_tag = false;
    std::string_view stream;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const std::string_view f = fields[i];
      if (!f.empty() && f.front() == '#') {
        const std::string_view value = trim(f.substr(1));
        if (stream == "S0") {
          word = value;
          have_word = true;
        } else if (stream == "S1") {
          intent = value;
        } else if (stream == "S2") {
          tag = value;
          have_tag = true;
        }
        stream = {};
      } else {
        stream = f.substr(0, f.find_first_of(" \t"));
      }
    }
    if (!intent.empty()) {
      if (!current.intent.empty() && current.intent != intent) {
        throw ParseError(line_no, "conflicting intent labels in one sequence");
      }
      current.intent = std::string(intent);
    }
    if (!have_word) throw ParseError(line_no, "missing S0 word comment");
    if (!have_tag) throw ParseError(line_no, "missing S2 slot comment");
    if (word == "BOS" || word == "EOS") continue;
    if (word.empty()) throw ParseError(line_no, "empty token");
    if (!is_valid_tag(tag)) {
      throw ParseError(line_no, "malformed tag '" + std::string(tag) + "'");
    }
    current.tokens.emplace_back(word);
    current.tags.emplace_back(tag);
  }
  close();
  return corpus;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "native") return CorpusFormat::native;
  if (name == "ctf") return CorpusFormat::ctf;
  throw Error("unknown corpus format '" + std::string(name) +
              "' (expected native or ctf)");
}

Corpus parse_corpus(std::istream& in, CorpusFormat format, std::string name) {
  Corpus corpus =
      format == CorpusFormat::native ? parse_native(in) : parse_ctf(in);
  if (corpus.empty()) throw Error("no utterances");
  corpus.name = std::move(name);
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file " + path.string());
  try {
    return parse_corpus(in, format, path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

void write_native(const Corpus& corpus, std::ostream& out) {
  bool first = true;
  for (const Utterance& u : corpus.utterances) {
    if (!first) out << '\n';
    first = false;
    out << "#intent\t" << u.intent << '\n';
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
      out << u.tokens[i] << '\t' << u.tags[i] << '\n';
    }
  }
}

void write_native(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_native(corpus, out);
  if (!out) throw Error("write failed: " + path.string());
}

bool is_valid_tag(std::string_view tag) {
  if (tag == "O") return true;
  if (tag.size() < 3) return false;
  if ((tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') return false;
  return tag.find_first_of(" \t\r\n") == std::string_view::npos;
}

std::string_view tag_type(std::string_view tag) {
  return tag.size() > 2 ? tag.substr(2) : std::string_view{};
}

std::vector<std::string> validate_iob(std::span<const std::string> tags) {
  for (const std::string& t : tags) {
    if (!is_valid_tag(t)) throw Error("malformed tag '" + t + "'");
  }
  return {tags.begin(), tags.end()};
}

LabelIndex::LabelIndex(std::vector<std::string> labels) {
  for (std::string& l : labels) {
    if (contains(l)) throw Error("duplicate label '" + l + "'");
    add(l);
  }
}

int LabelIndex::add(const std::string& label) {
  if (const int existing = find(label); existing >= 0) return existing;
  const int id = static_cast<int>(labels_.size());
  labels_.push_back(label);
  index_.emplace(label, id);
  return id;
}

int LabelIndex::find(std::string_view label) const {
  const auto it = index_.find(label);
  return it == index_.end() ? -1 : it->second;
}

int Vocabularies::token_id(std::string_view token) const {
  const int id = tokens.find(token);
  return id < 0 ? kUnknownIndex : id;
}

int Vocabularies::char_id(std::string_view code_point) const {
  const int id = chars.find(code_point);
  return id < 0 ? kUnknownIndex : id;
}

Vocabularies build_vocabularies(const Corpus& train) {
  if (train.empty()) throw Error("cannot build vocabularies from an empty corpus");
  Vocabularies v;
  v.tokens.add(std::string(kPadLabel));
  v.tokens.add(std::string(kUnknownLabel));
  v.chars.add(std::string(kPadLabel));
  v.chars.add(std::string(kUnknownLabel));
  v.slots.add("O");
  for (const Utterance& u : train.utterances) {
    for (const std::string& token : u.tokens) {
      v.tokens.add(token);
      for (const std::string& c : utf8::split_code_points(token)) v.chars.add(c);
    }
    for (const std::string& tag : u.tags) v.slots.add(tag);
    v.intents.add(u.intent);
  }
  return v;
}

std::pair<Corpus, Corpus> split_validation(const Corpus& train,
                                           double fraction,
                                           std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error("validation fraction must lie in (0, 1)");
  }
  const std::size_t n = train.size();
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * n));
  if (n_val < 1) throw Error("validation split would be empty");
  if (n_val >= n) throw Error("validation split would leave no training data");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> in_val(n, false);
  for (std::size_t i = 0; i < n_val; ++i) in_val[order[i]] = true;

  Corpus rest{train.name, {}};
  Corpus val{train.name + ".validation", {}};
  for (std::size_t i = 0; i < n; ++i) {
    (in_val[i] ? val : rest).utterances.push_back(train.utterances[i]);
  }
  return {std::move(rest), std::move(val)};
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  std::set<std::string> intents;
  for (const Utterance& u : corpus.utterances) {
    ++s.utterances;
    s.tokens += u.tokens.size();
    s.entity_spans += decode_spans(u.tags).size();
    s.tagged_tokens += static_cast<std::size_t>(
        std::count_if(u.tags.begin(), u.tags.end(),
                      [](const std::string& t) { return t != "O"; }));
    intents.insert(u.intent);
  }
  s.intents = intents.size();
  return s;
}

}  // namespace jointnlu
