#pragma once

#include <cstdint>
#include <string>

#include "jointnlu/corpus.hpp"
#include "jointnlu/embeddings.hpp"
#include "jointnlu/model.hpp"

namespace jointnlu::testing {

/// 20 flight-domain utterances, 3 intents, 4 entity types (city, date, time,
/// airline). Every token carries the same tag wherever it occurs, so a
/// per-token model can fit it.
Corpus memorization_fixture();

/// The flight-info query with four context-dependent slots.
Corpus pittsburgh_fixture();

/// Two short utterances of different lengths.
Corpus tiny_corpus();

/// Native-format text of `corpus`.
std::string to_native_text(const Corpus& corpus);

/// Seeded Gaussian vectors for every token in `corpus`.
EmbeddingTable random_embeddings(const Corpus& corpus, int dim, std::uint64_t seed);

/// Seeded Gaussian vectors for every (utterance id, position) in `corpus`.
ContextualStore random_contextual(const Corpus& corpus, int dim, std::uint64_t seed);

/// Small dims for finite-difference checks.
ModelConfig tiny_config(Variant variant, int word_dim);

/// Fresh temporary directory, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace jointnlu::testing
