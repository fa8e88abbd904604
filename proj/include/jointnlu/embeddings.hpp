#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "jointnlu/corpus.hpp"

namespace jointnlu {

/// Frozen static word vectors (GloVe / fastText text format).
class EmbeddingTable {
 public:
  EmbeddingTable(int dim, std::string source_name = {});

  int dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::string& source_name() const { return source_name_; }
  /// Number of tokens that appeared more than once while loading.
  std::size_t duplicates() const { return duplicates_; }

  /// Later inserts of the same token replace the stored vector.
  void insert(const std::string& token, std::span<const float> vector);

  /// Exact-match vector, if present.
  std::optional<Eigen::Map<const Eigen::VectorXf>> find(
      std::string_view token) const;

  struct Lookup {
    Eigen::VectorXf vector;
    bool oov = false;
  };

  /// Exact match, then ASCII-lowercased match, then a zero vector with
  /// `oov` set.
  Lookup lookup(std::string_view token) const;

  /// Order-independent FNV-1a digest of every (token, vector) entry.
  std::uint64_t checksum() const;

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  int dim_;
  std::string source_name_;
  std::vector<std::string> tokens_;
  std::vector<float> data_;  // row-major, size() x dim
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
  std::size_t duplicates_ = 0;
};

/// Lines are "<token> <v1> ... <vD>". A first line made of exactly two
/// integers is a fastText header and is skipped.
EmbeddingTable load_embedding_text(std::istream& in,
                                   std::optional<int> expected_dim = {},
                                   std::string source_name = {});
EmbeddingTable load_embedding_text(const std::filesystem::path& path,
                                   std::optional<int> expected_dim = {});

struct OovReport {
  double oov_rate = 0.0;
  std::vector<std::string> oov_tokens;  // distinct, first-occurrence order
};

OovReport oov_report(const EmbeddingTable& table, const Corpus& corpus);

/// Precomputed per-occurrence vectors keyed by (utterance id, position).
class ContextualStore {
 public:
  explicit ContextualStore(int dim);

  int dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }

  void insert(std::uint32_t utterance_id, std::uint16_t position,
              std::span<const float> vector);
  bool contains(std::uint32_t utterance_id, std::uint16_t position) const;

  /// Throws when the key is absent: stores must cover the corpus.
  Eigen::Map<const Eigen::VectorXf> at(std::size_t utterance_id,
                                       std::size_t position) const;

  struct Key {
    std::uint32_t utterance_id;
    std::uint16_t position;
  };
  /// Keys in insertion order.
  const std::vector<Key>& keys() const { return keys_; }

  bool operator==(const ContextualStore& other) const;

 private:
  static std::uint64_t pack(std::uint32_t id, std::uint16_t pos) {
    return (static_cast<std::uint64_t>(id) << 16) | pos;
  }

  int dim_;
  std::vector<Key> keys_;
  std::vector<float> data_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// Binary layout: "CTXV", version byte 1, dim u32 LE, count u64 LE, then
/// count records of {utterance_id u32 LE, position u16 LE, dim x f32 LE}.
ContextualStore load_contextual(std::istream& in);
ContextualStore load_contextual(const std::filesystem::path& path);
void write_contextual(const ContextualStore& store, std::ostream& out);
void write_contextual(const ContextualStore& store,
                      const std::filesystem::path& path);

/// Where a token's word vector comes from: a static table or a contextual
/// store. Both are read-only.
class WordVectorSource {
 public:
  virtual ~WordVectorSource() = default;
  virtual int dim() const = 0;
  virtual Eigen::VectorXf vector(const Utterance& utterance,
                                 std::size_t position) const = 0;
};

class StaticVectors final : public WordVectorSource {
 public:
  explicit StaticVectors(const EmbeddingTable& table) : table_(table) {}
  int dim() const override { return table_.dim(); }
  Eigen::VectorXf vector(const Utterance& utterance,
                         std::size_t position) const override;

 private:
  const EmbeddingTable& table_;
};

class ContextualVectors final : public WordVectorSource {
 public:
  explicit ContextualVectors(const ContextualStore& store) : store_(store) {}
  int dim() const override { return store_.dim(); }
  Eigen::VectorXf vector(const Utterance& utterance,
                         std::size_t position) const override;

 private:
  const ContextualStore& store_;
};

}  // namespace jointnlu
