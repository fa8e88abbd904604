#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jointnlu/corpus.hpp"
#include "jointnlu/embeddings.hpp"
#include "jointnlu/features.hpp"
#include "jointnlu/tensor.hpp"

namespace jointnlu {

/// Model-ready arrays for a group of utterances, padded to the longest one.
/// Word vectors are already resolved, so the model never sees the source.
template <typename Scalar>
struct Batch {
  Index batch_size = 0;
  Index max_len = 0;
  Index char_len = 0;  // longest token (in code points) in this batch, capped

  Tensor<Scalar> word_vectors;    // [B, T, word_dim]
  Tensor<Scalar> flags;           // [B, T, 6]
  std::vector<int> char_ids;      // [B * T * char_len], 0-padded
  std::vector<int> char_lengths;  // [B * T]
  std::vector<std::uint8_t> mask; // [B * T], 1 on real tokens
  std::vector<int> slot_targets;  // [B * T], -1 on padding or unseen tag
  std::vector<int> intent_targets;  // [B], -1 for unseen intent
  std::vector<std::size_t> utterance_ids;
  std::vector<int> lengths;

  template <typename Other>
  Batch<Other> cast() const {
    Batch<Other> b;
    b.batch_size = batch_size;
    b.max_len = max_len;
    b.char_len = char_len;
    b.word_vectors = word_vectors.template cast<Other>();
    b.flags = flags.template cast<Other>();
    b.char_ids = char_ids;
    b.char_lengths = char_lengths;
    b.mask = mask;
    b.slot_targets = slot_targets;
    b.intent_targets = intent_targets;
    b.utterance_ids = utterance_ids;
    b.lengths = lengths;
    return b;
  }
};

template <typename Scalar>
Batch<Scalar> make_batch(std::span<const Utterance* const> utterances,
                         const Vocabularies& vocab, const WordVectorSource& vectors,
                         int max_char_len = kDefaultMaxCharLen);

/// Batch of a single utterance.
template <typename Scalar>
Batch<Scalar> make_batch(const Utterance& utterance, const Vocabularies& vocab,
                         const WordVectorSource& vectors,
                         int max_char_len = kDefaultMaxCharLen) {
  const Utterance* one[] = {&utterance};
  return make_batch<Scalar>(one, vocab, vectors, max_char_len);
}

/// Shuffles utterance order with (seed, epoch) and groups into batches of
/// `batch_size`; the last batch holds the remainder. With `shuffle` false the
/// corpus order is kept.
template <typename Scalar>
std::vector<Batch<Scalar>> make_batches(const Corpus& corpus, const Vocabularies& vocab,
                                        const WordVectorSource& vectors, int batch_size,
                                        std::uint64_t seed, std::uint64_t epoch = 0,
                                        int max_char_len = kDefaultMaxCharLen,
                                        bool shuffle = true);

}  // namespace jointnlu
