#include "jointnlu/batch.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "jointnlu/error.hpp"

namespace jointnlu {

template <typename Scalar>
Batch<Scalar> make_batch(std::span<const Utterance* const> utterances,
                         const Vocabularies& vocab, const WordVectorSource& vectors,
                         int max_char_len) {
  if (utterances.empty()) throw Error("make_batch: no utterances");
  Batch<Scalar> b;
  b.batch_size = static_cast<Index>(utterances.size());
  std::vector<CharEncoding> encodings;
  for (const Utterance* u : utterances) {
    if (u->tokens.empty()) throw Error("make_batch: empty utterance");
    b.max_len = std::max<Index>(b.max_len, static_cast<Index>(u->tokens.size()));
  }
  const Index batch = b.batch_size, steps = b.max_len;
  const Index dim = vectors.dim();

  b.word_vectors = Tensor<Scalar>(Shape{batch, steps, dim});
  b.flags = Tensor<Scalar>(Shape{batch, steps, WordFlags::kCount});
  b.mask.assign(batch * steps, 0);
  b.slot_targets.assign(batch * steps, -1);
  b.char_lengths.assign(batch * steps, 0);
  encodings.resize(batch * steps);

  auto words = b.word_vectors.mat();
  auto flags = b.flags.mat();
  for (Index i = 0; i < batch; ++i) {
    const Utterance& u = *utterances[i];
    b.utterance_ids.push_back(u.id);
    b.lengths.push_back(static_cast<int>(u.tokens.size()));
    b.intent_targets.push_back(vocab.intents.find(u.intent));
    for (Index t = 0; t < static_cast<Index>(u.tokens.size()); ++t) {
      const Index row = i * steps + t;
      const Eigen::VectorXf v = vectors.vector(u, static_cast<std::size_t>(t));
      if (v.size() != dim) {
        throw Error("word vector for '" + u.tokens[t] + "' has dimension " +
                    std::to_string(v.size()) + ", expected " + std::to_string(dim));
      }
      words.row(row) = v.transpose().template cast<Scalar>();
      const WordFlags f = word_flags(u.tokens[t]);
      for (int k = 0; k < WordFlags::kCount; ++k) flags(row, k) = Scalar(f[k]);
      b.mask[row] = 1;
      b.slot_targets[row] = vocab.slots.find(u.tags.at(t));
      encodings[row] = char_encode(u.tokens[t], vocab, max_char_len);
      b.char_lengths[row] = encodings[row].true_len;
      b.char_len = std::max<Index>(b.char_len, encodings[row].true_len);
    }
  }
  // Trailing all-pad columns carry no information: pooling only reads the
  // first true_len steps, and pad embeddings are zero.
  b.char_len = std::max<Index>(b.char_len, 1);
  b.char_ids.assign(batch * steps * b.char_len, kPadIndex);
  for (Index row = 0; row < batch * steps; ++row) {
    for (Index c = 0; c < b.char_lengths[row]; ++c) {
      b.char_ids[row * b.char_len + c] = encodings[row].ids[c];
    }
  }
  return b;
}

template <typename Scalar>
std::vector<Batch<Scalar>> make_batches(const Corpus& corpus, const Vocabularies& vocab,
                                        const WordVectorSource& vectors, int batch_size,
                                        std::uint64_t seed, std::uint64_t epoch,
                                        int max_char_len, bool shuffle) {
  if (corpus.empty()) throw Error("make_batches: empty corpus");
  if (batch_size < 1) throw Error("make_batches: batch_size must be at least 1");
  std::vector<const Utterance*> order;
  for (const Utterance& u : corpus.utterances) order.push_back(&u);
  if (shuffle) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Batch<Scalar>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t n = std::min<std::size_t>(batch_size, order.size() - start);
    batches.push_back(make_batch<Scalar>(std::span(order).subspan(start, n), vocab,
                                         vectors, max_char_len));
  }
  return batches;
}

template Batch<float> make_batch(std::span<const Utterance* const>, const Vocabularies&,
                                 const WordVectorSource&, int);
template Batch<double> make_batch(std::span<const Utterance* const>, const Vocabularies&,
                                  const WordVectorSource&, int);
template std::vector<Batch<float>> make_batches(const Corpus&, const Vocabularies&,
                                                const WordVectorSource&, int, std::uint64_t,
                                                std::uint64_t, int, bool);
template std::vector<Batch<double>> make_batches(const Corpus&, const Vocabularies&,
                                                 const WordVectorSource&, int,
                                                 std::uint64_t, std::uint64_t, int, bool);

}  // namespace jointnlu
