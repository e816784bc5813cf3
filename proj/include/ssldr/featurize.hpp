#ifndef SSLDR_FEATURIZE_HPP
#define SSLDR_FEATURIZE_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssldr/dataset.hpp"
#include "ssldr/matrix.hpp"

namespace ssldr {

enum class TokenScheme { kSmiles, kInchi };

// Splits a chemical string into tokens.
//  - smiles: character tokens, with two-character element merging for Cl/Br;
//  - inchi:  strips a leading "InChI=" prefix, then character tokens.
std::vector<std::string> tokenize(const std::string& text, TokenScheme scheme);

// Token -> id map shared by every sequence of one corpus. Ids are assigned
// in first-appearance order, so the vocabulary is a pure function of the
// input texts.
class Vocabulary {
 public:
  int add(const std::string& token);                // inserts if unseen
  int id_of(const std::string& token) const;        // LookupError if unseen
  const std::string& token_of(int id) const;
  int size() const { return int(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

struct TokenSequence {
  std::vector<int> ids;
};

// One view's tokenized texts plus their shared vocabulary.
struct TokenCorpus {
  Vocabulary vocab;
  std::vector<TokenSequence> sequences;
};

TokenCorpus build_corpus(const std::vector<std::string>& texts,
                         TokenScheme scheme);

// One dense vector per vocabulary token (the input-side vectors of the
// skip-gram model; these are the embedding proper).
struct EmbeddingTable {
  int dim = 0;
  Matrix vectors;  // vocab_size x dim
};

struct SkipgramConfig {
  int dim = 64;
  int window = 5;
  int negative_samples = 5;
  int epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 0;
};

struct SkipgramModel {
  EmbeddingTable table;
  Matrix context_vectors;          // output-side vectors, for diagnostics
  std::vector<double> epoch_loss;  // mean negative-sampling loss per epoch
};

// Skip-gram with negative sampling, trained by plain SGD over a fixed
// context window. Negatives are drawn from the unigram^0.75 distribution.
// Fully deterministic given the seed; epochs = 0 returns the seeded
// initialization untouched.
SkipgramModel train_skipgram(const TokenCorpus& corpus,
                             const SkipgramConfig& config);

// Arithmetic mean of the sequence's token vectors.
Vector pool_embedding(const TokenSequence& seq, const EmbeddingTable& table);

// Per-drug fixed-length view vectors: row i of `smiles` / `inchi` is the
// pooled embedding of drug i's string under that view's own model.
struct ViewVectors {
  Matrix smiles;
  Matrix inchi;
};

struct FeaturizeConfig {
  SkipgramConfig skipgram;
  std::string cache_dir;  // empty = no caching
};

// Trains the two view models (separate vocabularies) and pools every drug.
// When cache_dir is set, each view's embedding table is stored under a
// content hash of (texts, config) and reused on later calls.
ViewVectors featurize_all(const Dataset& dataset,
                          const FeaturizeConfig& config);

}  // namespace ssldr

#endif  // SSLDR_FEATURIZE_HPP
