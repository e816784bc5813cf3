#include "ssldr/featurize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ssldr/rng.hpp"

namespace ssldr {

namespace fs = std::filesystem;

std::vector<std::string> tokenize(const std::string& text,
                                  TokenScheme scheme) {
  if (text.empty()) {
    throw InputError("tokenize: empty input string");
  }
  std::string_view body = text;
  if (scheme == TokenScheme::kInchi && body.starts_with("InChI=")) {
    body.remove_prefix(6);
    if (body.empty()) {
      throw InputError("tokenize: InChI string has no content after prefix");
    }
  }
  std::vector<std::string> tokens;
  tokens.reserve(body.size());
  for (std::size_t p = 0; p < body.size(); ++p) {
    if (scheme == TokenScheme::kSmiles && p + 1 < body.size() &&
        ((body[p] == 'C' && body[p + 1] == 'l') ||
         (body[p] == 'B' && body[p + 1] == 'r'))) {
      tokens.emplace_back(body.substr(p, 2));
      ++p;
      continue;
    }
    tokens.emplace_back(1, body[p]);
  }
  return tokens;
}

int Vocabulary::add(const std::string& token) {
  const auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  const int id = int(tokens_.size());
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

int Vocabulary::id_of(const std::string& token) const {
  const auto it = ids_.find(token);
  if (it == ids_.end()) {
    throw LookupError("unknown token '" + token + "'");
  }
  return it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) {
    throw LookupError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[std::size_t(id)];
}

TokenCorpus build_corpus(const std::vector<std::string>& texts,
                         TokenScheme scheme) {
  TokenCorpus corpus;
  corpus.sequences.reserve(texts.size());
  for (const auto& text : texts) {
    TokenSequence seq;
    for (const auto& token : tokenize(text, scheme)) {
      seq.ids.push_back(corpus.vocab.add(token));
    }
    corpus.sequences.push_back(std::move(seq));
  }
  return corpus;
}

namespace {

// Cumulative unigram^0.75 table for negative sampling.
std::vector<double> negative_sampling_cdf(const TokenCorpus& corpus) {
  std::vector<double> weight(std::size_t(corpus.vocab.size()), 0.0);
  for (const auto& seq : corpus.sequences) {
    for (const int id : seq.ids) weight[std::size_t(id)] += 1.0;
  }
  double total = 0.0;
  for (auto& w : weight) {
    w = std::pow(w, 0.75);
    total += w;
  }
  std::vector<double> cdf(weight.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    acc += weight[i] / total;
    cdf[i] = acc;
  }
  cdf.back() = 1.0;
  return cdf;
}

}  // namespace

SkipgramModel train_skipgram(const TokenCorpus& corpus,
                             const SkipgramConfig& config) {
  if (corpus.sequences.empty()) {
    throw InputError("train_skipgram: empty corpus");
  }
  if (config.dim < 2) {
    throw ConfigError("train_skipgram: dim must be at least 2");
  }
  if (config.window < 1) {
    throw ConfigError("train_skipgram: window must be at least 1");
  }
  if (corpus.vocab.size() < 2) {
    throw TrainingError(
        "train_skipgram: vocabulary of size < 2, negatives impossible");
  }

  const int vocab_size = corpus.vocab.size();
  const int dim = config.dim;
  Rng rng(config.seed);

  SkipgramModel model;
  model.table.dim = dim;
  model.table.vectors.resize(vocab_size, dim);
  for (int v = 0; v < vocab_size; ++v) {
    for (int d = 0; d < dim; ++d) {
      model.table.vectors(v, d) = rng.uniform(-0.5, 0.5) / double(dim);
    }
  }
  model.context_vectors = Matrix::Zero(vocab_size, dim);

  const std::vector<double> cdf = negative_sampling_cdf(corpus);
  auto draw_negative = [&](int exclude) {
    while (true) {
      const double u = rng.uniform();
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      const int id = int(it - cdf.begin());
      if (id != exclude && id < vocab_size) return id;
    }
  };

  Matrix& in = model.table.vectors;
  Matrix& out = model.context_vectors;
  Vector center_grad(dim);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    long pair_count = 0;
    for (const auto& seq : corpus.sequences) {
      const int len = int(seq.ids.size());
      for (int t = 0; t < len; ++t) {
        const int center = seq.ids[std::size_t(t)];
        for (int off = -config.window; off <= config.window; ++off) {
          if (off == 0) continue;
          const int pos = t + off;
          if (pos < 0 || pos >= len) continue;
          const int context = seq.ids[std::size_t(pos)];

          center_grad.setZero();
          for (int s = 0; s < 1 + config.negative_samples; ++s) {
            const bool positive = s == 0;
            const int target = positive ? context : draw_negative(context);
            const double score = sigmoid(in.row(center).dot(out.row(target)));
            loss_sum -= std::log(positive ? score : 1.0 - score);
            const double g =
                (score - (positive ? 1.0 : 0.0)) * config.learning_rate;
            center_grad += g * out.row(target).transpose();
            out.row(target) -= g * in.row(center);
          }
          in.row(center) -= center_grad.transpose();
          ++pair_count;
        }
      }
    }
    model.epoch_loss.push_back(pair_count > 0 ? loss_sum / double(pair_count)
                                              : 0.0);
  }
  return model;
}

Vector pool_embedding(const TokenSequence& seq, const EmbeddingTable& table) {
  if (seq.ids.empty()) {
    throw InputError("pool_embedding: empty token sequence");
  }
  Vector sum = Vector::Zero(table.dim);
  for (const int id : seq.ids) {
    if (id < 0 || id >= table.vectors.rows()) {
      throw LookupError("pool_embedding: token id " + std::to_string(id) +
                        " not present in table");
    }
    sum += table.vectors.row(id).transpose();
  }
  return sum / double(seq.ids.size());
}

namespace {

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t content_hash(const std::vector<std::string>& texts,
                           const SkipgramConfig& cfg, TokenScheme scheme) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const int scheme_tag = scheme == TokenScheme::kSmiles ? 0 : 1;
  h = fnv1a(h, &scheme_tag, sizeof(scheme_tag));
  h = fnv1a(h, &cfg.dim, sizeof(cfg.dim));
  h = fnv1a(h, &cfg.window, sizeof(cfg.window));
  h = fnv1a(h, &cfg.negative_samples, sizeof(cfg.negative_samples));
  h = fnv1a(h, &cfg.epochs, sizeof(cfg.epochs));
  h = fnv1a(h, &cfg.learning_rate, sizeof(cfg.learning_rate));
  h = fnv1a(h, &cfg.seed, sizeof(cfg.seed));
  for (const auto& text : texts) {
    h = fnv1a(h, text.data(), text.size());
    const char sep = '\n';
    h = fnv1a(h, &sep, 1);
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void save_table(const fs::path& path, const Vocabulary& vocab,
                const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  out << "dim\t" << table.dim << '\n';
  for (int v = 0; v < vocab.size(); ++v) {
    out << vocab.token_of(v);
    for (int d = 0; d < table.dim; ++d) {
      out << '\t' << format_double(table.vectors(v, d));
    }
    out << '\n';
  }
}

// Loads a cached table; returns false when absent or unusable.
bool load_table(const fs::path& path, const Vocabulary& vocab,
                EmbeddingTable& table) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  if (!std::getline(in, line)) return false;
  int dim = 0;
  if (std::sscanf(line.c_str(), "dim\t%d", &dim) != 1 || dim < 2) return false;
  table.dim = dim;
  table.vectors.resize(vocab.size(), dim);
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = line.find('\t');
    if (pos == std::string::npos) return false;
    int id = -1;
    try {
      id = vocab.id_of(line.substr(0, pos));
    } catch (const LookupError&) {
      return false;
    }
    for (int d = 0; d < dim; ++d) {
      const std::size_t next = line.find('\t', pos + 1);
      const std::string field =
          line.substr(pos + 1, next == std::string::npos ? std::string::npos
                                                         : next - pos - 1);
      double value = 0.0;
      const auto res =
          std::from_chars(field.data(), field.data() + field.size(), value);
      if (res.ec != std::errc{}) return false;
      table.vectors(id, d) = value;
      pos = next;
    }
    ++rows;
  }
  return rows == vocab.size();
}

Matrix pool_view(const TokenCorpus& corpus, const EmbeddingTable& table) {
  Matrix pooled(corpus.sequences.size(), table.dim);
  for (std::size_t i = 0; i < corpus.sequences.size(); ++i) {
    pooled.row(Eigen::Index(i)) =
        pool_embedding(corpus.sequences[i], table).transpose();
  }
  return pooled;
}

Matrix featurize_view(const std::vector<std::string>& texts,
                      TokenScheme scheme, SkipgramConfig cfg,
                      const std::string& cache_dir) {
  const TokenCorpus corpus = build_corpus(texts, scheme);
  fs::path cache_path;
  if (!cache_dir.empty()) {
    const char* view = scheme == TokenScheme::kSmiles ? "smiles" : "inchi";
    cache_path = fs::path(cache_dir) /
                 ("w2v_" + std::string(view) + "_" +
                  hash_hex(content_hash(texts, cfg, scheme)) + ".tsv");
    EmbeddingTable cached;
    if (load_table(cache_path, corpus.vocab, cached)) {
      return pool_view(corpus, cached);
    }
  }
  const SkipgramModel model = train_skipgram(corpus, cfg);
  if (!cache_path.empty()) {
    fs::create_directories(cache_path.parent_path());
    save_table(cache_path, corpus.vocab, model.table);
  }
  return pool_view(corpus, model.table);
}

}  // namespace

ViewVectors featurize_all(const Dataset& dataset,
                          const FeaturizeConfig& config) {
  std::vector<std::string> smiles, inchi;
  smiles.reserve(dataset.texts.size());
  inchi.reserve(dataset.texts.size());
  for (const auto& text : dataset.texts) {
    smiles.push_back(text.smiles);
    inchi.push_back(text.inchi);
  }
  SkipgramConfig smiles_cfg = config.skipgram;
  smiles_cfg.seed = config.skipgram.seed + 1;
  SkipgramConfig inchi_cfg = config.skipgram;
  inchi_cfg.seed = config.skipgram.seed + 2;

  ViewVectors views;
  views.smiles = featurize_view(smiles, TokenScheme::kSmiles, smiles_cfg,
                                config.cache_dir);
  views.inchi =
      featurize_view(inchi, TokenScheme::kInchi, inchi_cfg, config.cache_dir);
  return views;
}

}  // namespace ssldr
