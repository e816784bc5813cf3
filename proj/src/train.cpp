#include "ssldr/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssldr/metrics.hpp"

namespace ssldr {

namespace {

// Stable sub-stream tags for everything a fit consumes.
enum SeedPurpose : std::uint64_t {
  kSeedInit = 1,
  kSeedSplit = 2,
  kSeedBatches = 3,
  kSeedValNegatives = 4,
};

std::uint64_t substream(std::uint64_t seed, SeedPurpose purpose) {
  return seed ^ (0x9e3779b97f4a7c15ULL * purpose);
}

}  // namespace

void TrainConfig::validate() const {
  if (latent_dim < 1 || encoder_hidden < 1) {
    throw ConfigError("TrainConfig: dims must be positive");
  }
  if (!(learning_rate > 0.0)) {
    throw ConfigError("TrainConfig: learning_rate must be positive");
  }
  if (alpha < 0.0 || beta < 0.0 || lambda < 0.0) {
    throw ConfigError("TrainConfig: alpha, beta, lambda must be >= 0");
  }
  if (neg_ratio < 0.0) {
    throw ConfigError("TrainConfig: neg_ratio must be >= 0");
  }
  if (batch_size < 1) {
    throw ConfigError("TrainConfig: batch_size must be positive");
  }
  if (max_epochs < 0) {
    throw ConfigError("TrainConfig: max_epochs must be >= 0");
  }
  if (patience < 1) {
    throw ConfigError("TrainConfig: patience must be >= 1");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("TrainConfig: validation_fraction must lie in (0, 1)");
  }
}

ModelHyper TrainConfig::hyper() const {
  ModelHyper h;
  h.latent_dim = latent_dim;
  h.hidden_dim = encoder_hidden;
  h.alpha = alpha;
  h.beta = beta;
  h.lambda = lambda;
  h.aux_enabled = aux_enabled;
  h.normalize_aux = normalize_aux;
  return h;
}

std::pair<std::vector<std::pair<int, int>>, std::vector<std::pair<int, int>>>
make_validation_split(const std::vector<std::pair<int, int>>& positives,
                      double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("make_validation_split: fraction must lie in (0, 1)");
  }
  const long n = long(positives.size());
  const long val_count = std::lround(fraction * double(n));
  if (val_count < 1 || val_count >= n) {
    throw ConfigError(
        "make_validation_split: split would leave an empty side (" +
        std::to_string(n) + " positives, fraction " +
        std::to_string(fraction) + ")");
  }
  std::vector<std::pair<int, int>> shuffled = positives;
  Rng rng(seed);
  rng.shuffle(shuffled);
  std::vector<std::pair<int, int>> val(shuffled.begin(),
                                       shuffled.begin() + val_count);
  std::vector<std::pair<int, int>> train(shuffled.begin() + val_count,
                                         shuffled.end());
  return {std::move(train), std::move(val)};
}

std::vector<EvalPair> sample_batch(
    const Matrix& forbidden, std::span<const std::pair<int, int>> positives,
    double neg_ratio, Rng& rng) {
  if (neg_ratio < 0.0) {
    throw ConfigError("sample_batch: neg_ratio must be >= 0");
  }
  std::vector<EvalPair> batch;
  batch.reserve(positives.size() +
                std::size_t(std::ceil(neg_ratio * double(positives.size()))));
  for (const auto& [i, j] : positives) {
    batch.push_back(EvalPair{i, j, 1});
  }
  const long want =
      long(std::ceil(neg_ratio * double(positives.size())));
  if (want == 0) return batch;
  const long cells = long(forbidden.rows()) * long(forbidden.cols());
  const long zero_cells = cells - long((forbidden.array() != 0.0).count());
  if (zero_cells <= 0) {
    throw SamplingError("sample_batch: matrix has no zero entries to sample");
  }
  const int cols = int(forbidden.cols());
  for (long s = 0; s < want; ++s) {
    while (true) {
      const long cell = long(rng.uniform_index(std::uint64_t(cells)));
      const int i = int(cell / cols);
      const int j = int(cell % cols);
      if (forbidden(i, j) == 0.0) {
        batch.push_back(EvalPair{i, j, 0});
        break;
      }
    }
  }
  return batch;
}

AdamOptimizer::AdamOptimizer(Eigen::Index size, double learning_rate)
    : learning_rate_(learning_rate),
      first_moment_(Vector::Zero(size)),
      second_moment_(Vector::Zero(size)) {}

void AdamOptimizer::step(Vector& params, const Vector& grads) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  ++steps_;
  first_moment_ = kBeta1 * first_moment_ + (1.0 - kBeta1) * grads;
  second_moment_ =
      kBeta2 * second_moment_ + (1.0 - kBeta2) * grads.cwiseProduct(grads);
  const double correction1 = 1.0 - std::pow(kBeta1, steps_);
  const double correction2 = 1.0 - std::pow(kBeta2, steps_);
  params -= (learning_rate_ / correction1) *
            (first_moment_.array() /
             ((second_moment_.array() / correction2).sqrt() + kEps))
                .matrix();
}

namespace {

double validation_aupr(const ModelParams& params, const Matrix& train,
                       const std::vector<std::pair<int, int>>& val_pos,
                       const std::vector<std::pair<int, int>>& val_neg) {
  const Matrix drug_latents = all_drug_latents(params, train);
  const Matrix disease_latents = all_disease_latents(params, train);
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(val_pos.size() + val_neg.size());
  labels.reserve(scores.capacity());
  auto score_pair = [&](const std::pair<int, int>& p) {
    return sigmoid(drug_latents.row(p.first).dot(disease_latents.row(p.second)));
  };
  for (const auto& p : val_pos) {
    scores.push_back(score_pair(p));
    labels.push_back(1);
  }
  for (const auto& p : val_neg) {
    scores.push_back(score_pair(p));
    labels.push_back(0);
  }
  return aupr(scores, labels);
}

}  // namespace

TrainState fit(const Dataset& dataset, const Matrix& fold_train_matrix,
               const ViewVectors* views, const TrainConfig& config) {
  config.validate();
  const bool aux_active = config.aux_enabled && config.alpha != 0.0;
  if (aux_active && views == nullptr) {
    throw ConfigError("fit: auxiliary task enabled but no view vectors given");
  }

  const int n = int(fold_train_matrix.rows());
  const int m = int(fold_train_matrix.cols());
  TrainState state;
  state.params = init_model(
      n, m, aux_active ? int(views->smiles.cols()) : 1,
      aux_active ? int(views->inchi.cols()) : 1, config.hyper(),
      substream(config.seed, kSeedInit));
  state.params.hyper.aux_enabled = aux_active;
  if (!aux_active) {
    state.params.adapters = ViewAdapters{};
  }
  state.params.seed = config.seed;

  if (config.max_epochs == 0) return state;

  // Hold a validation slice of the fold's positives out of training; they
  // are invisible to gradients (masked from the matrix) and off limits for
  // negative sampling.
  std::vector<std::pair<int, int>> positives;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (fold_train_matrix(i, j) != 0.0) positives.emplace_back(i, j);
    }
  }
  auto [train_pos, val_pos] = make_validation_split(
      positives, config.validation_fraction, substream(config.seed, kSeedSplit));
  Matrix effective_train = fold_train_matrix;
  Matrix sampling_mask = fold_train_matrix;  // nonzero = never a negative
  for (const auto& [i, j] : val_pos) {
    effective_train(i, j) = 0.0;
  }

  // Fixed validation negative pool. Generously sized: AUPR over a handful
  // of positives needs a fine-grained negative sea to move smoothly enough
  // for early stopping.
  std::vector<std::pair<int, int>> val_neg;
  {
    Rng rng(substream(config.seed, kSeedValNegatives));
    const long zero_cells =
        long(n) * long(m) - long((sampling_mask.array() != 0.0).count());
    const long want = std::min(
        zero_cells,
        std::max<long>(2000, std::lround(config.neg_ratio *
                                         double(val_pos.size()))));
    Matrix taken = Matrix::Zero(n, m);
    for (long s = 0; s < want; ++s) {
      while (true) {
        const long cell = long(rng.uniform_index(std::uint64_t(long(n) * m)));
        const int i = int(cell / m);
        const int j = int(cell % m);
        if (sampling_mask(i, j) == 0.0 && taken(i, j) == 0.0) {
          taken(i, j) = 1.0;
          val_neg.emplace_back(i, j);
          break;
        }
      }
    }
  }

  std::vector<int> negative_by_drug;
  if (aux_active) {
    negative_by_drug.resize(std::size_t(n));
    for (int i = 0; i < n; ++i) {
      negative_by_drug[std::size_t(i)] = select_negative(i, dataset.drug_sim);
    }
  }

  Vector theta = flatten_params(state.params);
  AdamOptimizer adam(theta.size(), config.learning_rate);
  ModelParams current = state.params;
  Rng batch_rng(substream(config.seed, kSeedBatches));

  ModelParams best_params = current;
  double best_aupr = -1.0;
  int best_epoch = 0;
  int epochs_since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    batch_rng.shuffle(train_pos);
    double loss_sum = 0.0, aux_sum = 0.0, recon_sum = 0.0;
    long pair_count = 0;
    for (std::size_t start = 0; start < train_pos.size();
         start += std::size_t(config.batch_size)) {
      const std::size_t count =
          std::min(std::size_t(config.batch_size), train_pos.size() - start);
      const auto batch = sample_batch(
          sampling_mask,
          std::span<const std::pair<int, int>>(train_pos.data() + start,
                                               count),
          config.neg_ratio, batch_rng);
      ModelGrads grads = zero_grads_like(current);
      const LossBreakdown loss =
          forward_backward(current, batch, effective_train,
                           aux_active ? views : nullptr,
                           aux_active ? &negative_by_drug : nullptr, &grads);
      if (!std::isfinite(loss.total)) {
        throw TrainingError("fit: non-finite loss at epoch " +
                            std::to_string(epoch) + ", batch starting at " +
                            std::to_string(start));
      }
      const Vector grad_flat =
          flatten_grads(grads, current.hyper.aux_enabled);
      adam.step(theta, grad_flat);
      unflatten_params(theta, current);
      loss_sum += loss.total * double(batch.size());
      aux_sum += loss.aux * double(batch.size());
      recon_sum += loss.recon * double(batch.size());
      pair_count += long(batch.size());
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / double(pair_count);
    stats.aux_loss = aux_sum / double(pair_count);
    stats.recon_loss = recon_sum / double(pair_count);
    stats.val_aupr = validation_aupr(current, effective_train, val_pos,
                                     val_neg);
    state.history.push_back(stats);

    if (stats.val_aupr > best_aupr) {
      best_aupr = stats.val_aupr;
      best_params = current;
      best_epoch = epoch;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best >= config.patience) break;
    }
  }

  state.params = best_params;
  state.best_epoch = best_epoch;
  state.best_val_aupr = best_aupr;
  return state;
}

}  // namespace ssldr
