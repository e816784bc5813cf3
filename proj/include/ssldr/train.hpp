#ifndef SSLDR_TRAIN_HPP
#define SSLDR_TRAIN_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ssldr/dataset.hpp"
#include "ssldr/featurize.hpp"
#include "ssldr/model.hpp"
#include "ssldr/rng.hpp"

namespace ssldr {

struct TrainConfig {
  int latent_dim = 64;       // k
  int encoder_hidden = 128;  // h
  double alpha = 0.5;
  double lambda = 0.5;
  double beta = 0.5;
  double learning_rate = 0.001;
  int batch_size = 256;  // positives per batch; negatives come on top
  int max_epochs = 200;
  int patience = 10;
  double neg_ratio = 5.0;  // sampled negatives per positive
  double validation_fraction = 0.10;
  std::uint64_t seed = 0;
  bool aux_enabled = true;
  bool normalize_aux = true;

  void validate() const;
  ModelHyper hyper() const;
};

struct EpochStats {
  int epoch = 0;           // 1-based
  double train_loss = 0.0; // mean total loss over the epoch's pairs
  double aux_loss = 0.0;   // alpha-weighted auxiliary component
  double recon_loss = 0.0; // lambda-weighted reconstruction component
  double val_aupr = 0.0;
};

struct TrainState {
  ModelParams params;  // best snapshot by validation AUPR
  std::vector<EpochStats> history;
  int best_epoch = 0;  // 0 when training never ran
  double best_val_aupr = 0.0;
};

// Seeded shuffle split of the positives; the validation side gets
// round(fraction * n) pairs. Both sides must end up non-empty.
std::pair<std::vector<std::pair<int, int>>, std::vector<std::pair<int, int>>>
make_validation_split(const std::vector<std::pair<int, int>>& positives,
                      double fraction, std::uint64_t seed);

// The chunk's positives plus ceil(neg_ratio * chunk size) negatives sampled
// uniformly from the zero cells of `forbidden` (any nonzero cell is off
// limits). Throws SamplingError when no zero cell exists.
std::vector<EvalPair> sample_batch(const Matrix& forbidden,
                                   std::span<const std::pair<int, int>>
                                       positives,
                                   double neg_ratio, Rng& rng);

// Joint optimization of the total loss over one training matrix:
// Adam steps per batch, per-epoch validation AUPR on a held-in split,
// early stopping on patience, best-snapshot return. Deterministic given
// (inputs, config.seed). `views` is required iff the auxiliary task is on.
TrainState fit(const Dataset& dataset, const Matrix& fold_train_matrix,
               const ViewVectors* views, const TrainConfig& config);

// Adam with the usual (0.9, 0.999, 1e-8) moment settings, operating on the
// flattened parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(Eigen::Index size, double learning_rate);
  void step(Vector& params, const Vector& grads);

 private:
  double learning_rate_;
  int steps_ = 0;
  Vector first_moment_;
  Vector second_moment_;
};

}  // namespace ssldr

#endif  // SSLDR_TRAIN_HPP
