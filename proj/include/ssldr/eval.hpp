#ifndef SSLDR_EVAL_HPP
#define SSLDR_EVAL_HPP

#include <string>
#include <vector>

#include "ssldr/dataset.hpp"
#include "ssldr/featurize.hpp"
#include "ssldr/metrics.hpp"
#include "ssldr/model.hpp"
#include "ssldr/train.hpp"

namespace ssldr {

// Model variants under evaluation:
//   ssldr    full model;
//   ssldr_m  auxiliary task removed (alpha = 0, no featurization);
//   ssldr_a  plain single-input decoder (beta = 0).
enum class Variant { kSsldr, kSsldrM, kSsldrA };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant variant);

struct CrossValidateOptions {
  int num_folds = 10;
  int parallel_folds = 1;
  Variant variant = Variant::kSsldr;
  bool f1_sweep = false;
};

struct CrossValidateResult {
  MetricReport report;
  std::vector<std::vector<EpochStats>> fold_histories;
  // Protocol counters: how often each positive pair (in plan order) was
  // evaluated as a test positive, and each fold's count of label-0 pairs.
  std::vector<int> positive_eval_counts;
  std::vector<long> zero_pairs_per_fold;
};

// The cross-validation protocol: mask each fold's positives out of R, fit
// on the rest, score that fold's positives against every unknown pair.
// Per-fold seeds are `config.seed + fold`, so `parallel_folds > 1` changes
// wall time only, never results.
CrossValidateResult cross_validate(const Dataset& dataset,
                                   const TrainConfig& config,
                                   const FeaturizeConfig& featurize_config,
                                   const CrossValidateOptions& options);

struct Recommendation {
  std::string drug_id;
  std::vector<std::pair<std::string, double>> ranked;  // (disease_id, score)

  std::string to_tsv() const;  // rank, disease_id, score
};

// Scores every disease unknown for the drug (R[i][j] == 0) and returns the
// top n by descending score, ties broken by disease file order.
Recommendation recommend_topk(const ModelParams& params,
                              const Dataset& dataset,
                              const std::string& drug_id, int n);

}  // namespace ssldr

#endif  // SSLDR_EVAL_HPP
