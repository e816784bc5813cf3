#ifndef SSLDR_METRICS_HPP
#define SSLDR_METRICS_HPP

#include <string>
#include <vector>

#include "ssldr/errors.hpp"

namespace ssldr {

// Rank-based AUC: P(score+ > score-) + 0.5 P(tie), computed from midranks.
// Needs at least one positive and one negative.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Average precision: mean over positives, visited in descending-score order
// (ties broken by original index), of precision at that rank.
double aupr(const std::vector<double>& scores, const std::vector<int>& labels);

// F1 at a fixed threshold (prediction = score >= threshold). Degenerate
// denominators (no predicted or no true positives) yield 0.
double f1(const std::vector<double>& scores, const std::vector<int>& labels,
          double threshold);

struct F1Sweep {
  double best_threshold = 0.0;
  double best_f1 = 0.0;
};

// Best F1 over a fixed threshold grid 0.01, 0.02, ..., 0.99.
F1Sweep f1_sweep(const std::vector<double>& scores,
                 const std::vector<int>& labels);

struct FoldMetrics {
  int fold = 0;
  double auc = 0.0;
  double aupr = 0.0;
  double f1 = 0.0;
  double f1_best = 0.0;           // populated when the sweep is requested
  double f1_best_threshold = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

struct MetricReport {
  std::vector<FoldMetrics> folds;
  bool has_sweep = false;
  Aggregate auc;
  Aggregate aupr;
  Aggregate f1;

  void finalize();  // fills the aggregates from the fold rows
  std::string to_json() const;
  std::string to_tsv() const;  // header + one row per fold
};

}  // namespace ssldr

#endif  // SSLDR_METRICS_HPP
