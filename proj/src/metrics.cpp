#include "ssldr/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace ssldr {

namespace {

void check_lengths(const std::vector<double>& scores,
                   const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw MetricError("scores and labels have different lengths");
  }
  if (scores.empty()) {
    throw MetricError("empty score list");
  }
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_lengths(scores, labels);
  const long positives = std::count(labels.begin(), labels.end(), 1);
  const long negatives = long(labels.size()) - positives;
  if (positives == 0 || negatives == 0) {
    throw MetricError("auc: needs at least one positive and one negative");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Midranks over tie groups; sum the positives' ranks.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           scores[order[j + 1]] == scores[order[i]]) {
      ++j;
    }
    const double midrank = 0.5 * double(i + 1 + j + 1);
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1) positive_rank_sum += midrank;
    }
    i = j + 1;
  }
  const double p = double(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) /
         (p * double(negatives));
}

double aupr(const std::vector<double>& scores,
            const std::vector<int>& labels) {
  check_lengths(scores, labels);
  const long positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0) {
    throw MetricError("aupr: needs at least one positive");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;  // deterministic tie-break by original index
  });
  double hits = 0.0;
  double precision_sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      hits += 1.0;
      precision_sum += hits / double(rank + 1);
    }
  }
  return precision_sum / double(positives);
}

double f1(const std::vector<double>& scores, const std::vector<int>& labels,
          double threshold) {
  check_lengths(scores, labels);
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (predicted && labels[i] == 1) ++tp;
    if (predicted && labels[i] == 0) ++fp;
    if (!predicted && labels[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  const double precision = double(tp) / double(tp + fp);
  const double recall = double(tp) / double(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

F1Sweep f1_sweep(const std::vector<double>& scores,
                 const std::vector<int>& labels) {
  F1Sweep best;
  best.best_threshold = 0.01;
  for (int t = 1; t <= 99; ++t) {
    const double threshold = double(t) / 100.0;
    const double value = f1(scores, labels, threshold);
    if (value > best.best_f1) {
      best.best_f1 = value;
      best.best_threshold = threshold;
    }
  }
  return best;
}

namespace {

Aggregate aggregate_of(const std::vector<FoldMetrics>& folds,
                       double FoldMetrics::*field) {
  Aggregate agg;
  if (folds.empty()) return agg;
  for (const auto& f : folds) agg.mean += f.*field;
  agg.mean /= double(folds.size());
  double var = 0.0;
  for (const auto& f : folds) {
    const double d = f.*field - agg.mean;
    var += d * d;
  }
  agg.stddev = std::sqrt(var / double(folds.size()));
  return agg;
}

}  // namespace

void MetricReport::finalize() {
  auc = aggregate_of(folds, &FoldMetrics::auc);
  aupr = aggregate_of(folds, &FoldMetrics::aupr);
  f1 = aggregate_of(folds, &FoldMetrics::f1);
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["folds"] = nlohmann::json::array();
  for (const auto& f : folds) {
    nlohmann::json row;
    row["fold"] = f.fold;
    row["auc"] = f.auc;
    row["aupr"] = f.aupr;
    row["f1"] = f.f1;
    if (has_sweep) {
      row["f1_best"] = f.f1_best;
      row["f1_best_threshold"] = f.f1_best_threshold;
    }
    j["folds"].push_back(row);
  }
  j["aggregate"]["auc"] = {{"mean", auc.mean}, {"std", auc.stddev}};
  j["aggregate"]["aupr"] = {{"mean", aupr.mean}, {"std", aupr.stddev}};
  j["aggregate"]["f1"] = {{"mean", f1.mean}, {"std", f1.stddev}};
  return j.dump(2) + "\n";
}

std::string MetricReport::to_tsv() const {
  std::string out = "fold\tauc\taupr\tf1";
  if (has_sweep) out += "\tf1_best\tf1_best_threshold";
  out += '\n';
  for (const auto& f : folds) {
    out += std::to_string(f.fold);
    out += '\t' + format_double(f.auc);
    out += '\t' + format_double(f.aupr);
    out += '\t' + format_double(f.f1);
    if (has_sweep) {
      out += '\t' + format_double(f.f1_best);
      out += '\t' + format_double(f.f1_best_threshold);
    }
    out += '\n';
  }
  return out;
}

}  // namespace ssldr
