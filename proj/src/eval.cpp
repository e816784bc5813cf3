#include "ssldr/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <thread>

namespace ssldr {

Variant parse_variant(const std::string& name) {
  if (name == "ssldr") return Variant::kSsldr;
  if (name == "ssldr_m") return Variant::kSsldrM;
  if (name == "ssldr_a") return Variant::kSsldrA;
  throw ConfigError("unknown variant '" + name +
                    "' (expected ssldr, ssldr_m or ssldr_a)");
}

std::string variant_name(Variant variant) {
  switch (variant) {
    case Variant::kSsldr: return "ssldr";
    case Variant::kSsldrM: return "ssldr_m";
    case Variant::kSsldrA: return "ssldr_a";
  }
  return "ssldr";
}

namespace {

struct FoldOutcome {
  FoldMetrics metrics;
  std::vector<EpochStats> history;
  std::vector<std::pair<int, int>> tested_positives;
  long zero_pairs = 0;
};

FoldOutcome run_fold(const Dataset& dataset, const FoldPlan& plan, int fold,
                     const TrainConfig& fold_config, const ViewVectors* views,
                     bool sweep) {
  const Matrix train = make_train_matrix(dataset, plan, fold);
  const TrainState state = fit(dataset, train, views, fold_config);

  const EvalSet eval_set = make_eval_set(dataset, plan, fold);
  const Matrix drug_latents = all_drug_latents(state.params, train);
  const Matrix disease_latents = all_disease_latents(state.params, train);

  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(eval_set.pairs.size());
  labels.reserve(eval_set.pairs.size());
  FoldOutcome out;
  for (const auto& p : eval_set.pairs) {
    scores.push_back(sigmoid(
        drug_latents.row(p.drug).dot(disease_latents.row(p.disease))));
    labels.push_back(p.label);
    if (p.label == 1) {
      out.tested_positives.emplace_back(p.drug, p.disease);
    } else {
      ++out.zero_pairs;
    }
  }

  out.metrics.fold = fold;
  out.metrics.auc = auc(scores, labels);
  out.metrics.aupr = aupr(scores, labels);
  out.metrics.f1 = f1(scores, labels, 0.5);
  if (sweep) {
    const F1Sweep s = f1_sweep(scores, labels);
    out.metrics.f1_best = s.best_f1;
    out.metrics.f1_best_threshold = s.best_threshold;
  }
  out.history = state.history;
  return out;
}

}  // namespace

CrossValidateResult cross_validate(const Dataset& dataset,
                                   const TrainConfig& config,
                                   const FeaturizeConfig& featurize_config,
                                   const CrossValidateOptions& options) {
  dataset.validate();
  TrainConfig effective = config;
  switch (options.variant) {
    case Variant::kSsldr:
      break;
    case Variant::kSsldrM:
      effective.alpha = 0.0;
      effective.aux_enabled = false;
      break;
    case Variant::kSsldrA:
      effective.beta = 0.0;
      break;
  }
  effective.validate();

  ViewVectors views;
  const bool aux_active = effective.aux_enabled && effective.alpha != 0.0;
  if (aux_active) {
    views = featurize_all(dataset, featurize_config);
  }

  const FoldPlan plan = split_folds(dataset, options.num_folds, config.seed);

  std::vector<FoldOutcome> outcomes(std::size_t(options.num_folds));
  std::vector<std::exception_ptr> errors(std::size_t(options.num_folds));
  auto worker = [&](int fold) {
    try {
      TrainConfig fold_config = effective;
      fold_config.seed = config.seed + std::uint64_t(fold);
      outcomes[std::size_t(fold)] =
          run_fold(dataset, plan, fold, fold_config,
                   aux_active ? &views : nullptr, options.f1_sweep);
    } catch (...) {
      errors[std::size_t(fold)] = std::current_exception();
    }
  };

  const int workers =
      std::max(1, std::min(options.parallel_folds, options.num_folds));
  if (workers == 1) {
    for (int fold = 0; fold < options.num_folds; ++fold) worker(fold);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const int fold = next.fetch_add(1);
          if (fold >= options.num_folds) break;
          worker(fold);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  for (int fold = 0; fold < options.num_folds; ++fold) {
    if (errors[std::size_t(fold)]) {
      try {
        std::rethrow_exception(errors[std::size_t(fold)]);
      } catch (const Error& e) {
        throw TrainingError("fold " + std::to_string(fold) +
                            " failed: " + e.what());
      }
    }
  }

  CrossValidateResult result;
  result.report.has_sweep = options.f1_sweep;
  result.positive_eval_counts.assign(plan.pairs.size(), 0);
  for (int fold = 0; fold < options.num_folds; ++fold) {
    auto& outcome = outcomes[std::size_t(fold)];
    result.report.folds.push_back(outcome.metrics);
    result.fold_histories.push_back(std::move(outcome.history));
    result.zero_pairs_per_fold.push_back(outcome.zero_pairs);
    for (const auto& pair : outcome.tested_positives) {
      const auto it = std::find(plan.pairs.begin(), plan.pairs.end(), pair);
      if (it != plan.pairs.end()) {
        ++result.positive_eval_counts[std::size_t(it - plan.pairs.begin())];
      }
    }
  }
  result.report.finalize();
  return result;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string Recommendation::to_tsv() const {
  std::string out = "rank\tdisease_id\tscore\n";
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    out += std::to_string(r + 1) + '\t' + ranked[r].first + '\t' +
           format_double(ranked[r].second) + '\n';
  }
  return out;
}

Recommendation recommend_topk(const ModelParams& params,
                              const Dataset& dataset,
                              const std::string& drug_id, int n) {
  if (n < 1) {
    throw ConfigError("recommend_topk: n must be at least 1");
  }
  const auto it =
      std::find(dataset.drug_ids.begin(), dataset.drug_ids.end(), drug_id);
  if (it == dataset.drug_ids.end()) {
    throw LookupError("recommend_topk: unknown drug id '" + drug_id + "'");
  }
  const int drug = int(it - dataset.drug_ids.begin());

  const Matrix drug_latents =
      all_drug_latents(params, dataset.associations);
  const Matrix disease_latents =
      all_disease_latents(params, dataset.associations);

  struct Candidate {
    double score;
    int disease;
  };
  std::vector<Candidate> candidates;
  for (int j = 0; j < dataset.num_diseases(); ++j) {
    if (dataset.associations(drug, j) != 0.0) continue;  // known positive
    candidates.push_back(Candidate{
        sigmoid(drug_latents.row(drug).dot(disease_latents.row(j))), j});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.disease < b.disease;
            });
  Recommendation rec;
  rec.drug_id = drug_id;
  const std::size_t take =
      std::min(std::size_t(n), candidates.size());
  for (std::size_t r = 0; r < take; ++r) {
    rec.ranked.emplace_back(
        dataset.disease_ids[std::size_t(candidates[r].disease)],
        candidates[r].score);
  }
  return rec;
}

}  // namespace ssldr
