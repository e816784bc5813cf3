#include <doctest.h>

#include <cmath>

#include "ssldr/eval.hpp"
#include "ssldr/rng.hpp"

using namespace ssldr;

namespace {

// Small, fast experiment setup shared by the cross-validation tests.
struct SmallRun {
  SynthResult synth = synth_generate(40, 25, 0.05, 4, 71);
  TrainConfig config;
  FeaturizeConfig fcfg;
  CrossValidateOptions options;

  SmallRun() {
    config.latent_dim = 8;
    config.encoder_hidden = 12;
    config.max_epochs = 4;
    config.patience = 4;
    config.batch_size = 32;
    config.seed = 5;
    fcfg.skipgram.dim = 8;
    fcfg.skipgram.epochs = 1;
    fcfg.skipgram.seed = 15;
    options.num_folds = 5;
  }
};

}  // namespace

TEST_CASE("variant names round-trip") {
  CHECK(parse_variant("ssldr") == Variant::kSsldr);
  CHECK(parse_variant("ssldr_m") == Variant::kSsldrM);
  CHECK(parse_variant("ssldr_a") == Variant::kSsldrA);
  CHECK(variant_name(Variant::kSsldrA) == "ssldr_a");
  CHECK_THROWS_AS(parse_variant("mf"), ConfigError);
}

TEST_CASE("cross_validate produces a complete, consistent report") {
  SmallRun run;
  const CrossValidateResult result =
      cross_validate(run.synth.dataset, run.config, run.fcfg, run.options);
  REQUIRE(result.report.folds.size() == 5);
  double mean_auc = 0.0;
  for (const auto& f : result.report.folds) {
    CHECK(f.auc >= 0.0);
    CHECK(f.auc <= 1.0);
    CHECK(f.aupr >= 0.0);
    CHECK(f.aupr <= 1.0);
    CHECK(f.f1 >= 0.0);
    CHECK(f.f1 <= 1.0);
    mean_auc += f.auc;
  }
  CHECK(std::abs(result.report.auc.mean - mean_auc / 5.0) < 1e-12);
  REQUIRE(result.fold_histories.size() == 5);
  for (const auto& history : result.fold_histories) {
    CHECK(!history.empty());
  }
}

TEST_CASE("cross_validate covers every positive once and all zeros always") {
  SmallRun run;
  const CrossValidateResult result =
      cross_validate(run.synth.dataset, run.config, run.fcfg, run.options);
  const long zeros =
      40L * 25L - long(run.synth.dataset.positive_pairs().size());
  for (const int count : result.positive_eval_counts) {
    CHECK(count == 1);
  }
  REQUIRE(result.zero_pairs_per_fold.size() == 5);
  for (const long z : result.zero_pairs_per_fold) {
    CHECK(z == zeros);
  }
}

TEST_CASE("ssldr with alpha 0 matches ssldr_m exactly") {
  SmallRun run;
  run.config.alpha = 0.0;
  run.config.aux_enabled = false;
  const CrossValidateResult base =
      cross_validate(run.synth.dataset, run.config, run.fcfg, run.options);
  run.options.variant = Variant::kSsldrM;
  const CrossValidateResult ablated =
      cross_validate(run.synth.dataset, run.config, run.fcfg, run.options);
  CHECK(base.report.to_json() == ablated.report.to_json());
}

TEST_CASE("parallel folds do not change any result") {
  SmallRun run;
  const CrossValidateResult sequential =
      cross_validate(run.synth.dataset, run.config, run.fcfg, run.options);
  run.options.parallel_folds = 3;
  const CrossValidateResult parallel =
      cross_validate(run.synth.dataset, run.config, run.fcfg, run.options);
  CHECK(sequential.report.to_json() == parallel.report.to_json());
}

TEST_CASE("cross_validate is deterministic end to end") {
  SmallRun run;
  const CrossValidateResult first =
      cross_validate(run.synth.dataset, run.config, run.fcfg, run.options);
  const CrossValidateResult second =
      cross_validate(run.synth.dataset, run.config, run.fcfg, run.options);
  CHECK(first.report.to_json() == second.report.to_json());
  CHECK(first.report.to_tsv() == second.report.to_tsv());
}

TEST_CASE("ssldr_a runs with a plain decoder") {
  SmallRun run;
  run.options.variant = Variant::kSsldrA;
  const CrossValidateResult result =
      cross_validate(run.synth.dataset, run.config, run.fcfg, run.options);
  CHECK(result.report.folds.size() == 5);
}

TEST_CASE("f1 sweep columns appear when requested") {
  SmallRun run;
  run.options.f1_sweep = true;
  const CrossValidateResult result =
      cross_validate(run.synth.dataset, run.config, run.fcfg, run.options);
  CHECK(result.report.to_tsv().find("f1_best") != std::string::npos);
  for (const auto& f : result.report.folds) {
    CHECK(f.f1_best >= f.f1 - 1e-12);  // sweep can only improve on 0.5
  }
}

TEST_CASE("recommend_topk ranks unknown diseases only") {
  SmallRun run;
  TrainConfig cfg = run.config;
  cfg.alpha = 0.0;
  cfg.aux_enabled = false;
  cfg.max_epochs = 6;
  const TrainState state =
      fit(run.synth.dataset, run.synth.dataset.associations, nullptr, cfg);

  const std::string drug = run.synth.dataset.drug_ids[2];
  const Recommendation rec =
      recommend_topk(state.params, run.synth.dataset, drug, 5);
  CHECK(rec.drug_id == drug);
  CHECK(rec.ranked.size() == 5);
  for (std::size_t r = 1; r < rec.ranked.size(); ++r) {
    CHECK(rec.ranked[r - 1].second >= rec.ranked[r].second);
  }
  for (const auto& [disease_id, score] : rec.ranked) {
    const auto it = std::find(run.synth.dataset.disease_ids.begin(),
                              run.synth.dataset.disease_ids.end(), disease_id);
    REQUIRE(it != run.synth.dataset.disease_ids.end());
    const int j = int(it - run.synth.dataset.disease_ids.begin());
    CHECK(run.synth.dataset.associations(2, j) == 0.0);
  }

  SUBCASE("asking for more than exists returns all unknowns, no padding") {
    long unknown = 0;
    for (int j = 0; j < 25; ++j) {
      if (run.synth.dataset.associations(2, j) == 0.0) ++unknown;
    }
    const Recommendation all =
        recommend_topk(state.params, run.synth.dataset, drug, 10000);
    CHECK(long(all.ranked.size()) == unknown);
  }

  SUBCASE("unknown drug id is a lookup error") {
    CHECK_THROWS_AS(
        recommend_topk(state.params, run.synth.dataset, "DRXX", 5),
        LookupError);
  }

  SUBCASE("tsv rendering is rank-ordered") {
    const std::string tsv = rec.to_tsv();
    CHECK(tsv.rfind("rank\tdisease_id\tscore\n", 0) == 0);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 6);
  }
}

TEST_CASE("recommendations beat random unknowns on planted truth") {
  const SynthResult synth = synth_generate(50, 30, 0.1, 5, 83);
  TrainConfig cfg;
  cfg.latent_dim = 12;
  cfg.encoder_hidden = 16;
  cfg.alpha = 0.0;
  cfg.aux_enabled = false;
  cfg.max_epochs = 60;
  cfg.patience = 60;
  cfg.seed = 3;
  const TrainState state =
      fit(synth.dataset, synth.dataset.associations, nullptr, cfg);

  // True planted affinity of the recommended pairs should beat the mean
  // over all unknown pairs (the expectation of a random pick). Restricted
  // to drugs with at least two known associations; a drug with an empty
  // row carries no signal to recommend from.
  double top_sum = 0.0, all_sum = 0.0;
  long top_n = 0, all_n = 0;
  for (int i = 0; i < 50; ++i) {
    if (synth.dataset.associations.row(i).sum() < 2.0) continue;
    const Recommendation rec =
        recommend_topk(state.params, synth.dataset, synth.dataset.drug_ids[i],
                       5);
    for (const auto& [disease_id, score] : rec.ranked) {
      const auto it = std::find(synth.dataset.disease_ids.begin(),
                                synth.dataset.disease_ids.end(), disease_id);
      const int j = int(it - synth.dataset.disease_ids.begin());
      top_sum += synth.drug_latent.row(i).dot(synth.disease_latent.row(j));
      ++top_n;
    }
    for (int j = 0; j < 30; ++j) {
      if (synth.dataset.associations(i, j) == 0.0) {
        all_sum += synth.drug_latent.row(i).dot(synth.disease_latent.row(j));
        ++all_n;
      }
    }
  }
  REQUIRE(top_n > 0);
  CHECK(top_sum / double(top_n) > all_sum / double(all_n));
}
