#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "ssldr/dataset.hpp"

using namespace ssldr;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ssldr_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("synth_generate hits the requested positive count exactly") {
  const SynthResult synth = synth_generate(100, 80, 0.01, 8, 42);
  CHECK(synth.dataset.positive_pairs().size() == 80);  // round(0.01 * 8000)
  CHECK(synth.dataset.num_drugs() == 100);
  CHECK(synth.dataset.num_diseases() == 80);
}

TEST_CASE("synth_generate is deterministic") {
  const SynthResult a = synth_generate(30, 20, 0.05, 4, 7);
  const SynthResult b = synth_generate(30, 20, 0.05, 4, 7);
  CHECK(a.dataset.associations == b.dataset.associations);
  CHECK(a.dataset.drug_sim == b.dataset.drug_sim);
  CHECK(a.drug_cluster == b.drug_cluster);
  for (int i = 0; i < 30; ++i) {
    CHECK(a.dataset.texts[std::size_t(i)].smiles ==
          b.dataset.texts[std::size_t(i)].smiles);
    CHECK(a.dataset.texts[std::size_t(i)].inchi ==
          b.dataset.texts[std::size_t(i)].inchi);
  }
}

TEST_CASE("synth_generate rejects an infeasible density") {
  CHECK_THROWS_AS(synth_generate(10, 10, 0.01, 4, 1), ConfigError);
}

TEST_CASE("same-cluster drugs share more string tokens than cross-cluster") {
  const SynthResult synth = synth_generate(60, 40, 0.02, 6, 3);
  // Jaccard overlap of character sets, averaged within vs across clusters.
  auto char_set = [](const std::string& s) {
    return std::set<char>(s.begin(), s.end());
  };
  double same_sum = 0.0, cross_sum = 0.0;
  long same_n = 0, cross_n = 0;
  for (int i = 0; i < 60; ++i) {
    const auto set_i = char_set(synth.dataset.texts[std::size_t(i)].smiles);
    for (int j = i + 1; j < 60; ++j) {
      const auto set_j = char_set(synth.dataset.texts[std::size_t(j)].smiles);
      std::set<char> inter, uni;
      std::set_intersection(set_i.begin(), set_i.end(), set_j.begin(),
                            set_j.end(), std::inserter(inter, inter.end()));
      std::set_union(set_i.begin(), set_i.end(), set_j.begin(), set_j.end(),
                     std::inserter(uni, uni.end()));
      const double overlap = double(inter.size()) / double(uni.size());
      if (synth.drug_cluster[std::size_t(i)] ==
          synth.drug_cluster[std::size_t(j)]) {
        same_sum += overlap;
        ++same_n;
      } else {
        cross_sum += overlap;
        ++cross_n;
      }
    }
  }
  CHECK(same_sum / double(same_n) > cross_sum / double(cross_n));
}

TEST_CASE("save then load round-trips the dataset exactly") {
  const fs::path dir = temp_dir("roundtrip");
  const SynthResult synth = synth_generate(25, 15, 0.06, 4, 11);
  save_dataset(synth.dataset, dir.string());
  const Dataset loaded = load_dataset(dir.string());
  CHECK(loaded.drug_ids == synth.dataset.drug_ids);
  CHECK(loaded.disease_ids == synth.dataset.disease_ids);
  CHECK(loaded.associations == synth.dataset.associations);
  CHECK(loaded.drug_sim == synth.dataset.drug_sim);
  CHECK(loaded.disease_sim == synth.dataset.disease_sim);
  for (std::size_t i = 0; i < loaded.texts.size(); ++i) {
    CHECK(loaded.texts[i].smiles == synth.dataset.texts[i].smiles);
    CHECK(loaded.texts[i].inchi == synth.dataset.texts[i].inchi);
  }
  fs::remove_all(dir);
}

TEST_CASE("loading is order-stable") {
  const fs::path dir = temp_dir("stable");
  save_dataset(synth_generate(12, 9, 0.15, 3, 5).dataset, dir.string());
  const Dataset first = load_dataset(dir.string());
  const Dataset second = load_dataset(dir.string());
  CHECK(first.drug_ids == second.drug_ids);
  CHECK(first.associations == second.associations);
  CHECK(first.drug_sim == second.drug_sim);
  fs::remove_all(dir);
}

TEST_CASE("load_dataset names a missing file") {
  const fs::path dir = temp_dir("missing");
  save_dataset(synth_generate(12, 9, 0.15, 3, 5).dataset, dir.string());
  fs::remove(dir / "disease_sim.tsv");
  CHECK_THROWS_WITH_AS(load_dataset(dir.string()),
                       doctest::Contains("disease_sim.tsv"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("load_dataset rejects unknown ids and asymmetric similarity") {
  const fs::path dir = temp_dir("invalid");
  save_dataset(synth_generate(12, 9, 0.15, 3, 5).dataset, dir.string());

  SUBCASE("unknown drug id in associations") {
    std::ofstream out(dir / "associations.tsv", std::ios::app);
    out << "DRXX\tDI01\n";
    out.close();
    CHECK_THROWS_WITH_AS(load_dataset(dir.string()),
                         doctest::Contains("DRXX"), DataError);
  }

  SUBCASE("asymmetric drug similarity") {
    Dataset ds = load_dataset(dir.string());
    ds.drug_sim(1, 2) = 0.9;
    ds.drug_sim(2, 1) = 0.1;
    // Bypass save_dataset validation by writing the file directly.
    std::string text;
    for (int i = 0; i < ds.num_drugs(); ++i) {
      for (int j = 0; j < ds.num_drugs(); ++j) {
        if (j) text += '\t';
        text += std::to_string(ds.drug_sim(i, j));
      }
      text += '\n';
    }
    std::ofstream(dir / "drug_sim.tsv") << text;
    CHECK_THROWS_WITH_AS(load_dataset(dir.string()),
                         doctest::Contains("symmetric"), DataError);
  }

  SUBCASE("no positives at all") {
    std::ofstream(dir / "associations.tsv") << "";
    CHECK_THROWS_AS(load_dataset(dir.string()), DataError);
  }

  fs::remove_all(dir);
}

TEST_CASE("split_folds balances fold sizes and is deterministic") {
  const SynthResult synth = synth_generate(50, 40, 0.0966, 5, 13);
  const auto positives = synth.dataset.positive_pairs();
  const FoldPlan plan = split_folds(synth.dataset, 10, 99);
  const FoldPlan again = split_folds(synth.dataset, 10, 99);
  CHECK(plan.assignments == again.assignments);
  CHECK(plan.pairs == again.pairs);

  std::vector<int> sizes(10, 0);
  for (const int fold : plan.assignments) ++sizes[std::size_t(fold)];
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  CHECK(*hi - *lo <= 1);

  // 1933-positive layout: three folds of 194 and seven of 193.
  // (Checked arithmetically here; the counts are forced by round robin.)
  const int total = int(positives.size());
  int larger = 0;
  for (const int s : sizes) {
    if (s == total / 10 + 1) ++larger;
  }
  CHECK(larger == total % 10);
}

TEST_CASE("every positive lands in exactly one fold") {
  const SynthResult synth = synth_generate(20, 10, 0.1, 3, 17);
  const auto positives = synth.dataset.positive_pairs();
  CHECK(positives.size() == 20);
  const FoldPlan plan = split_folds(synth.dataset, 10, 5);
  std::set<std::pair<int, int>> seen;
  for (int fold = 0; fold < 10; ++fold) {
    const auto fold_pos = plan.fold_positives(fold);
    CHECK(fold_pos.size() == 2);
    for (const auto& p : fold_pos) {
      CHECK(seen.insert(p).second);  // no pair in two folds
    }
  }
  CHECK(seen == std::set<std::pair<int, int>>(positives.begin(),
                                              positives.end()));
}

TEST_CASE("split_folds needs at least as many positives as folds") {
  const SynthResult synth = synth_generate(20, 10, 0.07, 3, 17);  // 14 pos
  CHECK_THROWS_AS(split_folds(synth.dataset, 15, 1), ConfigError);
  CHECK_THROWS_AS(split_folds(synth.dataset, 1, 1), ConfigError);
}

TEST_CASE("make_train_matrix masks exactly the fold's positives") {
  const SynthResult synth = synth_generate(20, 15, 0.08, 3, 23);
  const FoldPlan plan = split_folds(synth.dataset, 5, 4);
  const double total = synth.dataset.associations.sum();
  for (int fold = 0; fold < 5; ++fold) {
    const Matrix train = make_train_matrix(synth.dataset, plan, fold);
    const auto held_out = plan.fold_positives(fold);
    CHECK(train.sum() == total - double(held_out.size()));
    for (const auto& [i, j] : held_out) {
      CHECK(train(i, j) == 0.0);
      CHECK(synth.dataset.associations(i, j) == 1.0);
    }
  }
  CHECK_THROWS_AS(make_train_matrix(synth.dataset, plan, 5), IndexError);
  CHECK_THROWS_AS(make_train_matrix(synth.dataset, plan, -1), IndexError);
}

TEST_CASE("make_eval_set holds the fold positives plus all unknowns") {
  const SynthResult synth = synth_generate(20, 15, 0.08, 3, 23);
  const FoldPlan plan = split_folds(synth.dataset, 5, 4);
  const long zeros =
      20 * 15 - long(synth.dataset.positive_pairs().size());
  for (int fold = 0; fold < 5; ++fold) {
    const EvalSet set = make_eval_set(synth.dataset, plan, fold);
    const auto held_out = plan.fold_positives(fold);
    CHECK(set.pairs.size() == held_out.size() + std::size_t(zeros));

    // No training positive may appear.
    const Matrix train = make_train_matrix(synth.dataset, plan, fold);
    for (const auto& p : set.pairs) {
      CHECK(train(p.drug, p.disease) == 0.0);
      if (p.label == 1) {
        CHECK(synth.dataset.associations(p.drug, p.disease) == 1.0);
      } else {
        CHECK(synth.dataset.associations(p.drug, p.disease) == 0.0);
      }
    }
  }
}

TEST_CASE("train/eval partition covers every positive exactly once") {
  const SynthResult synth = synth_generate(30, 12, 0.1, 4, 29);
  const FoldPlan plan = split_folds(synth.dataset, 6, 8);
  for (const auto& [i, j] : synth.dataset.positive_pairs()) {
    int train_appearances = 0, test_appearances = 0;
    for (int fold = 0; fold < 6; ++fold) {
      const Matrix train = make_train_matrix(synth.dataset, plan, fold);
      if (train(i, j) == 1.0) ++train_appearances;
      const EvalSet set = make_eval_set(synth.dataset, plan, fold);
      for (const auto& p : set.pairs) {
        if (p.drug == i && p.disease == j && p.label == 1) {
          ++test_appearances;
        }
      }
    }
    CHECK(test_appearances == 1);
    CHECK(train_appearances == 5);  // in every other fold's training set
  }
}
