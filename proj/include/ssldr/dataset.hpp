#ifndef SSLDR_DATASET_HPP
#define SSLDR_DATASET_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssldr/matrix.hpp"

namespace ssldr {

// Raw chemical-string record for one drug; the two strings are the two
// augmentation views consumed by the featurizer.
struct DrugText {
  std::string smiles;
  std::string inchi;
};

// A drug-disease association problem instance.
//
// `associations` is the binary matrix R (drugs x diseases). The similarity
// matrices are square, symmetric, unit-diagonal and valued in [0, 1];
// `drug_sim` drives negative selection in the auxiliary task.
struct Dataset {
  std::vector<std::string> drug_ids;
  std::vector<std::string> disease_ids;
  Matrix associations;
  Matrix drug_sim;
  Matrix disease_sim;
  std::vector<DrugText> texts;  // one entry per drug, same order as drug_ids

  int num_drugs() const { return int(drug_ids.size()); }
  int num_diseases() const { return int(disease_ids.size()); }

  // Known associations in row-major (drug, disease) order.
  std::vector<std::pair<int, int>> positive_pairs() const;

  // Throws DataError when any structural invariant is violated.
  void validate() const;
};

// Assignment of every positive pair to one of `num_folds` test folds.
// Produced by a seeded shuffle + round robin, so fold sizes differ by at
// most one and the plan is reproducible.
struct FoldPlan {
  std::uint64_t seed = 0;
  int num_folds = 0;
  std::vector<std::pair<int, int>> pairs;  // all positives, shuffled order
  std::vector<int> assignments;            // fold index per pair

  std::vector<std::pair<int, int>> fold_positives(int fold) const;
};

struct EvalPair {
  int drug;
  int disease;
  int label;  // 1 = held-out positive, 0 = unknown pair
};

// Test view for one fold: that fold's positives plus every unknown pair.
struct EvalSet {
  int fold = 0;
  std::vector<EvalPair> pairs;
};

// Reads the five-file dataset layout from `directory_path`:
//   drugs.tsv         drug_id <tab> smiles <tab> inchi   (header row)
//   diseases.tsv      disease_id                          (header row)
//   associations.tsv  drug_id <tab> disease_id            (no header)
//   drug_sim.tsv      square numeric matrix               (no header)
//   disease_sim.tsv   square numeric matrix               (no header)
// Row and column order follow file order. All invariants are validated.
Dataset load_dataset(const std::string& directory_path);

// Writes the same layout. Doubles are emitted in shortest round-trip form,
// so save -> load reproduces the dataset exactly and output bytes are a
// pure function of the dataset.
void save_dataset(const Dataset& dataset, const std::string& directory_path);

FoldPlan split_folds(const Dataset& dataset, int num_folds,
                     std::uint64_t seed);

// Copy of R with the fold's positives masked to zero.
Matrix make_train_matrix(const Dataset& dataset, const FoldPlan& plan,
                         int fold);

EvalSet make_eval_set(const Dataset& dataset, const FoldPlan& plan, int fold);

// Synthetic dataset with planted structure, for desk-scale experiments:
//  - drugs fall into latent clusters; positives are the top density-quantile
//    of true inner products (stable tie-break by pair index);
//  - similarity matrices are cosine similarities of the true latents mapped
//    to [0, 1];
//  - chemical strings are sampled from cluster-conditional token
//    distributions, so latent-similar drugs share string statistics.
// The planted truth is returned alongside the dataset for use as an oracle.
struct SynthResult {
  Dataset dataset;
  std::vector<int> drug_cluster;  // cluster id per drug
  Matrix drug_latent;             // num_drugs x latent_dim
  Matrix disease_latent;          // num_diseases x latent_dim
};

SynthResult synth_generate(int num_drugs, int num_diseases, double density,
                           int latent_dim, std::uint64_t seed);

}  // namespace ssldr

#endif  // SSLDR_DATASET_HPP
