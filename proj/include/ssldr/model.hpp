#ifndef SSLDR_MODEL_HPP
#define SSLDR_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssldr/dataset.hpp"
#include "ssldr/featurize.hpp"
#include "ssldr/matrix.hpp"

namespace ssldr {

// One autoencoder tower: a two-layer logistic encoder followed by a
// three-layer decoder whose two hidden widths equal the latent width, so the
// latent skip input needs no extra projection.
//
//   latent  d  = s(W2^T s(W1^T x + b1) + b2)
//   rebuild r  = s(V3^T (s(V2^T (s(V1^T d + b3) + beta d) + b4) + beta d) + b5)
//
// beta = 0 reduces the decoder to the plain single-input form.
struct TowerParams {
  Matrix w1;  // input_dim x hidden
  Vector b1;  // hidden
  Matrix w2;  // hidden x latent
  Vector b2;  // latent
  Matrix v1;  // latent x latent
  Vector b3;  // latent
  Matrix v2;  // latent x latent
  Vector b4;  // latent
  Matrix v3;  // latent x input_dim
  Vector b5;  // input_dim

  int input_dim() const { return int(w1.rows()); }
  int hidden_dim() const { return int(w1.cols()); }
  int latent_dim() const { return int(w2.cols()); }
};

// Linear maps taking a pooled string-view vector into the drug encoder's
// input space, one per augmentation view. They exist so the auxiliary task
// can reuse the main drug tower verbatim (shared parameters).
struct ViewAdapters {
  Matrix a_smiles;  // smiles_feat_dim x n_diseases
  Vector c_smiles;  // n_diseases
  Matrix a_inchi;   // inchi_feat_dim x n_diseases
  Vector c_inchi;   // n_diseases
};

struct ModelHyper {
  int latent_dim = 64;    // k
  int hidden_dim = 128;   // h
  double alpha = 0.5;     // auxiliary weight
  double beta = 0.5;      // decoder skip weight
  double lambda = 0.5;    // reconstruction weight
  bool aux_enabled = true;
  bool normalize_aux = true;  // L2-normalize auxiliary latents (Eq. 4 inputs)
};

struct ModelParams {
  TowerParams drug_tower;     // input_dim = n_diseases
  TowerParams disease_tower;  // input_dim = n_drugs
  ViewAdapters adapters;      // populated iff hyper.aux_enabled
  ModelHyper hyper;
  std::uint64_t seed = 0;

  int num_drugs() const { return disease_tower.input_dim(); }
  int num_diseases() const { return drug_tower.input_dim(); }
};

// Seeded scaled-uniform initialization: weights in [-1/sqrt(fan_in),
// +1/sqrt(fan_in)), biases zero. smiles_dim/inchi_dim are ignored when the
// auxiliary task is disabled.
ModelParams init_model(int num_drugs, int num_diseases, int smiles_dim,
                       int inchi_dim, const ModelHyper& hyper,
                       std::uint64_t seed);

// ---- single-instance operations -----------------------------------------

Vector encode(const TowerParams& tower, const Vector& x);

Vector decode_multi(const TowerParams& tower, const Vector& latent,
                    double beta);

// Predicted association probability s(d . s).
double predict(const Vector& drug_latent, const Vector& disease_latent);

// The negative neighbor: argmin over j != i of drug_sim(i, j), ties broken
// by smallest index.
int select_negative(int drug, const Matrix& drug_sim);

struct AuxLatents {
  Vector target_smiles;    // z_i
  Vector target_inchi;     // z_i'
  Vector negative_smiles;  // z_k
  Vector negative_inchi;   // z_k'
};

// The four auxiliary latents for (target drug, negative drug), produced by
// pushing adapter-mapped view vectors through the shared drug tower encoder,
// optionally L2-normalized.
AuxLatents aux_latents(const ModelParams& params, const ViewVectors& views,
                       int drug, int negative);

// Contrastive objective D(z_i, z_i') - D(z_i, z_k) - D(z_i, z_k') with
// D(a, b) = ||a - b||^2.
double loss_auxiliary(const AuxLatents& z);
double loss_auxiliary(const Vector& target_smiles, const Vector& target_inchi,
                      const Vector& negative_smiles,
                      const Vector& negative_inchi);

// Squared reconstruction error ||r_hat - r||^2.
double loss_reconstruction(const Vector& reconstruction, const Vector& target);

// ---- batch loss and gradients --------------------------------------------

// Gradient accumulator mirroring ModelParams' trainable blocks.
struct ModelGrads {
  TowerParams drug_tower;
  TowerParams disease_tower;
  ViewAdapters adapters;
};

ModelGrads zero_grads_like(const ModelParams& params);

struct LossBreakdown {
  double total = 0.0;  // bce + recon + aux
  double bce = 0.0;    // mean clamped cross-entropy over the batch
  double recon = 0.0;  // mean lambda-weighted reconstruction terms
  double aux = 0.0;    // alpha * mean auxiliary loss over distinct drugs
};

// Evaluates the joint objective on a batch and, when `grads` is non-null,
// accumulates analytic gradients for every trainable block (towers shared
// between the main and auxiliary paths, plus the view adapters).
//
// `negative_by_drug` caches select_negative per drug; it may be null when
// the auxiliary term is inactive (alpha == 0 or aux disabled).
LossBreakdown forward_backward(const ModelParams& params,
                               std::span<const EvalPair> batch,
                               const Matrix& train_matrix,
                               const ViewVectors* views,
                               const std::vector<int>* negative_by_drug,
                               ModelGrads* grads);

// Mean over the batch of clamped BCE plus lambda-weighted drug/disease
// reconstruction errors.
double loss_main(std::span<const EvalPair> batch, const ModelParams& params,
                 const Matrix& train_matrix);

// loss_main plus alpha * mean auxiliary loss, negatives chosen from
// drug_sim. alpha == 0 skips the auxiliary computation entirely.
double loss_total(std::span<const EvalPair> batch, const ModelParams& params,
                  const Matrix& train_matrix, const ViewVectors* views,
                  const Matrix& drug_sim);

// Latents for every drug row / disease column of `train_matrix`, one per
// row of the result. Used for scoring and validation.
Matrix all_drug_latents(const ModelParams& params, const Matrix& train_matrix);
Matrix all_disease_latents(const ModelParams& params,
                           const Matrix& train_matrix);

// ---- parameter flattening -------------------------------------------------

// Canonical block order: drug tower (w1 b1 w2 b2 v1 b3 v2 b4 v3 b5),
// disease tower likewise, then adapters (a_smiles c_smiles a_inchi c_inchi)
// when the auxiliary task is enabled.
Eigen::Index param_count(const ModelParams& params);
Vector flatten_params(const ModelParams& params);
void unflatten_params(const Vector& flat, ModelParams& params);
Vector flatten_grads(const ModelGrads& grads, bool include_adapters);

// ---- gradient checking -----------------------------------------------------

struct GradientCheck {
  double max_relative_error = 0.0;
  Eigen::Index worst_index = -1;
  Vector analytic;
  Vector numeric;
};

// Compares the analytic gradient of the joint objective against central
// finite differences over every parameter (towers and adapters).
GradientCheck check_gradients(const ModelParams& params,
                              std::span<const EvalPair> batch,
                              const Matrix& train_matrix,
                              const ViewVectors* views,
                              const Matrix& drug_sim, double eps);

// Small randomized instance (association matrix, view vectors, similarity,
// full-pair batch) for pre-flight gradient checks.
struct GradcheckSetup {
  ModelParams params;
  Matrix train;
  ViewVectors views;
  Matrix drug_sim;
  std::vector<EvalPair> batch;
};

GradcheckSetup make_gradcheck_toy(int num_drugs, int num_diseases,
                                  const ModelHyper& hyper,
                                  std::uint64_t seed);

// ---- checkpoint io ---------------------------------------------------------

// Versioned binary dump of all parameters, hyperparameters and the seed.
// Round-trips bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace ssldr

#endif  // SSLDR_MODEL_HPP
