#include "ssldr/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "ssldr/rng.hpp"

namespace ssldr {

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
  return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

Matrix scaled_uniform(int rows, int cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(double(rows));
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  }
  return m;
}

TowerParams init_tower(int input_dim, int hidden, int latent, Rng& rng) {
  TowerParams t;
  t.w1 = scaled_uniform(input_dim, hidden, rng);
  t.b1 = Vector::Zero(hidden);
  t.w2 = scaled_uniform(hidden, latent, rng);
  // Start latents near 1/sqrt(latent) so the prediction inner product
  // d . s begins around 1 instead of latent/4, where the logistic
  // saturates and positives stop contributing gradient.
  t.b2 = Vector::Constant(
      latent, -std::log(std::max(1.0, std::sqrt(double(latent)) - 1.0)));
  t.v1 = scaled_uniform(latent, latent, rng);
  t.b3 = Vector::Zero(latent);
  t.v2 = scaled_uniform(latent, latent, rng);
  t.b4 = Vector::Zero(latent);
  t.v3 = scaled_uniform(latent, input_dim, rng);
  // Association rows are overwhelmingly zero; start reconstructions low.
  t.b5 = Vector::Constant(input_dim, -3.0);
  return t;
}

TowerParams zero_tower_like(const TowerParams& t) {
  TowerParams z;
  z.w1 = Matrix::Zero(t.w1.rows(), t.w1.cols());
  z.b1 = Vector::Zero(t.b1.size());
  z.w2 = Matrix::Zero(t.w2.rows(), t.w2.cols());
  z.b2 = Vector::Zero(t.b2.size());
  z.v1 = Matrix::Zero(t.v1.rows(), t.v1.cols());
  z.b3 = Vector::Zero(t.b3.size());
  z.v2 = Matrix::Zero(t.v2.rows(), t.v2.cols());
  z.b4 = Vector::Zero(t.b4.size());
  z.v3 = Matrix::Zero(t.v3.rows(), t.v3.cols());
  z.b5 = Vector::Zero(t.b5.size());
  return z;
}

// Batched tower pass; rows of x are instances.
struct TowerBatch {
  Matrix x;   // B x in
  Matrix a;   // B x hidden
  Matrix d;   // B x latent
  Matrix a1;  // decoder activations (empty when encode-only)
  Matrix u1;
  Matrix a2;
  Matrix u2;
  Matrix r;  // B x in reconstructions
};

TowerBatch tower_forward(const TowerParams& t, Matrix x, double beta,
                         bool decode) {
  if (x.cols() != t.w1.rows()) {
    throw DimensionError("tower input width " + std::to_string(x.cols()) +
                         " does not match W1 rows " +
                         std::to_string(t.w1.rows()));
  }
  TowerBatch f;
  f.x = std::move(x);
  f.a = sigmoid(Matrix((f.x * t.w1).rowwise() + t.b1.transpose()));
  f.d = sigmoid(Matrix((f.a * t.w2).rowwise() + t.b2.transpose()));
  if (decode) {
    f.a1 = sigmoid(Matrix((f.d * t.v1).rowwise() + t.b3.transpose()));
    f.u1 = f.a1 + beta * f.d;
    f.a2 = sigmoid(Matrix((f.u1 * t.v2).rowwise() + t.b4.transpose()));
    f.u2 = f.a2 + beta * f.d;
    f.r = sigmoid(Matrix((f.u2 * t.v3).rowwise() + t.b5.transpose()));
  }
  return f;
}

// Accumulates gradients for one tower given upstream gradients on the
// reconstructions (g_recon, may be null) and on the latents (g_latent).
// Returns the gradient w.r.t. the inputs when requested (adapter path).
Matrix tower_backward(const TowerParams& t, double beta, const TowerBatch& f,
                      const Matrix* g_recon, const Matrix& g_latent,
                      TowerParams& g, bool want_input_grad) {
  Matrix g_d = g_latent;
  if (g_recon != nullptr) {
    const Matrix d5 =
        g_recon->cwiseProduct(f.r.cwiseProduct(Matrix(1.0 - f.r.array())));
    g.v3.noalias() += f.u2.transpose() * d5;
    g.b5 += d5.colwise().sum().transpose();
    const Matrix g_u2 = d5 * t.v3.transpose();
    g_d += beta * g_u2;
    const Matrix d4 =
        g_u2.cwiseProduct(f.a2.cwiseProduct(Matrix(1.0 - f.a2.array())));
    g.v2.noalias() += f.u1.transpose() * d4;
    g.b4 += d4.colwise().sum().transpose();
    const Matrix g_u1 = d4 * t.v2.transpose();
    g_d += beta * g_u1;
    const Matrix d3 =
        g_u1.cwiseProduct(f.a1.cwiseProduct(Matrix(1.0 - f.a1.array())));
    g.v1.noalias() += f.d.transpose() * d3;
    g.b3 += d3.colwise().sum().transpose();
    g_d += d3 * t.v1.transpose();
  }
  const Matrix d2 =
      g_d.cwiseProduct(f.d.cwiseProduct(Matrix(1.0 - f.d.array())));
  g.w2.noalias() += f.a.transpose() * d2;
  g.b2 += d2.colwise().sum().transpose();
  const Matrix g_a = d2 * t.w2.transpose();
  const Matrix d1 =
      g_a.cwiseProduct(f.a.cwiseProduct(Matrix(1.0 - f.a.array())));
  g.w1.noalias() += f.x.transpose() * d1;
  g.b1 += d1.colwise().sum().transpose();
  if (!want_input_grad) return Matrix();
  return d1 * t.w1.transpose();
}

std::vector<int> distinct_sorted(std::vector<int> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

int index_of(const std::vector<int>& sorted, int value) {
  return int(std::lower_bound(sorted.begin(), sorted.end(), value) -
             sorted.begin());
}

template <typename Params, typename Fn>
void visit_blocks(Params& p, bool include_adapters, Fn&& fn) {
  auto tower = [&](auto& t) {
    fn(t.w1);
    fn(t.b1);
    fn(t.w2);
    fn(t.b2);
    fn(t.v1);
    fn(t.b3);
    fn(t.v2);
    fn(t.b4);
    fn(t.v3);
    fn(t.b5);
  };
  tower(p.drug_tower);
  tower(p.disease_tower);
  if (include_adapters) {
    fn(p.adapters.a_smiles);
    fn(p.adapters.c_smiles);
    fn(p.adapters.a_inchi);
    fn(p.adapters.c_inchi);
  }
}

}  // namespace

ModelParams init_model(int num_drugs, int num_diseases, int smiles_dim,
                       int inchi_dim, const ModelHyper& hyper,
                       std::uint64_t seed) {
  if (num_drugs < 1 || num_diseases < 1) {
    throw ConfigError("init_model: drug and disease counts must be positive");
  }
  if (hyper.latent_dim < 1 || hyper.hidden_dim < 1) {
    throw ConfigError("init_model: latent and hidden dims must be positive");
  }
  if (hyper.alpha < 0.0 || hyper.beta < 0.0 || hyper.lambda < 0.0) {
    throw ConfigError("init_model: alpha, beta and lambda must be >= 0");
  }
  ModelParams p;
  p.hyper = hyper;
  p.seed = seed;
  Rng rng(seed);
  p.drug_tower =
      init_tower(num_diseases, hyper.hidden_dim, hyper.latent_dim, rng);
  p.disease_tower =
      init_tower(num_drugs, hyper.hidden_dim, hyper.latent_dim, rng);
  if (hyper.aux_enabled) {
    if (smiles_dim < 1 || inchi_dim < 1) {
      throw ConfigError(
          "init_model: view feature dims required when auxiliary enabled");
    }
    p.adapters.a_smiles = scaled_uniform(smiles_dim, num_diseases, rng);
    p.adapters.c_smiles = Vector::Zero(num_diseases);
    p.adapters.a_inchi = scaled_uniform(inchi_dim, num_diseases, rng);
    p.adapters.c_inchi = Vector::Zero(num_diseases);
  }
  return p;
}

Vector encode(const TowerParams& tower, const Vector& x) {
  if (x.size() != tower.w1.rows()) {
    throw DimensionError("encode: input length " + std::to_string(x.size()) +
                         " does not match tower input dim " +
                         std::to_string(tower.w1.rows()));
  }
  const Vector hidden = sigmoid(Vector(tower.w1.transpose() * x + tower.b1));
  return sigmoid(Vector(tower.w2.transpose() * hidden + tower.b2));
}

Vector decode_multi(const TowerParams& tower, const Vector& latent,
                    double beta) {
  if (latent.size() != tower.v1.rows()) {
    throw DimensionError("decode_multi: latent length " +
                         std::to_string(latent.size()) +
                         " does not match decoder dim " +
                         std::to_string(tower.v1.rows()));
  }
  const Vector u1 =
      sigmoid(Vector(tower.v1.transpose() * latent + tower.b3)) +
      beta * latent;
  const Vector u2 =
      sigmoid(Vector(tower.v2.transpose() * u1 + tower.b4)) + beta * latent;
  return sigmoid(Vector(tower.v3.transpose() * u2 + tower.b5));
}

double predict(const Vector& drug_latent, const Vector& disease_latent) {
  if (drug_latent.size() != disease_latent.size()) {
    throw DimensionError("predict: latent lengths differ, " +
                         std::to_string(drug_latent.size()) + " vs " +
                         std::to_string(disease_latent.size()));
  }
  return sigmoid(drug_latent.dot(disease_latent));
}

int select_negative(int drug, const Matrix& drug_sim) {
  const int n = int(drug_sim.rows());
  if (n < 2) {
    throw ConfigError("select_negative: need at least two drugs");
  }
  if (drug < 0 || drug >= n) {
    throw IndexError("select_negative: drug index out of range");
  }
  int best = -1;
  double best_sim = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    if (j == drug) continue;
    if (drug_sim(drug, j) < best_sim) {
      best_sim = drug_sim(drug, j);
      best = j;
    }
  }
  return best;
}

namespace {

Vector view_to_input(const Matrix& adapter, const Vector& bias,
                     const Vector& view) {
  if (view.size() != adapter.rows()) {
    throw DimensionError("view adapter expects feature dim " +
                         std::to_string(adapter.rows()) + ", got " +
                         std::to_string(view.size()));
  }
  return adapter.transpose() * view + bias;
}

Vector maybe_normalize(Vector v, bool normalize) {
  if (!normalize) return v;
  return v / v.norm();
}

}  // namespace

AuxLatents aux_latents(const ModelParams& params, const ViewVectors& views,
                       int drug, int negative) {
  if (drug < 0 || drug >= views.smiles.rows() || negative < 0 ||
      negative >= views.smiles.rows()) {
    throw InputError("aux_latents: drug index without view vectors");
  }
  const auto& ad = params.adapters;
  const bool norm = params.hyper.normalize_aux;
  AuxLatents z;
  z.target_smiles = maybe_normalize(
      encode(params.drug_tower,
             view_to_input(ad.a_smiles, ad.c_smiles,
                           views.smiles.row(drug).transpose())),
      norm);
  z.target_inchi = maybe_normalize(
      encode(params.drug_tower,
             view_to_input(ad.a_inchi, ad.c_inchi,
                           views.inchi.row(drug).transpose())),
      norm);
  z.negative_smiles = maybe_normalize(
      encode(params.drug_tower,
             view_to_input(ad.a_smiles, ad.c_smiles,
                           views.smiles.row(negative).transpose())),
      norm);
  z.negative_inchi = maybe_normalize(
      encode(params.drug_tower,
             view_to_input(ad.a_inchi, ad.c_inchi,
                           views.inchi.row(negative).transpose())),
      norm);
  return z;
}

double loss_auxiliary(const Vector& target_smiles, const Vector& target_inchi,
                      const Vector& negative_smiles,
                      const Vector& negative_inchi) {
  return (target_smiles - target_inchi).squaredNorm() -
         (target_smiles - negative_smiles).squaredNorm() -
         (target_smiles - negative_inchi).squaredNorm();
}

double loss_auxiliary(const AuxLatents& z) {
  return loss_auxiliary(z.target_smiles, z.target_inchi, z.negative_smiles,
                        z.negative_inchi);
}

double loss_reconstruction(const Vector& reconstruction,
                           const Vector& target) {
  if (reconstruction.size() != target.size()) {
    throw DimensionError("loss_reconstruction: length mismatch");
  }
  return (reconstruction - target).squaredNorm();
}

ModelGrads zero_grads_like(const ModelParams& params) {
  ModelGrads g;
  g.drug_tower = zero_tower_like(params.drug_tower);
  g.disease_tower = zero_tower_like(params.disease_tower);
  if (params.hyper.aux_enabled) {
    g.adapters.a_smiles = Matrix::Zero(params.adapters.a_smiles.rows(),
                                       params.adapters.a_smiles.cols());
    g.adapters.c_smiles = Vector::Zero(params.adapters.c_smiles.size());
    g.adapters.a_inchi = Matrix::Zero(params.adapters.a_inchi.rows(),
                                      params.adapters.a_inchi.cols());
    g.adapters.c_inchi = Vector::Zero(params.adapters.c_inchi.size());
  }
  return g;
}

namespace {

// Auxiliary branch of the joint objective: encode adapter-mapped views of
// the distinct batch drugs plus their negatives through the shared drug
// tower, evaluate the contrastive terms, and backpropagate into the tower
// and adapters. Gradients carry the full alpha / count weight; the returned
// value is the unweighted mean auxiliary loss.
double aux_forward_backward(const ModelParams& params, double alpha,
                            const std::vector<int>& drugs,
                            const std::vector<int>& negatives,
                            const ViewVectors& views, ModelGrads* grads) {
  const int count = int(drugs.size());
  const auto& ad = params.adapters;
  const bool norm = params.hyper.normalize_aux;

  Matrix view_s(2 * count, views.smiles.cols());
  Matrix view_i(2 * count, views.inchi.cols());
  for (int t = 0; t < count; ++t) {
    view_s.row(t) = views.smiles.row(drugs[std::size_t(t)]);
    view_s.row(count + t) = views.smiles.row(negatives[std::size_t(t)]);
    view_i.row(t) = views.inchi.row(drugs[std::size_t(t)]);
    view_i.row(count + t) = views.inchi.row(negatives[std::size_t(t)]);
  }
  const Matrix q_s =
      Matrix((view_s * ad.a_smiles).rowwise() + ad.c_smiles.transpose());
  const Matrix q_i =
      Matrix((view_i * ad.a_inchi).rowwise() + ad.c_inchi.transpose());

  const TowerBatch f_s = tower_forward(params.drug_tower, q_s, 0.0, false);
  const TowerBatch f_i = tower_forward(params.drug_tower, q_i, 0.0, false);

  Vector norm_s = Vector::Ones(2 * count);
  Vector norm_i = Vector::Ones(2 * count);
  Matrix z_s = f_s.d;
  Matrix z_i = f_i.d;
  if (norm) {
    for (int r = 0; r < 2 * count; ++r) {
      norm_s[r] = f_s.d.row(r).norm();
      z_s.row(r) /= norm_s[r];
      norm_i[r] = f_i.d.row(r).norm();
      z_i.row(r) /= norm_i[r];
    }
  }

  double aux_sum = 0.0;
  Matrix gz_s = Matrix::Zero(2 * count, z_s.cols());
  Matrix gz_i = Matrix::Zero(2 * count, z_i.cols());
  const double weight = alpha / double(count);
  for (int t = 0; t < count; ++t) {
    const auto zi = z_s.row(t);           // z_i
    const auto zi_alt = z_i.row(t);       // z_i'
    const auto zk = z_s.row(count + t);   // z_k
    const auto zk_alt = z_i.row(count + t);
    aux_sum += (zi - zi_alt).squaredNorm() - (zi - zk).squaredNorm() -
               (zi - zk_alt).squaredNorm();
    if (grads != nullptr) {
      gz_s.row(t) += weight * (2.0 * (zi - zi_alt) - 2.0 * (zi - zk) -
                               2.0 * (zi - zk_alt));
      gz_i.row(t) += weight * (-2.0 * (zi - zi_alt));
      gz_s.row(count + t) += weight * (2.0 * (zi - zk));
      gz_i.row(count + t) += weight * (2.0 * (zi - zk_alt));
    }
  }

  if (grads != nullptr) {
    // Through the normalization: g_e = (g_z - (g_z . z) z) / ||e||.
    if (norm) {
      for (int r = 0; r < 2 * count; ++r) {
        gz_s.row(r) =
            (gz_s.row(r) - gz_s.row(r).dot(z_s.row(r)) * z_s.row(r)) /
            norm_s[r];
        gz_i.row(r) =
            (gz_i.row(r) - gz_i.row(r).dot(z_i.row(r)) * z_i.row(r)) /
            norm_i[r];
      }
    }
    const Matrix gq_s = tower_backward(params.drug_tower, 0.0, f_s, nullptr,
                                       gz_s, grads->drug_tower, true);
    const Matrix gq_i = tower_backward(params.drug_tower, 0.0, f_i, nullptr,
                                       gz_i, grads->drug_tower, true);
    grads->adapters.a_smiles.noalias() += view_s.transpose() * gq_s;
    grads->adapters.c_smiles += gq_s.colwise().sum().transpose();
    grads->adapters.a_inchi.noalias() += view_i.transpose() * gq_i;
    grads->adapters.c_inchi += gq_i.colwise().sum().transpose();
  }
  return aux_sum / double(count);
}

}  // namespace

LossBreakdown forward_backward(const ModelParams& params,
                               std::span<const EvalPair> batch,
                               const Matrix& train_matrix,
                               const ViewVectors* views,
                               const std::vector<int>* negative_by_drug,
                               ModelGrads* grads) {
  if (batch.empty()) {
    throw InputError("forward_backward: empty batch");
  }
  const int n = int(train_matrix.rows());
  const int m = int(train_matrix.cols());
  std::vector<int> drug_list, disease_list;
  drug_list.reserve(batch.size());
  disease_list.reserve(batch.size());
  for (const auto& p : batch) {
    if (p.drug < 0 || p.drug >= n || p.disease < 0 || p.disease >= m) {
      throw IndexError("forward_backward: pair index out of range");
    }
    if (p.label != 0 && p.label != 1) {
      throw InputError("forward_backward: labels must be 0 or 1");
    }
    drug_list.push_back(p.drug);
    disease_list.push_back(p.disease);
  }
  drug_list = distinct_sorted(std::move(drug_list));
  disease_list = distinct_sorted(std::move(disease_list));
  const int num_d = int(drug_list.size());
  const int num_s = int(disease_list.size());
  const double batch_size = double(batch.size());
  const double lambda = params.hyper.lambda;
  const double beta = params.hyper.beta;

  Matrix x_d(num_d, m);
  for (int t = 0; t < num_d; ++t) {
    x_d.row(t) = train_matrix.row(drug_list[std::size_t(t)]);
  }
  Matrix x_s(num_s, n);
  for (int t = 0; t < num_s; ++t) {
    x_s.row(t) = train_matrix.col(disease_list[std::size_t(t)]).transpose();
  }

  const TowerBatch f_d = tower_forward(params.drug_tower, x_d, beta, true);
  const TowerBatch f_s = tower_forward(params.disease_tower, x_s, beta, true);

  LossBreakdown out;

  // Cross-entropy coupling of the two towers' latents.
  Matrix g_lat_d = Matrix::Zero(num_d, f_d.d.cols());
  Matrix g_lat_s = Matrix::Zero(num_s, f_s.d.cols());
  std::vector<double> drug_pair_count(std::size_t(num_d), 0.0);
  std::vector<double> disease_pair_count(std::size_t(num_s), 0.0);
  for (const auto& p : batch) {
    const int di = index_of(drug_list, p.drug);
    const int sj = index_of(disease_list, p.disease);
    drug_pair_count[std::size_t(di)] += 1.0;
    disease_pair_count[std::size_t(sj)] += 1.0;
    const double score = f_d.d.row(di).dot(f_s.d.row(sj));
    const double prob = clamp_prob(sigmoid(score));
    out.bce -= (p.label == 1 ? std::log(prob) : std::log(1.0 - prob));
    if (grads != nullptr) {
      // Gradient of the unclamped objective w.r.t. the raw score.
      const double coeff =
          (sigmoid(score) - double(p.label)) / batch_size;
      g_lat_d.row(di) += coeff * f_s.d.row(sj);
      g_lat_s.row(sj) += coeff * f_d.d.row(di);
    }
  }
  out.bce /= batch_size;

  // Reconstruction terms, weighted by how often each row/column appears.
  Matrix g_rec_d(num_d, m), g_rec_s(num_s, n);
  for (int t = 0; t < num_d; ++t) {
    const double w = lambda * drug_pair_count[std::size_t(t)] / batch_size;
    out.recon += w * (f_d.r.row(t) - x_d.row(t)).squaredNorm();
    if (grads != nullptr) {
      g_rec_d.row(t) = (2.0 * w) * (f_d.r.row(t) - x_d.row(t));
    }
  }
  for (int t = 0; t < num_s; ++t) {
    const double w = lambda * disease_pair_count[std::size_t(t)] / batch_size;
    out.recon += w * (f_s.r.row(t) - x_s.row(t)).squaredNorm();
    if (grads != nullptr) {
      g_rec_s.row(t) = (2.0 * w) * (f_s.r.row(t) - x_s.row(t));
    }
  }

  if (grads != nullptr) {
    tower_backward(params.drug_tower, beta, f_d, &g_rec_d, g_lat_d,
                   grads->drug_tower, false);
    tower_backward(params.disease_tower, beta, f_s, &g_rec_s, g_lat_s,
                   grads->disease_tower, false);
  }

  const bool aux_active =
      params.hyper.aux_enabled && params.hyper.alpha != 0.0;
  if (aux_active) {
    if (views == nullptr || negative_by_drug == nullptr) {
      throw ConfigError(
          "forward_backward: auxiliary task requires views and negatives");
    }
    std::vector<int> negs(drug_list.size());
    for (std::size_t t = 0; t < drug_list.size(); ++t) {
      negs[t] = (*negative_by_drug)[std::size_t(drug_list[t])];
    }
    const double mean_aux = aux_forward_backward(
        params, params.hyper.alpha, drug_list, negs, *views, grads);
    out.aux = params.hyper.alpha * mean_aux;
  }

  out.total = out.bce + out.recon + out.aux;
  return out;
}

double loss_main(std::span<const EvalPair> batch, const ModelParams& params,
                 const Matrix& train_matrix) {
  ModelParams main_only = params;
  main_only.hyper.alpha = 0.0;
  const LossBreakdown b =
      forward_backward(main_only, batch, train_matrix, nullptr, nullptr,
                       nullptr);
  return b.total;
}

double loss_total(std::span<const EvalPair> batch, const ModelParams& params,
                  const Matrix& train_matrix, const ViewVectors* views,
                  const Matrix& drug_sim) {
  const bool aux_active =
      params.hyper.aux_enabled && params.hyper.alpha != 0.0;
  std::vector<int> negatives;
  if (aux_active) {
    negatives.resize(std::size_t(train_matrix.rows()));
    for (int i = 0; i < int(train_matrix.rows()); ++i) {
      negatives[std::size_t(i)] = select_negative(i, drug_sim);
    }
  }
  const LossBreakdown b = forward_backward(
      params, batch, train_matrix, views, aux_active ? &negatives : nullptr,
      nullptr);
  return b.total;
}

Matrix all_drug_latents(const ModelParams& params,
                        const Matrix& train_matrix) {
  return tower_forward(params.drug_tower, train_matrix, 0.0, false).d;
}

Matrix all_disease_latents(const ModelParams& params,
                           const Matrix& train_matrix) {
  return tower_forward(params.disease_tower, Matrix(train_matrix.transpose()),
                       0.0, false)
      .d;
}

Eigen::Index param_count(const ModelParams& params) {
  Eigen::Index total = 0;
  visit_blocks(const_cast<ModelParams&>(params), params.hyper.aux_enabled,
               [&](auto& block) { total += block.size(); });
  return total;
}

Vector flatten_params(const ModelParams& params) {
  Vector flat(param_count(params));
  Eigen::Index offset = 0;
  visit_blocks(const_cast<ModelParams&>(params), params.hyper.aux_enabled,
               [&](auto& block) {
                 std::memcpy(flat.data() + offset, block.data(),
                             std::size_t(block.size()) * sizeof(double));
                 offset += block.size();
               });
  return flat;
}

void unflatten_params(const Vector& flat, ModelParams& params) {
  if (flat.size() != param_count(params)) {
    throw DimensionError("unflatten_params: flat vector has wrong length");
  }
  Eigen::Index offset = 0;
  visit_blocks(params, params.hyper.aux_enabled, [&](auto& block) {
    std::memcpy(block.data(), flat.data() + offset,
                std::size_t(block.size()) * sizeof(double));
    offset += block.size();
  });
}

Vector flatten_grads(const ModelGrads& grads, bool include_adapters) {
  Eigen::Index total = 0;
  visit_blocks(const_cast<ModelGrads&>(grads), include_adapters,
               [&](auto& block) { total += block.size(); });
  Vector flat(total);
  Eigen::Index offset = 0;
  visit_blocks(const_cast<ModelGrads&>(grads), include_adapters,
               [&](auto& block) {
                 std::memcpy(flat.data() + offset, block.data(),
                             std::size_t(block.size()) * sizeof(double));
                 offset += block.size();
               });
  return flat;
}

GradientCheck check_gradients(const ModelParams& params,
                              std::span<const EvalPair> batch,
                              const Matrix& train_matrix,
                              const ViewVectors* views,
                              const Matrix& drug_sim, double eps) {
  const bool aux_active =
      params.hyper.aux_enabled && params.hyper.alpha != 0.0;
  std::vector<int> negatives;
  if (aux_active) {
    negatives.resize(std::size_t(train_matrix.rows()));
    for (int i = 0; i < int(train_matrix.rows()); ++i) {
      negatives[std::size_t(i)] = select_negative(i, drug_sim);
    }
  }

  GradientCheck result;
  ModelGrads grads = zero_grads_like(params);
  forward_backward(params, batch, train_matrix,
                   aux_active ? views : nullptr,
                   aux_active ? &negatives : nullptr, &grads);
  result.analytic = flatten_grads(grads, params.hyper.aux_enabled);

  ModelParams probe = params;
  const auto loss_at = [&](const Vector& flat) {
    unflatten_params(flat, probe);
    return forward_backward(probe, batch, train_matrix,
                            aux_active ? views : nullptr,
                            aux_active ? &negatives : nullptr, nullptr)
        .total;
  };
  result.numeric = finite_diff_grad(loss_at, flatten_params(params), eps);

  for (Eigen::Index i = 0; i < result.analytic.size(); ++i) {
    const double gap = relative_gap(result.analytic[i], result.numeric[i]);
    if (gap > result.max_relative_error) {
      result.max_relative_error = gap;
      result.worst_index = i;
    }
  }
  return result;
}

GradcheckSetup make_gradcheck_toy(int num_drugs, int num_diseases,
                                  const ModelHyper& hyper,
                                  std::uint64_t seed) {
  Rng rng(seed);
  GradcheckSetup setup;
  const int smiles_dim = 6;
  const int inchi_dim = 7;
  setup.params = init_model(num_drugs, num_diseases, smiles_dim, inchi_dim,
                            hyper, seed);
  // Randomize every parameter (biases included) so the check probes a
  // generic point rather than the zero-bias initialization.
  Vector flat(param_count(setup.params));
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    flat[i] = rng.uniform(-0.5, 0.5);
  }
  unflatten_params(flat, setup.params);

  setup.train.resize(num_drugs, num_diseases);
  for (int i = 0; i < num_drugs; ++i) {
    for (int j = 0; j < num_diseases; ++j) {
      setup.train(i, j) = rng.uniform() < 0.3 ? 1.0 : 0.0;
      setup.batch.push_back(
          EvalPair{i, j, setup.train(i, j) != 0.0 ? 1 : 0});
    }
  }
  setup.views.smiles.resize(num_drugs, smiles_dim);
  setup.views.inchi.resize(num_drugs, inchi_dim);
  for (int i = 0; i < num_drugs; ++i) {
    for (int d = 0; d < smiles_dim; ++d) {
      setup.views.smiles(i, d) = rng.uniform(-1.0, 1.0);
    }
    for (int d = 0; d < inchi_dim; ++d) {
      setup.views.inchi(i, d) = rng.uniform(-1.0, 1.0);
    }
  }
  setup.drug_sim.resize(num_drugs, num_drugs);
  for (int i = 0; i < num_drugs; ++i) {
    setup.drug_sim(i, i) = 1.0;
    for (int j = i + 1; j < num_drugs; ++j) {
      const double v = rng.uniform();
      setup.drug_sim(i, j) = v;
      setup.drug_sim(j, i) = v;
    }
  }
  return setup;
}

namespace {

constexpr char kCheckpointMagic[8] = {'S', 'S', 'L', 'D',
                                      'R', 'C', 'K', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("checkpoint: truncated file");
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod(out, std::int32_t(1));  // version
  write_pod(out, std::int32_t(params.num_drugs()));
  write_pod(out, std::int32_t(params.num_diseases()));
  write_pod(out, std::int32_t(params.hyper.latent_dim));
  write_pod(out, std::int32_t(params.hyper.hidden_dim));
  const std::int32_t smiles_dim =
      params.hyper.aux_enabled ? std::int32_t(params.adapters.a_smiles.rows())
                               : 0;
  const std::int32_t inchi_dim =
      params.hyper.aux_enabled ? std::int32_t(params.adapters.a_inchi.rows())
                               : 0;
  write_pod(out, smiles_dim);
  write_pod(out, inchi_dim);
  write_pod(out, params.hyper.alpha);
  write_pod(out, params.hyper.beta);
  write_pod(out, params.hyper.lambda);
  write_pod(out, std::uint8_t(params.hyper.aux_enabled ? 1 : 0));
  write_pod(out, std::uint8_t(params.hyper.normalize_aux ? 1 : 0));
  write_pod(out, std::uint64_t(params.seed));
  const Vector flat = flatten_params(params);
  write_pod(out, std::int64_t(flat.size()));
  out.write(reinterpret_cast<const char*>(flat.data()),
            std::streamsize(flat.size()) * std::streamsize(sizeof(double)));
  if (!out) throw DataError("checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot read " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError("checkpoint: bad magic in " + path);
  }
  std::int32_t version = 0;
  read_pod(in, version);
  if (version != 1) {
    throw DataError("checkpoint: unsupported version " +
                    std::to_string(version));
  }
  std::int32_t n = 0, m = 0, latent = 0, hidden = 0, smiles_dim = 0,
               inchi_dim = 0;
  read_pod(in, n);
  read_pod(in, m);
  read_pod(in, latent);
  read_pod(in, hidden);
  read_pod(in, smiles_dim);
  read_pod(in, inchi_dim);
  ModelHyper hyper;
  hyper.latent_dim = latent;
  hyper.hidden_dim = hidden;
  read_pod(in, hyper.alpha);
  read_pod(in, hyper.beta);
  read_pod(in, hyper.lambda);
  std::uint8_t aux = 0, norm = 0;
  read_pod(in, aux);
  read_pod(in, norm);
  hyper.aux_enabled = aux != 0;
  hyper.normalize_aux = norm != 0;
  std::uint64_t seed = 0;
  read_pod(in, seed);
  ModelParams params = init_model(n, m, hyper.aux_enabled ? smiles_dim : 1,
                                  hyper.aux_enabled ? inchi_dim : 1, hyper,
                                  seed);
  params.seed = seed;
  std::int64_t flat_size = 0;
  read_pod(in, flat_size);
  if (flat_size != param_count(params)) {
    throw DataError("checkpoint: parameter count mismatch in " + path);
  }
  Vector flat(flat_size);
  in.read(reinterpret_cast<char*>(flat.data()),
          std::streamsize(flat_size) * std::streamsize(sizeof(double)));
  if (!in) throw DataError("checkpoint: truncated parameters in " + path);
  unflatten_params(flat, params);
  return params;
}

}  // namespace ssldr
