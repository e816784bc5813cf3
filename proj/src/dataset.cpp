#include "ssldr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "ssldr/rng.hpp"

namespace ssldr {

namespace fs = std::filesystem;

namespace {

constexpr double kSymmetryTol = 1e-6;

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("missing or unreadable file: " + path.string());
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

double parse_double(const std::string& text, const fs::path& file, int row) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw DataError("bad numeric field '" + text + "' in " + file.string() +
                    " row " + std::to_string(row));
  }
  return value;
}

Matrix read_square_matrix(const fs::path& path, int n) {
  const auto lines = read_lines(path);
  if (int(lines.size()) != n) {
    throw DataError(path.string() + ": expected " + std::to_string(n) +
                    " rows, found " + std::to_string(lines.size()));
  }
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    const auto fields = split_tabs(lines[i]);
    if (int(fields.size()) != n) {
      throw DataError(path.string() + " row " + std::to_string(i) +
                      ": expected " + std::to_string(n) + " columns, found " +
                      std::to_string(fields.size()));
    }
    for (int j = 0; j < n; ++j) {
      m(i, j) = parse_double(fields[j], path, i);
    }
  }
  return m;
}

void check_similarity(Matrix& sim, const std::string& name) {
  const int n = int(sim.rows());
  for (int i = 0; i < n; ++i) {
    if (std::abs(sim(i, i) - 1.0) > kSymmetryTol) {
      throw DataError(name + ": diagonal entry " + std::to_string(i) +
                      " is not 1.0");
    }
    for (int j = 0; j < n; ++j) {
      const double v = sim(i, j);
      if (!std::isfinite(v) || v < -kSymmetryTol || v > 1.0 + kSymmetryTol) {
        throw DataError(name + ": entry (" + std::to_string(i) + "," +
                        std::to_string(j) + ") outside [0, 1]");
      }
      if (std::abs(v - sim(j, i)) > kSymmetryTol) {
        throw DataError(name + ": not symmetric at (" + std::to_string(i) +
                        "," + std::to_string(j) + ")");
      }
    }
  }
  // Tolerated asymmetry / off-range noise is repaired so the stored matrix
  // satisfies the strict type invariants.
  Matrix sym = 0.5 * (sim + sim.transpose());
  sim = sym.cwiseMax(0.0).cwiseMin(1.0);
  sim.diagonal().setOnes();
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write file: " + path.string());
  }
  out << content;
}

}  // namespace

std::vector<std::pair<int, int>> Dataset::positive_pairs() const {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < num_drugs(); ++i) {
    for (int j = 0; j < num_diseases(); ++j) {
      if (associations(i, j) != 0.0) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

void Dataset::validate() const {
  const int n = num_drugs();
  const int m = num_diseases();
  if (n == 0 || m == 0) {
    throw DataError("dataset has no drugs or no diseases");
  }
  if (associations.rows() != n || associations.cols() != m) {
    throw DataError("association matrix shape does not match id lists");
  }
  if (drug_sim.rows() != n || drug_sim.cols() != n) {
    throw DataError("drug_sim shape does not match drug count");
  }
  if (disease_sim.rows() != m || disease_sim.cols() != m) {
    throw DataError("disease_sim shape does not match disease count");
  }
  if (int(texts.size()) != n) {
    throw DataError("texts missing for some drugs");
  }
  bool any_positive = false;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      const double v = associations(i, j);
      if (v != 0.0 && v != 1.0) {
        throw DataError("association entries must be 0 or 1");
      }
      any_positive = any_positive || v == 1.0;
    }
  }
  if (!any_positive) {
    throw DataError("dataset has no positive associations");
  }
  for (int i = 0; i < n; ++i) {
    if (texts[i].smiles.empty() || texts[i].inchi.empty()) {
      throw DataError("drug " + drug_ids[i] + " has an empty SMILES or InChI");
    }
  }
  auto check_sym = [](const Matrix& s, const std::string& name) {
    if (((s - Matrix(s.transpose())).array().abs() > 1e-9).any()) {
      throw DataError(name + " is not symmetric");
    }
    if ((s.diagonal().array() != 1.0).any()) {
      throw DataError(name + " diagonal is not 1.0");
    }
    if ((s.array() < 0.0).any() || (s.array() > 1.0).any()) {
      throw DataError(name + " has entries outside [0, 1]");
    }
  };
  check_sym(drug_sim, "drug_sim");
  check_sym(disease_sim, "disease_sim");
}

Dataset load_dataset(const std::string& directory_path) {
  const fs::path dir(directory_path);
  Dataset ds;

  // drugs.tsv: header + one row per drug.
  {
    const auto lines = read_lines(dir / "drugs.tsv");
    if (lines.empty() || split_tabs(lines[0]).size() != 3) {
      throw DataError("drugs.tsv: expected header 'drug_id\\tsmiles\\tinchi'");
    }
    for (std::size_t r = 1; r < lines.size(); ++r) {
      const auto f = split_tabs(lines[r]);
      if (f.size() != 3) {
        throw DataError("drugs.tsv row " + std::to_string(r) +
                        ": expected 3 columns");
      }
      ds.drug_ids.push_back(f[0]);
      ds.texts.push_back(DrugText{f[1], f[2]});
    }
  }

  // diseases.tsv: header + one id per row.
  {
    const auto lines = read_lines(dir / "diseases.tsv");
    if (lines.empty()) {
      throw DataError("diseases.tsv: missing header");
    }
    for (std::size_t r = 1; r < lines.size(); ++r) {
      ds.disease_ids.push_back(split_tabs(lines[r])[0]);
    }
  }

  const int n = ds.num_drugs();
  const int m = ds.num_diseases();
  if (n == 0 || m == 0) {
    throw DataError("dataset has no drugs or no diseases");
  }

  std::unordered_map<std::string, int> drug_index, disease_index;
  for (int i = 0; i < n; ++i) drug_index[ds.drug_ids[i]] = i;
  for (int j = 0; j < m; ++j) disease_index[ds.disease_ids[j]] = j;

  // associations.tsv: no header, drug_id <tab> disease_id.
  ds.associations = Matrix::Zero(n, m);
  {
    const fs::path path = dir / "associations.tsv";
    const auto lines = read_lines(path);
    for (std::size_t r = 0; r < lines.size(); ++r) {
      if (lines[r].empty()) continue;
      const auto f = split_tabs(lines[r]);
      if (f.size() != 2) {
        throw DataError("associations.tsv row " + std::to_string(r) +
                        ": expected 2 columns");
      }
      const auto di = drug_index.find(f[0]);
      if (di == drug_index.end()) {
        throw DataError("associations.tsv references unknown drug id '" +
                        f[0] + "'");
      }
      const auto dj = disease_index.find(f[1]);
      if (dj == disease_index.end()) {
        throw DataError("associations.tsv references unknown disease id '" +
                        f[1] + "'");
      }
      if (ds.associations(di->second, dj->second) == 1.0) {
        throw DataError("associations.tsv: duplicate pair " + f[0] + " / " +
                        f[1]);
      }
      ds.associations(di->second, dj->second) = 1.0;
    }
  }

  ds.drug_sim = read_square_matrix(dir / "drug_sim.tsv", n);
  check_similarity(ds.drug_sim, "drug_sim.tsv");
  ds.disease_sim = read_square_matrix(dir / "disease_sim.tsv", m);
  check_similarity(ds.disease_sim, "disease_sim.tsv");

  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& directory_path) {
  dataset.validate();
  const fs::path dir(directory_path);
  fs::create_directories(dir);

  {
    std::string out = "drug_id\tsmiles\tinchi\n";
    for (int i = 0; i < dataset.num_drugs(); ++i) {
      out += dataset.drug_ids[i] + '\t' + dataset.texts[i].smiles + '\t' +
             dataset.texts[i].inchi + '\n';
    }
    write_file(dir / "drugs.tsv", out);
  }
  {
    std::string out = "disease_id\n";
    for (const auto& id : dataset.disease_ids) out += id + '\n';
    write_file(dir / "diseases.tsv", out);
  }
  {
    std::string out;
    for (const auto& [i, j] : dataset.positive_pairs()) {
      out += dataset.drug_ids[i] + '\t' + dataset.disease_ids[j] + '\n';
    }
    write_file(dir / "associations.tsv", out);
  }
  auto write_matrix = [&](const Matrix& m, const char* name) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) out += '\t';
        out += format_double(m(i, j));
      }
      out += '\n';
    }
    write_file(dir / name, out);
  };
  write_matrix(dataset.drug_sim, "drug_sim.tsv");
  write_matrix(dataset.disease_sim, "disease_sim.tsv");
}

std::vector<std::pair<int, int>> FoldPlan::fold_positives(int fold) const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    if (assignments[t] == fold) out.push_back(pairs[t]);
  }
  return out;
}

FoldPlan split_folds(const Dataset& dataset, int num_folds,
                     std::uint64_t seed) {
  if (num_folds < 2) {
    throw ConfigError("split_folds: num_folds must be at least 2");
  }
  FoldPlan plan;
  plan.seed = seed;
  plan.num_folds = num_folds;
  plan.pairs = dataset.positive_pairs();
  if (int(plan.pairs.size()) < num_folds) {
    throw ConfigError("split_folds: only " + std::to_string(plan.pairs.size()) +
                      " positives for " + std::to_string(num_folds) +
                      " folds");
  }
  Rng rng(seed);
  rng.shuffle(plan.pairs);
  plan.assignments.resize(plan.pairs.size());
  for (std::size_t t = 0; t < plan.pairs.size(); ++t) {
    plan.assignments[t] = int(t % std::size_t(num_folds));
  }
  return plan;
}

Matrix make_train_matrix(const Dataset& dataset, const FoldPlan& plan,
                         int fold) {
  if (fold < 0 || fold >= plan.num_folds) {
    throw IndexError("fold index " + std::to_string(fold) + " out of range");
  }
  Matrix train = dataset.associations;
  for (const auto& [i, j] : plan.fold_positives(fold)) {
    train(i, j) = 0.0;
  }
  return train;
}

EvalSet make_eval_set(const Dataset& dataset, const FoldPlan& plan,
                      int fold) {
  if (fold < 0 || fold >= plan.num_folds) {
    throw IndexError("fold index " + std::to_string(fold) + " out of range");
  }
  EvalSet set;
  set.fold = fold;
  for (const auto& [i, j] : plan.fold_positives(fold)) {
    set.pairs.push_back(EvalPair{i, j, 1});
  }
  for (int i = 0; i < dataset.num_drugs(); ++i) {
    for (int j = 0; j < dataset.num_diseases(); ++j) {
      if (dataset.associations(i, j) == 0.0) {
        set.pairs.push_back(EvalPair{i, j, 0});
      }
    }
  }
  return set;
}

namespace {

// Token alphabets for synthetic chemical strings. Multi-character members
// are chosen so that concatenation never fabricates an accidental Cl/Br.
const std::vector<std::string> kSmilesSpecific = {
    "C", "c", "N", "n", "O", "o",  "S",  "s",
    "P", "F", "I", "=", "#", "Cl", "Br", "3"};
const std::vector<std::string> kSmilesShared = {"(", ")", "1", "2"};
const std::vector<std::string> kInchiSpecific = {
    "4", "5", "6", "7", "8", "9", "C", "H",
    "N", "O", "S", "c", "h", "q", "p", "m"};
const std::vector<std::string> kInchiShared = {"/", "-", "1", "2"};

constexpr int kMaxClusters = 4;
constexpr double kSpecificTokenProb = 0.7;

std::string sample_string(Rng& rng, int cluster,
                          const std::vector<std::string>& specific,
                          const std::vector<std::string>& shared) {
  const int pool = int(specific.size()) / kMaxClusters;
  const int base = (cluster % kMaxClusters) * pool;
  const int length = 20 + int(rng.uniform_index(21));  // 20..40 tokens
  std::string s;
  for (int t = 0; t < length; ++t) {
    if (rng.uniform() < kSpecificTokenProb) {
      s += specific[std::size_t(base) + rng.uniform_index(std::uint64_t(pool))];
    } else {
      s += shared[rng.uniform_index(shared.size())];
    }
  }
  return s;
}

Matrix cosine_similarity_01(const Matrix& latents) {
  const int n = int(latents.rows());
  Matrix sim(n, n);
  for (int i = 0; i < n; ++i) {
    sim(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double denom = latents.row(i).norm() * latents.row(j).norm();
      const double c = denom > 0.0 ? latents.row(i).dot(latents.row(j)) / denom
                                   : 0.0;
      const double mapped = std::clamp(0.5 * (c + 1.0), 0.0, 1.0);
      sim(i, j) = mapped;
      sim(j, i) = mapped;
    }
  }
  return sim;
}

std::string zero_padded(int value, int width) {
  std::string s = std::to_string(value);
  if (int(s.size()) < width) s.insert(0, std::size_t(width) - s.size(), '0');
  return s;
}

}  // namespace

SynthResult synth_generate(int num_drugs, int num_diseases, double density,
                           int latent_dim, std::uint64_t seed) {
  if (num_drugs < 1 || num_diseases < 1 || latent_dim < 1) {
    throw ConfigError("synth_generate: counts and latent_dim must be positive");
  }
  if (!(density > 0.0 && density < 1.0)) {
    throw ConfigError("synth_generate: density must lie in (0, 1)");
  }
  const long total = long(num_drugs) * long(num_diseases);
  const long num_positives = std::lround(density * double(total));
  if (density * double(total) < 10.0) {
    throw ConfigError("synth_generate: infeasible density, need at least 10 "
                      "expected positives");
  }

  Rng rng(seed);
  SynthResult out;
  const int num_clusters = std::min(kMaxClusters, num_drugs);

  // Planted latents: drugs and diseases share unit-norm cluster centers, so
  // associations concentrate in matching blocks. Entity norms carry a
  // heavy-tailed "activity" scale; the top density-quantile then lands on
  // a core of active entities with several associations each instead of
  // scattering singletons that a fold mask would erase entirely.
  constexpr double kClusterNoise = 0.25;
  constexpr double kActiveFraction = 0.3;
  constexpr double kInactiveScale = 0.45;
  Matrix centers(num_clusters, latent_dim);
  for (int c = 0; c < num_clusters; ++c) {
    for (int d = 0; d < latent_dim; ++d) centers(c, d) = rng.normal();
    centers.row(c) /= centers.row(c).norm();
  }
  auto sample_member = [&](int cluster) {
    Vector v(latent_dim);
    for (int d = 0; d < latent_dim; ++d) {
      v[d] = centers(cluster, d) + kClusterNoise * rng.normal();
    }
    v /= v.norm();
    if (rng.uniform() >= kActiveFraction) v *= kInactiveScale;
    return v;
  };
  out.drug_latent.resize(num_drugs, latent_dim);
  out.drug_cluster.resize(std::size_t(num_drugs));
  for (int i = 0; i < num_drugs; ++i) {
    const int c = i % num_clusters;
    out.drug_cluster[std::size_t(i)] = c;
    out.drug_latent.row(i) = sample_member(c).transpose();
  }
  out.disease_latent.resize(num_diseases, latent_dim);
  for (int j = 0; j < num_diseases; ++j) {
    out.disease_latent.row(j) = sample_member(j % num_clusters).transpose();
  }

  // Positives: top density-quantile of true inner products, stable
  // tie-break by (drug, disease) index.
  struct Scored {
    double score;
    int i;
    int j;
  };
  std::vector<Scored> scored;
  scored.reserve(std::size_t(total));
  const Matrix scores = out.drug_latent * out.disease_latent.transpose();
  for (int i = 0; i < num_drugs; ++i) {
    for (int j = 0; j < num_diseases; ++j) {
      scored.push_back(Scored{scores(i, j), i, j});
    }
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  Dataset& ds = out.dataset;
  ds.associations = Matrix::Zero(num_drugs, num_diseases);
  for (long t = 0; t < num_positives; ++t) {
    ds.associations(scored[std::size_t(t)].i, scored[std::size_t(t)].j) = 1.0;
  }

  ds.drug_sim = cosine_similarity_01(out.drug_latent);
  ds.disease_sim = cosine_similarity_01(out.disease_latent);

  const int id_width = int(std::to_string(std::max(num_drugs, num_diseases)).size());
  for (int i = 0; i < num_drugs; ++i) {
    ds.drug_ids.push_back("DR" + zero_padded(i, id_width));
    const int c = out.drug_cluster[std::size_t(i)];
    DrugText text;
    text.smiles = sample_string(rng, c, kSmilesSpecific, kSmilesShared);
    text.inchi =
        "InChI=1S/" + sample_string(rng, c, kInchiSpecific, kInchiShared);
    ds.texts.push_back(std::move(text));
  }
  for (int j = 0; j < num_diseases; ++j) {
    ds.disease_ids.push_back("DI" + zero_padded(j, id_width));
  }

  ds.validate();
  return out;
}

}  // namespace ssldr
