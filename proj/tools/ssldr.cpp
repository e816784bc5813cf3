// Command-line entry point: cross-validation, single-split training,
// recommendation, synthetic data generation and gradient checking.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssldr/dataset.hpp"
#include "ssldr/eval.hpp"
#include "ssldr/featurize.hpp"
#include "ssldr/model.hpp"
#include "ssldr/run_config.hpp"
#include "ssldr/train.hpp"

namespace fs = std::filesystem;
using namespace ssldr;

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

std::string history_log(const std::vector<EpochStats>& history) {
  std::string out;
  for (const auto& e : history) {
    out += std::to_string(e.epoch) + '\t' + format_double(e.train_loss) +
           '\t' + format_double(e.aux_loss) + '\t' +
           format_double(e.val_aupr) + '\n';
  }
  return out;
}

// Registers the flags shared by the data-driven subcommands.
void add_common_options(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--config", "flat key = value config file (loaded first)");
  cmd->add_option("--data", rc.data_dir, "dataset directory");
  cmd->add_option("--out", rc.out_dir, "output directory");
  cmd->add_option("--seed", rc.seed, "master random seed");
  cmd->add_option("--variant", rc.variant, "ssldr | ssldr_m | ssldr_a");
  cmd->add_option("--alpha", rc.alpha, "auxiliary loss weight");
  cmd->add_option("--beta", rc.beta, "decoder skip weight");
  cmd->add_option("--lambda", rc.lambda, "reconstruction loss weight");
  cmd->add_option("--latent-dim", rc.latent_dim, "latent factor dimension");
  cmd->add_option("--encoder-hidden", rc.encoder_hidden,
                  "encoder hidden width");
  cmd->add_option("--lr", rc.learning_rate, "optimizer learning rate");
  cmd->add_option("--folds", rc.folds, "number of cross-validation folds");
  cmd->add_option("--parallel-folds", rc.parallel_folds,
                  "folds trained concurrently");
  cmd->add_flag("--f1-sweep", rc.f1_sweep,
                "also report the best F1 over a threshold grid");
  cmd->add_flag("--aux-raw", rc.aux_raw,
                "skip L2 normalization of auxiliary latents");
  cmd->add_option("--feature-cache", rc.feature_cache,
                  "directory for cached view embeddings");
  cmd->add_option("--batch-size", rc.batch_size, "positives per batch");
  cmd->add_option("--max-epochs", rc.max_epochs, "epoch cap");
  cmd->add_option("--patience", rc.patience, "early-stopping patience");
  cmd->add_option("--neg-ratio", rc.neg_ratio,
                  "sampled negatives per positive");
  cmd->add_option("--w2v-dim", rc.w2v_dim, "view embedding dimension");
  cmd->add_option("--w2v-window", rc.w2v_window, "skip-gram window");
  cmd->add_option("--w2v-negative", rc.w2v_negative,
                  "skip-gram negative samples");
  cmd->add_option("--w2v-epochs", rc.w2v_epochs, "skip-gram epochs");
  cmd->add_option("--w2v-lr", rc.w2v_learning_rate,
                  "skip-gram learning rate");
}

int cmd_cv(RunConfig& rc) {
  if (rc.data_dir.empty()) {
    throw ConfigError("cv: --data is required");
  }
  const Dataset dataset = load_dataset(rc.data_dir);
  fs::create_directories(rc.out_dir);
  write_text(fs::path(rc.out_dir) / "config.resolved", rc.resolved());

  const CrossValidateResult result = cross_validate(
      dataset, rc.train_config(), rc.featurize_config(), rc.cv_options());

  write_text(fs::path(rc.out_dir) / "metrics.json", result.report.to_json());
  write_text(fs::path(rc.out_dir) / "metrics.tsv", result.report.to_tsv());
  for (std::size_t fold = 0; fold < result.fold_histories.size(); ++fold) {
    write_text(fs::path(rc.out_dir) /
                   ("train_fold" + std::to_string(fold) + ".log"),
               history_log(result.fold_histories[fold]));
  }
  std::cout << rc.variant << " " << rc.folds << "-fold cv:"
            << " auc " << format_double(result.report.auc.mean) << " +/- "
            << format_double(result.report.auc.stddev) << ", aupr "
            << format_double(result.report.aupr.mean) << " +/- "
            << format_double(result.report.aupr.stddev) << ", f1 "
            << format_double(result.report.f1.mean) << " +/- "
            << format_double(result.report.f1.stddev) << "\n";
  return 0;
}

int cmd_train(RunConfig& rc) {
  if (rc.data_dir.empty()) {
    throw ConfigError("train: --data is required");
  }
  const Dataset dataset = load_dataset(rc.data_dir);
  fs::create_directories(rc.out_dir);
  write_text(fs::path(rc.out_dir) / "config.resolved", rc.resolved());

  TrainConfig cfg = rc.train_config();
  if (rc.variant == "ssldr_m") {
    cfg.alpha = 0.0;
    cfg.aux_enabled = false;
  } else if (rc.variant == "ssldr_a") {
    cfg.beta = 0.0;
  } else {
    parse_variant(rc.variant);  // validates the name
  }

  ViewVectors views;
  const bool aux_active = cfg.aux_enabled && cfg.alpha != 0.0;
  if (aux_active) {
    views = featurize_all(dataset, rc.featurize_config());
  }
  const TrainState state = fit(dataset, dataset.associations,
                               aux_active ? &views : nullptr, cfg);
  save_checkpoint(state.params,
                  (fs::path(rc.out_dir) / "model.ckpt").string());
  write_text(fs::path(rc.out_dir) / "train.log", history_log(state.history));
  std::cout << "trained " << state.history.size() << " epochs, best epoch "
            << state.best_epoch << " (val aupr "
            << format_double(state.best_val_aupr) << "), checkpoint at "
            << (fs::path(rc.out_dir) / "model.ckpt").string() << "\n";
  return 0;
}

int cmd_recommend(RunConfig& rc, const std::string& model_path,
                  const std::string& drug_id, int top_k, bool have_out) {
  if (rc.data_dir.empty()) {
    throw ConfigError("recommend: --data is required");
  }
  if (drug_id.empty()) {
    throw ConfigError("recommend: --drug is required");
  }
  const Dataset dataset = load_dataset(rc.data_dir);
  const ModelParams params = load_checkpoint(model_path);
  const Recommendation rec = recommend_topk(params, dataset, drug_id, top_k);
  std::cout << rec.to_tsv();
  if (have_out) {
    fs::create_directories(rc.out_dir);
    write_text(fs::path(rc.out_dir) / "recommendations.tsv", rec.to_tsv());
  }
  return 0;
}

int cmd_synth(RunConfig& rc) {
  const SynthResult synth =
      synth_generate(rc.synth_drugs, rc.synth_diseases, rc.synth_density,
                     rc.synth_latent_dim, rc.seed);
  save_dataset(synth.dataset, rc.out_dir);
  std::cout << "wrote " << rc.out_dir << ": " << rc.synth_drugs << " drugs, "
            << rc.synth_diseases << " diseases, "
            << synth.dataset.positive_pairs().size() << " positives\n";
  return 0;
}

int cmd_gradcheck(RunConfig& rc, double eps, bool inject_bug,
                  bool latent_given, bool hidden_given) {
  ModelHyper hyper;
  // Desk-scale toy dims unless explicitly overridden; at large latent
  // widths the clamped cross-entropy saturates and finite differences of
  // the clamped value no longer probe the analytic gradient.
  hyper.latent_dim = latent_given ? rc.latent_dim : 3;
  hyper.hidden_dim = hidden_given ? rc.encoder_hidden : 4;
  hyper.alpha = rc.alpha;
  hyper.beta = rc.beta;
  hyper.lambda = rc.lambda;
  hyper.aux_enabled = rc.alpha != 0.0;
  hyper.normalize_aux = !rc.aux_raw;

  GradcheckSetup toy = make_gradcheck_toy(5, 4, hyper, rc.seed);
  GradientCheck check =
      check_gradients(toy.params, toy.batch, toy.train, &toy.views,
                      toy.drug_sim, eps);
  if (inject_bug) {
    // Negative control: corrupt one analytic entry and re-score, proving
    // the check would catch a broken backward pass.
    check.analytic[0] += 0.05;
    check.max_relative_error = 0.0;
    for (Eigen::Index i = 0; i < check.analytic.size(); ++i) {
      const double gap = relative_gap(check.analytic[i], check.numeric[i]);
      if (gap > check.max_relative_error) {
        check.max_relative_error = gap;
        check.worst_index = i;
      }
    }
  }
  constexpr double kTolerance = 1e-4;
  std::cout << "parameters checked: " << check.analytic.size()
            << "\nmax relative error: "
            << format_double(check.max_relative_error) << " at index "
            << check.worst_index << "\n";
  if (check.max_relative_error < kTolerance) {
    std::cout << "gradcheck passed (tolerance " << format_double(kTolerance)
              << ")\n";
    return 0;
  }
  std::cout << "gradcheck FAILED (tolerance " << format_double(kTolerance)
            << ")\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;

  // The config file seeds the defaults; explicit flags override it.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    try {
      if (arg == "--config" && i + 1 < argc) {
        rc.apply_file(argv[i + 1]);
      } else if (arg.rfind("--config=", 0) == 0) {
        rc.apply_file(arg.substr(9));
      }
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  CLI::App app{"drug-disease association prediction with a self-supervised "
               "auxiliary task"};
  app.require_subcommand(1);

  auto* cv = app.add_subcommand("cv", "run k-fold cross-validation");
  add_common_options(cv, rc);

  auto* train = app.add_subcommand("train", "train on the full dataset and "
                                            "write a checkpoint");
  add_common_options(train, rc);

  auto* recommend =
      app.add_subcommand("recommend", "rank unknown diseases for a drug");
  add_common_options(recommend, rc);
  std::string model_path = "model.ckpt";
  std::string drug_id;
  int top_k = 5;
  recommend->add_option("--model", model_path, "checkpoint path");
  recommend->add_option("--drug", drug_id, "drug id to recommend for");
  recommend->add_option("--top", top_k, "number of diseases to return");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common_options(synth, rc);
  synth->add_option("--drugs", rc.synth_drugs, "number of drugs");
  synth->add_option("--diseases", rc.synth_diseases, "number of diseases");
  synth->add_option("--density", rc.synth_density, "positive density");
  synth->add_option("--synth-latent-dim", rc.synth_latent_dim,
                    "planted latent dimension");

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "compare analytic and finite-difference gradients");
  add_common_options(gradcheck, rc);
  double eps = 1e-5;
  bool inject_bug = false;
  gradcheck->add_option("--eps", eps, "finite-difference step");
  gradcheck->add_flag("--inject-bug", inject_bug,
                      "corrupt one gradient entry (negative control)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cv->parsed()) return cmd_cv(rc);
    if (train->parsed()) return cmd_train(rc);
    if (recommend->parsed()) {
      return cmd_recommend(rc, model_path, drug_id, top_k,
                           recommend->count("--out") > 0);
    }
    if (synth->parsed()) return cmd_synth(rc);
    if (gradcheck->parsed()) {
      return cmd_gradcheck(rc, eps, inject_bug,
                           gradcheck->count("--latent-dim") > 0,
                           gradcheck->count("--encoder-hidden") > 0);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
