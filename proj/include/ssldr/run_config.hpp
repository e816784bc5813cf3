#ifndef SSLDR_RUN_CONFIG_HPP
#define SSLDR_RUN_CONFIG_HPP

#include <cstdint>
#include <string>

#include "ssldr/eval.hpp"
#include "ssldr/featurize.hpp"
#include "ssldr/train.hpp"

namespace ssldr {

// Merged view of config-file values and command-line overrides. Every field
// has a default; the resolved state is written next to each run's outputs
// so a run can be reproduced from its own provenance file.
struct RunConfig {
  // run wiring
  std::string data_dir;
  std::string out_dir = "ssldr_out";
  std::uint64_t seed = 0;
  std::string variant = "ssldr";
  int folds = 10;
  int parallel_folds = 1;
  bool f1_sweep = false;
  bool aux_raw = false;
  std::string feature_cache;

  // training
  int latent_dim = 64;
  int encoder_hidden = 128;
  double alpha = 0.5;
  double beta = 0.5;
  double lambda = 0.5;
  double learning_rate = 0.001;
  int batch_size = 256;
  int max_epochs = 200;
  int patience = 10;
  double neg_ratio = 5.0;
  double validation_fraction = 0.10;

  // featurizer
  int w2v_dim = 64;
  int w2v_window = 5;
  int w2v_negative = 5;
  int w2v_epochs = 5;
  double w2v_learning_rate = 0.025;

  // synth
  int synth_drugs = 100;
  int synth_diseases = 80;
  double synth_density = 0.01;
  int synth_latent_dim = 8;

  TrainConfig train_config() const;
  FeaturizeConfig featurize_config() const;
  CrossValidateOptions cv_options() const;

  // Applies `key = value` lines from a flat config file (a TOML-compatible
  // subset: comments start with '#', unknown keys are errors).
  void apply_file(const std::string& path);

  // All fields in the same flat format, suitable for apply_file.
  std::string resolved() const;
};

}  // namespace ssldr

#endif  // SSLDR_RUN_CONFIG_HPP
