#include "ssldr/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>

namespace ssldr {

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg;
  cfg.latent_dim = latent_dim;
  cfg.encoder_hidden = encoder_hidden;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.lambda = lambda;
  cfg.learning_rate = learning_rate;
  cfg.batch_size = batch_size;
  cfg.max_epochs = max_epochs;
  cfg.patience = patience;
  cfg.neg_ratio = neg_ratio;
  cfg.validation_fraction = validation_fraction;
  cfg.seed = seed;
  cfg.aux_enabled = alpha != 0.0;
  cfg.normalize_aux = !aux_raw;
  return cfg;
}

FeaturizeConfig RunConfig::featurize_config() const {
  FeaturizeConfig cfg;
  cfg.skipgram.dim = w2v_dim;
  cfg.skipgram.window = w2v_window;
  cfg.skipgram.negative_samples = w2v_negative;
  cfg.skipgram.epochs = w2v_epochs;
  cfg.skipgram.learning_rate = w2v_learning_rate;
  cfg.skipgram.seed = seed + 10;
  cfg.cache_dir = feature_cache;
  return cfg;
}

CrossValidateOptions RunConfig::cv_options() const {
  CrossValidateOptions options;
  options.num_folds = folds;
  options.parallel_folds = parallel_folds;
  options.variant = parse_variant(variant);
  options.f1_sweep = f1_sweep;
  return options;
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
  T out{};
  const auto res =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw ConfigError("config: bad numeric value '" + value + "' for key '" +
                      key + "'");
  }
  return out;
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: bad boolean value '" + value + "' for key '" +
                    key + "'");
}

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

using Setter = std::function<void(RunConfig&, const std::string&,
                                  const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"data", [](RunConfig& c, const std::string& v,
                  const std::string&) { c.data_dir = v; }},
      {"out", [](RunConfig& c, const std::string& v,
                 const std::string&) { c.out_dir = v; }},
      {"seed",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.seed = parse_number<std::uint64_t>(v, k);
       }},
      {"variant", [](RunConfig& c, const std::string& v,
                     const std::string&) { c.variant = v; }},
      {"folds",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.folds = parse_number<int>(v, k);
       }},
      {"parallel_folds",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.parallel_folds = parse_number<int>(v, k);
       }},
      {"f1_sweep",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.f1_sweep = parse_bool(v, k);
       }},
      {"aux_raw",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.aux_raw = parse_bool(v, k);
       }},
      {"feature_cache", [](RunConfig& c, const std::string& v,
                           const std::string&) { c.feature_cache = v; }},
      {"latent_dim",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.latent_dim = parse_number<int>(v, k);
       }},
      {"encoder_hidden",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.encoder_hidden = parse_number<int>(v, k);
       }},
      {"alpha",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.alpha = parse_number<double>(v, k);
       }},
      {"beta",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.beta = parse_number<double>(v, k);
       }},
      {"lambda",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.lambda = parse_number<double>(v, k);
       }},
      {"learning_rate",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.learning_rate = parse_number<double>(v, k);
       }},
      {"batch_size",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.batch_size = parse_number<int>(v, k);
       }},
      {"max_epochs",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.max_epochs = parse_number<int>(v, k);
       }},
      {"patience",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.patience = parse_number<int>(v, k);
       }},
      {"neg_ratio",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.neg_ratio = parse_number<double>(v, k);
       }},
      {"validation_fraction",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.validation_fraction = parse_number<double>(v, k);
       }},
      {"w2v_dim",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.w2v_dim = parse_number<int>(v, k);
       }},
      {"w2v_window",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.w2v_window = parse_number<int>(v, k);
       }},
      {"w2v_negative",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.w2v_negative = parse_number<int>(v, k);
       }},
      {"w2v_epochs",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.w2v_epochs = parse_number<int>(v, k);
       }},
      {"w2v_learning_rate",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.w2v_learning_rate = parse_number<double>(v, k);
       }},
      {"synth_drugs",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.synth_drugs = parse_number<int>(v, k);
       }},
      {"synth_diseases",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.synth_diseases = parse_number<int>(v, k);
       }},
      {"synth_density",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.synth_density = parse_number<double>(v, k);
       }},
      {"synth_latent_dim",
       [](RunConfig& c, const std::string& v, const std::string& k) {
         c.synth_latent_dim = parse_number<int>(v, k);
       }},
  };
  return table;
}

}  // namespace

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot read file " + path);
  }
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) +
                        " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
    it->second(*this, value, key);
  }
}

std::string RunConfig::resolved() const {
  std::string out;
  auto kv = [&out](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };
  kv("data", "\"" + data_dir + "\"");
  kv("out", "\"" + out_dir + "\"");
  kv("seed", std::to_string(seed));
  kv("variant", "\"" + variant + "\"");
  kv("folds", std::to_string(folds));
  kv("parallel_folds", std::to_string(parallel_folds));
  kv("f1_sweep", f1_sweep ? "true" : "false");
  kv("aux_raw", aux_raw ? "true" : "false");
  kv("feature_cache", "\"" + feature_cache + "\"");
  kv("latent_dim", std::to_string(latent_dim));
  kv("encoder_hidden", std::to_string(encoder_hidden));
  kv("alpha", format_number(alpha));
  kv("beta", format_number(beta));
  kv("lambda", format_number(lambda));
  kv("learning_rate", format_number(learning_rate));
  kv("batch_size", std::to_string(batch_size));
  kv("max_epochs", std::to_string(max_epochs));
  kv("patience", std::to_string(patience));
  kv("neg_ratio", format_number(neg_ratio));
  kv("validation_fraction", format_number(validation_fraction));
  kv("w2v_dim", std::to_string(w2v_dim));
  kv("w2v_window", std::to_string(w2v_window));
  kv("w2v_negative", std::to_string(w2v_negative));
  kv("w2v_epochs", std::to_string(w2v_epochs));
  kv("w2v_learning_rate", format_number(w2v_learning_rate));
  kv("synth_drugs", std::to_string(synth_drugs));
  kv("synth_diseases", std::to_string(synth_diseases));
  kv("synth_density", format_number(synth_density));
  kv("synth_latent_dim", std::to_string(synth_latent_dim));
  return out;
}

}  // namespace ssldr
