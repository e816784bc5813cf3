#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssldr/dataset.hpp"
#include "ssldr/eval.hpp"
#include "ssldr/model.hpp"
#include "ssldr/run_config.hpp"

using namespace ssldr;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = 0;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "ssldr_cli_out.txt";
  const std::string command =
      std::string(SSLDR_CLI_PATH) + " " + args + " > " + log.string() +
      " 2>&1";
  const int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::stringstream buf;
  buf << in.rdbuf();
  result.output = buf.str();
  return result;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ssldr_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

// Flags that keep end-to-end runs fast.
const std::string kFastFlags =
    " --latent-dim 8 --encoder-hidden 12 --batch-size 32 --max-epochs 3"
    " --patience 3 --w2v-dim 8 --w2v-epochs 1";

}  // namespace

TEST_CASE("synth writes a loadable dataset and is byte-deterministic") {
  const fs::path out_a = scratch("synth_a");
  const fs::path out_b = scratch("synth_b");
  const std::string args =
      "synth --drugs 30 --diseases 20 --density 0.05 --synth-latent-dim 4 "
      "--seed 9 --out ";
  CHECK(run_cli(args + out_a.string()).exit_code == 0);
  CHECK(run_cli(args + out_b.string()).exit_code == 0);

  const Dataset loaded = load_dataset(out_a.string());
  CHECK(loaded.num_drugs() == 30);
  CHECK(loaded.num_diseases() == 20);
  CHECK(loaded.positive_pairs().size() == 30);  // round(0.05 * 600)

  for (const char* name : {"drugs.tsv", "diseases.tsv", "associations.tsv",
                           "drug_sim.tsv", "disease_sim.tsv"}) {
    CHECK(read_file(out_a / name) == read_file(out_b / name));
  }
  fs::remove_all(out_a);
  fs::remove_all(out_b);
}

TEST_CASE("synth rejects an infeasible density") {
  const CliResult result = run_cli(
      "synth --drugs 10 --diseases 10 --density 0.01 --out /tmp/ssldr_nope");
  CHECK(result.exit_code != 0);
  CHECK(result.output.find("density") != std::string::npos);
}

TEST_CASE("cv writes metrics, logs and resolved config") {
  const fs::path data = scratch("cv_data");
  const fs::path out = scratch("cv_out");
  REQUIRE(run_cli("synth --drugs 30 --diseases 20 --density 0.05 --seed 4 "
                  "--out " + data.string()).exit_code == 0);
  const CliResult cv = run_cli("cv --data " + data.string() + " --out " +
                               out.string() + " --seed 1 --folds 5" +
                               kFastFlags);
  CHECK(cv.exit_code == 0);
  CHECK(fs::exists(out / "metrics.json"));
  CHECK(fs::exists(out / "metrics.tsv"));
  CHECK(fs::exists(out / "config.resolved"));
  for (int fold = 0; fold < 5; ++fold) {
    CHECK(fs::exists(out / ("train_fold" + std::to_string(fold) + ".log")));
  }
  const std::string json = read_file(out / "metrics.json");
  CHECK(std::count(json.begin(), json.end(), '{') >= 5);

  SUBCASE("a second identical run reproduces metrics.json byte for byte") {
    const fs::path out2 = scratch("cv_out2");
    REQUIRE(run_cli("cv --data " + data.string() + " --out " + out2.string() +
                    " --seed 1 --folds 5" + kFastFlags).exit_code == 0);
    CHECK(read_file(out2 / "metrics.json") == json);
    fs::remove_all(out2);
  }

  SUBCASE("the resolved config reproduces the run") {
    const fs::path out3 = scratch("cv_out3");
    // Rerun purely from the provenance file, overriding only --out.
    REQUIRE(run_cli("cv --config " + (out / "config.resolved").string() +
                    " --out " + out3.string()).exit_code == 0);
    CHECK(read_file(out3 / "metrics.json") == json);
    fs::remove_all(out3);
  }

  fs::remove_all(data);
  fs::remove_all(out);
}

TEST_CASE("cv on a missing dataset fails with a named path") {
  const CliResult result =
      run_cli("cv --data /definitely/not/here --out /tmp/ssldr_cv_fail");
  CHECK(result.exit_code != 0);
  CHECK(result.output.find("/definitely/not/here") != std::string::npos);
}

TEST_CASE("cli flags override config-file values") {
  const fs::path data = scratch("cfg_data");
  const fs::path out = scratch("cfg_out");
  REQUIRE(run_cli("synth --drugs 25 --diseases 15 --density 0.08 --seed 2 "
                  "--out " + data.string()).exit_code == 0);
  const fs::path cfg = fs::temp_directory_path() / "ssldr_test_config.toml";
  std::ofstream(cfg) << "seed = 7\nfolds = 4\nlatent_dim = 8\n"
                        "encoder_hidden = 12\nmax_epochs = 2\npatience = 2\n"
                        "batch_size = 32\nw2v_dim = 8\nw2v_epochs = 1\n";
  const CliResult run = run_cli("cv --config " + cfg.string() + " --data " +
                                data.string() + " --out " + out.string() +
                                " --folds 3");
  CHECK(run.exit_code == 0);
  const std::string resolved = read_file(out / "config.resolved");
  CHECK(resolved.find("folds = 3") != std::string::npos);      // flag wins
  CHECK(resolved.find("seed = 7") != std::string::npos);       // file value
  const std::string json = read_file(out / "metrics.json");
  CHECK(std::count(json.begin(), json.end(), '}') >= 3);
  fs::remove_all(data);
  fs::remove_all(out);
  fs::remove(cfg);
}

TEST_CASE("train then recommend round-trips through the checkpoint") {
  const fs::path data = scratch("train_data");
  const fs::path out = scratch("train_out");
  REQUIRE(run_cli("synth --drugs 30 --diseases 20 --density 0.05 --seed 6 "
                  "--out " + data.string()).exit_code == 0);
  REQUIRE(run_cli("train --data " + data.string() + " --out " + out.string() +
                  " --seed 2" + kFastFlags).exit_code == 0);
  CHECK(fs::exists(out / "model.ckpt"));
  CHECK(fs::exists(out / "train.log"));

  // train.log: epoch, train_loss, aux_loss_component, val_aupr.
  {
    std::ifstream log(out / "train.log");
    std::string line;
    REQUIRE(std::getline(log, line));
    CHECK(std::count(line.begin(), line.end(), '\t') == 3);
  }

  const Dataset dataset = load_dataset(data.string());
  const std::string drug = dataset.drug_ids[3];
  const CliResult rec = run_cli("recommend --data " + data.string() +
                                " --model " + (out / "model.ckpt").string() +
                                " --drug " + drug + " --top 5 --out " +
                                out.string());
  CHECK(rec.exit_code == 0);
  CHECK(fs::exists(out / "recommendations.tsv"));
  CHECK(read_file(out / "recommendations.tsv") == rec.output);
  CHECK(std::count(rec.output.begin(), rec.output.end(), '\n') == 6);

  // The printed scores match direct scoring with the reloaded checkpoint.
  const ModelParams params =
      load_checkpoint((out / "model.ckpt").string());
  const Recommendation direct = recommend_topk(params, dataset, drug, 5);
  CHECK(rec.output == direct.to_tsv());

  SUBCASE("unknown drug id fails") {
    const CliResult bad = run_cli("recommend --data " + data.string() +
                                  " --model " +
                                  (out / "model.ckpt").string() +
                                  " --drug NOPE --top 5");
    CHECK(bad.exit_code != 0);
    CHECK(bad.output.find("NOPE") != std::string::npos);
  }

  fs::remove_all(data);
  fs::remove_all(out);
}

TEST_CASE("zero-epoch training still emits a checkpoint") {
  const fs::path data = scratch("zero_data");
  const fs::path out = scratch("zero_out");
  REQUIRE(run_cli("synth --drugs 20 --diseases 12 --density 0.1 --seed 8 "
                  "--out " + data.string()).exit_code == 0);
  REQUIRE(run_cli("train --data " + data.string() + " --out " + out.string() +
                  " --seed 2 --max-epochs 0" + kFastFlags).exit_code == 0);
  const ModelParams params =
      load_checkpoint((out / "model.ckpt").string());
  CHECK(params.hyper.latent_dim == 8);
  CHECK(read_file(out / "train.log").empty());
  fs::remove_all(data);
  fs::remove_all(out);
}

TEST_CASE("gradcheck passes clean and fails with an injected bug") {
  CHECK(run_cli("gradcheck --seed 3").exit_code == 0);
  CHECK(run_cli("gradcheck --seed 3 --alpha 0").exit_code == 0);
  const CliResult broken = run_cli("gradcheck --seed 3 --inject-bug");
  CHECK(broken.exit_code != 0);
  CHECK(broken.output.find("FAILED") != std::string::npos);
}

TEST_CASE("unknown flags are usage errors") {
  CHECK(run_cli("cv --no-such-flag").exit_code != 0);
  CHECK(run_cli("").exit_code != 0);  // missing subcommand
}
