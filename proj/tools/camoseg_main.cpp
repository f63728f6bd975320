#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "camoseg/app.hpp"
#include "camoseg/errors.hpp"

using namespace camoseg;

namespace {

RunConfig load_config(const std::string& path) {
  RunConfig cfg = path.empty() ? RunConfig{} : RunConfig::from_file(path);
  apply_env_seed(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-supervised camouflage segmentation: data synthesis, dual-rotation "
               "consistency training, evaluation, pseudo-label noise analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::string data_dir, out_dir, eval_dir, resume_path, ckpt_path;
  std::string use = "teacher";
  std::string out_csv = "report.csv";
  int count = 200;
  bool force = false;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic camouflage dataset");
  gen->add_option("--config", config_path, "JSON config file (defaults apply when omitted)");
  gen->add_option("--count", count, "Number of samples")->check(CLI::Range(1, 100000000));
  gen->add_option("--out", out_dir, "Dataset directory to create")->required();

  auto* train = app.add_subcommand("train", "Train the teacher/student pair");
  train->add_option("--config", config_path, "JSON config file");
  train->add_option("--data", data_dir, "Dataset directory")->required();
  train->add_option("--out", out_dir, "Run output directory")->required();
  train->add_option("--eval", eval_dir, "Dataset scored each epoch (default: labeled split)");
  train->add_option("--resume", resume_path, "Checkpoint to continue from");
  train->add_flag("--force", force, "Resume even if the config hash differs");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset");
  eval->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  eval->add_option("--data", data_dir, "Dataset directory (masks required)")->required();
  eval->add_option("--use", use, "Which weights to score")
      ->check(CLI::IsMember({"student", "teacher"}));
  eval->add_option("--out", out_csv, "Per-sample report CSV path");

  auto* analyze = app.add_subcommand("analyze", "Pseudo-label noise reports from a checkpoint");
  analyze->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  analyze->add_option("--data", data_dir, "Dataset directory (masks required)")->required();
  analyze->add_option("--out", out_dir, "Directory for the report CSVs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    if (gen->parsed()) return run_gen_data(load_config(config_path), count, out_dir);
    if (train->parsed())
      return run_train(load_config(config_path), data_dir, out_dir, eval_dir, resume_path,
                       force);
    if (eval->parsed()) return run_eval(ckpt_path, data_dir, use, out_csv);
    if (analyze->parsed()) return run_analyze(ckpt_path, data_dir, out_dir);
  } catch (const DivergedError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
