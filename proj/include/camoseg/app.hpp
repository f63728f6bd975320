#pragma once

#include <string>

#include "camoseg/config.hpp"

namespace camoseg {

// Command bodies behind the CLI; each returns a process exit code (0 on
// success) and throws ConfigError / DivergedError / CheckpointError for the
// caller to map to exit codes 2 / 3 / 4.

// Replaces cfg.seed with $CAMOT_SEED when the variable is set.
void apply_env_seed(RunConfig& cfg);

int run_gen_data(const RunConfig& cfg, int count, const std::string& out_dir);

int run_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir,
              const std::string& eval_dir, const std::string& resume_path, bool force);

int run_eval(const std::string& ckpt_path, const std::string& data_dir, const std::string& use,
             const std::string& out_csv);

int run_analyze(const std::string& ckpt_path, const std::string& data_dir,
                const std::string& out_dir);

}  // namespace camoseg
