#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "slass/core.hpp"
#include "slass/sim.hpp"

namespace slass {

// Cross-trial aggregates. Per-cycle series have exactly max_cycles entries;
// trials that ended early contribute their final value to later cycles.
struct AggregateMetrics {
  Eigen::VectorXd rmse;              // per-cycle source-estimate RMSE over trials
  Eigen::VectorXd mean_dist_robot1;  // per-cycle mean true distance, robot 1
  Eigen::VectorXd stderr_dist_robot1;
  double success_rate = 0.0;         // fraction of trials with every robot arrived
  double mean_cycles_to_arrival = 0.0;  // over successful trials
  double final_rmse = 0.0;
  double mean_final_dist_robot1 = 0.0;
  long violation_count = 0;          // safety-check breaches across all cycles
};

struct ExperimentResult {
  PolicyKind policy;
  std::vector<TrialResult> trials;  // indexed by trial number
  AggregateMetrics metrics;
};

// Runs cfg.num_trials trials of one policy. Trial t draws its random streams
// from (cfg.seed, t, role), so results are independent of execution order.
// threads <= 0 selects single-threaded execution.
ExperimentResult run_experiment(const ExperimentConfig& cfg, PolicyKind policy,
                                int threads = 0);

// Aggregation used by run_experiment, exposed for direct testing.
AggregateMetrics aggregate_metrics(const std::vector<TrialResult>& trials,
                                   const ExperimentConfig& cfg);

struct CompareResult {
  std::vector<ExperimentResult> runs;  // one per requested policy, in order
};

// Runs each policy on identical per-trial streams (same cfg.seed).
CompareResult compare_policies(const ExperimentConfig& cfg,
                               const std::vector<PolicyKind>& policies,
                               int threads = 0);

// Writes <policy>_rmse.csv (cycle,value), <policy>_dist_robot1.csv
// (cycle,value,stderr) and <policy>_manifest.json into out_dir; optionally one
// trajectory CSV per trial. All output is deterministic for a given config
// and seed (wall-clock timing is reported on the console, never in files).
void write_experiment_outputs(const ExperimentResult& result,
                              const ExperimentConfig& cfg,
                              const std::filesystem::path& out_dir,
                              bool dump_trajectories = false);

// Per-policy outputs plus side-by-side compare_rmse.csv,
// compare_dist_robot1.csv and compare_summary.csv.
void write_compare_outputs(const CompareResult& result,
                           const ExperimentConfig& cfg,
                           const std::filesystem::path& out_dir,
                           bool dump_trajectories = false);

// Flat key = value config file (one key per ExperimentConfig field, '#'
// comments; pair lists as comma-separated x y pairs). Unknown keys are
// rejected. Missing keys default from default_paper_config(num_robots).
ExperimentConfig config_from_file(const std::filesystem::path& path);

// Writes every field back out in the same format.
void config_to_file(const ExperimentConfig& cfg,
                    const std::filesystem::path& path);

// Thread count resolution: SLASS_THREADS environment variable wins over the
// flag; 0 or unset means single-threaded.
int resolve_threads(int flag_value);

inline constexpr const char* kVersion = "slass 0.1.0";

}  // namespace slass
