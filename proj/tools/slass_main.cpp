#include <chrono>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slass/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int trials = -1;          // -1: keep config value
  std::int64_t seed = -1;   // -1: keep config value
  int threads = 0;
  bool dump_trajectories = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_trials_seed) {
  cmd->add_option("--config", args.config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  if (with_trials_seed) {
    cmd->add_option("--trials", args.trials, "override num_trials");
    cmd->add_option("--seed", args.seed, "override seed");
  }
  cmd->add_option("--threads", args.threads,
                  "worker threads (0 = single-threaded; SLASS_THREADS wins)");
  cmd->add_flag("--dump-trajectories", args.dump_trajectories,
                "write one per-trial trajectory CSV");
}

slass::ExperimentConfig load_config(const CommonArgs& args) {
  slass::ExperimentConfig cfg = slass::config_from_file(args.config_path);
  if (args.trials >= 0) cfg.num_trials = args.trials;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  slass::validate(cfg);
  return cfg;
}

int report_aborts(const std::vector<slass::ExperimentResult>& runs) {
  int aborted = 0;
  for (const auto& run : runs) {
    for (std::size_t t = 0; t < run.trials.size(); ++t) {
      if (run.trials[t].termination == slass::Termination::aborted) {
        ++aborted;
        std::cerr << "aborted: policy " << slass::policy_name(run.policy)
                  << " trial " << t << " at cycle " << run.trials[t].abort_cycle
                  << ": " << run.trials[t].abort_reason << "\n";
      }
    }
  }
  return aborted;
}

void print_summary(const slass::ExperimentResult& run) {
  const auto& m = run.metrics;
  std::cout << slass::policy_name(run.policy) << ": final_rmse "
            << m.final_rmse << " m, success_rate " << m.success_rate
            << ", mean_final_dist_robot1 " << m.mean_final_dist_robot1
            << " m, violations " << m.violation_count << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RF source seeking simulation"};
  app.set_version_flag("--version", std::string(slass::kVersion));
  app.require_subcommand(1);

  CommonArgs run_args;
  std::string policy_name = "proposed";
  CLI::App* run_cmd = app.add_subcommand("run", "run one policy");
  add_common(run_cmd, run_args, true);
  run_cmd->add_option("--policy", policy_name, "proposed|flocking|two_stage")
      ->required();

  CommonArgs cmp_args;
  std::vector<std::string> policy_list;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "run several policies on shared trial streams");
  add_common(cmp_cmd, cmp_args, true);
  cmp_cmd->add_option("--policies", policy_list, "two or more policy names")
      ->required()
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const auto t0 = std::chrono::steady_clock::now();
    int aborted = 0;
    if (run_cmd->parsed()) {
      const slass::ExperimentConfig cfg = load_config(run_args);
      const slass::PolicyKind policy = slass::parse_policy(policy_name);
      const int threads = slass::resolve_threads(run_args.threads);
      slass::ExperimentResult result =
          slass::run_experiment(cfg, policy, threads);
      slass::write_experiment_outputs(result, cfg, run_args.out_dir,
                                      run_args.dump_trajectories);
      print_summary(result);
      aborted = report_aborts({result});
    } else {
      const slass::ExperimentConfig cfg = load_config(cmp_args);
      std::vector<slass::PolicyKind> policies;
      for (const std::string& name : policy_list) {
        policies.push_back(slass::parse_policy(name));
      }
      const int threads = slass::resolve_threads(cmp_args.threads);
      slass::CompareResult result =
          slass::compare_policies(cfg, policies, threads);
      slass::write_compare_outputs(result, cfg, cmp_args.out_dir,
                                   cmp_args.dump_trajectories);
      for (const auto& run : result.runs) print_summary(run);
      aborted = report_aborts(result.runs);
    }
    const auto t1 = std::chrono::steady_clock::now();
    std::cout << "wall time "
              << std::chrono::duration<double>(t1 - t0).count() << " s\n";
    return aborted > 0 ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
