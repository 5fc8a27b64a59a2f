#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slass/core.hpp"
#include "slass/policies.hpp"

namespace slass {

// Ground truth: actual robot/source positions and which robots have stopped.
// The arrived mask is monotone and driven by true distances.
struct WorldState {
  Position true_source;
  std::vector<Position> true_robots;
  std::vector<bool> arrived;
  int cycle = 1;
};

// Snapshot of one control cycle, taken at measurement time (before the move).
struct CycleRecord {
  int cycle = 0;
  std::vector<Position> true_robots;
  Position true_source;
  Position source_est;
  std::vector<Position> robot_est;
  ControlInput control;
  std::vector<double> dist_to_source;  // true distances, one per robot
  double objective = 0.0;              // predicted information gain (nats)
  double ess_outer = 0.0;              // pre-resample outer ESS
  bool constraint_violation = false;   // any control norm or safety-gap breach
};

enum class Termination {
  all_arrived,
  max_cycles,
  aborted,
};

struct TrialResult {
  std::vector<CycleRecord> records;
  Termination termination = Termination::max_cycles;
  int abort_cycle = -1;
  std::string abort_reason;
};

// Everything one trial carries between cycles.
struct TrialState {
  WorldState world;
  BeliefState belief;                  // proposed / flocking
  std::optional<TwoStageState> stages; // two_stage
  RandomStream world_rng;
  RandomStream filter_rng;
  RandomStream control_rng;
};

TrialState init_trial(const ExperimentConfig& cfg, PolicyKind policy,
                      std::uint64_t trial);

// One cycle: measure (all robots, stopped ones included) -> update weights ->
// resample -> estimates -> policy control -> safety check -> move active
// robots (control + noise; stopped robots do not move) -> refresh arrivals ->
// predict the belief with the executed controls.
CycleRecord step(TrialState& state, PolicyKind policy,
                 const ExperimentConfig& cfg);

// Runs cycles until every robot has arrived or max_cycles is reached. A
// degenerate belief aborts the trial; the partial record is returned with the
// abort reason. For aggregation, early-ended trials are treated as holding
// their final estimate through max_cycles.
TrialResult run_trial(const ExperimentConfig& cfg, PolicyKind policy,
                      std::uint64_t trial);

}  // namespace slass
