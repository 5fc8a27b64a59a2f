#pragma once

#include <string>
#include <vector>

#include "slass/core.hpp"
#include "slass/infocontrol.hpp"
#include "slass/measurement.hpp"
#include "slass/random.hpp"
#include "slass/rbpf.hpp"

namespace slass {

enum class PolicyKind {
  proposed,   // joint RBPF + information-driven control
  flocking,   // straight toward the estimated source, collision-projected
  two_stage,  // separate robot PF and source PF, information-driven control
};

PolicyKind parse_policy(const std::string& name);
std::string policy_name(PolicyKind kind);

// Unit steps toward the estimated source for every active robot (zero if an
// estimate coincides with the source estimate), then collision projection.
ProjectionResult flocking_control(const BeliefState& belief,
                                  const ExperimentConfig& cfg,
                                  const std::vector<bool>& active);

// Benchmark filter split into two stages with the same particle budget as the
// joint filter: stage 1 tracks the joint robot positions from robot-to-robot
// readings only; stage 2 localizes the source treating stage-1 estimates as
// exact robot positions.
struct TwoStageState {
  std::vector<std::vector<Position>> robot_particles;  // M_r x K
  Eigen::VectorXd robot_weights;
  std::vector<Position> source_particles;  // M_s
  Eigen::VectorXd source_weights;
  int cycle = 0;
};

TwoStageState two_stage_init(const ExperimentConfig& cfg, RandomStream& rng);

// Stage-1 Bayes update from the robot-to-robot readings (no-op for K = 1).
void two_stage_robot_update(TwoStageState& state, const MeasurementSet& z,
                            const EnvParams& env);

// Stage-2 Bayes update of the source particles from the source links, with
// robots fixed at the given point estimates.
void two_stage_source_update(TwoStageState& state, const MeasurementSet& z,
                             const std::vector<Position>& robot_point,
                             const EnvParams& env);

struct TwoStageCycleResult {
  std::vector<Position> robot_est;
  Position source_est;
  ControlInput control;
  double objective = 0.0;
  bool control_feasible = true;
  double ess_stage1 = 0.0;
};

// One full cycle: stage-1 update / resample / estimate, stage-2 update /
// resample / estimate, then the same information-driven control solve run on
// a single collapsed robot hypothesis carrying the stage-2 source particles.
TwoStageCycleResult two_stage_cycle(TwoStageState& state,
                                    const MeasurementSet& z,
                                    const ExperimentConfig& cfg,
                                    const std::vector<bool>& active,
                                    RandomStream& filter_rng,
                                    RandomStream& control_rng);

// Transition step for both stages (controls plus per-axis control noise for
// the robot particles, jitter for the source particles).
void two_stage_predict(TwoStageState& state, const ControlInput& control,
                       const MotionParams& motion, RandomStream& rng);

}  // namespace slass
