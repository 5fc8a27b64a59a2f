#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "slass/core.hpp"
#include "slass/measurement.hpp"
#include "slass/random.hpp"

namespace slass {

// Inner particle: one source-position hypothesis with its conditional weight.
struct SourceParticle {
  Position pos;
  double weight;
};

// Outer particle: one joint hypothesis of all K robot positions, carrying its
// own conditional particle set over the source.
struct RobotParticle {
  std::vector<Position> robots;
  double weight;
  std::vector<SourceParticle> source_set;
};

// Rao-Blackwellized belief: outer particles over joint robot positions, inner
// particles over the source. Weights at each level sum to one.
struct BeliefState {
  std::vector<RobotParticle> particles;
  int cycle = 0;
};

// Raised when a weight update leaves an entire level with zero total mass.
class DegenerateBeliefError : public std::runtime_error {
 public:
  DegenerateBeliefError(int cycle, const std::string& what)
      : std::runtime_error(what), cycle_(cycle) {}
  int cycle() const { return cycle_; }

 private:
  int cycle_;
};

// Outer particles start as a point mass on the configured starts; inner
// particles are drawn uniformly over the workspace (draw order: per outer
// particle, then per inner particle, x before y). All weights uniform.
BeliefState init_belief(const ExperimentConfig& cfg, RandomStream& rng);

// Transition step: every particle's robot k moves by control.c[k] plus
// per-axis N(0, sigma_c_sq) noise; every source particle jitters by per-axis
// N(0, sigma_s_sq). Weights unchanged. Draw order: per outer particle, robots
// (x,y each) then its source set (x,y each).
void predict(BeliefState& belief, const ControlInput& control,
             const MotionParams& motion, RandomStream& rng);

// One Bayes update of both levels from a measurement set:
//   inner:  w_ij ∝ w_ij * L_ij
//   outer:  w_i  ∝ w_i * sum_j w_ij_prev * L_ij
// where L_ij is the joint likelihood of z under outer particle i's robots and
// its j-th source hypothesis. Evaluated in log space with log-sum-exp.
// Throws DegenerateBeliefError if total mass at the outer level vanishes.
void update_weights(BeliefState& belief, const MeasurementSet& z,
                    const EnvParams& env);

// 1 / sum(w^2) for a normalized weight vector.
double effective_sample_size(const Eigen::VectorXd& weights);

// Systematic resampling indices for M draws with a single uniform offset
// u in [0,1): positions (u+m)/M scanned against the cumulative weights.
std::vector<int> systematic_resample_indices(const Eigen::VectorXd& weights,
                                             int count, double u);

// ESS-gated systematic resampling, applied independently at each level whose
// ESS < threshold * M: first every inner set (in outer-particle order), then
// the outer level. Outer resampling copies whole particles, inner sets
// included. Resampled levels get uniform weights. One uniform draw per
// triggered level.
void resample(BeliefState& belief, double ess_threshold, RandomStream& rng);

// Posterior mean of the source: sum_i w_i sum_j w_ij * pos_ij.
Position source_estimate(const BeliefState& belief);

// Posterior mean of each robot position: sum_i w_i * robots_i[k].
std::vector<Position> robot_estimate(const BeliefState& belief);

// Outer weights as a vector (for ESS checks and diagnostics).
Eigen::VectorXd outer_weights(const BeliefState& belief);

}  // namespace slass
