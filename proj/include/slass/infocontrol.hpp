#pragma once

#include <vector>

#include "slass/core.hpp"
#include "slass/random.hpp"
#include "slass/rbpf.hpp"

namespace slass {

// Diagonal Gaussian mixture over the K-dimensional source-link measurement
// vector. Row j holds component j's per-channel means and variances.
struct GaussianMixture {
  Eigen::MatrixXd mean;      // components x channels
  Eigen::MatrixXd variance;  // components x channels, strictly positive
  Eigen::VectorXd weight;    // sums to one
};

// Predicted measurement mixture for one robot particle under candidate
// controls: component j comes from source hypothesis j, with channel k mean
// alpha0 + alpha * r_jk and variance r_jk * sigma_z_sq, where r_jk is the
// range from source hypothesis j to robot k displaced by control.c[k].
GaussianMixture build_mixture(const RobotParticle& particle,
                              const ControlInput& control,
                              const EnvParams& env);

// Exact conditional entropy sum_j w_j * (1/2) log((2*pi*e)^K prod_k var_jk).
double gaussian_conditional_entropy(const GaussianMixture& mix);

// Pairwise-convolution entropy estimate
//   -sum_j w_j log sum_l w_l N(mean_j; mean_l, diag(var_j + var_l)).
// For a single component this evaluates to (1/2) log((2*pi)^K prod_k 2*var_k),
// a known constant offset above the exact entropy.
double mixture_entropy_pairwise(const GaussianMixture& mix);

// Monte-Carlo entropy oracle: -mean log p(z_s) over samples z_s drawn from the
// mixture. Used by tests to bound the pairwise estimate's bias.
double mixture_entropy_monte_carlo(const GaussianMixture& mix, int num_samples,
                                   RandomStream& rng);

// Objective snapshot for one control solve. Holds the belief's particle data
// (inner sets subsampled to mixture_cap heaviest components, renormalized),
// the environment, the active-robot mask, and the candidate control. Outer
// weights are frozen at their current values.
struct MIObjectiveContext {
  struct ParticleData {
    Eigen::MatrixXd robots;      // K x 2 robot positions of this outer particle
    Eigen::MatrixXd sources;     // m x 2 retained source hypotheses
    Eigen::VectorXd weights;     // m, renormalized
    Eigen::VectorXd log_weights; // m
    double outer_weight;
  };
  std::vector<ParticleData> particles;
  EnvParams env;
  std::vector<bool> active;
  ControlInput control;  // candidate under evaluation; callers update in place
};

// mixture_cap <= 0 disables subsampling.
MIObjectiveContext make_mi_context(const BeliefState& belief,
                                   const EnvParams& env,
                                   const std::vector<bool>& active,
                                   int mixture_cap);

// Predicted one-step information gain about the source (nats):
//   sum_i w_i [ H_pair(mixture_i) - H_pair_cond(mixture_i) ]
// where both terms use the pairwise-convolution form, so a point-mass source
// belief scores exactly zero and far-separated equal halves score log 2.
double predicted_mutual_information(const MIObjectiveContext& ctx);

// Analytic gradient of predicted_mutual_information with respect to each
// active robot's control (zero rows for inactive robots). K x 2.
Eigen::MatrixXd mi_gradient(const MIObjectiveContext& ctx);

// Both at once; the matrices above share almost all their work.
double mi_value_and_gradient(const MIObjectiveContext& ctx,
                             Eigen::MatrixXd& gradient);

struct ProjectionResult {
  ControlInput control;
  bool feasible = true;  // every constrained pair's predicted gap >= d_min
  bool input_positions_infeasible = false;  // base positions already violate d_min
  double min_predicted_gap = 0.0;  // over constrained pairs (inf if none)
  int sweeps = 0;
};

// Projects candidate controls onto the feasible set: renormalizes each active
// control to step_len, then repairs violated pairs by rotating the pair's
// controls through the smallest angle restoring d_min (alternating sweeps, up
// to 50), falling back to a per-robot max-min-gap rotation search when the
// pairwise sweeps stall. Constrained pairs are those with at least one active
// robot: inactive robots keep zero controls and act as fixed obstacles, and a
// pair of stopped robots is beyond repair by any control. If no feasible
// iterate is found the one with the largest minimum gap is returned; the
// minimum predicted gap never drops below the renormalized input's.
ProjectionResult project_controls(const ControlInput& candidate,
                                  const std::vector<Position>& robot_positions,
                                  const std::vector<bool>& active,
                                  double d_min, double step_len);

struct ControlSolveResult {
  ControlInput control;
  double objective = 0.0;  // predicted information gain of the returned control
  bool feasible = true;
  int iterations = 0;
};

// Projected gradient ascent on the predicted information gain. Initialized
// with unit steps toward the current source estimate (random direction if a
// robot estimate coincides with it), then up to ascent_max_iters iterations,
// each moving every active robot ascent_step meters along its own gradient
// direction before projection; stops early once the objective changes by
// less than ascent_tol. Returns the best feasible iterate seen, so the
// result is never worse than the initialization.
ControlSolveResult solve_control(const BeliefState& belief,
                                 const ExperimentConfig& cfg,
                                 const std::vector<bool>& active,
                                 RandomStream& rng);

}  // namespace slass
