#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace slass {

// 2-D position in meters.
using Position = Eigen::Vector2d;

// Axis-aligned workspace rectangle, meters.
using Rect = Eigen::AlignedBox2d;

// RF measurement model: z ~ N(alpha0 + alpha * r, r * sigma_z_sq) at range r.
struct EnvParams {
  double alpha0 = 0.0;      // path-loss offset
  double alpha = 1.0;       // path-loss slope per meter
  double sigma_z_sq = 0.1;  // noise variance growth per meter of range
};

// Motion model: one control cycle moves a robot by its commanded displacement
// plus zero-mean Gaussian error, independently per axis.
struct MotionParams {
  double sigma_c_sq = 0.025;  // control error variance per axis
  double sigma_s_sq = 0.1;    // source jitter variance per axis (belief roughening)
  double step_len = 1.0;      // commanded displacement norm, meters per cycle
};

// Knobs for the information-driven control solver.
struct ControlSolveParams {
  double ascent_step = 0.2;    // meters moved along the gradient per iteration
  int ascent_max_iters = 30;   // projected-ascent iteration cap
  double ascent_tol = 1e-6;    // stop when objective improves less than this (nats)
  int mixture_cap = 64;        // max mixture components per robot particle (<=0: uncapped)
};

// Per-robot commanded displacements for one cycle. Entries for stopped robots
// are zero; entries for active robots have norm step_len after projection.
struct ControlInput {
  std::vector<Position> c;
};

// Full description of one experiment. Defaults follow the reference setup.
struct ExperimentConfig {
  int num_robots = 2;
  Position source_true{100.0, 100.0};
  std::vector<Position> robot_starts;
  Rect area{Position(0.0, 0.0), Position(150.0, 150.0)};
  EnvParams env;
  MotionParams motion;
  int robot_particles = 100;   // outer particle count M_r
  int source_particles = 100;  // inner particle count M_s per outer particle
  double d_min = 4.0;          // pairwise safety distance, meters
  double arrive_radius = 5.0;  // a robot stops once within this true distance
  int max_cycles = 500;
  double ess_threshold = 0.5;  // resample a level when ESS < threshold * M
  std::uint64_t seed = 42;
  int num_trials = 50;
  ControlSolveParams control;
};

// Reference configuration for a team of 1..3 robots: source at [100,100],
// starts [0,0],[5,0],[0,5], 150x150 workspace, particle counts
// (30,30)/(100,100)/(300,300) for K=1/2/3.
ExperimentConfig default_paper_config(int num_robots = 2);

// Folds a coordinate back into [lo, hi] by mirror reflection at the walls,
// repeating until inside. Interior values pass through unchanged.
double reflect_into(double v, double lo, double hi);

// Per-axis mirror reflection of a point into the rectangle.
Position reflect_into(const Position& p, const Rect& area);

// Throws std::invalid_argument describing the first violated invariant:
// starts pairwise >= d_min, source inside the area, positive particle counts,
// positive variances/step, finite fields, consistent sizes.
void validate(const ExperimentConfig& cfg);

}  // namespace slass
