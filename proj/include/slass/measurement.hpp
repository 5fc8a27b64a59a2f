#pragma once

#include <vector>

#include "slass/core.hpp"
#include "slass/random.hpp"

namespace slass {

// Ranges are clamped below at this floor before entering the measurement
// density, keeping likelihoods finite for coincident positions.
inline constexpr double kRangeFloor = 1e-3;

// One cycle of RSSI-style range measurements: K source-to-robot readings and
// K*(K-1)/2 robot-to-robot readings, robot pairs in lexicographic order
// (0,1),(0,2),...,(1,2),...
struct MeasurementSet {
  Eigen::VectorXd source_to_robot;
  Eigen::VectorXd robot_to_robot;
  int cycle = 0;
};

inline int robot_pair_count(int num_robots) {
  return num_robots * (num_robots - 1) / 2;
}

// Flat index of pair (a, b), a < b, in lexicographic order.
int robot_pair_index(int a, int b, int num_robots);

// Log-density of one reading z between positions p1 and p2:
// log N(z; alpha0 + alpha*r, r*sigma_z_sq) with r = max(kRangeFloor, |p1-p2|).
// Throws std::invalid_argument on non-finite inputs.
double pair_log_likelihood(double z, const Position& p1, const Position& p2,
                           const EnvParams& env);

// Joint log-likelihood of a full measurement set given hypothesized source and
// robot positions: sum of the K source links and all robot-pair links.
// Throws std::invalid_argument on size mismatch or non-finite inputs.
double joint_log_likelihood(const MeasurementSet& z, const Position& source,
                            const std::vector<Position>& robots,
                            const EnvParams& env);

// Draws one measurement set from true positions. Draw order: source links for
// k = 0..K-1, then robot pairs in lexicographic order.
MeasurementSet sample_measurements(const Position& source,
                                   const std::vector<Position>& robots,
                                   const EnvParams& env, RandomStream& rng,
                                   int cycle = 0);

}  // namespace slass
