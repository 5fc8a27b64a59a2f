#include "slass/measurement.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace slass {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string("measurement: non-finite ") + what);
  }
}

void require_finite(const Position& p, const char* what) {
  require_finite(p.x(), what);
  require_finite(p.y(), what);
}

}  // namespace

int robot_pair_index(int a, int b, int num_robots) {
  // Lexicographic (a,b), a < b: rows of decreasing length ahead of row a.
  return a * num_robots - a * (a + 1) / 2 + (b - a - 1);
}

double pair_log_likelihood(double z, const Position& p1, const Position& p2,
                           const EnvParams& env) {
  require_finite(z, "reading");
  require_finite(p1, "position");
  require_finite(p2, "position");
  const double r = std::max(kRangeFloor, (p1 - p2).norm());
  const double var = r * env.sigma_z_sq;
  const double diff = z - (env.alpha0 + env.alpha * r);
  return -0.5 * (kLog2Pi + std::log(var)) - diff * diff / (2.0 * var);
}

double joint_log_likelihood(const MeasurementSet& z, const Position& source,
                            const std::vector<Position>& robots,
                            const EnvParams& env) {
  const int k = static_cast<int>(robots.size());
  if (z.source_to_robot.size() != k ||
      z.robot_to_robot.size() != robot_pair_count(k)) {
    throw std::invalid_argument(
        "measurement: set sized for a different robot count");
  }
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    total += pair_log_likelihood(z.source_to_robot[i], source, robots[i], env);
  }
  int idx = 0;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b, ++idx) {
      total += pair_log_likelihood(z.robot_to_robot[idx], robots[a], robots[b], env);
    }
  }
  return total;
}

MeasurementSet sample_measurements(const Position& source,
                                   const std::vector<Position>& robots,
                                   const EnvParams& env, RandomStream& rng,
                                   int cycle) {
  const int k = static_cast<int>(robots.size());
  MeasurementSet z;
  z.cycle = cycle;
  z.source_to_robot.resize(k);
  z.robot_to_robot.resize(robot_pair_count(k));
  for (int i = 0; i < k; ++i) {
    const double r = std::max(kRangeFloor, (source - robots[i]).norm());
    z.source_to_robot[i] =
        rng.gaussian(env.alpha0 + env.alpha * r, std::sqrt(r * env.sigma_z_sq));
  }
  int idx = 0;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b, ++idx) {
      const double r = std::max(kRangeFloor, (robots[a] - robots[b]).norm());
      z.robot_to_robot[idx] =
          rng.gaussian(env.alpha0 + env.alpha * r, std::sqrt(r * env.sigma_z_sq));
    }
  }
  return z;
}

}  // namespace slass
