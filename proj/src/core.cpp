#include "slass/core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace slass {

namespace {

bool finite(const Position& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y());
}

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

}  // namespace

ExperimentConfig default_paper_config(int num_robots) {
  if (num_robots < 1 || num_robots > 3) {
    throw std::invalid_argument(
        "default_paper_config covers 1..3 robots; larger teams need explicit "
        "starts and particle counts");
  }
  ExperimentConfig cfg;
  cfg.num_robots = num_robots;
  const Position all_starts[3] = {{0.0, 0.0}, {5.0, 0.0}, {0.0, 5.0}};
  cfg.robot_starts.assign(all_starts, all_starts + num_robots);
  const int particles[3] = {30, 100, 300};
  cfg.robot_particles = particles[num_robots - 1];
  cfg.source_particles = particles[num_robots - 1];
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.num_robots < 1) fail("num_robots must be >= 1");
  if (static_cast<int>(cfg.robot_starts.size()) != cfg.num_robots)
    fail("robot_starts must have one entry per robot");
  if (!finite(cfg.source_true)) fail("source_true must be finite");
  for (const Position& p : cfg.robot_starts)
    if (!finite(p)) fail("robot_starts must be finite");
  if (cfg.area.isEmpty()) fail("area must be a non-empty rectangle");
  if (!cfg.area.contains(cfg.source_true)) fail("source_true must lie inside area");
  for (int a = 0; a < cfg.num_robots; ++a)
    for (int b = a + 1; b < cfg.num_robots; ++b)
      if ((cfg.robot_starts[a] - cfg.robot_starts[b]).norm() < cfg.d_min)
        fail("robot starts " + std::to_string(a) + " and " + std::to_string(b) +
             " closer than d_min");
  if (!(cfg.env.sigma_z_sq > 0.0)) fail("sigma_z_sq must be positive");
  if (!(cfg.env.alpha > 0.0)) fail("alpha must be positive");
  if (!std::isfinite(cfg.env.alpha0)) fail("alpha0 must be finite");
  if (!(cfg.motion.sigma_c_sq >= 0.0)) fail("sigma_c_sq must be >= 0");
  if (!(cfg.motion.sigma_s_sq >= 0.0)) fail("sigma_s_sq must be >= 0");
  if (!(cfg.motion.step_len > 0.0)) fail("step_len must be positive");
  if (cfg.robot_particles < 1) fail("robot_particles must be >= 1");
  if (cfg.source_particles < 1) fail("source_particles must be >= 1");
  if (!(cfg.d_min >= 0.0)) fail("d_min must be >= 0");
  if (!(cfg.arrive_radius > 0.0)) fail("arrive_radius must be positive");
  if (cfg.max_cycles < 1) fail("max_cycles must be >= 1");
  if (!(cfg.ess_threshold > 0.0 && cfg.ess_threshold <= 1.0))
    fail("ess_threshold must lie in (0, 1]");
  if (cfg.num_trials < 1) fail("num_trials must be >= 1");
  if (!(cfg.control.ascent_step > 0.0)) fail("ascent_step must be positive");
  if (cfg.control.ascent_max_iters < 0) fail("ascent_max_iters must be >= 0");
  if (!(cfg.control.ascent_tol >= 0.0)) fail("ascent_tol must be >= 0");
}

double reflect_into(double v, double lo, double hi) {
  const double w = hi - lo;
  while (v < lo || v > hi) {
    if (v < lo) v = lo + (lo - v);
    if (v > hi) v = hi - (v - hi);
    // A displacement beyond one full width keeps folding on later passes.
    if (!std::isfinite(v)) return lo + 0.5 * w;
  }
  return v;
}

Position reflect_into(const Position& p, const Rect& area) {
  return Position(reflect_into(p.x(), area.min().x(), area.max().x()),
                  reflect_into(p.y(), area.min().y(), area.max().y()));
}

}  // namespace slass
