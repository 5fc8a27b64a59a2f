#include "slass/policies.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace slass {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

void normalize_or_throw(Eigen::VectorXd& log_w, Eigen::VectorXd& weights,
                        int cycle, const char* stage) {
  const double total = log_sum_exp(log_w);
  if (total == kNegInf || std::isnan(total)) {
    throw DegenerateBeliefError(cycle, std::string(stage) +
                                           " degenerate at cycle " +
                                           std::to_string(cycle));
  }
  weights = (log_w.array() - total).exp();
  weights /= weights.sum();
}

}  // namespace

PolicyKind parse_policy(const std::string& name) {
  if (name == "proposed") return PolicyKind::proposed;
  if (name == "flocking") return PolicyKind::flocking;
  if (name == "two_stage") return PolicyKind::two_stage;
  throw std::invalid_argument("unknown policy: " + name);
}

std::string policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::proposed: return "proposed";
    case PolicyKind::flocking: return "flocking";
    case PolicyKind::two_stage: return "two_stage";
  }
  throw std::logic_error("unreachable");
}

ProjectionResult flocking_control(const BeliefState& belief,
                                  const ExperimentConfig& cfg,
                                  const std::vector<bool>& active) {
  const Position src = source_estimate(belief);
  const std::vector<Position> robots = robot_estimate(belief);
  ControlInput c;
  c.c.assign(cfg.num_robots, Position::Zero());
  // A robot whose estimate coincides with the source estimate holds still
  // this cycle; it is masked out so projection does not renormalize it.
  std::vector<bool> effective = active;
  for (int k = 0; k < cfg.num_robots; ++k) {
    if (!active[k]) continue;
    const Position d = src - robots[k];
    if (d.norm() < 1e-9) {
      effective[k] = false;
      continue;
    }
    c.c[k] = d * (cfg.motion.step_len / d.norm());
  }
  return project_controls(c, robots, effective, cfg.d_min, cfg.motion.step_len);
}

TwoStageState two_stage_init(const ExperimentConfig& cfg, RandomStream& rng) {
  TwoStageState st;
  st.cycle = 1;
  st.robot_particles.assign(cfg.robot_particles, cfg.robot_starts);
  st.robot_weights =
      Eigen::VectorXd::Constant(cfg.robot_particles, 1.0 / cfg.robot_particles);
  st.source_particles.resize(cfg.source_particles);
  const Position lo = cfg.area.min();
  const Position hi = cfg.area.max();
  for (Position& p : st.source_particles) {
    p.x() = rng.uniform(lo.x(), hi.x());
    p.y() = rng.uniform(lo.y(), hi.y());
  }
  st.source_weights = Eigen::VectorXd::Constant(cfg.source_particles,
                                                1.0 / cfg.source_particles);
  return st;
}

void two_stage_robot_update(TwoStageState& state, const MeasurementSet& z,
                            const EnvParams& env) {
  const int m_r = static_cast<int>(state.robot_particles.size());
  const int k_num = static_cast<int>(state.robot_particles.front().size());
  Eigen::VectorXd log_w(m_r);
  for (int i = 0; i < m_r; ++i) {
    const auto& robots = state.robot_particles[i];
    double ll = 0.0;
    int idx = 0;
    for (int a = 0; a < k_num; ++a) {
      for (int b = a + 1; b < k_num; ++b, ++idx) {
        ll += pair_log_likelihood(z.robot_to_robot[idx], robots[a], robots[b], env);
      }
    }
    log_w[i] = std::log(state.robot_weights[i]) + ll;
  }
  normalize_or_throw(log_w, state.robot_weights, state.cycle, "robot filter");
}

void two_stage_source_update(TwoStageState& state, const MeasurementSet& z,
                             const std::vector<Position>& robot_point,
                             const EnvParams& env) {
  const int m_s = static_cast<int>(state.source_particles.size());
  const int k_num = static_cast<int>(robot_point.size());
  Eigen::VectorXd log_w(m_s);
  for (int j = 0; j < m_s; ++j) {
    double ll = 0.0;
    for (int k = 0; k < k_num; ++k) {
      ll += pair_log_likelihood(z.source_to_robot[k], state.source_particles[j],
                                robot_point[k], env);
    }
    log_w[j] = std::log(state.source_weights[j]) + ll;
  }
  normalize_or_throw(log_w, state.source_weights, state.cycle, "source filter");
}

TwoStageCycleResult two_stage_cycle(TwoStageState& state,
                                    const MeasurementSet& z,
                                    const ExperimentConfig& cfg,
                                    const std::vector<bool>& active,
                                    RandomStream& filter_rng,
                                    RandomStream& control_rng) {
  TwoStageCycleResult out;
  const int m_r = static_cast<int>(state.robot_particles.size());
  const int m_s = static_cast<int>(state.source_particles.size());

  two_stage_robot_update(state, z, cfg.env);
  out.ess_stage1 = effective_sample_size(state.robot_weights);
  if (out.ess_stage1 < cfg.ess_threshold * m_r) {
    const auto idx = systematic_resample_indices(state.robot_weights, m_r,
                                                 filter_rng.uniform());
    std::vector<std::vector<Position>> next(m_r);
    for (int i = 0; i < m_r; ++i) next[i] = state.robot_particles[idx[i]];
    state.robot_particles = std::move(next);
    state.robot_weights.setConstant(1.0 / m_r);
  }
  out.robot_est.assign(cfg.num_robots, Position::Zero());
  for (int i = 0; i < m_r; ++i) {
    for (int k = 0; k < cfg.num_robots; ++k) {
      out.robot_est[k] += state.robot_weights[i] * state.robot_particles[i][k];
    }
  }

  two_stage_source_update(state, z, out.robot_est, cfg.env);
  if (effective_sample_size(state.source_weights) < cfg.ess_threshold * m_s) {
    const auto idx = systematic_resample_indices(state.source_weights, m_s,
                                                 filter_rng.uniform());
    std::vector<Position> next(m_s);
    for (int j = 0; j < m_s; ++j) next[j] = state.source_particles[idx[j]];
    state.source_particles = std::move(next);
    state.source_weights.setConstant(1.0 / m_s);
  }
  out.source_est = Position::Zero();
  for (int j = 0; j < m_s; ++j) {
    out.source_est += state.source_weights[j] * state.source_particles[j];
  }

  // Control: the same information objective, run on a single collapsed robot
  // hypothesis located at the stage-1 estimates.
  BeliefState collapsed;
  collapsed.cycle = state.cycle;
  RobotParticle rp;
  rp.robots = out.robot_est;
  rp.weight = 1.0;
  rp.source_set.resize(m_s);
  for (int j = 0; j < m_s; ++j) {
    rp.source_set[j] = {state.source_particles[j], state.source_weights[j]};
  }
  collapsed.particles.push_back(std::move(rp));
  const ControlSolveResult solved =
      solve_control(collapsed, cfg, active, control_rng);
  out.control = solved.control;
  out.objective = solved.objective;
  out.control_feasible = solved.feasible;
  return out;
}

void two_stage_predict(TwoStageState& state, const ControlInput& control,
                       const MotionParams& motion, RandomStream& rng) {
  const double sc = std::sqrt(motion.sigma_c_sq);
  const double ss = std::sqrt(motion.sigma_s_sq);
  for (auto& robots : state.robot_particles) {
    for (std::size_t k = 0; k < robots.size(); ++k) {
      robots[k].x() += control.c[k].x() + sc * rng.gaussian();
      robots[k].y() += control.c[k].y() + sc * rng.gaussian();
    }
  }
  for (Position& p : state.source_particles) {
    p.x() += ss * rng.gaussian();
    p.y() += ss * rng.gaussian();
  }
}

}  // namespace slass
