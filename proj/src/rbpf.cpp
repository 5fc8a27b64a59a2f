#include "slass/rbpf.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace slass {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a NaN propagates)
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

BeliefState init_belief(const ExperimentConfig& cfg, RandomStream& rng) {
  BeliefState belief;
  belief.cycle = 1;
  belief.particles.resize(cfg.robot_particles);
  const Position lo = cfg.area.min();
  const Position hi = cfg.area.max();
  for (RobotParticle& p : belief.particles) {
    p.robots = cfg.robot_starts;
    p.weight = 1.0 / cfg.robot_particles;
    p.source_set.resize(cfg.source_particles);
    for (SourceParticle& s : p.source_set) {
      s.pos.x() = rng.uniform(lo.x(), hi.x());
      s.pos.y() = rng.uniform(lo.y(), hi.y());
      s.weight = 1.0 / cfg.source_particles;
    }
  }
  return belief;
}

void predict(BeliefState& belief, const ControlInput& control,
             const MotionParams& motion, RandomStream& rng) {
  const double sc = std::sqrt(motion.sigma_c_sq);
  const double ss = std::sqrt(motion.sigma_s_sq);
  for (RobotParticle& p : belief.particles) {
    assert(control.c.size() == p.robots.size());
    for (std::size_t k = 0; k < p.robots.size(); ++k) {
      p.robots[k].x() += control.c[k].x() + sc * rng.gaussian();
      p.robots[k].y() += control.c[k].y() + sc * rng.gaussian();
    }
    for (SourceParticle& s : p.source_set) {
      s.pos.x() += ss * rng.gaussian();
      s.pos.y() += ss * rng.gaussian();
    }
  }
}

void update_weights(BeliefState& belief, const MeasurementSet& z,
                    const EnvParams& env) {
  const int m_r = static_cast<int>(belief.particles.size());
  Eigen::VectorXd outer_log(m_r);
  for (int i = 0; i < m_r; ++i) {
    RobotParticle& p = belief.particles[i];
    const int m_s = static_cast<int>(p.source_set.size());
    Eigen::VectorXd inner_log(m_s);
    for (int j = 0; j < m_s; ++j) {
      inner_log[j] = std::log(p.source_set[j].weight) +
                     joint_log_likelihood(z, p.source_set[j].pos, p.robots, env);
    }
    // The inner normalizer doubles as the outer marginal-likelihood increment.
    const double increment = log_sum_exp(inner_log);
    outer_log[i] = std::log(p.weight) + increment;
    if (increment == kNegInf) {
      // Dead hypothesis: outer weight becomes zero below; keep a valid
      // (uniform) inner distribution so invariants hold.
      for (SourceParticle& s : p.source_set) s.weight = 1.0 / m_s;
      continue;
    }
    double sum = 0.0;
    for (int j = 0; j < m_s; ++j) {
      p.source_set[j].weight = std::exp(inner_log[j] - increment);
      sum += p.source_set[j].weight;
    }
    for (SourceParticle& s : p.source_set) s.weight /= sum;
  }
  const double total = log_sum_exp(outer_log);
  if (total == kNegInf || std::isnan(total)) {
    throw DegenerateBeliefError(
        belief.cycle, "belief degenerate at cycle " + std::to_string(belief.cycle) +
                          ": zero total likelihood mass");
  }
  double sum = 0.0;
  for (int i = 0; i < m_r; ++i) {
    belief.particles[i].weight = std::exp(outer_log[i] - total);
    sum += belief.particles[i].weight;
  }
  for (RobotParticle& p : belief.particles) p.weight /= sum;
}

double effective_sample_size(const Eigen::VectorXd& weights) {
  return 1.0 / weights.squaredNorm();
}

std::vector<int> systematic_resample_indices(const Eigen::VectorXd& weights,
                                             int count, double u) {
  const int n = static_cast<int>(weights.size());
  std::vector<int> out(count);
  double cum = weights[0];
  int i = 0;
  for (int m = 0; m < count; ++m) {
    const double pos = (u + m) / count;
    while (pos > cum && i + 1 < n) cum += weights[++i];
    out[m] = i;
  }
  return out;
}

void resample(BeliefState& belief, double ess_threshold, RandomStream& rng) {
  // Inner sets first (in particle order), then the outer level, so that outer
  // copies clone already-consolidated source sets. One uniform per level hit.
  for (RobotParticle& p : belief.particles) {
    const int m_s = static_cast<int>(p.source_set.size());
    Eigen::VectorXd w(m_s);
    for (int j = 0; j < m_s; ++j) w[j] = p.source_set[j].weight;
    if (effective_sample_size(w) >= ess_threshold * m_s) continue;
    const std::vector<int> idx = systematic_resample_indices(w, m_s, rng.uniform());
    std::vector<SourceParticle> next(m_s);
    for (int j = 0; j < m_s; ++j) {
      next[j] = p.source_set[idx[j]];
      next[j].weight = 1.0 / m_s;
    }
    p.source_set = std::move(next);
  }
  const int m_r = static_cast<int>(belief.particles.size());
  const Eigen::VectorXd w = outer_weights(belief);
  if (effective_sample_size(w) < ess_threshold * m_r) {
    const std::vector<int> idx = systematic_resample_indices(w, m_r, rng.uniform());
    std::vector<RobotParticle> next(m_r);
    for (int i = 0; i < m_r; ++i) {
      next[i] = belief.particles[idx[i]];
      next[i].weight = 1.0 / m_r;
    }
    belief.particles = std::move(next);
  }
}

Position source_estimate(const BeliefState& belief) {
  Position est = Position::Zero();
  for (const RobotParticle& p : belief.particles) {
    Position inner = Position::Zero();
    for (const SourceParticle& s : p.source_set) inner += s.weight * s.pos;
    est += p.weight * inner;
  }
  return est;
}

std::vector<Position> robot_estimate(const BeliefState& belief) {
  const std::size_t k = belief.particles.front().robots.size();
  std::vector<Position> est(k, Position::Zero());
  for (const RobotParticle& p : belief.particles) {
    for (std::size_t i = 0; i < k; ++i) est[i] += p.weight * p.robots[i];
  }
  return est;
}

Eigen::VectorXd outer_weights(const BeliefState& belief) {
  Eigen::VectorXd w(belief.particles.size());
  for (std::size_t i = 0; i < belief.particles.size(); ++i) {
    w[i] = belief.particles[i].weight;
  }
  return w;
}

}  // namespace slass
