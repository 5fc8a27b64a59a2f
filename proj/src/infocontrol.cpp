#include "slass/infocontrol.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "slass/measurement.hpp"

namespace slass {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Vector2d rotate(const Eigen::Vector2d& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

// Scratch buffers reused across outer particles within one evaluation.
struct Workspace {
  Eigen::MatrixXd r, ux, uy;       // m x K ranges and unit vectors
  Eigen::MatrixXd resp;            // m x m row-normalized responsibilities
  Eigen::VectorXd ln_s;            // m row log-sums
  Eigen::ArrayXd quad, prod, logits, coeff, a1;
  Eigen::MatrixXd d_dr;            // m x K objective partial w.r.t. ranges
};

// Ranges and range gradients from every retained source hypothesis to every
// displaced robot. Unit vectors are zeroed where the range floor clamps.
void fill_ranges(const MIObjectiveContext::ParticleData& pd,
                 const ControlInput& control, Workspace& ws) {
  const int m = static_cast<int>(pd.sources.rows());
  const int k_num = static_cast<int>(pd.robots.rows());
  ws.r.resize(m, k_num);
  ws.ux.resize(m, k_num);
  ws.uy.resize(m, k_num);
  for (int k = 0; k < k_num; ++k) {
    const double qx = pd.robots(k, 0) + control.c[k].x();
    const double qy = pd.robots(k, 1) + control.c[k].y();
    for (int j = 0; j < m; ++j) {
      const double dx = pd.sources(j, 0) - qx;
      const double dy = pd.sources(j, 1) - qy;
      const double rn = std::sqrt(dx * dx + dy * dy);
      if (rn > kRangeFloor) {
        ws.r(j, k) = rn;
        ws.ux(j, k) = dx / rn;
        ws.uy(j, k) = dy / rn;
      } else {
        ws.r(j, k) = kRangeFloor;
        ws.ux(j, k) = 0.0;
        ws.uy(j, k) = 0.0;
      }
    }
  }
}

// Information gain of one outer particle's predicted mixture, plus (optional)
// partials with respect to every range. Both entropy terms use the pairwise
// convolution form, so the value vanishes exactly for a point-mass source set.
double particle_info_gain(const MIObjectiveContext::ParticleData& pd,
                          const EnvParams& env, bool want_grad, Workspace& ws) {
  const int m = static_cast<int>(pd.sources.rows());
  const int k_num = static_cast<int>(pd.robots.rows());
  const double sz2 = env.sigma_z_sq;
  const double a2_over_s = env.alpha * env.alpha / sz2;
  const double row_const = k_num * (kLog2Pi + std::log(sz2));

  ws.resp.resize(m, m);
  ws.ln_s.resize(m);
  ws.quad.resize(m);
  ws.prod.resize(m);
  ws.logits.resize(m);

  for (int j = 0; j < m; ++j) {
    ws.quad.setZero();
    ws.prod.setOnes();
    for (int k = 0; k < k_num; ++k) {
      const auto rc = ws.r.col(k).array();
      const double rj = ws.r(j, k);
      ws.quad += (rc - rj).square() / (rc + rj);
      ws.prod *= rc + rj;
    }
    ws.logits = pd.log_weights.array() -
                0.5 * (row_const + ws.prod.log() + a2_over_s * ws.quad);
    const double mx = ws.logits.maxCoeff();
    ws.resp.row(j) = (ws.logits - mx).exp();
    const double sum = ws.resp.row(j).sum();
    ws.ln_s[j] = mx + std::log(sum);
    if (want_grad) ws.resp.row(j) /= sum;
  }

  const double h_mix = -pd.weights.dot(ws.ln_s);
  // Matched conditional term: sum_j w_j * (1/2) log((4*pi*sz2)^K prod_k r_jk).
  const double h_cond =
      0.5 * (k_num * std::log(4.0 * std::numbers::pi * sz2) +
             pd.weights.dot(ws.r.array().log().matrix().rowwise().sum()));
  const double info = h_mix - h_cond;
  if (!want_grad) return info;

  ws.d_dr.resize(m, k_num);
  ws.coeff.resize(m);
  ws.a1.resize(m);
  for (int j = 0; j < m; ++j) {
    const double wj = pd.weights[j];
    ws.coeff = wj * ws.resp.row(j).transpose().array() +
               pd.weights.array() * ws.resp.col(j).array();
    for (int k = 0; k < k_num; ++k) {
      const auto rc = ws.r.col(k).array();
      const double rj = ws.r(j, k);
      // d log N(mean_j; mean_l, V) / d r_jk with V = sz2*(r_jk + r_lk),
      // mean difference e = alpha*(r_jk - r_lk).
      const auto inv_v = 1.0 / (sz2 * (rj + rc));
      const auto e = env.alpha * (rj - rc);
      ws.a1 = -0.5 * inv_v *
              (sz2 + 2.0 * env.alpha * e - e.square() * sz2 * inv_v);
      ws.d_dr(j, k) = -(ws.coeff * ws.a1).sum() - wj / (2.0 * rj);
    }
  }
  return info;
}

double context_eval(const MIObjectiveContext& ctx, bool want_grad,
                    Eigen::MatrixXd* gradient) {
  const int k_num = static_cast<int>(ctx.active.size());
  assert(static_cast<int>(ctx.control.c.size()) == k_num);
  if (gradient) gradient->setZero(k_num, 2);
  Workspace ws;
  double value = 0.0;
  for (const auto& pd : ctx.particles) {
    if (pd.outer_weight == 0.0) continue;
    fill_ranges(pd, ctx.control, ws);
    value += pd.outer_weight * particle_info_gain(pd, ctx.env, want_grad, ws);
    if (!want_grad) continue;
    for (int k = 0; k < k_num; ++k) {
      // Chain rule: d r_jk / d c_k = -u_jk.
      const double gx = -(ws.d_dr.col(k).array() * ws.ux.col(k).array()).sum();
      const double gy = -(ws.d_dr.col(k).array() * ws.uy.col(k).array()).sum();
      (*gradient)(k, 0) += pd.outer_weight * gx;
      (*gradient)(k, 1) += pd.outer_weight * gy;
    }
  }
  if (gradient) {
    for (int k = 0; k < k_num; ++k) {
      if (!ctx.active[k]) gradient->row(k).setZero();
    }
  }
  return value;
}

// Minimum predicted gap over constrained pairs (those with at least one
// active robot); a pair of stopped robots cannot be separated by any control.
double min_predicted_gap(const ControlInput& control,
                         const std::vector<Position>& positions,
                         const std::vector<bool>& active) {
  const int k_num = static_cast<int>(positions.size());
  double gap = kInf;
  for (int a = 0; a < k_num; ++a) {
    for (int b = a + 1; b < k_num; ++b) {
      if (!active[a] && !active[b]) continue;
      gap = std::min(gap, ((positions[a] + control.c[a]) -
                           (positions[b] + control.c[b]))
                              .norm());
    }
  }
  return gap;
}

double sign_or_one(double v) { return v < 0.0 ? -1.0 : 1.0; }

// Rotates the controls of a violated pair through the smallest scanned angle
// that restores d_min (equal magnitudes, senses picked to open the gap). If no
// angle reaches d_min the angle with the widest gap is used.
void repair_pair(ControlInput& control, const std::vector<Position>& positions,
                 const std::vector<bool>& active, int a, int b, double d_min) {
  const bool rot_a = active[a];
  const bool rot_b = active[b];
  if (!rot_a && !rot_b) return;
  const Position qa = positions[a] + control.c[a];
  const Position qb = positions[b] + control.c[b];
  const double gap = (qa - qb).norm();
  Eigen::Vector2d axis = gap > 1e-12 ? ((qa - qb) / gap).eval()
                                     : Eigen::Vector2d(1.0, 0.0);
  const auto perp = [](const Eigen::Vector2d& v) {
    return Eigen::Vector2d(-v.y(), v.x());
  };
  const double sa = rot_a ? sign_or_one(axis.dot(perp(control.c[a]))) : 0.0;
  const double sb = rot_b ? -sign_or_one(axis.dot(perp(control.c[b]))) : 0.0;
  const auto gap_at = [&](double theta) {
    const Position pa =
        positions[a] + (rot_a ? rotate(control.c[a], sa * theta) : control.c[a]);
    const Position pb =
        positions[b] + (rot_b ? rotate(control.c[b], sb * theta) : control.c[b]);
    return (pa - pb).norm();
  };
  constexpr int kScan = 90;
  int hit = -1;
  double best_theta = 0.0;
  double best_gap = gap_at(0.0);
  for (int i = 1; i <= kScan; ++i) {
    const double theta = std::numbers::pi * i / kScan;
    const double g = gap_at(theta);
    if (g > best_gap) {
      best_gap = g;
      best_theta = theta;
    }
    if (g >= d_min) {
      hit = i;
      break;
    }
  }
  double theta;
  if (hit >= 0) {
    double lo = std::numbers::pi * (hit - 1) / kScan;
    double hi = std::numbers::pi * hit / kScan;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (gap_at(mid) >= d_min ? hi : lo) = mid;
    }
    theta = hi;
  } else {
    theta = best_theta;
  }
  if (rot_a) control.c[a] = rotate(control.c[a], sa * theta);
  if (rot_b) control.c[b] = rotate(control.c[b], sb * theta);
}

// Fallback when pairwise repair stalls: rotate one robot's control at a time
// to the angle maximizing the minimum constrained gap (coarse scan plus a
// local ternary refinement), looping over active robots until feasible or no
// round improves. With a single active robot this searches its whole
// reachable circle, so it finds a feasible direction whenever one exists.
void maximin_rotation_pass(ControlInput& control,
                           const std::vector<Position>& positions,
                           const std::vector<bool>& active, double d_min) {
  const int k_num = static_cast<int>(positions.size());
  constexpr int kScan = 720;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int round = 0; round < 3 * k_num; ++round) {
    bool improved = false;
    for (int k = 0; k < k_num; ++k) {
      if (!active[k]) continue;
      const Position base = control.c[k];
      const auto gap_at = [&](double theta) {
        const Position moved = positions[k] + rotate(base, theta);
        double gap = kInf;
        for (int o = 0; o < k_num; ++o) {
          if (o == k) continue;
          gap = std::min(gap, (moved - (positions[o] + control.c[o])).norm());
        }
        return gap;
      };
      double best_theta = 0.0;
      double best = gap_at(0.0);
      for (int i = 1; i < kScan; ++i) {
        const double theta = kTwoPi * i / kScan;
        const double g = gap_at(theta);
        if (g > best) {
          best = g;
          best_theta = theta;
        }
      }
      double lo = best_theta - kTwoPi / kScan;
      double hi = best_theta + kTwoPi / kScan;
      for (int it = 0; it < 80; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (gap_at(m1) < gap_at(m2)) {
          lo = m1;
        } else {
          hi = m2;
        }
      }
      const double refined = 0.5 * (lo + hi);
      const double pick = gap_at(refined) > best ? refined : best_theta;
      if (gap_at(pick) > gap_at(0.0) + 1e-12) {
        control.c[k] = rotate(base, pick);
        improved = true;
      }
    }
    if (!improved) break;
    if (min_predicted_gap(control, positions, active) >= d_min) break;
  }
}

}  // namespace

GaussianMixture build_mixture(const RobotParticle& particle,
                              const ControlInput& control,
                              const EnvParams& env) {
  const int m = static_cast<int>(particle.source_set.size());
  const int k_num = static_cast<int>(particle.robots.size());
  GaussianMixture mix;
  mix.mean.resize(m, k_num);
  mix.variance.resize(m, k_num);
  mix.weight.resize(m);
  for (int j = 0; j < m; ++j) {
    mix.weight[j] = particle.source_set[j].weight;
    for (int k = 0; k < k_num; ++k) {
      const Position displaced = particle.robots[k] + control.c[k];
      const double r = std::max(kRangeFloor,
                                (particle.source_set[j].pos - displaced).norm());
      mix.mean(j, k) = env.alpha0 + env.alpha * r;
      mix.variance(j, k) = r * env.sigma_z_sq;
    }
  }
  return mix;
}

double gaussian_conditional_entropy(const GaussianMixture& mix) {
  const int k_num = static_cast<int>(mix.mean.cols());
  const double c = k_num * (kLog2Pi + 1.0);
  double h = 0.0;
  for (int j = 0; j < mix.weight.size(); ++j) {
    h += mix.weight[j] *
         0.5 * (c + mix.variance.row(j).array().log().sum());
  }
  return h;
}

double mixture_entropy_pairwise(const GaussianMixture& mix) {
  const int m = static_cast<int>(mix.weight.size());
  const int k_num = static_cast<int>(mix.mean.cols());
  double h = 0.0;
  Eigen::VectorXd logits(m);
  for (int j = 0; j < m; ++j) {
    for (int l = 0; l < m; ++l) {
      const auto v = (mix.variance.row(j) + mix.variance.row(l)).array();
      const auto d = (mix.mean.row(j) - mix.mean.row(l)).array();
      logits[l] = std::log(mix.weight[l]) -
                  0.5 * (k_num * kLog2Pi + v.log().sum() + (d.square() / v).sum());
    }
    const double mx = logits.maxCoeff();
    h -= mix.weight[j] * (mx + std::log((logits.array() - mx).exp().sum()));
  }
  return h;
}

double mixture_entropy_monte_carlo(const GaussianMixture& mix, int num_samples,
                                   RandomStream& rng) {
  const int m = static_cast<int>(mix.weight.size());
  const int k_num = static_cast<int>(mix.mean.cols());
  Eigen::VectorXd z(k_num), logits(m);
  const Eigen::MatrixXd sd = mix.variance.array().sqrt();
  double total = 0.0;
  for (int s = 0; s < num_samples; ++s) {
    // Component by cumulative weight, then one draw per channel.
    const double u = rng.uniform();
    int comp = 0;
    double cum = mix.weight[0];
    while (u > cum && comp + 1 < m) cum += mix.weight[++comp];
    for (int k = 0; k < k_num; ++k) {
      z[k] = mix.mean(comp, k) + sd(comp, k) * rng.gaussian();
    }
    for (int l = 0; l < m; ++l) {
      const auto d = (z.transpose() - mix.mean.row(l)).array();
      const auto v = mix.variance.row(l).array();
      logits[l] = std::log(mix.weight[l]) -
                  0.5 * (k_num * kLog2Pi + v.log().sum() + (d.square() / v).sum());
    }
    const double mx = logits.maxCoeff();
    total += mx + std::log((logits.array() - mx).exp().sum());
  }
  return -total / num_samples;
}

MIObjectiveContext make_mi_context(const BeliefState& belief,
                                   const EnvParams& env,
                                   const std::vector<bool>& active,
                                   int mixture_cap) {
  const int k_num = static_cast<int>(active.size());
  MIObjectiveContext ctx;
  ctx.env = env;
  ctx.active = active;
  ctx.control.c.assign(k_num, Position::Zero());
  ctx.particles.reserve(belief.particles.size());
  std::vector<int> order;
  for (const RobotParticle& p : belief.particles) {
    const int m_s = static_cast<int>(p.source_set.size());
    int keep = m_s;
    order.resize(m_s);
    std::iota(order.begin(), order.end(), 0);
    if (mixture_cap > 0 && m_s > mixture_cap) {
      keep = mixture_cap;
      // Heaviest components win; stable sort keeps index order on ties.
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return p.source_set[a].weight > p.source_set[b].weight;
      });
    }
    MIObjectiveContext::ParticleData pd;
    pd.outer_weight = p.weight;
    pd.robots.resize(k_num, 2);
    for (int k = 0; k < k_num; ++k) pd.robots.row(k) = p.robots[k].transpose();
    pd.sources.resize(keep, 2);
    pd.weights.resize(keep);
    for (int j = 0; j < keep; ++j) {
      pd.sources.row(j) = p.source_set[order[j]].pos.transpose();
      pd.weights[j] = p.source_set[order[j]].weight;
    }
    pd.weights /= pd.weights.sum();
    pd.log_weights = pd.weights.array().log();
    ctx.particles.push_back(std::move(pd));
  }
  return ctx;
}

double predicted_mutual_information(const MIObjectiveContext& ctx) {
  return context_eval(ctx, false, nullptr);
}

Eigen::MatrixXd mi_gradient(const MIObjectiveContext& ctx) {
  Eigen::MatrixXd g;
  context_eval(ctx, true, &g);
  return g;
}

double mi_value_and_gradient(const MIObjectiveContext& ctx,
                             Eigen::MatrixXd& gradient) {
  return context_eval(ctx, true, &gradient);
}

ProjectionResult project_controls(const ControlInput& candidate,
                                  const std::vector<Position>& robot_positions,
                                  const std::vector<bool>& active,
                                  double d_min, double step_len) {
  const int k_num = static_cast<int>(robot_positions.size());
  assert(static_cast<int>(candidate.c.size()) == k_num);
  assert(static_cast<int>(active.size()) == k_num);
  constexpr double kSlack = 1e-9;

  ProjectionResult res;
  res.control.c.assign(k_num, Position::Zero());
  for (int k = 0; k < k_num; ++k) {
    if (!active[k]) continue;
    const double n = candidate.c[k].norm();
    // Degenerate candidates get a deterministic fallback direction.
    res.control.c[k] = n > 1e-12 ? (candidate.c[k] * (step_len / n)).eval()
                                 : Position(step_len, 0.0);
  }

  ControlInput zero;
  zero.c.assign(k_num, Position::Zero());
  res.input_positions_infeasible =
      min_predicted_gap(zero, robot_positions, active) < d_min - kSlack;

  ControlInput best = res.control;
  double best_gap = min_predicted_gap(res.control, robot_positions, active);
  for (int sweep = 0; sweep < 50; ++sweep) {
    const double gap = min_predicted_gap(res.control, robot_positions, active);
    if (gap >= d_min - kSlack) break;
    res.sweeps = sweep + 1;
    for (int a = 0; a < k_num; ++a) {
      for (int b = a + 1; b < k_num; ++b) {
        if (!active[a] && !active[b]) continue;
        const double pair_gap = ((robot_positions[a] + res.control.c[a]) -
                                 (robot_positions[b] + res.control.c[b]))
                                    .norm();
        if (pair_gap >= d_min - kSlack) continue;
        repair_pair(res.control, robot_positions, active, a, b, d_min);
      }
    }
    const double now = min_predicted_gap(res.control, robot_positions, active);
    if (now > best_gap) {
      best_gap = now;
      best = res.control;
    }
  }
  if (min_predicted_gap(res.control, robot_positions, active) <
      d_min - kSlack) {
    // Pairwise sweeps stalled; search per-robot rotations for the widest
    // minimum gap before giving up.
    maximin_rotation_pass(res.control, robot_positions, active, d_min);
    const double now = min_predicted_gap(res.control, robot_positions, active);
    if (now > best_gap) {
      best_gap = now;
      best = res.control;
    }
  }
  res.min_predicted_gap = min_predicted_gap(res.control, robot_positions, active);
  if (res.min_predicted_gap < d_min - kSlack) {
    // No feasible iterate: return the widest-separation one seen.
    res.control = best;
    res.min_predicted_gap = best_gap;
    res.feasible = false;
  }
  return res;
}

ControlSolveResult solve_control(const BeliefState& belief,
                                 const ExperimentConfig& cfg,
                                 const std::vector<bool>& active,
                                 RandomStream& rng) {
  const int k_num = cfg.num_robots;
  const double step_len = cfg.motion.step_len;
  const Position src = source_estimate(belief);
  const std::vector<Position> robots = robot_estimate(belief);

  ControlInput init;
  init.c.assign(k_num, Position::Zero());
  for (int k = 0; k < k_num; ++k) {
    if (!active[k]) continue;
    const Position d = src - robots[k];
    if (d.norm() > 1e-9) {
      init.c[k] = d * (step_len / d.norm());
    } else {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      init.c[k] = rotate(Position(step_len, 0.0), angle);
    }
  }

  MIObjectiveContext ctx =
      make_mi_context(belief, cfg.env, active, cfg.control.mixture_cap);
  ProjectionResult proj =
      project_controls(init, robots, active, cfg.d_min, step_len);
  ctx.control = proj.control;
  Eigen::MatrixXd grad;
  double value = mi_value_and_gradient(ctx, grad);

  ControlSolveResult res;
  res.control = proj.control;
  res.objective = value;
  res.feasible = proj.feasible;
  double res_gap = proj.min_predicted_gap;
  // Feasible iterates beat infeasible ones; among infeasible ones a wider
  // minimum gap wins (the constraint set may be empty after an estimate
  // jump, and then the widest separation is the right fallback); otherwise
  // the higher objective.
  const auto better = [&](bool feasible, double gap, double value_now) {
    if (feasible != res.feasible) return feasible;
    if (!feasible && std::abs(gap - res_gap) > 1e-9) return gap > res_gap;
    return value_now > res.objective;
  };
  double prev = value;
  ControlInput current = proj.control;
  for (int it = 0; it < cfg.control.ascent_max_iters; ++it) {
    // Fixed-length steps: each active robot moves ascent_step meters along
    // its own gradient direction. The projection renormalizes controls, so
    // only the direction survives; raw-gradient steps would rotate it by a
    // fraction of a degree per iteration at typical objective scales and the
    // solve would never leave its initialization.
    ControlInput next = current;
    for (int k = 0; k < k_num; ++k) {
      if (!active[k]) continue;
      const double gnorm = std::hypot(grad(k, 0), grad(k, 1));
      if (gnorm < 1e-15) continue;
      next.c[k].x() += cfg.control.ascent_step * grad(k, 0) / gnorm;
      next.c[k].y() += cfg.control.ascent_step * grad(k, 1) / gnorm;
    }
    proj = project_controls(next, robots, active, cfg.d_min, step_len);
    ctx.control = proj.control;
    value = mi_value_and_gradient(ctx, grad);
    res.iterations = it + 1;
    if (better(proj.feasible, proj.min_predicted_gap, value)) {
      res.control = proj.control;
      res.objective = value;
      res.feasible = proj.feasible;
      res_gap = proj.min_predicted_gap;
    }
    if (std::abs(value - prev) < cfg.control.ascent_tol) break;
    prev = value;
    current = proj.control;
  }
  return res;
}

}  // namespace slass
