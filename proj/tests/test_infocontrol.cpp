#include <doctest.h>

#include <cmath>
#include <vector>

#include "slass/infocontrol.hpp"
#include "test_support.hpp"

using namespace slass;
using slass::test::make_belief;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

EnvParams paper_env() {
  EnvParams env;
  env.alpha0 = 0.0;
  env.alpha = 1.0;
  env.sigma_z_sq = 0.1;
  return env;
}

RobotParticle make_particle(const std::vector<Position>& robots,
                            const std::vector<std::pair<Position, double>>& sources) {
  RobotParticle p;
  p.weight = 1.0;
  p.robots = robots;
  for (const auto& [pos, w] : sources) p.source_set.push_back({pos, w});
  return p;
}

ControlInput zero_control(int k) {
  ControlInput u;
  u.c.assign(k, Position::Zero());
  return u;
}

double min_pair_gap(const ControlInput& u, const std::vector<Position>& pos,
                    const std::vector<bool>& active) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a + 1 < pos.size(); ++a) {
    for (std::size_t b = a + 1; b < pos.size(); ++b) {
      if (!active[a] && !active[b]) continue;
      gap = std::min(gap, ((pos[a] + u.c[a]) - (pos[b] + u.c[b])).norm());
    }
  }
  return gap;
}

}  // namespace

TEST_CASE("predicted mixture geometry: one component per source hypothesis") {
  const EnvParams env = paper_env();

  const RobotParticle single =
      make_particle({Position(0, 0)}, {{Position(100, 100), 1.0}});
  ControlInput u;
  u.c = {Position(1.0, 0.0)};
  const GaussianMixture mix = build_mixture(single, u, env);
  REQUIRE(mix.mean.rows() == 1);
  REQUIRE(mix.mean.cols() == 1);
  CHECK(mix.weight[0] == doctest::Approx(1.0).epsilon(1e-15));
  // Range from (100,100) to the displaced robot (1,0).
  const double r = std::sqrt(99.0 * 99.0 + 100.0 * 100.0);
  CHECK(mix.mean(0, 0) == doctest::Approx(r).epsilon(1e-12));
  CHECK(mix.mean(0, 0) == doctest::Approx(140.716).epsilon(1e-4));
  CHECK(mix.variance(0, 0) == doctest::Approx(r * 0.1).epsilon(1e-12));

  // Range 5 with sigma_z_sq = 0.1 gives channel variance 0.5; alpha0 shifts
  // the mean but not the variance.
  EnvParams shifted = env;
  shifted.alpha0 = 2.0;
  const RobotParticle near5 =
      make_particle({Position(3, 4)}, {{Position(0, 0), 0.4}, {Position(6, 8), 0.6}});
  const GaussianMixture m5 = build_mixture(near5, zero_control(1), shifted);
  REQUIRE(m5.mean.rows() == 2);
  CHECK(m5.weight[0] == 0.4);
  CHECK(m5.weight[1] == 0.6);
  CHECK(m5.mean(0, 0) == doctest::Approx(2.0 + 5.0).epsilon(1e-12));
  CHECK(m5.variance(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m5.variance(1, 0) == doctest::Approx(0.5).epsilon(1e-12));

  // Two robots: channels ordered by robot index.
  const RobotParticle two =
      make_particle({Position(0, 0), Position(10, 0)}, {{Position(0, 5), 1.0}});
  const GaussianMixture m2 = build_mixture(two, zero_control(2), env);
  REQUIRE(m2.mean.cols() == 2);
  CHECK(m2.mean(0, 0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(m2.mean(0, 1) == doctest::Approx(std::sqrt(125.0)).epsilon(1e-12));
}

TEST_CASE("conditional entropy of a diagonal Gaussian mixture") {
  GaussianMixture one;
  one.mean = Eigen::MatrixXd::Zero(1, 1);
  one.variance = Eigen::MatrixXd::Constant(1, 1, 0.5);
  one.weight = Eigen::VectorXd::Ones(1);
  const double h1 = 0.5 * std::log(kTwoPi * M_E * 0.5);
  CHECK(gaussian_conditional_entropy(one) == doctest::Approx(h1).epsilon(1e-12));
  CHECK(gaussian_conditional_entropy(one) == doctest::Approx(1.0724).epsilon(1e-4));

  GaussianMixture dup;
  dup.mean = Eigen::MatrixXd::Zero(2, 1);
  dup.mean << 0.0, 9.0;  // means do not enter the conditional term
  dup.variance = Eigen::MatrixXd::Constant(2, 1, 0.5);
  dup.weight = Eigen::VectorXd::Constant(2, 0.5);
  CHECK(gaussian_conditional_entropy(dup) == doctest::Approx(h1).epsilon(1e-12));

  GaussianMixture two_ch;
  two_ch.mean = Eigen::MatrixXd::Zero(1, 2);
  two_ch.variance = Eigen::MatrixXd::Zero(1, 2);
  two_ch.variance << 0.5, 1.0;
  two_ch.weight = Eigen::VectorXd::Ones(1);
  const double h2 = 0.5 * std::log(kTwoPi * M_E * kTwoPi * M_E * 0.5);
  CHECK(gaussian_conditional_entropy(two_ch) == doctest::Approx(h2).epsilon(1e-12));
  CHECK(gaussian_conditional_entropy(two_ch) == doctest::Approx(2.4912).epsilon(1e-4));
}

TEST_CASE("pairwise entropy estimate: closed form and Monte-Carlo oracle") {
  // Single component: -ln N(mean; mean, 2*var) = (1/2) ln((2*pi)^K prod 2*var).
  GaussianMixture one;
  one.mean = Eigen::MatrixXd::Constant(1, 2, 3.0);
  one.variance = Eigen::MatrixXd::Zero(1, 2);
  one.variance << 0.5, 2.0;
  one.weight = Eigen::VectorXd::Ones(1);
  const double expect =
      0.5 * std::log(kTwoPi * kTwoPi * (2.0 * 0.5) * (2.0 * 2.0));
  CHECK(mixture_entropy_pairwise(one) == doctest::Approx(expect).epsilon(1e-12));

  // Duplicated component collapses to the single-component value.
  GaussianMixture dup;
  dup.mean = Eigen::MatrixXd::Constant(2, 2, 3.0);
  dup.variance.resize(2, 2);
  dup.variance << 0.5, 2.0, 0.5, 2.0;
  dup.weight = Eigen::VectorXd::Constant(2, 0.5);
  CHECK(mixture_entropy_pairwise(dup) == doctest::Approx(expect).epsilon(1e-12));

  // Five well-separated K=1 components against a Monte-Carlo oracle.
  GaussianMixture five;
  five.mean.resize(5, 1);
  five.mean << 0.0, 25.0, 55.0, 90.0, 130.0;
  five.variance.resize(5, 1);
  five.variance << 1.0, 2.0, 4.0, 1.5, 3.0;
  five.weight.resize(5);
  five.weight << 0.1, 0.3, 0.2, 0.25, 0.15;
  RandomStream rng = rng_stream(31, 0, StreamRole::filter);
  const double mc = mixture_entropy_monte_carlo(five, 1000000, rng);
  const double pw = mixture_entropy_pairwise(five);
  CHECK(std::abs(pw - mc) < 0.10 * std::abs(mc));
}

TEST_CASE("predicted information gain: degenerate and two-symbol limits") {
  const EnvParams env = paper_env();

  // Point-mass source posterior carries no residual uncertainty.
  BeliefState point = make_belief(
      {0.5, 0.5},
      {{Position(0, 0), Position(5, 0)}, {Position(1, 0), Position(6, 0)}},
      {{{Position(70, 70), 1.0}}, {{Position(72, 68), 1.0}}});
  MIObjectiveContext ctx = make_mi_context(point, env, {true, true}, 0);
  ctx.control = zero_control(2);
  CHECK(std::abs(predicted_mutual_information(ctx)) < 1e-9);

  // Coincident inner particles behave the same.
  BeliefState coincident = make_belief(
      {1.0}, {{{Position(0, 0)}}},
      {{{Position(70, 70), 0.25}, {Position(70, 70), 0.75}}});
  MIObjectiveContext ctx2 = make_mi_context(coincident, env, {true}, 0);
  ctx2.control = zero_control(1);
  CHECK(std::abs(predicted_mutual_information(ctx2)) < 1e-9);

  // Two equal-weight hypotheses whose measurement means sit ~16 sigma apart:
  // one measurement resolves one bit.
  BeliefState bimodal = make_belief(
      {1.0}, {{{Position(0, 0)}}},
      {{{Position(50, 0), 0.5}, {Position(100, 0), 0.5}}});
  MIObjectiveContext ctx3 = make_mi_context(bimodal, env, {true}, 0);
  ctx3.control = zero_control(1);
  CHECK(predicted_mutual_information(ctx3) ==
        doctest::Approx(std::log(2.0)).epsilon(0.05));
}

TEST_CASE("predicted information gain depends only on ranges") {
  const EnvParams env = paper_env();
  BeliefState b = make_belief(
      {0.4, 0.6},
      {{Position(2, 3), Position(8, 1)}, {Position(1, 4), Position(9, 2)}},
      {{{Position(40, 50), 0.3}, {Position(60, 30), 0.7}},
       {{Position(45, 55), 0.5}, {Position(65, 35), 0.5}}});
  MIObjectiveContext ctx = make_mi_context(b, env, {true, true}, 0);
  ControlInput u;
  u.c = {Position(0.6, 0.8), Position(-1.0, 0.0)};
  ctx.control = u;
  const double base = predicted_mutual_information(ctx);
  CHECK(base > 0.0);

  const Position shift(37.25, -91.5);
  BeliefState moved = b;
  for (auto& p : moved.particles) {
    for (auto& r : p.robots) r += shift;
    for (auto& sp : p.source_set) sp.pos += shift;
  }
  MIObjectiveContext ctx_moved = make_mi_context(moved, env, {true, true}, 0);
  ctx_moved.control = u;
  CHECK(predicted_mutual_information(ctx_moved) ==
        doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("fused objective evaluation matches the separate calls") {
  const EnvParams env = paper_env();
  RandomStream rng = rng_stream(33, 0, StreamRole::filter);
  BeliefState b = make_belief(
      {0.5, 0.3, 0.2},
      {{Position(0, 0), Position(6, 0)},
       {Position(1, 1), Position(7, 1)},
       {Position(-1, 2), Position(5, -2)}},
      {{{Position(40, 50), 0.3}, {Position(60, 30), 0.5}, {Position(30, 70), 0.2}},
       {{Position(42, 52), 0.6}, {Position(62, 32), 0.2}, {Position(32, 72), 0.2}},
       {{Position(38, 48), 0.1}, {Position(58, 28), 0.4}, {Position(28, 68), 0.5}}});
  MIObjectiveContext ctx = make_mi_context(b, env, {true, true}, 0);
  ctx.control.c = {Position(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                   Position(rng.uniform(-1, 1), rng.uniform(-1, 1))};
  Eigen::MatrixXd g_fused;
  const double v_fused = mi_value_and_gradient(ctx, g_fused);
  const double v = predicted_mutual_information(ctx);
  const Eigen::MatrixXd g = mi_gradient(ctx);
  CHECK(v_fused == doctest::Approx(v).epsilon(1e-12));
  CHECK((g_fused - g).norm() < 1e-12);
}

TEST_CASE("objective gradient: symmetry, flatness, finite differences") {
  const EnvParams env = paper_env();

  // Mirror-symmetric about the x axis: no information in moving off-axis.
  BeliefState sym = make_belief(
      {1.0}, {{{Position(0, 0)}}},
      {{{Position(50, 10), 0.5}, {Position(50, -10), 0.5}}});
  MIObjectiveContext ctx = make_mi_context(sym, env, {true}, 0);
  ctx.control = zero_control(1);
  const Eigen::MatrixXd g_sym = mi_gradient(ctx);
  CHECK(std::abs(g_sym(0, 1)) < 1e-9);

  // Point-mass source: objective identically zero.
  BeliefState point = make_belief({1.0}, {{{Position(0, 0)}}},
                                  {{{Position(50, 50), 1.0}}});
  MIObjectiveContext ctx_p = make_mi_context(point, env, {true}, 0);
  ctx_p.control = zero_control(1);
  CHECK(mi_gradient(ctx_p).norm() < 1e-12);

  // Inactive robots get zero gradient rows.
  BeliefState duo = make_belief(
      {1.0}, {{Position(0, 0), Position(8, 0)}},
      {{{Position(40, 40), 0.5}, {Position(60, 20), 0.5}}});
  MIObjectiveContext ctx_d = make_mi_context(duo, env, {true, false}, 0);
  ctx_d.control = zero_control(2);
  const Eigen::MatrixXd g_d = mi_gradient(ctx_d);
  CHECK(g_d.row(1).norm() == 0.0);
  CHECK(g_d.row(0).norm() > 0.0);

  // Central finite differences across random instances.
  RandomStream rng = rng_stream(34, 0, StreamRole::filter);
  const double fd_step = 1e-5;
  for (int inst = 0; inst < 30; ++inst) {
    const int k_num = 1 + (inst % 2);
    const int m_r = (inst % 3 == 0) ? 1 : 3;
    const int m_s = 1 + (inst * 7) % 8;
    std::vector<double> outer(m_r);
    std::vector<std::vector<Position>> robots(m_r);
    std::vector<std::vector<std::pair<Position, double>>> inners(m_r);
    double osum = 0.0;
    for (int i = 0; i < m_r; ++i) {
      osum += (outer[i] = rng.uniform(0.1, 1.0));
      for (int k = 0; k < k_num; ++k) {
        robots[i].emplace_back(rng.uniform(-10, 10), rng.uniform(-10, 10));
      }
      std::vector<double> ws(m_s);
      double wsum = 0.0;
      for (double& w : ws) wsum += (w = rng.uniform(0.1, 1.0));
      for (int j = 0; j < m_s; ++j) {
        inners[i].push_back({Position(rng.uniform(20, 80), rng.uniform(20, 80)),
                             ws[j] / wsum});
      }
    }
    for (double& w : outer) w /= osum;
    BeliefState b = make_belief(outer, robots, inners);
    MIObjectiveContext c = make_mi_context(b, env, std::vector<bool>(k_num, true), 0);
    c.control.c.clear();
    for (int k = 0; k < k_num; ++k) {
      c.control.c.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1));
    }
    const Eigen::MatrixXd g = mi_gradient(c);
    Eigen::MatrixXd g_fd = Eigen::MatrixXd::Zero(k_num, 2);
    for (int k = 0; k < k_num; ++k) {
      for (int d = 0; d < 2; ++d) {
        MIObjectiveContext cp = c;
        MIObjectiveContext cm = c;
        cp.control.c[k][d] += fd_step;
        cm.control.c[k][d] -= fd_step;
        g_fd(k, d) = (predicted_mutual_information(cp) -
                      predicted_mutual_information(cm)) /
                     (2.0 * fd_step);
      }
    }
    if (g_fd.norm() < 1e-7) {
      CHECK(g.norm() < 1e-7);
    } else {
      CHECK((g - g_fd).norm() / g_fd.norm() < 1e-4);
    }
  }
}

TEST_CASE("collision projection: norms, repair, and monotone minimum gap") {
  // Far-apart robots keep their directions.
  {
    ControlInput u;
    u.c = {Position(1, 0), Position(-1, 0)};
    const std::vector<Position> pos{Position(0, 0), Position(100, 0)};
    const ProjectionResult r =
        project_controls(u, pos, {true, true}, 4.0, 1.0);
    CHECK(r.feasible);
    CHECK((r.control.c[0] - Position(1, 0)).norm() < 1e-12);
    CHECK((r.control.c[1] - Position(-1, 0)).norm() < 1e-12);
  }

  // Head-on approach at 4.5 m: repaired to a predicted gap >= 4.
  {
    ControlInput u;
    u.c = {Position(1, 0), Position(-1, 0)};
    const std::vector<Position> pos{Position(0, 0), Position(4.5, 0)};
    const std::vector<bool> active{true, true};
    const ProjectionResult r = project_controls(u, pos, active, 4.0, 1.0);
    CHECK(r.feasible);
    CHECK(min_pair_gap(r.control, pos, active) >= 4.0 - 1e-6);
    CHECK(r.control.c[0].norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.control.c[1].norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.min_predicted_gap == doctest::Approx(min_pair_gap(r.control, pos, active))
                                     .epsilon(1e-12));
  }

  // Over-length candidates are renormalized to the step length.
  {
    ControlInput u;
    u.c = {Position(3, 0)};
    const ProjectionResult r =
        project_controls(u, {Position(0, 0)}, {true}, 4.0, 1.0);
    CHECK(r.control.c[0].norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((r.control.c[0] - Position(1, 0)).norm() < 1e-9);
  }

  // Inactive robots are pinned at zero control, and the repair still protects
  // the active/stopped pair.
  {
    ControlInput u;
    u.c = {Position(1, 0), Position(0, 0)};
    const std::vector<Position> pos{Position(0, 0), Position(4.8, 0)};
    const std::vector<bool> active{true, false};
    const ProjectionResult r = project_controls(u, pos, active, 4.0, 1.0);
    CHECK(r.control.c[1].norm() == 0.0);
    CHECK(r.control.c[0].norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(min_pair_gap(r.control, pos, active) >= 4.0 - 1e-6);
  }

  // Random unit candidates: projection never shrinks the minimum gap.
  RandomStream rng = rng_stream(35, 0, StreamRole::filter);
  for (int inst = 0; inst < 50; ++inst) {
    const int k_num = 2 + (inst % 2);
    std::vector<Position> pos;
    for (int k = 0; k < k_num; ++k) {
      Position p;
      bool ok;
      do {
        p = Position(rng.uniform(0, 20), rng.uniform(0, 20));
        ok = true;
        for (const auto& q : pos) ok = ok && (p - q).norm() >= 4.0;
      } while (!ok);
      pos.push_back(p);
    }
    ControlInput u;
    for (int k = 0; k < k_num; ++k) {
      const double th = rng.uniform(0.0, kTwoPi);
      u.c.emplace_back(std::cos(th), std::sin(th));
    }
    const std::vector<bool> active(k_num, true);
    const double before = min_pair_gap(u, pos, active);
    const ProjectionResult r = project_controls(u, pos, active, 4.0, 1.0);
    const double after = min_pair_gap(r.control, pos, active);
    CHECK(after >= before - 1e-9);
    CHECK(after >= std::min(4.0, after) - 1e-9);
    for (int k = 0; k < k_num; ++k) {
      CHECK(r.control.c[k].norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
    if (r.feasible) CHECK(after >= 4.0 - 1e-6);
  }
}

TEST_CASE("control solver: initialization, ascent, and safety") {
  ExperimentConfig cfg = default_paper_config(1);
  cfg.control.mixture_cap = 0;
  const EnvParams env = cfg.env;

  // Point-mass source belief: flat objective, so the solver returns the
  // initialization — the unit vector toward the estimated source.
  BeliefState point = make_belief({1.0}, {{{Position(0, 0)}}},
                                  {{{Position(30, 40), 1.0}}});
  RandomStream rng = rng_stream(36, 0, StreamRole::control);
  const ControlSolveResult res = solve_control(point, cfg, {true}, rng);
  CHECK((res.control.c[0] - Position(0.6, 0.8)).norm() < 1e-9);
  CHECK(std::abs(res.objective) < 1e-9);

  // Bimodal belief: the ascent result is at least as informative as driving
  // straight toward the posterior mean.
  BeliefState bimodal = make_belief(
      {1.0}, {{{Position(50, 0)}}},
      {{{Position(0, 40), 0.5}, {Position(100, 40), 0.5}}});
  RandomStream rng2 = rng_stream(37, 0, StreamRole::control);
  const ControlSolveResult res2 = solve_control(bimodal, cfg, {true}, rng2);
  CHECK(res2.control.c[0].norm() == doctest::Approx(1.0).epsilon(1e-9));

  MIObjectiveContext ctx = make_mi_context(bimodal, env, {true}, 0);
  const Position toward = (source_estimate(bimodal) - Position(50, 0)).normalized();
  ctx.control.c = {toward};
  const double toward_mean_obj = predicted_mutual_information(ctx);
  CHECK(res2.objective >= toward_mean_obj - 1e-9);

  // Two-robot instance starting 4.6 m apart: returned controls keep the
  // predicted gap safe and beat the initialization.
  ExperimentConfig cfg2 = default_paper_config(2);
  cfg2.control.mixture_cap = 0;
  BeliefState duo = make_belief(
      {0.5, 0.5},
      {{Position(20, 20), Position(24.6, 20)},
       {Position(20, 20), Position(24.6, 20)}},
      {{{Position(60, 80), 0.5}, {Position(90, 40), 0.5}},
       {{Position(61, 79), 0.5}, {Position(89, 41), 0.5}}});
  RandomStream rng3 = rng_stream(38, 0, StreamRole::control);
  const ControlSolveResult res3 = solve_control(duo, cfg2, {true, true}, rng3);
  const std::vector<Position> est = robot_estimate(duo);
  const std::vector<bool> active{true, true};
  CHECK(min_pair_gap(res3.control, est, active) >= cfg2.d_min - 1e-6);
  CHECK(res3.feasible);

  MIObjectiveContext ctx2 = make_mi_context(duo, cfg2.env, active, 0);
  ControlInput init;
  for (int k = 0; k < 2; ++k) {
    init.c.push_back((source_estimate(duo) - est[k]).normalized());
  }
  const ProjectionResult pinit =
      project_controls(init, est, active, cfg2.d_min, cfg2.motion.step_len);
  ctx2.control = pinit.control;
  const double init_obj = predicted_mutual_information(ctx2);
  CHECK(res3.objective >= init_obj - 1e-9);
}
