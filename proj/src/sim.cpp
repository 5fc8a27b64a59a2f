#include "slass/sim.hpp"

#include <cassert>
#include <cmath>

#include "slass/infocontrol.hpp"

namespace slass {

namespace {

// Always-on safety audit of the executed control: active norms equal
// step_len and predicted pairwise gaps (robot estimates plus controls) reach
// d_min for every pair the control can influence. A pair of stopped robots
// carries no control decision, so it is not audited. When a pair's current
// estimated gap is already under d_min (estimates can jump on resampling), no
// control can restore it in one cycle; the audit then demands the best
// separation a full step can achieve. Violations are recorded, not fatal, so
// a rare infeasible repair degrades one cycle instead of killing the trial.
bool control_violates(const ControlInput& control,
                      const std::vector<Position>& robot_est,
                      const std::vector<bool>& arrived,
                      const ExperimentConfig& cfg) {
  const int k_num = cfg.num_robots;
  for (int k = 0; k < k_num; ++k) {
    const double n = control.c[k].norm();
    if (arrived[k]) {
      if (n != 0.0) return true;
    } else if (n > 0.0 && std::abs(n - cfg.motion.step_len) > 1e-9) {
      return true;
    }
  }
  for (int a = 0; a < k_num; ++a) {
    for (int b = a + 1; b < k_num; ++b) {
      if (arrived[a] && arrived[b]) continue;
      const double gap = ((robot_est[a] + control.c[a]) -
                          (robot_est[b] + control.c[b]))
                             .norm();
      const double current = (robot_est[a] - robot_est[b]).norm();
      double required = cfg.d_min;
      if (current < cfg.d_min) {
        const int movable = (arrived[a] ? 0 : 1) + (arrived[b] ? 0 : 1);
        required = std::min(cfg.d_min, current + movable * cfg.motion.step_len);
      }
      if (gap < required - 1e-6) return true;
    }
  }
  return false;
}

}  // namespace

TrialState init_trial(const ExperimentConfig& cfg, PolicyKind policy,
                      std::uint64_t trial) {
  validate(cfg);
  TrialState st{
      .world = {},
      .belief = {},
      .stages = {},
      .world_rng = rng_stream(cfg.seed, trial, StreamRole::world),
      .filter_rng = rng_stream(cfg.seed, trial, StreamRole::filter),
      .control_rng = rng_stream(cfg.seed, trial, StreamRole::control),
  };
  st.world.true_source = cfg.source_true;
  st.world.true_robots = cfg.robot_starts;
  st.world.arrived.assign(cfg.num_robots, false);
  st.world.cycle = 1;
  if (policy == PolicyKind::two_stage) {
    st.stages = two_stage_init(cfg, st.filter_rng);
  } else {
    st.belief = init_belief(cfg, st.filter_rng);
  }
  return st;
}

CycleRecord step(TrialState& state, PolicyKind policy,
                 const ExperimentConfig& cfg) {
  WorldState& world = state.world;
  const int k_num = cfg.num_robots;
  std::vector<bool> active(k_num);
  for (int k = 0; k < k_num; ++k) active[k] = !world.arrived[k];

  CycleRecord rec;
  rec.cycle = world.cycle;
  rec.true_robots = world.true_robots;
  rec.true_source = world.true_source;
  rec.dist_to_source.resize(k_num);
  for (int k = 0; k < k_num; ++k) {
    rec.dist_to_source[k] = (world.true_robots[k] - world.true_source).norm();
  }

  // 1. Every robot measures, stopped ones included.
  const MeasurementSet z = sample_measurements(
      world.true_source, world.true_robots, cfg.env, state.world_rng, world.cycle);

  // 2-4. Bayes update, resample, estimates, policy control.
  bool any_active = false;
  for (int k = 0; k < k_num; ++k) any_active |= active[k];
  if (policy == PolicyKind::two_stage) {
    TwoStageState& ts = *state.stages;
    ts.cycle = world.cycle;
    TwoStageCycleResult cyc = two_stage_cycle(ts, z, cfg, active,
                                              state.filter_rng, state.control_rng);
    rec.source_est = cyc.source_est;
    rec.robot_est = cyc.robot_est;
    rec.control = any_active ? cyc.control : ControlInput{std::vector<Position>(
                                                 k_num, Position::Zero())};
    rec.objective = cyc.objective;
    rec.ess_outer = cyc.ess_stage1;
  } else {
    BeliefState& belief = state.belief;
    belief.cycle = world.cycle;
    update_weights(belief, z, cfg.env);
    rec.ess_outer = effective_sample_size(outer_weights(belief));
    resample(belief, cfg.ess_threshold, state.filter_rng);
    rec.source_est = source_estimate(belief);
    rec.robot_est = robot_estimate(belief);
    if (!any_active) {
      rec.control.c.assign(k_num, Position::Zero());
    } else if (policy == PolicyKind::proposed) {
      const ControlSolveResult solved =
          solve_control(belief, cfg, active, state.control_rng);
      rec.control = solved.control;
      rec.objective = solved.objective;
    } else {
      rec.control = flocking_control(belief, cfg, active).control;
    }
  }
  rec.constraint_violation =
      control_violates(rec.control, rec.robot_est, world.arrived, cfg);

  // 5. Move the active robots; arrivals are judged on true distances and
  // stay latched.
  const double sc = std::sqrt(cfg.motion.sigma_c_sq);
  for (int k = 0; k < k_num; ++k) {
    if (!active[k]) continue;
    world.true_robots[k].x() += rec.control.c[k].x() + sc * state.world_rng.gaussian();
    world.true_robots[k].y() += rec.control.c[k].y() + sc * state.world_rng.gaussian();
  }
  for (int k = 0; k < k_num; ++k) {
    if ((world.true_robots[k] - world.true_source).norm() <= cfg.arrive_radius) {
      world.arrived[k] = true;
    }
  }

  // 6. Advance the belief with the executed controls. Source hypotheses are
  // supported on the search area: the stationary source was drawn there, so
  // the stability jitter must not leak belief mass outside. Escaping
  // coordinates fold back in by mirror reflection, which also keeps a
  // collapsed belief from retreating indefinitely ahead of pursuing robots.
  if (policy == PolicyKind::two_stage) {
    two_stage_predict(*state.stages, rec.control, cfg.motion, state.filter_rng);
    for (Position& p : state.stages->source_particles) {
      p = reflect_into(p, cfg.area);
    }
  } else {
    predict(state.belief, rec.control, cfg.motion, state.filter_rng);
    for (auto& rp : state.belief.particles) {
      for (auto& sp : rp.source_set) {
        sp.pos = reflect_into(sp.pos, cfg.area);
      }
    }
  }
  ++world.cycle;
  return rec;
}

TrialResult run_trial(const ExperimentConfig& cfg, PolicyKind policy,
                      std::uint64_t trial) {
  TrialState state = init_trial(cfg, policy, trial);
  TrialResult out;
  out.records.reserve(cfg.max_cycles);
  for (int n = 1; n <= cfg.max_cycles; ++n) {
    try {
      out.records.push_back(step(state, policy, cfg));
    } catch (const DegenerateBeliefError& e) {
      out.termination = Termination::aborted;
      out.abort_cycle = e.cycle();
      out.abort_reason = e.what();
      return out;
    }
    bool all = true;
    for (bool a : state.world.arrived) all &= a;
    if (all) {
      out.termination = Termination::all_arrived;
      return out;
    }
  }
  out.termination = Termination::max_cycles;
  return out;
}

}  // namespace slass
