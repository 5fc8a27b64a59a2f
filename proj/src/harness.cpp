#include "slass/harness.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace slass {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Per-trial error/distance series padded out to max_cycles with the final
// recorded value, so early-ending trials keep contributing their last state.
Eigen::VectorXd clamped_series(const TrialResult& trial, int max_cycles,
                               double (*value)(const CycleRecord&)) {
  Eigen::VectorXd out(max_cycles);
  const int n = static_cast<int>(trial.records.size());
  for (int i = 0; i < n && i < max_cycles; ++i) out[i] = value(trial.records[i]);
  const double tail = n > 0 ? out[std::min(n, max_cycles) - 1]
                            : std::numeric_limits<double>::quiet_NaN();
  for (int i = n; i < max_cycles; ++i) out[i] = tail;
  return out;
}

double source_error(const CycleRecord& rec) {
  return (rec.source_est - rec.true_source).norm();
}

double robot1_distance(const CycleRecord& rec) { return rec.dist_to_source[0]; }

std::string policy_column(const ExperimentResult& run) {
  return policy_name(run.policy);
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::all_arrived: return "all_arrived";
    case Termination::max_cycles: return "max_cycles";
    case Termination::aborted: return "aborted";
  }
  return "unknown";
}

ordered_json config_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["num_robots"] = cfg.num_robots;
  j["source_true"] = {cfg.source_true.x(), cfg.source_true.y()};
  ordered_json starts = ordered_json::array();
  for (const Position& p : cfg.robot_starts) starts.push_back({p.x(), p.y()});
  j["robot_starts"] = std::move(starts);
  j["area"] = {{cfg.area.min().x(), cfg.area.min().y()},
               {cfg.area.max().x(), cfg.area.max().y()}};
  j["alpha0"] = cfg.env.alpha0;
  j["alpha"] = cfg.env.alpha;
  j["sigma_z_sq"] = cfg.env.sigma_z_sq;
  j["sigma_c_sq"] = cfg.motion.sigma_c_sq;
  j["sigma_s_sq"] = cfg.motion.sigma_s_sq;
  j["step_len"] = cfg.motion.step_len;
  j["robot_particles"] = cfg.robot_particles;
  j["source_particles"] = cfg.source_particles;
  j["d_min"] = cfg.d_min;
  j["arrive_radius"] = cfg.arrive_radius;
  j["max_cycles"] = cfg.max_cycles;
  j["ess_threshold"] = cfg.ess_threshold;
  j["seed"] = cfg.seed;
  j["num_trials"] = cfg.num_trials;
  j["ascent_step"] = cfg.control.ascent_step;
  j["ascent_max_iters"] = cfg.control.ascent_max_iters;
  j["ascent_tol"] = cfg.control.ascent_tol;
  j["mixture_cap"] = cfg.control.mixture_cap;
  return j;
}

void write_trajectory(const TrialResult& trial, int num_robots,
                      const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  out << "cycle,source_true_x,source_true_y,source_est_x,source_est_y";
  for (int k = 1; k <= num_robots; ++k) {
    out << ",robot" << k << "_true_x,robot" << k << "_true_y,robot" << k
        << "_est_x,robot" << k << "_est_y";
  }
  out << "\n";
  for (const CycleRecord& rec : trial.records) {
    out << rec.cycle << ',' << fmt(rec.true_source.x()) << ','
        << fmt(rec.true_source.y()) << ',' << fmt(rec.source_est.x()) << ','
        << fmt(rec.source_est.y());
    for (int k = 0; k < num_robots; ++k) {
      out << ',' << fmt(rec.true_robots[k].x()) << ','
          << fmt(rec.true_robots[k].y()) << ',' << fmt(rec.robot_est[k].x())
          << ',' << fmt(rec.robot_est[k].y());
    }
    out << "\n";
  }
  finish_write(out, path);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, PolicyKind policy,
                                int threads) {
  validate(cfg);
  ExperimentResult result;
  result.policy = policy;
  result.trials.resize(cfg.num_trials);

  const int workers = std::min(cfg.num_trials, std::max(1, threads));
  if (workers <= 1) {
    for (int t = 0; t < cfg.num_trials; ++t) {
      result.trials[t] = run_trial(cfg, policy, static_cast<std::uint64_t>(t));
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int t = next.fetch_add(1); t < cfg.num_trials;
               t = next.fetch_add(1)) {
            result.trials[t] =
                run_trial(cfg, policy, static_cast<std::uint64_t>(t));
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  result.metrics = aggregate_metrics(result.trials, cfg);
  return result;
}

AggregateMetrics aggregate_metrics(const std::vector<TrialResult>& trials,
                                   const ExperimentConfig& cfg) {
  const int n_cyc = cfg.max_cycles;
  AggregateMetrics m;
  m.rmse = Eigen::VectorXd::Zero(n_cyc);
  m.mean_dist_robot1 = Eigen::VectorXd::Zero(n_cyc);
  m.stderr_dist_robot1 = Eigen::VectorXd::Zero(n_cyc);

  Eigen::VectorXd sq_err = Eigen::VectorXd::Zero(n_cyc);
  Eigen::VectorXd dist_sum = Eigen::VectorXd::Zero(n_cyc);
  Eigen::VectorXd dist_sq_sum = Eigen::VectorXd::Zero(n_cyc);
  int used = 0;
  int successes = 0;
  double arrival_cycles = 0.0;
  for (const TrialResult& trial : trials) {
    if (trial.termination == Termination::all_arrived) {
      ++successes;
      arrival_cycles += static_cast<double>(trial.records.size());
    }
    for (const CycleRecord& rec : trial.records) {
      m.violation_count += rec.constraint_violation ? 1 : 0;
    }
    if (trial.records.empty()) continue;  // aborted before the first record
    ++used;
    const Eigen::VectorXd err = clamped_series(trial, n_cyc, source_error);
    const Eigen::VectorXd dist = clamped_series(trial, n_cyc, robot1_distance);
    sq_err += err.cwiseProduct(err);
    dist_sum += dist;
    dist_sq_sum += dist.cwiseProduct(dist);
  }
  if (used > 0) {
    m.rmse = (sq_err / used).cwiseSqrt();
    m.mean_dist_robot1 = dist_sum / used;
    if (used > 1) {
      const Eigen::VectorXd var =
          (dist_sq_sum - dist_sum.cwiseProduct(dist_sum) / used) / (used - 1);
      m.stderr_dist_robot1 = (var.cwiseMax(0.0) / used).cwiseSqrt();
    }
    m.final_rmse = m.rmse[n_cyc - 1];
    m.mean_final_dist_robot1 = m.mean_dist_robot1[n_cyc - 1];
  }
  if (!trials.empty()) {
    m.success_rate = static_cast<double>(successes) /
                     static_cast<double>(trials.size());
  }
  if (successes > 0) m.mean_cycles_to_arrival = arrival_cycles / successes;
  return m;
}

CompareResult compare_policies(const ExperimentConfig& cfg,
                               const std::vector<PolicyKind>& policies,
                               int threads) {
  if (policies.size() < 2) {
    throw std::invalid_argument("compare_policies needs at least two policies");
  }
  CompareResult out;
  out.runs.reserve(policies.size());
  for (PolicyKind p : policies) {
    out.runs.push_back(run_experiment(cfg, p, threads));
  }
  return out;
}

void write_experiment_outputs(const ExperimentResult& result,
                              const ExperimentConfig& cfg,
                              const std::filesystem::path& out_dir,
                              bool dump_trajectories) {
  std::filesystem::create_directories(out_dir);
  const std::string prefix = policy_name(result.policy);

  {
    const auto path = out_dir / (prefix + "_rmse.csv");
    std::ofstream out = open_for_write(path);
    out << "cycle,value\n";
    for (int n = 0; n < cfg.max_cycles; ++n) {
      out << (n + 1) << ',' << fmt(result.metrics.rmse[n]) << "\n";
    }
    finish_write(out, path);
  }
  {
    const auto path = out_dir / (prefix + "_dist_robot1.csv");
    std::ofstream out = open_for_write(path);
    out << "cycle,value,stderr\n";
    for (int n = 0; n < cfg.max_cycles; ++n) {
      out << (n + 1) << ',' << fmt(result.metrics.mean_dist_robot1[n]) << ','
          << fmt(result.metrics.stderr_dist_robot1[n]) << "\n";
    }
    finish_write(out, path);
  }
  {
    ordered_json manifest;
    manifest["version"] = kVersion;
    manifest["policy"] = prefix;
    manifest["config"] = config_json(cfg);
    ordered_json per_trial = ordered_json::array();
    for (std::size_t t = 0; t < result.trials.size(); ++t) {
      const TrialResult& trial = result.trials[t];
      ordered_json row;
      row["trial"] = t;
      row["termination"] = termination_name(trial.termination);
      row["cycles"] = trial.records.size();
      if (trial.termination == Termination::aborted) {
        row["abort_cycle"] = trial.abort_cycle;
        row["abort_reason"] = trial.abort_reason;
      }
      per_trial.push_back(std::move(row));
    }
    manifest["trials"] = std::move(per_trial);
    manifest["success_rate"] = result.metrics.success_rate;
    manifest["mean_cycles_to_arrival"] = result.metrics.mean_cycles_to_arrival;
    manifest["final_rmse"] = result.metrics.final_rmse;
    manifest["mean_final_dist_robot1"] = result.metrics.mean_final_dist_robot1;
    manifest["violation_count"] = result.metrics.violation_count;
    const auto path = out_dir / (prefix + "_manifest.json");
    std::ofstream out = open_for_write(path);
    out << manifest.dump(2) << "\n";
    finish_write(out, path);
  }
  if (dump_trajectories) {
    for (std::size_t t = 0; t < result.trials.size(); ++t) {
      write_trajectory(result.trials[t], cfg.num_robots,
                       out_dir / (prefix + "_trial_" + std::to_string(t) +
                                  "_trajectory.csv"));
    }
  }
}

void write_compare_outputs(const CompareResult& result,
                           const ExperimentConfig& cfg,
                           const std::filesystem::path& out_dir,
                           bool dump_trajectories) {
  std::filesystem::create_directories(out_dir);
  for (const ExperimentResult& run : result.runs) {
    write_experiment_outputs(run, cfg, out_dir, dump_trajectories);
  }
  {
    const auto path = out_dir / "compare_rmse.csv";
    std::ofstream out = open_for_write(path);
    out << "cycle";
    for (const auto& run : result.runs) out << ',' << policy_column(run);
    out << "\n";
    for (int n = 0; n < cfg.max_cycles; ++n) {
      out << (n + 1);
      for (const auto& run : result.runs) out << ',' << fmt(run.metrics.rmse[n]);
      out << "\n";
    }
    finish_write(out, path);
  }
  {
    const auto path = out_dir / "compare_dist_robot1.csv";
    std::ofstream out = open_for_write(path);
    out << "cycle";
    for (const auto& run : result.runs) out << ',' << policy_column(run);
    out << "\n";
    for (int n = 0; n < cfg.max_cycles; ++n) {
      out << (n + 1);
      for (const auto& run : result.runs) {
        out << ',' << fmt(run.metrics.mean_dist_robot1[n]);
      }
      out << "\n";
    }
    finish_write(out, path);
  }
  {
    const auto path = out_dir / "compare_summary.csv";
    std::ofstream out = open_for_write(path);
    out << "policy,final_rmse,success_rate,mean_final_dist_robot1,"
           "mean_cycles_to_arrival,violations\n";
    for (const auto& run : result.runs) {
      const AggregateMetrics& m = run.metrics;
      out << policy_column(run) << ',' << fmt(m.final_rmse) << ','
          << fmt(m.success_rate) << ',' << fmt(m.mean_final_dist_robot1) << ','
          << fmt(m.mean_cycles_to_arrival) << ',' << m.violation_count << "\n";
    }
    finish_write(out, path);
  }
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// "x y, x y, ..." -> list of points.
std::vector<Position> parse_points(const std::string& text,
                                   const std::string& key) {
  std::vector<Position> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream pair(item);
    double x = 0.0;
    double y = 0.0;
    if (!(pair >> x >> y)) {
      throw std::invalid_argument("config: bad point '" + item + "' for " + key);
    }
    std::string rest;
    if (pair >> rest) {
      throw std::invalid_argument("config: bad point '" + item + "' for " + key);
    }
    out.emplace_back(x, y);
  }
  if (out.empty()) {
    throw std::invalid_argument("config: no points given for " + key);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
  std::istringstream ss(text);
  T value{};
  std::string rest;
  if (!(ss >> value) || (ss >> rest)) {
    throw std::invalid_argument("config: bad value '" + text + "' for " + key);
  }
  return value;
}

}  // namespace

ExperimentConfig config_from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());

  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("config: empty key or value at line " +
                                  std::to_string(line_no));
    }
    if (!kv.emplace(key, value).second) {
      throw std::invalid_argument("config: duplicate key " + key);
    }
  }

  int num_robots = 2;
  if (auto it = kv.find("num_robots"); it != kv.end()) {
    num_robots = parse_number<int>(it->second, "num_robots");
  }
  ExperimentConfig cfg;
  if (num_robots >= 1 && num_robots <= 3) {
    cfg = default_paper_config(num_robots);
  } else {
    cfg.num_robots = num_robots;
    cfg.robot_starts.clear();  // must be provided explicitly
  }
  kv.erase("num_robots");

  for (const auto& [key, value] : kv) {
    if (key == "source_true") {
      const auto pts = parse_points(value, key);
      if (pts.size() != 1) {
        throw std::invalid_argument("config: source_true takes one point");
      }
      cfg.source_true = pts[0];
    } else if (key == "robot_starts") {
      cfg.robot_starts = parse_points(value, key);
    } else if (key == "area") {
      const auto pts = parse_points(value, key);
      if (pts.size() != 2) {
        throw std::invalid_argument("config: area takes min and max points");
      }
      cfg.area = Rect(pts[0], pts[1]);
    } else if (key == "alpha0") {
      cfg.env.alpha0 = parse_number<double>(value, key);
    } else if (key == "alpha") {
      cfg.env.alpha = parse_number<double>(value, key);
    } else if (key == "sigma_z_sq") {
      cfg.env.sigma_z_sq = parse_number<double>(value, key);
    } else if (key == "sigma_c_sq") {
      cfg.motion.sigma_c_sq = parse_number<double>(value, key);
    } else if (key == "sigma_s_sq") {
      cfg.motion.sigma_s_sq = parse_number<double>(value, key);
    } else if (key == "step_len") {
      cfg.motion.step_len = parse_number<double>(value, key);
    } else if (key == "robot_particles") {
      cfg.robot_particles = parse_number<int>(value, key);
    } else if (key == "source_particles") {
      cfg.source_particles = parse_number<int>(value, key);
    } else if (key == "d_min") {
      cfg.d_min = parse_number<double>(value, key);
    } else if (key == "arrive_radius") {
      cfg.arrive_radius = parse_number<double>(value, key);
    } else if (key == "max_cycles") {
      cfg.max_cycles = parse_number<int>(value, key);
    } else if (key == "ess_threshold") {
      cfg.ess_threshold = parse_number<double>(value, key);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(value, key);
    } else if (key == "num_trials") {
      cfg.num_trials = parse_number<int>(value, key);
    } else if (key == "ascent_step") {
      cfg.control.ascent_step = parse_number<double>(value, key);
    } else if (key == "ascent_max_iters") {
      cfg.control.ascent_max_iters = parse_number<int>(value, key);
    } else if (key == "ascent_tol") {
      cfg.control.ascent_tol = parse_number<double>(value, key);
    } else if (key == "mixture_cap") {
      cfg.control.mixture_cap = parse_number<int>(value, key);
    } else {
      throw std::invalid_argument("config: unknown key " + key);
    }
  }
  validate(cfg);
  return cfg;
}

void config_to_file(const ExperimentConfig& cfg,
                    const std::filesystem::path& path) {
  std::ofstream out = open_for_write(path);
  out << "num_robots = " << cfg.num_robots << "\n";
  out << "source_true = " << fmt(cfg.source_true.x()) << ' '
      << fmt(cfg.source_true.y()) << "\n";
  out << "robot_starts = ";
  for (std::size_t k = 0; k < cfg.robot_starts.size(); ++k) {
    if (k > 0) out << ", ";
    out << fmt(cfg.robot_starts[k].x()) << ' ' << fmt(cfg.robot_starts[k].y());
  }
  out << "\n";
  out << "area = " << fmt(cfg.area.min().x()) << ' ' << fmt(cfg.area.min().y())
      << ", " << fmt(cfg.area.max().x()) << ' ' << fmt(cfg.area.max().y())
      << "\n";
  out << "alpha0 = " << fmt(cfg.env.alpha0) << "\n";
  out << "alpha = " << fmt(cfg.env.alpha) << "\n";
  out << "sigma_z_sq = " << fmt(cfg.env.sigma_z_sq) << "\n";
  out << "sigma_c_sq = " << fmt(cfg.motion.sigma_c_sq) << "\n";
  out << "sigma_s_sq = " << fmt(cfg.motion.sigma_s_sq) << "\n";
  out << "step_len = " << fmt(cfg.motion.step_len) << "\n";
  out << "robot_particles = " << cfg.robot_particles << "\n";
  out << "source_particles = " << cfg.source_particles << "\n";
  out << "d_min = " << fmt(cfg.d_min) << "\n";
  out << "arrive_radius = " << fmt(cfg.arrive_radius) << "\n";
  out << "max_cycles = " << cfg.max_cycles << "\n";
  out << "ess_threshold = " << fmt(cfg.ess_threshold) << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "num_trials = " << cfg.num_trials << "\n";
  out << "ascent_step = " << fmt(cfg.control.ascent_step) << "\n";
  out << "ascent_max_iters = " << cfg.control.ascent_max_iters << "\n";
  out << "ascent_tol = " << fmt(cfg.control.ascent_tol) << "\n";
  out << "mixture_cap = " << cfg.control.mixture_cap << "\n";
  finish_write(out, path);
}

int resolve_threads(int flag_value) {
  if (const char* env = std::getenv("SLASS_THREADS")) {
    const std::string text = trim(env);
    if (!text.empty()) return parse_number<int>(text, "SLASS_THREADS");
  }
  return flag_value;
}

}  // namespace slass
