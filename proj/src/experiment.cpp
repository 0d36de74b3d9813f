#include "eeshare/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "eeshare/error.hpp"
#include "eeshare/overlay.hpp"
#include "eeshare/underlay.hpp"

namespace eeshare {

const char* to_string(Mode m) { return m == Mode::MaximizeEE ? "ee" : "rate"; }

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Alg1: return "alg1";
    case Algorithm::Alg2: return "alg2";
    case Algorithm::Alg3: return "alg3";
  }
  return "?";
}

void ExperimentConfig::resolve() {
  params.p1 = dbw_to_watts(p1_dbw);
  params.noise_power = noise_power_watts(n0_dbm_per_hz, noise_figure_db, params.bandwidth, i_out_w);
  drop_cfg.scenario = scenario;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  if (p2_sweep_dbw.empty()) fail("p2_sweep_dbw must not be empty");
  if (n_drops < 1) fail("n_drops must be at least 1");
  if (!(r_percent >= 0.0)) fail("r_percent must be nonnegative");
  if (!(eps > 0.0)) fail("eps must be positive");
  if (threads < 0) fail("threads must be nonnegative");
  if (scenario == Scenario::Underlay && algorithm != Algorithm::Alg1) fail("underlay runs use alg1");
  if (scenario == Scenario::Overlay && algorithm == Algorithm::Alg1) fail("overlay runs use alg2 or alg3");
  if (!(params.alpha > 0.0)) fail("alpha must be positive");
  try {
    drop_cfg.validate();
    SystemParams p = params;
    p.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
}

std::vector<Drop> make_drops(const ExperimentConfig& cfg) {
  std::vector<Drop> drops;
  drops.reserve(cfg.n_drops);
  for (int i = 0; i < cfg.n_drops; ++i) drops.push_back(generate_drop(cfg.drop_cfg, cfg.params, i));
  return drops;
}

double primary_target(const ExperimentConfig& cfg, const ChannelSet& ch) {
  return cfg.r_percent / 100.0 * direct_capacity(cfg.params, ch);
}

namespace {

DropStatus classify(ErrorCode c, const SystemParams& p) {
  switch (c) {
    case ErrorCode::R2StarInfeasible: return DropStatus::InfeasibleR2Star;
    case ErrorCode::R1StarExceedsDirectCapacity:
    case ErrorCode::Rank1Infeasible: return DropStatus::InfeasibleR1Star;
    case ErrorCode::InitInfeasible: return p.r2_star > 0.0 ? DropStatus::InfeasibleR2Star : DropStatus::InfeasibleR1Star;
    default: return DropStatus::Failed;
  }
}

}  // namespace

DropOutcome run_drop(const ExperimentConfig& cfg, const Drop& drop, double p2_w) {
  SystemParams p = cfg.params;
  p.p2 = p2_w;
  p.r1_star = primary_target(cfg, drop.channels);
  const Objective obj = cfg.mode == Mode::MaximizeEE ? Objective::EnergyEfficiency : Objective::Rate;
  DropOutcome out;
  try {
    if (cfg.scenario == Scenario::Underlay) {
      UnderlayOptions o;
      o.objective = obj;
      const auto s = allocate_underlay(p, drop.channels, o);
      out = {DropStatus::Feasible, s.ee, s.r2, s.tx_power, s.iterations, {}};
    } else {
      const auto f = check_feasibility(p, drop.channels);
      if (f.status != OverlayFeasibility::Feasible) {
        out.status = DropStatus::InfeasibleR1Star;
        return out;
      }
      OverlayOptions o;
      o.objective = obj;
      o.surrogate.eps = cfg.eps;
      const auto s = cfg.algorithm == Algorithm::Alg2 ? solve_overlay_full(p, drop.channels, o)
                                                      : solve_overlay_rank1(p, drop.channels, o);
      out = {DropStatus::Feasible, s.ee, s.r2, s.tx_power, s.iterations, {}};
    }
  } catch (const Error& e) {
    out = DropOutcome{};
    out.status = classify(e.code(), p);
    out.error = e.what();
  } catch (const std::exception& e) {
    out = DropOutcome{};
    out.error = e.what();
  }
  return out;
}

std::vector<std::vector<DropOutcome>> run_experiment_detailed(const ExperimentConfig& cfg,
                                                              const std::vector<Drop>& drops) {
  const std::size_t n_points = cfg.p2_sweep_dbw.size();
  const std::size_t n_jobs = n_points * drops.size();
  std::vector<std::vector<DropOutcome>> out(n_points, std::vector<DropOutcome>(drops.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < n_jobs;) {
      const std::size_t k = j / drops.size(), i = j % drops.size();
      out[k][i] = run_drop(cfg, drops[i], dbw_to_watts(cfg.p2_sweep_dbw[k]));
    }
  };
  unsigned n_threads = cfg.threads > 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_jobs));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

ResultRow aggregate(double p2_dbw, const std::vector<DropOutcome>& outcomes) {
  ResultRow r;
  r.p2_dbw = p2_dbw;
  double ee = 0.0, r2 = 0.0, tx = 0.0, it = 0.0;
  // Fixed index order keeps the sums bit-identical whatever the scheduling was.
  for (const auto& o : outcomes) {
    switch (o.status) {
      case DropStatus::Feasible:
        ++r.n_feasible;
        ee += o.ee;
        r2 += o.r2;
        tx += o.tx_power;
        it += o.iterations;
        break;
      case DropStatus::InfeasibleR2Star: ++r.n_infeasible_r2star; break;
      case DropStatus::InfeasibleR1Star: ++r.n_infeasible_r1star; break;
      case DropStatus::Failed: ++r.n_failed; break;
    }
  }
  const double n = r.n_feasible;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.mean_ee = n > 0 ? ee / n : nan;
  r.mean_r2 = n > 0 ? r2 / n : nan;
  r.mean_tx_power = n > 0 ? tx / n : nan;
  r.mean_iterations = n > 0 ? it / n : nan;
  return r;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto drops = make_drops(cfg);
  const auto outcomes = run_experiment_detailed(cfg, drops);
  std::vector<ResultRow> rows;
  for (std::size_t k = 0; k < outcomes.size(); ++k) rows.push_back(aggregate(cfg.p2_sweep_dbw[k], outcomes[k]));
  return rows;
}

namespace {

const char* kHeader =
    "p2_dbw,mean_ee_bit_per_joule,mean_r2_bit_per_s,mean_tx_power_w,mean_iterations,n_feasible,"
    "n_infeasible_r2star,n_infeasible_r1star";

std::string g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string s = kHeader;
  s += '\n';
  for (const auto& r : rows) {
    s += g9(r.p2_dbw) + ',' + g9(r.mean_ee) + ',' + g9(r.mean_r2) + ',' + g9(r.mean_tx_power) + ',' +
         g9(r.mean_iterations) + ',' + std::to_string(r.n_feasible) + ',' + std::to_string(r.n_infeasible_r2star) +
         ',' + std::to_string(r.n_infeasible_r1star) + '\n';
  }
  return s;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "no rows to write to " + path);
  const std::string text = format_csv(rows);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  f << text;
  f.close();
  if (!f) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

std::vector<ResultRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw Error(ErrorCode::IoError, "unexpected CSV header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) f.push_back(c);
    if (f.size() != 8) throw Error(ErrorCode::IoError, "CSV row needs 8 fields: " + line);
    ResultRow r;
    try {
      r.p2_dbw = std::stod(f[0]);
      r.mean_ee = std::stod(f[1]);
      r.mean_r2 = std::stod(f[2]);
      r.mean_tx_power = std::stod(f[3]);
      r.mean_iterations = std::stod(f[4]);
      r.n_feasible = std::stoi(f[5]);
      r.n_infeasible_r2star = std::stoi(f[6]);
      r.n_infeasible_r1star = std::stoi(f[7]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::IoError, "malformed CSV row: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace eeshare
