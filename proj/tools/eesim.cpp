// eesim: batch driver for the underlay / overlay allocators.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <algorithm>

#include "eeshare/error.hpp"
#include "eeshare/experiment.hpp"
#include "eeshare/oracle.hpp"
#include "eeshare/overlay.hpp"
#include "eeshare/underlay.hpp"

using namespace eeshare;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> drops;
  std::optional<double> eps;
  std::optional<std::string> out;
};

std::vector<ExperimentConfig> load_with(const std::string& path, const Overrides& ov) {
  auto cfgs = load_config(path);
  for (auto& c : cfgs) {
    if (ov.seed) c.drop_cfg.seed = *ov.seed;
    if (ov.drops) c.n_drops = *ov.drops;
    if (ov.eps) c.eps = *ov.eps;
    if (ov.out) {
      if (cfgs.size() == 1) {
        c.output_path = *ov.out;
      } else {
        // keep the per-combination suffix, swap the stem
        const auto us = c.output_path.find('_' + std::string(to_string(c.algorithm)));
        std::string stem = *ov.out;
        if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".csv") stem.resize(stem.size() - 4);
        c.output_path = stem + c.output_path.substr(us);
      }
    }
    c.validate();
  }
  return cfgs;
}

// Replace "key = ..." in preset text, appending the key when absent.
void set_key(std::string& text, const std::string& key, const std::string& value) {
  std::istringstream in(text);
  std::string out, line;
  bool found = false;
  while (std::getline(in, line)) {
    if (line.rfind(key + " =", 0) == 0) {
      line = key + " = " + value;
      found = true;
    }
    out += line + "\n";
  }
  if (!found) out += key + " = " + value + "\n";
  text = out;
}

const char* scenario_name(Scenario s) { return s == Scenario::Underlay ? "underlay" : "overlay"; }

int cmd_run(const std::vector<ExperimentConfig>& cfgs) {
  for (const auto& c : cfgs) {
    const auto rows = run_experiment(c);
    emit_csv(rows, c.output_path);
    int failed = 0;
    for (const auto& r : rows) failed += r.n_failed;
    std::printf("%s %s %s R=%g%% -> %s", scenario_name(c.scenario), to_string(c.algorithm), to_string(c.mode),
                c.r_percent, c.output_path.c_str());
    if (failed) std::printf(" (%d solver failures)", failed);
    std::printf("\n");
  }
  return 0;
}

int cmd_check(const std::vector<ExperimentConfig>& cfgs) {
  for (const auto& c : cfgs) {
    std::printf("%s: %s %s %s R=%g%% P1=%g dBW Pc=%g W alpha=%g antennas=%dx%dx%d drops=%d sweep=[%g..%g] dBW\n",
                c.name.c_str(), scenario_name(c.scenario), to_string(c.algorithm), to_string(c.mode), c.r_percent,
                c.p1_dbw, c.params.p_c, c.params.alpha, c.params.n_t1, c.params.n_t2, c.params.n_r, c.n_drops,
                c.p2_sweep_dbw.front(), c.p2_sweep_dbw.back());
  }
  // Census once per distinct (scenario, R): it does not depend on mode or algorithm.
  std::vector<std::pair<Scenario, double>> done;
  for (const auto& c : cfgs) {
    const std::pair<Scenario, double> key{c.scenario, c.r_percent};
    if (std::find(done.begin(), done.end(), key) != done.end()) continue;
    done.push_back(key);
    const auto drops = make_drops(c);
    if (c.scenario == Scenario::Underlay) {
      int c1 = 0, rest = 0;
      for (const auto& d : drops) {
        SystemParams p = c.params;
        p.r1_star = primary_target(c, d.channels);
        (p.r1_star >= r12_at_zero(p, d.channels) ? c1 : rest)++;
      }
      std::printf("  census R=%g%%: %d drops without SIC, %d drops with SIC candidates\n", c.r_percent, c1, rest);
    } else {
      for (double p2 : c.p2_sweep_dbw) {
        int n[3] = {0, 0, 0};
        for (const auto& d : drops) {
          SystemParams p = c.params;
          p.p2 = dbw_to_watts(p2);
          p.r1_star = primary_target(c, d.channels);
          n[static_cast<int>(check_feasibility(p, d.channels).status)]++;
        }
        std::printf("  census R=%g%% P2=%g dBW: feasible %d, infeasible R1* %d, underlay regime %d\n", c.r_percent,
                    p2, n[0], n[1], n[2]);
      }
    }
  }
  return 0;
}

int cmd_oracle(const std::vector<ExperimentConfig>& cfgs) {
  double worst = 0.0;
  int compared = 0;
  for (const auto& c : cfgs) {
    const auto drops = make_drops(c);
    for (double p2 : c.p2_sweep_dbw) {
      for (const auto& d : drops) {
        SystemParams p = c.params;
        p.p2 = dbw_to_watts(p2);
        p.r1_star = primary_target(c, d.channels);
        const Objective obj = c.mode == Mode::MaximizeEE ? Objective::EnergyEfficiency : Objective::Rate;
        double alg = 0.0, ref = 0.0;
        try {
          if (c.scenario == Scenario::Underlay) {
            if (p.n_t1 != 1 || p.n_t2 != 1 || p.n_r != 1)
              throw Error(ErrorCode::ConfigError, "underlay oracle needs n_t1 = n_t2 = n_r = 1");
            UnderlayOptions o;
            o.objective = obj;
            const auto s = allocate_underlay(p, d.channels, o);
            const auto cost = CostModel::of(p, obj);
            alg = s.r2 / (cost.alpha * (s.tx_power / p.alpha) + cost.p_c);
            ref = grid_underlay_scalar(p, d.channels, 400, obj).ee;
          } else {
            if (check_feasibility(p, d.channels).status != OverlayFeasibility::Feasible) continue;
            OverlayOptions o;
            o.surrogate.eps = c.eps;
            const auto s = c.algorithm == Algorithm::Alg2 ? solve_overlay_full(p, d.channels, o)
                                                          : solve_overlay_rank1(p, d.channels, o);
            alg = s.ee;
            ref = grid_overlay_rank1(p, d.channels).ee;
          }
        } catch (const Error& e) {
          if (e.code() == ErrorCode::ConfigError) throw;
          continue;
        }
        const double dev = (ref - alg) / std::max(1e-300, std::abs(ref));
        worst = std::max(worst, dev);
        ++compared;
      }
    }
  }
  std::printf("compared %d instances; max relative shortfall of the allocator below the oracle: %.3e\n", compared,
              worst);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"energy-efficient spectrum sharing simulator"};
  app.require_subcommand(1);
  Overrides ov;
  std::uint64_t seed = 0;
  int drops = 0;
  double eps = 0.0;
  std::string out;
  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "override the drop seed");
    sub->add_option("--drops", drops, "override the number of drops");
    sub->add_option("--eps", eps, "override the outer-loop tolerance");
    sub->add_option("--out", out, "output path");
  };

  std::string config_path, preset;
  auto* run = app.add_subcommand("run", "run the experiments of a config file and write CSV");
  run->add_option("config", config_path, "config file")->required();
  add_flags(run);
  auto* check = app.add_subcommand("check", "validate a config and print a feasibility census");
  check->add_option("config", config_path, "config file")->required();
  add_flags(check);
  auto* oracle = app.add_subcommand("oracle", "compare allocators against the brute-force oracles");
  oracle->add_option("config", config_path, "config file")->required();
  add_flags(oracle);
  auto* repro = app.add_subcommand("repro", "print a preset config (fig1a fig1b fig2 fig3a fig3b table1)");
  repro->add_option("preset", preset, "preset name")->required();
  add_flags(repro);

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  for (auto* sub : {run, check, oracle, repro}) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--drops")) ov.drops = drops;
    if (sub->count("--eps")) ov.eps = eps;
    if (sub->count("--out")) ov.out = out;
  }

  try {
    if (repro->parsed()) {
      std::string text = preset_config(preset);
      if (ov.seed) set_key(text, "seed", std::to_string(*ov.seed));
      if (ov.drops) set_key(text, "n_drops", std::to_string(*ov.drops));
      if (ov.eps) set_key(text, "eps", std::to_string(*ov.eps));
      if (ov.out) {
        std::ofstream f(*ov.out);
        if (!f) throw Error(ErrorCode::IoError, "cannot write " + *ov.out);
        f << text;
      } else {
        std::cout << text;
      }
      return 0;
    }
    const auto cfgs = load_with(config_path, ov);
    if (run->parsed()) return cmd_run(cfgs);
    if (check->parsed()) return cmd_check(cfgs);
    return cmd_oracle(cfgs);
  } catch (const Error& e) {
    std::cerr << "eesim: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigError ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "eesim: " << e.what() << "\n";
    return 2;
  }
}
