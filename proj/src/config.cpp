#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "eeshare/error.hpp"
#include "eeshare/experiment.hpp"

namespace eeshare {

namespace {

[[noreturn]] void config_error(const std::string& m) { throw Error(ErrorCode::ConfigError, m); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) config_error("empty list value");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    config_error(key + ": not a number: '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(d)) config_error(key + ": not a number: '" + v + "'");
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d)) config_error(key + ": expected an integer");
  return static_cast<long long>(d);
}

// "a, b, c" or "start:step:stop" (inclusive).
std::vector<double> parse_sweep(const std::string& key, const std::string& v) {
  if (v.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(v);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(trim(p));
    if (parts.size() != 3) config_error(key + ": range must be start:step:stop");
    const double a = to_double(key, parts[0]), st = to_double(key, parts[1]), b = to_double(key, parts[2]);
    if (!(st > 0.0) || b < a) config_error(key + ": range needs step > 0 and stop >= start");
    std::vector<double> out;
    const int n = static_cast<int>(std::floor((b - a) / st + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(a + i * st);
    return out;
  }
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(key, s));
  return out;
}

Mode parse_mode(const std::string& v) {
  if (v == "ee") return Mode::MaximizeEE;
  if (v == "rate") return Mode::MaximizeRate;
  config_error("mode must be ee or rate, got '" + v + "'");
}

Algorithm parse_algorithm(const std::string& v) {
  if (v == "alg1") return Algorithm::Alg1;
  if (v == "alg2") return Algorithm::Alg2;
  if (v == "alg3") return Algorithm::Alg3;
  config_error("algorithm must be alg1, alg2 or alg3, got '" + v + "'");
}

std::string r_tag(double r) {
  std::ostringstream s;
  s << r;
  return s.str();
}

}  // namespace

std::vector<ExperimentConfig> parse_config(const std::string& text) {
  ExperimentConfig base;
  std::vector<Mode> modes{Mode::MaximizeEE};
  std::vector<Algorithm> algs;
  std::vector<double> rs{base.r_percent};
  bool have_output = false;

  std::istringstream in(text);
  std::map<std::string, int> seen;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_error("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (v.empty()) config_error(key + ": missing value");
    if (seen[key]++) config_error(key + ": given twice");

    auto& p = base.params;
    auto& d = base.drop_cfg;
    if (key == "name") base.name = v;
    else if (key == "scenario") {
      if (v == "underlay") base.scenario = Scenario::Underlay;
      else if (v == "overlay") base.scenario = Scenario::Overlay;
      else config_error("scenario must be underlay or overlay");
    }
    else if (key == "mode") { modes.clear(); for (const auto& s : split_list(v)) modes.push_back(parse_mode(s)); }
    else if (key == "algorithm") { algs.clear(); for (const auto& s : split_list(v)) algs.push_back(parse_algorithm(s)); }
    else if (key == "r_percent") { rs.clear(); for (const auto& s : split_list(v)) rs.push_back(to_double(key, s)); }
    else if (key == "p2_sweep_dbw") base.p2_sweep_dbw = parse_sweep(key, v);
    else if (key == "n_drops") base.n_drops = static_cast<int>(to_int(key, v));
    else if (key == "seed") d.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "p1_dbw") base.p1_dbw = to_double(key, v);
    else if (key == "pc_w") p.p_c = to_double(key, v);
    else if (key == "alpha") p.alpha = to_double(key, v);
    else if (key == "n_t1") p.n_t1 = static_cast<int>(to_int(key, v));
    else if (key == "n_t2") p.n_t2 = static_cast<int>(to_int(key, v));
    else if (key == "n_r") p.n_r = static_cast<int>(to_int(key, v));
    else if (key == "bandwidth_hz") p.bandwidth = to_double(key, v);
    else if (key == "r2_star_bps") p.r2_star = to_double(key, v);
    else if (key == "n0_dbm_per_hz") base.n0_dbm_per_hz = to_double(key, v);
    else if (key == "noise_figure_db") base.noise_figure_db = to_double(key, v);
    else if (key == "i_out_w") base.i_out_w = to_double(key, v);
    else if (key == "cell_radius_m") d.cell_radius_m = to_double(key, v);
    else if (key == "min_ap_distance_m") d.min_ap_distance_m = to_double(key, v);
    else if (key == "d2d_min_m") d.d2d_min_m = to_double(key, v);
    else if (key == "d2d_max_m") d.d2d_max_m = to_double(key, v);
    else if (key == "pathloss_exponent") d.pathloss_exponent = to_double(key, v);
    else if (key == "pathloss_ref_gain") d.pathloss_ref_gain = to_double(key, v);
    else if (key == "shadowing_std_db") d.shadowing_std_db = to_double(key, v);
    else if (key == "overlay_relay_ratio_min") d.overlay_relay_ratio_min = to_double(key, v);
    else if (key == "overlay_relay_ratio_max") d.overlay_relay_ratio_max = to_double(key, v);
    else if (key == "eps") base.eps = to_double(key, v);
    else if (key == "threads") base.threads = static_cast<int>(to_int(key, v));
    else if (key == "output") { base.output_path = v; have_output = true; }
    else config_error("unknown key '" + key + "'");
  }
  if (algs.empty()) algs.push_back(base.scenario == Scenario::Underlay ? Algorithm::Alg1 : Algorithm::Alg2);
  if (!have_output) base.output_path = base.name + ".csv";

  std::vector<ExperimentConfig> out;
  const bool multi = modes.size() * algs.size() * rs.size() > 1;
  std::string stem = base.output_path;
  if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".csv") stem.resize(stem.size() - 4);
  for (double r : rs)
    for (Algorithm a : algs)
      for (Mode m : modes) {
        ExperimentConfig c = base;
        c.mode = m;
        c.algorithm = a;
        c.r_percent = r;
        c.resolve();
        if (multi) c.output_path = stem + "_" + to_string(a) + "_" + to_string(m) + "_R" + r_tag(r) + ".csv";
        c.validate();
        out.push_back(std::move(c));
      }
  return out;
}

std::vector<ExperimentConfig> load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) config_error("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> preset_names() { return {"fig1a", "fig1b", "fig2", "fig3a", "fig3b", "table1"}; }

std::string preset_config(const std::string& name) {
  const std::string common =
      "alpha = 10\n"
      "pc_w = 1\n"
      "n_t1 = 2\n"
      "n_t2 = 2\n"
      "n_r = 2\n"
      "bandwidth_hz = 180000\n"
      "n0_dbm_per_hz = -174\n"
      "noise_figure_db = 3\n"
      "i_out_w = 0\n"
      "r2_star_bps = 0\n"
      "cell_radius_m = 500\n"
      "min_ap_distance_m = 10\n"
      "d2d_min_m = 10\n"
      "d2d_max_m = 100\n"
      "pathloss_exponent = 4.5\n"
      "pathloss_ref_gain = 1\n"
      "shadowing_std_db = 6\n"
      "p2_sweep_dbw = -30:4:-2\n"
      "n_drops = 1000\n"
      "seed = 1\n";
  std::string s = "# preset " + name + "\nname = " + name + "\n";
  if (name == "fig1" || name == "fig1a" || name == "fig1b") {
    s += "scenario = underlay\nalgorithm = alg1\nmode = ee, rate\nr_percent = 50, 75, 100\np1_dbw = -10\n";
  } else if (name == "fig2") {
    s += "scenario = underlay\nalgorithm = alg1\nmode = ee, rate\nr_percent = 75\np1_dbw = -10\n";
  } else if (name == "fig3" || name == "fig3a" || name == "fig3b") {
    s += "scenario = overlay\nalgorithm = alg2, alg3\nmode = ee, rate\nr_percent = 125\np1_dbw = -20\neps = 0.001\n"
         "overlay_relay_ratio_min = 0.1\noverlay_relay_ratio_max = 0.9\n";
  } else if (name == "table1") {
    s += "scenario = overlay\nalgorithm = alg2, alg3\nmode = ee\nr_percent = 125, 200\np1_dbw = -20\neps = 0.001\n"
         "overlay_relay_ratio_min = 0.1\noverlay_relay_ratio_max = 0.9\n";
  } else {
    config_error("unknown preset '" + name + "'");
  }
  return s + common;
}

}  // namespace eeshare
