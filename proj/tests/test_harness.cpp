#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eeshare/error.hpp"
#include "eeshare/experiment.hpp"

using namespace eeshare;

namespace {

std::string small_config(const std::string& preset, int drops, const std::string& sweep) {
  std::string s = preset_config(preset);
  auto set = [&](const std::string& key, const std::string& v) {
    const auto pos = s.find("\n" + key + " =");
    REQUIRE(pos != std::string::npos);
    const auto end = s.find('\n', pos + 1);
    s.replace(pos + 1, end - pos - 1, key + " = " + v);
  };
  set("n_drops", std::to_string(drops));
  set("p2_sweep_dbw", sweep);
  return s + "threads = 1\n";
}

ErrorCode code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;  // parsed: callers expect a ConfigError
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("defaults and single run") {
    const auto c = parse_config("p2_sweep_dbw = -10\n");
    REQUIRE(c.size() == 1);
    CHECK(c[0].scenario == Scenario::Underlay);
    CHECK(c[0].algorithm == Algorithm::Alg1);
    CHECK(c[0].output_path == "run.csv");
    CHECK(c[0].params.p1 == doctest::Approx(0.1));
  }
  SUBCASE("sweep syntax") {
    auto c = parse_config("p2_sweep_dbw = -30:4:-2\n");
    REQUIRE(c[0].p2_sweep_dbw.size() == 8);
    CHECK(c[0].p2_sweep_dbw.front() == -30.0);
    CHECK(c[0].p2_sweep_dbw.back() == -2.0);
    c = parse_config("p2_sweep_dbw = -5, 0 ,5  # comment\n");
    CHECK(c[0].p2_sweep_dbw == std::vector<double>{-5.0, 0.0, 5.0});
  }
  SUBCASE("list keys expand") {
    const auto c = parse_config(
        "name = x\nscenario = overlay\nalgorithm = alg2, alg3\nmode = ee, rate\nr_percent = 125, 200\n"
        "p2_sweep_dbw = 0\n");
    REQUIRE(c.size() == 8);
    CHECK(c[0].output_path == "x_alg2_ee_R125.csv");
    CHECK(c[7].output_path == "x_alg3_rate_R200.csv");
    CHECK(c[7].r_percent == 200.0);
  }
  SUBCASE("errors") {
    CHECK(code_of("p2_sweep_dbw = -10\nbogus = 1\n") == ErrorCode::ConfigError);
    CHECK(code_of("p2_sweep_dbw = -10\nalpha = abc\n") == ErrorCode::ConfigError);
    CHECK(code_of("p2_sweep_dbw = -10\nalpha = 2\nalpha = 3\n") == ErrorCode::ConfigError);
    CHECK(code_of("p2_sweep_dbw = -10\nno equals sign\n") == ErrorCode::ConfigError);
    CHECK(code_of("n_drops = 3\n") == ErrorCode::ConfigError);
    CHECK(code_of("p2_sweep_dbw = 5:1:0\n") == ErrorCode::ConfigError);
    CHECK(code_of("p2_sweep_dbw = 0\nn_drops = 2.5\n") == ErrorCode::ConfigError);
    CHECK(code_of("p2_sweep_dbw = 0\nscenario = overlay\nalgorithm = alg1\n") == ErrorCode::ConfigError);
    CHECK(code_of("p2_sweep_dbw = 0\nmode = fast\n") == ErrorCode::ConfigError);
    CHECK(code_of("p2_sweep_dbw = 0\nalpha = -1\n") == ErrorCode::ConfigError);
    CHECK(code_of("p2_sweep_dbw = 0\nd2d_min_m = 500\n") == ErrorCode::ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/eeshare.cfg"), Error);
  }
}

TEST_CASE("presets") {
  for (const auto& n : preset_names()) CHECK_NOTHROW(parse_config(preset_config(n)));
  CHECK_THROWS_AS(preset_config("fig9"), Error);

  const auto fig1 = parse_config(preset_config("fig1"));
  REQUIRE(fig1.size() == 6);
  for (const auto& c : fig1) {
    CHECK(c.scenario == Scenario::Underlay);
    CHECK(c.p1_dbw == -10.0);
    CHECK(c.params.p_c == 1.0);
    CHECK(c.params.alpha == 10.0);
  }
  CHECK(fig1[0].r_percent == 50.0);
  CHECK(fig1[2].r_percent == 75.0);
  CHECK(fig1[4].r_percent == 100.0);

  for (const char* n : {"fig3", "fig3a", "table1"}) {
    for (const auto& c : parse_config(preset_config(n))) {
      CHECK(c.scenario == Scenario::Overlay);
      CHECK(c.p1_dbw == -20.0);
      CHECK(c.params.n_t1 == 2);
      CHECK(c.params.bandwidth == 180000.0);
      CHECK(c.eps == 1e-3);
    }
  }
  const auto t1 = parse_config(preset_config("table1"));
  REQUIRE(t1.size() == 4);
  CHECK(t1[0].r_percent == 125.0);
  CHECK(t1[3].r_percent == 200.0);
  CHECK(t1[0].p2_sweep_dbw.size() == 8);
  // N0 = -174 dBm/Hz, F = 3 dB over 180 kHz
  CHECK(t1[0].params.noise_power == doctest::Approx(std::pow(10.0, (-174.0 + 3.0 - 30.0) / 10.0) * 180000.0));
}

TEST_CASE("csv output") {
  ResultRow a;
  a.p2_dbw = -30;
  a.mean_ee = 123456.789012345;
  a.mean_r2 = 1e5 / 3.0;
  a.mean_tx_power = 1e-3;
  a.mean_iterations = 2.5;
  a.n_feasible = 97;
  a.n_infeasible_r2star = 1;
  a.n_infeasible_r1star = 2;
  ResultRow b = a;
  b.p2_dbw = -26;
  b.mean_ee = std::nan("");
  const std::string text = format_csv({a, b});
  std::istringstream in(text);
  std::string header, l1;
  std::getline(in, header);
  std::getline(in, l1);
  CHECK(header ==
        "p2_dbw,mean_ee_bit_per_joule,mean_r2_bit_per_s,mean_tx_power_w,mean_iterations,n_feasible,"
        "n_infeasible_r2star,n_infeasible_r1star");
  CHECK(l1 == "-30,123456.789,33333.3333,0.001,2.5,97,1,2");
  const auto back = parse_csv(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].mean_ee == doctest::Approx(a.mean_ee).epsilon(1e-8));
  CHECK(back[0].n_infeasible_r1star == 2);
  CHECK(std::isnan(back[1].mean_ee));
  CHECK_THROWS_AS(parse_csv("wrong,header\n"), Error);

  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "eeshare_rows.csv").string();
  const auto empty = (dir / "eeshare_empty.csv").string();
  std::filesystem::remove(empty);
  emit_csv({a, b}, path);
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == text);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(emit_csv({}, empty), Error);
  CHECK(!std::filesystem::exists(empty));
  CHECK_THROWS_WITH_AS(emit_csv({a}, "/nonexistent/dir/x.csv"), doctest::Contains("/nonexistent/dir/x.csv"), Error);
}

TEST_CASE("underlay runs") {
  const auto cfgs = parse_config(small_config("fig2", 12, "-30, -14, -2"));
  REQUIRE(cfgs.size() == 2);
  const auto& ee_cfg = cfgs[0];
  const auto& rate_cfg = cfgs[1];
  REQUIRE(ee_cfg.mode == Mode::MaximizeEE);
  const auto rows = run_experiment(ee_cfg);
  REQUIRE(rows.size() == 3);
  for (size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    CHECK(r.n_feasible + r.n_infeasible_r1star + r.n_infeasible_r2star + r.n_failed == ee_cfg.n_drops);
    CHECK(r.n_failed == 0);
    CHECK(r.mean_tx_power <= std::pow(10.0, ee_cfg.p2_sweep_dbw[k] / 10.0) * (1.0 + 1e-9));
  }
  // deterministic, including across thread counts
  auto threaded = ee_cfg;
  threaded.threads = 3;
  CHECK(format_csv(run_experiment(threaded)) == format_csv(rows));

  // same drops under both objectives: EE mode never loses on EE
  const auto drops = make_drops(ee_cfg);
  for (const auto& d : drops) {
    for (double p2 : {-30.0, -2.0}) {
      const auto e = run_drop(ee_cfg, d, std::pow(10.0, p2 / 10.0));
      const auto r = run_drop(rate_cfg, d, std::pow(10.0, p2 / 10.0));
      REQUIRE(e.status == r.status);
      if (e.status != DropStatus::Feasible) continue;
      CHECK(e.ee >= r.ee * (1.0 - 1e-6));
      CHECK(r.r2 >= e.r2 * (1.0 - 1e-6));
    }
  }
}

TEST_CASE("overlay run bookkeeping") {
  auto cfgs = parse_config(small_config("table1", 6, "-10"));
  auto cfg = cfgs[1];  // alg3, cheaper
  REQUIRE(cfg.algorithm == Algorithm::Alg3);
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n_feasible + rows[0].n_infeasible_r1star + rows[0].n_infeasible_r2star + rows[0].n_failed == 6);
  CHECK(rows[0].n_failed == 0);
  if (rows[0].n_feasible > 0) {
    CHECK(rows[0].mean_tx_power <= 0.1 * (1.0 + 1e-9));
    CHECK(rows[0].mean_iterations >= 1.0);
  } else {
    CHECK(std::isnan(rows[0].mean_ee));
  }
}
