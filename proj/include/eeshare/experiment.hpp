#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eeshare/channel.hpp"
#include "eeshare/model.hpp"

namespace eeshare {

enum class Mode { MaximizeEE, MaximizeRate };
enum class Algorithm { Alg1, Alg2, Alg3 };

const char* to_string(Mode m);
const char* to_string(Algorithm a);

/// One Monte-Carlo run: a single (scenario, mode, algorithm, R) over a P2 sweep.
struct ExperimentConfig {
  std::string name = "run";
  Scenario scenario = Scenario::Underlay;
  Mode mode = Mode::MaximizeEE;
  Algorithm algorithm = Algorithm::Alg1;
  std::vector<double> p2_sweep_dbw;
  double r_percent = 75.0;      // R1* as % of the primary point-to-point capacity
  int n_drops = 1000;
  DropConfig drop_cfg;
  SystemParams params;          // p1, p2 (overwritten per sweep point), r1_star (per drop) unused as given
  double p1_dbw = -10.0;
  double n0_dbm_per_hz = -174.0;
  double noise_figure_db = 3.0;
  double i_out_w = 0.0;
  double eps = 1e-3;            // outer surrogate loop, relative EE
  int threads = 0;              // 0: hardware concurrency
  std::string output_path;

  /// Fills params.p1 and params.noise_power from the dB-domain fields.
  void resolve();
  /// Throws ConfigError.
  void validate() const;
};

struct ResultRow {
  double p2_dbw = 0.0;
  double mean_ee = 0.0;          // bit/J over feasible drops (NaN when none)
  double mean_r2 = 0.0;          // bit/s
  double mean_tx_power = 0.0;    // W, alpha tr(.)
  double mean_iterations = 0.0;
  int n_feasible = 0;
  int n_infeasible_r2star = 0;
  int n_infeasible_r1star = 0;
  int n_failed = 0;              // solver errors; not part of the CSV schema
};

enum class DropStatus { Feasible, InfeasibleR2Star, InfeasibleR1Star, Failed };

struct DropOutcome {
  DropStatus status = DropStatus::Failed;
  double ee = 0.0;
  double r2 = 0.0;
  double tx_power = 0.0;
  int iterations = 0;
  std::string error;
};

/// Same drops for every sweep point; drop i uses generate_drop(cfg.drop_cfg, ., i).
std::vector<Drop> make_drops(const ExperimentConfig& cfg);

/// R1* for a drop: r_percent of B log2(1 + P1 |h11|^2 / sigma^2).
double primary_target(const ExperimentConfig& cfg, const ChannelSet& ch);

/// Runs the configured allocator on one drop at one P2 (Watts). Never throws on
/// solver failures; they are reported through the outcome.
DropOutcome run_drop(const ExperimentConfig& cfg, const Drop& drop, double p2_w);

/// outcomes[k][i]: sweep point k, drop i.
std::vector<std::vector<DropOutcome>> run_experiment_detailed(const ExperimentConfig& cfg,
                                                              const std::vector<Drop>& drops);

ResultRow aggregate(double p2_dbw, const std::vector<DropOutcome>& outcomes);

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Header plus one line per row, 9 significant digits.
std::string format_csv(const std::vector<ResultRow>& rows);
/// Throws InvalidArgument on empty rows (no file created) and IoError with the path.
void emit_csv(const std::vector<ResultRow>& rows, const std::string& path);
std::vector<ResultRow> parse_csv(const std::string& text);

// ---------------------------------------------------------------------------
// Config files: flat key = value lines, '#' comments. List-valued keys
// (mode, algorithm, r_percent) expand into one ExperimentConfig per combination.

std::vector<ExperimentConfig> parse_config(const std::string& text);
std::vector<ExperimentConfig> load_config(const std::string& path);

/// Preset config text for fig1a, fig1b, fig2, fig3a, fig3b, table1 (fig1 and fig3 are
/// accepted as aliases). Throws ConfigError.
std::string preset_config(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace eeshare
