#pragma once

#include <cstdint>
#include <string>

#include "eeshare/model.hpp"

namespace eeshare {

enum class Scenario { Underlay, Overlay };

struct DropConfig {
  double cell_radius_m = 500.0;
  double min_ap_distance_m = 10.0;
  double d2d_min_m = 10.0;
  double d2d_max_m = 100.0;
  double pathloss_exponent = 4.5;
  double pathloss_ref_gain = 1.0;  // C: linear gain at 1 m
  double shadowing_std_db = 6.0;
  double overlay_relay_ratio_min = 0.1;
  double overlay_relay_ratio_max = 0.9;
  std::uint64_t seed = 1;
  Scenario scenario = Scenario::Underlay;

  void validate() const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b);

/// Large-scale gains (path loss times shadowing) of every link.
struct LinkGains {
  double g11 = 0.0;  // primary tx -> primary rx
  double g22 = 0.0;  // secondary tx -> secondary rx
  double g12 = 0.0;  // primary tx -> secondary rx
  double g21 = 0.0;  // secondary tx -> primary rx
  double gt = 0.0;   // primary tx -> secondary tx
};

struct Drop {
  std::uint64_t index = 0;
  Point2 primary_tx;
  Point2 primary_rx;
  Point2 secondary_tx;
  Point2 secondary_rx;
  LinkGains gains;
  ChannelSet channels;
};

/// C * d^-eta * 10^(shadow_db/10); distances below 1 m are clamped to 1 m.
double pathloss_gain(double d_m, double eta, double shadow_db, double ref_gain = 1.0);

/// Deterministic in (cfg.seed, drop_index). Geometry and fading use separate
/// substreams so that a rejected placement never shifts the fading draws.
/// Throws PlacementFailed after 10^4 rejected placements.
Drop generate_drop(const DropConfig& cfg, const SystemParams& params, std::uint64_t drop_index = 0);

std::string drop_to_json(const Drop& d);
Drop drop_from_json(const std::string& text);
void save_drop(const Drop& d, const std::string& path);
Drop load_drop(const std::string& path);

}  // namespace eeshare
