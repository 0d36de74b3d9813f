#include "eeshare/channel.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "eeshare/error.hpp"
#include "eeshare/rng.hpp"

namespace eeshare {

namespace {

constexpr int kMaxRejections = 10000;
constexpr std::uint32_t kGeometryStream = 0;
constexpr std::uint32_t kFadingStream = 1;

Point2 polar(double r, double theta) { return {r * std::cos(theta), r * std::sin(theta)}; }

double norm(const Point2& p) { return std::hypot(p.x, p.y); }

// Uniform in the annulus r_min <= r <= r_max via the inverse radial CDF.
Point2 uniform_annulus(PhiloxStream& rng, double r_min, double r_max) {
  const double u = rng.uniform();
  const double r = std::sqrt(r_min * r_min + u * (r_max * r_max - r_min * r_min));
  return polar(r, 2.0 * std::numbers::pi * rng.uniform());
}

CMat fading(PhiloxStream& rng, Eigen::Index rows, Eigen::Index cols, double gain) {
  const double s = std::sqrt(0.5 * gain);
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      m(i, j) = cplx(re * s, im * s);
    }
  return m;
}

}  // namespace

void DropConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
  };
  require(cell_radius_m > 0.0, "cell radius must be positive");
  require(min_ap_distance_m > 0.0 && min_ap_distance_m < cell_radius_m, "min AP distance must lie in (0, radius)");
  require(d2d_min_m > 0.0 && d2d_min_m < d2d_max_m, "d2d distance range must satisfy 0 < min < max");
  require(pathloss_exponent > 0.0, "path-loss exponent must be positive");
  require(pathloss_ref_gain > 0.0, "path-loss reference gain must be positive");
  require(shadowing_std_db >= 0.0, "shadowing std must be nonnegative");
  require(overlay_relay_ratio_min > 0.0 && overlay_relay_ratio_min < overlay_relay_ratio_max,
          "relay ratio range must satisfy 0 < min < max");
}

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double pathloss_gain(double d_m, double eta, double shadow_db, double ref_gain) {
  const double d = std::max(d_m, 1.0);
  return ref_gain * std::pow(d, -eta) * std::pow(10.0, shadow_db / 10.0);
}

Drop generate_drop(const DropConfig& cfg, const SystemParams& params, std::uint64_t drop_index) {
  cfg.validate();
  const auto sub = static_cast<std::uint32_t>(drop_index);
  PhiloxStream geo(cfg.seed ^ (drop_index >> 32), sub, kGeometryStream);
  PhiloxStream fad(cfg.seed ^ (drop_index >> 32), sub, kFadingStream);

  Drop d;
  d.index = drop_index;
  const double rmin = cfg.min_ap_distance_m;
  const double rmax = cfg.cell_radius_m;
  int rejections = 0;
  for (;;) {
    if (rejections >= kMaxRejections)
      throw Error(ErrorCode::PlacementFailed, "no valid placement after 10^4 rejections");
    d.primary_rx = uniform_annulus(geo, rmin, rmax);
    d.secondary_tx = uniform_annulus(geo, rmin, rmax);
    const double r = cfg.d2d_min_m + (cfg.d2d_max_m - cfg.d2d_min_m) * geo.uniform();
    const Point2 off = polar(r, 2.0 * std::numbers::pi * geo.uniform());
    d.secondary_rx = {d.secondary_tx.x + off.x, d.secondary_tx.y + off.y};
    const double rr = norm(d.secondary_rx);
    if (rr > rmax || rr < rmin) {
      ++rejections;
      continue;
    }
    if (cfg.scenario == Scenario::Overlay) {
      const double ratio = distance(d.secondary_tx, d.primary_rx) / distance(d.primary_tx, d.primary_rx);
      if (ratio < cfg.overlay_relay_ratio_min || ratio > cfg.overlay_relay_ratio_max) {
        ++rejections;
        continue;
      }
    }
    break;
  }

  auto link = [&](const Point2& a, const Point2& b) {
    return pathloss_gain(distance(a, b), cfg.pathloss_exponent, cfg.shadowing_std_db * fad.normal(),
                         cfg.pathloss_ref_gain);
  };
  d.gains.g11 = link(d.primary_tx, d.primary_rx);
  d.gains.g22 = link(d.secondary_tx, d.secondary_rx);
  d.gains.g12 = link(d.primary_tx, d.secondary_rx);
  d.gains.g21 = link(d.secondary_tx, d.primary_rx);
  d.gains.gt = link(d.primary_tx, d.secondary_tx);

  ChannelSet& ch = d.channels;
  ch.h11 = fading(fad, params.n_t1, 1, d.gains.g11);
  ch.h22 = fading(fad, params.n_r, params.n_t2, d.gains.g22);
  ch.h12 = fading(fad, params.n_r, params.n_t1, d.gains.g12);
  ch.h21 = fading(fad, params.n_t2, 1, d.gains.g21);
  ch.ht = fading(fad, params.n_t2, params.n_t1, d.gains.gt);
  return d;
}

// ---------------------------------------------------------------------------
// JSON: complex entries as [re, im], matrices as row-major arrays of rows.

namespace {

using nlohmann::json;

json mat_to_json(const CMat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

CMat mat_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  CMat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols)
      throw Error(ErrorCode::IoError, "ragged matrix in drop JSON");
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = cplx(j[i][j2][0].get<double>(), j[i][j2][1].get<double>());
  }
  return m;
}

json pt(const Point2& p) { return {p.x, p.y}; }
Point2 pt_from(const json& j) { return {j[0].get<double>(), j[1].get<double>()}; }

}  // namespace

std::string drop_to_json(const Drop& d) {
  json j;
  j["index"] = d.index;
  j["positions"] = {{"primary_tx", pt(d.primary_tx)},
                    {"primary_rx", pt(d.primary_rx)},
                    {"secondary_tx", pt(d.secondary_tx)},
                    {"secondary_rx", pt(d.secondary_rx)}};
  j["gains"] = {{"g11", d.gains.g11}, {"g22", d.gains.g22}, {"g12", d.gains.g12},
                {"g21", d.gains.g21}, {"gt", d.gains.gt}};
  j["channels"] = {{"h11", mat_to_json(d.channels.h11)},
                   {"h22", mat_to_json(d.channels.h22)},
                   {"h12", mat_to_json(d.channels.h12)},
                   {"h21", mat_to_json(d.channels.h21)},
                   {"ht", mat_to_json(d.channels.ht)}};
  return j.dump(2);
}

Drop drop_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    Drop d;
    d.index = j.at("index").get<std::uint64_t>();
    const auto& p = j.at("positions");
    d.primary_tx = pt_from(p.at("primary_tx"));
    d.primary_rx = pt_from(p.at("primary_rx"));
    d.secondary_tx = pt_from(p.at("secondary_tx"));
    d.secondary_rx = pt_from(p.at("secondary_rx"));
    const auto& g = j.at("gains");
    d.gains = {g.at("g11").get<double>(), g.at("g22").get<double>(), g.at("g12").get<double>(),
               g.at("g21").get<double>(), g.at("gt").get<double>()};
    const auto& c = j.at("channels");
    d.channels.h11 = mat_from_json(c.at("h11"));
    d.channels.h22 = mat_from_json(c.at("h22"));
    d.channels.h12 = mat_from_json(c.at("h12"));
    d.channels.h21 = mat_from_json(c.at("h21"));
    d.channels.ht = mat_from_json(c.at("ht"));
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("malformed drop JSON: ") + e.what());
  }
}

void save_drop(const Drop& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << drop_to_json(d) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

Drop load_drop(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return drop_from_json(ss.str());
}

}  // namespace eeshare
