#include "wflo/farm_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>

#include <fmt/format.h>

#include "wflo/csv.hpp"
#include "wflo/errors.hpp"

namespace wflo {
namespace {

double interpolate(std::span<const double> xs, std::span<const double> ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto hi = std::upper_bound(xs.begin(), xs.end(), x);
  const auto i = static_cast<std::size_t>(hi - xs.begin());
  const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + t * (ys[i] - ys[i - 1]);
}

int stencil_width(int rotor_sample_points) {
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(rotor_sample_points))));
  return m;
}

// Offsets (crossflow, vertical) of the rotor sample points, in metres.
// Square stencil at +-R/2 around the hub, matching the usual turbine grid.
std::vector<Point> rotor_stencil(const TurbineSpec& spec, const WakeParams& wp) {
  const int m = stencil_width(wp.rotor_sample_points);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(m * m));
  const double half = 0.25 * spec.rotor_diameter_m;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const double oy = m == 1 ? 0.0 : -half + 2.0 * half * a / (m - 1);
      const double oz = m == 1 ? 0.0 : -half + 2.0 * half * b / (m - 1);
      pts.push_back({oy, oz});
    }
  }
  return pts;
}

Point bounding_center(std::span<const Point> positions) {
  if (positions.empty()) return {};
  auto [minx, maxx] = std::minmax_element(positions.begin(), positions.end(),
                                          [](Point a, Point b) { return a.x < b.x; });
  auto [miny, maxy] = std::minmax_element(positions.begin(), positions.end(),
                                          [](Point a, Point b) { return a.y < b.y; });
  return {0.5 * (minx->x + maxx->x), 0.5 * (miny->y + maxy->y)};
}

}  // namespace

void TurbineSpec::validate() const {
  if (!(rotor_diameter_m > 0.0)) throw DomainError("rotor diameter must be positive");
  if (!(hub_height_m > 0.0)) throw DomainError("hub height must be positive");
  if (!(cut_in_ms > 0.0 && cut_in_ms < cut_out_ms)) {
    throw DomainError("require 0 < cut_in < cut_out");
  }
  if (speeds_ms.size() < 2 || ct.size() != speeds_ms.size() || power_w.size() != speeds_ms.size()) {
    throw DomainError("turbine curve tables need at least two rows of equal length");
  }
  for (std::size_t i = 1; i < speeds_ms.size(); ++i) {
    if (!(speeds_ms[i] > speeds_ms[i - 1])) {
      throw DomainError("turbine curve speeds must be strictly increasing");
    }
  }
  if (speeds_ms.front() > cut_in_ms || speeds_ms.back() < cut_out_ms) {
    throw DomainError("turbine curve must cover [cut_in, cut_out]");
  }
  for (double c : ct) {
    if (!(c > 0.0 && c < 1.0)) throw DomainError(fmt::format("thrust coefficient {} outside (0,1)", c));
  }
  for (double p : power_w) {
    if (p < 0.0) throw DomainError("negative power in curve table");
  }
}

double TurbineSpec::thrust_coefficient(double speed_ms) const {
  return interpolate(speeds_ms, ct, speed_ms);
}

double TurbineSpec::power(double speed_ms) const {
  if (!operating(speed_ms)) return 0.0;
  return interpolate(speeds_ms, power_w, speed_ms);
}

TurbineSpec load_turbine(const std::filesystem::path& path, double rotor_diameter_m,
                         double hub_height_m) {
  const CsvTable table = read_csv(path, {"speed_ms", "ct", "power_w"});
  TurbineSpec spec;
  spec.rotor_diameter_m = rotor_diameter_m;
  spec.hub_height_m = hub_height_m;
  for (const auto& row : table.rows) {
    spec.speeds_ms.push_back(row[0]);
    spec.ct.push_back(row[1]);
    spec.power_w.push_back(row[2]);
  }
  if (spec.speeds_ms.size() < 2) throw FormatError(path.string() + ": need at least two curve rows");
  spec.cut_in_ms = spec.speeds_ms.front();
  spec.cut_out_ms = spec.speeds_ms.back();
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return spec;
}

void WakeParams::validate() const {
  if (!(k_star > 0.0)) throw DomainError("k_star must be positive");
  if (rotor_sample_points < 1) throw DomainError("rotor_sample_points must be >= 1");
  const int m = stencil_width(rotor_sample_points);
  if (m * m != rotor_sample_points) {
    throw DomainError("rotor_sample_points must be a perfect square (1, 4, 9, ...)");
  }
}

FarmGrid::FarmGrid(double width_d, double height_d, int nx, int ny, double rotor_diameter_m)
    : width_d_(width_d), height_d_(height_d), nx_(nx), ny_(ny), rotor_diameter_m_(rotor_diameter_m) {
  if (!(width_d >= 0.0 && height_d >= 0.0)) throw ConfigError("farm extent must be non-negative");
  if (nx < 1 || ny < 1) throw ConfigError("grid needs at least one vertex per axis");
  if ((nx > 1 && !(width_d > 0.0)) || (ny > 1 && !(height_d > 0.0))) {
    throw ConfigError("multi-vertex axis needs a positive extent");
  }
  if (!(rotor_diameter_m > 0.0)) throw ConfigError("rotor diameter must be positive");
}

double FarmGrid::step_x_m() const { return nx_ > 1 ? width_m() / (nx_ - 1) : 0.0; }
double FarmGrid::step_y_m() const { return ny_ > 1 ? height_m() / (ny_ - 1) : 0.0; }

Point FarmGrid::vertex(int index) const {
  const int ix = column(index);
  const int iy = row(index);
  const double x = nx_ > 1 ? width_m() * ix / (nx_ - 1) : 0.5 * width_m();
  const double y = ny_ > 1 ? height_m() * iy / (ny_ - 1) : 0.5 * height_m();
  return {x, y};
}

bool FarmGrid::contains(Point p) const {
  constexpr double tol = 1e-9;
  return p.x >= -tol && p.x <= width_m() + tol && p.y >= -tol && p.y <= height_m() + tol;
}

Layout Layout::from_vertices(const FarmGrid& grid, std::span<const int> vertices) {
  Layout layout;
  layout.vertices.assign(vertices.begin(), vertices.end());
  layout.positions.reserve(vertices.size());
  for (int v : vertices) layout.positions.push_back(grid.vertex(v));
  return layout;
}

double normalize_direction(double direction_deg) {
  double d = std::fmod(direction_deg, 360.0);
  if (d < 0.0) d += 360.0;
  if (d >= 360.0) d -= 360.0;
  return d;
}

double epsilon_init(double ct) {
  if (!(ct > 0.0 && ct < 1.0)) throw DomainError(fmt::format("thrust coefficient {} outside (0,1)", ct));
  const double s = std::sqrt(1.0 - ct);
  const double beta = (1.0 + s) / (2.0 * s);
  return 0.2 * std::sqrt(beta);
}

Deficit velocity_deficit(const TurbineSpec& spec, const WakeParams& wp, double ct, double dx,
                         double dy, double dz) {
  const double d0 = spec.rotor_diameter_m;
  // Side-by-side rotors can pick up a rounding-level dx from the rotation.
  if (!(dx > 1e-9 * d0)) return {};
  const double sigma = wp.k_star * dx / d0 + epsilon_init(ct);
  const double two_sigma2 = 2.0 * sigma * sigma;
  const double radicand = 1.0 - ct / (4.0 * two_sigma2);
  Deficit out;
  double amplitude = 1.0;
  if (radicand < 0.0) {
    out.clamped = true;
  } else {
    amplitude = 1.0 - std::sqrt(radicand);
  }
  const double ry = dy / d0;
  const double rz = dz / d0;
  out.fraction = amplitude * std::exp(-(ry * ry + rz * rz) / two_sigma2);
  return out;
}

std::vector<Point> rotate_to_wind_frame(std::span<const Point> positions, double direction_deg,
                                        Point center) {
  // Wind from bearing theta travels along (-sin theta, -cos theta) in (east, north).
  const double theta = normalize_direction(direction_deg) * std::numbers::pi / 180.0;
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  std::vector<Point> out;
  out.reserve(positions.size());
  for (const Point& p : positions) {
    const double x = p.x - center.x;
    const double y = p.y - center.y;
    out.push_back({-s * x - c * y, c * x - s * y});
  }
  return out;
}

std::vector<Point> rotate_to_wind_frame(const Layout& layout, double direction_deg) {
  return rotate_to_wind_frame(layout.positions, direction_deg, bounding_center(layout.positions));
}

FlowSolution solve_flow(const Layout& layout, const WindCondition& cond, const TurbineSpec& spec,
                        const WakeParams& wp) {
  const std::size_t n = layout.size();
  FlowSolution flow;
  flow.center = bounding_center(layout.positions);
  flow.frame = rotate_to_wind_frame(layout.positions, cond.direction_deg, flow.center);
  flow.effective_speed.assign(n, 0.0);
  flow.ct.assign(n, 0.0);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return flow.frame[a].x < flow.frame[b].x; });

  const auto stencil = rotor_stencil(spec, wp);
  const double inv_points = 1.0 / static_cast<double>(stencil.size());
  const double u_inf = std::max(0.0, cond.speed_ms);

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = order[k];
    const Point pi = flow.frame[i];
    double deficit = 0.0;
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t j = order[m];
      if (flow.ct[j] <= 0.0) continue;
      const double dx = pi.x - flow.frame[j].x;
      if (!(dx > 0.0)) continue;
      double acc = 0.0;
      for (const Point& o : stencil) {
        const Deficit d = velocity_deficit(spec, wp, flow.ct[j], dx, pi.y + o.x - flow.frame[j].y, o.y);
        acc += d.fraction;
        flow.clamped_deficits += d.clamped ? 1 : 0;
      }
      deficit += acc * inv_points;
    }
    const double u = std::max(0.0, u_inf * (1.0 - deficit));
    flow.effective_speed[i] = u;
    flow.ct[i] = spec.operating(u) ? spec.thrust_coefficient(u) : 0.0;
  }
  return flow;
}

double effective_speed(const Layout& layout, std::size_t idx, const WindCondition& cond,
                       const TurbineSpec& spec, const WakeParams& wp) {
  return solve_flow(layout, cond, spec, wp).effective_speed.at(idx);
}

FarmPower farm_power(const Layout& layout, const WindCondition& cond, const TurbineSpec& spec,
                     const WakeParams& wp) {
  const FlowSolution flow = solve_flow(layout, cond, spec, wp);
  FarmPower out;
  out.turbine_w.reserve(layout.size());
  for (double u : flow.effective_speed) {
    out.turbine_w.push_back(spec.power(u));
    out.total_w += out.turbine_w.back();
  }
  out.clamped_deficits = flow.clamped_deficits;
  return out;
}

double field_speed(const FlowSolution& flow, const Layout& layout, const WindCondition& cond,
                   const TurbineSpec& spec, const WakeParams& wp, Point ground, double z_m) {
  const Point p = rotate_to_wind_frame(std::span<const Point>(&ground, 1), cond.direction_deg,
                                       flow.center)
                      .front();
  double deficit = 0.0;
  for (std::size_t j = 0; j < layout.size(); ++j) {
    if (flow.ct[j] <= 0.0) continue;
    deficit += velocity_deficit(spec, wp, flow.ct[j], p.x - flow.frame[j].x, p.y - flow.frame[j].y,
                                z_m - spec.hub_height_m)
                   .fraction;
  }
  return std::max(0.0, std::max(0.0, cond.speed_ms) * (1.0 - deficit));
}

}  // namespace wflo
