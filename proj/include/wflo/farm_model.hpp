#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace wflo {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Rotor geometry plus tabulated thrust and power curves.
///
/// The tables share one strictly increasing speed axis. Thrust and power are
/// linearly interpolated between breakpoints; power is zero outside
/// [cut_in_ms, cut_out_ms].
struct TurbineSpec {
  double rotor_diameter_m = 126.0;
  double hub_height_m = 90.0;
  double cut_in_ms = 3.0;
  double cut_out_ms = 25.0;
  std::vector<double> speeds_ms;
  std::vector<double> ct;
  std::vector<double> power_w;

  /// Throws DomainError when an invariant is broken.
  void validate() const;

  bool operating(double speed_ms) const {
    return speed_ms >= cut_in_ms && speed_ms <= cut_out_ms;
  }
  /// Thrust coefficient at `speed_ms`, clamped to the table ends.
  double thrust_coefficient(double speed_ms) const;
  double power(double speed_ms) const;
};

/// Reads a `speed_ms,ct,power_w` table. Cut-in/out default to the first and
/// last tabulated speeds.
TurbineSpec load_turbine(const std::filesystem::path& path, double rotor_diameter_m,
                         double hub_height_m);

struct WakeParams {
  double k_star = 0.05;
  /// Rotor-disk sample points; must be a perfect square (1 = hub only).
  int rotor_sample_points = 9;

  void validate() const;
};

/// Evenly spaced candidate vertices on a rectangular farm of
/// width_d x height_d rotor diameters, origin at the lower-left corner.
class FarmGrid {
 public:
  FarmGrid(double width_d, double height_d, int nx, int ny, double rotor_diameter_m);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int vertex_count() const { return nx_ * ny_; }
  double width_d() const { return width_d_; }
  double height_d() const { return height_d_; }
  double width_m() const { return width_d_ * rotor_diameter_m_; }
  double height_m() const { return height_d_ * rotor_diameter_m_; }
  double rotor_diameter_m() const { return rotor_diameter_m_; }
  double step_x_m() const;
  double step_y_m() const;
  Point center() const { return {0.5 * width_m(), 0.5 * height_m()}; }

  /// Row-major: index = iy * nx + ix.
  Point vertex(int index) const;
  int column(int index) const { return index % nx_; }
  int row(int index) const { return index / nx_; }
  int index(int ix, int iy) const { return iy * nx_ + ix; }
  /// Closed-rectangle containment with a small absolute tolerance.
  bool contains(Point p) const;

 private:
  double width_d_;
  double height_d_;
  int nx_;
  int ny_;
  double rotor_diameter_m_;
};

/// Turbine positions; `vertices` holds grid indices when the layout was drawn
/// from a FarmGrid and is empty otherwise.
struct Layout {
  std::vector<Point> positions;
  std::vector<int> vertices;

  std::size_t size() const { return positions.size(); }
  static Layout from_vertices(const FarmGrid& grid, std::span<const int> vertices);
};

/// `direction_deg` is meteorological: the compass bearing the wind blows from.
struct WindCondition {
  double direction_deg = 270.0;
  double speed_ms = 8.0;
};

double normalize_direction(double direction_deg);

/// Wake width at the rotor plane from mass-flow matching, as a fraction of d0.
double epsilon_init(double ct);

struct Deficit {
  double fraction = 0.0;
  /// Set when the near-wake radicand went negative and the amplitude was clamped to 1.
  bool clamped = false;
};

/// Fractional velocity deficit of a single Gaussian wake at offsets
/// (downstream, crossflow, vertical-from-hub) in metres. Zero unless dx > 1e-9 d0.
Deficit velocity_deficit(const TurbineSpec& spec, const WakeParams& wp, double ct, double dx,
                         double dy, double dz);

/// Rigid rotation about `center` into a frame where the flow travels along +x.
std::vector<Point> rotate_to_wind_frame(std::span<const Point> positions, double direction_deg,
                                        Point center);
std::vector<Point> rotate_to_wind_frame(const Layout& layout, double direction_deg);

/// Result of the upstream-to-downstream wake sweep for one wind condition.
struct FlowSolution {
  Point center;                        // rotation center in ground coordinates
  std::vector<Point> frame;            // wind-frame positions
  std::vector<double> effective_speed; // rotor-averaged, m/s
  std::vector<double> ct;              // 0 for turbines that are not operating
  int clamped_deficits = 0;
};

FlowSolution solve_flow(const Layout& layout, const WindCondition& cond, const TurbineSpec& spec,
                        const WakeParams& wp);

double effective_speed(const Layout& layout, std::size_t idx, const WindCondition& cond,
                       const TurbineSpec& spec, const WakeParams& wp);

struct FarmPower {
  std::vector<double> turbine_w;
  double total_w = 0.0;
  int clamped_deficits = 0;
};

FarmPower farm_power(const Layout& layout, const WindCondition& cond, const TurbineSpec& spec,
                     const WakeParams& wp);

/// Wind speed at an arbitrary ground point and height given a solved flow.
/// Every turbine whose wake reaches the point contributes (linear superposition).
double field_speed(const FlowSolution& flow, const Layout& layout, const WindCondition& cond,
                   const TurbineSpec& spec, const WakeParams& wp, Point ground, double z_m);

}  // namespace wflo
