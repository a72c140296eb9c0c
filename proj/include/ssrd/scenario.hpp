#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ssrd {

using Matrix = Eigen::MatrixXd;

struct GeoPoint {
  double lat = 0.0;  ///< degrees
  double lon = 0.0;  ///< degrees
};

struct Region {
  int id = 0;
  std::string name;
  double area_km2 = 0.0;
  double density = 0.0;  ///< persons per km²
  std::optional<GeoPoint> centroid;
};

/// Closed interval [lo, hi].
struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
  double lerp(double u) const { return lo + (hi - lo) * u; }
};

/// Region-specific demand dynamics plus the initial OD matrix (diagonal is
/// intra-region demand).
struct CalibrationParams {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> lambda;
  Matrix q0;

  /// Row sums of q0.
  std::vector<double> baseline_demand() const;
};

enum class SpilloverDistribution { Gamma, Lognormal, Normal, Laplace };

std::string to_string(SpilloverDistribution d);
SpilloverDistribution parse_distribution(const std::string& s);

/// Gamma baseline (shape ξ1, scale ξ2); the other families are moment-matched
/// to it.
struct SpilloverParams {
  double shape = 0.15;
  double scale = 0.45;
  double mean() const { return shape * scale; }
  double variance() const { return shape * scale * scale; }
};

struct SpilloverSpec {
  SpilloverDistribution distribution = SpilloverDistribution::Gamma;
  double strength = 1.0;
  bool stationary = false;
  /// Fixed baseline parameters; when empty each region draws its own from
  /// the ranges below at simulation time.
  std::optional<SpilloverParams> params;
  Range shape_range{0.1, 0.2};
  Range scale_range{0.4, 0.5};

  void validate() const;
};

struct CostModel {
  double c_intra = 0.0;
  double c_inter = 0.0;
  double f_end = 1.0;  ///< terminal cost coefficient
  double zeta = 0.0;   ///< scale sensitivity

  void validate() const;
};

/// Parameters of the congestion-sensitive realized ridership response.
struct CongestionParams {
  double fare = 2.42;          ///< EUR per trip
  double delta = 0.005;        ///< 1/EUR
  double vot = 0.293 / 60.0;   ///< EUR per minute
  double speed_kmh = 19.31;
  double peak_multiplier = 1.0;
  double wait_coefficient = 0.8;
  double tolerance = 1e-3;
  int max_iterations = 100;

  void validate() const;
};

enum class RegressionSample { AllPaths, InTheMoney };
enum class ExerciseValue { Fitted, Realized };

struct Scenario {
  std::string name = "scenario";
  std::vector<Region> regions;
  CalibrationParams calib;
  CostModel costs;
  SpilloverSpec spillover;
  int horizon = 5;  ///< T; decision epochs are t_0..t_T
  int k = 1;
  double rho = 0.01;
  int n_paths = 300;
  int n_basis = 3;
  std::uint64_t seed = 1;
  RegressionSample regression = RegressionSample::AllPaths;
  ExerciseValue exercise_value = ExerciseValue::Fitted;
  std::optional<CongestionParams> congestion;

  int n_regions() const { return static_cast<int>(regions.size()); }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Region ingestion

enum class RegionFormat { Csv, GeoBoundary };

/// Reads `id,name,area_km2,density_per_km2[,lat,lon]` or a GeoJSON
/// FeatureCollection (format deduced by the caller).
std::vector<Region> load_regions(const std::filesystem::path& path, RegionFormat format);
std::vector<Region> parse_regions_csv(const std::string& text);
std::vector<Region> parse_regions_geojson(const std::string& text);
void validate_regions(const std::vector<Region>& regions);

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationRanges {
  Range mu{0.005, 0.040};
  Range sigma{0.18, 0.55};
  Range lambda{0.20, 1.20};
  double intra_fraction = 0.3;
  double demand_scale = 1.0;
};

/// Min-max normalization to [0,1]; a constant vector maps to 0.5.
std::vector<double> min_max_normalize(const std::vector<double>& v);

CalibrationParams calibrate(const std::vector<Region>& regions, const CalibrationRanges& ranges);

/// Default costs: c_intra = 40% of the mean intra demand at t_0 and
/// c_inter = 15% of the mean inter-region OD demand at t_0.
CostModel default_costs(const Matrix& q0, double intra_share = 0.40, double inter_share = 0.15);

// ---------------------------------------------------------------------------
// Geography

constexpr double kEarthRadiusKm = 6371.0088;

double haversine_km(GeoPoint a, GeoPoint b);

/// Intra-zone proxy distance: half the radius of the equal-area circle.
double intra_zone_distance_km(double area_km2);

/// Minutes between region centroids at `speed_kmh`, scaled by
/// `peak_multiplier`. Diagonal uses the intra-zone proxy distance.
Matrix travel_time_matrix(const std::vector<Region>& regions, double speed_kmh,
                          double peak_multiplier);

}  // namespace ssrd
