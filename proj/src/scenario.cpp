#include "ssrd/scenario.hpp"

#include "ssrd/error.hpp"

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ssrd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& s, const std::string& what, int row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(fmt::format("row {}: column '{}' is not a number: '{}'", row, what, s));
  }
}

}  // namespace

std::vector<double> CalibrationParams::baseline_demand() const {
  std::vector<double> b(static_cast<std::size_t>(q0.rows()));
  for (Eigen::Index i = 0; i < q0.rows(); ++i) b[static_cast<std::size_t>(i)] = q0.row(i).sum();
  return b;
}

std::string to_string(SpilloverDistribution d) {
  switch (d) {
    case SpilloverDistribution::Gamma: return "gamma";
    case SpilloverDistribution::Lognormal: return "lognormal";
    case SpilloverDistribution::Normal: return "normal";
    case SpilloverDistribution::Laplace: return "laplace";
  }
  return "gamma";
}

SpilloverDistribution parse_distribution(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "gamma") return SpilloverDistribution::Gamma;
  if (l == "lognormal") return SpilloverDistribution::Lognormal;
  if (l == "normal") return SpilloverDistribution::Normal;
  if (l == "laplace") return SpilloverDistribution::Laplace;
  throw ParseError("unknown spillover distribution '" + s + "'");
}

void SpilloverSpec::validate() const {
  if (!(strength > 0.0)) throw DataError("spillover strength must be > 0");
  if (shape_range.lo > shape_range.hi || scale_range.lo > scale_range.hi)
    throw DataError("spillover parameter ranges must satisfy lo <= hi");
  if (!(shape_range.lo > 0.0) || !(scale_range.lo > 0.0))
    throw DataError("spillover shape/scale ranges must be positive");
  if (params && (!(params->shape > 0.0) || !(params->scale > 0.0)))
    throw DataError("spillover shape/scale must be positive");
}

void CostModel::validate() const {
  if (c_intra < 0.0 || c_inter < 0.0) throw DataError("costs must be non-negative");
  if (!(f_end > 0.0)) throw DataError("f_end must be > 0");
  if (zeta < 0.0) throw DataError("zeta must be >= 0");
}

void CongestionParams::validate() const {
  if (delta < 0.0) throw DataError("congestion delta must be >= 0");
  if (!(tolerance > 0.0)) throw DataError("congestion tolerance must be > 0");
  if (max_iterations < 1) throw DataError("congestion max_iterations must be >= 1");
  if (!(speed_kmh > 0.0)) throw DataError("congestion speed must be > 0");
}

void Scenario::validate() const {
  validate_regions(regions);
  const auto n = static_cast<std::size_t>(n_regions());
  if (calib.mu.size() != n || calib.sigma.size() != n || calib.lambda.size() != n)
    throw DataError("calibration vectors must have one entry per region");
  if (calib.q0.rows() != static_cast<Eigen::Index>(n) || calib.q0.cols() != static_cast<Eigen::Index>(n))
    throw DataError("q0 must be N x N");
  for (std::size_t i = 0; i < n; ++i) {
    if (calib.sigma[i] < 0.0) throw DataError(fmt::format("sigma[{}] < 0", i));
    if (calib.lambda[i] < 0.0) throw DataError(fmt::format("lambda[{}] < 0", i));
  }
  if ((calib.q0.array() < 0.0).any()) throw DataError("q0 entries must be >= 0");
  costs.validate();
  spillover.validate();
  if (congestion) congestion->validate();
  if (k < 1) throw DataError("k must be >= 1");
  if (horizon < 1) throw DataError("horizon must be >= 1");
  const int min_periods = (n_regions() + k - 1) / k;
  if (horizon < min_periods)
    throw InfeasibleError(fmt::format("horizon T={} < ceil(N/k)={}: no feasible sequence", horizon,
                                      min_periods));
  if (n_paths < 1) throw DataError("n_paths must be >= 1");
  if (n_basis < 1) throw DataError("n_basis must be >= 1");
  if (rho < 0.0) throw DataError("rho must be >= 0");
}

// ---------------------------------------------------------------------------

void validate_regions(const std::vector<Region>& regions) {
  if (regions.empty()) throw DataError("no regions");
  std::set<std::string> names;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Region& r = regions[i];
    if (r.id != static_cast<int>(i))
      throw DataError(fmt::format("region ids must be contiguous from 0 (row {})", i + 1));
    if (!(r.area_km2 > 0.0))
      throw DataError(fmt::format("region '{}' (row {}): area must be > 0", r.name, i + 1));
    if (!(r.density > 0.0))
      throw DataError(fmt::format("region '{}' (row {}): density must be > 0", r.name, i + 1));
    if (!names.insert(r.name).second)
      throw DataError(fmt::format("duplicate region name '{}' (row {})", r.name, i + 1));
  }
}

std::vector<Region> parse_regions_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw ParseError("no regions");

  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"id", "name", "area_km2", "density_per_km2"}) {
    if (!col.count(required)) throw ParseError(fmt::format("missing column '{}'", required));
  }
  const bool has_geo = col.count("lat") && col.count("lon");

  std::vector<Region> regions;
  std::set<std::string> ids;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto cells = split_csv_line(line);
    auto cell = [&](const std::string& name) -> const std::string& {
      const std::size_t c = col.at(name);
      if (c >= cells.size())
        throw ParseError(fmt::format("row {}: missing value for column '{}'", row, name));
      return cells[c];
    };
    Region r;
    r.id = static_cast<int>(regions.size());
    r.name = cell("name");
    if (!ids.insert(cell("id")).second)
      throw ParseError(fmt::format("row {}: duplicate id '{}'", row, cell("id")));
    r.area_km2 = parse_number(cell("area_km2"), "area_km2", row);
    r.density = parse_number(cell("density_per_km2"), "density_per_km2", row);
    if (!(r.area_km2 > 0.0)) throw ParseError(fmt::format("row {}: area must be > 0", row));
    if (!(r.density > 0.0)) throw ParseError(fmt::format("row {}: density must be > 0", row));
    if (has_geo && cells.size() > std::max(col.at("lat"), col.at("lon")) && !cell("lat").empty() &&
        !cell("lon").empty())
      r.centroid = GeoPoint{parse_number(cell("lat"), "lat", row), parse_number(cell("lon"), "lon", row)};
    for (const Region& prev : regions) {
      if (prev.name == r.name)
        throw ParseError(fmt::format("row {}: duplicate region name '{}'", row, r.name));
    }
    regions.push_back(std::move(r));
  }
  if (regions.empty()) throw ParseError("no regions");
  return regions;
}

namespace {

struct Ring {
  std::vector<std::pair<double, double>> lonlat;
};

// Signed shoelace area and first moments of a ring in a local
// equirectangular projection (km) about `origin`.
struct RingMoments {
  double area = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

RingMoments ring_moments(const Ring& ring, GeoPoint origin) {
  const double deg = std::numbers::pi / 180.0;
  const double kx = kEarthRadiusKm * deg * std::cos(origin.lat * deg);
  const double ky = kEarthRadiusKm * deg;
  RingMoments m;
  const auto& p = ring.lonlat;
  if (p.size() < 3) return m;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % p.size()];
    const double x0 = (a.first - origin.lon) * kx, y0 = (a.second - origin.lat) * ky;
    const double x1 = (b.first - origin.lon) * kx, y1 = (b.second - origin.lat) * ky;
    const double cross = x0 * y1 - x1 * y0;
    m.area += cross;
    m.cx += (x0 + x1) * cross;
    m.cy += (y0 + y1) * cross;
  }
  m.area *= 0.5;
  m.cx /= 6.0;
  m.cy /= 6.0;
  return m;
}

std::vector<std::vector<Ring>> read_polygons(const nlohmann::json& geom) {
  auto read_poly = [](const nlohmann::json& coords) {
    std::vector<Ring> rings;
    for (const auto& ring : coords) {
      Ring r;
      for (const auto& pt : ring) r.lonlat.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
      // GeoJSON rings repeat the first vertex; the shoelace sum is closed implicitly.
      if (r.lonlat.size() > 1 && r.lonlat.front() == r.lonlat.back()) r.lonlat.pop_back();
      rings.push_back(std::move(r));
    }
    return rings;
  };
  const std::string type = geom.at("type").get<std::string>();
  std::vector<std::vector<Ring>> polys;
  if (type == "Polygon") {
    polys.push_back(read_poly(geom.at("coordinates")));
  } else if (type == "MultiPolygon") {
    for (const auto& poly : geom.at("coordinates")) polys.push_back(read_poly(poly));
  } else {
    throw ParseError("unsupported geometry type '" + type + "'");
  }
  return polys;
}

}  // namespace

std::vector<Region> parse_regions_geojson(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid GeoJSON: ") + e.what());
  }
  if (!doc.contains("features") || !doc["features"].is_array() || doc["features"].empty())
    throw ParseError("no regions");

  std::vector<Region> regions;
  int row = 0;
  for (const auto& feat : doc["features"]) {
    ++row;
    const auto& props = feat.value("properties", nlohmann::json::object());
    Region r;
    r.id = static_cast<int>(regions.size());
    if (!props.contains("name")) throw ParseError(fmt::format("feature {}: missing property 'name'", row));
    r.name = props["name"].is_string() ? props["name"].get<std::string>() : props["name"].dump();
    const char* dkey = props.contains("density_per_km2") ? "density_per_km2" : "density";
    if (!props.contains(dkey)) throw ParseError(fmt::format("feature {}: missing property 'density_per_km2'", row));
    r.density = props[dkey].get<double>();

    const auto polys = read_polygons(feat.at("geometry"));
    // Projection origin at the mean vertex of the exterior rings.
    double slat = 0.0, slon = 0.0;
    std::size_t cnt = 0;
    for (const auto& poly : polys) {
      if (poly.empty()) continue;
      for (const auto& [lon, lat] : poly.front().lonlat) {
        slon += lon;
        slat += lat;
        ++cnt;
      }
    }
    if (cnt == 0) throw ParseError(fmt::format("feature {}: empty geometry", row));
    const GeoPoint origin{slat / static_cast<double>(cnt), slon / static_cast<double>(cnt)};

    double area = 0.0, mx = 0.0, my = 0.0;
    for (const auto& poly : polys) {
      for (std::size_t ri = 0; ri < poly.size(); ++ri) {
        RingMoments m = ring_moments(poly[ri], origin);
        // Exterior counts positive, holes negative, whatever the winding.
        const double sign = (ri == 0 ? 1.0 : -1.0) * (m.area < 0 ? -1.0 : 1.0);
        area += sign * m.area;
        mx += sign * m.cx;
        my += sign * m.cy;
      }
    }
    if (!(area > 0.0)) throw ParseError(fmt::format("feature {}: non-positive area", row));
    if (!(r.density > 0.0)) throw ParseError(fmt::format("feature {}: density must be > 0", row));
    r.area_km2 = area;
    const double deg = std::numbers::pi / 180.0;
    const double kx = kEarthRadiusKm * deg * std::cos(origin.lat * deg);
    const double ky = kEarthRadiusKm * deg;
    r.centroid = GeoPoint{origin.lat + (my / area) / ky, origin.lon + (mx / area) / kx};
    for (const Region& prev : regions) {
      if (prev.name == r.name) throw ParseError(fmt::format("feature {}: duplicate region name '{}'", row, r.name));
    }
    regions.push_back(std::move(r));
  }
  return regions;
}

std::vector<Region> load_regions(const std::filesystem::path& path, RegionFormat format) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open region file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return format == RegionFormat::Csv ? parse_regions_csv(ss.str()) : parse_regions_geojson(ss.str());
}

// ---------------------------------------------------------------------------

std::vector<double> min_max_normalize(const std::vector<double>& v) {
  std::vector<double> out(v.size(), 0.5);
  if (v.empty()) return out;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::clamp((v[i] - *lo) / span, 0.0, 1.0);
  return out;
}

CalibrationParams calibrate(const std::vector<Region>& regions, const CalibrationRanges& ranges) {
  if (regions.empty()) throw DataError("no regions");
  for (const Range* r : {&ranges.mu, &ranges.sigma, &ranges.lambda}) {
    if (r->lo > r->hi) throw DataError("calibration ranges must satisfy lo <= hi");
  }
  if (ranges.intra_fraction < 0.0 || ranges.intra_fraction > 1.0)
    throw DataError("intra_fraction must lie in [0,1]");
  if (!(ranges.demand_scale > 0.0)) throw DataError("demand_scale must be > 0");

  const std::size_t n = regions.size();
  std::vector<double> area(n), density(n);
  for (std::size_t i = 0; i < n; ++i) {
    area[i] = regions[i].area_km2;
    density[i] = regions[i].density;
  }
  const auto a_hat = min_max_normalize(area);
  const auto d_hat = min_max_normalize(density);

  std::vector<double> interaction(n);
  for (std::size_t i = 0; i < n; ++i) interaction[i] = d_hat[i] * a_hat[i];
  const auto x = min_max_normalize(interaction);

  CalibrationParams p;
  p.mu.resize(n);
  p.sigma.resize(n);
  p.lambda.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Dense but small regions grow fastest and fluctuate most.
    const double growth_index = std::clamp(d_hat[i] * (1.0 - a_hat[i]), 0.0, 1.0);
    p.mu[i] = ranges.mu.lerp(growth_index);
    p.sigma[i] = ranges.sigma.lerp(growth_index);
    p.lambda[i] = ranges.lambda.lerp(x[i]);
  }

  p.q0 = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double b = ranges.demand_scale * regions[i].area_km2 * regions[i].density;
    const auto ii = static_cast<Eigen::Index>(i);
    if (n == 1) {
      p.q0(ii, ii) = b;
      continue;
    }
    const double inter = (1.0 - ranges.intra_fraction) * b / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) p.q0(ii, static_cast<Eigen::Index>(j)) = inter;
    // Diagonal last so the row sums to b up to rounding of the spread.
    p.q0(ii, ii) = b - inter * static_cast<double>(n - 1);
  }
  return p;
}

CostModel default_costs(const Matrix& q0, double intra_share, double inter_share) {
  const auto n = q0.rows();
  CostModel c;
  c.c_intra = intra_share * q0.diagonal().mean();
  if (n > 1) {
    const double off = q0.sum() - q0.diagonal().sum();
    c.c_inter = inter_share * off / static_cast<double>(n * (n - 1));
  }
  return c;
}

// ---------------------------------------------------------------------------

double haversine_km(GeoPoint a, GeoPoint b) {
  const double deg = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * deg;
  const double dlon = (b.lon - a.lon) * deg;
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * deg) * std::cos(b.lat * deg) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(s)));
}

double intra_zone_distance_km(double area_km2) {
  return 0.5 * std::sqrt(area_km2 / std::numbers::pi);
}

Matrix travel_time_matrix(const std::vector<Region>& regions, double speed_kmh, double peak_multiplier) {
  if (!(speed_kmh > 0.0)) throw DataError("speed must be > 0");
  const auto n = static_cast<Eigen::Index>(regions.size());
  for (const Region& r : regions) {
    if (!r.centroid) throw DataError("region '" + r.name + "' has no centroid");
  }
  Matrix tt(n, n);
  const double minutes_per_km = 60.0 / speed_kmh * peak_multiplier;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Region& ri = regions[static_cast<std::size_t>(i)];
    tt(i, i) = intra_zone_distance_km(ri.area_km2) * minutes_per_km;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = haversine_km(*ri.centroid, *regions[static_cast<std::size_t>(j)].centroid);
      tt(i, j) = tt(j, i) = d * minutes_per_km;
    }
  }
  return tt;
}

}  // namespace ssrd
