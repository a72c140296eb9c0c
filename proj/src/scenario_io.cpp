#include "ssrd/scenario_io.hpp"

#include "ssrd/error.hpp"

#include <fmt/core.h>
#include <fmt/format.h>

#include <fstream>
#include <map>
#include <sstream>

namespace ssrd {

namespace {

constexpr const char* kFormatTag = "ssrd-scenario/1";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(const std::string& s, int line) {
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError(fmt::format("line {}: expected a number, got '{}'", line, tok));
    }
  }
  return out;
}

double parse_scalar(const std::string& s, int line) {
  const auto v = parse_numbers(s, line);
  if (v.size() != 1) throw ParseError(fmt::format("line {}: expected one number", line));
  return v[0];
}

Range parse_range(const std::string& s, int line) {
  const auto v = parse_numbers(s, line);
  if (v.size() != 2) throw ParseError(fmt::format("line {}: expected 'lo hi'", line));
  return {v[0], v[1]};
}

bool parse_bool(const std::string& s, int line) {
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw ParseError(fmt::format("line {}: expected a boolean, got '{}'", line, s));
}

std::string join(const std::vector<double>& v) {
  return fmt::format("{}", fmt::join(v, " "));
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  Scenario s;
  CalibrationRanges ranges;
  std::vector<Region> inline_regions;
  std::optional<std::filesystem::path> regions_file;
  std::optional<int> regions_count;
  std::optional<std::vector<double>> mu, sigma, lambda;
  std::optional<Matrix> q0;
  std::optional<double> c_intra, c_inter;
  double intra_share = 0.40, inter_share = 0.15;
  bool saw_format = false;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(fmt::format("line {}: expected 'key = value'", line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "format") {
      if (val != kFormatTag) throw ParseError(fmt::format("line {}: unsupported format '{}'", line_no, val));
      saw_format = true;
    } else if (key == "name") {
      s.name = val;
    } else if (key == "horizon") {
      s.horizon = static_cast<int>(parse_scalar(val, line_no));
    } else if (key == "k") {
      s.k = static_cast<int>(parse_scalar(val, line_no));
    } else if (key == "rho") {
      s.rho = parse_scalar(val, line_no);
    } else if (key == "n_paths") {
      s.n_paths = static_cast<int>(parse_scalar(val, line_no));
    } else if (key == "n_basis") {
      s.n_basis = static_cast<int>(parse_scalar(val, line_no));
    } else if (key == "seed") {
      try {
        s.seed = std::stoull(val);
      } catch (const std::exception&) {
        throw ParseError(fmt::format("line {}: invalid seed '{}'", line_no, val));
      }
    } else if (key == "regression") {
      if (val == "all") s.regression = RegressionSample::AllPaths;
      else if (val == "itm") s.regression = RegressionSample::InTheMoney;
      else throw ParseError(fmt::format("line {}: regression must be 'all' or 'itm'", line_no));
    } else if (key == "exercise_value") {
      if (val == "fitted") s.exercise_value = ExerciseValue::Fitted;
      else if (val == "realized") s.exercise_value = ExerciseValue::Realized;
      else throw ParseError(fmt::format("line {}: exercise_value must be 'fitted' or 'realized'", line_no));
    } else if (key == "regions.file") {
      regions_file = base_dir / val;
    } else if (key == "regions.count") {
      regions_count = static_cast<int>(parse_scalar(val, line_no));
    } else if (key == "region") {
      // Same columns as the CSV schema.
      auto parsed = parse_regions_csv("id,name,area_km2,density_per_km2,lat,lon\n" + val + "\n");
      Region r = parsed.front();
      r.id = static_cast<int>(inline_regions.size());
      inline_regions.push_back(std::move(r));
    } else if (key == "calibration.mu_range") {
      ranges.mu = parse_range(val, line_no);
    } else if (key == "calibration.sigma_range") {
      ranges.sigma = parse_range(val, line_no);
    } else if (key == "calibration.lambda_range") {
      ranges.lambda = parse_range(val, line_no);
    } else if (key == "calibration.intra_fraction") {
      ranges.intra_fraction = parse_scalar(val, line_no);
    } else if (key == "calibration.demand_scale") {
      ranges.demand_scale = parse_scalar(val, line_no);
    } else if (key == "mu") {
      mu = parse_numbers(val, line_no);
    } else if (key == "sigma") {
      sigma = parse_numbers(val, line_no);
    } else if (key == "lambda") {
      lambda = parse_numbers(val, line_no);
    } else if (key == "q0") {
      std::istringstream hdr(val);
      std::string word;
      long rows = 0, cols = 0;
      if (!(hdr >> word >> rows >> cols) || word != "matrix" || rows < 1 || cols < 1)
        throw ParseError(fmt::format("line {}: expected 'q0 = matrix <rows> <cols>'", line_no));
      Matrix m(rows, cols);
      for (long r = 0; r < rows; ++r) {
        if (!std::getline(in, raw)) throw ParseError("unexpected end of file inside q0 matrix");
        ++line_no;
        const auto v = parse_numbers(trim(raw), line_no);
        if (static_cast<long>(v.size()) != cols)
          throw ParseError(fmt::format("line {}: q0 row has {} entries, expected {}", line_no, v.size(), cols));
        for (long c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(c)];
      }
      q0 = std::move(m);
    } else if (key == "costs.c_intra") {
      if (val != "auto") c_intra = parse_scalar(val, line_no);
    } else if (key == "costs.c_inter") {
      if (val != "auto") c_inter = parse_scalar(val, line_no);
    } else if (key == "costs.intra_share") {
      intra_share = parse_scalar(val, line_no);
    } else if (key == "costs.inter_share") {
      inter_share = parse_scalar(val, line_no);
    } else if (key == "costs.f_end") {
      s.costs.f_end = parse_scalar(val, line_no);
    } else if (key == "costs.zeta") {
      s.costs.zeta = parse_scalar(val, line_no);
    } else if (key == "spillover.distribution") {
      s.spillover.distribution = parse_distribution(val);
    } else if (key == "spillover.strength") {
      s.spillover.strength = parse_scalar(val, line_no);
    } else if (key == "spillover.stationary") {
      s.spillover.stationary = parse_bool(val, line_no);
    } else if (key == "spillover.shape") {
      if (!s.spillover.params) s.spillover.params = SpilloverParams{};
      s.spillover.params->shape = parse_scalar(val, line_no);
    } else if (key == "spillover.scale") {
      if (!s.spillover.params) s.spillover.params = SpilloverParams{};
      s.spillover.params->scale = parse_scalar(val, line_no);
    } else if (key == "spillover.shape_range") {
      s.spillover.shape_range = parse_range(val, line_no);
    } else if (key == "spillover.scale_range") {
      s.spillover.scale_range = parse_range(val, line_no);
    } else if (key == "congestion") {
      if (parse_bool(val, line_no)) {
        if (!s.congestion) s.congestion = CongestionParams{};
      } else {
        s.congestion.reset();
      }
    } else if (key.rfind("congestion.", 0) == 0) {
      if (!s.congestion) s.congestion = CongestionParams{};
      const std::string sub = key.substr(11);
      auto& c = *s.congestion;
      if (sub == "fare") c.fare = parse_scalar(val, line_no);
      else if (sub == "delta") c.delta = parse_scalar(val, line_no);
      else if (sub == "vot") c.vot = parse_scalar(val, line_no);
      else if (sub == "speed_kmh") c.speed_kmh = parse_scalar(val, line_no);
      else if (sub == "peak_multiplier") c.peak_multiplier = parse_scalar(val, line_no);
      else if (sub == "wait_coefficient") c.wait_coefficient = parse_scalar(val, line_no);
      else if (sub == "tolerance") c.tolerance = parse_scalar(val, line_no);
      else if (sub == "max_iterations") c.max_iterations = static_cast<int>(parse_scalar(val, line_no));
      else throw ParseError(fmt::format("line {}: unknown key '{}'", line_no, key));
    } else {
      throw ParseError(fmt::format("line {}: unknown key '{}'", line_no, key));
    }
  }
  if (!saw_format) throw ParseError(std::string("missing 'format = ") + kFormatTag + "' line");

  if (regions_file) {
    if (!inline_regions.empty()) throw ParseError("use either regions.file or inline region lines, not both");
    const auto fmt_kind = regions_file->extension() == ".geojson" || regions_file->extension() == ".json"
                              ? RegionFormat::GeoBoundary
                              : RegionFormat::Csv;
    s.regions = load_regions(*regions_file, fmt_kind);
  } else {
    s.regions = std::move(inline_regions);
  }
  if (regions_count) {
    if (*regions_count < 1 || *regions_count > static_cast<int>(s.regions.size()))
      throw DataError(fmt::format("regions.count={} out of range (file has {})", *regions_count, s.regions.size()));
    s.regions.resize(static_cast<std::size_t>(*regions_count));
  }
  validate_regions(s.regions);

  const bool explicit_calib = mu || sigma || lambda || q0;
  if (explicit_calib) {
    if (!(mu && sigma && lambda && q0))
      throw ParseError("explicit calibration needs all of mu, sigma, lambda and q0");
    s.calib.mu = *mu;
    s.calib.sigma = *sigma;
    s.calib.lambda = *lambda;
    s.calib.q0 = *q0;
  } else {
    s.calib = calibrate(s.regions, ranges);
  }

  const CostModel defaults = default_costs(s.calib.q0, intra_share, inter_share);
  s.costs.c_intra = c_intra.value_or(defaults.c_intra);
  s.costs.c_inter = c_inter.value_or(defaults.c_inter);

  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path());
}

std::string write_scenario(const Scenario& s) {
  std::string out;
  auto kv = [&out](std::string_view key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  kv("format", kFormatTag);
  kv("name", s.name);
  kv("horizon", fmt::format("{}", s.horizon));
  kv("k", fmt::format("{}", s.k));
  kv("rho", fmt::format("{}", s.rho));
  kv("n_paths", fmt::format("{}", s.n_paths));
  kv("n_basis", fmt::format("{}", s.n_basis));
  kv("seed", fmt::format("{}", s.seed));
  kv("regression", s.regression == RegressionSample::AllPaths ? "all" : "itm");
  kv("exercise_value", s.exercise_value == ExerciseValue::Fitted ? "fitted" : "realized");
  for (const Region& r : s.regions) {
    std::string name = r.name;
    if (name.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : name) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
      name = q + "\"";
    }
    if (r.centroid)
      kv("region", fmt::format("{},{},{},{},{},{}", r.id, name, r.area_km2, r.density, r.centroid->lat, r.centroid->lon));
    else
      kv("region", fmt::format("{},{},{},{}", r.id, name, r.area_km2, r.density));
  }
  kv("mu", join(s.calib.mu));
  kv("sigma", join(s.calib.sigma));
  kv("lambda", join(s.calib.lambda));
  kv("q0", fmt::format("matrix {} {}", s.calib.q0.rows(), s.calib.q0.cols()));
  for (Eigen::Index r = 0; r < s.calib.q0.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(s.calib.q0.cols()));
    for (Eigen::Index c = 0; c < s.calib.q0.cols(); ++c) row[static_cast<std::size_t>(c)] = s.calib.q0(r, c);
    out += "  " + join(row) + "\n";
  }
  kv("costs.c_intra", fmt::format("{}", s.costs.c_intra));
  kv("costs.c_inter", fmt::format("{}", s.costs.c_inter));
  kv("costs.f_end", fmt::format("{}", s.costs.f_end));
  kv("costs.zeta", fmt::format("{}", s.costs.zeta));
  kv("spillover.distribution", to_string(s.spillover.distribution));
  kv("spillover.strength", fmt::format("{}", s.spillover.strength));
  kv("spillover.stationary", s.spillover.stationary ? "true" : "false");
  if (s.spillover.params) {
    kv("spillover.shape", fmt::format("{}", s.spillover.params->shape));
    kv("spillover.scale", fmt::format("{}", s.spillover.params->scale));
  }
  kv("spillover.shape_range", fmt::format("{} {}", s.spillover.shape_range.lo, s.spillover.shape_range.hi));
  kv("spillover.scale_range", fmt::format("{} {}", s.spillover.scale_range.lo, s.spillover.scale_range.hi));
  if (s.congestion) {
    const auto& c = *s.congestion;
    kv("congestion", "on");
    kv("congestion.fare", fmt::format("{}", c.fare));
    kv("congestion.delta", fmt::format("{}", c.delta));
    kv("congestion.vot", fmt::format("{}", c.vot));
    kv("congestion.speed_kmh", fmt::format("{}", c.speed_kmh));
    kv("congestion.peak_multiplier", fmt::format("{}", c.peak_multiplier));
    kv("congestion.wait_coefficient", fmt::format("{}", c.wait_coefficient));
    kv("congestion.tolerance", fmt::format("{}", c.tolerance));
    kv("congestion.max_iterations", fmt::format("{}", c.max_iterations));
  }
  return out;
}

}  // namespace ssrd
