// ssrd command-line front end. Primary results go to stdout or --out files;
// timings and progress go to stderr so that seeded runs are byte-stable.

#include "ssrd/bridge.hpp"
#include "ssrd/error.hpp"
#include "ssrd/experiments.hpp"
#include "ssrd/metrics.hpp"
#include "ssrd/policies.hpp"
#include "ssrd/scenario_io.hpp"
#include "ssrd/sequences.hpp"
#include "ssrd/valuation.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#ifndef SSRD_DATA_DIR
#define SSRD_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace ssrd;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kInfeasible = 4 };

struct Common {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out;
  std::string data_dir = SSRD_DATA_DIR;
};

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Writes to --out when given, otherwise stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw DataError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << text;
}

Scenario require_scenario(const Common& c) {
  if (c.scenario.empty()) throw CLI::RequiredError("--scenario");
  Scenario s = load_scenario(c.scenario);
  if (c.seed) s.seed = *c.seed;
  return s;
}

/// Splits on commas outside brackets, so sequence literals survive intact.
std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  int depth = 0;
  auto flush = [&] {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    item.clear();
  };
  for (char ch : s) {
    if (ch == '[') ++depth;
    if (ch == ']') --depth;
    if (ch == ',' && depth == 0) flush();
    else item += ch;
  }
  flush();
  return out;
}

/// RFC 4180 quoting when the field needs it.
std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string q = "\"";
  for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

std::string fmt_opt(bool has, double v) { return has ? fmt::format("{}", v) : std::string(); }

/// A policy name plus the sequences it expands to (file policies expand to
/// one entry per line).
struct NamedSequence {
  std::string label;
  InvestmentSequence seq;
};

std::vector<NamedSequence> load_sequence_file(const std::string& path, const Scenario& s) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sequence file '" + path + "'");
  std::vector<NamedSequence> out;
  std::string line;
  int i = 0;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    InvestmentSequence seq = parse_sequence(line.substr(line.find_first_not_of(" \t")));
    if (!is_feasible(seq, s.n_regions(), s.k, s.horizon))
      throw InfeasibleError(fmt::format("{} line {}: sequence infeasible for k={}", path, i + 1, s.k));
    out.push_back({fmt::format("file:{}#{}", fs::path(path).stem().string(), i), std::move(seq)});
    ++i;
  }
  return out;
}

std::vector<NamedSequence> resolve_policies(const std::vector<std::string>& names, const std::string& seq_file,
                                            const Scenario& s, std::uint64_t seed, int threads) {
  std::vector<NamedSequence> out;
  int literals = 0;
  for (const auto& n : names) {
    // Literals get a short label; the sequence column carries the literal itself.
    const std::string label = n.starts_with('[') ? fmt::format("literal#{}", literals++) : n;
    out.push_back({label, resolve_policy(n, s, seed, threads)});
  }
  if (!seq_file.empty())
    for (auto& ns : load_sequence_file(seq_file, s)) out.push_back(std::move(ns));
  return out;
}

// ---------------------------------------------------------------------------

struct GridArgs {
  int n = 0, k = 0, horizon = 0;
};

void fill_grid(GridArgs& g, const Common& c) {
  if (!c.scenario.empty()) {
    const Scenario s = load_scenario(c.scenario);
    if (g.n == 0) g.n = s.n_regions();
    if (g.k == 0) g.k = s.k;
    if (g.horizon == 0) g.horizon = s.horizon;
  }
  if (g.n < 1 || g.k < 1 || g.horizon < 1) throw CLI::ValidationError("need -N, -k and -T (or --scenario)");
}

int cmd_count(GridArgs g, const Common& c) {
  fill_grid(g, c);
  const auto n = count_feasible(g.n, g.k, g.horizon);
  if (n == 0) std::cerr << fmt::format("warning: no feasible sequence for N={} k={} T={}\n", g.n, g.k, g.horizon);
  Output out(c.out);
  out.stream() << n << "\n";
  return kOk;
}

int cmd_enumerate(GridArgs g, const Common& c, bool evaluate, const std::string& csv) {
  fill_grid(g, c);
  Output out(c.out);
  Timer timer;
  if (!evaluate) {
    std::uint64_t count = 0;
    for_each_feasible(g.n, g.k, g.horizon, [&](const InvestmentSequence& s) {
      out.stream() << format_sequence(s) << "\n";
      ++count;
      return true;
    });
    if (count == 0) std::cerr << fmt::format("warning: no feasible sequence for N={} k={} T={}\n", g.n, g.k, g.horizon);
    std::cerr << fmt::format("{} sequences in {:.3f} s\n", count, timer.seconds());
    return kOk;
  }
  Scenario s = require_scenario(c);
  if (s.n_regions() != g.n || s.k != g.k || s.horizon != g.horizon) {
    s.k = g.k;
    s.horizon = g.horizon;
    if (s.n_regions() != g.n) throw CLI::ValidationError("-N must match the scenario when evaluating");
    s.validate();
  }
  std::optional<std::ofstream> dist;
  if (!csv.empty()) {
    dist.emplace(csv);
    if (!*dist) throw DataError("cannot write '" + csv + "'");
    *dist << "index,sequence,option_value,std_error\n";
  }
  const EnumerationSummary sum =
      evaluate_all(s, s.seed, c.threads, [&](std::uint64_t i, const InvestmentSequence& q, const RoaResult& r) {
        if (dist) *dist << fmt::format("{},\"{}\",{},{}\n", i, format_sequence(q), r.option_value, r.std_error);
      });
  std::cerr << fmt::format("evaluated {} sequences in {:.3f} s\n", sum.count, timer.seconds());
  auto& o = out.stream();
  o << "seed," << s.seed << "\n";
  o << "sequences," << sum.count << "\n";
  o << "best_sequence,\"" << format_sequence(sum.best) << "\"\n";
  o << fmt::format("best_option_value,{}\n", sum.best_value);
  o << fmt::format("best_std_error,{}\n", sum.best_std_error);
  return kOk;
}

int cmd_evaluate(const Common& c, const std::string& sequence, const std::string& diagnostics,
                 const std::string& dump_paths, const std::string& stopping) {
  const Scenario s = require_scenario(c);
  const InvestmentSequence seq = resolve_policy(sequence, s, s.seed, c.threads);
  Timer timer;
  const auto paths = simulate_paths(s, earliest_schedule(seq, s.n_regions()), s.n_paths, s.seed, c.threads);
  const RoaResult r = roa_evaluate_paths(s, seq, paths);
  const ScheduleValue early = earliest_schedule_value(s, seq, paths);
  std::cerr << fmt::format("valuation in {:.4f} s\n", timer.seconds());

  Output out(c.out);
  auto& o = out.stream();
  o << "seed," << s.seed << "\n";
  o << "sequence,\"" << format_sequence(seq) << "\"\n";
  o << fmt::format("option_value,{}\n", r.option_value);
  o << fmt::format("std_error,{}\n", r.std_error);
  o << fmt::format("earliest_schedule_value,{}\n", early.mean);
  o << fmt::format("earliest_schedule_std_error,{}\n", early.std_error);
  for (std::size_t h = 0; h < r.mean_stopping_times.size(); ++h)
    o << fmt::format("mean_stopping_time_{},{}\n", h, r.mean_stopping_times[h]);
  o << "degenerate_fits," << r.diagnostics.degenerate_fits << "\n";
  o << "reduced_fits," << r.diagnostics.reduced_fits << "\n";
  o << "floored_entries," << r.diagnostics.floored_entries << "\n";

  if (!diagnostics.empty()) write_file(diagnostics, format_surface_csv(r));
  if (!dump_paths.empty()) {
    std::ostringstream os;
    write_paths_csv(paths, os);
    write_file(dump_paths, os.str());
  }
  if (!stopping.empty()) {
    std::string csv = "path";
    for (int h = 0; h < seq.length(); ++h) csv += fmt::format(",tau_{}", h);
    csv += "\n";
    for (std::size_t p = 0; p < r.stopping_times.size(); ++p) {
      csv += fmt::format("{}", p);
      for (int t : r.stopping_times[p]) csv += fmt::format(",{}", t);
      csv += "\n";
    }
    write_file(stopping, csv);
  }
  return kOk;
}

int cmd_myopia(const Common& c, const std::string& mode, bool evaluate) {
  const Scenario s = require_scenario(c);
  std::vector<std::pair<std::string, MyopiaMode>> modes;
  if (mode == "high" || mode == "both") modes.emplace_back("myopia-h", MyopiaMode::High);
  if (mode == "low" || mode == "both") modes.emplace_back("myopia-l", MyopiaMode::Low);
  Output out(c.out);
  auto& o = out.stream();
  o << (evaluate ? "policy,sequence,seed,option_value,std_error\n" : "policy,sequence\n");
  for (const auto& [name, m] : modes) {
    const InvestmentSequence seq = myopia_sequence(s, m);
    if (!evaluate) {
      o << fmt::format("{},\"{}\"\n", name, format_sequence(seq));
      continue;
    }
    const RoaResult r = roa_evaluate(s, seq, s.seed, c.threads);
    o << fmt::format("{},\"{}\",{},{},{}\n", name, format_sequence(seq), s.seed, r.option_value, r.std_error);
  }
  return kOk;
}

int cmd_sweep(const Common& c, const std::string& axis_s, const std::string& grid_s, const std::string& policies_s,
              const std::string& seq_file, int replicates, const std::string& matrices_dir) {
  const Scenario base = require_scenario(c);
  const SweepAxis axis = parse_axis(axis_s);
  const auto grid = split_list(grid_s);
  if (grid.empty()) throw DataError("empty sweep grid");
  const auto policy_names = split_list(policies_s);
  if (policy_names.empty() && seq_file.empty()) throw DataError("no policies given");

  Output out(c.out);
  auto& o = out.stream();
  o << "axis,point,policy,sequence,seed,replicates,mean,std_error\n";
  Timer timer;
  for (const auto& point : grid) {
    const Scenario s = apply_grid_point(base, axis, point);
    for (const auto& [label, seq] : resolve_policies(policy_names, seq_file, s, s.seed, c.threads)) {
      const ReplicateSummary rs = run_replicates(s, seq, s.seed, replicates, c.threads);
      o << fmt::format("{},{},{},\"{}\",{},{},{},{}\n", to_string(axis), csv_field(point), csv_field(label), format_sequence(seq), s.seed,
                       replicates, rs.mean, rs.std_error);
      if (!matrices_dir.empty()) {
        std::string tag = fmt::format("{}_{}_{}", to_string(axis), point, label);
        for (char& ch : tag)
          if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '-' && ch != '_') ch = '_';
        write_file(fs::path(matrices_dir) / ("investment_time_" + tag + ".csv"),
                   matrix_csv(rs.invest_time, "region", "t"));
        write_file(fs::path(matrices_dir) / ("co_investment_" + tag + ".csv"),
                   matrix_csv(rs.co_invest, "region", "r"));
      }
    }
  }
  std::cerr << fmt::format("sweep finished in {:.2f} s\n", timer.seconds());
  return kOk;
}

void write_metric_rows(std::ostream& o, const std::vector<CaseStudyRow>& rows) {
  o << "policy,k,replicate,seed,sequence,option_value,expected_npv,expected_npv_se,profitability,profitability_se,"
       "zero_demand_terms,unconverged,max_wait_iterations\n";
  for (const auto& r : rows)
    o << fmt::format("{},{},{},{},\"{}\",{},{},{},{},{},{},{},{}\n", csv_field(r.policy), r.k, r.replicate, r.seed, r.sequence,
                     fmt_opt(r.has_option_value, r.option_value), r.npv.value, r.npv.std_error, r.profit.value,
                     r.profit.std_error, r.profit.zero_demand_terms, r.npv.unconverged + r.profit.unconverged,
                     std::max(r.npv.max_iterations_used, r.profit.max_iterations_used));
}

std::vector<CaseStudyRow> metric_rows(const Scenario& s, const std::vector<std::string>& policies,
                                      const std::string& seq_file, int replicates, bool all_in, int threads) {
  std::vector<CaseStudyRow> rows;
  const auto seqs = resolve_policies(policies, seq_file, s, s.seed, threads);
  for (int r = 0; r < replicates; ++r) {
    const std::uint64_t seed = derive_seed(s.seed, static_cast<std::uint64_t>(r));
    for (const auto& [label, seq] : seqs) {
      CaseStudyRow row = staged_metrics(s, label, seq, seed, threads);
      row.replicate = r;
      rows.push_back(std::move(row));
    }
    if (all_in) {
      CaseStudyRow row = all_in_metrics(s, seed, threads);
      row.replicate = r;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

int cmd_metrics(const Common& c, const std::string& policies, const std::string& seq_file, int replicates,
                bool all_in) {
  const Scenario s = require_scenario(c);
  Output out(c.out);
  write_metric_rows(out.stream(), metric_rows(s, split_list(policies), seq_file, replicates, all_in, c.threads));
  return kOk;
}

int cmd_casestudy(const Common& c, const std::string& city, const std::string& ks, int replicates,
                  const std::string& out_dir, int regions, bool enumerate) {
  const fs::path file = fs::path(c.data_dir) / "scenarios" / (city + ".scn");
  if (!fs::exists(file))
    throw DataError(fmt::format("dataset '{}' not found at {}; the bundled data/ directory ships shanghai, beijing, "
                                "nyc7 and nyc8 scenario files (pass --data-dir if it lives elsewhere)",
                                city, file.string()));
  std::string text;
  {
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  // A later key overrides an earlier one; calibration then sees the subset only.
  if (regions > 0) text += fmt::format("\nregions.count = {}\n", regions);
  Scenario base = parse_scenario(text, file.parent_path());
  if (c.seed) base.seed = *c.seed;

  std::vector<int> k_values;
  for (const auto& kv : split_list(ks)) k_values.push_back(std::stoi(kv));
  if (k_values.empty()) k_values.push_back(base.k);

  std::vector<CaseStudyRow> rows;
  std::string enum_report = "k,sequences,best_sequence,best_option_value,best_std_error\n";
  Timer timer;
  for (int k : k_values) {
    Scenario s = base;
    s.k = k;
    s.validate();
    auto part = metric_rows(s, {"myopia-h", "myopia-l", "greedy"}, "", replicates, true, c.threads);
    rows.insert(rows.end(), part.begin(), part.end());
    if (enumerate) {
      const EnumerationSummary sum = evaluate_all(s, s.seed, c.threads);
      enum_report += fmt::format("{},{},\"{}\",{},{}\n", k, sum.count, format_sequence(sum.best), sum.best_value,
                                 sum.best_std_error);
    }
  }
  std::cerr << fmt::format("case study finished in {:.2f} s\n", timer.seconds());

  // Per-policy means and the staged-vs-all-in profitability comparison.
  std::ostringstream summary;
  summary << "policy,k,replicates,expected_npv_mean,profitability_mean,option_value_mean,staged_beats_all_in\n";
  std::map<std::pair<int, std::string>, std::vector<const CaseStudyRow*>> by;
  std::map<std::pair<int, int>, double> all_in_profit;
  for (const auto& r : rows) {
    by[{r.k, r.policy}].push_back(&r);
    if (r.policy == "all-in") all_in_profit[{r.k, r.replicate}] = r.profit.value;
  }
  for (const auto& [key, list] : by) {
    double npv = 0, prof = 0, ov = 0;
    int wins = 0;
    bool has_ov = true;
    for (const auto* r : list) {
      npv += r->npv.value;
      prof += r->profit.value;
      ov += r->option_value;
      has_ov = has_ov && r->has_option_value;
      if (r->profit.value >= all_in_profit[{r->k, r->replicate}]) ++wins;
    }
    const double n = static_cast<double>(list.size());
    summary << fmt::format("{},{},{},{},{},{},{}\n", csv_field(key.second), key.first, list.size(), npv / n, prof / n,
                           fmt_opt(has_ov, ov / n), key.second == "all-in" ? std::string() : std::to_string(wins));
  }

  std::ostringstream detail;
  write_metric_rows(detail, rows);
  if (out_dir.empty()) {
    std::cout << summary.str();
    if (enumerate) std::cout << enum_report;
  } else {
    write_file(fs::path(out_dir) / (city + "_summary.csv"), summary.str());
    write_file(fs::path(out_dir) / (city + "_replicates.csv"), detail.str());
    if (enumerate) write_file(fs::path(out_dir) / (city + "_enumeration.csv"), enum_report);
    std::cout << summary.str();
  }
  return kOk;
}

int cmd_serve(const std::string& scenarios_dir, bool use_stdio, const std::string& listen) {
  const ScenarioRegistry reg = ScenarioRegistry::from_directory(scenarios_dir);
  if (reg.empty()) throw DataError("no *.scn scenarios in " + scenarios_dir);
  if (use_stdio == !listen.empty()) throw CLI::ValidationError("choose exactly one of --stdio or --listen");
  if (use_stdio) {
    serve_stream(std::cin, std::cout, reg);
    return kOk;
  }
  const auto [host, port] = parse_listen_address(listen);
  TcpServer server(reg, host, port);
  std::cerr << fmt::format("ssrd bridge {} listening on {}:{}\n", kProtocolVersion, host, server.port());
  server.run();
  return kOk;
}

int cmd_export(const Common& c, const std::string& what, const std::string& sequence) {
  const Scenario s = require_scenario(c);
  Output out(c.out);
  auto& o = out.stream();
  if (what == "scenario") {
    o << write_scenario(s);
  } else if (what == "calibration") {
    const auto b = s.calib.baseline_demand();
    o << "id,name,area_km2,density_per_km2,baseline_demand,mu,sigma,lambda\n";
    for (int i = 0; i < s.n_regions(); ++i) {
      const auto u = static_cast<std::size_t>(i);
      const Region& r = s.regions[u];
      o << fmt::format("{},{},{},{},{},{},{},{}\n", r.id, r.name, r.area_km2, r.density, b[u], s.calib.mu[u],
                       s.calib.sigma[u], s.calib.lambda[u]);
    }
  } else if (what == "q0") {
    o << matrix_csv(s.calib.q0, "origin", "d");
  } else if (what == "travel-times") {
    const CongestionParams p = s.congestion.value_or(CongestionParams{});
    o << matrix_csv(travel_time_matrix(s.regions, p.speed_kmh, p.peak_multiplier), "origin", "d");
  } else if (what == "costs") {
    o << "t,covered_before,f_time,c_intra,c_inter\n";
    for (int cov = 0; cov < s.n_regions(); ++cov)
      for (const auto& cp : cost_trajectory(s.costs, s.horizon, cov))
        o << fmt::format("{},{},{},{},{}\n", cp.t, cov, cp.f_time, cp.c_intra, cp.c_inter);
  } else if (what == "paths") {
    const InvestmentSequence seq = resolve_policy(sequence, s, s.seed, c.threads);
    write_paths_csv(simulate_paths(s, earliest_schedule(seq, s.n_regions()), s.n_paths, s.seed, c.threads), o);
  } else {
    throw CLI::ValidationError("--what must be scenario, calibration, q0, travel-times, costs or paths");
  }
  return kOk;
}

void add_common(CLI::App* sub, Common& c, bool scenario_required) {
  auto* opt = sub->add_option("--scenario,-s", c.scenario, "scenario file (ssrd-scenario/1)");
  if (scenario_required) opt->required();
  sub->add_option("--seed", c.seed, "override the scenario seed");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out,-o", c.out, "write the primary output here instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential service region design engine"};
  app.set_config("--config", "", "read options from a TOML/INI file");
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--data-dir", common.data_dir, "bundled data directory");

  GridArgs grid;
  auto* count = app.add_subcommand("count", "number of feasible sequences");
  count->add_option("-N", grid.n, "regions");
  count->add_option("-k", grid.k, "max regions per portfolio");
  count->add_option("-T", grid.horizon, "horizon");
  add_common(count, common, false);

  bool evaluate = false;
  std::string csv;
  auto* enumerate = app.add_subcommand("enumerate", "list or value every feasible sequence");
  enumerate->add_option("-N", grid.n, "regions");
  enumerate->add_option("-k", grid.k, "max regions per portfolio");
  enumerate->add_option("-T", grid.horizon, "horizon");
  enumerate->add_flag("--evaluate", evaluate, "value every sequence (needs --scenario)");
  enumerate->add_option("--csv", csv, "option-value distribution CSV");
  add_common(enumerate, common, false);

  std::string sequence, diagnostics, dump_paths, stopping;
  auto* eval = app.add_subcommand("evaluate", "option value of one sequence");
  eval->add_option("--sequence", sequence, "sequence literal or policy name")->required();
  eval->add_option("--diagnostics", diagnostics, "value-surface CSV");
  eval->add_option("--dump-paths", dump_paths, "demand-path CSV");
  eval->add_option("--stopping-times", stopping, "per-path stopping-time CSV");
  add_common(eval, common, true);

  std::string mode = "both";
  auto* myopia = app.add_subcommand("myopia", "myopic baseline sequences");
  myopia->add_option("--mode", mode, "high, low or both")->check(CLI::IsMember({"high", "low", "both"}));
  myopia->add_flag("--evaluate", evaluate, "also value them");
  add_common(myopia, common, true);

  std::string axis, grid_points, policies = "myopia-h,myopia-l", seq_file, matrices_dir;
  int replicates = 10;
  auto* sweep = app.add_subcommand("sweep", "sensitivity sweep over one axis");
  sweep->add_option("--axis", axis, "k, spillover, f_end, zeta or mu_sigma")->required();
  sweep->add_option("--grid", grid_points, "comma-separated grid points")->required();
  sweep->add_option("--policies", policies, "comma-separated policy names");
  sweep->add_option("--sequence-file", seq_file, "extra sequences, one literal per line");
  sweep->add_option("--replicates,-R", replicates, "seeds per grid point")->check(CLI::PositiveNumber);
  sweep->add_option("--matrices-dir", matrices_dir, "write investment-time and co-investment CSVs here");
  add_common(sweep, common, true);

  std::string city, ks, out_dir;
  int regions = 0;
  bool enum_flag = false;
  int case_replicates = 20;
  auto* casestudy = app.add_subcommand("casestudy", "bundled city case study");
  casestudy->add_option("--city", city, "shanghai4..8, beijing6, beijing9, nyc7, nyc8")->required();
  casestudy->add_option("--k", ks, "comma-separated k values (default: scenario k)");
  casestudy->add_option("--replicates,-R", case_replicates, "seeds")->check(CLI::PositiveNumber);
  casestudy->add_option("--out-dir", out_dir, "directory for report CSVs");
  casestudy->add_option("--regions", regions, "use only the first N regions");
  casestudy->add_flag("--enumerate", enum_flag, "also enumerate and value every sequence");
  casestudy->add_option("--seed", common.seed, "override the scenario seed");
  casestudy->add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);

  bool all_in = false;
  int metric_replicates = 1;
  auto* metrics = app.add_subcommand("metrics", "E[NPV] and profitability per policy");
  metrics->add_option("--policies", policies, "comma-separated policy names");
  metrics->add_option("--sequence-file", seq_file, "extra sequences, one literal per line");
  metrics->add_option("--replicates,-R", metric_replicates, "seeds")->check(CLI::PositiveNumber);
  metrics->add_flag("--all-in", all_in, "add the all-at-t0 deployment");
  add_common(metrics, common, true);

  std::string scenarios_dir = std::string(SSRD_DATA_DIR) + "/scenarios", listen;
  bool use_stdio = false;
  auto* serve = app.add_subcommand("serve", "bridge server (protocol ssrd/1)");
  serve->add_flag("--stdio", use_stdio, "serve one session on stdin/stdout");
  serve->add_option("--listen", listen, "host:port for TCP");
  serve->add_option("--scenarios", scenarios_dir, "directory of *.scn files");

  std::string what;
  auto* exp = app.add_subcommand("export", "tabular data exports");
  exp->add_option("--what", what, "scenario, calibration, q0, travel-times, costs or paths")->required();
  exp->add_option("--sequence", sequence, "sequence for --what paths")->default_val("myopia-h");
  add_common(exp, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*count) return cmd_count(grid, common);
    if (*enumerate) return cmd_enumerate(grid, common, evaluate, csv);
    if (*eval) return cmd_evaluate(common, sequence, diagnostics, dump_paths, stopping);
    if (*myopia) return cmd_myopia(common, mode, evaluate);
    if (*sweep) return cmd_sweep(common, axis, grid_points, policies, seq_file, replicates, matrices_dir);
    if (*casestudy) return cmd_casestudy(common, city, ks, case_replicates, out_dir, regions, enum_flag);
    if (*metrics) return cmd_metrics(common, policies, seq_file, metric_replicates, all_in);
    if (*serve) return cmd_serve(scenarios_dir, use_stdio, listen);
    if (*exp) return cmd_export(common, what, sequence);
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const ssrd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}
