#include "ssrd/error.hpp"
#include "ssrd/metrics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace ssrd;

namespace {

/// One region, one path, demand given per period.
DemandPathSet series(const std::vector<double>& q) {
  DemandPathSet p(1, static_cast<int>(q.size()) - 1, 1);
  for (std::size_t t = 0; t < q.size(); ++t) p.at(0, static_cast<int>(t), 0, 0) = q[t];
  return p;
}

InvestmentSequence seq(std::vector<std::vector<int>> ps) {
  InvestmentSequence s;
  for (auto& p : ps) s.portfolios.push_back(Portfolio{std::move(p)});
  return s;
}

}  // namespace

TEST_CASE("npv: discounting of a single payoff") {
  const CostModel free{0.0, 0.0, 1.0, 0.0};
  const auto at0 = series({100.0, 0.0, 0.0});
  CHECK(expected_npv(at0, DeploymentSchedule::all_in(1), free, 0.01).value == doctest::Approx(100.0));
  const auto at1 = series({0.0, 100.0, 0.0});
  const auto later = DeploymentSchedule::fixed(seq({{0}}), {1});
  CHECK(expected_npv(at1, later, free, 0.01).value == doctest::Approx(100.0 / 1.01));
  CHECK(expected_npv(at1, later, free, 0.01).value == doctest::Approx(99.0099).epsilon(1e-6));
  // Not yet deployed periods earn nothing.
  const auto late = DeploymentSchedule::fixed(seq({{0}}), {2});
  CHECK(expected_npv(at1, late, free, 0.01).value == 0.0);
}

TEST_CASE("profitability: ratio limits") {
  const auto flat = series({50.0, 60.0, 70.0, 80.0});
  const CostModel free{0.0, 0.0, 1.0, 0.0};
  double expect = 0.0;
  for (int t = 0; t <= 3; ++t) expect += std::pow(1.01, -t);
  CHECK(profitability(flat, DeploymentSchedule::all_in(1), free, 0.01).value == doctest::Approx(expect));

  const auto constant = series({50.0, 50.0, 50.0});
  const CostModel heavy{100.0, 0.0, 1.0, 0.0};
  const auto r = profitability(constant, DeploymentSchedule::all_in(1), heavy, 0.0);
  CHECK(r.value == doctest::Approx(-3.0));
  CHECK(r.zero_demand_terms == 0);

  const auto skipped = profitability(constant, DeploymentSchedule::fixed(seq({{0}}), {1}), heavy, 0.0);
  CHECK(skipped.value == doctest::Approx(-2.0));
  CHECK(skipped.zero_demand_terms == 1);
}

TEST_CASE("metrics: hand-built two-region schedule") {
  // Region 0 from t_0, region 1 from t_1. T = 1, one path.
  DemandPathSet p(1, 1, 2);
  const double q[2][2][2] = {{{10, 2}, {3, 20}}, {{12, 4}, {5, 25}}};
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) p.at(0, t, i, j) = q[t][i][j];
  const CostModel c{4.0, 1.5, 0.81, 0.5};
  const double rho = 0.05;
  const auto sched = DeploymentSchedule::fixed(seq({{0}, {1}}), {0, 1});

  // t_0: only region 0. t_1: both; portfolio 1 adds intra 25 and pair 4 + 5.
  const double f1 = 0.81;  // f_end^{t/T} at t = T
  const double pi00 = 10 - 4.0;
  const double pi01 = 12 - 4.0 * f1;
  const double x11 = 25 + 4 + 5;
  const double pi11 = x11 - (4.0 * f1 + 1.5 * f1 / (1 + 0.5 * 1));
  const double npv = pi00 + (pi01 + pi11) / 1.05;
  const double prof = pi00 / 10.0 + (pi01 + pi11) / (12.0 + x11) / 1.05;
  CHECK(expected_npv(p, sched, c, rho).value == doctest::Approx(npv).epsilon(1e-12));
  CHECK(profitability(p, sched, c, rho).value == doctest::Approx(prof).epsilon(1e-12));
}

TEST_CASE("metrics: per-path schedules and standard errors") {
  DemandPathSet p(2, 1, 1);
  p.at(0, 0, 0, 0) = 10, p.at(0, 1, 0, 0) = 10;
  p.at(1, 0, 0, 0) = 30, p.at(1, 1, 0, 0) = 30;
  const CostModel free{0.0, 0.0, 1.0, 0.0};
  DeploymentSchedule s;
  s.sequence = seq({{0}});
  s.deploy_time = {{0}, {1}};
  const auto r = expected_npv(p, s, free, 0.0);
  CHECK(r.value == doctest::Approx((20.0 + 30.0) / 2));
  CHECK(r.std_error == doctest::Approx(5.0));
  s.deploy_time = {{0}, {1}, {0}};
  CHECK_THROWS_AS(expected_npv(p, s, free, 0.0), DataError);
}

TEST_CASE("congestion: zero price sensitivity leaves demand unchanged") {
  Matrix q(2, 2);
  q << 100, 20, 30, 150;
  const Matrix tt = Matrix::Constant(2, 2, 12.0);
  CongestionParams p;
  p.delta = 0.0;
  const auto r = realized_ridership(q, tt, p);
  CHECK(r.realized == q);
  CHECK(r.wait == doctest::Approx(0.8 * std::cbrt(300.0) * std::pow(19.31, -2.0 / 3.0)));
  CHECK(r.converged);

  const auto z = realized_ridership(Matrix::Zero(2, 2), tt, CongestionParams{});
  CHECK(z.wait == 0.0);
  CHECK(z.realized.isZero());
}

TEST_CASE("congestion: fixed point agrees with scalar bisection") {
  const CongestionParams p;
  for (double tt : {0.0, 5.0, 45.0}) {
    const auto r = realized_ridership(Matrix::Constant(1, 1, 1000.0), Matrix::Constant(1, 1, tt), p);
    const auto o = testing::oracle_scalar_congestion(1000.0, tt, p.fare, p.delta, p.vot, p.speed_kmh, p.wait_coefficient);
    CHECK(r.converged);
    CHECK(r.iterations <= 100);
    CHECK(std::abs(r.wait - o.wait) <= 1e-6 * o.wait);
    CHECK(std::abs(r.realized(0, 0) - o.realized) <= 1e-6 * o.realized);
  }
}

TEST_CASE("congestion: realized demand falls with fare and sensitivity") {
  Matrix q(2, 2);
  q << 400, 50, 60, 300;
  Matrix tt(2, 2);
  tt << 3, 15, 15, 4;
  CongestionParams base;
  double prev = realized_ridership(q, tt, base).realized.sum();
  CHECK(prev < q.sum());
  for (double d : {0.01, 0.05, 0.2}) {
    CongestionParams p = base;
    p.delta = d;
    const double v = realized_ridership(q, tt, p).realized.sum();
    CHECK(v < prev);
    prev = v;
  }
  CongestionParams pricey = base;
  pricey.fare = 10.0;
  CHECK(realized_ridership(q, tt, pricey).realized.sum() < realized_ridership(q, tt, base).realized.sum());
  CHECK_THROWS_AS(realized_ridership(q, Matrix::Zero(3, 3), base), DataError);
}

TEST_CASE("congestion: metrics on the covered submatrix") {
  auto s = testing::synthetic_scenario(4, 4, 5);
  const auto paths = simulate_paths(s, InvestmentSchedule{{0, 0, 0, 0}}, 30, 2);
  CongestionParams params;
  params.delta = 0.05;
  const CongestionModel cm{params, travel_time_matrix(s.regions, params.speed_kmh, 1.0)};
  const auto sched = DeploymentSchedule::all_in(4);
  const auto plain = expected_npv(paths, sched, s.costs, s.rho);
  const auto cong = expected_npv(paths, sched, s.costs, s.rho, &cm);
  CHECK(cong.value < plain.value);
  CHECK(cong.unconverged == 0);
  CHECK(cong.max_iterations_used >= 1);
  CongestionParams none = params;
  none.delta = 0.0;
  const CongestionModel cm0{none, cm.travel_times};
  CHECK(expected_npv(paths, sched, s.costs, s.rho, &cm0).value == doctest::Approx(plain.value).epsilon(1e-12));
}

TEST_CASE("cost trajectory") {
  const CostModel c{10.0, 4.0, 0.64, 1.0};
  const auto traj = cost_trajectory(c, 2, 3);
  REQUIRE(traj.size() == 3);
  CHECK(traj[0].f_time == 1.0);
  CHECK(traj[1].f_time == doctest::Approx(0.8));
  CHECK(traj[2].c_intra == doctest::Approx(6.4));
  CHECK(traj[2].c_inter == doctest::Approx(4.0 * 0.64 / 4.0));
}
