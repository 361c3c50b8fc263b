#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "anytime_maxsat/assess.hpp"
#include "support/oracles.hpp"

using namespace amx;

namespace {

Trajectory events(std::initializer_list<std::pair<double, Cost>> items) {
  Trajectory t;
  std::uint64_t flips = 0;
  for (auto [at, cost] : items) t.push_back(TrajectoryEvent{at, ++flips, cost});
  return t;
}

EcdfCurve curve_of(std::vector<double> values) {
  EcdfCurve c;
  c.grid = make_time_grid(1, static_cast<double>(values.size()), values.size(), GridScale::linear);
  c.values = std::move(values);
  return c;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("target sets are the union of feasible costs") {
  const std::vector<Trajectory> runs{events({{1, 9}, {2, 5}, {3, 3}}), events({{1, 7}, {2, 5}})};
  CHECK(build_targets("i", runs).targets == std::vector<Cost>{3, 5, 7, 9});

  const std::vector<Trajectory> single{events({{1, 4}})};
  CHECK(build_targets("i", single).targets == std::vector<Cost>{4});

  const std::vector<Trajectory> none{Trajectory{}, Trajectory{}};
  CHECK(build_targets("i", none).empty());

  TargetSet set = build_targets("i", runs);
  add_target(set, 4);
  add_target(set, 4);
  CHECK(set.targets == std::vector<Cost>{3, 4, 5, 7, 9});
}

TEST_CASE("time grids") {
  const TimeGrid a = make_time_grid(1, 100, 3, GridScale::log);
  REQUIRE(a.size() == 3);
  CHECK(a.points[0] == 1.0);
  CHECK(a.points[1] == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(a.points[2] == 100.0);

  const TimeGrid b = make_time_grid(0.1, 300, 100, GridScale::log);
  CHECK(b.size() == 100);
  CHECK(b.points.front() == 0.1);
  CHECK(b.points.back() == 300.0);
  for (std::size_t k = 1; k < b.size(); ++k) CHECK(b.points[k] > b.points[k - 1]);

  const TimeGrid c = make_time_grid(1, 3, 3, GridScale::linear);
  CHECK(c.points == std::vector<double>{1, 2, 3});

  CHECK_THROWS_AS(make_time_grid(0, 10, 5, GridScale::log), std::invalid_argument);
  CHECK_THROWS_AS(make_time_grid(5, 1, 5, GridScale::linear), std::invalid_argument);
  CHECK_THROWS_AS(make_time_grid(1, 10, 1, GridScale::linear), std::invalid_argument);
}

TEST_CASE("best cost lookup is right-continuous") {
  const Trajectory t = events({{1, 9}, {5, 3}});
  CHECK(best_cost_at(t, 4) == Cost{9});
  CHECK(best_cost_at(t, 5) == Cost{3});
  CHECK_FALSE(best_cost_at(t, 0.5).has_value());
  CHECK(best_cost_at(t, 2, TimeAxis::flips) == Cost{3});
}

TEST_CASE("ECDF values") {
  const TargetSet targets{"i", {3, 5, 8, 10}};
  CHECK(ecdf_at(events({{1, 8}}), targets, 2) == 0.5);
  CHECK(ecdf_at(events({{1, 3}}), targets, 2) == 1.0);
  CHECK(ecdf_at(Trajectory{}, targets, 2) == 0.0);
  CHECK(ecdf_at(events({{1, 8}}), TargetSet{"i", {}}, 2) == 0.0);
}

TEST_CASE("AUC is the curve mean") {
  CHECK(auc(curve_of({1, 1, 1, 1})) == 1.0);
  CHECK(auc(curve_of({0, 0, 0.5, 1.0})) == 0.375);

  const TimeGrid grid = make_time_grid(0.1, 10, 20, GridScale::log);
  CHECK(auc(ecdf_curve(Trajectory{}, TargetSet{"i", {1, 2}}, grid)) == 0.0);
}

TEST_CASE("curve aggregation") {
  const EcdfCurve a = curve_of({0.2, 0.6});
  const std::vector<EcdfCurve> same{a, a};
  CHECK(aggregate_curves(same).values == a.values);

  const std::vector<EcdfCurve> pair{curve_of({0, 1}), curve_of({1, 1})};
  CHECK(aggregate_curves(pair).values == std::vector<double>{0.5, 1});

  std::vector<EcdfCurve> mismatched{curve_of({0, 1}), curve_of({1, 1, 1})};
  CHECK_THROWS_AS(aggregate_curves(mismatched), std::invalid_argument);
}

TEST_CASE("flat and nested aggregation agree for balanced designs") {
  std::mt19937_64 rng(3);
  const TimeGrid grid = make_time_grid(0.1, 100, 30, GridScale::log);
  std::vector<EcdfCurve> all;
  std::vector<std::vector<double>> per_instance(2);
  for (int inst = 0; inst < 2; ++inst) {
    const TargetSet targets{"i", {1, 4, 9, 16, 25}};
    for (int run = 0; run < 10; ++run) {
      const Trajectory t = oracle::random_trajectory(rng, 6, 30, 120);
      all.push_back(ecdf_curve(t, targets, grid));
      per_instance[inst].push_back(auc(all.back()));
    }
  }
  const EcdfCurve mean = aggregate_curves(all);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double sum = 0;
    for (const EcdfCurve& c : all) sum += c.values[k];
    CHECK(mean.values[k] == doctest::Approx(sum / 20).epsilon(1e-12));
  }
  double flat = 0;
  for (const auto& runs : per_instance)
    for (double v : runs) flat += v;
  CHECK(aggregate_auc(per_instance) == doctest::Approx(flat / 20).epsilon(1e-12));
  CHECK(auc(mean) == doctest::Approx(flat / 20).epsilon(1e-12));
}

TEST_CASE("fixed-budget score") {
  CHECK(score(9, Cost{19}) == 0.5);
  CHECK(score(7, Cost{7}) == 1.0);
  CHECK(score(7, std::nullopt) == 0.0);
  CHECK(score(0, Cost{0}) == 1.0);
  CHECK_THROWS_AS(score(5, Cost{4}), std::invalid_argument);

  const std::vector<std::optional<double>> two{1.0, 0.5};
  CHECK(score_aggregate(two) == 0.75);
  const std::vector<std::optional<double>> dropped{1.0, std::nullopt, 0.5};
  CHECK(score_aggregate(dropped) == 0.75);
  const std::vector<std::optional<double>> empty{std::nullopt};
  CHECK_FALSE(score_aggregate(empty).has_value());
}

TEST_CASE("win tables") {
  SUBCASE("dominance") {
    CostCube cube(2, std::vector<std::vector<std::optional<Cost>>>(5));
    for (std::size_t i = 0; i < 5; ++i) {
      cube[0][i] = {Cost{1}, Cost{2}};
      cube[1][i] = {Cost{3}, Cost{4}};
    }
    const auto wins = win_tables(cube);
    CHECK(wins[0] == WinCount{5, 5});
    CHECK(wins[1] == WinCount{0, 0});
  }
  SUBCASE("ties award every tied solver") {
    CostCube cube(2, std::vector<std::vector<std::optional<Cost>>>(1));
    cube[0][0] = {Cost{2}, Cost{9}};
    cube[1][0] = {Cost{2}, Cost{5}};
    const auto wins = win_tables(cube);
    CHECK(wins[0].best_of_runs == 1);
    CHECK(wins[1].best_of_runs == 1);
    CHECK(wins[0].avg_of_runs == 0);
    CHECK(wins[1].avg_of_runs == 1);
  }
  SUBCASE("never feasible") {
    CostCube cube(2, std::vector<std::vector<std::optional<Cost>>>(3));
    for (std::size_t i = 0; i < 3; ++i) {
      cube[0][i] = {Cost{1}};
      cube[1][i] = {std::nullopt};
    }
    CHECK(win_tables(cube)[1] == WinCount{0, 0});
    CHECK(win_tables(cube)[0] == WinCount{3, 3});
  }
  SUBCASE("infeasible runs leave the mean of feasible ones") {
    CostCube cube(2, std::vector<std::vector<std::optional<Cost>>>(1));
    cube[0][0] = {Cost{1}, std::nullopt};
    cube[1][0] = {Cost{8}, Cost{8}};
    const auto wins = win_tables(cube);
    CHECK(wins[0] == WinCount{1, 1});
    CHECK(wins[1] == WinCount{0, 0});
  }
}

TEST_CASE("ECDF matches brute-force counting") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> when(0, 120);
  for (int round = 0; round < 2000; ++round) {
    const Trajectory t = oracle::random_trajectory(rng, 8, 60, 100);
    std::vector<Cost> raw;
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 50)(rng);
    for (std::size_t k = 0; k < n; ++k) raw.push_back(std::uniform_int_distribution<Cost>(0, 60)(rng));
    TargetSet targets{"i", {}};
    for (Cost c : raw) add_target(targets, c);
    const double at = when(rng);
    const oracle::Rational r = oracle::ecdf_count(t, targets.targets, at);
    CHECK(ecdf_hits(t, targets, at) == r.num);
    CHECK(ecdf_at(t, targets, at) == static_cast<double>(r.num) / static_cast<double>(r.den));
  }
}

TEST_CASE("ECDF properties") {
  std::mt19937_64 rng(23);
  const TimeGrid grid = make_time_grid(0.1, 100, 100, GridScale::log);
  for (int round = 0; round < 300; ++round) {
    const Trajectory t = oracle::random_trajectory(rng, 10, 80, 100);
    TargetSet targets{"i", {}};
    for (int k = 0; k < 10; ++k) add_target(targets, std::uniform_int_distribution<Cost>(0, 80)(rng));
    const EcdfCurve c = ecdf_curve(t, targets, grid);
    for (std::size_t k = 1; k < c.values.size(); ++k) CHECK(c.values[k] >= c.values[k - 1]);

    // Adding a target never lowers the hit count.
    TargetSet bigger = targets;
    add_target(bigger, std::uniform_int_distribution<Cost>(0, 80)(rng));
    for (double at : {1.0, 10.0, 50.0, 100.0}) {
      CHECK(ecdf_hits(t, bigger, at) >= ecdf_hits(t, targets, at));
    }

    // A run that is never worse at any time has a pointwise higher curve.
    Trajectory better = t;
    for (TrajectoryEvent& e : better) e.elapsed *= 0.5;
    const EcdfCurve cb = ecdf_curve(better, targets, grid);
    for (std::size_t k = 0; k < c.values.size(); ++k) CHECK(cb.values[k] >= c.values[k]);
  }
}

TEST_CASE("assessment of a hand-made pair of runs") {
  std::vector<RunRecord> runs;
  runs.push_back(RunRecord{"a", "inst", "t", 1, events({{1, 9}, {5, 3}})});
  runs.push_back(RunRecord{"b", "inst", "t", 1, events({{2, 7}})});
  const TimeGrid grid = make_time_grid(1, 4, 4, GridScale::linear);
  const Assessment a = assess_runs(runs, grid, TimeAxis::seconds);
  CHECK(a.solvers == std::vector<std::string>{"a", "b"});
  CHECK(a.targets.at("inst").targets == std::vector<Cost>{3, 7, 9});
  // Solver a: cost 9 at t in [1,4] -> 1/3 each.
  CHECK(*a.instance_auc[0][0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  // Solver b: nothing at t=1, cost 7 afterwards -> (0 + 2/3 * 3) / 4.
  CHECK(*a.instance_auc[1][0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(*a.instance_scores[0][0] == 1.0);
  CHECK(*a.instance_scores[1][0] == 0.5);
  REQUIRE(a.summaries.size() == 2);
  CHECK(a.summaries[0].wins == WinCount{1, 1});
  CHECK(a.summaries[1].wins == WinCount{0, 0});
}

TEST_CASE("report files have the expected shape and round-trip") {
  std::vector<RunRecord> runs;
  std::mt19937_64 rng(31);
  for (std::string s : {"alpha", "beta"}) {
    for (std::string i : {"i1", "i2", "i3"}) {
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        runs.push_back(RunRecord{s, i, "track", seed, oracle::random_trajectory(rng, 5, 50, 10)});
      }
    }
  }
  const TimeGrid grid = make_time_grid(0.1, 10, 100, GridScale::log);
  const Assessment a = assess_runs(runs, grid, TimeAxis::seconds);
  const auto dir = std::filesystem::temp_directory_path() / "amx_test_reports";
  std::filesystem::remove_all(dir);
  emit_reports(a, dir);

  const auto scores = read_csv(dir / "heat_scores.csv");
  REQUIRE(scores.size() == 3);
  for (const auto& row : scores) CHECK(row.size() == 4);
  CHECK(scores[0][0] == "solver");

  const auto aucs = read_csv(dir / "heat_auc.csv");
  REQUIRE(aucs.size() == 3);
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t i = 0; i < 3; ++i) {
      const double parsed = std::stod(aucs[s + 1][i + 1]);
      CHECK(parsed == doctest::Approx(*a.instance_auc[s][i]).epsilon(1e-12));
    }
  }

  for (const char* name : {"scores.csv", "auc.csv", "wins.csv"}) {
    CHECK(read_csv(dir / name).size() == 3);
  }
  const auto curve = read_csv(dir / "curve_alpha.csv");
  CHECK(curve.size() == 101);
  CHECK(curve[0] == std::vector<std::string>{"time", "mean", "ci_half_width", "mean_by_instance"});
  std::filesystem::remove_all(dir);
}

TEST_CASE("format_real round-trips") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double v = d(rng);
    CHECK(std::stod(format_real(v)) == v);
  }
  CHECK(format_real(0.5) == "0.5");
  CHECK(format_real(1.0) == "1");
}
