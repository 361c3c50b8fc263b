// Acceptance suite. Run one criterion with --criterion N, or all of them.
// Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anytime_maxsat/assess.hpp"
#include "anytime_maxsat/experiment.hpp"
#include "anytime_maxsat/hpo.hpp"
#include "anytime_maxsat/solver.hpp"
#include "anytime_maxsat/wcnf.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace amx;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Env {
  fs::path work;
  fs::path cli;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// 1: exact agreement with brute-force counting.
Outcome ecdf_oracle(const Env&) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> when(0.0, 120.0);
  std::size_t mismatches = 0;
  for (int k = 0; k < 10000; ++k) {
    const Trajectory t = oracle::random_trajectory(rng, 12, 200, 100.0);
    TargetSet targets{"i", {}};
    const auto count = std::uniform_int_distribution<std::size_t>(0, 50)(rng);
    for (std::size_t j = 0; j < count; ++j) {
      add_target(targets, std::uniform_int_distribution<Cost>(0, 200)(rng));
    }
    const double at = k % 10 == 0 && !t.empty() ? t[k % t.size()].elapsed : when(rng);
    const oracle::Rational expected = oracle::ecdf_count(t, targets.targets, at);
    const std::size_t hits = ecdf_hits(t, targets, at);
    const std::size_t den = targets.empty() ? 1 : targets.size();
    // Cross-multiplied rational equality, then the floating value itself.
    const bool same_ratio = hits * expected.den == expected.num * den;
    const bool same_value =
        ecdf_at(t, targets, at) ==
        static_cast<double>(expected.num) / static_cast<double>(expected.den);
    if (!same_ratio || !same_value) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 10000 triples"};
}

// 2: fixed-budget score.
Outcome score_checks(const Env&) {
  bool ok = score(9, Cost{19}) == 0.5 && score(42, Cost{42}) == 1.0 &&
            score(0, Cost{0}) == 1.0 && score(9, std::nullopt) == 0.0;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<Cost> cost(0, 1000000);
  std::size_t violations = 0;
  for (int k = 0; k < 1000; ++k) {
    const Cost best = cost(rng);
    Cost a = best + cost(rng);
    Cost b = best + cost(rng);
    if (a > b) std::swap(a, b);
    const double sa = score(best, a);
    const double sb = score(best, b);
    const bool monotone = a == b ? sa == sb : sa > sb;
    const bool bounded = sa > 0.0 && sa <= 1.0 && sb > 0.0 && sb <= 1.0;
    const bool above_infeasible = sb > score(best, std::nullopt);
    if (!monotone || !bounded || !above_infeasible) ++violations;
  }
  ok = ok && violations == 0;
  return {ok, std::to_string(violations) + " monotonicity violations in 1000 pairs"};
}

// 3: curve shape and AUC against a brute-force mean.
Outcome curve_auc(const Env&) {
  std::mt19937_64 rng(99);
  const TimeGrid grid = make_time_grid(0.1, 300.0, 100, GridScale::log);
  std::size_t bad = 0;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Trajectory t = oracle::random_trajectory(rng, 15, 500, 300.0);
    TargetSet targets{"i", {}};
    for (const TrajectoryEvent& e : t) add_target(targets, e.cost);
    for (int j = 0; j < 5; ++j) add_target(targets, std::uniform_int_distribution<Cost>(0, 500)(rng));
    const EcdfCurve c = ecdf_curve(t, targets, grid);
    bool monotone = true;
    for (std::size_t p = 1; p < c.values.size(); ++p) monotone = monotone && c.values[p] >= c.values[p - 1];
    const double a = auc(c);
    double brute = 0.0;
    for (double at : grid.points) {
      const oracle::Rational r = oracle::ecdf_count(t, targets.targets, at);
      brute += static_cast<double>(r.num) / static_cast<double>(r.den);
    }
    brute /= static_cast<double>(grid.size());
    worst = std::max(worst, std::abs(a - brute));
    if (!monotone || a < 0.0 || a > 1.0 || std::abs(a - brute) > 1e-12) ++bad;
  }
  return {bad == 0, std::to_string(bad) + " bad runs of 1000, max |AUC - mean| = " + fmt(worst)};
}

bool independent_check(const WcnfInstance& inst, const RunResult& r) {
  if (!r.best_cost || !r.best_assignment) return false;
  std::uint64_t bits = 0;
  for (std::uint32_t v = 1; v <= inst.num_vars(); ++v) {
    if ((*r.best_assignment)[v]) bits |= std::uint64_t{1} << (v - 1);
  }
  for (const Clause& c : inst.hard_clauses()) {
    if (!oracle::clause_satisfied(c, bits)) return false;
  }
  Cost cost = inst.constant_cost();
  for (const Clause& c : inst.soft_clauses()) {
    if (!oracle::clause_satisfied(c, bits)) cost += c.weight;
  }
  return cost == *r.best_cost;
}

// 4: optimum found on small instances.
Outcome solver_correctness(const Env&) {
  std::vector<WcnfInstance> instances;
  for (std::uint32_t k = 0; k < 10; ++k) {
    const std::uint32_t n = 12 + k % 5;
    instances.push_back(generate_instance(GenKind::random_wpms, {n, 4 * n, 0.25, 20, 4}, 100 + k));
  }
  for (std::uint32_t k = 0; k < 10; ++k) {
    instances.push_back(generate_instance(GenKind::staircase, {16, 0, 0, 20, 3 + k % 3}, 200 + k));
  }
  std::size_t unchecked = 0, weak_instances = 0, total_hits = 0;
  std::ostringstream weak;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const oracle::Optimum opt = oracle::exhaustive_optimum(instances[i]);
    if (!opt.cost) return {false, "generated instance " + std::to_string(i) + " is infeasible"};
    std::size_t hits = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SolverConfig c;
      c.seed = seed;
      const RunResult r = solve(instances[i], c, Budget::flips(1000000));
      if (!check_solution(instances[i], r) || !independent_check(instances[i], r)) ++unchecked;
      if (r.best_cost && *r.best_cost == *opt.cost) ++hits;
    }
    total_hits += hits;
    if (hits < 9) {
      ++weak_instances;
      weak << " instance " << i << " " << hits << "/10";
    }
  }
  return {unchecked == 0 && weak_instances == 0,
          std::to_string(total_hits) + "/200 optimal, " + std::to_string(unchecked) +
              " checker failures" + weak.str()};
}

// 5: incremental state against full recomputation.
Outcome bookkeeping(const Env&) {
  std::mt19937_64 rng(555);
  std::size_t discrepancies = 0, checks = 0;
  for (int k = 0; k < 5; ++k) {
    const WcnfInstance inst = oracle::random_instance(rng, 60 + 20 * k, 300 + 80 * k, 0.3);
    SolverConfig c;
    c.seed = rng();
    c.smooth_prob = k % 2 == 0 ? 0.01 : 0.0003;
    c.hard_weight_inc = 1 + k;
    c.soft_weight_cap = k == 4 ? 3 : 100;
    LocalSearch ls(inst, c);
    for (std::uint64_t flip = 1; flip <= 100000; ++flip) {
      if (!ls.step()) ls.randomize_assignment();
      if (flip % 500 == 0) {
        discrepancies += ls.verify_bookkeeping();
        ++checks;
      }
    }
  }
  return {discrepancies == 0,
          std::to_string(discrepancies) + " discrepancies over " + std::to_string(checks) + " checks"};
}

// 6: equal final cost, different speed.
Outcome hpo_discrimination(const Env&) {
  const double budget = 1e6;
  const WcnfInstance inst = generate_instance(GenKind::staircase, {32, 0, 0, 10, 4}, 6);
  SolverConfig config;
  config.seed = 3;
  const RunResult fast = solve(inst, config, Budget::flips(budget));
  const RunResult again = solve(inst, config, Budget::flips(budget));
  if (fast.trajectory.empty()) return {false, "fast run found no feasible solution"};
  bool deterministic = fast.trajectory.size() == again.trajectory.size();
  for (std::size_t k = 0; deterministic && k < fast.trajectory.size(); ++k) {
    deterministic = fast.trajectory[k].flips == again.trajectory[k].flips &&
                    fast.trajectory[k].cost == again.trajectory[k].cost;
  }
  const std::uint64_t reached = fast.trajectory.back().flips;
  if (reached > 1000) return {false, "fast run needed " + std::to_string(reached) + " flips"};

  // Same visited costs, stretched so the final cost arrives at flip 9e5.
  RunResult slow = fast;
  const double stretch = 9e5 / static_cast<double>(std::max<std::uint64_t>(reached, 1));
  for (TrajectoryEvent& e : slow.trajectory) {
    e.flips = static_cast<std::uint64_t>(std::llround(static_cast<double>(e.flips) * stretch));
  }
  slow.trajectory.back().flips = 900000;

  const BootstrapTargets boot = bootstrap_targets(fast);
  const TimeGrid grid = hpo_time_grid(Budget::flips(budget));
  const double bf_fast = cost_bestf(fast, inst).value;
  const double bf_slow = cost_bestf(slow, inst).value;
  const double ep_fast = cost_ecdf_prime(fast, boot.targets, grid, TimeAxis::flips).value;
  const double ep_slow = cost_ecdf_prime(slow, boot.targets, grid, TimeAxis::flips).value;
  const bool ok = deterministic && bf_fast == bf_slow && ep_fast < ep_slow;
  return {ok, "best-f " + fmt(bf_fast) + " vs " + fmt(bf_slow) + ", ecdf-prime " + fmt(ep_fast, 8) +
                  " vs " + fmt(ep_slow, 8) + ", final cost at flip " + std::to_string(reached) +
                  (deterministic ? "" : ", NOT deterministic")};
}

// 7: tuned configurations compared by aggregated AUC.
Outcome tuning_comparison(const Env&) {
  constexpr double assess_budget = 300000;
  constexpr std::size_t assess_seeds = 5;
  const ParamSpace space = ParamSpace::solver_space();

  std::vector<WcnfInstance> family;
  std::vector<std::string> names;
  for (std::uint32_t k = 0; k < 10; ++k) {
    const std::string name = "stair_" + std::to_string(k);
    family.push_back(generate_instance(GenKind::staircase, {300 + 30 * k, 0, 0, 10, 4}, 700 + k, name));
    names.push_back(name);
  }

  std::size_t ecdf_wins = 0;
  std::ostringstream detail;
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const std::vector<std::string> train_names = split_training(names, 0.2, derive_seed(17, rep));
    std::vector<WcnfInstance> training;
    for (const WcnfInstance& inst : family) {
      if (std::find(train_names.begin(), train_names.end(), inst.name()) != train_names.end()) {
        training.push_back(inst);
      }
    }

    std::map<std::string, Configuration> winners;
    for (CostMode mode : {CostMode::best_f, CostMode::ecdf_prime}) {
      TuneOptions opt;
      opt.mode = mode;
      opt.eval_budget = 30;
      opt.seed = derive_seed(17, 1000 + rep);
      opt.budget = Budget::flips(assess_budget / 3);
      HpoTargetStore store;
      winners[to_string(mode)] = tune(space, training, opt, store).best;
    }

    std::vector<RunRecord> runs;
    for (const auto& [label, config] : winners) {
      for (const WcnfInstance& inst : family) {
        for (std::uint64_t seed = 1; seed <= assess_seeds; ++seed) {
          const RunResult r =
              solve(inst, to_solver_config(config, seed), Budget::flips(assess_budget));
          runs.push_back(RunRecord{label, inst.name(), "staircase", seed, r.trajectory});
        }
      }
    }
    const TimeGrid grid = make_time_grid(assess_budget / 3000, assess_budget, 100, GridScale::log);
    const Assessment a = assess_runs(runs, grid, TimeAxis::flips);
    std::map<std::string, double> aucs;
    for (const TrackSummary& s : a.summaries) aucs[s.solver] = s.auc;
    const double e = aucs.at("ecdf-prime");
    const double b = aucs.at("best-f");
    if (e >= b) ++ecdf_wins;
    detail << " rep" << rep << " " << fmt(e) << (e >= b ? ">=" : "<") << fmt(b);
  }
  return {ecdf_wins >= 4, std::to_string(ecdf_wins) + "/5 repetitions favour ecdf-prime;" + detail.str()};
}

int shell(const std::string& command) {
  const int rc = std::system(command.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// 8: full pipeline through the command-line tool.
Outcome pipeline(const Env& env) {
  if (env.cli.empty() || !fs::exists(env.cli)) return {false, "command-line tool not found"};
  const fs::path dir = env.work / "pipeline";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = env.cli.string();

  for (int k = 0; k < 10; ++k) {
    const fs::path out = dir / "instances" / (k < 5 ? "track_a" : "track_b") /
                         ("wpms_" + std::to_string(k) + ".wcnf");
    fs::create_directories(out.parent_path());
    const std::string cmd = cli + " gen --kind random-wpms -n 400 -m 2000 --hard-fraction 0.3 --max-weight 50 --seed " +
                            std::to_string(k + 1) + " -o " + out.string();
    if (shell(cmd) != 0) return {false, "gen failed"};
  }
  const std::string run = cli + " run --config base --config walk:random_walk_prob=0.3,bms_size=5" +
                          " --instance '" + (dir / "instances" / "*" / "*.wcnf").string() + "'" +
                          " --seeds 1,2,3,4,5 --budget 10s --out " + (dir / "logs").string() +
                          " > " + (dir / "run.txt").string();
  if (shell(run) != 0) return {false, "run failed"};
  for (const char* out : {"reports1", "reports2"}) {
    const std::string cmd = cli + " assess --logs " + (dir / "logs").string() + " --out " +
                            (dir / out).string() + " > /dev/null";
    if (shell(cmd) != 0) return {false, "assess failed"};
  }

  std::vector<std::string> problems;
  const std::vector<std::string> expected{"heat_scores.csv", "heat_auc.csv", "scores.csv", "auc.csv",
                                          "wins.csv", "curve_base.csv", "curve_walk.csv"};
  for (const std::string& name : expected) {
    if (!fs::exists(dir / "reports1" / name)) problems.push_back("missing " + name);
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "reports1")) {
    ++compared;
    if (slurp(entry.path()) != slurp(dir / "reports2" / entry.path().filename())) {
      problems.push_back("differs: " + entry.path().filename().string());
    }
  }
  std::size_t max_wins = 0;
  if (problems.empty()) {
    const auto wins = read_csv(dir / "reports1" / "wins.csv");
    if (wins.size() != 5) problems.push_back("wins.csv has " + std::to_string(wins.size()) + " rows");
    for (std::size_t r = 1; r < wins.size(); ++r) {
      for (std::size_t c = 3; c < wins[r].size(); ++c) {
        max_wins = std::max<std::size_t>(max_wins, std::stoul(wins[r][c]));
      }
    }
    if (max_wins > 10) problems.push_back("win count above 10");
    const auto heat = read_csv(dir / "reports1" / "heat_auc.csv");
    bool shape = heat.size() == 3;
    for (const auto& row : heat) shape = shape && row.size() == 11;
    if (!shape) problems.push_back("heat_auc.csv is not 2x10");
  }
  std::string detail = std::to_string(compared) + " report files byte-identical on rerun, max wins " +
                       std::to_string(max_wins);
  for (const std::string& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

struct Criterion {
  int id;
  std::string title;
  double limit_seconds;
  std::function<Outcome(const Env&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  Env env;
  env.work = fs::temp_directory_path() / "anytime_maxsat_acceptance";
  std::string cli, work;
  app.add_option("--criterion", selected, "criterion number(s); default: all");
  app.add_option("--cli", cli, "path to the anytime-maxsat executable");
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);
  if (!cli.empty()) env.cli = cli;
  if (!work.empty()) env.work = work;
  fs::create_directories(env.work);

  const std::vector<Criterion> criteria{
      {1, "ECDF oracle equivalence", 10, ecdf_oracle},
      {2, "fixed-budget score", 1, score_checks},
      {3, "ECDF curve monotonicity and AUC", 5, curve_auc},
      {4, "solver correctness", 300, solver_correctness},
      {5, "incremental bookkeeping", 60, bookkeeping},
      {6, "tuning cost discrimination", 30, hpo_discrimination},
      {7, "tuning comparison", 1800, tuning_comparison},
      {8, "end-to-end pipeline", 1200, pipeline},
  };

  bool all_pass = true;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run(env);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.limit_seconds;
    const bool pass = out.pass && in_time;
    all_pass = all_pass && pass;
    std::cout << "criterion " << c.id << " " << (pass ? "PASS" : "FAIL") << "  " << c.title << " ["
              << fmt(seconds, 3) << " s of " << c.limit_seconds << " s] " << out.detail
              << (in_time ? "" : " (over time limit)") << std::endl;
  }
  return all_pass ? 0 : 1;
}
