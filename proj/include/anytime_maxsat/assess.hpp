#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anytime_maxsat/solver.hpp"

namespace amx {

/// Which clock a trajectory is read against.
enum class TimeAxis { seconds, flips };

double event_time(const TrajectoryEvent& event, TimeAxis axis);

/// Solution-quality thresholds of one instance: distinct costs, ascending.
struct TargetSet {
  std::string instance_id;
  std::vector<Cost> targets;

  std::size_t size() const { return targets.size(); }
  bool empty() const { return targets.empty(); }
};

enum class GridScale { log, linear };

struct TimeGrid {
  std::vector<double> points;
  GridScale scale = GridScale::log;
  double t_min = 0.0;
  double t_max = 0.0;

  std::size_t size() const { return points.size(); }
  bool operator==(const TimeGrid&) const = default;
};

struct EcdfCurve {
  TimeGrid grid;
  std::vector<double> values;
};

/// Union of all event costs of the given trajectories.
TargetSet build_targets(std::string instance_id, std::span<const Trajectory> runs);
/// Inserts one cost, keeping the set sorted and distinct.
void add_target(TargetSet& set, Cost target);

TimeGrid make_time_grid(double t_min, double t_max, std::size_t count, GridScale scale);

/// Best cost recorded at or before t (an event exactly at t counts).
std::optional<Cost> best_cost_at(std::span<const TrajectoryEvent> trajectory, double t,
                                 TimeAxis axis = TimeAxis::seconds);

/// Number of targets not better than the best cost at t.
std::size_t ecdf_hits(std::span<const TrajectoryEvent> trajectory, const TargetSet& targets,
                      double t, TimeAxis axis = TimeAxis::seconds);
/// ecdf_hits / |targets|; 0 before the first feasible solution or for an empty set.
double ecdf_at(std::span<const TrajectoryEvent> trajectory, const TargetSet& targets, double t,
               TimeAxis axis = TimeAxis::seconds);

EcdfCurve ecdf_curve(std::span<const TrajectoryEvent> trajectory, const TargetSet& targets,
                     const TimeGrid& grid, TimeAxis axis = TimeAxis::seconds);
/// Mean of the curve values over the grid.
double auc(const EcdfCurve& curve);

/// Pointwise mean of curves sharing one grid. Throws std::invalid_argument on
/// an empty input or a grid mismatch.
EcdfCurve aggregate_curves(std::span<const EcdfCurve> curves);
/// Averages each instance's run AUCs, then averages over instances.
double aggregate_auc(std::span<const std::vector<double>> run_aucs_per_instance);

/// (best + 1) / (found + 1); 0 when nothing feasible was found.
/// Throws std::invalid_argument when found < best.
double score(Cost best_overall, std::optional<Cost> found);

/// Mean of the present entries; absent entries are instances where no solver
/// found a feasible solution. None when nothing is left.
std::optional<double> score_aggregate(std::span<const std::optional<double>> scores);

/// Final best costs indexed [solver][instance][run]; none means infeasible.
using CostCube = std::vector<std::vector<std::vector<std::optional<Cost>>>>;

struct WinCount {
  std::size_t best_of_runs = 0;
  std::size_t avg_of_runs = 0;
  bool operator==(const WinCount&) const = default;
};

/// Win counts per solver. Ties award every tied solver; a solver that is never
/// feasible on an instance cannot win it.
std::vector<WinCount> win_tables(const CostCube& costs);

/// One run as seen by the assessment: everything needed to re-assess it.
struct RunRecord {
  std::string solver;
  std::string instance;
  std::string track;
  std::uint64_t seed = 0;
  Trajectory trajectory;
};

struct TrackSummary {
  std::string solver;
  std::string track;
  std::size_t instances = 0;
  WinCount wins;
  std::optional<double> score;
  double auc = 0.0;       // run mean, then instance mean
  double auc_flat = 0.0;  // mean over all run curves
};

struct SolverCurve {
  std::string solver;
  EcdfCurve mean;  // flat mean over run x instance curves
  std::vector<double> ci_half_width;
  EcdfCurve mean_by_instance;
};

struct Assessment {
  std::vector<std::string> solvers;    // sorted
  std::vector<std::string> instances;  // sorted
  std::vector<std::string> tracks;     // sorted
  TimeGrid grid;
  TimeAxis axis = TimeAxis::seconds;
  std::map<std::string, TargetSet> targets;
  /// [solver][instance]; none when no solver was feasible or the solver has no runs there.
  std::vector<std::vector<std::optional<double>>> instance_scores;
  /// [solver][instance]; none when the solver has no runs there.
  std::vector<std::vector<std::optional<double>>> instance_auc;
  std::vector<TrackSummary> summaries;
  std::vector<SolverCurve> curves;
};

/// Builds targets, scores, wins, curves and AUCs from a collection of runs.
/// Each run's final cost is the last event of its trajectory.
Assessment assess_runs(std::span<const RunRecord> runs, const TimeGrid& grid, TimeAxis axis);

/// Writes scores.csv, auc.csv, wins.csv, heat_scores.csv, heat_auc.csv and one
/// curve_<solver>.csv per solver into `dir` (created if missing).
/// Throws std::runtime_error naming the path on I/O failure.
void emit_reports(const Assessment& assessment, const std::filesystem::path& dir);

/// Shortest decimal text that round-trips the double.
std::string format_real(double value);
/// File-name-safe version of a solver name.
std::string sanitize_name(const std::string& name);

}  // namespace amx
