#include "anytime_maxsat/assess.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace amx {

double event_time(const TrajectoryEvent& event, TimeAxis axis) {
  return axis == TimeAxis::seconds ? event.elapsed : static_cast<double>(event.flips);
}

TargetSet build_targets(std::string instance_id, std::span<const Trajectory> runs) {
  std::set<Cost> costs;
  for (const Trajectory& t : runs) {
    for (const TrajectoryEvent& e : t) costs.insert(e.cost);
  }
  return TargetSet{std::move(instance_id), {costs.begin(), costs.end()}};
}

void add_target(TargetSet& set, Cost target) {
  auto it = std::lower_bound(set.targets.begin(), set.targets.end(), target);
  if (it == set.targets.end() || *it != target) set.targets.insert(it, target);
}

TimeGrid make_time_grid(double t_min, double t_max, std::size_t count, GridScale scale) {
  if (count < 2) throw std::invalid_argument("time grid needs at least 2 points");
  if (!(t_max > t_min)) throw std::invalid_argument("time grid needs t_min < t_max");
  if (scale == GridScale::log && !(t_min > 0.0)) {
    throw std::invalid_argument("log-scaled time grid needs t_min > 0");
  }
  if (scale == GridScale::linear && t_min < 0.0) {
    throw std::invalid_argument("time grid needs t_min >= 0");
  }
  TimeGrid grid{{}, scale, t_min, t_max};
  grid.points.reserve(count);
  const double last = static_cast<double>(count - 1);
  for (std::size_t j = 0; j < count; ++j) {
    const double frac = static_cast<double>(j) / last;
    grid.points.push_back(scale == GridScale::log ? t_min * std::pow(t_max / t_min, frac)
                                                  : t_min + (t_max - t_min) * frac);
  }
  // Pin the endpoints against pow rounding.
  grid.points.front() = t_min;
  grid.points.back() = t_max;
  return grid;
}

std::optional<Cost> best_cost_at(std::span<const TrajectoryEvent> trajectory, double t,
                                 TimeAxis axis) {
  auto it = std::upper_bound(trajectory.begin(), trajectory.end(), t,
                             [axis](double time, const TrajectoryEvent& e) {
                               return time < event_time(e, axis);
                             });
  if (it == trajectory.begin()) return std::nullopt;
  return std::prev(it)->cost;
}

std::size_t ecdf_hits(std::span<const TrajectoryEvent> trajectory, const TargetSet& targets,
                      double t, TimeAxis axis) {
  const auto best = best_cost_at(trajectory, t, axis);
  if (!best) return 0;
  auto first = std::lower_bound(targets.targets.begin(), targets.targets.end(), *best);
  return static_cast<std::size_t>(targets.targets.end() - first);
}

double ecdf_at(std::span<const TrajectoryEvent> trajectory, const TargetSet& targets, double t,
               TimeAxis axis) {
  if (targets.empty()) return 0.0;
  return static_cast<double>(ecdf_hits(trajectory, targets, t, axis)) /
         static_cast<double>(targets.size());
}

EcdfCurve ecdf_curve(std::span<const TrajectoryEvent> trajectory, const TargetSet& targets,
                     const TimeGrid& grid, TimeAxis axis) {
  EcdfCurve curve{grid, {}};
  curve.values.reserve(grid.size());
  for (double t : grid.points) curve.values.push_back(ecdf_at(trajectory, targets, t, axis));
  return curve;
}

double auc(const EcdfCurve& curve) {
  if (curve.values.empty()) return 0.0;
  return std::accumulate(curve.values.begin(), curve.values.end(), 0.0) /
         static_cast<double>(curve.values.size());
}

EcdfCurve aggregate_curves(std::span<const EcdfCurve> curves) {
  if (curves.empty()) throw std::invalid_argument("no curves to aggregate");
  EcdfCurve out{curves.front().grid, std::vector<double>(curves.front().values.size(), 0.0)};
  for (const EcdfCurve& c : curves) {
    if (!(c.grid == out.grid) || c.values.size() != out.values.size()) {
      throw std::invalid_argument("cannot aggregate curves over different time grids");
    }
    for (std::size_t j = 0; j < c.values.size(); ++j) out.values[j] += c.values[j];
  }
  for (double& v : out.values) v /= static_cast<double>(curves.size());
  return out;
}

double aggregate_auc(std::span<const std::vector<double>> run_aucs_per_instance) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& runs : run_aucs_per_instance) {
    if (runs.empty()) continue;
    sum += std::accumulate(runs.begin(), runs.end(), 0.0) / static_cast<double>(runs.size());
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double score(Cost best_overall, std::optional<Cost> found) {
  if (!found) return 0.0;
  if (*found < best_overall) {
    throw std::invalid_argument("found cost " + std::to_string(*found) +
                                " is better than the best overall cost " +
                                std::to_string(best_overall));
  }
  return (static_cast<double>(best_overall) + 1.0) / (static_cast<double>(*found) + 1.0);
}

std::optional<double> score_aggregate(std::span<const std::optional<double>> scores) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : scores) {
    if (!s) continue;
    sum += *s;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::vector<WinCount> win_tables(const CostCube& costs) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t solvers = costs.size();
  std::vector<WinCount> wins(solvers);
  if (solvers == 0) return wins;
  const std::size_t instances = costs.front().size();

  for (std::size_t i = 0; i < instances; ++i) {
    std::vector<double> best(solvers, inf), mean(solvers, inf);
    for (std::size_t s = 0; s < solvers; ++s) {
      double sum = 0.0;
      std::size_t feasible = 0;
      for (const auto& c : costs[s][i]) {
        if (!c) continue;
        best[s] = std::min(best[s], static_cast<double>(*c));
        sum += static_cast<double>(*c);
        ++feasible;
      }
      if (feasible > 0) mean[s] = sum / static_cast<double>(feasible);
    }
    const double best_all = *std::min_element(best.begin(), best.end());
    const double mean_all = *std::min_element(mean.begin(), mean.end());
    for (std::size_t s = 0; s < solvers; ++s) {
      if (best[s] != inf && best[s] <= best_all) ++wins[s].best_of_runs;
      if (mean[s] != inf && mean[s] <= mean_all) ++wins[s].avg_of_runs;
    }
  }
  return wins;
}

namespace {

std::size_t index_of(const std::vector<std::string>& sorted, const std::string& key) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), key) -
                                  sorted.begin());
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

Assessment assess_runs(std::span<const RunRecord> runs, const TimeGrid& grid, TimeAxis axis) {
  Assessment a;
  a.grid = grid;
  a.axis = axis;
  std::map<std::string, std::string> track_of;
  {
    std::set<std::string> solvers, instances, tracks;
    for (const RunRecord& r : runs) {
      solvers.insert(r.solver);
      instances.insert(r.instance);
      tracks.insert(r.track);
      auto [it, inserted] = track_of.emplace(r.instance, r.track);
      if (!inserted && it->second != r.track) {
        throw std::invalid_argument("instance " + r.instance + " appears in two tracks");
      }
    }
    a.solvers.assign(solvers.begin(), solvers.end());
    a.instances.assign(instances.begin(), instances.end());
    a.tracks.assign(tracks.begin(), tracks.end());
  }
  const std::size_t ns = a.solvers.size();
  const std::size_t ni = a.instances.size();

  // Group runs by (solver, instance).
  std::vector<std::vector<std::vector<const RunRecord*>>> cells(
      ns, std::vector<std::vector<const RunRecord*>>(ni));
  std::vector<std::vector<Trajectory>> per_instance(ni);
  for (const RunRecord& r : runs) {
    const std::size_t s = index_of(a.solvers, r.solver);
    const std::size_t i = index_of(a.instances, r.instance);
    cells[s][i].push_back(&r);
    per_instance[i].push_back(r.trajectory);
  }
  for (std::size_t i = 0; i < ni; ++i) {
    a.targets.emplace(a.instances[i], build_targets(a.instances[i], per_instance[i]));
  }

  // Final costs and best-known cost per instance.
  CostCube cube(ns, std::vector<std::vector<std::optional<Cost>>>(ni));
  std::vector<std::optional<Cost>> best_known(ni);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t i = 0; i < ni; ++i) {
      for (const RunRecord* r : cells[s][i]) {
        std::optional<Cost> final_cost;
        if (!r->trajectory.empty()) final_cost = r->trajectory.back().cost;
        cube[s][i].push_back(final_cost);
        if (final_cost && (!best_known[i] || *final_cost < *best_known[i])) {
          best_known[i] = final_cost;
        }
      }
    }
  }

  a.instance_scores.assign(ns, std::vector<std::optional<double>>(ni));
  a.instance_auc.assign(ns, std::vector<std::optional<double>>(ni));
  for (std::size_t s = 0; s < ns; ++s) {
    std::vector<EcdfCurve> all_curves;
    std::vector<EcdfCurve> instance_means;
    for (std::size_t i = 0; i < ni; ++i) {
      if (cells[s][i].empty()) continue;
      const TargetSet& targets = a.targets.at(a.instances[i]);
      std::vector<double> run_scores, run_aucs;
      std::vector<EcdfCurve> run_curves;
      for (std::size_t r = 0; r < cells[s][i].size(); ++r) {
        if (best_known[i]) run_scores.push_back(score(*best_known[i], cube[s][i][r]));
        run_curves.push_back(ecdf_curve(cells[s][i][r]->trajectory, targets, grid, axis));
        run_aucs.push_back(auc(run_curves.back()));
      }
      if (!run_scores.empty()) a.instance_scores[s][i] = mean_of(run_scores);
      a.instance_auc[s][i] = mean_of(run_aucs);
      instance_means.push_back(aggregate_curves(run_curves));
      all_curves.insert(all_curves.end(), run_curves.begin(), run_curves.end());
    }
    if (all_curves.empty()) continue;

    SolverCurve sc{a.solvers[s], aggregate_curves(all_curves), {},
                   aggregate_curves(instance_means)};
    const double n = static_cast<double>(all_curves.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      double half = 0.0;
      if (all_curves.size() > 1) {
        double ss = 0.0;
        for (const EcdfCurve& c : all_curves) {
          const double d = c.values[j] - sc.mean.values[j];
          ss += d * d;
        }
        half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
      }
      sc.ci_half_width.push_back(half);
    }
    a.curves.push_back(std::move(sc));
  }

  for (const std::string& track : a.tracks) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ni; ++i) {
      if (track_of.at(a.instances[i]) == track) members.push_back(i);
    }
    CostCube sub(ns);
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t i : members) sub[s].push_back(cube[s][i]);
    }
    const std::vector<WinCount> wins = win_tables(sub);
    for (std::size_t s = 0; s < ns; ++s) {
      TrackSummary summary;
      summary.solver = a.solvers[s];
      summary.track = track;
      summary.instances = members.size();
      summary.wins = wins[s];
      std::vector<std::optional<double>> scores;
      std::vector<std::vector<double>> run_aucs;
      double flat_sum = 0.0;
      std::size_t flat_n = 0;
      for (std::size_t i : members) {
        scores.push_back(a.instance_scores[s][i]);
        std::vector<double> aucs;
        for (const RunRecord* r : cells[s][i]) {
          aucs.push_back(auc(ecdf_curve(r->trajectory, a.targets.at(a.instances[i]), grid, axis)));
          flat_sum += aucs.back();
          ++flat_n;
        }
        run_aucs.push_back(std::move(aucs));
      }
      summary.score = score_aggregate(scores);
      summary.auc = aggregate_auc(run_aucs);
      summary.auc_flat = flat_n == 0 ? 0.0 : flat_sum / static_cast<double>(flat_n);
      a.summaries.push_back(std::move(summary));
    }
  }
  return a;
}

std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return std::string(buf, ptr);
}

std::string sanitize_name(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out.push_back(keep ? c : '_');
  }
  return out.empty() ? "_" : out;
}

namespace {

class CsvFile {
 public:
  explicit CsvFile(std::filesystem::path path) : path_(std::move(path)), out_(path_, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path_.string() + " for writing");
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k > 0) out_ << ',';
      out_ << quote(cells[k]);
    }
    out_ << '\n';
  }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("failed writing " + path_.string());
  }

 private:
  static std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string q = "\"";
    for (char c : cell) {
      if (c == '"') q.push_back('"');
      q.push_back(c);
    }
    return q + "\"";
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

std::string cell(const std::optional<double>& v) { return v ? format_real(*v) : std::string{}; }

void write_matrix(const std::filesystem::path& path, const Assessment& a,
                  const std::vector<std::vector<std::optional<double>>>& matrix) {
  CsvFile csv(path);
  std::vector<std::string> header{"solver"};
  header.insert(header.end(), a.instances.begin(), a.instances.end());
  csv.row(header);
  for (std::size_t s = 0; s < a.solvers.size(); ++s) {
    std::vector<std::string> row{a.solvers[s]};
    for (const auto& v : matrix[s]) row.push_back(cell(v));
    csv.row(row);
  }
  csv.close();
}

}  // namespace

void emit_reports(const Assessment& a, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  write_matrix(dir / "heat_scores.csv", a, a.instance_scores);
  write_matrix(dir / "heat_auc.csv", a, a.instance_auc);

  CsvFile scores(dir / "scores.csv");
  CsvFile aucs(dir / "auc.csv");
  CsvFile wins(dir / "wins.csv");
  scores.row({"solver", "track", "instances", "score"});
  aucs.row({"solver", "track", "instances", "auc", "auc_flat"});
  wins.row({"solver", "track", "instances", "best_of_runs", "avg_of_runs"});
  for (const TrackSummary& t : a.summaries) {
    const std::string n = std::to_string(t.instances);
    scores.row({t.solver, t.track, n, cell(t.score)});
    aucs.row({t.solver, t.track, n, format_real(t.auc), format_real(t.auc_flat)});
    wins.row({t.solver, t.track, n, std::to_string(t.wins.best_of_runs),
              std::to_string(t.wins.avg_of_runs)});
  }
  scores.close();
  aucs.close();
  wins.close();

  for (const SolverCurve& c : a.curves) {
    CsvFile csv(dir / ("curve_" + sanitize_name(c.solver) + ".csv"));
    csv.row({"time", "mean", "ci_half_width", "mean_by_instance"});
    for (std::size_t j = 0; j < c.mean.grid.size(); ++j) {
      csv.row({format_real(c.mean.grid.points[j]), format_real(c.mean.values[j]),
               format_real(c.ci_half_width[j]), format_real(c.mean_by_instance.values[j])});
    }
    csv.close();
  }
}

}  // namespace amx
