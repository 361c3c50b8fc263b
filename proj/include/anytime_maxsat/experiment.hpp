#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "anytime_maxsat/assess.hpp"
#include "anytime_maxsat/hpo.hpp"
#include "anytime_maxsat/solver.hpp"
#include "anytime_maxsat/wcnf.hpp"

namespace amx {

struct NamedConfig {
  std::string name;
  Configuration params;
};

/// The run matrix: every config x instance x seed cell is one solver run.
struct ExperimentPlan {
  std::vector<NamedConfig> configs;
  std::vector<std::string> instances;  // paths or glob patterns
  std::vector<std::uint64_t> seeds;
  Budget budget = Budget::seconds(10.0);
  std::filesystem::path out_dir = "runs";
  std::size_t threads = 0;  // 0: ANYTIME_MAXSAT_THREADS or cores - 1

  /// Throws std::invalid_argument when a list is empty or a config is invalid.
  void validate(const ParamSpace& space) const;
};

/// INI-style plan file:
///
///   instances = bench/*.wcnf, extra/a.wcnf
///   seeds = 1, 2, 3
///   budget = 10s
///   out = results
///   threads = 4
///   configs = default, greedy
///
///   [greedy]
///   random_walk_prob = 0.01
///
/// Every listed config starts from the space defaults; its section overrides them.
ExperimentPlan load_plan(const std::filesystem::path& path, const ParamSpace& space);

/// Expands glob patterns (sorted, deduplicated). Patterns without matches are
/// kept verbatim so that the missing file surfaces as a failed cell.
std::vector<std::string> expand_instances(const std::vector<std::string>& patterns);

/// Worker count: ANYTIME_MAXSAT_THREADS when set, else max(1, cores - 1).
std::size_t default_parallelism();

/// Directory name holding the instance, used as its benchmark track.
std::string track_of(const std::string& instance_path);
/// File name without directory and extensions.
std::string instance_id(const std::string& instance_path);

/// One JSONL line of a run log.
struct LogRecord {
  std::string solver;
  Configuration params;
  std::string instance;
  std::string instance_path;
  std::string track;
  std::uint64_t seed = 0;
  Budget budget;
  bool ok = true;
  std::string error;
  Trajectory events;
  std::uint64_t total_flips = 0;
  double total_elapsed = 0.0;

  nlohmann::json to_json() const;
  static LogRecord from_json(const nlohmann::json& j);
};

struct RunSummary {
  std::size_t records = 0;
  std::vector<std::string> failures;  // "config/instance/seed: reason"
  std::vector<std::filesystem::path> log_files;
};

/// Executes every cell, writing runs_<config>.jsonl files into plan.out_dir.
/// A completed file ends with a footer line {"end": true, "records": N}.
/// Failed cells (unreadable instance, solver error) become failure records.
RunSummary cmd_run(const ExperimentPlan& plan, const ParamSpace& space);

struct LoadedLogs {
  std::vector<LogRecord> records;                  // sorted by solver, instance, seed
  std::vector<std::filesystem::path> skipped_files;  // missing footer
};

/// Reads every *.jsonl file in the directory. Files without the footer line
/// (interrupted writers) are skipped.
LoadedLogs read_run_logs(const std::filesystem::path& dir);

struct AssessOptions {
  std::optional<double> t_min;  // default 0.1 s, or t_max / 3000 flips
  std::optional<double> t_max;  // default: largest budget in the logs
  std::size_t points = 100;
  GridScale scale = GridScale::log;
};

/// Reads logs, assesses every successful run and writes the CSV reports.
Assessment cmd_assess(const std::filesystem::path& log_dir, const std::filesystem::path& out_dir,
                      const AssessOptions& options);

enum class GenKind { random_wpms, staircase };

GenKind parse_gen_kind(const std::string& text);

struct GenParams {
  std::uint32_t num_vars = 12;
  std::size_t num_clauses = 40;  // random-wpms only
  double hard_fraction = 0.25;   // random-wpms only
  Weight max_weight = 10;
  std::uint32_t block = 4;       // staircase only
};

/// random-wpms: 3-literal clauses over distinct variables, every variable used,
/// hard clauses satisfied by a hidden planted assignment.
/// staircase: consecutive gadgets of roughly `block` variables. Inside a
/// gadget, all-false is a local optimum and all-true is one unit cheaper; any
/// mixed assignment costs more than either. A hard clause lets a gadget switch
/// on only after the previous one has, so the unique optimum is all-true and
/// progress towards it comes in steps.
WcnfInstance generate_instance(GenKind kind, const GenParams& params, std::uint64_t seed,
                               std::string name = {});

void write_text_file(const std::filesystem::path& path, const std::string& text);

struct TuneCommand {
  std::optional<std::filesystem::path> space_file;
  std::vector<std::string> instances;  // paths or globs
  double train_fraction = 0.2;
  CostMode mode = CostMode::ecdf_prime;
  Budget budget = Budget::flips(100000);
  std::size_t eval_budget = 30;
  std::uint64_t seed = 1;
  std::size_t repetitions = 1;
  std::filesystem::path out_dir = "tune";
};

struct TuneOutcome {
  std::vector<Configuration> winners;  // one per repetition
  std::vector<std::filesystem::path> winner_files;
};

/// Runs the built-in tuner `repetitions` times with independent target stores,
/// writing winner_<r>.json, trace_<r>.jsonl and targets_<r>.json per repetition.
TuneOutcome cmd_tune(const TuneCommand& command);

/// Deterministic training subset: a seeded shuffle, at least one instance.
std::vector<std::string> split_training(const std::vector<std::string>& instances,
                                        double fraction, std::uint64_t seed);

}  // namespace amx
