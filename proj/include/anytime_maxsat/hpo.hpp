#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "anytime_maxsat/assess.hpp"
#include "anytime_maxsat/solver.hpp"
#include "anytime_maxsat/wcnf.hpp"

namespace amx {

enum class ParamKind { real, integer, categorical };

using ParamValue = std::variant<double, std::int64_t, std::string>;

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::real;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::string> categories;
  ParamValue default_value;
};

/// Parameter name to value.
using Configuration = std::map<std::string, ParamValue>;

std::string to_string(const ParamValue& value);
nlohmann::json to_json(const Configuration& config);

/// The searchable parameter domain.
class ParamSpace {
 public:
  ParamSpace() = default;
  explicit ParamSpace(std::vector<ParamSpec> specs);

  /// The solver's knobs with their default values and tuning ranges.
  static ParamSpace solver_space();
  /// {"params": [{"name", "type": real|integer|categorical, "lower", "upper",
  ///  "values", "default"}]}
  static ParamSpace from_json(const nlohmann::json& doc);
  static ParamSpace load(const std::filesystem::path& path);

  const std::vector<ParamSpec>& specs() const { return specs_; }
  const ParamSpec* find(const std::string& name) const;

  Configuration defaults() const;
  Configuration sample(std::mt19937_64& rng) const;
  /// Throws std::invalid_argument for unknown names, missing parameters or
  /// out-of-domain values.
  void validate(const Configuration& config) const;
  /// Parses "name=value" against the parameter's kind.
  std::pair<std::string, ParamValue> parse_assignment(const std::string& text) const;

 private:
  std::vector<ParamSpec> specs_;
};

/// Maps a configuration onto solver settings. restart_flips = 0 means no restarts.
/// Unknown names throw std::invalid_argument.
SolverConfig to_solver_config(const Configuration& config, std::uint64_t seed);

enum class CostMode { best_f, ecdf_prime };

CostMode parse_cost_mode(const std::string& text);
std::string to_string(CostMode mode);

struct CostValue {
  CostMode mode = CostMode::best_f;
  double value = 0.0;  // lower is better
};

struct BootstrapTargets {
  std::vector<Cost> targets;
  Cost f_init_min = 0;
  Cost f_init_max = 0;
  bool empty_flagged = false;
};

/// Five linearly spaced targets between the best and worst feasible costs of
/// the initial run. Intermediate values are floored to integers: for integer
/// costs c and a real target f, f >= c exactly when floor(f) >= c.
BootstrapTargets bootstrap_targets(const RunResult& initial_run);

/// Evaluation times for a tuning budget: t_budget minus 50 log-spaced offsets
/// in [tau_min, t_budget], clamped at 0, ascending and distinct.
TimeGrid hpo_time_grid(double t_budget, double tau_min = 0.1);

/// Grid for a run budget. Seconds use tau_min = 0.1; flip budgets keep the
/// same 1:1000 span and use tau_min = limit / 1000.
TimeGrid hpo_time_grid(const Budget& budget);

/// Best cost at the budget, or total soft weight + 1 when infeasible.
CostValue cost_bestf(const RunResult& run, const WcnfInstance& instance);

/// Negated sum over the grid of the number of targets not better than the
/// best cost at each time. 0 when the target set is empty.
CostValue cost_ecdf_prime(const RunResult& run, std::span<const Cost> targets,
                          const TimeGrid& grid, TimeAxis axis = TimeAxis::seconds);

/// Per-instance target sets for a tuning session, optionally persisted as a
/// JSON document keyed by instance id. All mutations go through one mutex and
/// merge by set union.
class HpoTargetStore {
 public:
  struct Entry {
    std::vector<Cost> targets;
    Cost f_init_min = 0;
    Cost f_init_max = 0;
  };

  HpoTargetStore() = default;
  explicit HpoTargetStore(std::filesystem::path path);

  bool contains(const std::string& instance) const;
  std::vector<Cost> targets(const std::string& instance) const;
  std::optional<Entry> entry(const std::string& instance) const;

  void put_bootstrap(const std::string& instance, const BootstrapTargets& boot);
  /// Adds new_best when it is strictly below the current minimum. Returns
  /// whether the set changed. Persists on change.
  bool update(const std::string& instance, Cost new_best);

  nlohmann::json to_json() const;
  void save() const;

 private:
  void save_locked() const;

  mutable std::mutex mutex_;
  std::map<std::string, Entry> entries_;
  std::optional<std::filesystem::path> path_;
};

/// Pure form of the target update rule.
std::vector<Cost> update_targets(std::vector<Cost> targets, Cost new_best);

/// One cost-function evaluation as written to the tuning trace.
struct EvalRecord {
  Configuration config;
  std::string instance;
  std::uint64_t seed = 0;
  CostMode mode = CostMode::best_f;
  double cost = 0.0;
  double wall_time = 0.0;
  std::optional<Cost> best_cost;

  nlohmann::json to_json() const;
};

struct EvalContext {
  Budget budget = Budget::flips(100000);
  HpoTargetStore* store = nullptr;           // required for ecdf-prime
  std::function<void(const EvalRecord&)> on_record;  // session log
};

TimeAxis axis_of(const Budget& budget);

/// Runs the solver once with the configuration and returns the requested cost.
/// With ecdf-prime the store must hold targets for the instance. Applies the
/// target update rule whenever the store knows the instance.
CostValue evaluate(const Configuration& config, const ParamSpace& space,
                   const WcnfInstance& instance, std::uint64_t seed, CostMode mode,
                   EvalContext& context);

/// Runs the default configuration on the instance and stores bootstrap targets
/// unless the store already has them.
void ensure_bootstrapped(const WcnfInstance& instance, const ParamSpace& space,
                         std::uint64_t seed, const Budget& budget, HpoTargetStore& store);

struct TuneOptions {
  CostMode mode = CostMode::ecdf_prime;
  std::size_t eval_budget = 30;
  std::uint64_t seed = 1;
  Budget budget = Budget::flips(100000);
  std::function<void(const EvalRecord&)> on_record;
};

struct TuneResult {
  Configuration best;
  std::size_t best_index = 0;
  std::vector<Configuration> candidates;
  std::vector<double> mean_costs;
  std::vector<EvalRecord> trace;
  bool all_infeasible = false;
};

/// Random search: candidate 0 is the default configuration, the rest are drawn
/// uniformly from the space. Every candidate is evaluated once per training
/// instance with a fixed per-instance seed; the lowest mean cost wins, ties
/// going to the earlier candidate.
TuneResult tune(const ParamSpace& space, std::span<const WcnfInstance> training,
                const TuneOptions& options, HpoTargetStore& store);

/// Per-instance seed derived from a session seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace amx
