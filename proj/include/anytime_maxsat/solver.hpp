#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "anytime_maxsat/wcnf.hpp"

namespace amx {

/// Parameters of the clause-weighting local search. The field set is the
/// configuration space exposed to tuning.
struct SolverConfig {
  std::uint64_t seed = 1;
  double smooth_prob = 0.0003;
  std::int64_t hard_weight_inc = 1;
  /// Upper bound on the dynamic multiplier of a soft clause.
  std::int64_t soft_weight_cap = 100;
  std::uint32_t bms_size = 15;
  double random_walk_prob = 0.15;
  /// Flips without a new best before the assignment is re-randomized.
  std::optional<std::uint64_t> restart_flips;

  /// Throws std::invalid_argument when a field is out of its domain.
  void validate() const;
};

struct Budget {
  enum class Mode { wall_clock, flips };
  Mode mode = Mode::flips;
  double limit = 1e6;  // seconds or flips

  static Budget seconds(double s);
  static Budget flips(std::uint64_t n);

  /// "10", "10s", "2.5s" are seconds; "1000f", "1e6flips" are flips.
  static Budget parse(const std::string& text);
  std::string to_string() const;
};

struct TrajectoryEvent {
  double elapsed = 0.0;
  std::uint64_t flips = 0;
  Cost cost = 0;

  bool operator==(const TrajectoryEvent&) const = default;
};

using Trajectory = std::vector<TrajectoryEvent>;

struct RunResult {
  Trajectory trajectory;
  std::optional<Cost> best_cost;
  std::optional<Assignment> best_assignment;
  std::uint64_t total_flips = 0;
  double total_elapsed = 0.0;
  /// One assignment per trajectory event; only filled with SolveOptions::keep_event_assignments.
  std::vector<Assignment> event_assignments;
};

struct SolveOptions {
  bool keep_event_assignments = false;
};

/// Incremental state of one local-search run. Exposed so that tests can step
/// the search and compare the maintained bookkeeping with a full recomputation.
class LocalSearch {
 public:
  LocalSearch(const WcnfInstance& instance, const SolverConfig& config);

  /// Draws a fresh uniformly random assignment; clause weights are kept.
  void randomize_assignment();
  /// Performs one iteration (weight update and/or one flip).
  /// Returns false when every clause is satisfied and nothing is left to do.
  bool step();

  bool feasible() const { return hard_false_.empty(); }
  std::size_t hard_violations() const { return hard_false_.size(); }
  Cost soft_cost() const { return soft_cost_; }
  std::uint64_t flips() const { return flips_; }
  Assignment assignment() const;

  /// Recomputes every incrementally maintained quantity from scratch and
  /// returns the number of mismatches found.
  std::size_t verify_bookkeeping() const;

 private:
  struct Occurrence {
    std::uint32_t clause;
    bool positive;  // literal is x, not ¬x
  };
  struct Lit {
    std::uint32_t variable;
    bool positive;
  };

  bool is_hard(std::uint32_t c) const { return c < num_hard_; }
  std::int64_t mass(std::uint32_t c) const {
    return is_hard(c) ? dyn_weight_[c] : dyn_weight_[c] * score_weight_[c];
  }
  bool lit_true(const Lit& l) const { return value_[l.variable] == l.positive; }
  void add_score(std::uint32_t v, std::uint32_t c, std::int64_t delta);
  bool is_decreasing(std::uint32_t v) const;
  void refresh_decreasing(std::uint32_t v);
  void mark_false(std::uint32_t c);
  void mark_true(std::uint32_t c);
  void rebuild_state();
  void flip(std::uint32_t v);
  void update_weights();
  std::uint32_t pick_bms();
  std::uint32_t pick_in_clause(std::uint32_t c);
  bool better(std::uint32_t a, std::uint32_t b) const;
  double uniform01();
  std::uint32_t uniform_index(std::size_t n);

  SolverConfig config_;
  std::uint32_t num_vars_;
  std::uint32_t num_hard_;
  Cost constant_cost_;

  std::vector<std::uint32_t> clause_begin_;  // size m + 1
  std::vector<Lit> lits_;
  std::vector<std::vector<Occurrence>> occurs_;  // indexed by variable
  std::vector<Cost> orig_weight_;                // soft weights, 0 for hard
  std::vector<std::int64_t> score_weight_;       // scaled soft weights used in scoring

  std::vector<char> value_;  // indexed by variable, [0] unused
  std::vector<std::uint32_t> sat_count_;
  std::vector<std::uint32_t> sat_xor_;
  std::vector<std::int64_t> dyn_weight_;
  std::vector<std::int64_t> hscore_;
  std::vector<std::int64_t> sscore_;
  std::vector<std::uint64_t> last_flip_;

  std::vector<std::uint32_t> hard_false_, soft_false_;
  std::vector<std::uint32_t> false_pos_;  // position in hard_false_/soft_false_
  std::vector<std::uint32_t> decreasing_;
  std::vector<std::int64_t> decreasing_pos_;  // -1 when absent
  Cost soft_cost_ = 0;
  std::uint64_t flips_ = 0;

  std::mt19937_64 rng_;
};

/// Runs the local search until the budget is spent and records every
/// improvement of the best feasible soft cost.
RunResult solve(const WcnfInstance& instance, const SolverConfig& config, const Budget& budget,
                const SolveOptions& options = {});

/// Independent re-evaluation of a result's best assignment.
bool check_solution(const WcnfInstance& instance, const RunResult& result);

}  // namespace amx
