#include "anytime_maxsat/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace amx {

void SolverConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
    }
  };
  prob(smooth_prob, "smooth_prob");
  prob(random_walk_prob, "random_walk_prob");
  if (hard_weight_inc < 1) throw std::invalid_argument("hard_weight_inc must be >= 1");
  if (soft_weight_cap < 1) throw std::invalid_argument("soft_weight_cap must be >= 1");
  if (bms_size < 1) throw std::invalid_argument("bms_size must be >= 1");
  if (restart_flips && *restart_flips == 0) {
    throw std::invalid_argument("restart_flips must be positive when set");
  }
}

Budget Budget::seconds(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("budget must be positive");
  return Budget{Mode::wall_clock, s};
}

Budget Budget::flips(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("budget must be positive");
  return Budget{Mode::flips, static_cast<double>(n)};
}

Budget Budget::parse(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid budget '" + text + "'");
  }
  std::string suffix = text.substr(used);
  if (suffix.empty() || suffix == "s") return seconds(value);
  if (suffix == "f" || suffix == "flips") {
    if (value < 1.0 || value != std::floor(value)) {
      throw std::invalid_argument("flip budget must be a positive integer: '" + text + "'");
    }
    return flips(static_cast<std::uint64_t>(value));
  }
  throw std::invalid_argument("invalid budget suffix in '" + text + "' (use s or f)");
}

std::string Budget::to_string() const {
  std::ostringstream out;
  if (mode == Mode::flips) {
    out << static_cast<std::uint64_t>(limit) << 'f';
  } else {
    out << limit << 's';
  }
  return out.str();
}

LocalSearch::LocalSearch(const WcnfInstance& instance, const SolverConfig& config)
    : config_(config),
      num_vars_(instance.num_vars()),
      num_hard_(static_cast<std::uint32_t>(instance.hard_clauses().size())),
      constant_cost_(instance.constant_cost()),
      rng_(config.seed) {
  config_.validate();
  const std::size_t m = instance.num_clauses();
  clause_begin_.reserve(m + 1);
  orig_weight_.reserve(m);
  occurs_.resize(num_vars_ + 1);

  auto add_clause = [this](const Clause& c) {
    auto id = static_cast<std::uint32_t>(orig_weight_.size());
    clause_begin_.push_back(static_cast<std::uint32_t>(lits_.size()));
    for (const Literal& l : c.literals) {
      lits_.push_back(Lit{l.variable, !l.negated});
      occurs_[l.variable].push_back(Occurrence{id, !l.negated});
    }
    orig_weight_.push_back(c.hard ? 0 : c.weight);
  };
  for (const Clause& c : instance.hard_clauses()) add_clause(c);
  for (const Clause& c : instance.soft_clauses()) add_clause(c);
  clause_begin_.push_back(static_cast<std::uint32_t>(lits_.size()));

  // Soft scores hold cap * weight sums; scale weights down if that could overflow.
  const auto limit = static_cast<Cost>(std::numeric_limits<std::int64_t>::max() / 4) /
                     static_cast<Cost>(config_.soft_weight_cap);
  Cost total = 0;
  for (Cost w : orig_weight_) total += w;
  unsigned shift = 0;
  while ((total >> shift) + m > limit && shift < 63) ++shift;
  score_weight_.resize(m, 0);
  for (std::uint32_t c = num_hard_; c < m; ++c) {
    score_weight_[c] = static_cast<std::int64_t>(std::max<Cost>(1, orig_weight_[c] >> shift));
  }

  value_.assign(num_vars_ + 1, 0);
  sat_count_.assign(m, 0);
  sat_xor_.assign(m, 0);
  dyn_weight_.assign(m, 1);
  hscore_.assign(num_vars_ + 1, 0);
  sscore_.assign(num_vars_ + 1, 0);
  last_flip_.assign(num_vars_ + 1, 0);
  false_pos_.assign(m, 0);
  decreasing_pos_.assign(num_vars_ + 1, -1);

  randomize_assignment();
}

double LocalSearch::uniform01() {
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

std::uint32_t LocalSearch::uniform_index(std::size_t n) {
  return static_cast<std::uint32_t>(rng_() % n);
}

void LocalSearch::randomize_assignment() {
  for (std::uint32_t v = 1; v <= num_vars_; ++v) value_[v] = static_cast<char>(rng_() & 1U);
  rebuild_state();
}

bool LocalSearch::is_decreasing(std::uint32_t v) const {
  return hscore_[v] > 0 || (hscore_[v] == 0 && sscore_[v] > 0);
}

void LocalSearch::refresh_decreasing(std::uint32_t v) {
  const bool want = is_decreasing(v);
  const bool have = decreasing_pos_[v] >= 0;
  if (want == have) return;
  if (want) {
    decreasing_pos_[v] = static_cast<std::int64_t>(decreasing_.size());
    decreasing_.push_back(v);
  } else {
    const auto pos = static_cast<std::size_t>(decreasing_pos_[v]);
    const std::uint32_t last = decreasing_.back();
    decreasing_[pos] = last;
    decreasing_pos_[last] = static_cast<std::int64_t>(pos);
    decreasing_.pop_back();
    decreasing_pos_[v] = -1;
  }
}

void LocalSearch::add_score(std::uint32_t v, std::uint32_t c, std::int64_t delta) {
  (is_hard(c) ? hscore_ : sscore_)[v] += delta;
  refresh_decreasing(v);
}

void LocalSearch::mark_false(std::uint32_t c) {
  auto& stack = is_hard(c) ? hard_false_ : soft_false_;
  false_pos_[c] = static_cast<std::uint32_t>(stack.size());
  stack.push_back(c);
  if (!is_hard(c)) soft_cost_ += orig_weight_[c];
}

void LocalSearch::mark_true(std::uint32_t c) {
  auto& stack = is_hard(c) ? hard_false_ : soft_false_;
  const std::uint32_t last = stack.back();
  stack[false_pos_[c]] = last;
  false_pos_[last] = false_pos_[c];
  stack.pop_back();
  if (!is_hard(c)) soft_cost_ -= orig_weight_[c];
}

void LocalSearch::rebuild_state() {
  const auto m = static_cast<std::uint32_t>(sat_count_.size());
  hard_false_.clear();
  soft_false_.clear();
  decreasing_.clear();
  std::fill(decreasing_pos_.begin(), decreasing_pos_.end(), -1);
  std::fill(hscore_.begin(), hscore_.end(), 0);
  std::fill(sscore_.begin(), sscore_.end(), 0);
  soft_cost_ = constant_cost_;

  for (std::uint32_t c = 0; c < m; ++c) {
    sat_count_[c] = 0;
    sat_xor_[c] = 0;
    for (std::uint32_t k = clause_begin_[c]; k < clause_begin_[c + 1]; ++k) {
      if (lit_true(lits_[k])) {
        ++sat_count_[c];
        sat_xor_[c] ^= lits_[k].variable;
      }
    }
    auto& score = is_hard(c) ? hscore_ : sscore_;
    if (sat_count_[c] == 0) {
      mark_false(c);
      for (std::uint32_t k = clause_begin_[c]; k < clause_begin_[c + 1]; ++k) {
        score[lits_[k].variable] += mass(c);
      }
    } else if (sat_count_[c] == 1) {
      score[sat_xor_[c]] -= mass(c);
    }
  }
  for (std::uint32_t v = 1; v <= num_vars_; ++v) refresh_decreasing(v);
}

void LocalSearch::flip(std::uint32_t v) {
  value_[v] = static_cast<char>(!value_[v]);
  for (const Occurrence& occ : occurs_[v]) {
    const std::uint32_t c = occ.clause;
    const std::int64_t w = mass(c);
    if ((value_[v] != 0) == occ.positive) {
      ++sat_count_[c];
      if (sat_count_[c] == 1) {
        mark_true(c);
        for (std::uint32_t k = clause_begin_[c]; k < clause_begin_[c + 1]; ++k) {
          add_score(lits_[k].variable, c, -w);
        }
        add_score(v, c, -w);
      } else if (sat_count_[c] == 2) {
        add_score(sat_xor_[c], c, w);
      }
      sat_xor_[c] ^= v;
    } else {
      --sat_count_[c];
      sat_xor_[c] ^= v;
      if (sat_count_[c] == 0) {
        mark_false(c);
        for (std::uint32_t k = clause_begin_[c]; k < clause_begin_[c + 1]; ++k) {
          add_score(lits_[k].variable, c, w);
        }
        add_score(v, c, w);
      } else if (sat_count_[c] == 1) {
        add_score(sat_xor_[c], c, -w);
      }
    }
  }
  ++flips_;
  last_flip_[v] = flips_;
}

void LocalSearch::update_weights() {
  const auto m = static_cast<std::uint32_t>(sat_count_.size());
  if (uniform01() < config_.smooth_prob) {
    for (std::uint32_t c = num_hard_; c < m; ++c) {
      if (sat_count_[c] == 0 || dyn_weight_[c] <= 1) continue;
      --dyn_weight_[c];
      if (sat_count_[c] == 1) add_score(sat_xor_[c], c, score_weight_[c]);
    }
    return;
  }
  for (std::uint32_t c : hard_false_) {
    dyn_weight_[c] += config_.hard_weight_inc;
    for (std::uint32_t k = clause_begin_[c]; k < clause_begin_[c + 1]; ++k) {
      add_score(lits_[k].variable, c, config_.hard_weight_inc);
    }
  }
  for (std::uint32_t c : soft_false_) {
    if (dyn_weight_[c] >= config_.soft_weight_cap) continue;
    ++dyn_weight_[c];
    for (std::uint32_t k = clause_begin_[c]; k < clause_begin_[c + 1]; ++k) {
      add_score(lits_[k].variable, c, score_weight_[c]);
    }
  }
}

bool LocalSearch::better(std::uint32_t a, std::uint32_t b) const {
  if (hscore_[a] != hscore_[b]) return hscore_[a] > hscore_[b];
  if (sscore_[a] != sscore_[b]) return sscore_[a] > sscore_[b];
  if (last_flip_[a] != last_flip_[b]) return last_flip_[a] < last_flip_[b];
  return a < b;
}

std::uint32_t LocalSearch::pick_bms() {
  std::uint32_t best = decreasing_[uniform_index(decreasing_.size())];
  for (std::uint32_t k = 1; k < config_.bms_size; ++k) {
    const std::uint32_t cand = decreasing_[uniform_index(decreasing_.size())];
    if (better(cand, best)) best = cand;
  }
  return best;
}

std::uint32_t LocalSearch::pick_in_clause(std::uint32_t c) {
  const std::uint32_t begin = clause_begin_[c];
  const std::uint32_t len = clause_begin_[c + 1] - begin;
  if (uniform01() < config_.random_walk_prob) return lits_[begin + uniform_index(len)].variable;
  std::uint32_t best = lits_[begin].variable;
  for (std::uint32_t k = begin + 1; k < begin + len; ++k) {
    if (better(lits_[k].variable, best)) best = lits_[k].variable;
  }
  return best;
}

bool LocalSearch::step() {
  if (!decreasing_.empty()) {
    flip(pick_bms());
    return true;
  }
  if (hard_false_.empty() && soft_false_.empty()) return false;
  update_weights();
  const std::uint32_t c = !hard_false_.empty()
                              ? hard_false_[uniform_index(hard_false_.size())]
                              : soft_false_[uniform_index(soft_false_.size())];
  flip(pick_in_clause(c));
  return true;
}

Assignment LocalSearch::assignment() const {
  Assignment a(num_vars_);
  for (std::uint32_t v = 1; v <= num_vars_; ++v) a.set(v, value_[v] != 0);
  return a;
}

std::size_t LocalSearch::verify_bookkeeping() const {
  const auto m = static_cast<std::uint32_t>(sat_count_.size());
  std::size_t mismatches = 0;
  std::vector<std::int64_t> hscore(num_vars_ + 1, 0), sscore(num_vars_ + 1, 0);
  std::size_t hard_false = 0, soft_false = 0;
  Cost soft_cost = constant_cost_;

  for (std::uint32_t c = 0; c < m; ++c) {
    std::uint32_t count = 0, x = 0;
    for (std::uint32_t k = clause_begin_[c]; k < clause_begin_[c + 1]; ++k) {
      if (lit_true(lits_[k])) {
        ++count;
        x ^= lits_[k].variable;
      }
    }
    if (count != sat_count_[c]) ++mismatches;
    if (count == 1 && x != sat_xor_[c]) ++mismatches;
    auto& score = is_hard(c) ? hscore : sscore;
    if (count == 0) {
      const auto& stack = is_hard(c) ? hard_false_ : soft_false_;
      if (false_pos_[c] >= stack.size() || stack[false_pos_[c]] != c) ++mismatches;
      (is_hard(c) ? hard_false : soft_false) += 1;
      if (!is_hard(c)) soft_cost += orig_weight_[c];
      for (std::uint32_t k = clause_begin_[c]; k < clause_begin_[c + 1]; ++k) {
        score[lits_[k].variable] += mass(c);
      }
    } else if (count == 1) {
      score[x] -= mass(c);
    }
  }
  if (hard_false != hard_false_.size()) ++mismatches;
  if (soft_false != soft_false_.size()) ++mismatches;
  if (soft_cost != soft_cost_) ++mismatches;

  std::size_t decreasing = 0;
  for (std::uint32_t v = 1; v <= num_vars_; ++v) {
    if (hscore[v] != hscore_[v]) ++mismatches;
    if (sscore[v] != sscore_[v]) ++mismatches;
    const bool want = hscore[v] > 0 || (hscore[v] == 0 && sscore[v] > 0);
    if (want) ++decreasing;
    if (want != (decreasing_pos_[v] >= 0)) ++mismatches;
  }
  if (decreasing != decreasing_.size()) ++mismatches;
  return mismatches;
}

RunResult solve(const WcnfInstance& instance, const SolverConfig& config, const Budget& budget,
                const SolveOptions& options) {
  config.validate();
  if (!(budget.limit > 0.0)) throw std::invalid_argument("budget must be positive");
  RunResult result;
  if (instance.trivially_infeasible()) return result;

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [start] {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };

  LocalSearch search(instance, config);
  std::uint64_t last_improvement = 0;

  auto observe = [&] {
    if (!search.feasible()) return;
    if (result.best_cost && search.soft_cost() >= *result.best_cost) return;
    result.best_cost = search.soft_cost();
    result.best_assignment = search.assignment();
    result.trajectory.push_back(TrajectoryEvent{elapsed(), search.flips(), search.soft_cost()});
    if (options.keep_event_assignments) result.event_assignments.push_back(*result.best_assignment);
    last_improvement = search.flips();
  };
  // Nothing can beat a solution that only pays for empty soft clauses.
  auto optimal = [&] { return result.best_cost && *result.best_cost == instance.constant_cost(); };

  observe();
  const bool by_flips = budget.mode == Budget::Mode::flips;
  const auto flip_limit = by_flips ? static_cast<std::uint64_t>(budget.limit) : 0;
  std::uint64_t since_restart = 0;
  while (!optimal()) {
    if (by_flips) {
      if (search.flips() >= flip_limit) break;
    } else if ((search.flips() & 1023U) == 0 && elapsed() >= budget.limit) {
      break;
    }
    if (!search.step()) break;
    ++since_restart;
    observe();
    if (config.restart_flips && search.flips() - last_improvement >= *config.restart_flips &&
        since_restart >= *config.restart_flips) {
      search.randomize_assignment();
      since_restart = 0;
      observe();
    }
  }
  result.total_flips = search.flips();
  result.total_elapsed = elapsed();
  return result;
}

bool check_solution(const WcnfInstance& instance, const RunResult& result) {
  if (!result.best_assignment || !result.best_cost) return false;
  if (result.best_assignment->size() != instance.num_vars()) return false;
  const CostReport report = evaluate(instance, *result.best_assignment);
  return report.feasible && report.soft_cost == *result.best_cost;
}

}  // namespace amx
