#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace amx {

using Weight = std::uint64_t;
using Cost = std::uint64_t;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Literal {
  std::uint32_t variable = 0;  // 1-based
  bool negated = false;

  static Literal from_dimacs(std::int64_t lit) {
    return Literal{static_cast<std::uint32_t>(lit < 0 ? -lit : lit), lit < 0};
  }
  std::int64_t to_dimacs() const {
    return negated ? -static_cast<std::int64_t>(variable) : static_cast<std::int64_t>(variable);
  }
  bool satisfied_by(bool value) const { return value != negated; }

  auto operator<=>(const Literal&) const = default;
};

struct Clause {
  std::vector<Literal> literals;
  Weight weight = 0;  // 0 for hard clauses
  bool hard = false;

  bool operator==(const Clause&) const = default;
};

struct Assignment {
  std::vector<bool> values;  // values[v - 1] is x_v

  Assignment() = default;
  explicit Assignment(std::size_t num_vars, bool value = false) : values(num_vars, value) {}

  std::size_t size() const { return values.size(); }
  bool operator[](std::uint32_t variable) const { return values[variable - 1]; }
  void set(std::uint32_t variable, bool value) { values[variable - 1] = value; }
  void flip(std::uint32_t variable) { values[variable - 1] = !values[variable - 1]; }

  bool operator==(const Assignment&) const = default;
};

struct CostReport {
  std::size_t hard_violations = 0;
  Cost soft_cost = 0;
  bool feasible = true;

  bool operator==(const CostReport&) const = default;
};

/// Immutable (W)PMS instance. Constructed through InstanceBuilder or parse_wcnf.
///
/// Clauses are normalized on insertion: literals are sorted and deduplicated,
/// tautologies are dropped (and counted). Empty clauses never appear in the
/// clause lists: an empty hard clause marks the instance trivially infeasible,
/// an empty soft clause adds its weight to constant_cost().
class WcnfInstance {
 public:
  WcnfInstance() = default;

  const std::string& name() const { return name_; }
  std::uint32_t num_vars() const { return num_vars_; }
  const std::vector<Clause>& hard_clauses() const { return hard_; }
  const std::vector<Clause>& soft_clauses() const { return soft_; }
  std::size_t num_clauses() const { return hard_.size() + soft_.size(); }

  bool trivially_infeasible() const { return trivially_infeasible_; }
  /// Weight of empty soft clauses; falsified by every assignment.
  Cost constant_cost() const { return constant_cost_; }
  /// Sum of all soft weights including constant_cost().
  Cost total_soft_weight() const { return total_soft_weight_; }
  std::size_t dropped_tautologies() const { return dropped_tautologies_; }

  /// Same variables and clauses (names ignored).
  bool same_structure(const WcnfInstance& other) const;

 private:
  friend class InstanceBuilder;

  std::string name_;
  std::uint32_t num_vars_ = 0;
  std::vector<Clause> hard_;
  std::vector<Clause> soft_;
  bool trivially_infeasible_ = false;
  Cost constant_cost_ = 0;
  Cost total_soft_weight_ = 0;
  std::size_t dropped_tautologies_ = 0;
};

class InstanceBuilder {
 public:
  explicit InstanceBuilder(std::string name = {}) { instance_.name_ = std::move(name); }

  /// Fixes the variable count. Without it, num_vars is the largest index seen.
  InstanceBuilder& declare_num_vars(std::uint32_t n);
  InstanceBuilder& add_hard(std::vector<Literal> literals);
  /// Throws std::invalid_argument on weight 0 or soft-weight sum overflow.
  InstanceBuilder& add_soft(Weight weight, std::vector<Literal> literals);

  WcnfInstance build() &&;

 private:
  bool normalize(std::vector<Literal>& literals);
  void observe(const std::vector<Literal>& literals);

  WcnfInstance instance_;
  std::uint32_t max_var_ = 0;
  bool declared_ = false;
};

/// Parses either WCNF dialect: the post-2022 format (`h` for hard clauses, no
/// header) or the classic one (`p wcnf n m top`, weight == top means hard).
WcnfInstance parse_wcnf(std::istream& in, std::string name = {});
WcnfInstance parse_wcnf(std::string_view text, std::string name = {});
WcnfInstance load_wcnf(const std::string& path);

/// New-format serialization: hard lines first, then soft lines.
std::string dump_wcnf(const WcnfInstance& instance);

/// Full evaluation; throws std::invalid_argument on a length mismatch.
CostReport evaluate(const WcnfInstance& instance, const Assignment& assignment);

}  // namespace amx
