#include "anytime_maxsat/wcnf.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace amx {

bool WcnfInstance::same_structure(const WcnfInstance& other) const {
  return num_vars_ == other.num_vars_ && hard_ == other.hard_ && soft_ == other.soft_ &&
         trivially_infeasible_ == other.trivially_infeasible_ &&
         constant_cost_ == other.constant_cost_;
}

InstanceBuilder& InstanceBuilder::declare_num_vars(std::uint32_t n) {
  instance_.num_vars_ = n;
  declared_ = true;
  return *this;
}

bool InstanceBuilder::normalize(std::vector<Literal>& literals) {
  std::sort(literals.begin(), literals.end());
  literals.erase(std::unique(literals.begin(), literals.end()), literals.end());
  for (std::size_t i = 1; i < literals.size(); ++i) {
    if (literals[i].variable == literals[i - 1].variable) return false;
  }
  return true;
}

void InstanceBuilder::observe(const std::vector<Literal>& literals) {
  for (const Literal& l : literals) {
    if (l.variable == 0) throw std::invalid_argument("literal with variable index 0");
    if (declared_ && l.variable > instance_.num_vars_) {
      throw std::invalid_argument("variable " + std::to_string(l.variable) +
                                  " exceeds declared count " +
                                  std::to_string(instance_.num_vars_));
    }
    max_var_ = std::max(max_var_, l.variable);
  }
}

InstanceBuilder& InstanceBuilder::add_hard(std::vector<Literal> literals) {
  observe(literals);
  if (literals.empty()) {
    instance_.trivially_infeasible_ = true;
    return *this;
  }
  if (!normalize(literals)) {
    ++instance_.dropped_tautologies_;
    return *this;
  }
  instance_.hard_.push_back(Clause{std::move(literals), 0, true});
  return *this;
}

InstanceBuilder& InstanceBuilder::add_soft(Weight weight, std::vector<Literal> literals) {
  if (weight == 0) throw std::invalid_argument("soft clause weight must be positive");
  observe(literals);
  if (!literals.empty() && !normalize(literals)) {
    ++instance_.dropped_tautologies_;
    return *this;
  }
  Cost sum = 0;
  if (__builtin_add_overflow(instance_.total_soft_weight_, weight, &sum)) {
    throw std::invalid_argument("sum of soft weights overflows 64 bits");
  }
  instance_.total_soft_weight_ = sum;
  if (literals.empty()) {
    instance_.constant_cost_ += weight;
  } else {
    instance_.soft_.push_back(Clause{std::move(literals), weight, false});
  }
  return *this;
}

WcnfInstance InstanceBuilder::build() && {
  if (!declared_) instance_.num_vars_ = max_var_;
  return std::move(instance_);
}

namespace {

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
std::optional<T> to_number(std::string_view token) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

Weight parse_weight(std::string_view token, std::size_t line_no) {
  if (!token.empty() && token.front() == '-') {
    throw ParseError(line_no, "weight must be positive, got " + std::string(token));
  }
  auto w = to_number<Weight>(token);
  if (!w) throw ParseError(line_no, "invalid weight '" + std::string(token) + "'");
  if (*w == 0) throw ParseError(line_no, "weight must be positive, got 0");
  return *w;
}

// Literals of a clause body; tokens must end with a single terminating 0.
std::vector<Literal> parse_body(const std::vector<std::string_view>& tokens, std::size_t first,
                                std::size_t line_no) {
  std::vector<Literal> lits;
  bool terminated = false;
  for (std::size_t k = first; k < tokens.size(); ++k) {
    auto lit = to_number<std::int64_t>(tokens[k]);
    if (!lit) throw ParseError(line_no, "invalid literal '" + std::string(tokens[k]) + "'");
    if (*lit == 0) {
      if (k + 1 != tokens.size()) throw ParseError(line_no, "literal 0 inside clause body");
      terminated = true;
      break;
    }
    if (*lit > std::numeric_limits<std::int32_t>::max() ||
        *lit < -static_cast<std::int64_t>(std::numeric_limits<std::int32_t>::max())) {
      throw ParseError(line_no, "literal out of range");
    }
    lits.push_back(Literal::from_dimacs(*lit));
  }
  if (!terminated) throw ParseError(line_no, "missing terminating 0");
  return lits;
}

}  // namespace

WcnfInstance parse_wcnf(std::istream& in, std::string name) {
  InstanceBuilder builder(std::move(name));
  std::optional<Weight> top;  // set once a classic header is seen
  bool header_seen = false;
  bool clause_seen = false;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tokens = split_tokens(line);
    if (tokens.empty()) continue;
    if (tokens[0].front() == 'c') continue;

    try {
      if (tokens[0] == "p") {
        if (header_seen) throw ParseError(line_no, "duplicate header");
        if (clause_seen) throw ParseError(line_no, "header after clauses");
        if (tokens.size() < 4 || tokens.size() > 5 || tokens[1] != "wcnf") {
          throw ParseError(line_no, "malformed header, expected 'p wcnf <n> <m> [top]'");
        }
        auto n = to_number<std::uint32_t>(tokens[2]);
        auto m = to_number<std::uint64_t>(tokens[3]);
        if (!n || !m) throw ParseError(line_no, "malformed header counts");
        if (tokens.size() == 5) {
          top = to_number<Weight>(tokens[4]);
          if (!top || *top == 0) throw ParseError(line_no, "malformed header top weight");
        }
        builder.declare_num_vars(*n);
        header_seen = true;
        continue;
      }

      clause_seen = true;
      if (tokens[0] == "h") {
        if (header_seen) throw ParseError(line_no, "'h' clause in a file with a 'p wcnf' header");
        builder.add_hard(parse_body(tokens, 1, line_no));
        continue;
      }

      Weight w = parse_weight(tokens[0], line_no);
      auto lits = parse_body(tokens, 1, line_no);
      if (top && w == *top) {
        builder.add_hard(std::move(lits));
      } else {
        if (top && w > *top) throw ParseError(line_no, "weight exceeds top");
        builder.add_soft(w, std::move(lits));
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return std::move(builder).build();
}

WcnfInstance parse_wcnf(std::string_view text, std::string name) {
  std::istringstream in{std::string(text)};
  return parse_wcnf(in, std::move(name));
}

WcnfInstance load_wcnf(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.find('.'); dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
  try {
    return parse_wcnf(in, stem);
  } catch (const ParseError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string dump_wcnf(const WcnfInstance& instance) {
  std::ostringstream out;
  auto body = [&out](const std::vector<Literal>& lits) {
    for (const Literal& l : lits) out << ' ' << l.to_dimacs();
    out << " 0\n";
  };
  if (instance.trivially_infeasible()) out << "h 0\n";
  for (const Clause& c : instance.hard_clauses()) {
    out << 'h';
    body(c.literals);
  }
  if (instance.constant_cost() > 0) out << instance.constant_cost() << " 0\n";
  for (const Clause& c : instance.soft_clauses()) {
    out << c.weight;
    body(c.literals);
  }
  return out.str();
}

CostReport evaluate(const WcnfInstance& instance, const Assignment& assignment) {
  if (assignment.size() != instance.num_vars()) {
    throw std::invalid_argument("assignment has " + std::to_string(assignment.size()) +
                                " values, instance has " + std::to_string(instance.num_vars()) +
                                " variables");
  }
  auto satisfied = [&assignment](const Clause& c) {
    return std::any_of(c.literals.begin(), c.literals.end(),
                       [&](const Literal& l) { return l.satisfied_by(assignment[l.variable]); });
  };
  CostReport report;
  report.hard_violations = instance.trivially_infeasible() ? 1 : 0;
  for (const Clause& c : instance.hard_clauses()) {
    if (!satisfied(c)) ++report.hard_violations;
  }
  report.soft_cost = instance.constant_cost();
  for (const Clause& c : instance.soft_clauses()) {
    if (!satisfied(c)) report.soft_cost += c.weight;
  }
  report.feasible = report.hard_violations == 0;
  return report;
}

}  // namespace amx
