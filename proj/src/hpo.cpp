#include "anytime_maxsat/hpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <stdexcept>

namespace amx {

std::string to_string(const ParamValue& value) {
  if (const auto* d = std::get_if<double>(&value)) return format_real(*d);
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  return std::get<std::string>(value);
}

nlohmann::json to_json(const Configuration& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, value] : config) {
    std::visit([&j, &name](const auto& v) { j[name] = v; }, value);
  }
  return j;
}

ParamSpace::ParamSpace(std::vector<ParamSpec> specs) : specs_(std::move(specs)) {
  std::set<std::string> names;
  for (const ParamSpec& p : specs_) {
    if (!names.insert(p.name).second) throw std::invalid_argument("duplicate parameter " + p.name);
    if (p.kind == ParamKind::categorical) {
      if (p.categories.empty()) throw std::invalid_argument(p.name + ": no categories");
    } else if (!(p.lower <= p.upper)) {
      throw std::invalid_argument(p.name + ": bounds are not ordered");
    }
  }
  validate(defaults());
}

ParamSpace ParamSpace::solver_space() {
  auto real = [](std::string name, double lo, double hi, double def) {
    return ParamSpec{std::move(name), ParamKind::real, lo, hi, {}, def};
  };
  auto integer = [](std::string name, double lo, double hi, std::int64_t def) {
    return ParamSpec{std::move(name), ParamKind::integer, lo, hi, {}, def};
  };
  const SolverConfig d;
  return ParamSpace({
      real("smooth_prob", 0.0, 0.01, d.smooth_prob),
      integer("hard_weight_inc", 1, 10, d.hard_weight_inc),
      integer("soft_weight_cap", 1, 1000, d.soft_weight_cap),
      integer("bms_size", 1, 50, d.bms_size),
      real("random_walk_prob", 0.0, 0.5, d.random_walk_prob),
      integer("restart_flips", 0, 100000, 0),
  });
}

ParamSpace ParamSpace::from_json(const nlohmann::json& doc) {
  std::vector<ParamSpec> specs;
  for (const auto& p : doc.at("params")) {
    ParamSpec spec;
    spec.name = p.at("name").get<std::string>();
    const auto type = p.at("type").get<std::string>();
    if (type == "real") {
      spec.kind = ParamKind::real;
      spec.lower = p.at("lower").get<double>();
      spec.upper = p.at("upper").get<double>();
      spec.default_value = p.at("default").get<double>();
    } else if (type == "integer") {
      spec.kind = ParamKind::integer;
      spec.lower = p.at("lower").get<double>();
      spec.upper = p.at("upper").get<double>();
      spec.default_value = p.at("default").get<std::int64_t>();
    } else if (type == "categorical") {
      spec.kind = ParamKind::categorical;
      spec.categories = p.at("values").get<std::vector<std::string>>();
      spec.default_value = p.at("default").get<std::string>();
    } else {
      throw std::invalid_argument("unknown parameter type '" + type + "'");
    }
    specs.push_back(std::move(spec));
  }
  return ParamSpace(std::move(specs));
}

ParamSpace ParamSpace::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open parameter space " + path.string());
  return from_json(nlohmann::json::parse(in));
}

const ParamSpec* ParamSpace::find(const std::string& name) const {
  for (const ParamSpec& p : specs_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Configuration ParamSpace::defaults() const {
  Configuration c;
  for (const ParamSpec& p : specs_) c[p.name] = p.default_value;
  return c;
}

Configuration ParamSpace::sample(std::mt19937_64& rng) const {
  Configuration c;
  for (const ParamSpec& p : specs_) {
    switch (p.kind) {
      case ParamKind::real:
        c[p.name] = std::uniform_real_distribution<double>(p.lower, p.upper)(rng);
        break;
      case ParamKind::integer:
        c[p.name] = std::uniform_int_distribution<std::int64_t>(
            static_cast<std::int64_t>(std::ceil(p.lower)),
            static_cast<std::int64_t>(std::floor(p.upper)))(rng);
        break;
      case ParamKind::categorical:
        c[p.name] = p.categories[std::uniform_int_distribution<std::size_t>(
            0, p.categories.size() - 1)(rng)];
        break;
    }
  }
  return c;
}

void ParamSpace::validate(const Configuration& config) const {
  for (const auto& [name, value] : config) {
    const ParamSpec* p = find(name);
    if (p == nullptr) throw std::invalid_argument("unknown parameter '" + name + "'");
    switch (p->kind) {
      case ParamKind::real: {
        const auto* d = std::get_if<double>(&value);
        if (d == nullptr || !(*d >= p->lower && *d <= p->upper)) {
          throw std::invalid_argument("parameter '" + name + "' outside [" +
                                      format_real(p->lower) + ", " + format_real(p->upper) + "]");
        }
        break;
      }
      case ParamKind::integer: {
        const auto* i = std::get_if<std::int64_t>(&value);
        if (i == nullptr || static_cast<double>(*i) < p->lower ||
            static_cast<double>(*i) > p->upper) {
          throw std::invalid_argument("parameter '" + name + "' must be an integer in [" +
                                      format_real(p->lower) + ", " + format_real(p->upper) + "]");
        }
        break;
      }
      case ParamKind::categorical: {
        const auto* s = std::get_if<std::string>(&value);
        if (s == nullptr ||
            std::find(p->categories.begin(), p->categories.end(), *s) == p->categories.end()) {
          throw std::invalid_argument("parameter '" + name + "' has an unknown category");
        }
        break;
      }
    }
  }
  for (const ParamSpec& p : specs_) {
    if (!config.contains(p.name)) throw std::invalid_argument("missing parameter '" + p.name + "'");
  }
}

std::pair<std::string, ParamValue> ParamSpace::parse_assignment(const std::string& text) const {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("expected name=value, got '" + text + "'");
  std::string name = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  const ParamSpec* p = find(name);
  if (p == nullptr) throw std::invalid_argument("unknown parameter '" + name + "'");
  try {
    std::size_t used = 0;
    switch (p->kind) {
      case ParamKind::real: {
        double v = std::stod(raw, &used);
        if (used != raw.size()) break;
        return {name, v};
      }
      case ParamKind::integer: {
        long long v = std::stoll(raw, &used);
        if (used != raw.size()) break;
        return {name, static_cast<std::int64_t>(v)};
      }
      case ParamKind::categorical:
        return {name, raw};
    }
  } catch (const std::logic_error&) {
  }
  throw std::invalid_argument("invalid value '" + raw + "' for parameter '" + name + "'");
}

SolverConfig to_solver_config(const Configuration& config, std::uint64_t seed) {
  SolverConfig out;
  out.seed = seed;
  auto as_real = [](const ParamValue& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
  };
  auto as_int = [](const ParamValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return static_cast<std::int64_t>(std::llround(*d));
    return std::get<std::int64_t>(v);
  };
  for (const auto& [name, value] : config) {
    if (std::holds_alternative<std::string>(value)) {
      throw std::invalid_argument("solver parameter '" + name + "' is not numeric");
    }
    if (name == "smooth_prob") {
      out.smooth_prob = as_real(value);
    } else if (name == "hard_weight_inc") {
      out.hard_weight_inc = as_int(value);
    } else if (name == "soft_weight_cap") {
      out.soft_weight_cap = as_int(value);
    } else if (name == "bms_size") {
      const auto b = as_int(value);
      if (b < 1) throw std::invalid_argument("bms_size must be >= 1");
      out.bms_size = static_cast<std::uint32_t>(b);
    } else if (name == "random_walk_prob") {
      out.random_walk_prob = as_real(value);
    } else if (name == "restart_flips") {
      const auto r = as_int(value);
      if (r < 0) throw std::invalid_argument("restart_flips must be >= 0");
      if (r > 0) out.restart_flips = static_cast<std::uint64_t>(r);
    } else {
      throw std::invalid_argument("unknown solver parameter '" + name + "'");
    }
  }
  out.validate();
  return out;
}

CostMode parse_cost_mode(const std::string& text) {
  if (text == "best-f") return CostMode::best_f;
  if (text == "ecdf-prime") return CostMode::ecdf_prime;
  throw std::invalid_argument("unknown cost mode '" + text + "' (best-f or ecdf-prime)");
}

std::string to_string(CostMode mode) {
  return mode == CostMode::best_f ? "best-f" : "ecdf-prime";
}

BootstrapTargets bootstrap_targets(const RunResult& initial_run) {
  BootstrapTargets out;
  if (initial_run.trajectory.empty()) {
    out.empty_flagged = true;
    return out;
  }
  // Costs strictly decrease along a trajectory: the first event is the worst visited.
  out.f_init_max = initial_run.trajectory.front().cost;
  out.f_init_min = initial_run.trajectory.back().cost;
  const unsigned __int128 range = out.f_init_max - out.f_init_min;
  std::set<Cost> values;
  for (unsigned j = 0; j <= 4; ++j) {
    values.insert(out.f_init_min + static_cast<Cost>(range * j / 4));
  }
  out.targets.assign(values.begin(), values.end());
  return out;
}

TimeGrid hpo_time_grid(double t_budget, double tau_min) {
  constexpr std::size_t count = 50;
  if (!(tau_min > 0.0) || !(t_budget > tau_min)) {
    throw std::invalid_argument("tuning budget must exceed " + format_real(tau_min));
  }
  const TimeGrid offsets = make_time_grid(tau_min, t_budget, count, GridScale::log);
  std::set<double> times;
  for (double tau : offsets.points) times.insert(std::max(0.0, t_budget - tau));
  TimeGrid grid;
  grid.points.assign(times.begin(), times.end());
  grid.scale = GridScale::log;
  grid.t_min = grid.points.front();
  grid.t_max = grid.points.back();
  return grid;
}

TimeGrid hpo_time_grid(const Budget& budget) {
  if (budget.mode == Budget::Mode::flips) return hpo_time_grid(budget.limit, budget.limit / 1000.0);
  return hpo_time_grid(budget.limit);
}

CostValue cost_bestf(const RunResult& run, const WcnfInstance& instance) {
  if (run.best_cost) return {CostMode::best_f, static_cast<double>(*run.best_cost)};
  return {CostMode::best_f, static_cast<double>(instance.total_soft_weight()) + 1.0};
}

CostValue cost_ecdf_prime(const RunResult& run, std::span<const Cost> targets,
                          const TimeGrid& grid, TimeAxis axis) {
  // Single sweep: grid times and events are both ascending.
  const Trajectory& events = run.trajectory;
  std::size_t next = 0;
  std::optional<Cost> best;
  double hits = 0.0;
  for (double t : grid.points) {
    while (next < events.size() && event_time(events[next], axis) <= t) {
      best = events[next].cost;
      ++next;
    }
    if (!best) continue;
    for (Cost target : targets) {
      if (target >= *best) hits += 1.0;
    }
  }
  return {CostMode::ecdf_prime, -hits};
}

std::vector<Cost> update_targets(std::vector<Cost> targets, Cost new_best) {
  if (!targets.empty() && new_best >= *std::min_element(targets.begin(), targets.end())) {
    return targets;
  }
  targets.insert(std::lower_bound(targets.begin(), targets.end(), new_best), new_best);
  return targets;
}

HpoTargetStore::HpoTargetStore(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(*path_)) return;
  std::ifstream in(*path_);
  if (!in) throw std::runtime_error("cannot read target store " + path_->string());
  const auto doc = nlohmann::json::parse(in);
  for (const auto& [id, e] : doc.items()) {
    Entry entry;
    entry.targets = e.at("targets").get<std::vector<Cost>>();
    std::sort(entry.targets.begin(), entry.targets.end());
    entry.targets.erase(std::unique(entry.targets.begin(), entry.targets.end()),
                        entry.targets.end());
    entry.f_init_min = e.at("f_init_min").get<Cost>();
    entry.f_init_max = e.at("f_init_max").get<Cost>();
    entries_.emplace(id, std::move(entry));
  }
}

bool HpoTargetStore::contains(const std::string& instance) const {
  std::lock_guard lock(mutex_);
  return entries_.contains(instance);
}

std::vector<Cost> HpoTargetStore::targets(const std::string& instance) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(instance);
  return it == entries_.end() ? std::vector<Cost>{} : it->second.targets;
}

std::optional<HpoTargetStore::Entry> HpoTargetStore::entry(const std::string& instance) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(instance);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void HpoTargetStore::put_bootstrap(const std::string& instance, const BootstrapTargets& boot) {
  std::lock_guard lock(mutex_);
  Entry& e = entries_[instance];
  std::set<Cost> merged(e.targets.begin(), e.targets.end());
  merged.insert(boot.targets.begin(), boot.targets.end());
  e.targets.assign(merged.begin(), merged.end());
  e.f_init_min = boot.f_init_min;
  e.f_init_max = boot.f_init_max;
  save_locked();
}

bool HpoTargetStore::update(const std::string& instance, Cost new_best) {
  std::lock_guard lock(mutex_);
  Entry& e = entries_[instance];
  const std::size_t before = e.targets.size();
  e.targets = update_targets(std::move(e.targets), new_best);
  if (e.targets.size() == before) return false;
  save_locked();
  return true;
}

nlohmann::json HpoTargetStore::to_json() const {
  std::lock_guard lock(mutex_);
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [id, e] : entries_) {
    doc[id] = {{"targets", e.targets}, {"f_init_min", e.f_init_min}, {"f_init_max", e.f_init_max}};
  }
  return doc;
}

void HpoTargetStore::save() const {
  std::lock_guard lock(mutex_);
  save_locked();
}

void HpoTargetStore::save_locked() const {
  if (!path_) return;
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [id, e] : entries_) {
    doc[id] = {{"targets", e.targets}, {"f_init_min", e.f_init_min}, {"f_init_max", e.f_init_max}};
  }
  const auto tmp = path_->string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write target store " + tmp);
  }
  std::filesystem::rename(tmp, *path_);
}

nlohmann::json EvalRecord::to_json() const {
  nlohmann::json j{{"config", amx::to_json(config)},
                   {"instance", instance},
                   {"seed", seed},
                   {"mode", amx::to_string(mode)},
                   {"cost", cost},
                   {"wall_time", wall_time}};
  j["best_cost"] = best_cost ? nlohmann::json(*best_cost) : nlohmann::json(nullptr);
  return j;
}

TimeAxis axis_of(const Budget& budget) {
  return budget.mode == Budget::Mode::flips ? TimeAxis::flips : TimeAxis::seconds;
}

CostValue evaluate(const Configuration& config, const ParamSpace& space,
                   const WcnfInstance& instance, std::uint64_t seed, CostMode mode,
                   EvalContext& context) {
  space.validate(config);
  const SolverConfig solver_config = to_solver_config(config, seed);
  if (mode == CostMode::ecdf_prime && context.store == nullptr) {
    throw std::invalid_argument("ecdf-prime evaluation needs a target store");
  }

  const auto start = std::chrono::steady_clock::now();
  RunResult run;
  try {
    run = solve(instance, solver_config, context.budget);
  } catch (const std::exception& e) {
    throw std::runtime_error("solver failed on " + instance.name() + ": " + e.what());
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  CostValue cost;
  if (mode == CostMode::best_f) {
    cost = cost_bestf(run, instance);
  } else {
    const std::vector<Cost> targets = context.store->targets(instance.name());
    cost = cost_ecdf_prime(run, targets, hpo_time_grid(context.budget),
                           axis_of(context.budget));
  }
  if (context.store != nullptr && run.best_cost && context.store->contains(instance.name())) {
    context.store->update(instance.name(), *run.best_cost);
  }
  if (context.on_record) {
    context.on_record(EvalRecord{config, instance.name(), seed, mode, cost.value, wall,
                                 run.best_cost});
  }
  return cost;
}

void ensure_bootstrapped(const WcnfInstance& instance, const ParamSpace& space,
                         std::uint64_t seed, const Budget& budget, HpoTargetStore& store) {
  if (store.contains(instance.name())) return;
  const RunResult run = solve(instance, to_solver_config(space.defaults(), seed), budget);
  const BootstrapTargets boot = bootstrap_targets(run);
  if (boot.empty_flagged) {
    std::cerr << "warning: no feasible solution while bootstrapping targets for "
              << instance.name() << '\n';
  }
  store.put_bootstrap(instance.name(), boot);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

TuneResult tune(const ParamSpace& space, std::span<const WcnfInstance> training,
                const TuneOptions& options, HpoTargetStore& store) {
  if (options.eval_budget < 1) throw std::invalid_argument("eval_budget must be >= 1");
  if (training.empty()) throw std::invalid_argument("no training instances");

  TuneResult result;
  std::mt19937_64 rng(options.seed);
  result.candidates.push_back(space.defaults());
  while (result.candidates.size() < options.eval_budget) {
    result.candidates.push_back(space.sample(rng));
  }

  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < training.size(); ++i) seeds.push_back(derive_seed(options.seed, i));

  if (options.mode == CostMode::ecdf_prime) {
    for (std::size_t i = 0; i < training.size(); ++i) {
      ensure_bootstrapped(training[i], space, seeds[i], options.budget, store);
    }
  }

  EvalContext context{options.budget, &store, [&](const EvalRecord& r) {
                        result.trace.push_back(r);
                        if (options.on_record) options.on_record(r);
                      }};
  std::size_t feasible_candidates = 0;
  for (const Configuration& candidate : result.candidates) {
    double sum = 0.0;
    bool any_feasible = false;
    for (std::size_t i = 0; i < training.size(); ++i) {
      sum += evaluate(candidate, space, training[i], seeds[i], options.mode, context).value;
      any_feasible = any_feasible || result.trace.back().best_cost.has_value();
    }
    if (any_feasible) ++feasible_candidates;
    result.mean_costs.push_back(sum / static_cast<double>(training.size()));
  }

  result.all_infeasible = feasible_candidates == 0;
  if (result.all_infeasible) {
    std::cerr << "warning: every evaluation was infeasible; returning the default configuration\n";
    result.best_index = 0;
  } else {
    result.best_index = static_cast<std::size_t>(
        std::min_element(result.mean_costs.begin(), result.mean_costs.end()) -
        result.mean_costs.begin());
  }
  result.best = result.candidates[result.best_index];
  return result;
}

}  // namespace amx
