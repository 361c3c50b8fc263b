#include "anytime_maxsat/experiment.hpp"

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace amx {

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

}  // namespace

void ExperimentPlan::validate(const ParamSpace& space) const {
  if (configs.empty()) throw std::invalid_argument("plan has no solver configurations");
  if (instances.empty()) throw std::invalid_argument("plan has no instances");
  if (seeds.empty()) throw std::invalid_argument("plan has no seeds");
  std::set<std::string> names;
  for (const NamedConfig& c : configs) {
    if (!names.insert(c.name).second) throw std::invalid_argument("duplicate config " + c.name);
    space.validate(c.params);
    to_solver_config(c.params, 0);
  }
}

ExperimentPlan load_plan(const std::filesystem::path& path, const ParamSpace& space) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::runtime_error("cannot read plan: " + std::string(e.what()));
  }
  ExperimentPlan plan;
  plan.instances = split_list(tree.get<std::string>("instances", ""));
  for (const std::string& s : split_list(tree.get<std::string>("seeds", "1"))) {
    plan.seeds.push_back(std::stoull(s));
  }
  plan.budget = Budget::parse(tree.get<std::string>("budget", "10s"));
  plan.out_dir = tree.get<std::string>("out", "runs");
  plan.threads = tree.get<std::size_t>("threads", 0);

  for (const std::string& name : split_list(tree.get<std::string>("configs", "default"))) {
    NamedConfig config{name, space.defaults()};
    if (auto section = tree.get_child_optional(name)) {
      for (const auto& [key, value] : *section) {
        auto [param, v] = space.parse_assignment(key + "=" + value.data());
        config.params[param] = v;
      }
    }
    plan.configs.push_back(std::move(config));
  }
  plan.validate(space);
  return plan;
}

std::vector<std::string> expand_instances(const std::vector<std::string>& patterns) {
  std::set<std::string> out;
  for (const std::string& pattern : patterns) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t k = 0; k < g.gl_pathc; ++k) out.insert(g.gl_pathv[k]);
    } else {
      out.insert(pattern);
    }
    ::globfree(&g);
  }
  return {out.begin(), out.end()};
}

std::size_t default_parallelism() {
  if (const char* env = std::getenv("ANYTIME_MAXSAT_THREADS")) {
    try {
      const auto n = std::stoul(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid ANYTIME_MAXSAT_THREADS='" << env << "'\n";
  }
  const unsigned cores = std::thread::hardware_concurrency();
  return cores > 1 ? cores - 1 : 1;
}

std::string track_of(const std::string& instance_path) {
  const auto parent = std::filesystem::path(instance_path).parent_path().filename().string();
  return parent.empty() ? "default" : parent;
}

std::string instance_id(const std::string& instance_path) {
  std::string name = std::filesystem::path(instance_path).filename().string();
  if (auto dot = name.find('.'); dot != std::string::npos && dot > 0) name = name.substr(0, dot);
  return name;
}

nlohmann::json LogRecord::to_json() const {
  nlohmann::json events_json = nlohmann::json::array();
  for (const TrajectoryEvent& e : events) events_json.push_back({e.elapsed, e.flips, e.cost});
  nlohmann::json j{{"solver", solver},
                   {"params", amx::to_json(params)},
                   {"instance", instance},
                   {"instance_path", instance_path},
                   {"track", track},
                   {"seed", seed},
                   {"budget", budget.to_string()},
                   {"status", ok ? "ok" : "failed"},
                   {"events", std::move(events_json)},
                   {"total_flips", total_flips},
                   {"total_elapsed", total_elapsed}};
  if (!ok) j["error"] = error;
  j["best_cost"] = events.empty() ? nlohmann::json(nullptr) : nlohmann::json(events.back().cost);
  return j;
}

LogRecord LogRecord::from_json(const nlohmann::json& j) {
  LogRecord r;
  r.solver = j.at("solver").get<std::string>();
  for (const auto& [name, value] : j.at("params").items()) {
    if (value.is_number_integer()) {
      r.params[name] = value.get<std::int64_t>();
    } else if (value.is_number()) {
      r.params[name] = value.get<double>();
    } else {
      r.params[name] = value.get<std::string>();
    }
  }
  r.instance = j.at("instance").get<std::string>();
  r.instance_path = j.value("instance_path", std::string{});
  r.track = j.value("track", std::string("default"));
  r.seed = j.at("seed").get<std::uint64_t>();
  r.budget = Budget::parse(j.at("budget").get<std::string>());
  r.ok = j.at("status").get<std::string>() == "ok";
  r.error = j.value("error", std::string{});
  for (const auto& e : j.at("events")) {
    r.events.push_back(TrajectoryEvent{e.at(0).get<double>(), e.at(1).get<std::uint64_t>(),
                                       e.at(2).get<Cost>()});
  }
  r.total_flips = j.value("total_flips", std::uint64_t{0});
  r.total_elapsed = j.value("total_elapsed", 0.0);
  return r;
}

namespace {

struct LogWriter {
  std::filesystem::path path;
  std::ofstream out;
  std::mutex mutex;
  std::size_t records = 0;

  void write(const LogRecord& record) {
    const std::string line = record.to_json().dump();
    std::lock_guard lock(mutex);
    out << line << '\n';
    out.flush();
    ++records;
  }
};

}  // namespace

RunSummary cmd_run(const ExperimentPlan& plan, const ParamSpace& space) {
  plan.validate(space);
  std::error_code ec;
  std::filesystem::create_directories(plan.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + plan.out_dir.string() + ": " + ec.message());

  const std::vector<std::string> paths = expand_instances(plan.instances);

  // Instances are parsed once and shared read-only between workers.
  std::vector<std::shared_ptr<const WcnfInstance>> instances(paths.size());
  std::vector<std::string> load_errors(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    try {
      instances[i] = std::make_shared<const WcnfInstance>(load_wcnf(paths[i]));
    } catch (const std::exception& e) {
      load_errors[i] = e.what();
    }
  }

  std::vector<std::unique_ptr<LogWriter>> writers;
  RunSummary summary;
  for (const NamedConfig& c : plan.configs) {
    auto w = std::make_unique<LogWriter>();
    w->path = plan.out_dir / ("runs_" + sanitize_name(c.name) + ".jsonl");
    w->out.open(w->path, std::ios::binary | std::ios::trunc);
    if (!w->out) throw std::runtime_error("cannot open " + w->path.string() + " for writing");
    summary.log_files.push_back(w->path);
    writers.push_back(std::move(w));
  }

  struct Cell {
    std::size_t config, instance, seed;
  };
  std::vector<Cell> cells;
  for (std::size_t c = 0; c < plan.configs.size(); ++c) {
    for (std::size_t i = 0; i < paths.size(); ++i) {
      for (std::size_t s = 0; s < plan.seeds.size(); ++s) cells.push_back({c, i, s});
    }
  }

  std::mutex failure_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const Cell& cell = cells[k];
      const NamedConfig& config = plan.configs[cell.config];
      LogRecord record;
      record.solver = config.name;
      record.params = config.params;
      record.instance = instance_id(paths[cell.instance]);
      record.instance_path = paths[cell.instance];
      record.track = track_of(paths[cell.instance]);
      record.seed = plan.seeds[cell.seed];
      record.budget = plan.budget;
      if (!instances[cell.instance]) {
        record.ok = false;
        record.error = load_errors[cell.instance];
      } else {
        try {
          const RunResult run = solve(*instances[cell.instance],
                                      to_solver_config(config.params, record.seed), plan.budget);
          record.events = run.trajectory;
          record.total_flips = run.total_flips;
          record.total_elapsed = run.total_elapsed;
        } catch (const std::exception& e) {
          record.ok = false;
          record.error = e.what();
        }
      }
      if (!record.ok) {
        std::lock_guard lock(failure_mutex);
        summary.failures.push_back(config.name + "/" + record.instance + "/" +
                                   std::to_string(record.seed) + ": " + record.error);
      }
      writers[cell.config]->write(record);
    }
  };

  const std::size_t threads =
      std::max<std::size_t>(1, std::min(plan.threads > 0 ? plan.threads : default_parallelism(),
                                        cells.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  for (auto& w : writers) {
    w->out << nlohmann::json{{"end", true}, {"records", w->records}}.dump() << '\n';
    w->out.close();
    if (!w->out) throw std::runtime_error("failed writing " + w->path.string());
    summary.records += w->records;
  }
  std::sort(summary.failures.begin(), summary.failures.end());
  return summary;
}

LoadedLogs read_run_logs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("log directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  LoadedLogs logs;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::vector<LogRecord> records;
    bool complete = false;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) break;  // torn line: only possible at the end of a partial file
      if (j.contains("end")) {
        complete = j.at("records").get<std::size_t>() == records.size();
        break;
      }
      records.push_back(LogRecord::from_json(j));
    }
    if (!complete) {
      std::cerr << "warning: skipping incomplete run log " << file.string() << '\n';
      logs.skipped_files.push_back(file);
      continue;
    }
    std::move(records.begin(), records.end(), std::back_inserter(logs.records));
  }
  std::stable_sort(logs.records.begin(), logs.records.end(),
                   [](const LogRecord& a, const LogRecord& b) {
                     return std::tie(a.solver, a.instance, a.seed) <
                            std::tie(b.solver, b.instance, b.seed);
                   });
  return logs;
}

Assessment cmd_assess(const std::filesystem::path& log_dir, const std::filesystem::path& out_dir,
                      const AssessOptions& options) {
  const LoadedLogs logs = read_run_logs(log_dir);
  std::vector<RunRecord> runs;
  std::optional<Budget::Mode> mode;
  double largest = 0.0;
  for (const LogRecord& r : logs.records) {
    if (!r.ok) continue;
    if (mode && *mode != r.budget.mode) {
      throw std::invalid_argument("logs mix wall-clock and flip budgets");
    }
    mode = r.budget.mode;
    largest = std::max(largest, r.budget.limit);
    runs.push_back(RunRecord{r.solver, r.instance, r.track, r.seed, r.events});
  }
  if (runs.empty()) throw std::runtime_error("no complete run records in " + log_dir.string());

  const TimeAxis axis = *mode == Budget::Mode::flips ? TimeAxis::flips : TimeAxis::seconds;
  const double t_max = options.t_max.value_or(largest);
  const double t_min =
      options.t_min.value_or(axis == TimeAxis::flips ? std::max(1.0, t_max / 3000.0) : 0.1);
  const TimeGrid grid = make_time_grid(t_min, t_max, options.points, options.scale);
  Assessment a = assess_runs(runs, grid, axis);
  emit_reports(a, out_dir);
  return a;
}

GenKind parse_gen_kind(const std::string& text) {
  if (text == "random-wpms") return GenKind::random_wpms;
  if (text == "staircase") return GenKind::staircase;
  throw std::invalid_argument("unknown instance kind '" + text + "' (random-wpms or staircase)");
}

WcnfInstance generate_instance(GenKind kind, const GenParams& params, std::uint64_t seed,
                               std::string name) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
  };
  InstanceBuilder builder(std::move(name));
  const std::uint32_t n = params.num_vars;
  if (params.max_weight < 1) throw std::invalid_argument("max weight must be >= 1");

  if (kind == GenKind::random_wpms) {
    if (n < 3) throw std::invalid_argument("random-wpms needs at least 3 variables");
    if (params.num_clauses * 3 < n) {
      throw std::invalid_argument("random-wpms needs at least n/3 clauses to use every variable");
    }
    if (!(params.hard_fraction >= 0.0 && params.hard_fraction <= 1.0)) {
      throw std::invalid_argument("hard fraction must lie in [0,1]");
    }
    std::vector<bool> planted(n + 1);
    for (std::uint32_t v = 1; v <= n; ++v) planted[v] = (rng() & 1U) != 0;

    // The first clauses walk a random permutation so every variable occurs.
    std::vector<std::uint32_t> cover(n);
    std::iota(cover.begin(), cover.end(), 1U);
    std::shuffle(cover.begin(), cover.end(), rng);
    std::size_t cover_pos = 0;

    const auto num_hard = static_cast<std::size_t>(
        std::llround(params.hard_fraction * static_cast<double>(params.num_clauses)));
    for (std::size_t k = 0; k < params.num_clauses; ++k) {
      std::vector<std::uint32_t> vars;
      while (vars.size() < 3 && cover_pos < cover.size()) vars.push_back(cover[cover_pos++]);
      while (vars.size() < 3) {
        const auto v = static_cast<std::uint32_t>(uniform(1, n));
        if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
      }
      std::vector<Literal> lits;
      for (std::uint32_t v : vars) lits.push_back(Literal{v, (rng() & 1U) != 0});
      const bool hard = k < num_hard;
      if (hard) {
        const bool sat = std::any_of(lits.begin(), lits.end(), [&](const Literal& l) {
          return l.satisfied_by(planted[l.variable]);
        });
        if (!sat) {
          Literal& l = lits[uniform(0, 2)];
          l.negated = !l.negated;
        }
        builder.add_hard(std::move(lits));
      } else {
        builder.add_soft(uniform(1, params.max_weight), std::move(lits));
      }
    }
    return std::move(builder).build();
  }

  if (n < 1) throw std::invalid_argument("staircase needs at least 1 variable");
  if (params.block < 1) throw std::invalid_argument("staircase block size must be >= 1");
  std::uint32_t first = 1;
  std::uint32_t previous_last = 0;
  while (first <= n) {
    const std::uint32_t lo = params.block > 2 ? params.block - 2 : 1;
    const std::uint32_t k =
        std::min<std::uint32_t>(static_cast<std::uint32_t>(uniform(lo, params.block + 2)), n - first + 1);
    const std::uint32_t last = first + k - 1;
    const Weight a = uniform(1, params.max_weight);
    // All-false costs k*a, all-true k*a - 1, anything mixed at least a + (k-1)*a.
    for (std::uint32_t v = first; v <= last; ++v) {
      builder.add_soft(a, {Literal{v, false}});
      if (v < last) {
        builder.add_soft((k - 1) * a, {Literal{v, true}, Literal{v + 1, false}});
        builder.add_soft((k - 1) * a, {Literal{v, false}, Literal{v + 1, true}});
      }
    }
    if (k * a > 1) {
      std::vector<Literal> all_true;
      for (std::uint32_t v = first; v <= last; ++v) all_true.push_back(Literal{v, true});
      builder.add_soft(k * a - 1, std::move(all_true));
    }
    // A gadget can only switch on after the previous one has.
    if (previous_last != 0) builder.add_hard({Literal{first, true}, Literal{previous_last, false}});
    previous_last = last;
    first = last + 1;
  }
  return std::move(builder).build();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<std::string> split_training(const std::vector<std::string>& instances,
                                        double fraction, std::uint64_t seed) {
  if (instances.empty()) throw std::invalid_argument("no instances to split");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("training fraction must lie in (0,1]");
  }
  std::vector<std::string> shuffled = instances;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(instances.size()))));
  shuffled.resize(std::min(count, shuffled.size()));
  std::sort(shuffled.begin(), shuffled.end());
  return shuffled;
}

TuneOutcome cmd_tune(const TuneCommand& command) {
  const ParamSpace space =
      command.space_file ? ParamSpace::load(*command.space_file) : ParamSpace::solver_space();
  if (command.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  const std::vector<std::string> paths = expand_instances(command.instances);
  if (paths.empty()) throw std::invalid_argument("no tuning instances");
  std::filesystem::create_directories(command.out_dir);

  TuneOutcome outcome;
  for (std::size_t rep = 0; rep < command.repetitions; ++rep) {
    const std::uint64_t rep_seed = derive_seed(command.seed, 1000 + rep);
    std::vector<WcnfInstance> training;
    for (const std::string& p : split_training(paths, command.train_fraction, rep_seed)) {
      training.push_back(load_wcnf(p));
    }

    const auto suffix = std::to_string(rep);
    const auto targets_path = command.out_dir / ("targets_" + suffix + ".json");
    std::filesystem::remove(targets_path);
    HpoTargetStore store(targets_path);

    const auto trace_path = command.out_dir / ("trace_" + suffix + ".jsonl");
    std::ofstream trace(trace_path, std::ios::binary | std::ios::trunc);
    if (!trace) throw std::runtime_error("cannot write " + trace_path.string());

    TuneOptions options;
    options.mode = command.mode;
    options.eval_budget = command.eval_budget;
    options.seed = rep_seed;
    options.budget = command.budget;
    options.on_record = [&trace](const EvalRecord& r) { trace << r.to_json().dump() << '\n'; };
    const TuneResult result = tune(space, training, options, store);
    trace.close();
    store.save();

    nlohmann::json winner{{"config", to_json(result.best)},
                          {"mean_cost", result.mean_costs[result.best_index]},
                          {"candidate", result.best_index},
                          {"mode", to_string(command.mode)},
                          {"budget", command.budget.to_string()},
                          {"seed", rep_seed},
                          {"all_infeasible", result.all_infeasible}};
    const auto winner_path = command.out_dir / ("winner_" + suffix + ".json");
    write_text_file(winner_path, winner.dump(2) + "\n");
    outcome.winners.push_back(result.best);
    outcome.winner_files.push_back(winner_path);
  }
  return outcome;
}

}  // namespace amx
