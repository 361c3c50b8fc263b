// Command-line driver: run matrices, assess logs, tune, generate and dump instances.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "anytime_maxsat/experiment.hpp"
#include "anytime_maxsat/hpo.hpp"

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitIo = 3;

// "name" or "name:key=value,key=value"
amx::NamedConfig parse_config_flag(const std::string& text, const amx::ParamSpace& space) {
  amx::NamedConfig config;
  const auto colon = text.find(':');
  config.name = text.substr(0, colon);
  config.params = space.defaults();
  if (colon != std::string::npos) {
    std::string rest = text.substr(colon + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      const auto comma = rest.find(',', start);
      const std::string item = rest.substr(start, comma - start);
      if (!item.empty()) {
        auto [name, value] = space.parse_assignment(item);
        config.params[name] = value;
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (config.name.empty()) throw std::invalid_argument("config flag needs a name: '" + text + "'");
  return config;
}

amx::GridScale parse_scale(const std::string& text) {
  if (text == "log") return amx::GridScale::log;
  if (text == "linear") return amx::GridScale::linear;
  throw std::invalid_argument("unknown grid scale '" + text + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MaxSAT local search with anytime (ECDF) assessment and tuning"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Execute a config x instance x seed run matrix");
  std::string plan_file;
  std::vector<std::string> run_configs, run_instances;
  std::string run_seeds = "1", run_budget = "10s", run_out = "runs";
  std::size_t run_threads = 0;
  run->add_option("--plan", plan_file, "INI-style plan file (flags are ignored when given)");
  run->add_option("--config", run_configs, "name or name:param=value,... (repeatable)");
  run->add_option("--instance", run_instances, "instance path or glob (repeatable)");
  run->add_option("--seeds", run_seeds, "comma-separated seeds");
  run->add_option("--budget", run_budget, "per-run budget: <seconds>[s] or <flips>f");
  run->add_option("--out", run_out, "log directory");
  run->add_option("--threads", run_threads, "worker count (0: automatic)");

  // assess
  auto* assess = app.add_subcommand("assess", "Build score, win, ECDF and AUC reports from logs");
  std::string logs_dir = "runs", report_dir = "reports", scale = "log";
  std::optional<double> t_min, t_max;
  std::size_t points = 100;
  assess->add_option("--logs", logs_dir, "directory of run logs");
  assess->add_option("--out", report_dir, "report directory");
  assess->add_option("--t-min", t_min, "first grid time (default 0.1 s, or t-max/3000 flips)");
  assess->add_option("--t-max", t_max, "last grid time (default: run budget)");
  assess->add_option("--points", points, "number of grid times");
  assess->add_option("--scale", scale, "log or linear")->check(CLI::IsMember({"log", "linear"}));

  // cost
  auto* cost = app.add_subcommand("cost", "Evaluate one configuration (tuner wrapper)");
  std::string cost_instance, cost_mode = "best-f", cost_budget, cost_targets, cost_space;
  std::uint64_t cost_seed = 1;
  std::vector<std::string> cost_params;
  cost->add_option("--instance", cost_instance, "WCNF instance")->required();
  cost->add_option("--mode", cost_mode, "best-f or ecdf-prime")
      ->check(CLI::IsMember({"best-f", "ecdf-prime"}));
  cost->add_option("--budget", cost_budget, "<seconds>[s] or <flips>f")->required();
  cost->add_option("--seed", cost_seed, "solver seed");
  cost->add_option("--param", cost_params, "name=value (repeatable)");
  cost->add_option("--targets", cost_targets, "JSON target store (persisted across calls)");
  cost->add_option("--space", cost_space, "parameter space JSON");

  // tune
  auto* tune = app.add_subcommand("tune", "Random-search tuning with best-f or ecdf-prime");
  amx::TuneCommand tune_cmd;
  std::string tune_space, tune_mode = "ecdf-prime", tune_budget = "100000f";
  tune->add_option("--space", tune_space, "parameter space JSON (default: solver space)");
  tune->add_option("--instance", tune_cmd.instances, "instance path or glob (repeatable)")
      ->required();
  tune->add_option("--mode", tune_mode, "best-f or ecdf-prime")
      ->check(CLI::IsMember({"best-f", "ecdf-prime"}));
  tune->add_option("--budget", tune_budget, "per-evaluation budget");
  tune->add_option("--evals", tune_cmd.eval_budget, "configurations to evaluate");
  tune->add_option("--seed", tune_cmd.seed, "tuner seed");
  tune->add_option("--repetitions", tune_cmd.repetitions, "independent tuner runs");
  tune->add_option("--train-fraction", tune_cmd.train_fraction, "fraction of instances used");
  std::string tune_out = "tune";
  tune->add_option("--out", tune_out, "output directory");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a WCNF instance");
  std::string gen_kind = "random-wpms", gen_out;
  amx::GenParams gen_params;
  std::uint64_t gen_seed = 1;
  gen->add_option("--kind", gen_kind, "random-wpms or staircase")
      ->check(CLI::IsMember({"random-wpms", "staircase"}));
  gen->add_option("-n,--vars", gen_params.num_vars, "number of variables");
  gen->add_option("-m,--clauses", gen_params.num_clauses, "number of clauses (random-wpms)");
  gen->add_option("--hard-fraction", gen_params.hard_fraction, "share of hard clauses");
  gen->add_option("--max-weight", gen_params.max_weight, "largest soft weight");
  gen->add_option("--block", gen_params.block, "staircase block length");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("-o,--out", gen_out, "output file (default: stdout)");

  // dump
  auto* dump = app.add_subcommand("dump", "Re-serialize an instance in the new WCNF format");
  std::string dump_path;
  dump->add_option("instance", dump_path, "WCNF instance")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (run->parsed()) {
      const amx::ParamSpace space = amx::ParamSpace::solver_space();
      amx::ExperimentPlan plan;
      if (!plan_file.empty()) {
        plan = amx::load_plan(plan_file, space);
      } else {
        for (const auto& c : run_configs) plan.configs.push_back(parse_config_flag(c, space));
        if (plan.configs.empty()) plan.configs.push_back({"default", space.defaults()});
        plan.instances = run_instances;
        std::size_t start = 0;
        while (start < run_seeds.size()) {
          const auto comma = run_seeds.find(',', start);
          plan.seeds.push_back(std::stoull(run_seeds.substr(start, comma - start)));
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
        plan.budget = amx::Budget::parse(run_budget);
        plan.out_dir = run_out;
        plan.threads = run_threads;
      }
      const amx::RunSummary summary = amx::cmd_run(plan, space);
      std::cout << "records: " << summary.records << "\n";
      std::cout << "failures: " << summary.failures.size() << "\n";
      for (const auto& f : summary.failures) std::cout << "  " << f << "\n";
      return 0;
    }
    if (assess->parsed()) {
      amx::AssessOptions options;
      options.t_min = t_min;
      options.t_max = t_max;
      options.points = points;
      options.scale = parse_scale(scale);
      const amx::Assessment a = amx::cmd_assess(logs_dir, report_dir, options);
      std::cout << "solvers: " << a.solvers.size() << ", instances: " << a.instances.size()
                << ", reports in " << report_dir << "\n";
      return 0;
    }
    if (cost->parsed()) {
      const amx::ParamSpace space =
          cost_space.empty() ? amx::ParamSpace::solver_space() : amx::ParamSpace::load(cost_space);
      amx::Configuration config = space.defaults();
      for (const auto& p : cost_params) {
        auto [name, value] = space.parse_assignment(p);
        config[name] = value;
      }
      const amx::WcnfInstance instance = amx::load_wcnf(cost_instance);
      const amx::CostMode mode = amx::parse_cost_mode(cost_mode);
      amx::HpoTargetStore store = cost_targets.empty() ? amx::HpoTargetStore{}
                                                       : amx::HpoTargetStore{cost_targets};
      amx::EvalContext context{amx::Budget::parse(cost_budget), &store, {}};
      if (mode == amx::CostMode::ecdf_prime) {
        amx::ensure_bootstrapped(instance, space, cost_seed, context.budget, store);
      }
      const amx::CostValue value = amx::evaluate(config, space, instance, cost_seed, mode, context);
      std::cout << "COST " << amx::format_real(value.value) << std::endl;
      return 0;
    }
    if (tune->parsed()) {
      if (!tune_space.empty()) tune_cmd.space_file = tune_space;
      tune_cmd.mode = amx::parse_cost_mode(tune_mode);
      tune_cmd.budget = amx::Budget::parse(tune_budget);
      tune_cmd.out_dir = tune_out;
      const amx::TuneOutcome outcome = amx::cmd_tune(tune_cmd);
      for (std::size_t r = 0; r < outcome.winners.size(); ++r) {
        std::cout << outcome.winner_files[r].string() << ": "
                  << amx::to_json(outcome.winners[r]).dump() << "\n";
      }
      return 0;
    }
    if (gen->parsed()) {
      const amx::WcnfInstance instance = amx::generate_instance(
          amx::parse_gen_kind(gen_kind), gen_params, gen_seed);
      const std::string text = "c " + gen_kind + " n=" + std::to_string(gen_params.num_vars) +
                               " seed=" + std::to_string(gen_seed) + "\n" +
                               amx::dump_wcnf(instance);
      if (gen_out.empty()) {
        std::cout << text;
      } else {
        amx::write_text_file(gen_out, text);
      }
      return 0;
    }
    if (dump->parsed()) {
      std::cout << amx::dump_wcnf(amx::load_wcnf(dump_path));
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
