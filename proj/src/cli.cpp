#include "safeice/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "safeice/oracle.hpp"
#include "safeice/problems.hpp"

namespace safeice {

namespace {

using nlohmann::json;

// Raw option storage; strings are validated after the config-file merge.
struct RawOptions {
  std::string problem;
  double z = 0.0;
  int d = 0;
  std::string method = "safe-ice";
  std::string format = "jsonl";
  double p_ref = 0.0;
  std::string config_path;
};

struct Binding {
  std::string key;  // config-file key; the flag is --key with '_' -> '-'
  std::function<void(const json&)> assign;
};

std::string flag_for(const std::string& key) {
  std::string f = "--" + key;
  for (char& c : f) {
    if (c == '_') c = '-';
  }
  return f;
}

void add_run_options(CLI::App* sub, CliConfig& cfg, RawOptions& raw) {
  sub->add_option("--problem", raw.problem, "Problem name (see list-problems)");
  sub->add_option("--z", raw.z, "Threshold z");
  sub->add_option("--d", raw.d, "Dimension");
  sub->add_option("--method", raw.method, "ice | safe-ice");
  sub->add_option("--n-per-iter", cfg.run.n_per_iter, "Samples per outer iteration");
  sub->add_option("--k-init", cfg.run.k_init, "Initial number of mixture components");
  sub->add_option("--delta-star", cfg.run.delta_star, "Stopping CV tolerance");
  sub->add_option("--delta-target", cfg.run.delta_target, "Target CV for sigma selection");
  sub->add_option("--sigma0", cfg.run.sigma0, "Initial smoothing parameter (also the annealing horizon)");
  sub->add_option("--max-outer", cfg.run.max_outer, "Maximum outer iterations");
  sub->add_option("--max-em", cfg.run.max_em, "Maximum EM iterations per outer iteration");
  sub->add_option("--em-tol", cfg.run.em_tol, "Relative EM likelihood tolerance");
  sub->add_option("--seed", cfg.run.seed, "Random seed");
  sub->add_option("--reps", cfg.reps, "Repetitions (bench)");
  sub->add_option("--p-ref", raw.p_ref, "Reference failure probability (bench)");
  sub->add_option("--out", cfg.out, "Output path (bench); stdout when omitted");
  sub->add_option("--format", raw.format, "jsonl | csv");
  sub->add_option("--threads", cfg.threads, "Worker threads (fallback: SAFE_ICE_THREADS)");
  sub->add_option("--n-total", cfg.n_total, "Monte Carlo sample count (oracle)");
  sub->add_option("--batch-size", cfg.batch_size, "Monte Carlo batch size (oracle)");
  sub->add_option("--config", raw.config_path, "JSON config file; flags override its values");
}

std::vector<Binding> config_bindings(CliConfig& cfg, RawOptions& raw) {
  return {
      {"problem", [&](const json& j) { raw.problem = j.get<std::string>(); }},
      {"z", [&](const json& j) { raw.z = j.get<double>(); }},
      {"d", [&](const json& j) { raw.d = j.get<int>(); }},
      {"method", [&](const json& j) { raw.method = j.get<std::string>(); }},
      {"n_per_iter", [&](const json& j) { cfg.run.n_per_iter = j.get<int>(); }},
      {"k_init", [&](const json& j) { cfg.run.k_init = j.get<int>(); }},
      {"delta_star", [&](const json& j) { cfg.run.delta_star = j.get<double>(); }},
      {"delta_target", [&](const json& j) { cfg.run.delta_target = j.get<double>(); }},
      {"sigma0", [&](const json& j) { cfg.run.sigma0 = j.get<double>(); }},
      {"max_outer", [&](const json& j) { cfg.run.max_outer = j.get<int>(); }},
      {"max_em", [&](const json& j) { cfg.run.max_em = j.get<int>(); }},
      {"em_tol", [&](const json& j) { cfg.run.em_tol = j.get<double>(); }},
      {"seed", [&](const json& j) { cfg.run.seed = j.get<std::uint64_t>(); }},
      {"reps", [&](const json& j) { cfg.reps = j.get<int>(); }},
      {"p_ref", [&](const json& j) { raw.p_ref = j.get<double>(); }},
      {"out", [&](const json& j) { cfg.out = j.get<std::string>(); }},
      {"format", [&](const json& j) { raw.format = j.get<std::string>(); }},
      {"threads", [&](const json& j) { cfg.threads = j.get<int>(); }},
      {"n_total", [&](const json& j) { cfg.n_total = j.get<long long>(); }},
      {"batch_size", [&](const json& j) { cfg.batch_size = j.get<long long>(); }},
  };
}

// Applies config-file values for every key whose flag was not given.
// Returns the set of keys that now hold an explicit value.
std::map<std::string, bool> merge_config(CLI::App* sub, CliConfig& cfg, RawOptions& raw) {
  auto bindings = config_bindings(cfg, raw);
  std::map<std::string, bool> given;
  for (const auto& b : bindings) given[b.key] = sub->count(flag_for(b.key)) > 0;
  if (raw.config_path.empty()) return given;

  std::ifstream is(raw.config_path);
  if (!is) throw UsageError("cannot read config file '" + raw.config_path + "'");
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw UsageError("config file '" + raw.config_path + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config file '" + raw.config_path + "' must hold a JSON object");

  for (const auto& [key, value] : doc.items()) {
    if (key == "command") continue;
    auto it = std::find_if(bindings.begin(), bindings.end(), [&](const Binding& b) { return b.key == key; });
    if (it == bindings.end()) throw UsageError("unknown config key '" + key + "'");
    if (given[key]) continue;
    try {
      it->assign(value);
    } catch (const json::exception&) {
      throw UsageError("config key '" + key + "' has the wrong type");
    }
    given[key] = true;
  }
  return given;
}

int threads_from_env() {
  const char* env = std::getenv("SAFE_ICE_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 4096) throw UsageError("SAFE_ICE_THREADS must be a positive integer");
  return static_cast<int>(v);
}

void validate(CliConfig& cfg, RawOptions& raw, const std::map<std::string, bool>& given) {
  if (raw.problem.empty()) throw UsageError("--problem is required");

  try {
    cfg.problem = raw.problem;
    cfg.z = given.at("z") ? raw.z : default_threshold(raw.problem);
    cfg.d = given.at("d") ? raw.d : default_dimension(raw.problem);
    cfg.run.method = parse_method(raw.method);
    cfg.format = parse_format(raw.format);
    cfg.run.anneal_horizon = cfg.run.sigma0;
    make_problem(cfg.problem, cfg.z, cfg.d);
    cfg.run.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  if (given.at("p_ref")) {
    if (!(raw.p_ref > 0.0 && raw.p_ref <= 1.0)) throw UsageError("--p-ref must lie in (0, 1]");
    cfg.p_ref = raw.p_ref;
  }
  if (!given.at("threads")) cfg.threads = threads_from_env();
  if (cfg.threads < 1) throw UsageError("--threads must be >= 1");
  if (cfg.reps < 2) throw UsageError("--reps must be >= 2");
  if (cfg.n_total < 10000) throw UsageError("--n-total must be >= 10000");
  if (cfg.batch_size < 1 || cfg.batch_size > cfg.n_total) {
    throw UsageError("--batch-size must lie in [1, n-total]");
  }
}

std::string list_record(const std::vector<double>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + format_number(xs[i]);
  return s + "]";
}

std::string list_record(const std::vector<int>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + std::to_string(xs[i]);
  return s + "]";
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

int cmd_list(std::ostream& out) {
  for (const auto& name : problem_names()) {
    const int d = default_dimension(name);
    const double z = default_threshold(name);
    const bool analytic = make_problem(name, z, d).analytic_pf.has_value();
    out << "{\"name\": " << json(name).dump() << ", \"default_d\": " << d
        << ", \"default_z\": " << format_number(z) << ", \"analytic_pf\": " << bool_text(analytic)
        << "}\n";
  }
  return kExitOk;
}

int cmd_estimate(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const Problem p = make_problem(cfg.problem, cfg.z, cfg.d);
  const RunResult r = run(p, cfg.run);
  out << result_record(cfg, r) << '\n';
  if (r.no_failures) err << "warning: final sample set contains no failure; estimate is 0\n";
  if (!r.converged) err << "warning: stopping tolerance not reached\n";
  return kExitOk;
}

int cmd_oracle(const CliConfig& cfg, std::ostream& out) {
  const Problem p = make_problem(cfg.problem, cfg.z, cfg.d);
  const McEstimate m = mc_estimate(p, cfg.n_total, cfg.batch_size, cfg.run.seed, cfg.threads);
  out << "{\"problem\": " << json(cfg.problem).dump() << ", \"z\": " << format_number(cfg.z)
      << ", \"d\": " << cfg.d << ", \"seed\": " << cfg.run.seed << ", \"n_total\": " << m.n_total
      << ", \"n_failures\": " << m.n_failures << ", \"pf\": " << format_number(m.pf)
      << ", \"cv\": " << format_number(m.cv) << "}\n";
  return kExitOk;
}

int cmd_bench(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const Problem p = make_problem(cfg.problem, cfg.z, cfg.d);
  double p_ref = 0.0;
  if (cfg.p_ref) {
    p_ref = *cfg.p_ref;
  } else if (p.analytic_pf) {
    p_ref = *p.analytic_pf;
  } else {
    err << "computing reference by Monte Carlo with " << cfg.n_total << " samples\n";
    const McEstimate m = mc_estimate(p, cfg.n_total, cfg.batch_size, cfg.run.seed, cfg.threads);
    if (!(m.pf > 0.0)) {
      throw std::runtime_error("Monte Carlo reference found no failures; pass --p-ref or raise --n-total");
    }
    p_ref = m.pf;
  }
  const BenchmarkStats stats = run_repetitions(p, cfg.run, cfg.reps, p_ref, cfg.threads);
  if (cfg.out.empty()) {
    write_records(stats, out, cfg.format);
  } else {
    persist(stats, cfg.out, cfg.format);
  }
  err << "rel_error " << format_number(stats.rel_error) << "  cv " << format_number(stats.cv)
      << "  mean_t " << format_number(stats.mean_t) << "  mean_k " << format_number(stats.mean_k) << '\n';
  return kExitOk;
}

}  // namespace

CliConfig parse_args(const std::vector<std::string>& args) {
  CliConfig cfg;
  RawOptions raw;
  CLI::App app{"Rare-event failure probability estimation with adaptive importance sampling"};
  app.name(args.empty() ? "safe-ice" : args.front());
  app.require_subcommand(1, 1);

  CLI::App* estimate = app.add_subcommand("estimate", "Run one estimation and print a JSON record");
  CLI::App* bench = app.add_subcommand("bench", "Repeat seeded runs and persist statistics");
  CLI::App* oracle = app.add_subcommand("oracle", "Crude Monte Carlo reference estimate");
  app.add_subcommand("list-problems", "Print the problem registry");
  for (CLI::App* sub : {estimate, bench, oracle}) add_run_options(sub, cfg, raw);

  std::vector<const char*> argv;
  argv.push_back(args.empty() ? "safe-ice" : args.front().c_str());
  for (std::size_t i = 1; i < args.size(); ++i) argv.push_back(args[i].c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    cfg.help = true;
    cfg.help_text = app.help();
    return cfg;
  } catch (const CLI::CallForAllHelp&) {
    cfg.help = true;
    cfg.help_text = app.help("", CLI::AppFormatMode::All);
    return cfg;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  CLI::App* sub = app.get_subcommands().front();
  cfg.command = sub->get_name();
  if (cfg.command == "list-problems") return cfg;
  const auto given = merge_config(sub, cfg, raw);
  validate(cfg, raw, given);
  return cfg;
}

std::string result_record(const CliConfig& cfg, const RunResult& r) {
  std::ostringstream os;
  os << "{\"problem\": " << json(cfg.problem).dump() << ", \"method\": \"" << to_string(cfg.run.method)
     << "\", \"z\": " << format_number(cfg.z) << ", \"d\": " << cfg.d << ", \"seed\": " << r.seed
     << ", \"pf\": " << format_number(r.pf_estimate) << ", \"iterations\": " << r.iterations
     << ", \"final_k\": " << r.final_k << ", \"lsf_evals\": " << r.lsf_evals
     << ", \"converged\": " << bool_text(r.converged) << ", \"stagnated\": " << bool_text(r.stagnated)
     << ", \"no_failures\": " << bool_text(r.no_failures)
     << ", \"sigma_trace\": " << list_record(r.sigma_trace)
     << ", \"lambda_trace\": " << list_record(r.lambda_trace) << ", \"k_trace\": " << list_record(r.k_trace)
     << "}";
  return os.str();
}

int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  try {
    cfg = parse_args(args);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }
  if (cfg.help) {
    out << cfg.help_text;
    return kExitOk;
  }
  try {
    if (cfg.command == "list-problems") return cmd_list(out);
    if (cfg.command == "estimate") return cmd_estimate(cfg, out, err);
    if (cfg.command == "oracle") return cmd_oracle(cfg, out);
    return cmd_bench(cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace safeice
