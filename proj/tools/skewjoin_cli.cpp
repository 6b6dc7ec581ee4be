// skewjoin: generate skewed relations, plan their redistribution, simulate
// the parallel join and compare strategies.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "skewjoin/skewjoin.hpp"

namespace fs = std::filesystem;
using namespace skewjoin;

namespace {

std::uint64_t oracle_budget() {
  const char* env = std::getenv("SKEWJOIN_ORACLE_BUDGET");
  if (env == nullptr || *env == '\0') return kDefaultOracleBudget;
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(env, &pos);
    if (pos != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("SKEWJOIN_ORACLE_BUDGET is not an integer: '") + env + "'");
  }
}

void emit(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes;
  } else {
    write_file_atomic(path, bytes);
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Histogram JSON, or a relation binary whose histogram is taken.
struct LoadedInput {
  ValueHistogram hist;
  std::optional<Relation> relation;
};

LoadedInput load_input(const std::string& path, const std::string& name, std::optional<std::uint32_t> domain) {
  std::string bytes = read_file(path);
  LoadedInput in;
  if (looks_like_relation(bytes)) {
    in.relation = decode_relation(bytes, name);
    in.hist = domain ? build_histogram(*in.relation, *domain) : build_histogram(*in.relation);
  } else {
    in.hist = histogram_from_json(parse_json(bytes, path));
  }
  return in;
}

// Loads R and S so both histograms share one domain size.
std::pair<LoadedInput, LoadedInput> load_pair(const std::string& r_path, const std::string& s_path,
                                              std::optional<std::uint32_t> domain) {
  auto r = load_input(r_path, "R", domain);
  auto s = load_input(s_path, "S", domain);
  if (!domain && r.hist.domain_size() != s.hist.domain_size() && (r.relation || s.relation)) {
    const std::uint32_t m = std::max(r.hist.domain_size(), s.hist.domain_size());
    if (r.relation) r.hist = build_histogram(*r.relation, m);
    if (s.relation) s.hist = build_histogram(*s.relation, m);
  }
  return {std::move(r), std::move(s)};
}

struct Options {
  // gen
  std::uint32_t domain = 0;
  std::uint64_t tuples = 0;
  std::string dist = "uniform";
  double theta = 1.0;
  std::string weights;
  std::uint64_t seed = 0;
  // shared
  std::string out;
  std::string r_path, s_path;
  std::uint32_t procs = 0;
  std::optional<std::uint32_t> input_domain;
  std::string skew_threshold = "2";
  std::string prpd_threshold = "1/10";
  // materialize
  std::string hist_path, name = "R";
  // plan
  std::string strategy;
  // simulate
  std::string plan_path, report_path;
  bool verify = false;
  bool materialize_output = false;
  unsigned threads = 1;
  // chain
  std::string spec_path;
  bool brute_force = false;
  // classes
  std::string mode = "product";
  std::string boundaries;
  // compare
  std::string strategies = "hash,hjps,prpd,freqclass";
  // pipeline
  std::string config_path, out_dir;
};

PlannerOptions planner_options(const Options& o) {
  PlannerOptions p;
  p.skew_threshold = parse_rational(o.skew_threshold);
  p.prpd_threshold = parse_rational(o.prpd_threshold);
  return p;
}

int cmd_gen(const Options& o) {
  std::vector<double> weights;
  for (const auto& w : split_list(o.weights)) {
    try {
      weights.push_back(std::stod(w));
    } catch (const std::exception&) {
      throw ConfigError("bad weight '" + w + "'");
    }
  }
  auto h = generate_histogram(o.domain, o.tuples, parse_distribution(o.dist, o.theta, weights), o.seed);
  emit(o.out, dump(to_json(h)));
  return 0;
}

int cmd_materialize(const Options& o) {
  auto h = histogram_from_json(parse_json(read_file(o.hist_path), o.hist_path));
  auto rel = materialize_relation(h, o.name, o.seed);
  if (o.out.empty()) throw ConfigError("materialize needs --out");
  write_file_atomic(o.out, encode_relation(rel));
  return 0;
}

int cmd_plan(const Options& o) {
  auto [r, s] = load_pair(o.r_path, o.s_path, o.input_domain);
  auto plan = make_plan(parse_strategy(o.strategy), r.hist, s.hist, o.procs, planner_options(o));
  emit(o.out, dump(to_json(plan)));
  return 0;
}

int cmd_simulate(const Options& o) {
  auto plan = plan_from_json(parse_json(read_file(o.plan_path), o.plan_path));
  auto [r, s] = load_pair(o.r_path, o.s_path, plan.domain_size);
  ExecutionReport report;
  std::optional<bool> verified;
  if (r.relation && s.relation) {
    SimulatorOptions opts;
    opts.threads = o.threads;
    opts.materialize_output = o.materialize_output;
    report = execute_plan(plan, *r.relation, *s.relation, opts);
    if (o.verify) verified = verify_output(report, *r.relation, *s.relation, oracle_budget());
  } else {
    if (o.verify) throw ConfigError("--verify needs relation binaries for --r and --s");
    report = simulate_counts(plan, r.hist, s.hist);
  }
  Json j = to_json(report);
  if (verified) j["verified"] = *verified;
  if (o.materialize_output) {
    Json out = Json::array();
    for (const auto& t : report.output) out.push_back(Json::array({t.payload_r, t.payload_s, t.value.id}));
    j["output"] = out;
  }
  emit(o.report_path, dump(j));
  if (verified && !*verified) {
    std::cerr << "skewjoin: distributed output differs from the nested-loop join\n";
    return 1;
  }
  return 0;
}

int cmd_chain(const Options& o) {
  auto spec = chain_spec_from_json(parse_json(read_file(o.spec_path), o.spec_path));
  auto mus = pairwise_selectivities(spec);
  Json jm = Json::array();
  for (const auto& mu : mus) jm.push_back(to_string(mu.value));
  Rational estimate = chain_cardinality(spec);
  Json j{{"pairwise_selectivities", jm},
         {"chain_selectivity", to_string(chain_selectivity(mus).value)},
         {"chain_cardinality", to_string(estimate)},
         {"independent", spec.independent}};
  bool ok = true;
  if (o.brute_force) {
    auto tables = chain_tables(spec);
    const std::uint64_t exact = brute_force_chain(tables, oracle_budget());
    ok = estimate == as_rational(exact);
    j["brute_force"] = exact;
    j["match"] = ok;
  }
  emit(o.out, dump(j));
  if (!ok) {
    std::cerr << "skewjoin: chain estimate differs from the brute-force count\n";
    return 1;
  }
  return 0;
}

int cmd_classes(const Options& o) {
  auto [r, s] = load_pair(o.r_path, o.s_path, o.input_domain);
  const ClassMode mode = parse_class_mode(o.mode);
  FrequencyClassSet cs;
  switch (mode) {
    case ClassMode::kExactHomogeneous: {
      auto fr = relative_frequencies(r.hist);
      if (fr != relative_frequencies(s.hist)) throw ConfigError("homogeneous mode needs equal R and S frequencies");
      cs = exact_classes(fr);
      break;
    }
    case ClassMode::kExactProduct:
      cs = product_classes(relative_frequencies(r.hist), relative_frequencies(s.hist));
      break;
    case ClassMode::kRange: {
      std::vector<Rational> bounds;
      for (const auto& b : split_list(o.boundaries)) bounds.push_back(parse_rational(b));
      cs = range_classes(relative_frequencies(r.hist), relative_frequencies(s.hist), bounds);
      break;
    }
    case ClassMode::kForeignKey:
      cs = fk_classes(relative_frequencies(s.hist), r.hist);
      break;
  }
  Json j{{"classes", to_json(cs)}};
  Json workloads = Json::array();
  for (std::size_t k = 0; k < cs.classes.size(); ++k) {
    workloads.push_back(to_string(class_workload(cs, k, r.hist.total(), s.hist.total())));
  }
  j["class_workloads"] = workloads;
  if (!cs.classes.empty()) {
    auto tree = build_frequency_tree(cs);
    j["tree"] = to_json(tree);
    if (o.procs > 0) {
      j["ideal_workload"] = to_string(ideal_workload(cs, r.hist.total(), s.hist.total(), o.procs));
      auto a = assign_classes(tree, tree_workloads(cs, r.hist.total(), s.hist.total()), o.procs);
      j["assignment"] = to_json(a, tree);
    }
  }
  emit(o.out, dump(j));
  return 0;
}

int cmd_compare(const Options& o) {
  auto [r, s] = load_pair(o.r_path, o.s_path, o.input_domain);
  ExperimentConfig cfg;
  cfg.n = o.procs;
  cfg.planner = planner_options(o);
  cfg.strategies.clear();
  for (const auto& name : split_list(o.strategies)) cfg.strategies.push_back(parse_strategy(name));
  std::string csv = compare_csv_header();
  for (const auto& outcome : run_strategies(cfg, r.hist, s.hist)) csv += compare_csv_row(outcome.report);
  emit(o.out, csv);
  return 0;
}

int cmd_pipeline(const Options& o) {
  auto cfg = experiment_config_from_json(parse_json(read_file(o.config_path), o.config_path));
  cfg.oracle_budget = std::getenv("SKEWJOIN_ORACLE_BUDGET") ? oracle_budget() : cfg.oracle_budget;
  auto outcomes = run_pipeline(cfg, o.out_dir);
  for (const auto& outcome : outcomes) {
    if (outcome.verified && !*outcome.verified) {
      std::cerr << "skewjoin: " << to_string(outcome.plan.strategy) << " output failed verification\n";
      return 1;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skew-aware parallel hash join planner and simulator"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen", "Generate a value histogram");
  gen->add_option("--domain", o.domain, "Domain size m")->required();
  gen->add_option("--tuples", o.tuples, "Total tuple count")->required();
  gen->add_option("--dist", o.dist, "uniform | zipf | weights")->check(CLI::IsMember({"uniform", "zipf", "weights"}));
  gen->add_option("--theta", o.theta, "Zipf exponent");
  gen->add_option("--weights", o.weights, "Comma-separated weights for --dist weights");
  gen->add_option("--seed", o.seed, "Seed");
  gen->add_option("--out", o.out, "Output histogram JSON (stdout if omitted)");

  auto* mat = app.add_subcommand("materialize", "Materialize a histogram into a relation binary");
  mat->add_option("--hist", o.hist_path, "Histogram JSON")->required();
  mat->add_option("--name", o.name, "Relation name");
  mat->add_option("--seed", o.seed, "Seed");
  mat->add_option("--out", o.out, "Output relation binary")->required();

  auto add_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--r", o.r_path, "R histogram JSON or relation binary")->required();
    cmd->add_option("--s", o.s_path, "S histogram JSON or relation binary")->required();
    cmd->add_option("--domain", o.input_domain, "Domain size when reading relation binaries");
  };
  auto add_thresholds = [&](CLI::App* cmd) {
    cmd->add_option("--skew-threshold", o.skew_threshold, "HJPS skew cutoff on pn (default 2)");
    cmd->add_option("--prpd-threshold", o.prpd_threshold, "PRPD relative-frequency cutoff (default 1/10)");
  };

  auto* plan = app.add_subcommand("plan", "Build a partition plan");
  plan->add_option("--strategy", o.strategy, "hash | hjps | prpd | freqclass")->required();
  plan->add_option("--procs", o.procs, "Processor count")->required();
  add_inputs(plan);
  add_thresholds(plan);
  plan->add_option("--out", o.out, "Output plan JSON (stdout if omitted)");

  auto* sim = app.add_subcommand("simulate", "Execute a plan on virtual processors");
  sim->add_option("--plan", o.plan_path, "Plan JSON")->required();
  sim->add_option("--r", o.r_path, "R relation binary (or histogram JSON for counts only)")->required();
  sim->add_option("--s", o.s_path, "S relation binary (or histogram JSON for counts only)")->required();
  sim->add_flag("--verify", o.verify, "Check the output against the nested-loop join");
  sim->add_flag("--materialize", o.materialize_output, "Include the joined tuples in the report");
  sim->add_option("--threads", o.threads, "Threads for the local joins");
  sim->add_option("--report", o.report_path, "Output report JSON (stdout if omitted)");

  auto* chain = app.add_subcommand("chain", "Chain-join selectivity and cardinality");
  chain->add_option("--spec", o.spec_path, "Chain spec JSON")->required();
  chain->add_flag("--brute-force", o.brute_force, "Cross-check against an exhaustive chain join");
  chain->add_option("--out", o.out, "Output JSON (stdout if omitted)");

  auto* classes = app.add_subcommand("classes", "Frequency classes, tree and class assignment");
  add_inputs(classes);
  classes->add_option("--mode", o.mode, "homogeneous | product | range | fk");
  classes->add_option("--boundaries", o.boundaries, "Comma-separated ascending range boundaries");
  classes->add_option("--procs", o.procs, "Processor count for the assignment");
  classes->add_option("--out", o.out, "Output JSON (stdout if omitted)");

  auto* compare = app.add_subcommand("compare", "Compare strategies as a CSV metrics table");
  add_inputs(compare);
  compare->add_option("--procs", o.procs, "Processor count")->required();
  compare->add_option("--strategies", o.strategies, "Comma-separated strategies");
  add_thresholds(compare);
  compare->add_option("--out", o.out, "Output CSV (stdout if omitted)");

  auto* pipeline = app.add_subcommand("pipeline", "Run gen, plan, simulate and compare from a config");
  pipeline->add_option("--config", o.config_path, "Experiment config JSON")->required();
  pipeline->add_option("--out-dir", o.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*mat) return cmd_materialize(o);
    if (*plan) return cmd_plan(o);
    if (*sim) return cmd_simulate(o);
    if (*chain) return cmd_chain(o);
    if (*classes) return cmd_classes(o);
    if (*compare) return cmd_compare(o);
    if (*pipeline) return cmd_pipeline(o);
  } catch (const std::exception& e) {
    std::cerr << "skewjoin: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
