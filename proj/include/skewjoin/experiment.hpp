#pragma once

// End-to-end experiment: generate R and S, plan with each strategy,
// simulate, and write histogram / plan / report / CSV files.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "skewjoin/core.hpp"
#include "skewjoin/error.hpp"
#include "skewjoin/io.hpp"
#include "skewjoin/planner.hpp"
#include "skewjoin/simulator.hpp"

namespace skewjoin {

struct RelationSpec {
  std::uint32_t domain_size = 1;
  std::uint64_t tuples = 0;
  Distribution dist = UniformDist{};
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  RelationSpec r;
  RelationSpec s;
  std::uint32_t n = 1;
  std::vector<Strategy> strategies{Strategy::kHash, Strategy::kHjps, Strategy::kPrpd};
  PlannerOptions planner;
  std::uint64_t oracle_budget = kDefaultOracleBudget;
  // Simulate materialized relations instead of histograms.
  bool tuple_level = false;
  // Tuple level only: check every output against the nested-loop join.
  bool verify = false;
  unsigned threads = 1;

  void validate() const {
    if (n == 0) throw ConfigError("processor count must be positive");
    if (strategies.empty()) throw ConfigError("no strategies selected");
    if (verify && !tuple_level) throw ConfigError("verification needs tuple-level simulation");
  }
};

inline Distribution parse_distribution(const std::string& name, double theta, const std::vector<double>& weights) {
  if (name == "uniform") return UniformDist{};
  if (name == "zipf") return ZipfDist{theta};
  if (name == "weights" || name == "explicit") return WeightsDist{weights};
  throw ConfigError("unknown distribution '" + name + "'");
}

inline RelationSpec relation_spec_from_json(const Json& j) {
  constexpr std::string_view what = "relation spec";
  RelationSpec spec;
  spec.domain_size = detail::json_get<std::uint32_t>(j, "domain", what);
  spec.tuples = detail::json_get<std::uint64_t>(j, "tuples", what);
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.dist = parse_distribution(j.value("dist", std::string("uniform")), j.value("theta", 1.0),
                                 j.value("weights", std::vector<double>{}));
  return spec;
}

// {"r": {...}, "s": {...}, "procs": n, "strategies": [...], "skew_threshold": "2",
//  "prpd_threshold": "1/10", "oracle_budget": b, "tuple_level": bool, "verify": bool}
inline ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig cfg;
  try {
    cfg.r = relation_spec_from_json(j.at("r"));
    cfg.s = relation_spec_from_json(j.at("s"));
    cfg.n = j.at("procs").get<std::uint32_t>();
    if (j.contains("strategies")) {
      cfg.strategies.clear();
      for (const auto& s : j["strategies"]) cfg.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    if (j.contains("skew_threshold")) cfg.planner.skew_threshold = parse_rational(j["skew_threshold"].get<std::string>());
    if (j.contains("prpd_threshold")) cfg.planner.prpd_threshold = parse_rational(j["prpd_threshold"].get<std::string>());
    cfg.oracle_budget = j.value("oracle_budget", kDefaultOracleBudget);
    cfg.tuple_level = j.value("tuple_level", false);
    cfg.verify = j.value("verify", false);
    cfg.threads = j.value("threads", 1u);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline std::string format_metric(const Rational& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", to_double(r));
  return buf;
}

inline std::string compare_csv_header() { return "strategy,jps_factor,redist_r,redist_s,max_joins,total_joins\n"; }

inline std::string compare_csv_row(const ExecutionReport& rep) {
  return std::string(to_string(rep.strategy)) + "," + format_metric(rep.metrics.jps_factor) + "," +
         format_metric(rep.metrics.redist_r) + "," + format_metric(rep.metrics.redist_s) + "," +
         std::to_string(rep.max_joins()) + "," + std::to_string(rep.total_joins) + "\n";
}

struct StrategyOutcome {
  PartitionPlan plan;
  ExecutionReport report;
  std::optional<bool> verified;
};

// Plans and simulates every configured strategy. Relations are only
// materialized for tuple-level runs.
inline std::vector<StrategyOutcome> run_strategies(const ExperimentConfig& cfg, const ValueHistogram& hr,
                                                   const ValueHistogram& hs, const Relation* r = nullptr,
                                                   const Relation* s = nullptr) {
  cfg.validate();
  std::vector<StrategyOutcome> out;
  for (Strategy strategy : cfg.strategies) {
    StrategyOutcome o;
    o.plan = make_plan(strategy, hr, hs, cfg.n, cfg.planner);
    if (cfg.tuple_level) {
      if (r == nullptr || s == nullptr) throw ConfigError("tuple-level run without relations");
      SimulatorOptions opts;
      opts.threads = cfg.threads;
      o.report = execute_plan(o.plan, *r, *s, opts);
      if (cfg.verify) o.verified = verify_output(o.report, *r, *s, cfg.oracle_budget);
    } else {
      o.report = simulate_counts(o.plan, hr, hs);
    }
    out.push_back(std::move(o));
  }
  return out;
}

// Writes r.json, s.json, [r.bin, s.bin,] plan_<strategy>.json,
// report_<strategy>.json and compare.csv into out_dir.
inline std::vector<StrategyOutcome> run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  auto hr = generate_histogram(cfg.r.domain_size, cfg.r.tuples, cfg.r.dist, cfg.r.seed);
  auto hs = generate_histogram(cfg.s.domain_size, cfg.s.tuples, cfg.s.dist, cfg.s.seed);
  write_file_atomic(out_dir / "r.json", dump(to_json(hr)));
  write_file_atomic(out_dir / "s.json", dump(to_json(hs)));

  std::optional<Relation> r, s;
  if (cfg.tuple_level) {
    r = materialize_relation(hr, "R", cfg.r.seed);
    s = materialize_relation(hs, "S", cfg.s.seed);
    write_file_atomic(out_dir / "r.bin", encode_relation(*r));
    write_file_atomic(out_dir / "s.bin", encode_relation(*s));
  }

  auto outcomes = run_strategies(cfg, hr, hs, r ? &*r : nullptr, s ? &*s : nullptr);
  std::string csv = compare_csv_header();
  for (const auto& o : outcomes) {
    const std::string name(to_string(o.plan.strategy));
    write_file_atomic(out_dir / ("plan_" + name + ".json"), dump(to_json(o.plan)));
    Json rep = to_json(o.report);
    if (o.verified) rep["verified"] = *o.verified;
    write_file_atomic(out_dir / ("report_" + name + ".json"), dump(rep));
    csv += compare_csv_row(o.report);
  }
  write_file_atomic(out_dir / "compare.csv", csv);
  return outcomes;
}

}  // namespace skewjoin
