#pragma once

// Executes a PartitionPlan on n virtual shared-nothing processors: routes
// every tuple, joins each processor's fragments locally and reports loads,
// max/ideal skew ratios and a digest of the distributed join output.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <thread>
#include <unordered_map>
#include <vector>

#include "skewjoin/core.hpp"
#include "skewjoin/error.hpp"
#include "skewjoin/hash.hpp"
#include "skewjoin/planner.hpp"
#include "skewjoin/rational.hpp"
#include "skewjoin/selectivity.hpp"

namespace skewjoin {

struct ProcessorLoad {
  std::uint32_t processor_id = 0;
  std::uint64_t received_r = 0;
  std::uint64_t received_s = 0;
  std::uint64_t produced_joins = 0;

  friend bool operator==(const ProcessorLoad&, const ProcessorLoad&) = default;
};

// Max-over-ideal ratios. jps_factor compares produced joins against
// total/n; the redistribution factors compare received tuples against
// |R|/n and |S|/n. All are 0 when their ideal is 0.
struct SkewMetrics {
  Rational jps_factor = 0;
  Rational redist_r = 0;
  Rational redist_s = 0;

  friend bool operator==(const SkewMetrics&, const SkewMetrics&) = default;
};

struct ExecutionReport {
  std::uint32_t n = 1;
  Strategy strategy = Strategy::kHash;
  std::uint64_t size_r = 0;  // |R| before redistribution
  std::uint64_t size_s = 0;
  std::vector<ProcessorLoad> loads;
  std::uint64_t total_joins = 0;
  SkewMetrics metrics;
  // Absent for count-only simulations.
  std::optional<MultisetDigest> output_digest;
  // Sorted; filled only when SimulatorOptions::materialize_output is set.
  std::vector<JoinedTuple> output;

  std::uint64_t max_joins() const {
    std::uint64_t m = 0;
    for (const auto& l : loads) m = std::max(m, l.produced_joins);
    return m;
  }

  friend bool operator==(const ExecutionReport&, const ExecutionReport&) = default;
};

struct SimulatorOptions {
  // Worker threads for the local joins; 0 or 1 runs them inline.
  unsigned threads = 1;
  bool materialize_output = false;
};

inline SkewMetrics skew_metrics(const ExecutionReport& report, const Rational& ideal) {
  SkewMetrics m;
  std::uint64_t max_r = 0, max_s = 0;
  for (const auto& l : report.loads) {
    max_r = std::max(max_r, l.received_r);
    max_s = std::max(max_s, l.received_s);
  }
  if (ideal > 0) m.jps_factor = as_rational(report.max_joins()) / ideal;
  const Rational n(report.n);
  if (report.size_r > 0) m.redist_r = as_rational(max_r) * n / as_rational(report.size_r);
  if (report.size_s > 0) m.redist_s = as_rational(max_s) * n / as_rational(report.size_s);
  return m;
}

inline Rational ideal_joins(const ExecutionReport& report) {
  return as_rational(report.total_joins) / Rational(report.n);
}

namespace detail {

inline void check_group(const RouteDirective& d, std::uint32_t n) {
  if (d.group.empty()) {
    throw ConfigError("directive for value " + std::to_string(d.value.id) + " has an empty group");
  }
  for (std::uint32_t p : d.group) {
    if (p >= n) {
      throw ConfigError("directive for value " + std::to_string(d.value.id) + " names processor " +
                        std::to_string(p) + " of " + std::to_string(n));
    }
  }
}

// Distributes one relation into per-processor fragments. For hash_into the
// tuples of a value are ranked by payload and dealt round-robin over the
// group, so member i receives ceil((c - i) / g) of them.
inline std::vector<std::vector<Tuple>> route_side(const PartitionPlan& plan, const Relation& rel, bool r_side) {
  std::vector<Tuple> sorted = rel.tuples;
  std::sort(sorted.begin(), sorted.end(), [](const Tuple& a, const Tuple& b) {
    return a.value != b.value ? a.value < b.value : a.payload < b.payload;
  });
  std::vector<std::vector<Tuple>> fragments(plan.n);
  std::size_t i = 0;
  while (i < sorted.size()) {
    const JoinValue v = sorted[i].value;
    const RouteDirective* d = plan.find(v);
    if (d == nullptr) {
      throw PlanCoverageError("no directive for join value " + std::to_string(v.id) + " of relation '" +
                              rel.name + "'");
    }
    check_group(*d, plan.n);
    const RouteAction action = r_side ? d->r_action : d->s_action;
    const auto g = d->group.size();
    std::size_t rank = 0;
    for (; i < sorted.size() && sorted[i].value == v; ++i, ++rank) {
      switch (action) {
        case RouteAction::kResidualHash: fragments[d->group.front()].push_back(sorted[i]); break;
        case RouteAction::kHashInto: fragments[d->group[rank % g]].push_back(sorted[i]); break;
        case RouteAction::kBroadcastTo:
          for (std::uint32_t p : d->group) fragments[p].push_back(sorted[i]);
          break;
      }
    }
  }
  return fragments;
}

struct LocalResult {
  std::uint64_t joins = 0;
  MultisetDigest digest;
  std::vector<JoinedTuple> output;
};

// Hash-grouped nested loops over one processor's fragments.
inline LocalResult local_join(std::span<const Tuple> r, std::span<const Tuple> s, bool materialize) {
  std::unordered_map<std::uint32_t, std::vector<std::uint64_t>> by_value;
  for (const auto& t : s) by_value[t.value.id].push_back(t.payload);
  LocalResult out;
  for (const auto& tr : r) {
    auto it = by_value.find(tr.value.id);
    if (it == by_value.end()) continue;
    for (std::uint64_t ps : it->second) {
      out.digest.add(tr.payload, ps, tr.value.id);
      if (materialize) out.output.push_back(JoinedTuple{tr.payload, ps, tr.value});
    }
    out.joins += it->second.size();
  }
  return out;
}

}  // namespace detail

inline ExecutionReport execute_plan(const PartitionPlan& plan, const Relation& r, const Relation& s,
                                    const SimulatorOptions& options = {}) {
  if (plan.n == 0) throw ConfigError("plan has no processors");
  auto frag_r = detail::route_side(plan, r, true);
  auto frag_s = detail::route_side(plan, s, false);

  std::vector<detail::LocalResult> results(plan.n);
  auto run = [&](std::uint32_t p) {
    results[p] = detail::local_join(frag_r[p], frag_s[p], options.materialize_output);
  };
  const unsigned workers = std::min<unsigned>(options.threads, plan.n);
  if (workers <= 1) {
    for (std::uint32_t p = 0; p < plan.n; ++p) run(p);
  } else {
    std::atomic<std::uint32_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::uint32_t p = next++; p < plan.n; p = next++) run(p);
      });
    }
  }

  ExecutionReport report;
  report.n = plan.n;
  report.strategy = plan.strategy;
  report.size_r = r.size();
  report.size_s = s.size();
  MultisetDigest digest;
  for (std::uint32_t p = 0; p < plan.n; ++p) {
    report.loads.push_back(ProcessorLoad{p, frag_r[p].size(), frag_s[p].size(), results[p].joins});
    report.total_joins += results[p].joins;
    digest.merge(results[p].digest);
    if (options.materialize_output) {
      report.output.insert(report.output.end(), results[p].output.begin(), results[p].output.end());
    }
  }
  std::sort(report.output.begin(), report.output.end());
  report.output_digest = digest;
  report.metrics = skew_metrics(report, ideal_joins(report));
  return report;
}

// Same loads as execute_plan, computed from histograms alone; no digest.
inline ExecutionReport simulate_counts(const PartitionPlan& plan, const ValueHistogram& r, const ValueHistogram& s) {
  if (plan.n == 0) throw ConfigError("plan has no processors");
  ExecutionReport report;
  report.n = plan.n;
  report.strategy = plan.strategy;
  report.size_r = r.total();
  report.size_s = s.total();
  report.loads.resize(plan.n);
  for (std::uint32_t p = 0; p < plan.n; ++p) report.loads[p].processor_id = p;

  for (JoinValue v : detail::joint_support(r, s)) {
    const RouteDirective* d = plan.find(v);
    if (d == nullptr) throw PlanCoverageError("no directive for join value " + std::to_string(v.id));
    detail::check_group(*d, plan.n);
    const std::uint64_t g = d->group.size();
    auto share = [&](RouteAction a, std::uint64_t c, std::size_t member) -> std::uint64_t {
      switch (a) {
        case RouteAction::kResidualHash: return member == 0 ? c : 0;
        case RouteAction::kHashInto: return c / g + (member < c % g ? 1 : 0);
        case RouteAction::kBroadcastTo: return c;
      }
      return 0;
    };
    for (std::size_t i = 0; i < g; ++i) {
      auto& load = report.loads[d->group[i]];
      const std::uint64_t rc = share(d->r_action, r.count(v), i);
      const std::uint64_t sc = share(d->s_action, s.count(v), i);
      load.received_r += rc;
      load.received_s += sc;
      load.produced_joins += rc * sc;
      report.total_joins += rc * sc;
    }
  }
  report.metrics = skew_metrics(report, ideal_joins(report));
  return report;
}

// True iff the distributed output is exactly the nested-loop join of R and S.
inline bool verify_output(const ExecutionReport& report, const Relation& r, const Relation& s,
                          std::uint64_t budget = kDefaultOracleBudget) {
  auto expected = digest_of(brute_force_join(r, s, budget));
  return report.output_digest.has_value() && *report.output_digest == expected &&
         report.total_joins == expected.count;
}

}  // namespace skewjoin
