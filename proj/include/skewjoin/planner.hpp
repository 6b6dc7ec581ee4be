#pragma once

// Partition plans: per-value routing directives for plain hash
// redistribution, the skew-aware HJPS planner, a partition/replicate (PRPD)
// baseline, and a plan built from a frequency-class assignment.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "skewjoin/core.hpp"
#include "skewjoin/error.hpp"
#include "skewjoin/freqclass.hpp"
#include "skewjoin/hash.hpp"
#include "skewjoin/rational.hpp"
#include "skewjoin/selectivity.hpp"

namespace skewjoin {

enum class RouteAction {
  kHashInto,      // each tuple goes to exactly one group member
  kBroadcastTo,   // each tuple is copied to every group member
  kResidualHash,  // both sides go to the single processor in the group
};

enum class Strategy { kHash, kHjps, kPrpd, kFreqClass };

inline std::string_view to_string(RouteAction a) {
  switch (a) {
    case RouteAction::kHashInto: return "hash_into";
    case RouteAction::kBroadcastTo: return "broadcast_to";
    case RouteAction::kResidualHash: return "residual_hash";
  }
  return "?";
}

inline RouteAction parse_route_action(std::string_view s) {
  if (s == "hash_into") return RouteAction::kHashInto;
  if (s == "broadcast_to") return RouteAction::kBroadcastTo;
  if (s == "residual_hash") return RouteAction::kResidualHash;
  throw FormatError("unknown route action '" + std::string(s) + "'");
}

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kHash: return "hash";
    case Strategy::kHjps: return "hjps";
    case Strategy::kPrpd: return "prpd";
    case Strategy::kFreqClass: return "freqclass";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "hash") return Strategy::kHash;
  if (s == "hjps") return Strategy::kHjps;
  if (s == "prpd") return Strategy::kPrpd;
  if (s == "freqclass") return Strategy::kFreqClass;
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

struct RouteDirective {
  JoinValue value;
  RouteAction r_action = RouteAction::kResidualHash;
  RouteAction s_action = RouteAction::kResidualHash;
  std::vector<std::uint32_t> group;  // ascending processor ids

  friend bool operator==(const RouteDirective&, const RouteDirective&) = default;
};

struct SkewStats {
  std::uint64_t tpc = 0;                    // total joined tuples
  Rational pwl = 0;                         // tpc / n
  Rational threshold = 0;                   // pn cutoff (hjps) or frequency cutoff (prpd)
  std::map<JoinValue, std::uint64_t> vwl;   // |R_b| * |S_b|, positive entries only
  std::map<JoinValue, Rational> pn;         // vwl / pwl, positive entries only
  std::vector<JoinValue> skewed;            // hjps: descending vwl; prpd: ascending id
  std::vector<JoinValue> both_skewed;       // prpd: skewed in R and in S
  std::vector<JoinValue> unplaced;          // hjps: skewed but no processor left to dedicate

  friend bool operator==(const SkewStats&, const SkewStats&) = default;
};

struct PartitionPlan {
  std::uint32_t n = 1;
  std::uint32_t domain_size = 1;
  Strategy strategy = Strategy::kHash;
  std::map<JoinValue, RouteDirective> directives;
  std::vector<std::uint32_t> residual_processors;
  SkewStats stats;

  const RouteDirective* find(JoinValue v) const {
    auto it = directives.find(v);
    return it == directives.end() ? nullptr : &it->second;
  }

  friend bool operator==(const PartitionPlan&, const PartitionPlan&) = default;
};

struct PlannerOptions {
  // HJPS marks b skewed when pn_b >= skew_threshold.
  Rational skew_threshold = 2;
  // PRPD marks b skewed in a relation when its relative frequency there is
  // at least prpd_threshold.
  Rational prpd_threshold = Rational(1, 10);
};

// The common join-attribute hash h(b).
inline std::uint32_t value_bucket(JoinValue v, std::uint32_t buckets) {
  return static_cast<std::uint32_t>(mix64(v.id) % buckets);
}

namespace detail {

inline std::vector<std::uint32_t> iota_ids(std::uint32_t first, std::uint32_t last) {
  std::vector<std::uint32_t> ids(last - first);
  std::iota(ids.begin(), ids.end(), first);
  return ids;
}

inline RouteDirective residual(JoinValue v, const std::vector<std::uint32_t>& processors) {
  return RouteDirective{v, RouteAction::kResidualHash, RouteAction::kResidualHash,
                        {processors[value_bucket(v, static_cast<std::uint32_t>(processors.size()))]}};
}

inline void require_same_domain(const ValueHistogram& r, const ValueHistogram& s) {
  if (r.domain_size() != s.domain_size()) {
    throw ConfigError("R and S histograms are over different domains (" + std::to_string(r.domain_size()) +
                      " vs " + std::to_string(s.domain_size()) + ")");
  }
}

// Values with a positive count in either relation, ascending.
inline std::vector<JoinValue> joint_support(const ValueHistogram& r, const ValueHistogram& s) {
  std::vector<JoinValue> out;
  for (const auto& [v, c] : r.counts()) out.push_back(v);
  for (const auto& [v, c] : s.counts()) {
    if (r.count(v) == 0) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void fill_workload_stats(SkewStats& st, const ValueHistogram& r, const ValueHistogram& s,
                                std::uint32_t n) {
  st.tpc = join_cardinality(r, s);
  st.pwl = as_rational(st.tpc) / Rational(n);
  if (st.tpc == 0) return;
  for (const auto& [v, c] : r.counts()) {
    std::uint64_t w = c * s.count(v);
    if (w == 0) continue;
    st.vwl.emplace(v, w);
    st.pn.emplace(v, as_rational(w) / st.pwl);
  }
}

}  // namespace detail

// Every domain value is routed to processor h(b) mod n on both sides.
inline PartitionPlan hash_plan(std::uint32_t domain_size, std::uint32_t n) {
  if (n == 0) throw ConfigError("processor count must be positive");
  if (domain_size == 0) throw ConfigError("domain size must be positive");
  PartitionPlan plan;
  plan.n = n;
  plan.domain_size = domain_size;
  plan.strategy = Strategy::kHash;
  plan.residual_processors = detail::iota_ids(0, n);
  for (std::uint32_t id = 0; id < domain_size; ++id) {
    plan.directives.emplace(JoinValue{id}, detail::residual(JoinValue{id}, plan.residual_processors));
  }
  return plan;
}

// HJPS. With TPC = sum |R_b||S_b| and pwl = TPC/n, a value is skewed when
// pn_b = |R_b||S_b| / pwl reaches the threshold (tested as
// vwl_b * n >= threshold * TPC). Skewed values, heaviest first, each get
// ceil(pn_b) fresh processors starting at 0, capped by what is left of the
// budget; the budget keeps one processor back whenever non-skewed work
// exists. Inside a group the larger side (R on ties) is partitioned and the
// other side broadcast. Everything else is hashed over the processors that
// were not dedicated.
inline PartitionPlan hjps_plan(const ValueHistogram& r, const ValueHistogram& s, std::uint32_t n,
                               const Rational& threshold = Rational(2)) {
  detail::require_same_domain(r, s);
  if (n < 2) throw ConfigError("HJPS needs at least two processors");
  if (threshold <= 0) throw ConfigError("skew threshold must be positive");

  PartitionPlan plan;
  plan.n = n;
  plan.domain_size = r.domain_size();
  plan.strategy = Strategy::kHjps;
  plan.stats.threshold = threshold;
  detail::fill_workload_stats(plan.stats, r, s, n);
  const auto support = detail::joint_support(r, s);
  const auto all = detail::iota_ids(0, n);

  if (plan.stats.tpc == 0) {
    plan.residual_processors = all;
    for (JoinValue v : support) plan.directives.emplace(v, detail::residual(v, all));
    return plan;
  }

  const Rational tpc(BigInt(plan.stats.tpc));
  bool rest_has_work = false;
  for (const auto& [v, w] : plan.stats.vwl) {
    if (as_rational(w) * Rational(n) >= threshold * tpc) {
      plan.stats.skewed.push_back(v);
    } else {
      rest_has_work = true;
    }
  }
  std::stable_sort(plan.stats.skewed.begin(), plan.stats.skewed.end(), [&](JoinValue a, JoinValue b) {
    return plan.stats.vwl.at(a) > plan.stats.vwl.at(b);
  });

  const std::uint32_t budget = rest_has_work ? n - 1 : n;
  std::uint32_t next = 0;
  std::vector<JoinValue> deferred;
  for (JoinValue v : plan.stats.skewed) {
    const std::uint32_t remaining = budget - next;
    if (remaining == 0) {
      plan.stats.unplaced.push_back(v);
      deferred.push_back(v);
      continue;
    }
    BigInt wanted = ceil_of(plan.stats.pn.at(v));
    std::uint32_t g = wanted >= remaining ? remaining : wanted.convert_to<std::uint32_t>();
    RouteDirective d;
    d.value = v;
    d.group = detail::iota_ids(next, next + g);
    if (r.count(v) >= s.count(v)) {
      d.r_action = RouteAction::kHashInto;
      d.s_action = RouteAction::kBroadcastTo;
    } else {
      d.r_action = RouteAction::kBroadcastTo;
      d.s_action = RouteAction::kHashInto;
    }
    plan.directives.emplace(v, std::move(d));
    next += g;
  }

  plan.residual_processors = detail::iota_ids(next, n);
  // With no processor left over, only zero-work values (and unplaced skewed
  // ones) remain; they are spread over all processors.
  const auto& rest = plan.residual_processors.empty() ? all : plan.residual_processors;
  for (JoinValue v : support) {
    if (!plan.directives.contains(v)) plan.directives.emplace(v, detail::residual(v, rest));
  }
  return plan;
}

// PRPD-style baseline over all n processors. A value whose frequency in R
// reaches the threshold has its R tuples partitioned (standing in for "kept
// where they are") and its S tuples broadcast; symmetric for S. Values
// skewed on both sides resolve to R-partition / S-broadcast.
inline PartitionPlan prpd_plan(const ValueHistogram& r, const ValueHistogram& s, std::uint32_t n,
                               const Rational& threshold) {
  detail::require_same_domain(r, s);
  if (n == 0) throw ConfigError("processor count must be positive");
  if (threshold <= 0) throw ConfigError("PRPD threshold must be positive");

  PartitionPlan plan;
  plan.n = n;
  plan.domain_size = r.domain_size();
  plan.strategy = Strategy::kPrpd;
  plan.stats.threshold = threshold;
  detail::fill_workload_stats(plan.stats, r, s, n);
  const auto all = detail::iota_ids(0, n);
  plan.residual_processors = all;

  auto skewed_in = [&](const ValueHistogram& h, JoinValue v) {
    return h.total() > 0 && as_rational(h.count(v)) >= threshold * as_rational(h.total());
  };
  for (JoinValue v : detail::joint_support(r, s)) {
    const bool in_r = skewed_in(r, v);
    const bool in_s = skewed_in(s, v);
    if (in_r || in_s) {
      plan.stats.skewed.push_back(v);
      if (in_r && in_s) plan.stats.both_skewed.push_back(v);
      RouteDirective d;
      d.value = v;
      d.group = all;
      d.r_action = in_r ? RouteAction::kHashInto : RouteAction::kBroadcastTo;
      d.s_action = in_r ? RouteAction::kBroadcastTo : RouteAction::kHashInto;
      plan.directives.emplace(v, std::move(d));
    } else {
      plan.directives.emplace(v, detail::residual(v, all));
    }
  }
  return plan;
}

// Co-locates each joining value on the processor chosen for its leaf by
// assign_classes over the product classes. Values present on one side only
// are hashed over all processors.
inline PartitionPlan freqclass_plan(const ValueHistogram& r, const ValueHistogram& s, std::uint32_t n) {
  detail::require_same_domain(r, s);
  if (n == 0) throw ConfigError("processor count must be positive");

  PartitionPlan plan;
  plan.n = n;
  plan.domain_size = r.domain_size();
  plan.strategy = Strategy::kFreqClass;
  detail::fill_workload_stats(plan.stats, r, s, n);
  const auto all = detail::iota_ids(0, n);
  plan.residual_processors = all;

  if (plan.stats.tpc > 0) {
    auto cs = product_classes(relative_frequencies(r), relative_frequencies(s));
    auto tree = build_frequency_tree(cs);
    auto assignment = assign_classes(tree, tree_workloads(cs, r.total(), s.total()), n);
    auto owners = leaf_owners(tree, assignment);
    if (!owners) throw Error("class assignment does not cover the frequency tree");
    for (const auto& [v, p] : *owners) {
      plan.directives.emplace(v, RouteDirective{v, RouteAction::kResidualHash, RouteAction::kResidualHash, {p}});
    }
  }
  for (JoinValue v : detail::joint_support(r, s)) {
    if (!plan.directives.contains(v)) plan.directives.emplace(v, detail::residual(v, all));
  }
  return plan;
}

inline PartitionPlan make_plan(Strategy strategy, const ValueHistogram& r, const ValueHistogram& s,
                               std::uint32_t n, const PlannerOptions& options = {}) {
  switch (strategy) {
    case Strategy::kHash:
      detail::require_same_domain(r, s);
      return hash_plan(r.domain_size(), n);
    case Strategy::kHjps: return hjps_plan(r, s, n, options.skew_threshold);
    case Strategy::kPrpd: return prpd_plan(r, s, n, options.prpd_threshold);
    case Strategy::kFreqClass: return freqclass_plan(r, s, n);
  }
  throw ConfigError("unknown strategy");
}

}  // namespace skewjoin
