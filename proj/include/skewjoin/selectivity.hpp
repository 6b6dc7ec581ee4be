#pragma once

// Join selectivity, exact join cardinality, the chain-join product rule and
// the brute-force oracles used to check all of them.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skewjoin/core.hpp"
#include "skewjoin/error.hpp"
#include "skewjoin/hash.hpp"
#include "skewjoin/rational.hpp"

namespace skewjoin {

inline constexpr std::uint64_t kDefaultOracleBudget = 100'000'000;

// Probability that two tuples drawn uniformly from R and S agree on the join
// attribute; always in [0, 1].
struct Selectivity {
  Rational value;

  friend bool operator==(const Selectivity&, const Selectivity&) = default;
};

inline Selectivity join_selectivity(const FrequencyMap& f1, const FrequencyMap& f2) {
  if (f1.domain_size != f2.domain_size) {
    throw ConfigError("selectivity over different domains (" + std::to_string(f1.domain_size) +
                      " vs " + std::to_string(f2.domain_size) + ")");
  }
  Rational mu = 0;
  // Walk the smaller support; the other side answers lookups.
  const auto& small = f1.freqs.size() <= f2.freqs.size() ? f1 : f2;
  const auto& large = &small == &f1 ? f2 : f1;
  for (const auto& [v, f] : small.freqs) {
    auto it = large.freqs.find(v);
    if (it != large.freqs.end()) mu += f * it->second;
  }
  return Selectivity{mu};
}

// Sum over values of |R_b| * |S_b|; equals the joined-tuple count.
inline std::uint64_t join_cardinality(const ValueHistogram& r, const ValueHistogram& s) {
  if (r.domain_size() != s.domain_size()) {
    throw ConfigError("join cardinality over different domains (" + std::to_string(r.domain_size()) +
                      " vs " + std::to_string(s.domain_size()) + ")");
  }
  unsigned __int128 sum = 0;
  for (const auto& [v, c] : r.counts()) {
    sum += static_cast<unsigned __int128>(c) * s.count(v);
  }
  if (sum > std::numeric_limits<std::uint64_t>::max()) {
    throw ConfigError("join cardinality overflows 64 bits");
  }
  return static_cast<std::uint64_t>(sum);
}

inline Selectivity chain_selectivity(std::span<const Selectivity> mus) {
  if (mus.empty()) throw ConfigError("chain selectivity of an empty list");
  Rational product = 1;
  for (const auto& mu : mus) product *= mu.value;
  return Selectivity{product};
}

// One relation R_i(A_{i-1}, A_i) of a chain join. The first relation only
// carries the histogram over its right attribute and the last one only over
// its left attribute; interior relations carry both marginals.
struct ChainRelation {
  std::string name;
  std::optional<ValueHistogram> left_attr_hist;
  std::optional<ValueHistogram> right_attr_hist;
  std::uint64_t total = 0;
};

struct ChainSpec {
  std::vector<ChainRelation> relations;
  // Asserts the join attributes are independent, which is what makes the
  // product estimate exact.
  bool independent = true;
};

inline void validate(const ChainSpec& spec) {
  const auto& rels = spec.relations;
  const std::size_t k = rels.size();
  if (k < 2) throw ConfigError("a chain needs at least two relations");
  for (std::size_t i = 0; i < k; ++i) {
    const auto& r = rels[i];
    const bool needs_left = i > 0;
    const bool needs_right = i + 1 < k;
    if (needs_left && !r.left_attr_hist) {
      throw ConfigError("chain relation '" + r.name + "' is missing its left attribute histogram");
    }
    if (needs_right && !r.right_attr_hist) {
      throw ConfigError("chain relation '" + r.name + "' is missing its right attribute histogram");
    }
    for (const auto* h : {&r.left_attr_hist, &r.right_attr_hist}) {
      if (*h && (*h)->total() != r.total) {
        throw ConfigError("chain relation '" + r.name + "' has a histogram whose total differs from " +
                          std::to_string(r.total));
      }
    }
    if (needs_right && rels[i + 1].left_attr_hist &&
        r.right_attr_hist->domain_size() != rels[i + 1].left_attr_hist->domain_size()) {
      throw ConfigError("chain attribute domains disagree between '" + r.name + "' and '" +
                        rels[i + 1].name + "'");
    }
  }
}

// mu_{i,i+1} for each adjacent pair; an empty side gives selectivity 0.
inline std::vector<Selectivity> pairwise_selectivities(const ChainSpec& spec) {
  validate(spec);
  std::vector<Selectivity> mus;
  for (std::size_t i = 0; i + 1 < spec.relations.size(); ++i) {
    const auto& a = *spec.relations[i].right_attr_hist;
    const auto& b = *spec.relations[i + 1].left_attr_hist;
    if (a.empty() || b.empty()) {
      mus.push_back(Selectivity{0});
    } else {
      mus.push_back(join_selectivity(relative_frequencies(a), relative_frequencies(b)));
    }
  }
  return mus;
}

// (prod mu_{i,i+1}) * (prod |R_j|). Exact under independence; otherwise an
// estimate, returned unrounded.
inline Rational chain_cardinality(const ChainSpec& spec) {
  auto mus = pairwise_selectivities(spec);
  Rational size = chain_selectivity(mus).value;
  for (const auto& r : spec.relations) size *= as_rational(r.total);
  return size;
}

struct JoinedTuple {
  std::uint64_t payload_r = 0;
  std::uint64_t payload_s = 0;
  JoinValue value;

  friend auto operator<=>(const JoinedTuple&, const JoinedTuple&) = default;
};

inline void check_budget(std::uint64_t work, std::uint64_t budget, const char* what) {
  if (work > budget) {
    throw OracleBudgetError(std::string(what) + " needs " + std::to_string(work) +
                            " comparisons, budget is " + std::to_string(budget));
  }
}

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  return p > std::numeric_limits<std::uint64_t>::max() ? std::numeric_limits<std::uint64_t>::max()
                                                        : static_cast<std::uint64_t>(p);
}

// Nested-loop equijoin, returned sorted.
inline std::vector<JoinedTuple> brute_force_join(const Relation& r, const Relation& s,
                                                 std::uint64_t budget = kDefaultOracleBudget) {
  check_budget(saturating_mul(r.size(), s.size()), budget, "brute-force join");
  std::vector<JoinedTuple> out;
  for (const auto& tr : r.tuples) {
    for (const auto& ts : s.tuples) {
      if (tr.value == ts.value) out.push_back(JoinedTuple{tr.payload, ts.payload, tr.value});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline MultisetDigest digest_of(std::span<const JoinedTuple> tuples) {
  MultisetDigest d;
  for (const auto& t : tuples) d.add(t.payload_r, t.payload_s, t.value.id);
  return d;
}

// A chain relation as plain rows. Edge relations leave the unused attribute
// at 0; it never takes part in a comparison.
struct ChainRow {
  std::uint32_t left = 0;
  std::uint32_t right = 0;
};
using ChainTable = std::vector<ChainRow>;

// Result size of R_1 |><| R_2 |><| ... |><| R_k on R_i.right = R_{i+1}.left,
// computed by joining left to right with nested loops.
inline std::uint64_t brute_force_chain(std::span<const ChainTable> tables,
                                       std::uint64_t budget = kDefaultOracleBudget) {
  if (tables.size() < 2) throw ConfigError("a chain needs at least two relations");
  std::uint64_t work = 1;
  for (const auto& t : tables) work = saturating_mul(work, t.size());
  check_budget(work, budget, "brute-force chain join");

  // Each partial result only needs its last attribute value.
  std::vector<std::uint32_t> frontier;
  for (const auto& row : tables.front()) frontier.push_back(row.right);
  for (std::size_t i = 1; i + 1 < tables.size(); ++i) {
    std::vector<std::uint32_t> next;
    for (std::uint32_t x : frontier) {
      for (const auto& row : tables[i]) {
        if (row.left == x) next.push_back(row.right);
      }
    }
    frontier = std::move(next);
  }
  std::uint64_t count = 0;
  for (std::uint32_t x : frontier) {
    for (const auto& row : tables.back()) count += row.left == x;
  }
  return count;
}

// Rows realizing the independence model: every left-marginal tuple paired
// with every right-marginal tuple.
inline ChainTable cross_product_table(const ValueHistogram& left, const ValueHistogram& right) {
  ChainTable t;
  t.reserve(saturating_mul(left.total(), right.total()));
  for (const auto& [a, ca] : left.counts()) {
    for (const auto& [b, cb] : right.counts()) {
      t.insert(t.end(), ca * cb, ChainRow{a.id, b.id});
    }
  }
  return t;
}

// Spec entry for the cross-product interior relation: its marginals are the
// inputs scaled by the other side's total.
inline ChainRelation cross_product_relation(std::string name, const ValueHistogram& left,
                                            const ValueHistogram& right) {
  ChainRelation rel;
  rel.name = std::move(name);
  rel.total = left.total() * right.total();
  ValueHistogram l(left.domain_size()), r(right.domain_size());
  for (const auto& [v, c] : left.counts()) l.set(v, c * right.total());
  for (const auto& [v, c] : right.counts()) r.set(v, c * left.total());
  rel.left_attr_hist = std::move(l);
  rel.right_attr_hist = std::move(r);
  return rel;
}

inline ChainTable single_attribute_table(const ValueHistogram& h, bool as_left) {
  ChainTable t;
  for (const auto& [v, c] : h.counts()) {
    t.insert(t.end(), c, as_left ? ChainRow{v.id, 0} : ChainRow{0, v.id});
  }
  return t;
}

// Materializes an independent spec into rows. Interior relations must be
// products of their marginals, i.e. spec.independent must hold.
inline std::vector<ChainTable> chain_tables(const ChainSpec& spec) {
  validate(spec);
  if (!spec.independent) {
    throw PreconditionError("a correlated chain cannot be rebuilt from its marginals");
  }
  std::vector<ChainTable> tables;
  const std::size_t k = spec.relations.size();
  for (std::size_t i = 0; i < k; ++i) {
    const auto& r = spec.relations[i];
    if (i == 0) {
      tables.push_back(single_attribute_table(*r.right_attr_hist, false));
    } else if (i + 1 == k) {
      tables.push_back(single_attribute_table(*r.left_attr_hist, true));
    } else {
      // Under independence the joint count of (a, b) is
      // left(a) * right(b) / total, which must come out integral.
      const auto& l = *r.left_attr_hist;
      const auto& rh = *r.right_attr_hist;
      if (r.total == 0) {
        tables.emplace_back();
        continue;
      }
      ChainTable t;
      for (const auto& [a, ca] : l.counts()) {
        for (const auto& [b, cb] : rh.counts()) {
          const unsigned __int128 cells = static_cast<unsigned __int128>(ca) * cb;
          if (cells % r.total != 0) {
            throw PreconditionError("relation '" + r.name + "' marginals are not independent");
          }
          t.insert(t.end(), static_cast<std::uint64_t>(cells / r.total), ChainRow{a.id, b.id});
        }
      }
      tables.push_back(std::move(t));
    }
  }
  return tables;
}

}  // namespace skewjoin
