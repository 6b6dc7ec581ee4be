#pragma once

// Frequency classes: a partition of the join domain by (product) frequency,
// its two-level tree form, per-class workloads and a greedy assignment of
// whole classes or single leaves to processors.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skewjoin/core.hpp"
#include "skewjoin/error.hpp"
#include "skewjoin/rational.hpp"

namespace skewjoin {

enum class ClassMode {
  kExactHomogeneous,  // f1 = f2 = f, classes by f(b)
  kExactProduct,      // classes by f1(b) * f2(b)
  kRange,             // classes by half-open intervals of f1(b) * f2(b)
  kForeignKey,        // R is keyed, classes by f2(b) alone
};

inline std::string_view to_string(ClassMode mode) {
  switch (mode) {
    case ClassMode::kExactHomogeneous: return "exact-homogeneous";
    case ClassMode::kExactProduct: return "exact-product";
    case ClassMode::kRange: return "range";
    case ClassMode::kForeignKey: return "fk";
  }
  return "?";
}

inline ClassMode parse_class_mode(std::string_view s) {
  if (s == "exact-homogeneous" || s == "homogeneous") return ClassMode::kExactHomogeneous;
  if (s == "exact-product" || s == "product") return ClassMode::kExactProduct;
  if (s == "range") return ClassMode::kRange;
  if (s == "fk") return ClassMode::kForeignKey;
  throw ConfigError("unknown class mode '" + std::string(s) + "'");
}

struct FrequencyClass {
  // Shared frequency of the members; the interval's lower bound in range mode.
  Rational key;
  // Range mode only: exclusive upper bound of the interval.
  std::optional<Rational> upper;
  std::vector<JoinValue> members;  // ascending
  // Range mode only: exact f1(b) * f2(b) of each member, parallel to members.
  std::vector<Rational> member_products;

  friend bool operator==(const FrequencyClass&, const FrequencyClass&) = default;
};

// Classes are kept in strictly descending key order.
struct FrequencyClassSet {
  ClassMode mode = ClassMode::kExactProduct;
  std::vector<FrequencyClass> classes;

  std::size_t support_size() const {
    std::size_t n = 0;
    for (const auto& c : classes) n += c.members.size();
    return n;
  }

  friend bool operator==(const FrequencyClassSet&, const FrequencyClassSet&) = default;
};

namespace detail {

inline FrequencyClassSet group_by_key(const std::map<JoinValue, Rational>& keyed, ClassMode mode) {
  std::map<Rational, std::vector<JoinValue>, std::greater<>> groups;
  for (const auto& [v, key] : keyed) {
    if (key > 0) groups[key].push_back(v);
  }
  FrequencyClassSet cs;
  cs.mode = mode;
  for (auto& [key, members] : groups) {
    cs.classes.push_back(FrequencyClass{key, std::nullopt, std::move(members), {}});
  }
  return cs;
}

inline void require_same_domain(const FrequencyMap& a, const FrequencyMap& b) {
  if (a.domain_size != b.domain_size) {
    throw ConfigError("frequency maps over different domains (" + std::to_string(a.domain_size) +
                      " vs " + std::to_string(b.domain_size) + ")");
  }
}

inline std::map<JoinValue, Rational> products(const FrequencyMap& f1, const FrequencyMap& f2) {
  require_same_domain(f1, f2);
  std::map<JoinValue, Rational> out;
  for (const auto& [v, a] : f1.freqs) {
    auto it = f2.freqs.find(v);
    if (it != f2.freqs.end()) {
      Rational p = a * it->second;
      if (p > 0) out.emplace(v, std::move(p));
    }
  }
  return out;
}

}  // namespace detail

// Homogeneous inputs: values grouped by their common frequency.
inline FrequencyClassSet exact_classes(const FrequencyMap& f) {
  if (f.freqs.empty()) throw ConfigError("frequency classes of an empty frequency map");
  return detail::group_by_key(f.freqs, ClassMode::kExactHomogeneous);
}

// Heterogeneous inputs: values grouped by f1(b) * f2(b). Zero products are
// dropped since they produce no joined tuples.
inline FrequencyClassSet product_classes(const FrequencyMap& f1, const FrequencyMap& f2) {
  return detail::group_by_key(detail::products(f1, f2), ClassMode::kExactProduct);
}

// Values bucketed into [boundaries[k-1], boundaries[k]) by their product.
// Empty intervals produce no class.
inline FrequencyClassSet range_classes(const FrequencyMap& f1, const FrequencyMap& f2,
                                       std::span<const Rational> boundaries) {
  if (boundaries.size() < 2) throw ConfigError("range classes need at least two boundaries");
  for (std::size_t i = 1; i < boundaries.size(); ++i) {
    if (!(boundaries[i - 1] < boundaries[i])) {
      throw ConfigError("range class boundaries must be strictly ascending");
    }
  }
  auto prods = detail::products(f1, f2);
  std::vector<FrequencyClass> buckets(boundaries.size() - 1);
  for (std::size_t k = 0; k + 1 < boundaries.size(); ++k) {
    buckets[k].key = boundaries[k];
    buckets[k].upper = boundaries[k + 1];
  }
  for (const auto& [v, p] : prods) {
    auto it = std::upper_bound(boundaries.begin(), boundaries.end(), p);
    if (it == boundaries.begin() || it == boundaries.end()) {
      throw ConfigError("product " + to_string(p) + " of value " + std::to_string(v.id) +
                        " lies outside every range interval");
    }
    auto& bucket = buckets[static_cast<std::size_t>(it - boundaries.begin()) - 1];
    bucket.members.push_back(v);
    bucket.member_products.push_back(p);
  }
  FrequencyClassSet cs;
  cs.mode = ClassMode::kRange;
  for (auto it = buckets.rbegin(); it != buckets.rend(); ++it) {
    if (!it->members.empty()) cs.classes.push_back(std::move(*it));
  }
  return cs;
}

// Primary-key to foreign-key join with R the keyed side. f1 is flat over the
// keys, so classes follow f2 alone. Only values present on both sides count.
inline FrequencyClassSet fk_classes(const FrequencyMap& f2, const ValueHistogram& pk_side) {
  if (f2.freqs.empty()) throw ConfigError("frequency classes of an empty frequency map");
  if (pk_side.domain_size() != f2.domain_size) {
    throw ConfigError("PK and FK sides are over different domains");
  }
  for (const auto& [v, c] : pk_side.counts()) {
    if (c > 1) {
      throw PreconditionError("PK side is not a key: value " + std::to_string(v.id) + " occurs " +
                              std::to_string(c) + " times");
    }
  }
  std::map<JoinValue, Rational> keyed;
  for (const auto& [v, f] : f2.freqs) {
    if (pk_side.count(v) == 1) keyed.emplace(v, f);
  }
  return detail::group_by_key(keyed, ClassMode::kForeignKey);
}

// Joined tuples contributed by one class of `size` members sharing `key`.
// Homogeneous: |C|*f^2*|R|*|S|. Product and range: |C|*key*|R|*|S|, where
// for range classes the key stands in as a representative product.
// Foreign key: f1 = 1/|R| cancels |R|, leaving |C|*key*|S|.
inline Rational class_workload(std::uint64_t size, const Rational& key, std::uint64_t total_r,
                               std::uint64_t total_s, ClassMode mode) {
  const Rational n = as_rational(size);
  const Rational r = as_rational(total_r), s = as_rational(total_s);
  switch (mode) {
    case ClassMode::kExactHomogeneous: return n * key * key * r * s;
    case ClassMode::kForeignKey: return n * key * s;
    case ClassMode::kExactProduct:
    case ClassMode::kRange: return n * key * r * s;
  }
  return 0;
}

inline Rational leaf_workload(const FrequencyClassSet& cs, std::size_t class_index,
                              std::size_t member_index, std::uint64_t total_r, std::uint64_t total_s) {
  const auto& c = cs.classes.at(class_index);
  if (cs.mode == ClassMode::kRange) {
    return c.member_products.at(member_index) * as_rational(total_r) * as_rational(total_s);
  }
  return class_workload(1, c.key, total_r, total_s, cs.mode);
}

// Exact class workload; range classes sum their members' true products.
inline Rational class_workload(const FrequencyClassSet& cs, std::size_t class_index,
                               std::uint64_t total_r, std::uint64_t total_s) {
  const auto& c = cs.classes.at(class_index);
  if (cs.mode == ClassMode::kRange) {
    Rational sum = 0;
    for (std::size_t j = 0; j < c.members.size(); ++j) sum += leaf_workload(cs, class_index, j, total_r, total_s);
    return sum;
  }
  return class_workload(c.members.size(), c.key, total_r, total_s, cs.mode);
}

inline Rational total_workload(const FrequencyClassSet& cs, std::uint64_t total_r, std::uint64_t total_s) {
  Rational sum = 0;
  for (std::size_t k = 0; k < cs.classes.size(); ++k) sum += class_workload(cs, k, total_r, total_s);
  return sum;
}

inline Rational ideal_workload(const FrequencyClassSet& cs, std::uint64_t total_r, std::uint64_t total_s,
                               std::uint32_t n) {
  if (n == 0) throw ConfigError("processor count must be positive");
  return total_workload(cs, total_r, total_s) / Rational(n);
}

// Root -> one node per class -> one leaf per member value.
struct FrequencyTree {
  struct ClassNode {
    Rational key;
    std::vector<JoinValue> leaves;
  };

  ClassMode mode = ClassMode::kExactProduct;
  std::vector<ClassNode> nodes;  // descending key

  std::size_t leaf_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes) n += node.leaves.size();
    return n;
  }
};

inline FrequencyTree build_frequency_tree(const FrequencyClassSet& cs) {
  if (cs.classes.empty()) throw ConfigError("frequency tree of an empty class set");
  FrequencyTree tree;
  tree.mode = cs.mode;
  for (const auto& c : cs.classes) tree.nodes.push_back({c.key, c.members});
  std::stable_sort(tree.nodes.begin(), tree.nodes.end(),
                   [](const auto& a, const auto& b) { return a.key > b.key; });
  return tree;
}

// Workloads laid out like the tree: per class node, and per leaf under it.
struct TreeWorkloads {
  std::vector<Rational> per_class;
  std::vector<std::vector<Rational>> per_leaf;
};

inline TreeWorkloads tree_workloads(const FrequencyClassSet& cs, std::uint64_t total_r, std::uint64_t total_s) {
  TreeWorkloads w;
  for (std::size_t k = 0; k < cs.classes.size(); ++k) {
    w.per_class.push_back(class_workload(cs, k, total_r, total_s));
    auto& leaves = w.per_leaf.emplace_back();
    for (std::size_t j = 0; j < cs.classes[k].members.size(); ++j) {
      leaves.push_back(leaf_workload(cs, k, j, total_r, total_s));
    }
  }
  return w;
}

struct LeafRef {
  std::size_t class_index = 0;
  std::size_t leaf_index = 0;

  friend auto operator<=>(const LeafRef&, const LeafRef&) = default;
};

struct ProcessorSelection {
  std::uint32_t processor = 0;
  std::vector<std::size_t> classes;  // whole class nodes
  std::vector<LeafRef> leaves;       // leaves of split classes
  Rational load = 0;
};

struct ClassAssignment {
  Rational target = 0;
  std::vector<ProcessorSelection> selections;  // one per processor, by id

  Rational max_load() const {
    Rational m = 0;
    for (const auto& s : selections) m = std::max(m, s.load);
    return m;
  }
};

// Greedy longest-processing-time placement over the tree. Classes go in
// descending workload order (ties: smaller first member) onto the least
// loaded processor (ties: lower id). A class is placed whole only if that
// keeps the processor at or below the target T = total / n; otherwise its
// leaves are placed one at a time by the same rule. Every placement lands on
// a processor whose load is at most T, so no load exceeds T + max leaf.
inline ClassAssignment assign_classes(const FrequencyTree& tree, const TreeWorkloads& w, std::uint32_t n) {
  if (n == 0) throw ConfigError("processor count must be positive");
  const std::size_t k_classes = tree.nodes.size();
  if (w.per_class.size() != k_classes || w.per_leaf.size() != k_classes) {
    throw ConfigError("workloads do not match the frequency tree");
  }
  ClassAssignment a;
  for (std::size_t k = 0; k < k_classes; ++k) {
    if (w.per_leaf[k].size() != tree.nodes[k].leaves.size()) {
      throw ConfigError("leaf workloads do not match the frequency tree");
    }
    a.target += w.per_class[k];
  }
  a.target /= Rational(n);
  a.selections.resize(n);
  for (std::uint32_t p = 0; p < n; ++p) a.selections[p].processor = p;

  auto least_loaded = [&] {
    std::size_t best = 0;
    for (std::size_t p = 1; p < n; ++p) {
      if (a.selections[p].load < a.selections[best].load) best = p;
    }
    return best;
  };
  auto first_member = [&](std::size_t k) {
    return tree.nodes[k].leaves.empty() ? UINT32_MAX : tree.nodes[k].leaves.front().id;
  };

  std::vector<std::size_t> order(k_classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (w.per_class[x] != w.per_class[y]) return w.per_class[x] > w.per_class[y];
    return first_member(x) < first_member(y);
  });

  for (std::size_t k : order) {
    std::size_t p = least_loaded();
    if (a.selections[p].load + w.per_class[k] <= a.target) {
      a.selections[p].classes.push_back(k);
      a.selections[p].load += w.per_class[k];
      continue;
    }
    std::vector<std::size_t> leaves(tree.nodes[k].leaves.size());
    std::iota(leaves.begin(), leaves.end(), std::size_t{0});
    std::stable_sort(leaves.begin(), leaves.end(), [&](std::size_t x, std::size_t y) {
      return w.per_leaf[k][x] > w.per_leaf[k][y];
    });
    for (std::size_t j : leaves) {
      std::size_t q = least_loaded();
      a.selections[q].leaves.push_back(LeafRef{k, j});
      a.selections[q].load += w.per_leaf[k][j];
    }
  }
  return a;
}

// Processor owning each leaf, or nullopt if some leaf is covered zero or
// several times.
inline std::optional<std::map<JoinValue, std::uint32_t>> leaf_owners(const FrequencyTree& tree,
                                                                     const ClassAssignment& a) {
  std::map<JoinValue, std::uint32_t> owner;
  auto claim = [&](JoinValue v, std::uint32_t p) { return owner.emplace(v, p).second; };
  for (const auto& sel : a.selections) {
    for (std::size_t k : sel.classes) {
      for (JoinValue v : tree.nodes.at(k).leaves) {
        if (!claim(v, sel.processor)) return std::nullopt;
      }
    }
    for (const auto& leaf : sel.leaves) {
      if (!claim(tree.nodes.at(leaf.class_index).leaves.at(leaf.leaf_index), sel.processor)) {
        return std::nullopt;
      }
    }
  }
  if (owner.size() != tree.leaf_count()) return std::nullopt;
  return owner;
}

}  // namespace skewjoin
