#pragma once

// Value histograms, exact relative frequencies, synthetic histogram
// generation and materialization into concrete tuple relations.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "skewjoin/error.hpp"
#include "skewjoin/hash.hpp"
#include "skewjoin/rational.hpp"

namespace skewjoin {

// Dense index of a join-attribute value, 0 .. domain_size-1.
struct JoinValue {
  std::uint32_t id = 0;

  friend auto operator<=>(const JoinValue&, const JoinValue&) = default;
};

// Exact tuple counts per join value for one relation. Zero counts are never
// stored, so iteration walks the support in ascending value order.
class ValueHistogram {
 public:
  ValueHistogram() = default;
  explicit ValueHistogram(std::uint32_t domain_size) : domain_size_(domain_size) {
    if (domain_size == 0) throw ConfigError("histogram domain size must be positive");
  }

  std::uint32_t domain_size() const { return domain_size_; }
  std::uint64_t total() const { return total_; }
  const std::map<JoinValue, std::uint64_t>& counts() const { return counts_; }
  bool empty() const { return total_ == 0; }

  std::uint64_t count(JoinValue v) const {
    auto it = counts_.find(v);
    return it == counts_.end() ? 0 : it->second;
  }

  void set(JoinValue v, std::uint64_t c) {
    check(v);
    total_ -= count(v);
    if (c == 0) {
      counts_.erase(v);
    } else {
      counts_[v] = c;
      total_ += c;
    }
  }

  void add(JoinValue v, std::uint64_t c = 1) {
    check(v);
    if (c == 0) return;
    counts_[v] += c;
    total_ += c;
  }

  friend bool operator==(const ValueHistogram&, const ValueHistogram&) = default;

 private:
  void check(JoinValue v) const {
    if (v.id >= domain_size_) {
      throw ConfigError("join value " + std::to_string(v.id) + " outside domain of size " +
                        std::to_string(domain_size_));
    }
  }

  std::uint32_t domain_size_ = 1;
  std::uint64_t total_ = 0;
  std::map<JoinValue, std::uint64_t> counts_;
};

// Relative frequencies count/total as exact rationals; absent values are 0.
struct FrequencyMap {
  std::uint32_t domain_size = 1;
  std::map<JoinValue, Rational> freqs;

  Rational at(JoinValue v) const {
    auto it = freqs.find(v);
    return it == freqs.end() ? Rational(0) : it->second;
  }

  friend bool operator==(const FrequencyMap&, const FrequencyMap&) = default;
};

struct Tuple {
  JoinValue value;
  std::uint64_t payload = 0;

  friend bool operator==(const Tuple&, const Tuple&) = default;
};

struct Relation {
  std::string name;
  std::vector<Tuple> tuples;

  std::size_t size() const { return tuples.size(); }
};

struct UniformDist {};
struct ZipfDist {
  double theta = 1.0;
};
struct WeightsDist {
  std::vector<double> weights;
};
using Distribution = std::variant<UniformDist, ZipfDist, WeightsDist>;

inline ValueHistogram build_histogram(const Relation& rel, std::uint32_t domain_size) {
  ValueHistogram h(domain_size);
  for (const auto& t : rel.tuples) h.add(t.value);
  return h;
}

// Domain size inferred as max value + 1 (1 for an empty relation).
inline ValueHistogram build_histogram(const Relation& rel) {
  std::uint32_t m = 1;
  for (const auto& t : rel.tuples) m = std::max(m, t.value.id + 1);
  return build_histogram(rel, m);
}

inline FrequencyMap relative_frequencies(const ValueHistogram& h) {
  if (h.total() == 0) throw EmptyRelationError("relative frequencies of an empty relation");
  FrequencyMap f;
  f.domain_size = h.domain_size();
  for (const auto& [v, c] : h.counts()) f.freqs.emplace(v, make_rational(c, h.total()));
  return f;
}

namespace detail {

// Largest-remainder apportionment of `total` over the given quotas. Ties among
// equal fractional parts are broken by a seeded per-index key.
inline std::vector<std::uint64_t> apportion(const std::vector<long double>& quotas,
                                            std::uint64_t total, std::uint64_t seed) {
  const std::size_t m = quotas.size();
  std::vector<std::uint64_t> counts(m);
  std::vector<long double> rem(m);
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    long double fl = std::floor(quotas[i]);
    counts[i] = static_cast<std::uint64_t>(fl);
    rem[i] = quotas[i] - fl;
    assigned += counts[i];
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    std::uint64_t ka = mix64(seed ^ mix64(a)), kb = mix64(seed ^ mix64(b));
    return ka != kb ? ka < kb : a < b;
  });
  // Floating error can push the floor sum a unit or two off in either
  // direction; walk the remainder order to settle it exactly.
  std::size_t k = 0;
  while (assigned < total) {
    ++counts[order[k % m]];
    ++assigned;
    ++k;
  }
  std::size_t j = m;
  while (assigned > total) {
    j = (j == 0 ? m : j) - 1;
    if (counts[order[j]] > 0) {
      --counts[order[j]];
      --assigned;
    }
  }
  return counts;
}

}  // namespace detail

// Deterministic for fixed arguments; the histogram total is exactly `total`.
// Value b_i (id i) receives the i-th largest share: zipf weights are
// (i+1)^-theta, so id 0 is the hottest value.
inline ValueHistogram generate_histogram(std::uint32_t domain_size, std::uint64_t total,
                                         const Distribution& dist, std::uint64_t seed) {
  if (domain_size == 0) throw ConfigError("domain size must be positive");
  std::vector<long double> weights(domain_size, 1.0L);
  bool integral_uniform = false;

  if (std::holds_alternative<UniformDist>(dist)) {
    integral_uniform = true;
  } else if (auto* z = std::get_if<ZipfDist>(&dist)) {
    if (!(z->theta >= 0.0) || !std::isfinite(z->theta)) {
      throw ConfigError("zipf theta must be a finite value >= 0");
    }
    for (std::uint32_t i = 0; i < domain_size; ++i) {
      weights[i] = std::pow(static_cast<long double>(i + 1), -static_cast<long double>(z->theta));
    }
  } else {
    const auto& w = std::get<WeightsDist>(dist).weights;
    if (w.size() != domain_size) {
      throw ConfigError("weight vector has " + std::to_string(w.size()) +
                        " entries, expected " + std::to_string(domain_size));
    }
    for (std::uint32_t i = 0; i < domain_size; ++i) {
      if (!(w[i] >= 0.0) || !std::isfinite(w[i])) throw ConfigError("weights must be finite and >= 0");
      weights[i] = w[i];
    }
  }

  long double sum = std::accumulate(weights.begin(), weights.end(), 0.0L);
  if (sum <= 0.0L && total > 0) throw ConfigError("weights are all zero");

  std::vector<std::uint64_t> counts;
  if (integral_uniform) {
    // Every fractional part is the same, so the total % m leftover units go
    // entirely through the seeded tie order.
    const auto base = static_cast<long double>(total / domain_size);
    counts = detail::apportion(std::vector<long double>(domain_size, base), total, seed);
  } else {
    std::vector<long double> quotas(domain_size);
    for (std::uint32_t i = 0; i < domain_size; ++i) {
      quotas[i] = sum > 0.0L ? static_cast<long double>(total) * weights[i] / sum : 0.0L;
    }
    counts = detail::apportion(quotas, total, seed);
  }

  ValueHistogram h(domain_size);
  for (std::uint32_t i = 0; i < domain_size; ++i) h.set(JoinValue{i}, counts[i]);
  return h;
}

// Payloads pack a 32-bit hash of the relation name over a 32-bit sequence
// index, so they are unique within a relation.
inline std::uint64_t make_payload(std::string_view relation_name, std::uint64_t index) {
  return ((fnv1a64(relation_name) & 0xffffffffULL) << 32) | (index & 0xffffffffULL);
}

// Exactly counts[b] tuples carry value b. Tuple order is a seeded shuffle;
// payload sequence numbers follow the final order.
inline Relation materialize_relation(const ValueHistogram& h, std::string name, std::uint64_t seed) {
  if (h.total() > 0xffffffffULL) throw ConfigError("relation too large to materialize");
  Relation rel;
  rel.name = std::move(name);
  std::vector<JoinValue> values;
  values.reserve(h.total());
  for (const auto& [v, c] : h.counts()) values.insert(values.end(), c, v);

  // Fisher-Yates over a counter-based generator, identical on every platform.
  std::uint64_t state = mix64(seed ^ 0x243f6a8885a308d3ULL);
  for (std::size_t i = values.size(); i > 1; --i) {
    state = mix64(state);
    std::size_t j = static_cast<std::size_t>(state % i);
    std::swap(values[i - 1], values[j]);
  }

  rel.tuples.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    rel.tuples.push_back(Tuple{values[i], make_payload(rel.name, i)});
  }
  return rel;
}

}  // namespace skewjoin
