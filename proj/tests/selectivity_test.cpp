#include <gtest/gtest.h>

#include <random>

#include "skewjoin/selectivity.hpp"
#include "test_support.hpp"

namespace skewjoin {
namespace {

FrequencyMap freqs(std::uint32_t m, std::initializer_list<std::pair<std::uint32_t, Rational>> entries) {
  FrequencyMap f;
  f.domain_size = m;
  for (const auto& [id, q] : entries) f.freqs.emplace(JoinValue{id}, q);
  return f;
}

ValueHistogram hist(std::uint32_t m, std::initializer_list<std::pair<std::uint32_t, std::uint64_t>> entries) {
  ValueHistogram h(m);
  for (const auto& [id, c] : entries) h.set(JoinValue{id}, c);
  return h;
}

TEST(JoinSelectivity, IdenticalSingleValue) {
  auto f = freqs(2, {{0, 1}});
  EXPECT_EQ(join_selectivity(f, f).value, 1);
}

TEST(JoinSelectivity, DisjointSupport) {
  EXPECT_EQ(join_selectivity(freqs(2, {{0, 1}}), freqs(2, {{1, 1}})).value, 0);
}

TEST(JoinSelectivity, MatchesNestedLoopFraction) {
  // R = [b1, b2], S = [b1, b2, b2, b2]: 4 of the 8 pairs match.
  auto r = testing::relation_from_values({0, 1}, "R");
  auto s = testing::relation_from_values({0, 1, 1, 1}, "S");
  const Rational oracle(testing::nested_loop_count(r, s), r.size() * s.size());
  ASSERT_EQ(oracle, Rational(1, 2));
  auto mu = join_selectivity(freqs(2, {{0, Rational(1, 2)}, {1, Rational(1, 2)}}),
                             freqs(2, {{0, Rational(1, 4)}, {1, Rational(3, 4)}}));
  EXPECT_EQ(mu.value, oracle);
}

TEST(JoinSelectivity, DomainMismatch) {
  EXPECT_THROW(join_selectivity(freqs(2, {{0, 1}}), freqs(3, {{0, 1}})), ConfigError);
  EXPECT_THROW(join_cardinality(ValueHistogram(2), ValueHistogram(3)), ConfigError);
}

TEST(JoinCardinality, Examples) {
  auto r = hist(2, {{0, 3}, {1, 1}});
  auto s = hist(2, {{0, 2}, {1, 5}});
  auto oracle = testing::nested_loop_count(materialize_relation(r, "R", 1), materialize_relation(s, "S", 2));
  ASSERT_EQ(oracle, 11u);
  EXPECT_EQ(join_cardinality(r, s), 11u);
  EXPECT_EQ(join_cardinality(r, ValueHistogram(2)), 0u);
  auto hot = hist(1, {{0, 1000}});
  EXPECT_EQ(join_cardinality(hot, hot), 1'000'000u);
}

TEST(JoinSelectivity, IdentitySymmetryAndBounds) {
  std::mt19937_64 rng(5);
  for (int iter = 0; iter < 300; ++iter) {
    const std::uint32_t m = 1 + rng() % 24;
    auto hr = testing::random_histogram(rng, m, 150);
    auto hs = testing::random_histogram(rng, m, 150);
    if (hr.empty() || hs.empty()) continue;
    auto fr = relative_frequencies(hr), fs = relative_frequencies(hs);
    auto mu = join_selectivity(fr, fs);
    ASSERT_EQ(mu, join_selectivity(fs, fr));
    ASSERT_GE(mu.value, 0);
    ASSERT_LE(mu.value, 1);
    ASSERT_EQ(mu.value * as_rational(hr.total()) * as_rational(hs.total()), as_rational(join_cardinality(hr, hs)));
    const bool one_common_value = hr.counts().size() == 1 && hs.counts().size() == 1 &&
                                  hr.counts().begin()->first == hs.counts().begin()->first;
    ASSERT_EQ(mu.value == 1, one_common_value);
  }
}

TEST(BruteForceJoin, SmallCases) {
  Relation r{"R", {{JoinValue{0}, 11}}};
  Relation s{"S", {{JoinValue{0}, 22}}};
  auto out = brute_force_join(r, s);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], (JoinedTuple{11, 22, JoinValue{0}}));

  Relation disjoint{"S", {{JoinValue{1}, 22}}};
  EXPECT_TRUE(brute_force_join(r, disjoint).empty());
}

TEST(BruteForceJoin, BudgetExceeded) {
  auto r = testing::relation_from_values(std::vector<std::uint32_t>(100, 0), "R");
  EXPECT_THROW(brute_force_join(r, r, 9'999), OracleBudgetError);
  EXPECT_EQ(brute_force_join(r, r, 10'000).size(), 10'000u);
}

TEST(BruteForceJoin, SizeMatchesCardinality) {
  std::mt19937_64 rng(8);
  for (int iter = 0; iter < 100; ++iter) {
    const std::uint32_t m = 1 + rng() % 16;
    auto hr = testing::random_histogram(rng, m, 120);
    auto hs = testing::random_histogram(rng, m, 120);
    auto r = materialize_relation(hr, "R", rng());
    auto s = materialize_relation(hs, "S", rng());
    auto out = brute_force_join(r, s);
    ASSERT_EQ(out.size(), join_cardinality(hr, hs));
    ASSERT_TRUE(std::is_sorted(out.begin(), out.end()));
  }
}

TEST(ChainSelectivity, Products) {
  std::vector<Selectivity> one{{1}};
  EXPECT_EQ(chain_selectivity(one).value, 1);
  std::vector<Selectivity> halves{{Rational(1, 2)}, {Rational(1, 2)}};
  EXPECT_EQ(chain_selectivity(halves).value, Rational(1, 4));
  EXPECT_THROW(chain_selectivity(std::span<const Selectivity>{}), ConfigError);
}

ChainSpec three_chain() {
  auto uniform2 = hist(2, {{0, 1}, {1, 1}});
  ChainSpec spec;
  spec.relations.push_back(ChainRelation{"R1", std::nullopt, uniform2, 2});
  spec.relations.push_back(cross_product_relation("R2", uniform2, uniform2));
  spec.relations.push_back(ChainRelation{"R3", uniform2, std::nullopt, 2});
  return spec;
}

TEST(ChainCardinality, ThreeChainExample) {
  auto spec = three_chain();
  auto mus = pairwise_selectivities(spec);
  ASSERT_EQ(mus.size(), 2u);
  EXPECT_EQ(mus[0].value, Rational(1, 2));
  EXPECT_EQ(mus[1].value, Rational(1, 2));
  EXPECT_EQ(spec.relations[1].total, 4u);
  EXPECT_EQ(chain_cardinality(spec), 4);
  EXPECT_EQ(brute_force_chain(chain_tables(spec)), 4u);
}

TEST(ChainCardinality, TwoChainReducesToJoinCardinality) {
  std::mt19937_64 rng(13);
  for (int iter = 0; iter < 50; ++iter) {
    auto hr = testing::random_histogram(rng, 6, 40);
    auto hs = testing::random_histogram(rng, 6, 40);
    ChainSpec spec;
    spec.relations.push_back(ChainRelation{"R", std::nullopt, hr, hr.total()});
    spec.relations.push_back(ChainRelation{"S", hs, std::nullopt, hs.total()});
    ASSERT_EQ(chain_cardinality(spec), as_rational(join_cardinality(hr, hs)));
    auto tables = chain_tables(spec);
    ASSERT_EQ(brute_force_chain(tables),
              brute_force_join(materialize_relation(hr, "R", 1), materialize_relation(hs, "S", 2)).size());
  }
}

TEST(ChainCardinality, ZeroOverlapAndEmptyRelations) {
  auto spec = three_chain();
  spec.relations[2].left_attr_hist = hist(3, {{2, 2}});
  spec.relations[1].right_attr_hist = hist(3, {{0, 2}, {1, 2}});
  spec.relations[0].right_attr_hist = hist(2, {{0, 1}, {1, 1}});
  EXPECT_EQ(chain_cardinality(spec), 0);

  auto empty = three_chain();
  empty.relations[0] = ChainRelation{"R1", std::nullopt, ValueHistogram(2), 0};
  EXPECT_EQ(chain_cardinality(empty), 0);
  EXPECT_EQ(brute_force_chain(chain_tables(empty)), 0u);
}

TEST(ChainSpecValidation, RejectsMalformed) {
  ChainSpec single;
  single.relations.push_back(ChainRelation{"R", std::nullopt, hist(2, {{0, 1}}), 1});
  EXPECT_THROW(chain_cardinality(single), ConfigError);

  auto missing = three_chain();
  missing.relations[1].left_attr_hist.reset();
  EXPECT_THROW(chain_cardinality(missing), ConfigError);

  auto wrong_total = three_chain();
  wrong_total.relations[0].total = 5;
  EXPECT_THROW(chain_cardinality(wrong_total), ConfigError);

  auto mismatch = three_chain();
  mismatch.relations[2].left_attr_hist = hist(3, {{0, 1}, {1, 1}});
  EXPECT_THROW(chain_cardinality(mismatch), ConfigError);
}

TEST(ChainTables, CorrelatedSpecRejected) {
  auto spec = three_chain();
  spec.independent = false;
  EXPECT_THROW(chain_tables(spec), PreconditionError);
  EXPECT_EQ(chain_cardinality(spec), 4);  // still an estimate
}

TEST(BruteForceChain, BudgetAndDegenerate) {
  ChainTable t(50, ChainRow{0, 0});
  std::vector<ChainTable> tables{t, t, t};
  EXPECT_THROW(brute_force_chain(tables, 124'999), OracleBudgetError);
  EXPECT_EQ(brute_force_chain(tables, 125'000), 125'000u);
  EXPECT_THROW(brute_force_chain(std::span<const ChainTable>(tables.data(), 1)), ConfigError);
}

// A correlated interior (a perfect diagonal A1 == A2) with skewed edge
// relations breaks the product rule, which is why equality is only
// asserted under independence.
TEST(ChainCardinality, CorrelatedInteriorDiffers) {
  std::vector<ChainTable> tables{
      {{0, 0}, {0, 0}, {0, 1}},  // R1 right attribute: {0, 0, 1}
      {{0, 0}, {1, 1}},          // R2 diagonal
      {{0, 0}, {0, 0}, {1, 0}}}; // R3 left attribute: {0, 0, 1}
  EXPECT_EQ(brute_force_chain(tables), 5u);

  ChainSpec spec;
  spec.independent = false;
  spec.relations.push_back(ChainRelation{"R1", std::nullopt, hist(2, {{0, 2}, {1, 1}}), 3});
  spec.relations.push_back(ChainRelation{"R2", hist(2, {{0, 1}, {1, 1}}), hist(2, {{0, 1}, {1, 1}}), 2});
  spec.relations.push_back(ChainRelation{"R3", hist(2, {{0, 2}, {1, 1}}), std::nullopt, 3});
  EXPECT_EQ(chain_cardinality(spec), Rational(9, 2));
}

}  // namespace
}  // namespace skewjoin
