// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "skewjoin/skewjoin.hpp"
#include "test_support.hpp"

namespace {

using namespace skewjoin;
namespace fs = std::filesystem;

// Hash baseline jps_factor on the zipf instance (about 5.0127).
const Rational kHashZipfJpsFactor = Rational(245111360, 48898471);

struct Outcome {
  bool pass = false;
  std::string detail;
};

ValueHistogram nonempty_histogram(std::mt19937_64& rng, std::uint32_t m, std::uint64_t max_total) {
  for (;;) {
    auto h = testing::random_histogram(rng, m, max_total);
    if (h.total() > 0) return h;
  }
}

Outcome selectivity_identity() {
  std::mt19937_64 rng(1001);
  for (int i = 0; i < 1000; ++i) {
    const std::uint32_t m = 1 + rng() % 32;
    auto hr = nonempty_histogram(rng, m, 200);
    auto hs = nonempty_histogram(rng, m, 200);
    auto r = materialize_relation(hr, "R", rng());
    auto s = materialize_relation(hs, "S", rng());
    const Rational estimate = join_selectivity(relative_frequencies(hr), relative_frequencies(hs)).value *
                              as_rational(hr.total()) * as_rational(hs.total());
    const auto exact = brute_force_join(r, s).size();
    if (estimate != as_rational(exact)) {
      return {false, "pair " + std::to_string(i) + ": " + to_string(estimate) + " vs " + std::to_string(exact)};
    }
  }
  return {true, "1000 pairs exact"};
}

Outcome chain_product_rule() {
  std::mt19937_64 rng(2002);
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 2 + rng() % 3;
    // Attribute A_j joins relation j and j+1.
    std::vector<std::uint32_t> domains(k - 1);
    for (auto& d : domains) d = 1 + rng() % 8;
    ChainSpec spec;
    std::vector<ChainTable> tables;
    for (std::size_t j = 0; j < k; ++j) {
      const std::string name = "R" + std::to_string(j + 1);
      if (j == 0) {
        auto h = nonempty_histogram(rng, domains[0], 10);
        spec.relations.push_back(ChainRelation{name, std::nullopt, h, h.total()});
        tables.push_back(single_attribute_table(h, false));
      } else if (j + 1 == k) {
        auto h = nonempty_histogram(rng, domains[j - 1], 10);
        spec.relations.push_back(ChainRelation{name, h, std::nullopt, h.total()});
        tables.push_back(single_attribute_table(h, true));
      } else {
        auto left = nonempty_histogram(rng, domains[j - 1], 6);
        auto right = nonempty_histogram(rng, domains[j], 6);
        spec.relations.push_back(cross_product_relation(name, left, right));
        tables.push_back(cross_product_table(left, right));
      }
    }
    const Rational estimate = chain_cardinality(spec);
    const std::uint64_t exact = brute_force_chain(tables);
    if (estimate != as_rational(exact)) {
      return {false, "chain " + std::to_string(i) + ": " + to_string(estimate) + " vs " + std::to_string(exact)};
    }
  }
  return {true, "200 chains exact"};
}

Outcome plan_completeness() {
  std::mt19937_64 rng(3003);
  const std::uint32_t procs[] = {2, 4, 8};
  std::uint64_t runs = 0;
  for (int i = 0; i < 200; ++i) {
    const std::uint32_t m = 1 + rng() % 64;
    auto hr = testing::random_histogram(rng, m, 500);
    auto hs = testing::random_histogram(rng, m, 500);
    const std::uint32_t n = procs[rng() % 3];
    auto r = materialize_relation(hr, "R", rng());
    auto s = materialize_relation(hs, "S", rng());
    for (Strategy st : {Strategy::kHash, Strategy::kHjps, Strategy::kPrpd}) {
      auto report = execute_plan(make_plan(st, hr, hs, n), r, s);
      if (!verify_output(report, r, s)) {
        return {false, std::string(to_string(st)) + " instance " + std::to_string(i) + " lost or duplicated output"};
      }
      ++runs;
    }
  }
  return {true, std::to_string(runs) + " plans verified"};
}

Outcome zipf_skew_reduction() {
  auto hr = generate_histogram(1000, 100'000, ZipfDist{1.0}, 7);
  auto hs = generate_histogram(1000, 100'000, ZipfDist{1.0}, 11);
  const Rational hash = simulate_counts(hash_plan(1000, 8), hr, hs).metrics.jps_factor;
  const Rational hjps = simulate_counts(hjps_plan(hr, hs, 8), hr, hs).metrics.jps_factor;
  char buf[160];
  std::snprintf(buf, sizeof buf, "hash %.6f (%s), hjps %.6f (%s)", to_double(hash), to_string(hash).c_str(),
                to_double(hjps), to_string(hjps).c_str());
  const bool pass = hjps < hash && hjps <= 2 && hash == kHashZipfJpsFactor;
  return {pass, buf};
}

Outcome hand_trace() {
  auto h = testing::hand_trace_n8_histogram();
  auto plan = hjps_plan(h, h, 8);
  const auto& d = plan.directives.at(JoinValue{0});
  const bool pass = plan.stats.tpc == 11'000 && plan.stats.pwl == 1'375 &&
                    plan.stats.skewed == std::vector<JoinValue>{JoinValue{0}} &&
                    d.group == std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5, 6} &&
                    plan.residual_processors == std::vector<std::uint32_t>{7};
  return {pass, "TPC " + std::to_string(plan.stats.tpc) + ", pwl " + to_string(plan.stats.pwl) + ", group of " +
                    std::to_string(d.group.size()) + ", residual " + std::to_string(plan.residual_processors.size())};
}

Outcome class_conservation() {
  std::mt19937_64 rng(6006);
  for (int i = 0; i < 500; ++i) {
    const std::uint32_t m = 1 + rng() % 64;
    auto hr = nonempty_histogram(rng, m, 500);
    auto hs = generate_histogram(m, 1 + rng() % 500, ZipfDist{0.5 + (rng() % 100) / 50.0}, rng());
    const std::uint32_t n = 1 + rng() % 16;
    auto cs = product_classes(relative_frequencies(hr), relative_frequencies(hs));
    Rational sum = 0;
    for (std::size_t k = 0; k < cs.classes.size(); ++k) sum += class_workload(cs, k, hr.total(), hs.total());
    if (sum != as_rational(join_cardinality(hr, hs))) {
      return {false, "pair " + std::to_string(i) + ": class workloads do not sum to the join size"};
    }
    if (cs.classes.empty()) continue;
    auto tree = build_frequency_tree(cs);
    auto w = tree_workloads(cs, hr.total(), hs.total());
    Rational max_leaf = 0;
    for (const auto& leaves : w.per_leaf) {
      for (const auto& x : leaves) max_leaf = std::max(max_leaf, x);
    }
    auto a = assign_classes(tree, w, n);
    if (a.max_load() > ideal_workload(cs, hr.total(), hs.total(), n) + max_leaf) {
      return {false, "pair " + std::to_string(i) + ": assignment exceeds ideal + max leaf"};
    }
  }
  return {true, "500 pairs conserved and within bound"};
}

Outcome pipeline_determinism() {
  ExperimentConfig cfg;
  cfg.r = RelationSpec{200, 5'000, ZipfDist{1.0}, 7};
  cfg.s = RelationSpec{200, 5'000, ZipfDist{1.0}, 11};
  cfg.n = 8;
  cfg.strategies = {Strategy::kHash, Strategy::kHjps, Strategy::kPrpd, Strategy::kFreqClass};
  cfg.tuple_level = true;
  cfg.threads = 4;
  const fs::path base = fs::temp_directory_path() / "skewjoin_acceptance";
  fs::remove_all(base);
  run_pipeline(cfg, base / "a");
  run_pipeline(cfg, base / "b");
  std::size_t files = 0;
  Outcome out{true, ""};
  for (const auto& e : fs::directory_iterator(base / "a")) {
    ++files;
    if (read_file(e.path()) != read_file(base / "b" / e.path().filename())) {
      out = {false, e.path().filename().string() + " differs between runs"};
      break;
    }
  }
  fs::remove_all(base);
  if (out.pass) out.detail = std::to_string(files) + " files byte-identical";
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"selectivity identity", selectivity_identity},
      {"chain product rule", chain_product_rule},
      {"plan completeness", plan_completeness},
      {"zipf skew reduction", zipf_skew_reduction},
      {"hjps hand trace", hand_trace},
      {"frequency-class conservation", class_conservation},
      {"pipeline determinism", pipeline_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(), secs);
    failures += !o.pass;
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
