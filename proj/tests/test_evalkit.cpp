#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "qter/evalkit.hpp"

using namespace qter;
using namespace qter::testing;

namespace {

// Counts over every unordered pair of the scope.
PairwiseMetrics brute_force(const std::vector<int>& label, const std::vector<int>& gold) {
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < label.size(); ++i) {
    for (std::size_t j = i + 1; j < label.size(); ++j) {
      const bool p = label[i] == label[j];
      const bool g = gold[i] == gold[j];
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
  }
  PairwiseMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = tp + fp ? double(tp) / double(tp + fp) : 1.0;
  m.recall = tp + fn ? double(tp) / double(tp + fn) : 1.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace

TEST_CASE("metrics from counts") {
  const PairwiseMetrics none = metrics_from_counts(0, 0, 0);
  CHECK(none.precision == 1.0);
  CHECK(none.recall == 1.0);
  CHECK(none.f1 == 1.0);
  const PairwiseMetrics m = metrics_from_counts(3, 1, 2);
  CHECK(m.precision == doctest::Approx(0.75));
  CHECK(m.recall == doctest::Approx(0.6));
  CHECK(m.f1 == doctest::Approx(2 * 0.75 * 0.6 / 1.35));
  CHECK(metrics_from_counts(0, 2, 3).f1 == 0.0);
  CHECK(metrics_from_counts(0, 0, 3).precision == 1.0);
  CHECK(metrics_from_counts(0, 2, 0).recall == 1.0);
}

TEST_CASE("pairwise metrics agree with a brute-force count on random partitions") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 14;
    const int k_pred = 1 + static_cast<int>(rng() % 5);
    const int k_gold = 1 + static_cast<int>(rng() % 5);
    std::vector<int> label(n), truth(n);
    std::vector<EntityIdx> entity_of(n);
    for (std::size_t i = 0; i < n; ++i) {
      label[i] = static_cast<int>(rng() % k_pred);
      truth[i] = static_cast<int>(rng() % k_gold);
      entity_of[i] = static_cast<EntityIdx>(truth[i]);
    }
    const GoldLabeling gold(entity_of, std::vector<std::string>(k_gold, "e"));
    Partition pred(k_pred);
    std::vector<RefIdx> scope;
    std::vector<RefPair> accepted;
    for (std::size_t i = 0; i < n; ++i) {
      pred[label[i]].push_back(static_cast<RefIdx>(i));
      scope.push_back(static_cast<RefIdx>(i));
      for (std::size_t j = i + 1; j < n; ++j) {
        if (label[i] == label[j]) accepted.emplace_back(i, j);
      }
    }
    pred.erase(std::remove_if(pred.begin(), pred.end(), [](const auto& g) { return g.empty(); }), pred.end());
    const PairwiseMetrics want = brute_force(label, truth);
    for (const PairwiseMetrics& got : {pairwise_metrics(pred, gold, scope), pairwise_metrics(accepted, gold, scope)}) {
      CHECK(got.tp == want.tp);
      CHECK(got.fp == want.fp);
      CHECK(got.fn == want.fn);
      CHECK(got.precision == doctest::Approx(want.precision));
      CHECK(got.recall == doctest::Approx(want.recall));
      CHECK(got.f1 == doctest::Approx(want.f1));
    }
  }
}

TEST_CASE("pairwise metrics reject malformed predictions") {
  const GoldLabeling gold({0, 0, 1}, {"a", "b"});
  const std::vector<RefIdx> scope{0, 1, 2};
  CHECK_THROWS_AS(pairwise_metrics(Partition{{0, 1}}, gold, scope), std::invalid_argument);
  CHECK_THROWS_AS(pairwise_metrics(Partition{{0, 1}, {1, 2}}, gold, scope), std::invalid_argument);
  CHECK_THROWS_AS(pairwise_metrics(Partition{{0, 1, 2}}, gold, std::vector<RefIdx>{0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(pairwise_metrics(Partition{{0}}, gold, std::vector<RefIdx>{0, 0}), std::invalid_argument);
}

TEST_CASE("raw pair decisions outside the scope are ignored") {
  const GoldLabeling gold({0, 0, 1, 1}, {"a", "b"});
  const std::vector<RefIdx> scope{0, 1, 2};
  const PairwiseMetrics m = pairwise_metrics(std::vector<RefPair>{{0, 1}, {2, 3}, {1, 3}}, gold, scope);
  CHECK(m.tp == 1);
  CHECK(m.fp == 0);
  CHECK(m.fn == 0);
}

TEST_CASE("projection and transitive closure") {
  const Partition p{{0, 3, 5}, {1, 2}, {4}};
  CHECK(project(p, std::vector<RefIdx>{5, 2, 0}) == Partition{{0, 5}, {2}});
  CHECK(project(p, std::vector<RefIdx>{}).empty());
  const std::vector<RefIdx> refs{1, 4, 7, 9, 12};
  CHECK(transitive_closure(refs, {{1, 9}, {9, 12}}) == Partition{{1, 9, 12}, {4}, {7}});
  CHECK(transitive_closure(refs, {}).size() == 5);
  CHECK_THROWS_AS(transitive_closure(refs, {{1, 2}}), std::invalid_argument);
}

TEST_CASE("resolver names") {
  for (BaselineKind k : {BaselineKind::A, BaselineKind::A_star, BaselineKind::NR, BaselineKind::NR_star,
                         BaselineKind::RCER}) {
    CHECK(parse_baseline(to_string(k)) == k);
  }
  CHECK(parse_baseline("RC-ER") == BaselineKind::RCER);
  CHECK_THROWS_AS(parse_baseline("B"), std::invalid_argument);
  CHECK(parse_trend("pR_recall") == TrendKind::pr_recall);
  CHECK(parse_trend("pra_precision") == TrendKind::pra_precision);
  CHECK(parse_trend("level_convergence") == TrendKind::level_convergence);
  CHECK_THROWS_AS(parse_trend("fig9"), std::invalid_argument);
}

TEST_CASE("threshold grid") {
  const auto g = threshold_grid(0.05, 1.0, 0.05);
  REQUIRE(g.size() == 20);
  CHECK(g.front() == doctest::Approx(0.05));
  CHECK(g[5] == 0.3);
  CHECK(g.back() == 1.0);
  CHECK(threshold_grid(0.5, 0.5, 0.1) == std::vector<double>{0.5});
  CHECK_THROWS_AS(threshold_grid(0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(threshold_grid(0.6, 0.5, 0.1), std::invalid_argument);
}

TEST_CASE("best F1 ties go to the lowest threshold") {
  auto resolver = [](double t) {
    const double f = t < 0.35 ? 0.5 : (t < 0.75 ? 0.8 : 0.3);
    PairwiseMetrics m;
    m.f1 = f;
    return m;
  };
  const ThresholdResult best = best_f1_over_thresholds(resolver, {0.9, 0.6, 0.4, 0.2});
  CHECK(best.threshold == 0.4);
  CHECK(best.metrics.f1 == 0.8);
  CHECK_THROWS_AS(best_f1_over_thresholds(resolver, {}), std::invalid_argument);
}

TEST_CASE("co-occurrence matching and relational baseline scores") {
  const Dataset ds = running_example();
  const SimilarityModel sim(ds, SimilarityConfig{});
  const auto id = [&](const char* s) { return ds.require_ref(s); };
  // r1's co-authors {C. Chen, A. Ansari}, r8's {L. Li, C. Chen}: the Chens pair first.
  const double expect = (1.0 + sim.ref_sim(id("r3"), id("r6"))) / 2.0;
  CHECK(cooccurrence_match(sim, id("r1"), id("r8")) == doctest::Approx(expect));
  CHECK(cooccurrence_match(sim, id("r1"), id("r4")) == doctest::Approx(1.0));
  CHECK(nr_score(sim, id("r1"), id("r8")) == doctest::Approx(0.5 * sim.ref_sim(id("r1"), id("r8")) + 0.5 * expect));
  // The pair itself does not count as co-occurrence evidence.
  const Dataset solo = from_lines(R"({"pub_id": "p1", "authors": ["A. X"]}
{"pub_id": "p2", "authors": ["A. X", "B. Y"]})");
  const SimilarityModel s2(solo, SimilarityConfig{});
  CHECK(cooccurrence_match(s2, 0, 1) == 0.0);
}

TEST_CASE("baselines on the running example") {
  const Dataset ds = running_example();
  const GoldLabeling gold = running_gold(ds);
  const SimilarityModel sim(ds, SimilarityConfig{});
  const auto wang = refs_of(ds, {"r1", "r4", "r8", "r9"});
  const ScoredPairs a = score_pairs_a(sim, wang);
  CHECK(a.pairs.size() == 6);
  // Exact matches (r1, r4), (r1, r8), (r4, r8) at 1.
  CHECK(a.accepted(0.99).size() == 3);
  CHECK(a.accepted(0.0).size() == 6);
  CHECK(baseline_a(sim, wang, 0.99) == a.accepted(0.99));
  CHECK(baseline_nr(sim, wang, 0.7) == score_pairs_nr(sim, wang).accepted(0.7));

  const auto grid = threshold_grid(0.05, 1.0, 0.05);
  const auto a_sweep = sweep(BaselineKind::A, sim, wang, gold, wang, grid);
  const auto astar = sweep(BaselineKind::A_star, sim, wang, gold, wang, grid);
  REQUIRE(a_sweep.size() == grid.size());
  // At 1 the exact-name triangle is accepted: 1 correct pair, 2 wrong.
  CHECK(a_sweep.back().tp == 1);
  CHECK(a_sweep.back().fp == 2);
  CHECK(astar.back().tp == 1);
  CHECK(astar.back().fp == 2);
  // Everything merges at low thresholds.
  CHECK(astar.front().tp == 3);
  CHECK(astar.front().fp == 3);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(astar[i].recall >= a_sweep[i].recall);
}

TEST_CASE("RC-ER sweep replays a single run") {
  const Dataset ds = running_example();
  const GoldLabeling gold = running_gold(ds);
  SimilarityConfig cfg;
  const SimilarityModel sim(ds, cfg);
  std::vector<RefIdx> all(ds.num_refs());
  std::iota(all.begin(), all.end(), 0);
  const auto wang = refs_of(ds, {"r1", "r4", "r8", "r9"});
  const std::vector<double> grid{0.3, 0.6, 0.9};
  const auto swept = sweep(BaselineKind::RCER, sim, all, gold, wang, grid);
  REQUIRE(swept.size() == 3);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    cfg.merge_threshold = grid[i];
    const RcerResult direct = run_rcer(SimilarityModel(ds, cfg), all);
    const PairwiseMetrics m = pairwise_metrics(project(direct.clusters, wang), gold, wang);
    CHECK(swept[i].tp == m.tp);
    CHECK(swept[i].fp == m.fp);
    CHECK(swept[i].fn == m.fn);
  }
}

TEST_CASE("most ambiguous reference spans the most entities") {
  GenParams gp;
  gp.n_entities = 50;
  gp.n_relationships = 80;
  gp.n_hyperedges = 150;
  gp.p_a = 0.5;
  gp.seed = 13;
  const SyntheticOutput data = generate(gp);
  SimilarityConfig cfg;
  cfg.measure = AttrMeasure::numeric;
  const SimilarityModel sim(data.dataset, cfg);
  auto span = [&](RefIdx r) {
    std::set<EntityIdx> es;
    for (RefIdx o = 0; o < data.dataset.num_refs(); ++o) {
      if (o == r || sim.delta_similar(r, o)) es.insert(data.gold.entity(o));
    }
    return es.size();
  };
  const RefIdx best = most_ambiguous_reference(sim, data.gold);
  for (RefIdx r = 0; r < data.dataset.num_refs(); ++r) CHECK(span(r) <= span(best));
}

TEST_CASE("trend report layout") {
  std::ostringstream out;
  write_trend(out, {TrendRow{"recall", 0.5, 0.3, 0.75, 0.1, 4}});
  const std::string s = out.str();
  CHECK(s.find("recall") != std::string::npos);
  CHECK(s.find("0.75") != std::string::npos);
  CHECK(std::count(s.begin(), s.end(), '\n') == 2);
}
