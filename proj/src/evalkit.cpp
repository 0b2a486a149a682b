#include "qter/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace qter {

namespace {

std::uint64_t pairs_of(std::uint64_t n) { return n * (n - (n ? 1 : 0)) / 2; }

std::uint64_t gold_pairs(const GoldLabeling& gold, std::span<const RefIdx> scope) {
  std::unordered_map<EntityIdx, std::uint64_t> counts;
  for (RefIdx r : scope) ++counts[gold.entity(r)];
  std::uint64_t total = 0;
  for (const auto& [e, n] : counts) total += pairs_of(n);
  return total;
}

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

PairwiseMetrics metrics_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  PairwiseMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double denom = m.precision + m.recall;
  m.f1 = denom > 0.0 ? 2.0 * m.precision * m.recall / denom : 0.0;
  return m;
}

PairwiseMetrics pairwise_metrics(const Partition& pred, const GoldLabeling& gold, std::span<const RefIdx> scope) {
  std::unordered_map<RefIdx, int> in_scope;
  for (RefIdx r : scope) {
    if (!in_scope.emplace(r, 0).second) throw std::invalid_argument("scope lists a reference twice");
  }
  std::uint64_t predicted = 0;
  std::uint64_t tp = 0;
  for (const auto& group : pred) {
    std::unordered_map<EntityIdx, std::uint64_t> counts;
    for (RefIdx r : group) {
      auto it = in_scope.find(r);
      if (it == in_scope.end()) throw std::invalid_argument("prediction holds a reference outside the scope");
      if (it->second++) throw std::invalid_argument("prediction assigns a reference twice");
      ++counts[gold.entity(r)];
    }
    predicted += pairs_of(group.size());
    for (const auto& [e, n] : counts) tp += pairs_of(n);
  }
  for (const auto& [r, seen] : in_scope) {
    if (!seen) throw std::invalid_argument("prediction misses a reference of the scope");
  }
  return metrics_from_counts(tp, predicted - tp, gold_pairs(gold, scope) - tp);
}

PairwiseMetrics pairwise_metrics(const std::vector<RefPair>& accepted, const GoldLabeling& gold,
                                 std::span<const RefIdx> scope) {
  std::vector<RefIdx> sorted(scope.begin(), scope.end());
  std::sort(sorted.begin(), sorted.end());
  auto inside = [&](RefIdx r) { return std::binary_search(sorted.begin(), sorted.end(), r); };
  std::vector<RefPair> pairs;
  for (auto [a, b] : accepted) {
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (inside(a) && inside(b)) pairs.emplace_back(a, b);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::uint64_t tp = 0;
  for (const auto& [a, b] : pairs) tp += gold.entity(a) == gold.entity(b) ? 1 : 0;
  return metrics_from_counts(tp, pairs.size() - tp, gold_pairs(gold, sorted) - tp);
}

Partition project(const Partition& p, std::span<const RefIdx> scope) {
  std::vector<RefIdx> sorted(scope.begin(), scope.end());
  std::sort(sorted.begin(), sorted.end());
  Partition out;
  for (const auto& group : p) {
    std::vector<RefIdx> kept;
    for (RefIdx r : group) {
      if (std::binary_search(sorted.begin(), sorted.end(), r)) kept.push_back(r);
    }
    if (!kept.empty()) out.push_back(std::move(kept));
  }
  canonicalize(out);
  return out;
}

Partition transitive_closure(std::span<const RefIdx> refs, const std::vector<RefPair>& accepted) {
  std::vector<RefIdx> sorted(refs.begin(), refs.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  auto pos = [&](RefIdx r) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), r);
    if (it == sorted.end() || *it != r) throw std::invalid_argument("accepted pair outside the reference set");
    return static_cast<std::uint32_t>(it - sorted.begin());
  };
  UnionFind uf(sorted.size());
  for (const auto& [a, b] : accepted) uf.unite(pos(a), pos(b));
  std::unordered_map<std::uint32_t, std::size_t> group_of;
  Partition out;
  for (std::uint32_t i = 0; i < sorted.size(); ++i) {
    const auto root = uf.find(i);
    auto [it, inserted] = group_of.emplace(root, out.size());
    if (inserted) out.emplace_back();
    out[it->second].push_back(sorted[i]);
  }
  canonicalize(out);
  return out;
}

BaselineKind parse_baseline(std::string_view s) {
  if (s == "A") return BaselineKind::A;
  if (s == "A*") return BaselineKind::A_star;
  if (s == "NR") return BaselineKind::NR;
  if (s == "NR*") return BaselineKind::NR_star;
  if (s == "RCER" || s == "RC-ER") return BaselineKind::RCER;
  throw std::invalid_argument("unknown resolver " + std::string(s) + " (expected A, A*, NR, NR*, RCER)");
}

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::A: return "A";
    case BaselineKind::A_star: return "A*";
    case BaselineKind::NR: return "NR";
    case BaselineKind::NR_star: return "NR*";
    case BaselineKind::RCER: return "RCER";
  }
  return "?";
}

double cooccurrence_match(const SimilarityModel& sim, RefIdx a, RefIdx b) {
  const Dataset& ds = sim.dataset();
  auto strip = [&](std::vector<RefIdx> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [&](RefIdx r) { return r == a || r == b; }), v.end());
    return v;
  };
  const auto ca = strip(ds.cooccurring(a));
  const auto cb = strip(ds.cooccurring(b));
  if (ca.empty() || cb.empty()) return 0.0;
  struct Cand {
    double s;
    std::size_t i;
    std::size_t j;
  };
  std::vector<Cand> cands;
  cands.reserve(ca.size() * cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i) {
    for (std::size_t j = 0; j < cb.size(); ++j) cands.push_back({sim.ref_sim(ca[i], cb[j]), i, j});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.s != y.s) return x.s > y.s;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });
  std::vector<bool> used_a(ca.size()), used_b(cb.size());
  double total = 0.0;
  std::size_t matched = 0;
  for (const auto& c : cands) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = true;
    total += c.s;
    ++matched;
  }
  return total / static_cast<double>(matched);
}

double nr_score(const SimilarityModel& sim, RefIdx a, RefIdx b) {
  return sim.combined_sim(sim.ref_sim(a, b), cooccurrence_match(sim, a, b));
}

std::vector<RefPair> ScoredPairs::accepted(double threshold) const {
  std::vector<RefPair> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (scores[i] >= threshold) out.push_back(pairs[i]);
  }
  return out;
}

ScoredPairs score_pairs_a(const SimilarityModel& sim, std::span<const RefIdx> refs) {
  ScoredPairs out;
  out.pairs = block_candidates(sim, refs);
  for (const auto& [a, b] : out.pairs) out.scores.push_back(sim.ref_sim(a, b));
  return out;
}

ScoredPairs score_pairs_nr(const SimilarityModel& sim, std::span<const RefIdx> refs) {
  ScoredPairs out;
  out.pairs = block_candidates(sim, refs);
  for (const auto& [a, b] : out.pairs) out.scores.push_back(nr_score(sim, a, b));
  return out;
}

std::vector<RefPair> baseline_a(const SimilarityModel& sim, std::span<const RefIdx> refs, double threshold) {
  return score_pairs_a(sim, refs).accepted(threshold);
}

std::vector<RefPair> baseline_nr(const SimilarityModel& sim, std::span<const RefIdx> refs, double threshold) {
  return score_pairs_nr(sim, refs).accepted(threshold);
}

ThresholdResult best_f1_over_thresholds(const std::function<PairwiseMetrics(double)>& resolver,
                                        std::vector<double> thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("threshold list is empty");
  std::sort(thresholds.begin(), thresholds.end());
  ThresholdResult best;
  bool first = true;
  for (double t : thresholds) {
    const PairwiseMetrics m = resolver(t);
    if (first || m.f1 > best.metrics.f1) {
      best = {t, m};
      first = false;
    }
  }
  return best;
}

std::vector<double> threshold_grid(double lo, double hi, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("threshold step must be positive");
  if (hi < lo) throw std::invalid_argument("threshold range is empty");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double t = lo + step * i;
    if (t > hi + 1e-9) break;
    out.push_back(std::round(t * 1e9) / 1e9);
  }
  return out;
}

std::vector<PairwiseMetrics> sweep(BaselineKind kind, const SimilarityModel& sim, std::span<const RefIdx> refs,
                                   const GoldLabeling& gold, std::span<const RefIdx> scope,
                                   const std::vector<double>& thresholds, const RcerOptions& opts) {
  std::vector<PairwiseMetrics> out;
  if (thresholds.empty()) return out;
  if (kind == BaselineKind::RCER) {
    SimilarityConfig cfg = sim.config();
    cfg.merge_threshold = std::clamp(*std::min_element(thresholds.begin(), thresholds.end()), 0.0, 1.0);
    SimilarityModel low(sim.dataset(), cfg);
    const RcerResult run = run_rcer(low, refs, opts);
    for (double t : thresholds) out.push_back(pairwise_metrics(project(run.partition_at(t), scope), gold, scope));
    return out;
  }
  const bool relational = kind == BaselineKind::NR || kind == BaselineKind::NR_star;
  const bool closed = kind == BaselineKind::A_star || kind == BaselineKind::NR_star;
  const ScoredPairs scored = relational ? score_pairs_nr(sim, refs) : score_pairs_a(sim, refs);
  for (double t : thresholds) {
    const auto accepted = scored.accepted(t);
    if (closed) {
      out.push_back(pairwise_metrics(project(transitive_closure(refs, accepted), scope), gold, scope));
    } else {
      out.push_back(pairwise_metrics(accepted, gold, scope));
    }
  }
  return out;
}

TrendKind parse_trend(std::string_view s) {
  if (s == "pR_recall" || s == "pr_recall") return TrendKind::pr_recall;
  if (s == "pRa_precision" || s == "pra_precision") return TrendKind::pra_precision;
  if (s == "level_convergence") return TrendKind::level_convergence;
  throw std::invalid_argument("unknown experiment " + std::string(s));
}

TrendConfig default_trend(TrendKind kind) {
  TrendConfig cfg;
  cfg.kind = kind;
  cfg.sim.measure = AttrMeasure::numeric;
  cfg.sim.alpha = 0.5;
  cfg.sim.delta = 0.5;
  cfg.sim.epsilon = 0.9;
  cfg.sim.merge_threshold = 0.5;
  cfg.thresholds = threshold_grid(0.05, 1.0, 0.05);
  for (std::uint64_t s = 1; s <= 50; ++s) cfg.seeds.push_back(s);
  switch (kind) {
    case TrendKind::pr_recall:
      cfg.base.n_entities = 100;
      cfg.base.n_relationships = 200;
      cfg.base.n_hyperedges = 500;
      cfg.base.p_a = 0.0;  // no attribute ambiguity: isolates identifying co-occurrences
      cfg.base.p_r_a = 0.0;
      cfg.base.p_c = 0.5;
      cfg.settings = {0.2, 0.5, 1.0};
      break;
    case TrendKind::pra_precision:
      cfg.base.n_entities = 100;
      cfg.base.n_relationships = 200;
      cfg.base.n_hyperedges = 500;
      cfg.base.p_a = 0.3;
      cfg.base.p_c = 0.5;
      cfg.base.p_r = 1.0;
      cfg.settings = {0.0, 0.3, 0.6};
      break;
    case TrendKind::level_convergence:
      cfg.base.n_entities = 500;
      cfg.base.n_relationships = 500;
      cfg.base.n_hyperedges = 2500;
      cfg.base.p_a = 0.3;
      cfg.base.p_r_a = 0.0;
      cfg.base.p_c = 0.5;
      cfg.settings = {0, 1, 2, 3};
      cfg.thresholds = {0.3};
      cfg.seeds.clear();
      for (std::uint64_t s = 1; s <= 100; ++s) cfg.seeds.push_back(s);
      break;
  }
  return cfg;
}

RefIdx most_ambiguous_reference(const SimilarityModel& sim, const GoldLabeling& gold) {
  const Dataset& ds = sim.dataset();
  if (ds.num_refs() == 0) throw std::invalid_argument("empty dataset");
  RefIdx best = 0;
  std::size_t best_count = 0;
  for (RefIdx r = 0; r < ds.num_refs(); ++r) {
    auto found = sim.matches(ds.ref(r).normalized);
    std::vector<EntityIdx> ents;
    for (RefIdx x : found) ents.push_back(gold.entity(x));
    std::sort(ents.begin(), ents.end());
    const auto n = static_cast<std::size_t>(std::unique(ents.begin(), ents.end()) - ents.begin());
    if (n > best_count) {
      best = r;
      best_count = n;
    }
  }
  return best;
}

std::vector<TrendRow> run_trend_experiment(const TrendConfig& cfg) {
  if (cfg.settings.empty() || cfg.seeds.empty() || cfg.thresholds.empty()) {
    throw std::invalid_argument("trend experiment needs settings, seeds and thresholds");
  }
  const std::size_t ns = cfg.settings.size();
  const std::size_t nt = cfg.thresholds.size();
  // samples[metric][setting][threshold] -> values over seeds
  std::vector<std::vector<std::vector<std::vector<double>>>> samples(
      3, std::vector<std::vector<std::vector<double>>>(ns, std::vector<std::vector<double>>(nt)));
  auto record = [&](std::size_t si, const std::vector<PairwiseMetrics>& ms) {
    for (std::size_t ti = 0; ti < nt; ++ti) {
      samples[0][si][ti].push_back(ms[ti].recall);
      samples[1][si][ti].push_back(ms[ti].precision);
      samples[2][si][ti].push_back(ms[ti].f1);
    }
  };

  for (std::uint64_t seed : cfg.seeds) {
    if (cfg.kind == TrendKind::level_convergence) {
      GenParams gp = cfg.base;
      gp.seed = seed;
      const SyntheticOutput data = generate(gp);
      const SimilarityModel sim(data.dataset, cfg.sim);
      const RefIdx q = most_ambiguous_reference(sim, data.gold);
      for (std::size_t si = 0; si < ns; ++si) {
        // Level k is k rounds of hyper-edge expansion, each followed by an
        // attribute expansion except the last: d* = 2k - 1.
        const int rounds = static_cast<int>(cfg.settings[si]);
        ExpansionParams ep;
        ep.d_star = rounds == 0 ? 0 : 2 * rounds - 1;
        ep.exact_beyond_level0 = false;
        const RelevantSet rs = build_relevant_set(sim, Query{"Name", data.dataset.ref(q).normalized}, ep);
        record(si, sweep(BaselineKind::RCER, sim, rs.all, data.gold, rs.levels.front(), cfg.thresholds));
      }
      continue;
    }
    for (std::size_t si = 0; si < ns; ++si) {
      GenParams gp = cfg.base;
      gp.seed = seed;
      if (cfg.kind == TrendKind::pr_recall) {
        gp.p_r = cfg.settings[si];
      } else {
        gp.p_r_a = cfg.settings[si];
      }
      const SyntheticOutput data = generate(gp);
      const SimilarityModel sim(data.dataset, cfg.sim);
      std::vector<RefIdx> all(data.dataset.num_refs());
      std::iota(all.begin(), all.end(), RefIdx{0});
      record(si, sweep(BaselineKind::RCER, sim, all, data.gold, all, cfg.thresholds));
    }
  }

  static const char* names[] = {"recall", "precision", "f1"};
  std::vector<TrendRow> rows;
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t si = 0; si < ns; ++si) {
      for (std::size_t ti = 0; ti < nt; ++ti) {
        TrendRow row;
        row.metric = names[m];
        row.setting = cfg.settings[si];
        row.threshold = cfg.thresholds[ti];
        mean_std(samples[m][si][ti], row.mean, row.stddev);
        row.n_runs = samples[m][si][ti].size();
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_trend(std::ostream& out, const std::vector<TrendRow>& rows) {
  out << "metric\tsetting\tthreshold\tmean\tstddev\tn_runs\n";
  for (const auto& r : rows) {
    out << r.metric << '\t' << r.setting << '\t' << r.threshold << '\t' << r.mean << '\t' << r.stddev << '\t'
        << r.n_runs << '\n';
  }
}

}  // namespace qter
