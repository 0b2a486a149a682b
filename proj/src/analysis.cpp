#include "qter/analysis.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace qter {

namespace {

template <typename K>
double lookup(const std::map<K, double>& m, const K& k) {
  auto it = m.find(k);
  return it == m.end() ? 0.0 : it->second;
}

std::vector<std::size_t> entity_sizes(const GoldLabeling& gold) {
  std::vector<std::size_t> n(gold.num_entities(), 0);
  for (EntityIdx e : gold.assignments()) ++n[e];
  return n;
}

double imprecision_rec(const StructuralProbs& p, EntityIdx e1, EntityIdx e2, int depth,
                       std::map<std::tuple<EntityIdx, EntityIdx, int>, double>& memo) {
  if (e1 == e2) return 0.0;
  const EntityPair key = entity_pair(e1, e2);
  const double a = p.aA(e1, e2);
  if (depth == 0) return a;
  auto found = memo.find({key.first, key.second, depth});
  if (found != memo.end()) return found->second;
  const double r = p.rA(e1, e2);
  double sum = 0.0;
  if (r > 0.0 && a < 1.0) {
    for (const auto& [n1, w1] : p.neighbor_weights.at(e1)) {
      for (const auto& [n2, w2] : p.neighbor_weights.at(e2)) {
        sum += w1 * w2 * imprecision_rec(p, n1, n2, depth - 1, memo);
      }
    }
  }
  const double v = a + (1.0 - a) * r * sum;
  memo[{key.first, key.second, depth}] = v;
  return v;
}

}  // namespace

double StructuralProbs::aI(EntityIdx e) const { return lookup(a_I, e); }
double StructuralProbs::rI(EntityIdx e) const { return lookup(r_I, e); }
double StructuralProbs::aA(EntityIdx e1, EntityIdx e2) const { return lookup(a_A, entity_pair(e1, e2)); }
double StructuralProbs::rA(EntityIdx e1, EntityIdx e2) const { return lookup(r_A, entity_pair(e1, e2)); }

StructuralProbs StructuralProbs::uniform(std::size_t n, double a_i, double r_i, double a_a, double r_a) {
  StructuralProbs p;
  p.num_entities = n;
  p.neighbor_weights.resize(n);
  for (EntityIdx e = 0; e < n; ++e) {
    p.a_I[e] = a_i;
    p.r_I[e] = r_i;
    p.neighbor_weights[e][static_cast<EntityIdx>((e + 1) % n)] = 1.0;
    for (EntityIdx f = e + 1; f < n; ++f) {
      p.a_A[{e, f}] = a_a;
      p.r_A[{e, f}] = r_a;
    }
  }
  return p;
}

AttributeProbs estimate_attribute_probs(const SimilarityModel& sim, const GoldLabeling& gold) {
  const Dataset& ds = sim.dataset();
  if (gold.num_refs() != ds.num_refs()) throw DataError("gold labeling does not cover the dataset");
  const auto sizes = entity_sizes(gold);
  std::vector<RefIdx> all(ds.num_refs());
  for (RefIdx r = 0; r < all.size(); ++r) all[r] = r;

  std::map<EntityIdx, std::size_t> within;
  std::map<EntityPair, std::size_t> cross;
  // Epsilon-similar pairs are a subset of the blocked delta-similar ones.
  for (const auto& [a, b] : block_candidates(sim, all)) {
    if (!sim.epsilon_similar(a, b)) continue;
    const EntityIdx ea = gold.entity(a);
    const EntityIdx eb = gold.entity(b);
    if (ea == eb) {
      ++within[ea];
    } else {
      ++cross[entity_pair(ea, eb)];
    }
  }
  AttributeProbs out;
  for (EntityIdx e = 0; e < sizes.size(); ++e) {
    if (sizes[e] < 2) continue;
    const double pairs = static_cast<double>(sizes[e]) * static_cast<double>(sizes[e] - 1) / 2.0;
    auto it = within.find(e);
    const std::size_t hits = it == within.end() ? 0 : it->second;
    out.a_I[e] = static_cast<double>(hits) / pairs;
  }
  for (const auto& [pair, count] : cross) {
    out.a_A[pair] = static_cast<double>(count) /
                    (static_cast<double>(sizes[pair.first]) * static_cast<double>(sizes[pair.second]));
  }
  return out;
}

bool identifying_witness(const Dataset& ds, const GoldLabeling& gold, RefIdx ri, RefIdx rj) {
  const EntityIdx e = gold.entity(ri);
  for (EdgeIdx h : ds.ref(ri).hyperedges) {
    for (EdgeIdx h2 : ds.ref(rj).hyperedges) {
      for (RefIdx x : ds.edge(h).refs) {
        if (x == ri || x == rj || gold.entity(x) == e) continue;
        for (RefIdx y : ds.edge(h2).refs) {
          if (y == ri || y == rj || y == x) continue;
          if (gold.entity(x) == gold.entity(y)) return true;
        }
      }
    }
  }
  return false;
}

bool ambiguous_witness(const SimilarityModel& sim, const GoldLabeling& gold, RefIdx ri, RefIdx rj) {
  const Dataset& ds = sim.dataset();
  for (EdgeIdx h : ds.ref(ri).hyperedges) {
    for (EdgeIdx h2 : ds.ref(rj).hyperedges) {
      for (RefIdx x : ds.edge(h).refs) {
        if (x == ri || x == rj) continue;
        for (RefIdx y : ds.edge(h2).refs) {
          if (y == ri || y == rj || y == x) continue;
          if (gold.entity(x) != gold.entity(y) && sim.delta_similar(x, y)) return true;
        }
      }
    }
  }
  return false;
}

RelationalProbs estimate_relational_probs(const SimilarityModel& sim, const GoldLabeling& gold) {
  const Dataset& ds = sim.dataset();
  if (gold.num_refs() != ds.num_refs()) throw DataError("gold labeling does not cover the dataset");
  std::vector<RefIdx> all(ds.num_refs());
  for (RefIdx r = 0; r < all.size(); ++r) all[r] = r;
  std::map<EntityIdx, std::pair<std::size_t, std::size_t>> within;  // (witnessed, total)
  std::map<EntityPair, std::pair<std::size_t, std::size_t>> cross;
  for (const auto& [a, b] : block_candidates(sim, all)) {
    const EntityIdx ea = gold.entity(a);
    const EntityIdx eb = gold.entity(b);
    if (ea == eb) {
      auto& c = within[ea];
      ++c.second;
      if (identifying_witness(ds, gold, a, b)) ++c.first;
    } else {
      auto& c = cross[entity_pair(ea, eb)];
      ++c.second;
      if (ambiguous_witness(sim, gold, a, b)) ++c.first;
    }
  }
  RelationalProbs out;
  for (const auto& [e, c] : within) out.r_I[e] = static_cast<double>(c.first) / static_cast<double>(c.second);
  for (const auto& [p, c] : cross) out.r_A[p] = static_cast<double>(c.first) / static_cast<double>(c.second);
  return out;
}

std::vector<std::map<EntityIdx, double>> neighbor_weights(const Dataset& ds, const GoldLabeling& gold) {
  std::vector<std::map<EntityIdx, double>> w(gold.num_entities());
  for (const auto& edge : ds.edges()) {
    for (RefIdx a : edge.refs) {
      for (RefIdx b : edge.refs) {
        const EntityIdx ea = gold.entity(a);
        const EntityIdx eb = gold.entity(b);
        if (a != b && ea != eb) w[ea][eb] += 1.0;
      }
    }
  }
  for (auto& row : w) {
    double total = 0.0;
    for (const auto& [e, c] : row) total += c;
    for (auto& [e, c] : row) c /= total;
  }
  return w;
}

StructuralProbs estimate_structural_probs(const SimilarityModel& sim, const GoldLabeling& gold) {
  StructuralProbs p;
  p.num_entities = gold.num_entities();
  auto attr = estimate_attribute_probs(sim, gold);
  auto rel = estimate_relational_probs(sim, gold);
  p.a_I = std::move(attr.a_I);
  p.a_A = std::move(attr.a_A);
  p.r_I = std::move(rel.r_I);
  p.r_A = std::move(rel.r_A);
  p.neighbor_weights = neighbor_weights(sim.dataset(), gold);
  return p;
}

double predict_recall(const StructuralProbs& probs, EntityIdx e, int depth) {
  if (depth < 0) throw std::invalid_argument("depth must be non-negative");
  if (e >= probs.num_entities) throw std::out_of_range("unknown entity");
  std::vector<double> cur(probs.num_entities);
  for (EntityIdx x = 0; x < probs.num_entities; ++x) cur[x] = probs.aI(x);
  for (int d = 0; d < depth; ++d) {
    std::vector<double> next(probs.num_entities);
    for (EntityIdx x = 0; x < probs.num_entities; ++x) {
      double sum = 0.0;
      for (const auto& [n, w] : probs.neighbor_weights[x]) sum += w * cur[n];
      const double a = probs.aI(x);
      next[x] = a + (1.0 - a) * probs.rI(x) * sum;
    }
    cur = std::move(next);
  }
  return cur[e];
}

double predict_imprecision(const StructuralProbs& probs, EntityIdx e1, EntityIdx e2, int depth) {
  if (depth < 0) throw std::invalid_argument("depth must be non-negative");
  if (e1 >= probs.num_entities || e2 >= probs.num_entities) throw std::out_of_range("unknown entity");
  std::map<std::tuple<EntityIdx, EntityIdx, int>, double> memo;
  return imprecision_rec(probs, e1, e2, depth, memo);
}

double closed_form_gp(double a, double r, int n) {
  if (n < 0) throw std::invalid_argument("number of terms must be non-negative");
  const double q = (1.0 - a) * r;
  if (std::abs(1.0 - q) < 1e-12) return a * (n + 1);
  return a * (1.0 - std::pow(q, n + 1)) / (1.0 - q);
}

ModelPrediction predict(const StructuralProbs& probs, int depth) {
  ModelPrediction out;
  out.depth = depth;
  for (EntityIdx e = 0; e < probs.num_entities; ++e) out.recall[e] = predict_recall(probs, e, depth);
  std::map<std::tuple<EntityIdx, EntityIdx, int>, double> memo;
  for (const auto& m : {probs.a_A, probs.r_A}) {
    for (const auto& [pair, v] : m) {
      if (!out.imprecision.count(pair)) {
        out.imprecision[pair] = imprecision_rec(probs, pair.first, pair.second, depth, memo);
      }
    }
  }
  return out;
}

void write_prediction(std::ostream& out, const ModelPrediction& p, const GoldLabeling& gold) {
  out << "kind\tentity\tother\tdepth\tvalue\n";
  for (const auto& [e, v] : p.recall) {
    out << "recall\t" << gold.entity_name(e) << "\t-\t" << p.depth << '\t' << v << '\n';
  }
  for (const auto& [pair, v] : p.imprecision) {
    out << "imprecision\t" << gold.entity_name(pair.first) << '\t' << gold.entity_name(pair.second) << '\t'
        << p.depth << '\t' << v << '\n';
  }
}

}  // namespace qter
