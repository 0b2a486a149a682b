#pragma once

// Analytical accuracy model: structural probabilities estimated from labeled
// data and the recall / imprecision recursions over the entity graph.

#include <iosfwd>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "qter/rcer.hpp"

namespace qter {

using EntityPair = std::pair<EntityIdx, EntityIdx>;  // first < second

inline EntityPair entity_pair(EntityIdx a, EntityIdx b) { return a < b ? EntityPair{a, b} : EntityPair{b, a}; }

struct StructuralProbs {
  std::size_t num_entities = 0;
  std::map<EntityIdx, double> a_I;    // entities with >= 2 references
  std::map<EntityPair, double> a_A;   // absent pairs read as 0
  std::map<EntityIdx, double> r_I;    // entities with >= 1 delta-similar pair
  std::map<EntityPair, double> r_A;   // pairs with >= 1 delta-similar cross pair
  std::vector<std::map<EntityIdx, double>> neighbor_weights;  // p^e_i, rows sum to 1

  // Undefined values read as 0.
  double aI(EntityIdx e) const;
  double rI(EntityIdx e) const;
  double aA(EntityIdx e1, EntityIdx e2) const;
  double rA(EntityIdx e1, EntityIdx e2) const;

  // Every entity has the same probabilities; entity i's only neighbor is
  // (i + 1) mod n, so the recursion sees the same values at every step.
  static StructuralProbs uniform(std::size_t n, double a_i, double r_i, double a_a, double r_a);
};

struct AttributeProbs {
  std::map<EntityIdx, double> a_I;
  std::map<EntityPair, double> a_A;
};

struct RelationalProbs {
  std::map<EntityIdx, double> r_I;
  std::map<EntityPair, double> r_A;
};

// Fractions of within-entity (cross-entity) reference pairs that are
// epsilon-similar.
AttributeProbs estimate_attribute_probs(const SimilarityModel& sim, const GoldLabeling& gold);

// Identifying witness for co-referent (ri, ri'): hyper-edges h of ri and h'
// of ri' holding rj in h, rj' in h', both outside {ri, ri'}, rj != rj',
// co-referent with each other and not with ri. Ambiguous witness for
// non-co-referent (ri, ri'): rj, rj' as above but delta-similar and not
// co-referent.
bool identifying_witness(const Dataset& ds, const GoldLabeling& gold, RefIdx ri, RefIdx rj);
bool ambiguous_witness(const SimilarityModel& sim, const GoldLabeling& gold, RefIdx ri, RefIdx rj);

RelationalProbs estimate_relational_probs(const SimilarityModel& sim, const GoldLabeling& gold);

// Empirical co-occurrence incidence fractions between entities.
std::vector<std::map<EntityIdx, double>> neighbor_weights(const Dataset& ds, const GoldLabeling& gold);

StructuralProbs estimate_structural_probs(const SimilarityModel& sim, const GoldLabeling& gold);

double predict_recall(const StructuralProbs& probs, EntityIdx e, int depth);
double predict_imprecision(const StructuralProbs& probs, EntityIdx e1, EntityIdx e2, int depth);

// a * sum_{i=0..n} ((1 - a) r)^i.
double closed_form_gp(double a, double r, int n);

struct ModelPrediction {
  int depth = 0;
  std::map<EntityIdx, double> recall;
  std::map<EntityPair, double> imprecision;
};

// Recall for every entity and imprecision for every pair with a defined
// attribute or relational ambiguity.
ModelPrediction predict(const StructuralProbs& probs, int depth);
void write_prediction(std::ostream& out, const ModelPrediction& p, const GoldLabeling& gold);

}  // namespace qter
