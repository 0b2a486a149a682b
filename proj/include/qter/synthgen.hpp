#pragma once

// Synthetic collaboration worlds with a scalar attribute per entity, and the
// observed co-occurrence records generated from them.

#include <cstdint>
#include <random>
#include <vector>

#include "qter/corpus.hpp"

namespace qter {

struct GenParams {
  std::size_t n_entities = 100;
  std::size_t n_relationships = 200;
  std::size_t n_hyperedges = 500;
  double p_a = 0.0;    // new entity reuses an occupied attribute range
  double p_r_a = 0.0;  // relationship built as an ambiguous one
  double p_c = 0.5;    // hyper-edge extension continues
  double p_r = 1.0;    // extension draws a neighbor of the initiator (else any entity)
  std::uint64_t seed = 1;

  void validate() const;
};

inline constexpr double kOccupiedRadius = 3.0;
inline constexpr double kSlotSpacing = 7.0;

struct SyntheticEntity {
  double x = 0.0;
  bool reused = false;  // attribute placed inside another entity's range
};

struct SyntheticWorld {
  std::vector<SyntheticEntity> entities;
  std::vector<std::vector<EntityIdx>> nbr;  // sorted, symmetric
  std::vector<std::pair<EntityIdx, EntityIdx>> relationships;  // creation order
  std::vector<bool> constructed_ambiguous;                     // parallel to relationships
  std::size_t ambiguous_fallbacks = 0;  // requested ambiguous, built plain
  std::size_t forced_ambiguous = 0;     // requested plain, no clean pair found

  // Occupied ranges [x - 3, x + 3] intersect.
  bool attribute_ambiguous(EntityIdx a, EntityIdx b) const;
  bool related(EntityIdx a, EntityIdx b) const;
  double ambiguous_fraction() const;
  double constructed_ambiguous_fraction() const;
};

// Whether relationship (a, b) forms an ambiguous pattern with some other
// relationship (c, d): a ~ c and b ~ d by attribute, with a != c, b != d.
bool relationship_ambiguous(const SyntheticWorld& w, EntityIdx a, EntityIdx b);
// Fraction of relationships for which relationship_ambiguous holds.
double measured_ambiguous_relationships(const SyntheticWorld& w);

void create_entities(SyntheticWorld& w, const GenParams& p, std::mt19937_64& rng);
void add_relationships(SyntheticWorld& w, const GenParams& p, std::mt19937_64& rng);

struct SyntheticOutput {
  std::vector<PublicationRecord> records;
  Dataset dataset;
  GoldLabeling gold;
  std::vector<EntityIdx> initiators;  // per hyper-edge
};

// Each hyper-edge draws from its own stream derived from (seed, index), so
// changing how members are picked leaves initiators and continuation
// decisions unchanged.
SyntheticOutput generate_hyperedges(const SyntheticWorld& w, const GenParams& p);

SyntheticWorld generate_world(const GenParams& p);
SyntheticOutput generate(const GenParams& p);

}  // namespace qter
