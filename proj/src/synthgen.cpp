#include "qter/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace qter {

namespace {

constexpr std::uint64_t kRelationshipStream = 0x9e3779b97f4a7c15ULL;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index, std::uint64_t lane) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(lane)};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::string render_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void GenParams::validate() const {
  auto prob = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
  };
  prob(p_a, "p_a");
  prob(p_r_a, "p_r_a");
  prob(p_r, "p_r");
  if (!(p_c >= 0.0 && p_c < 1.0)) throw std::invalid_argument("p_c must lie in [0, 1)");
  if (n_relationships > 0 && n_entities < 2) {
    throw std::invalid_argument("relationships need at least two entities");
  }
  if (n_relationships > n_entities * (n_entities - (n_entities ? 1 : 0)) / 2) {
    throw std::invalid_argument("more relationships than entity pairs");
  }
  if (n_hyperedges > 0 && n_entities == 0) throw std::invalid_argument("hyper-edges need entities");
}

bool SyntheticWorld::attribute_ambiguous(EntityIdx a, EntityIdx b) const {
  return a != b && std::abs(entities[a].x - entities[b].x) <= 2.0 * kOccupiedRadius;
}

bool SyntheticWorld::related(EntityIdx a, EntityIdx b) const {
  return std::binary_search(nbr[a].begin(), nbr[a].end(), b);
}

double SyntheticWorld::ambiguous_fraction() const {
  if (entities.empty()) return 0.0;
  const auto n = std::count_if(entities.begin(), entities.end(), [](const auto& e) { return e.reused; });
  return static_cast<double>(n) / static_cast<double>(entities.size());
}

double SyntheticWorld::constructed_ambiguous_fraction() const {
  if (relationships.empty()) return 0.0;
  const auto n = std::count(constructed_ambiguous.begin(), constructed_ambiguous.end(), true);
  return static_cast<double>(n) / static_cast<double>(relationships.size());
}

bool relationship_ambiguous(const SyntheticWorld& w, EntityIdx a, EntityIdx b) {
  for (const auto& [c, d] : w.relationships) {
    if ((c == a && d == b) || (c == b && d == a)) continue;
    if ((w.attribute_ambiguous(a, c) && w.attribute_ambiguous(b, d)) ||
        (w.attribute_ambiguous(a, d) && w.attribute_ambiguous(b, c))) {
      return true;
    }
  }
  return false;
}

double measured_ambiguous_relationships(const SyntheticWorld& w) {
  if (w.relationships.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& [a, b] : w.relationships) n += relationship_ambiguous(w, a, b) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(w.relationships.size());
}

void create_entities(SyntheticWorld& w, const GenParams& p, std::mt19937_64& rng) {
  std::multiset<double> taken;
  std::size_t slots = 4 * p.n_entities + 16;
  auto free_at = [&](double x) {
    auto it = taken.lower_bound(x - 2.0 * kOccupiedRadius);
    return it == taken.end() || *it > x + 2.0 * kOccupiedRadius;
  };
  w.entities.clear();
  for (std::size_t i = 0; i < p.n_entities; ++i) {
    SyntheticEntity e;
    if (!w.entities.empty() && uniform01(rng) < p.p_a) {
      const double base = w.entities[pick(rng, w.entities.size())].x;
      e.x = std::uniform_real_distribution<double>(base - kOccupiedRadius, base + kOccupiedRadius)(rng);
      e.reused = true;
    } else {
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        const double x = static_cast<double>(pick(rng, slots)) * kSlotSpacing;
        if (free_at(x)) {
          e.x = x;
          placed = true;
        }
      }
      for (std::size_t s = 0; !placed; ++s) {
        if (s == slots) slots *= 2;
        const double x = static_cast<double>(s) * kSlotSpacing;
        if (free_at(x)) {
          e.x = x;
          placed = true;
        }
      }
    }
    taken.insert(e.x);
    w.entities.push_back(e);
  }
  w.nbr.assign(w.entities.size(), {});
}

void add_relationships(SyntheticWorld& w, const GenParams& p, std::mt19937_64& rng) {
  const std::size_t n = w.entities.size();
  if (p.n_relationships == 0) return;
  if (n < 2) throw std::invalid_argument("relationships need at least two entities");
  std::vector<std::vector<EntityIdx>> amb(n);
  for (EntityIdx a = 0; a < n; ++a) {
    for (EntityIdx b = 0; b < n; ++b) {
      if (w.attribute_ambiguous(a, b)) amb[a].push_back(b);
    }
  }
  auto creates_ambiguity = [&](EntityIdx a, EntityIdx b) {
    for (EntityIdx c : amb[a]) {
      for (EntityIdx d : w.nbr[c]) {
        if (!(c == b && d == a) && w.attribute_ambiguous(d, b)) return true;
      }
    }
    return false;
  };
  auto usable = [&](EntityIdx a, EntityIdx b) { return a != b && !w.related(a, b); };
  auto add = [&](EntityIdx a, EntityIdx b, bool ambiguous) {
    w.nbr[a].insert(std::lower_bound(w.nbr[a].begin(), w.nbr[a].end(), b), b);
    w.nbr[b].insert(std::lower_bound(w.nbr[b].begin(), w.nbr[b].end(), a), a);
    w.relationships.emplace_back(a, b);
    w.constructed_ambiguous.push_back(ambiguous);
  };

  for (std::size_t m = 0; m < p.n_relationships; ++m) {
    const EntityIdx ei = static_cast<EntityIdx>(pick(rng, n));
    bool done = false;
    if (uniform01(rng) < p.p_r_a) {
      // Mirror an existing relationship (c, d) onto attribute look-alikes.
      for (int attempt = 0; attempt < 200 && !done && !w.relationships.empty(); ++attempt) {
        auto [c, d] = w.relationships[pick(rng, w.relationships.size())];
        if (pick(rng, 2)) std::swap(c, d);
        if (amb[c].empty() || amb[d].empty()) continue;
        const EntityIdx a = amb[c][pick(rng, amb[c].size())];
        const EntityIdx b = amb[d][pick(rng, amb[d].size())];
        if (!usable(a, b) || a == d || b == c) continue;
        add(a, b, true);
        done = true;
      }
      if (!done) ++w.ambiguous_fallbacks;
    }
    for (int attempt = 0; attempt < 500 && !done; ++attempt) {
      const EntityIdx a = attempt < 250 ? ei : static_cast<EntityIdx>(pick(rng, n));
      const EntityIdx b = static_cast<EntityIdx>(pick(rng, n));
      if (!usable(a, b) || creates_ambiguity(a, b)) continue;
      add(a, b, false);
      done = true;
    }
    while (!done) {
      const EntityIdx a = static_cast<EntityIdx>(pick(rng, n));
      const EntityIdx b = static_cast<EntityIdx>(pick(rng, n));
      if (!usable(a, b)) continue;
      add(a, b, false);
      ++w.forced_ambiguous;
      done = true;
    }
  }
}

SyntheticOutput generate_hyperedges(const SyntheticWorld& w, const GenParams& p) {
  const std::size_t n = w.entities.size();
  if (p.n_hyperedges > 0 && n == 0) throw std::invalid_argument("hyper-edges need entities");
  SyntheticOutput out;
  std::vector<EntityIdx> entity_of;
  std::vector<std::string> entity_names;
  for (std::size_t e = 0; e < n; ++e) entity_names.push_back("e" + std::to_string(e));

  for (std::size_t j = 0; j < p.n_hyperedges; ++j) {
    auto go = stream(p.seed, j, 1);
    auto choose = stream(p.seed, j, 2);
    auto noise = stream(p.seed, j, 3);
    const auto init = static_cast<EntityIdx>(pick(go, n));
    std::vector<EntityIdx> members{init};
    std::vector<EntityIdx> pool = w.nbr[init];
    while (uniform01(go) < p.p_c) {
      const bool via_neighbor = uniform01(choose) < p.p_r;
      if (via_neighbor) {
        pool.erase(std::remove_if(pool.begin(), pool.end(),
                                  [&](EntityIdx e) {
                                    return std::find(members.begin(), members.end(), e) != members.end();
                                  }),
                   pool.end());
        if (pool.empty()) break;
        const std::size_t k = pick(choose, pool.size());
        members.push_back(pool[k]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
      } else {
        if (members.size() >= n) break;
        EntityIdx e;
        do {
          e = static_cast<EntityIdx>(pick(choose, n));
        } while (std::find(members.begin(), members.end(), e) != members.end());
        members.push_back(e);
      }
    }
    PublicationRecord rec;
    rec.pub_id = "h" + std::to_string(j + 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (EntityIdx e : members) {
      AuthorEntry a;
      a.name = render_value(w.entities[e].x + gauss(noise));
      rec.authors.push_back(std::move(a));
      entity_of.push_back(e);
    }
    out.records.push_back(std::move(rec));
    out.initiators.push_back(init);
  }
  out.dataset = Dataset::from_records(out.records);
  out.gold = GoldLabeling(std::move(entity_of), std::move(entity_names));
  return out;
}

SyntheticWorld generate_world(const GenParams& p) {
  p.validate();
  SyntheticWorld w;
  std::mt19937_64 entity_rng(p.seed);
  create_entities(w, p, entity_rng);
  std::mt19937_64 rel_rng(p.seed ^ kRelationshipStream);
  add_relationships(w, p, rel_rng);
  return w;
}

SyntheticOutput generate(const GenParams& p) {
  return generate_hyperedges(generate_world(p), p);
}

}  // namespace qter
