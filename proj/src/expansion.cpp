#include "qter/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "qter/names.hpp"

namespace qter {

namespace {

void sort_unique(std::vector<RefIdx>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::vector<RefIdx> minus(std::vector<RefIdx> a, const std::vector<bool>& seen) {
  a.erase(std::remove_if(a.begin(), a.end(), [&](RefIdx r) { return seen[r]; }), a.end());
  return a;
}

std::vector<RefIdx> rank_by_ambiguity(const Dataset& ds, std::span<const RefIdx> refs, std::size_t k,
                                      const AmbiguityEstimator& est, bool most) {
  struct Item {
    double amb;
    const std::string* name;
    RefIdx r;
  };
  std::vector<Item> items;
  items.reserve(refs.size());
  for (RefIdx r : refs) items.push_back({est.estimate_ref(r), &ds.ref(r).normalized, r});
  std::sort(items.begin(), items.end(), [most](const Item& x, const Item& y) {
    if (x.amb != y.amb) return most ? x.amb > y.amb : x.amb < y.amb;
    if (*x.name != *y.name) return *x.name < *y.name;
    return x.r < y.r;
  });
  std::vector<RefIdx> out;
  for (std::size_t i = 0; i < items.size() && i < k; ++i) out.push_back(items[i].r);
  sort_unique(out);
  return out;
}

}  // namespace

AmbiguityEstimator::AmbiguityEstimator(const Dataset& ds, AmbiguityMode mode, double window)
    : ds_(&ds), mode_(mode), window_(window) {
  if (!(window >= 0.0)) throw std::invalid_argument("ambiguity window must be non-negative");
  for (const auto& ref : ds.refs()) add_name(ref.normalized);
  std::sort(values_.begin(), values_.end());
}

void AmbiguityEstimator::add_name(std::string_view raw) {
  const std::string norm = normalize_name(raw);
  if (norm.empty()) return;
  ++total_;
  ++name_counts_[norm];
  const NameParts parts = split_name(norm);
  auto& seen = initials_[parts.last];
  seen.resize(256, false);
  seen[static_cast<unsigned char>(parts.first_initial)] = true;
  if (auto v = parse_real(norm)) {
    values_.insert(std::upper_bound(values_.begin(), values_.end(), *v), *v);
  }
}

void AmbiguityEstimator::add_background(std::istream& names) {
  std::string line;
  while (std::getline(names, line)) {
    if (line.empty() || line[0] == '#') continue;
    add_name(line);
  }
}

std::size_t AmbiguityEstimator::distinct_initials(std::string_view last_name) const {
  auto it = initials_.find(std::string(last_name));
  if (it == initials_.end()) return 0;
  return static_cast<std::size_t>(std::count(it->second.begin(), it->second.end(), true));
}

double AmbiguityEstimator::estimate(std::string_view value) const {
  if (total_ == 0) return 0.0;
  const std::string norm = normalize_name(value);
  const double n = static_cast<double>(total_);
  switch (mode_) {
    case AmbiguityMode::naive: {
      auto it = name_counts_.find(norm);
      return it == name_counts_.end() ? 0.0 : static_cast<double>(it->second) / n;
    }
    case AmbiguityMode::conditional:
      return static_cast<double>(distinct_initials(split_name(norm).last)) / n;
    case AmbiguityMode::numeric: {
      auto x = parse_real(norm);
      if (!x) return 0.0;
      auto lo = std::lower_bound(values_.begin(), values_.end(), *x - window_);
      auto hi = std::upper_bound(values_.begin(), values_.end(), *x + window_);
      return static_cast<double>(hi - lo) / n;
    }
  }
  return 0.0;
}

double AmbiguityEstimator::estimate_ref(RefIdx r) const {
  if (!ds_) throw std::logic_error("ambiguity estimator has no dataset");
  return estimate(ds_->ref(r).normalized);
}

double AmbiguityEstimator::mu_r() const {
  return name_counts_.empty() ? 0.0 : static_cast<double>(total_) / static_cast<double>(name_counts_.size());
}

void ExpansionParams::validate() const {
  if (d_star < 0) throw std::invalid_argument("cut-off depth must be non-negative");
  if (h_max && !(*h_max >= 1.0)) throw std::invalid_argument("h_max must be at least 1");
  if (a_max && !(*a_max > 0.0 && *a_max <= 1.0)) throw std::invalid_argument("a_max must lie in (0, 1]");
  if (initials_cutoff < 0) throw std::invalid_argument("initials cutoff must be non-negative");
}

std::vector<int> RelevantSet::level_of_all() const {
  std::vector<int> out(all.size(), 0);
  for (std::size_t lvl = 0; lvl < levels.size(); ++lvl) {
    for (RefIdx r : levels[lvl]) {
      auto it = std::lower_bound(all.begin(), all.end(), r);
      out[static_cast<std::size_t>(it - all.begin())] = static_cast<int>(lvl);
    }
  }
  return out;
}

void RelevantSet::write(std::ostream& out, const Dataset& ds) const {
  for (std::size_t lvl = 0; lvl < levels.size(); ++lvl) {
    out << "level " << lvl << " (" << levels[lvl].size() << "):";
    for (RefIdx r : levels[lvl]) out << ' ' << ds.ref(r).id;
    out << '\n';
  }
}

std::vector<RefIdx> x_a(const SimilarityModel& sim, std::string_view value) { return sim.matches(value); }

std::vector<RefIdx> x_a(const SimilarityModel& sim, std::span<const RefIdx> refs) {
  std::vector<RefIdx> out(refs.begin(), refs.end());
  for (RefIdx r : refs) {
    auto partners = sim.delta_partners(r);
    out.insert(out.end(), partners.begin(), partners.end());
  }
  sort_unique(out);
  return out;
}

std::vector<RefIdx> x_h(const Dataset& ds, std::span<const RefIdx> refs) {
  std::vector<RefIdx> out;
  for (RefIdx r : refs) {
    auto co = ds.cooccurring(r);
    out.insert(out.end(), co.begin(), co.end());
  }
  sort_unique(out);
  std::vector<RefIdx> input(refs.begin(), refs.end());
  sort_unique(input);
  std::vector<RefIdx> diff;
  std::set_difference(out.begin(), out.end(), input.begin(), input.end(), std::back_inserter(diff));
  return diff;
}

std::vector<RefIdx> x_a_exact(const Dataset& ds, std::span<const RefIdx> refs) {
  std::vector<RefIdx> out;
  for (RefIdx r : refs) {
    auto same = ds.refs_with_name(ds.ref(r).name_id);
    out.insert(out.end(), same.begin(), same.end());
  }
  sort_unique(out);
  return out;
}

std::vector<RefIdx> least_ambiguous(const Dataset& ds, std::span<const RefIdx> refs, std::size_t k,
                                    const AmbiguityEstimator& est) {
  return rank_by_ambiguity(ds, refs, k, est, false);
}

std::vector<RefIdx> most_ambiguous(const Dataset& ds, std::span<const RefIdx> refs, std::size_t k,
                                   const AmbiguityEstimator& est) {
  return rank_by_ambiguity(ds, refs, k, est, true);
}

std::vector<RefIdx> adaptive_x_h(const Dataset& ds, std::span<const RefIdx> frontier, double h_max,
                                 const AmbiguityEstimator& est) {
  const auto k = static_cast<std::size_t>(std::floor(h_max * static_cast<double>(frontier.size())));
  return least_ambiguous(ds, x_h(ds, frontier), k, est);
}

std::vector<RefIdx> adaptive_x_a(const Dataset& ds, std::span<const RefIdx> frontier, double a_max,
                                 const AmbiguityEstimator& est, const SimilarityModel* sim) {
  const auto k = static_cast<std::size_t>(std::ceil(a_max * static_cast<double>(frontier.size())));
  const auto chosen = most_ambiguous(ds, frontier, k, est);
  return sim ? x_a(*sim, chosen) : x_a_exact(ds, chosen);
}

int adaptive_depth(const AmbiguityEstimator& est, std::string_view value, const ExpansionParams& params) {
  if (params.initials_cutoff <= 0) return params.d_star;
  const std::string last = split_name(normalize_name(value)).last;
  if (est.distinct_initials(last) < static_cast<std::size_t>(params.initials_cutoff)) return 1;
  return params.d_star;
}

RelevantSet build_relevant_set(const SimilarityModel& sim, const Query& q, const ExpansionParams& params,
                               const AmbiguityEstimator* est) {
  params.validate();
  if (q.value.empty()) throw std::invalid_argument("query value must be non-empty");
  if ((params.h_max || params.a_max || params.adaptive_depth) && !est) {
    throw std::invalid_argument("adaptive expansion needs an ambiguity estimator");
  }
  const Dataset& ds = sim.dataset();
  RelevantSet rs;
  auto level0 = x_a(sim, q.value);
  if (level0.empty()) return rs;
  rs.answerable = true;
  rs.depth = params.adaptive_depth ? adaptive_depth(*est, q.value, params) : params.d_star;

  std::vector<bool> seen(ds.num_refs(), false);
  for (RefIdx r : level0) seen[r] = true;
  rs.levels.push_back(std::move(level0));
  rs.expected_growth.push_back(0.0);
  for (int i = 1; i <= rs.depth; ++i) {
    const auto& frontier = rs.levels.back();
    std::vector<RefIdx> next;
    double growth = 0.0;
    if (i % 2 == 1) {
      next = minus(x_h(ds, frontier), seen);
      if (params.h_max) {
        const auto k = static_cast<std::size_t>(std::floor(*params.h_max * static_cast<double>(frontier.size())));
        next = least_ambiguous(ds, next, k, *est);
      }
    } else if (params.a_max) {
      const SimilarityModel* op = params.exact_beyond_level0 ? nullptr : &sim;
      next = minus(adaptive_x_a(ds, frontier, *params.a_max, *est, op), seen);
      growth = est->mu_r() * std::ceil(*params.a_max * static_cast<double>(frontier.size()));
    } else {
      next = minus(params.exact_beyond_level0 ? x_a_exact(ds, frontier) : x_a(sim, frontier), seen);
    }
    for (RefIdx r : next) seen[r] = true;
    rs.levels.push_back(std::move(next));
    rs.expected_growth.push_back(growth);
  }
  for (const auto& lvl : rs.levels) rs.all.insert(rs.all.end(), lvl.begin(), lvl.end());
  sort_unique(rs.all);
  return rs;
}

}  // namespace qter
