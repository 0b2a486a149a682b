#include "qter/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "qter/names.hpp"

namespace qter {

namespace {

void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0, 1], got " + std::to_string(v));
  }
}

TokenBag bag_of(const std::vector<std::string>& tokens) {
  TokenBag bag;
  for (const auto& t : tokens) ++bag[t];
  return bag;
}

double soft_direction(const std::vector<std::pair<std::string, double>>& vs,
                      const std::vector<std::pair<std::string, double>>& vt, double threshold) {
  double total = 0.0;
  for (const auto& [w, ws] : vs) {
    double best = 0.0;
    double best_weight = 0.0;
    for (const auto& [v, wt] : vt) {
      const double s = jaro_winkler(w, v);
      if (s > best || (s == best && wt > best_weight)) {
        best = s;
        best_weight = wt;
      }
    }
    if (best >= threshold) total += ws * best_weight * best;
  }
  return total;
}

}  // namespace

void SimilarityConfig::validate() const {
  require_unit(alpha, "alpha");
  require_unit(epsilon, "epsilon");
  require_unit(delta, "delta");
  require_unit(merge_threshold, "merge_threshold");
  if (attr_weights.empty()) throw std::invalid_argument("at least one attribute weight is required");
  double sum = 0.0;
  for (const auto& [name, w] : attr_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("weight for " + name + " must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("attribute weights must sum to 1, got " + std::to_string(sum));
  }
  // Names mode derives delta-similarity from the initials rule, which the
  // epsilon test includes, so containment only needs checking for scalars.
  if (measure == AttrMeasure::numeric && delta > epsilon) {
    throw std::invalid_argument("delta must not exceed epsilon for the numeric measure");
  }
}

double jaro(std::string_view s1, std::string_view s2) {
  if (s1 > s2) std::swap(s1, s2);
  if (s1.empty() && s2.empty()) return 1.0;
  if (s1.empty() || s2.empty()) return 0.0;
  const std::size_t window = std::max<std::size_t>(std::max(s1.size(), s2.size()) / 2, 1) - 1;
  std::vector<bool> used1(s1.size()), used2(s2.size());
  std::size_t m = 0;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(s2.size(), i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (!used2[j] && s1[i] == s2[j]) {
        used1[i] = used2[j] = true;
        ++m;
        break;
      }
    }
  }
  if (m == 0) return 0.0;
  std::size_t half_transpositions = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    if (!used1[i]) continue;
    while (!used2[k]) ++k;
    if (s1[i] != s2[k]) ++half_transpositions;
    ++k;
  }
  const double md = static_cast<double>(m);
  const double t = static_cast<double>(half_transpositions / 2);
  return (md / s1.size() + md / s2.size() + (md - t) / md) / 3.0;
}

double jaro_winkler(std::string_view s1, std::string_view s2) {
  const double j = jaro(s1, s2);
  std::size_t prefix = 0;
  while (prefix < 4 && prefix < s1.size() && prefix < s2.size() && s1[prefix] == s2[prefix]) ++prefix;
  return std::min(1.0, j + static_cast<double>(prefix) * 0.1 * (1.0 - j));
}

std::vector<std::string> text_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

void TokenStats::add_document(const std::vector<std::string>& tokens) {
  ++docs_;
  std::vector<std::string> distinct(tokens);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (const auto& t : distinct) ++df_[t];
}

double TokenStats::idf(const std::string& token) const {
  auto it = df_.find(token);
  const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((static_cast<double>(docs_) + 1.0) / (df + 1.0)) + 1.0;
}

std::vector<std::pair<std::string, double>> tfidf_vector(const TokenBag& bag, const TokenStats& stats) {
  std::vector<std::pair<std::string, double>> v;
  v.reserve(bag.size());
  double norm = 0.0;
  for (const auto& [token, tf] : bag) {
    const double w = std::log(static_cast<double>(tf) + 1.0) * stats.idf(token);
    v.emplace_back(token, w);
    norm += w * w;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& [token, w] : v) w /= norm;
  }
  return v;
}

double tfidf_cosine(const TokenBag& a, const TokenBag& b, const TokenStats& stats) {
  if (a.empty() || b.empty()) return 0.0;
  const auto va = tfidf_vector(a, stats);
  const auto vb = tfidf_vector(b, stats);
  double dot = 0.0;
  auto ia = va.begin();
  auto ib = vb.begin();
  while (ia != va.end() && ib != vb.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return std::clamp(dot, 0.0, 1.0);
}

double soft_tfidf(const TokenBag& a, const TokenBag& b, const TokenStats& stats, double threshold) {
  if (a.empty() || b.empty()) return 0.0;
  if (a == b) return 1.0;
  const auto va = tfidf_vector(a, stats);
  const auto vb = tfidf_vector(b, stats);
  const double s = 0.5 * (soft_direction(va, vb, threshold) + soft_direction(vb, va, threshold));
  return std::clamp(s, 0.0, 1.0);
}

const std::string& ClusterProfile::representative() const {
  static const std::string empty;
  const std::string* best = &empty;
  std::uint32_t best_count = 0;
  // std::map iterates names in lexicographic order, so the first maximum wins.
  for (const auto& [name, count] : name_counts) {
    if (count > best_count) {
      best = &name;
      best_count = count;
    }
  }
  return *best;
}

void ClusterProfile::absorb(const ClusterProfile& other) {
  for (const auto& [name, count] : other.name_counts) name_counts[name] += count;
  value_sum += other.value_sum;
  value_count += other.value_count;
  for (const auto& [attr, bag] : other.bags) {
    auto& mine = bags[attr];
    for (const auto& [token, count] : bag) mine[token] += count;
  }
  size += other.size;
}

SimilarityModel::SimilarityModel(const Dataset& ds, SimilarityConfig cfg) : ds_(&ds), cfg_(std::move(cfg)) {
  cfg_.validate();
  for (const auto& [attr, w] : cfg_.attr_weights) {
    if (attr != "Name") attr_stats_.emplace(attr, TokenStats{});
  }
  for (const auto& ref : ds.refs()) {
    name_stats_.add_document(name_tokens(ref.normalized));
    for (auto& [attr, stats] : attr_stats_) {
      auto it = ref.attrs.find(attr);
      stats.add_document(it == ref.attrs.end() ? std::vector<std::string>{} : text_tokens(it->second));
    }
  }
}

double SimilarityModel::name_sim(std::string_view n1, std::string_view n2) const {
  const std::string a = normalize_name(n1);
  const std::string b = normalize_name(n2);
  if (a == b) return a.empty() ? 0.0 : 1.0;
  return soft_tfidf(bag_of(name_tokens(a)), bag_of(name_tokens(b)), name_stats_);
}

double SimilarityModel::value_sim(double x1, double x2) const {
  return 1.0 - std::min(1.0, std::abs(x1 - x2) / kNumericRange);
}

ClusterProfile SimilarityModel::profile(RefIdx r) const {
  const auto& ref = ds_->ref(r);
  ClusterProfile p;
  p.size = 1;
  p.name_counts[ref.normalized] = 1;
  if (auto v = ds_->numeric_value(r)) {
    p.value_sum = *v;
    p.value_count = 1;
  }
  for (const auto& [attr, stats] : attr_stats_) {
    auto it = ref.attrs.find(attr);
    if (it != ref.attrs.end()) p.bags[attr] = bag_of(text_tokens(it->second));
  }
  return p;
}

ClusterProfile SimilarityModel::profile(std::span<const RefIdx> members) const {
  ClusterProfile p;
  for (RefIdx r : members) p.absorb(profile(r));
  return p;
}

double SimilarityModel::attribute_sim(const ClusterProfile& a, const ClusterProfile& b) const {
  double total = 0.0;
  for (const auto& [attr, w] : cfg_.attr_weights) {
    if (w == 0.0) continue;
    double s = 0.0;
    if (attr == "Name") {
      if (cfg_.measure == AttrMeasure::numeric) {
        s = (a.value_count && b.value_count) ? value_sim(a.centroid(), b.centroid()) : 0.0;
      } else {
        s = name_sim(a.representative(), b.representative());
      }
    } else {
      auto ia = a.bags.find(attr);
      auto ib = b.bags.find(attr);
      if (ia != a.bags.end() && ib != b.bags.end()) s = tfidf_cosine(ia->second, ib->second, attr_stats_.at(attr));
    }
    total += w * s;
  }
  return std::clamp(total, 0.0, 1.0);
}

double SimilarityModel::attribute_sim(std::span<const RefIdx> a, std::span<const RefIdx> b) const {
  return attribute_sim(profile(a), profile(b));
}

double SimilarityModel::ref_sim(RefIdx a, RefIdx b) const {
  return attribute_sim(profile(a), profile(b));
}

bool SimilarityModel::delta_similar_names(std::string_view a, std::string_view b) const {
  return a == b || initials_rule(a, b);
}

bool SimilarityModel::delta_similar(RefIdx a, RefIdx b) const {
  if (cfg_.measure == AttrMeasure::numeric) {
    auto xa = ds_->numeric_value(a);
    auto xb = ds_->numeric_value(b);
    if (!xa || !xb) return ds_->ref(a).normalized == ds_->ref(b).normalized;
    return value_sim(*xa, *xb) >= cfg_.delta;
  }
  return delta_similar_names(ds_->ref(a).normalized, ds_->ref(b).normalized);
}

bool SimilarityModel::epsilon_similar(RefIdx a, RefIdx b) const {
  return delta_similar(a, b) && ref_sim(a, b) >= cfg_.epsilon;
}

std::vector<RefIdx> SimilarityModel::matches(std::string_view value) const {
  const std::string norm = normalize_name(value);
  std::vector<RefIdx> out = ds_->lookup_name(norm);
  if (cfg_.measure == AttrMeasure::numeric) {
    const auto parsed = parse_real(norm);
    if (!parsed) return out;
    const double x = *parsed;
    const double reach = (1.0 - cfg_.delta) * kNumericRange;
    const auto& index = ds_->numeric_index();
    auto lo = std::lower_bound(index.begin(), index.end(), std::make_pair(x - reach, RefIdx{0}));
    for (auto p = lo; p != index.end() && p->first <= x + reach; ++p) {
      if (value_sim(x, p->first) >= cfg_.delta) out.push_back(p->second);
    }
  } else {
    for (RefIdx r : ds_->block(blocking_key(norm))) {
      if (delta_similar_names(norm, ds_->ref(r).normalized)) out.push_back(r);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<RefIdx> SimilarityModel::delta_partners(RefIdx r) const {
  std::vector<RefIdx> out;
  const auto& ref = ds_->ref(r);
  if (cfg_.measure == AttrMeasure::numeric && ds_->numeric_value(r)) {
    const double x = *ds_->numeric_value(r);
    const double reach = (1.0 - cfg_.delta) * kNumericRange;
    const auto& index = ds_->numeric_index();
    auto lo = std::lower_bound(index.begin(), index.end(), std::make_pair(x - reach, RefIdx{0}));
    for (auto p = lo; p != index.end() && p->first <= x + reach; ++p) {
      if (p->second != r && value_sim(x, p->first) >= cfg_.delta) out.push_back(p->second);
    }
  } else {
    for (RefIdx other : ds_->block(blocking_key(ref.normalized))) {
      if (other != r && delta_similar(r, other)) out.push_back(other);
    }
    for (RefIdx other : ds_->refs_with_name(ref.name_id)) {
      if (other != r) out.push_back(other);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double SimilarityModel::relational_sim(const Neighborhood& a, const Neighborhood& b) const {
  return jaccard(a, b, cfg_.neighborhood);
}

std::vector<EdgeIdx> hyperedge_set(const Dataset& ds, std::span<const RefIdx> members) {
  std::vector<EdgeIdx> out;
  for (RefIdx r : members) {
    const auto& edges = ds.ref(r).hyperedges;
    out.insert(out.end(), edges.begin(), edges.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Neighborhood neighborhood(const Dataset& ds, std::span<const RefIdx> members, ClusterId own_label,
                          const std::unordered_map<RefIdx, ClusterId>& labels) {
  std::vector<RefIdx> spanned;
  for (EdgeIdx e : hyperedge_set(ds, members)) {
    const auto& refs = ds.edge(e).refs;
    spanned.insert(spanned.end(), refs.begin(), refs.end());
  }
  std::sort(spanned.begin(), spanned.end());
  spanned.erase(std::unique(spanned.begin(), spanned.end()), spanned.end());
  Neighborhood nbr;
  for (RefIdx r : spanned) {
    auto it = labels.find(r);
    if (it == labels.end() || it->second == own_label) continue;
    ++nbr.labels[it->second];
  }
  return nbr;
}

double jaccard(const Neighborhood& a, const Neighborhood& b, NeighborhoodMode mode) {
  if (a.labels.empty() && b.labels.empty()) return 0.0;
  double inter = 0.0;
  double uni = 0.0;
  auto ia = a.labels.begin();
  auto ib = b.labels.begin();
  const bool multi = mode == NeighborhoodMode::multiset;
  while (ia != a.labels.end() || ib != b.labels.end()) {
    if (ib == b.labels.end() || (ia != a.labels.end() && ia->first < ib->first)) {
      uni += multi ? ia->second : 1.0;
      ++ia;
    } else if (ia == a.labels.end() || ib->first < ia->first) {
      uni += multi ? ib->second : 1.0;
      ++ib;
    } else {
      inter += multi ? std::min(ia->second, ib->second) : 1.0;
      uni += multi ? std::max(ia->second, ib->second) : 1.0;
      ++ia;
      ++ib;
    }
  }
  return inter / uni;
}

}  // namespace qter
