#pragma once

// Attribute similarity (names or scalar values), cluster neighborhoods and the
// combined attribute + relational score used by the clustering.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qter/corpus.hpp"

namespace qter {

using ClusterId = std::uint32_t;

enum class AttrMeasure {
  names,    // Soft TF-IDF over name tokens, candidate pairs by the initials rule
  numeric,  // names parse as reals; sim = 1 - min(1, |x1 - x2| / 6)
};

enum class NeighborhoodMode { set, multiset };

struct SimilarityConfig {
  double alpha = 0.5;
  double epsilon = 0.99;
  double delta = 0.5;
  double merge_threshold = 0.5;
  std::map<std::string, double> attr_weights{{"Name", 1.0}};
  AttrMeasure measure = AttrMeasure::names;
  NeighborhoodMode neighborhood = NeighborhoodMode::set;

  // Throws std::invalid_argument on the first violated constraint.
  void validate() const;
};

inline constexpr double kSoftTfIdfThreshold = 0.9;
inline constexpr double kNumericRange = 6.0;

double jaro(std::string_view s1, std::string_view s2);
// Jaro with the Winkler common-prefix boost (prefix <= 4, scale 0.1).
double jaro_winkler(std::string_view s1, std::string_view s2);

// Lower-cased alphanumeric tokens of free text (keywords, affiliations).
std::vector<std::string> text_tokens(std::string_view text);

// Token document frequencies over one attribute of all references; a
// reference is one document.
class TokenStats {
 public:
  TokenStats() = default;
  void add_document(const std::vector<std::string>& tokens);
  double idf(const std::string& token) const;
  std::size_t documents() const { return docs_; }

 private:
  std::unordered_map<std::string, std::size_t> df_;
  std::size_t docs_ = 0;
};

using TokenBag = std::map<std::string, std::uint32_t>;

// Unit-length log(tf + 1) * idf weights.
std::vector<std::pair<std::string, double>> tfidf_vector(const TokenBag& bag, const TokenStats& stats);
double tfidf_cosine(const TokenBag& a, const TokenBag& b, const TokenStats& stats);
// Symmetrized Soft TF-IDF with Jaro-Winkler token matching.
double soft_tfidf(const TokenBag& a, const TokenBag& b, const TokenStats& stats,
                  double threshold = kSoftTfIdfThreshold);

// Aggregated attributes of a cluster, mergeable in O(size of the smaller side).
struct ClusterProfile {
  std::map<std::string, std::uint32_t> name_counts;  // normalized name -> count
  double value_sum = 0.0;
  std::uint32_t value_count = 0;
  std::map<std::string, TokenBag> bags;  // extra attribute -> tokens
  std::uint32_t size = 0;

  // Most frequent name, ties broken lexicographically.
  const std::string& representative() const;
  double centroid() const { return value_count ? value_sum / value_count : 0.0; }
  void absorb(const ClusterProfile& other);
};

struct Neighborhood {
  std::map<ClusterId, std::uint32_t> labels;  // label -> distinct spanned references
};

class SimilarityModel {
 public:
  SimilarityModel(const Dataset& ds, SimilarityConfig cfg);

  const Dataset& dataset() const { return *ds_; }
  const SimilarityConfig& config() const { return cfg_; }
  const TokenStats& name_stats() const { return name_stats_; }

  double name_sim(std::string_view n1, std::string_view n2) const;
  double value_sim(double x1, double x2) const;

  ClusterProfile profile(RefIdx r) const;
  ClusterProfile profile(std::span<const RefIdx> members) const;
  double attribute_sim(const ClusterProfile& a, const ClusterProfile& b) const;
  double attribute_sim(std::span<const RefIdx> a, std::span<const RefIdx> b) const;
  double ref_sim(RefIdx a, RefIdx b) const;

  // Liberal candidate test. Names: initials rule; numeric: sim >= delta.
  bool delta_similar(RefIdx a, RefIdx b) const;
  // Conservative test: delta-similar and attribute sim >= epsilon.
  bool epsilon_similar(RefIdx a, RefIdx b) const;
  // References whose name equals value or is delta-similar to it.
  std::vector<RefIdx> matches(std::string_view value) const;
  // Delta-similar partners of r within the whole dataset (excluding r).
  std::vector<RefIdx> delta_partners(RefIdx r) const;

  double relational_sim(const Neighborhood& a, const Neighborhood& b) const;
  double combined_sim(double attr, double rel) const {
    return (1.0 - cfg_.alpha) * attr + cfg_.alpha * rel;
  }

 private:
  bool delta_similar_names(std::string_view a, std::string_view b) const;

  const Dataset* ds_;
  SimilarityConfig cfg_;
  TokenStats name_stats_;
  std::map<std::string, TokenStats> attr_stats_;
};

// Union of member hyper-edges, sorted.
std::vector<EdgeIdx> hyperedge_set(const Dataset& ds, std::span<const RefIdx> members);

// Labels of the references spanned by the cluster's hyper-edges, excluding
// own_label. References without a label (outside the run) are ignored.
Neighborhood neighborhood(const Dataset& ds, std::span<const RefIdx> members, ClusterId own_label,
                          const std::unordered_map<RefIdx, ClusterId>& labels);

// |A ∩ B| / |A ∪ B| on label sets, or sum-min / sum-max on counts.
// Two empty neighborhoods score 0.
double jaccard(const Neighborhood& a, const Neighborhood& b, NeighborhoodMode mode);

}  // namespace qter
