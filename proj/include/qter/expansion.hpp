#pragma once

// Relevant-set extraction for a query: attribute and hyper-edge expansion,
// their adaptive variants and the name-ambiguity estimator that drives them.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qter/similarity.hpp"

namespace qter {

enum class AmbiguityMode {
  naive,        // references carrying the full name / |R|
  conditional,  // distinct first initials seen with the last name / |R|
  numeric,      // references within +-window of a scalar value / |R|
};

class AmbiguityEstimator {
 public:
  AmbiguityEstimator() = default;
  AmbiguityEstimator(const Dataset& ds, AmbiguityMode mode, double window = 3.0);

  // Adds names observed outside the dataset (one per line) to the counts.
  void add_background(std::istream& names);
  void add_name(std::string_view raw);

  AmbiguityMode mode() const { return mode_; }
  double estimate(std::string_view value) const;
  double estimate_ref(RefIdx r) const;
  std::size_t distinct_initials(std::string_view last_name) const;
  std::size_t total() const { return total_; }
  // Average references per distinct name.
  double mu_r() const;

 private:
  const Dataset* ds_ = nullptr;
  AmbiguityMode mode_ = AmbiguityMode::naive;
  double window_ = 3.0;
  std::size_t total_ = 0;
  std::unordered_map<std::string, std::size_t> name_counts_;
  std::unordered_map<std::string, std::vector<bool>> initials_;  // last name -> seen initials
  std::vector<double> values_;                                    // sorted
};

struct ExpansionParams {
  int d_star = 1;
  bool exact_beyond_level0 = true;
  std::optional<double> h_max;
  std::optional<double> a_max;
  bool adaptive_depth = false;
  int initials_cutoff = 10;

  void validate() const;
};

struct RelevantSet {
  std::vector<std::vector<RefIdx>> levels;
  std::vector<RefIdx> all;  // sorted union of levels
  bool answerable = false;
  int depth = 0;  // cut-off depth actually used
  // mu_r * k for adaptively A-expanded levels, 0 elsewhere.
  std::vector<double> expected_growth;

  std::size_t size() const { return all.size(); }
  // Level of each reference in all (parallel array).
  std::vector<int> level_of_all() const;
  void write(std::ostream& out, const Dataset& ds) const;
};

std::vector<RefIdx> x_a(const SimilarityModel& sim, std::string_view value);
// All references delta-similar to any input, inputs included.
std::vector<RefIdx> x_a(const SimilarityModel& sim, std::span<const RefIdx> refs);
std::vector<RefIdx> x_h(const Dataset& ds, std::span<const RefIdx> refs);
std::vector<RefIdx> x_a_exact(const Dataset& ds, std::span<const RefIdx> refs);

// The k references with the lowest (highest) estimate; ties by name, then id.
std::vector<RefIdx> least_ambiguous(const Dataset& ds, std::span<const RefIdx> refs, std::size_t k,
                                    const AmbiguityEstimator& est);
std::vector<RefIdx> most_ambiguous(const Dataset& ds, std::span<const RefIdx> refs, std::size_t k,
                                   const AmbiguityEstimator& est);

std::vector<RefIdx> adaptive_x_h(const Dataset& ds, std::span<const RefIdx> frontier, double h_max,
                                 const AmbiguityEstimator& est);
// Expands the ceil(a_max * |frontier|) most ambiguous frontier references.
// Uses exact expansion unless sim is given.
std::vector<RefIdx> adaptive_x_a(const Dataset& ds, std::span<const RefIdx> frontier, double a_max,
                                 const AmbiguityEstimator& est, const SimilarityModel* sim = nullptr);

int adaptive_depth(const AmbiguityEstimator& est, std::string_view value, const ExpansionParams& params);

// Level 0 = x_a(value); odd levels expand hyper-edges, even levels attributes.
// Each reference is kept at the first level that discovers it.
RelevantSet build_relevant_set(const SimilarityModel& sim, const Query& q, const ExpansionParams& params,
                               const AmbiguityEstimator* est = nullptr);

}  // namespace qter
