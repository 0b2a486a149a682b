#pragma once

// Pairwise accuracy, attribute-only and naive relational baselines, threshold
// sweeps and the synthetic trend experiments.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qter/expansion.hpp"
#include "qter/rcer.hpp"
#include "qter/synthgen.hpp"

namespace qter {

struct PairwiseMetrics {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
};

// Builds the ratios from counts: precision is 1 with no predicted pairs,
// recall is 1 with no gold pairs.
PairwiseMetrics metrics_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

// pred must partition scope exactly; throws std::invalid_argument otherwise.
PairwiseMetrics pairwise_metrics(const Partition& pred, const GoldLabeling& gold, std::span<const RefIdx> scope);
// Raw pairwise decisions (no closure) over scope.
PairwiseMetrics pairwise_metrics(const std::vector<RefPair>& accepted, const GoldLabeling& gold,
                                 std::span<const RefIdx> scope);

// Restricts a partition of a superset to the references in scope.
Partition project(const Partition& p, std::span<const RefIdx> scope);
// Connected components of the accepted pairs over refs.
Partition transitive_closure(std::span<const RefIdx> refs, const std::vector<RefPair>& accepted);

enum class BaselineKind { A, A_star, NR, NR_star, RCER };
BaselineKind parse_baseline(std::string_view s);
std::string to_string(BaselineKind k);

// Mean similarity of a greedy one-to-one matching between the co-occurring
// references of a and b (a and b themselves excluded); 0 if either is empty.
double cooccurrence_match(const SimilarityModel& sim, RefIdx a, RefIdx b);
double nr_score(const SimilarityModel& sim, RefIdx a, RefIdx b);

// Blocked pairs scored once; decisions for any threshold come from filtering.
struct ScoredPairs {
  std::vector<RefPair> pairs;
  std::vector<double> scores;
  std::vector<RefPair> accepted(double threshold) const;
};
ScoredPairs score_pairs_a(const SimilarityModel& sim, std::span<const RefIdx> refs);
ScoredPairs score_pairs_nr(const SimilarityModel& sim, std::span<const RefIdx> refs);

std::vector<RefPair> baseline_a(const SimilarityModel& sim, std::span<const RefIdx> refs, double threshold);
std::vector<RefPair> baseline_nr(const SimilarityModel& sim, std::span<const RefIdx> refs, double threshold);

struct ThresholdResult {
  double threshold = 0.0;
  PairwiseMetrics metrics;
};

// Highest F1; ties go to the lowest threshold.
ThresholdResult best_f1_over_thresholds(const std::function<PairwiseMetrics(double)>& resolver,
                                        std::vector<double> thresholds);

// lo, lo + step, ... up to hi (inclusive within 1e-9).
std::vector<double> threshold_grid(double lo, double hi, double step);

// Metrics of one resolver over every threshold of a grid. RC-ER runs once at
// the lowest threshold and replays its merge log for the others.
std::vector<PairwiseMetrics> sweep(BaselineKind kind, const SimilarityModel& sim, std::span<const RefIdx> refs,
                                   const GoldLabeling& gold, std::span<const RefIdx> scope,
                                   const std::vector<double>& thresholds, const RcerOptions& opts = {});

enum class TrendKind { pr_recall, pra_precision, level_convergence };
TrendKind parse_trend(std::string_view s);

struct TrendConfig {
  TrendKind kind = TrendKind::pr_recall;
  GenParams base;
  // p_r, p_r_a, or hyper-edge expansion rounds k (d* = 2k - 1, 0 for k = 0)
  std::vector<double> settings;
  std::vector<std::uint64_t> seeds;
  std::vector<double> thresholds;
  SimilarityConfig sim;  // numeric measure expected
};

struct TrendRow {
  std::string metric;
  double setting = 0.0;
  double threshold = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n_runs = 0;
};

// Default configurations of the three experiments.
TrendConfig default_trend(TrendKind kind);
// The reference whose delta-neighbourhood spans the most gold entities.
RefIdx most_ambiguous_reference(const SimilarityModel& sim, const GoldLabeling& gold);

std::vector<TrendRow> run_trend_experiment(const TrendConfig& cfg);
void write_trend(std::ostream& out, const std::vector<TrendRow>& rows);

}  // namespace qter
