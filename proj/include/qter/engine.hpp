#pragma once

// Query-time resolution: extract the relevant set for a name, cluster it and
// report the clusters of the references that answer the query.

#include <iosfwd>
#include <map>
#include <string>

#include "qter/evalkit.hpp"

namespace qter {

struct EngineOptions {
  SimilarityConfig sim;
  ExpansionParams expansion;
  BootstrapMode bootstrap = BootstrapMode::singletons;
  double bootstrap_cutoff = 0.0;
  AmbiguityMode ambiguity = AmbiguityMode::naive;
  double ambiguity_window = 3.0;
  // References at the last expansion level only merge when epsilon-similar.
  bool conservative_outer = false;
};

// key = value lines; '#' starts a comment. alpha, epsilon, delta,
// merge_threshold and at least one weight.<Attribute> are mandatory.
std::map<std::string, std::string> read_key_values(std::istream& in);
EngineOptions engine_options_from(const std::map<std::string, std::string>& kv, bool require_core = true);
// Applies one setting; throws std::invalid_argument on unknown keys or bad values.
void apply_setting(EngineOptions& opts, const std::string& key, const std::string& value);

struct QueryResult {
  RelevantSet relevant;
  RcerResult run;
  Partition answer;  // clusters restricted to level-0 references
  double extraction_ms = 0.0;
  double resolution_ms = 0.0;

  bool answerable() const { return relevant.answerable; }
  const std::vector<RefIdx>& level0() const;
  // Answer under a higher merge threshold, from the recorded merges.
  Partition answer_at(double threshold) const;
};

class Engine {
 public:
  Engine(const Dataset& ds, EngineOptions opts);
  Engine(const Dataset& ds, EngineOptions opts, AmbiguityEstimator est);

  const Dataset& dataset() const { return *ds_; }
  const EngineOptions& options() const { return opts_; }
  const SimilarityModel& similarity() const { return sim_; }
  const AmbiguityEstimator& estimator() const { return est_; }

  QueryResult resolve(const Query& q) const;
  // Same, clustering with an explicit merge threshold.
  QueryResult resolve(const Query& q, double merge_threshold) const;
  // References co-referent with r among those sharing its name: the cluster
  // holding r in the answer to a query on r's name.
  std::vector<RefIdx> resolve_reference(RefIdx r, const QueryResult& answer) const;

 private:
  const Dataset* ds_;
  EngineOptions opts_;
  SimilarityModel sim_;
  AmbiguityEstimator est_;
};

}  // namespace qter
