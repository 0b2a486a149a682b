#pragma once

// Greedy relational clustering: blocking, bootstrap and priority-queue driven
// merging with neighborhood-aware similarity updates.

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "qter/similarity.hpp"

namespace qter {

using RefPair = std::pair<RefIdx, RefIdx>;  // first < second
using Partition = std::vector<std::vector<RefIdx>>;

// Sorts members and groups by first member.
void canonicalize(Partition& p);

// Delta-similar pairs among refs. Pairs touching a reference flagged in
// conservative (parallel to refs, may be empty) must also be epsilon-similar.
std::vector<RefPair> block_candidates(const SimilarityModel& sim, std::span<const RefIdx> refs,
                                      const std::vector<bool>& conservative = {});

enum class BootstrapMode { singletons, exact_name };

struct BootstrapOptions {
  BootstrapMode mode = BootstrapMode::singletons;
  double cutoff = 0.0;
  // Ambiguity of a normalized name; exact-name groups merge when below cutoff.
  std::function<double(std::string_view)> ambiguity;
};

Partition bootstrap(const Dataset& ds, std::span<const RefIdx> refs, const BootstrapOptions& opts);

struct MergeStep {
  double sim;
  ClusterId a;  // smaller id
  ClusterId b;
  ClusterId merged;
};

enum class StopReason { threshold, exhausted };

struct RcerResult {
  Partition initial;   // bootstrap clusters; id i is initial[i]
  Partition clusters;  // final partition, canonical order
  std::vector<MergeStep> merge_log;
  StopReason stopped = StopReason::exhausted;

  // Partition a run with a threshold >= the one used here would return:
  // replays merges up to the first one scored below t.
  Partition partition_at(double t) const;
  void write_log(std::ostream& out) const;
};

class RcerState;

// Hooks for auditing a run; both default to no-ops.
struct RcerObserver {
  std::function<void(const RcerState&, const MergeStep&)> before_merge;
  std::function<void(const RcerState&, const MergeStep&)> after_merge;
};

struct RcerOptions {
  BootstrapOptions bootstrap;
  std::vector<bool> conservative;  // parallel to the run's refs
  RcerObserver observer;
};

// Mutable clustering state of one run. Exposed read-only to observers and
// for direct merge tests.
class RcerState {
 public:
  RcerState(const SimilarityModel& sim, std::span<const RefIdx> refs, const RcerOptions& opts);

  // Pops until a live candidate is found; false when the queue is exhausted.
  bool pop_best(MergeStep& step);
  // Merges two live clusters and updates the queue. Throws
  // std::logic_error on self-merge or a retired id, leaving state unchanged.
  ClusterId merge(ClusterId a, ClusterId b);

  std::vector<ClusterId> live_clusters() const;
  bool alive(ClusterId c) const { return c < clusters_.size() && clusters_[c].alive; }
  const std::vector<RefIdx>& members(ClusterId c) const;
  const std::vector<EdgeIdx>& edges(ClusterId c) const;
  const Neighborhood& neighbors(ClusterId c) const;
  const std::vector<ClusterId>& candidates(ClusterId c) const;
  ClusterId label(RefIdx r) const;
  // Similarity currently queued for the pair, if it is a candidate pair.
  std::optional<double> queued_sim(ClusterId a, ClusterId b) const;
  // Recomputes from the current cluster contents.
  double fresh_sim(ClusterId a, ClusterId b) const;
  std::span<const RefIdx> refs() const { return refs_; }
  Partition partition() const;
  std::size_t initial_count() const { return initial_count_; }

 private:
  struct Cluster {
    std::vector<RefIdx> members;
    std::vector<EdgeIdx> edges;
    Neighborhood nbr;
    std::vector<ClusterId> cand;  // sorted
    ClusterProfile profile;
    bool alive = true;
  };
  struct Entry {
    double sim;
    ClusterId lo;
    ClusterId hi;
    std::uint64_t stamp;
  };
  struct EntryOrder {
    bool operator()(const Entry& x, const Entry& y) const;
  };
  struct Stored {
    double sim;
    std::uint64_t stamp;
  };

  static std::uint64_t key(ClusterId a, ClusterId b);
  void push(ClusterId a, ClusterId b, double s);
  void drop(ClusterId a, ClusterId b);
  Neighborhood compute_neighborhood(ClusterId c) const;
  const Cluster& cluster(ClusterId c) const;

  const SimilarityModel* sim_;
  std::vector<RefIdx> refs_;
  std::vector<ClusterId> label_;  // by RefIdx, kNoLabel outside the run
  std::vector<Cluster> clusters_;
  std::vector<Entry> heap_;
  std::unordered_map<std::uint64_t, Stored> stored_;
  std::uint64_t next_stamp_ = 0;
  std::size_t initial_count_ = 0;
};

inline constexpr ClusterId kNoLabel = ~ClusterId{0};

// Runs to completion: merges while the best queued similarity is at or above
// the configured merge threshold.
RcerResult run_rcer(const SimilarityModel& sim, std::span<const RefIdx> refs, const RcerOptions& opts = {});

}  // namespace qter
