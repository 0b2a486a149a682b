#include "qter/rcer.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "qter/names.hpp"

namespace qter {

namespace {

template <typename T>
std::vector<T> sorted_union(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<T> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

void insert_sorted(std::vector<ClusterId>& v, ClusterId c) {
  auto it = std::lower_bound(v.begin(), v.end(), c);
  if (it == v.end() || *it != c) v.insert(it, c);
}

void erase_sorted(std::vector<ClusterId>& v, ClusterId c) {
  auto it = std::lower_bound(v.begin(), v.end(), c);
  if (it != v.end() && *it == c) v.erase(it);
}

}  // namespace

void canonicalize(Partition& p) {
  for (auto& g : p) std::sort(g.begin(), g.end());
  p.erase(std::remove_if(p.begin(), p.end(), [](const auto& g) { return g.empty(); }), p.end());
  std::sort(p.begin(), p.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
}

std::vector<RefPair> block_candidates(const SimilarityModel& sim, std::span<const RefIdx> refs,
                                      const std::vector<bool>& conservative) {
  const Dataset& ds = sim.dataset();
  std::vector<bool> strict(ds.num_refs(), false);
  for (std::size_t i = 0; i < conservative.size() && i < refs.size(); ++i) {
    if (conservative[i]) strict[refs[i]] = true;
  }
  std::vector<RefPair> out;
  auto consider = [&](RefIdx a, RefIdx b) {
    if (a == b) return;
    if (a > b) std::swap(a, b);
    if (!sim.delta_similar(a, b)) return;
    if ((strict[a] || strict[b]) && !sim.epsilon_similar(a, b)) return;
    out.emplace_back(a, b);
  };

  if (sim.config().measure == AttrMeasure::numeric) {
    std::vector<std::pair<double, RefIdx>> values;
    std::unordered_map<std::string, std::vector<RefIdx>> textual;
    for (RefIdx r : refs) {
      if (auto v = ds.numeric_value(r)) {
        values.emplace_back(*v, r);
      } else {
        textual[ds.ref(r).normalized].push_back(r);
      }
    }
    std::sort(values.begin(), values.end());
    const double reach = (1.0 - sim.config().delta) * kNumericRange;
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (std::size_t j = i + 1; j < values.size() && values[j].first - values[i].first <= reach; ++j) {
        consider(values[i].second, values[j].second);
      }
    }
    for (const auto& [name, group] : textual) {
      for (std::size_t i = 0; i < group.size(); ++i) {
        for (std::size_t j = i + 1; j < group.size(); ++j) consider(group[i], group[j]);
      }
    }
  } else {
    std::unordered_map<std::string, std::vector<RefIdx>> blocks;
    for (RefIdx r : refs) blocks[blocking_key(ds.ref(r).normalized)].push_back(r);
    for (const auto& [key, group] : blocks) {
      for (std::size_t i = 0; i < group.size(); ++i) {
        for (std::size_t j = i + 1; j < group.size(); ++j) consider(group[i], group[j]);
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Partition bootstrap(const Dataset& ds, std::span<const RefIdx> refs, const BootstrapOptions& opts) {
  std::vector<RefIdx> sorted(refs.begin(), refs.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  Partition out;
  if (opts.mode == BootstrapMode::singletons) {
    for (RefIdx r : sorted) out.push_back({r});
    return out;
  }
  if (!opts.ambiguity) throw std::invalid_argument("exact-name bootstrap needs an ambiguity estimate");
  std::map<NameId, std::vector<RefIdx>> by_name;
  for (RefIdx r : sorted) by_name[ds.ref(r).name_id].push_back(r);
  for (auto& [name, group] : by_name) {
    if (group.size() > 1 && opts.ambiguity(ds.names()[name]) < opts.cutoff) {
      out.push_back(std::move(group));
    } else {
      for (RefIdx r : group) out.push_back({r});
    }
  }
  canonicalize(out);
  return out;
}

Partition RcerResult::partition_at(double t) const {
  std::vector<std::vector<RefIdx>> by_id(initial.begin(), initial.end());
  std::vector<bool> live(by_id.size(), true);
  for (const auto& step : merge_log) {
    if (step.sim < t) break;
    std::vector<RefIdx> merged = by_id[step.a];
    merged.insert(merged.end(), by_id[step.b].begin(), by_id[step.b].end());
    live[step.a] = live[step.b] = false;
    by_id.resize(std::max<std::size_t>(by_id.size(), step.merged + 1));
    live.resize(by_id.size(), false);
    by_id[step.merged] = std::move(merged);
    live[step.merged] = true;
  }
  Partition out;
  for (std::size_t i = 0; i < by_id.size(); ++i) {
    if (live[i]) out.push_back(by_id[i]);
  }
  canonicalize(out);
  return out;
}

void RcerResult::write_log(std::ostream& out) const {
  for (const auto& s : merge_log) {
    out << s.sim << '\t' << s.a << '\t' << s.b << '\t' << s.merged << '\n';
  }
}

bool RcerState::EntryOrder::operator()(const Entry& x, const Entry& y) const {
  if (x.sim != y.sim) return x.sim < y.sim;
  if (x.lo != y.lo) return x.lo > y.lo;
  if (x.hi != y.hi) return x.hi > y.hi;
  return x.stamp > y.stamp;
}

std::uint64_t RcerState::key(ClusterId a, ClusterId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

RcerState::RcerState(const SimilarityModel& sim, std::span<const RefIdx> refs, const RcerOptions& opts)
    : sim_(&sim) {
  const Dataset& ds = sim.dataset();
  std::vector<bool> strict(ds.num_refs(), false);
  for (std::size_t i = 0; i < opts.conservative.size() && i < refs.size(); ++i) {
    if (opts.conservative[i]) strict[refs[i]] = true;
  }
  refs_.assign(refs.begin(), refs.end());
  std::sort(refs_.begin(), refs_.end());
  refs_.erase(std::unique(refs_.begin(), refs_.end()), refs_.end());
  label_.assign(ds.num_refs(), kNoLabel);

  Partition initial = bootstrap(ds, refs_, opts.bootstrap);
  clusters_.resize(initial.size());
  for (ClusterId c = 0; c < initial.size(); ++c) {
    auto& cl = clusters_[c];
    cl.members = std::move(initial[c]);
    for (RefIdx r : cl.members) label_[r] = c;
    cl.edges = hyperedge_set(ds, cl.members);
    cl.profile = sim.profile(cl.members);
  }
  initial_count_ = clusters_.size();
  for (ClusterId c = 0; c < clusters_.size(); ++c) clusters_[c].nbr = compute_neighborhood(c);

  std::vector<bool> strict_run;
  strict_run.reserve(refs_.size());
  for (RefIdx r : refs_) strict_run.push_back(strict[r]);
  for (const auto& [a, b] : block_candidates(sim, refs_, strict_run)) {
    const ClusterId ca = label_[a];
    const ClusterId cb = label_[b];
    if (ca == cb) continue;
    clusters_[ca].cand.push_back(cb);
    clusters_[cb].cand.push_back(ca);
  }
  for (auto& cl : clusters_) {
    std::sort(cl.cand.begin(), cl.cand.end());
    cl.cand.erase(std::unique(cl.cand.begin(), cl.cand.end()), cl.cand.end());
  }
  for (ClusterId c = 0; c < clusters_.size(); ++c) {
    for (ClusterId other : clusters_[c].cand) {
      if (c < other) push(c, other, fresh_sim(c, other));
    }
  }
}

const RcerState::Cluster& RcerState::cluster(ClusterId c) const {
  if (c >= clusters_.size()) throw std::out_of_range("unknown cluster id " + std::to_string(c));
  return clusters_[c];
}

const std::vector<RefIdx>& RcerState::members(ClusterId c) const { return cluster(c).members; }
const std::vector<EdgeIdx>& RcerState::edges(ClusterId c) const { return cluster(c).edges; }
const Neighborhood& RcerState::neighbors(ClusterId c) const { return cluster(c).nbr; }
const std::vector<ClusterId>& RcerState::candidates(ClusterId c) const { return cluster(c).cand; }

ClusterId RcerState::label(RefIdx r) const {
  return r < label_.size() ? label_[r] : kNoLabel;
}

std::vector<ClusterId> RcerState::live_clusters() const {
  std::vector<ClusterId> out;
  for (ClusterId c = 0; c < clusters_.size(); ++c) {
    if (clusters_[c].alive) out.push_back(c);
  }
  return out;
}

std::optional<double> RcerState::queued_sim(ClusterId a, ClusterId b) const {
  auto it = stored_.find(key(a, b));
  if (it == stored_.end()) return std::nullopt;
  return it->second.sim;
}

Neighborhood RcerState::compute_neighborhood(ClusterId c) const {
  const Dataset& ds = sim_->dataset();
  std::vector<RefIdx> spanned;
  for (EdgeIdx e : clusters_[c].edges) {
    const auto& refs = ds.edge(e).refs;
    spanned.insert(spanned.end(), refs.begin(), refs.end());
  }
  std::sort(spanned.begin(), spanned.end());
  spanned.erase(std::unique(spanned.begin(), spanned.end()), spanned.end());
  Neighborhood nbr;
  for (RefIdx r : spanned) {
    const ClusterId l = label_[r];
    if (l == kNoLabel || l == c) continue;
    ++nbr.labels[l];
  }
  return nbr;
}

double RcerState::fresh_sim(ClusterId a, ClusterId b) const {
  const double attr = sim_->attribute_sim(cluster(a).profile, cluster(b).profile);
  const double rel = sim_->relational_sim(cluster(a).nbr, cluster(b).nbr);
  return sim_->combined_sim(attr, rel);
}

void RcerState::push(ClusterId a, ClusterId b, double s) {
  if (a > b) std::swap(a, b);
  const std::uint64_t stamp = next_stamp_++;
  stored_[key(a, b)] = Stored{s, stamp};
  heap_.push_back(Entry{s, a, b, stamp});
  std::push_heap(heap_.begin(), heap_.end(), EntryOrder{});
}

void RcerState::drop(ClusterId a, ClusterId b) { stored_.erase(key(a, b)); }

bool RcerState::pop_best(MergeStep& step) {
  while (!heap_.empty()) {
    std::pop_heap(heap_.begin(), heap_.end(), EntryOrder{});
    const Entry top = heap_.back();
    heap_.pop_back();
    auto it = stored_.find(key(top.lo, top.hi));
    if (it == stored_.end() || it->second.stamp != top.stamp) continue;
    step = MergeStep{top.sim, top.lo, top.hi, kNoLabel};
    return true;
  }
  return false;
}

ClusterId RcerState::merge(ClusterId a, ClusterId b) {
  if (a == b) throw std::logic_error("cannot merge cluster " + std::to_string(a) + " with itself");
  if (!alive(a) || !alive(b)) {
    throw std::logic_error("merge of retired cluster " + std::to_string(alive(a) ? b : a));
  }
  const auto merged = static_cast<ClusterId>(clusters_.size());
  Cluster m;
  m.members = sorted_union(clusters_[a].members, clusters_[b].members);
  m.edges = sorted_union(clusters_[a].edges, clusters_[b].edges);
  m.profile = clusters_[a].profile;
  m.profile.absorb(clusters_[b].profile);
  m.cand = sorted_union(clusters_[a].cand, clusters_[b].cand);
  erase_sorted(m.cand, a);
  erase_sorted(m.cand, b);

  for (ClusterId old : {a, b}) {
    for (ClusterId other : clusters_[old].cand) drop(old, other);
  }
  std::vector<ClusterId> touched;
  for (ClusterId old : {a, b}) {
    for (const auto& [l, count] : clusters_[old].nbr.labels) {
      if (l != a && l != b) touched.push_back(l);
    }
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

  clusters_.push_back(std::move(m));
  Cluster& ca = clusters_[a];
  Cluster& cb = clusters_[b];
  ca.alive = cb.alive = false;
  for (RefIdx r : clusters_[merged].members) label_[r] = merged;
  for (ClusterId k : clusters_[merged].cand) {
    auto& cand = clusters_[k].cand;
    erase_sorted(cand, a);
    erase_sorted(cand, b);
    insert_sorted(cand, merged);
  }
  for (ClusterId k : touched) {
    auto& labels = clusters_[k].nbr.labels;
    std::uint32_t count = 0;
    for (ClusterId old : {a, b}) {
      auto it = labels.find(old);
      if (it != labels.end()) {
        count += it->second;
        labels.erase(it);
      }
    }
    if (count) labels[merged] += count;
  }
  clusters_[merged].nbr = compute_neighborhood(merged);
  // Member lists of retired clusters stay readable for replay/debugging, but
  // their queues and neighborhoods are no longer consulted.
  ca.cand.clear();
  cb.cand.clear();
  ca.nbr.labels.clear();
  cb.nbr.labels.clear();

  for (ClusterId k : clusters_[merged].cand) push(merged, k, fresh_sim(merged, k));
  for (const auto& [n, count] : clusters_[merged].nbr.labels) {
    for (ClusterId k : clusters_[n].cand) {
      if (k == merged) continue;
      const double s = fresh_sim(n, k);
      auto it = stored_.find(key(n, k));
      if (it == stored_.end() || it->second.sim != s) push(n, k, s);
    }
  }
  return merged;
}

Partition RcerState::partition() const {
  Partition out;
  for (const auto& cl : clusters_) {
    if (cl.alive) out.push_back(cl.members);
  }
  canonicalize(out);
  return out;
}

RcerResult run_rcer(const SimilarityModel& sim, std::span<const RefIdx> refs, const RcerOptions& opts) {
  RcerResult result;
  if (refs.empty()) return result;
  RcerState state(sim, refs, opts);
  for (ClusterId c = 0; c < state.initial_count(); ++c) result.initial.push_back(state.members(c));
  const double threshold = sim.config().merge_threshold;
  MergeStep step{};
  result.stopped = StopReason::exhausted;
  while (state.pop_best(step)) {
    if (step.sim < threshold) {
      result.stopped = StopReason::threshold;
      break;
    }
    if (opts.observer.before_merge) opts.observer.before_merge(state, step);
    step.merged = state.merge(step.a, step.b);
    result.merge_log.push_back(step);
    if (opts.observer.after_merge) opts.observer.after_merge(state, step);
  }
  result.clusters = state.partition();
  return result;
}

}  // namespace qter
