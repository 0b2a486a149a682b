#include "qter/engine.hpp"

#include <algorithm>
#include <chrono>
#include <istream>
#include <stdexcept>

namespace qter {

namespace {

double to_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("setting " + key + ": expected a number, got '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("setting " + key + ": expected an integer, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("setting " + key + ": expected true or false, got '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_setting(EngineOptions& o, const std::string& key, const std::string& value) {
  if (key == "alpha") {
    o.sim.alpha = to_real(key, value);
  } else if (key == "epsilon") {
    o.sim.epsilon = to_real(key, value);
  } else if (key == "delta") {
    o.sim.delta = to_real(key, value);
  } else if (key == "merge_threshold") {
    o.sim.merge_threshold = to_real(key, value);
  } else if (key.rfind("weight.", 0) == 0 && key.size() > 7) {
    o.sim.attr_weights[key.substr(7)] = to_real(key, value);
  } else if (key == "measure") {
    if (value == "names") {
      o.sim.measure = AttrMeasure::names;
    } else if (value == "numeric") {
      o.sim.measure = AttrMeasure::numeric;
    } else {
      throw std::invalid_argument("measure must be names or numeric");
    }
  } else if (key == "neighborhood") {
    if (value == "set") {
      o.sim.neighborhood = NeighborhoodMode::set;
    } else if (value == "multiset") {
      o.sim.neighborhood = NeighborhoodMode::multiset;
    } else {
      throw std::invalid_argument("neighborhood must be set or multiset");
    }
  } else if (key == "d_star") {
    o.expansion.d_star = to_int(key, value);
  } else if (key == "exact_beyond_level0") {
    o.expansion.exact_beyond_level0 = to_bool(key, value);
  } else if (key == "h_max") {
    o.expansion.h_max = to_real(key, value);
  } else if (key == "a_max") {
    o.expansion.a_max = to_real(key, value);
  } else if (key == "adaptive_depth") {
    o.expansion.adaptive_depth = to_bool(key, value);
  } else if (key == "initials_cutoff") {
    o.expansion.initials_cutoff = to_int(key, value);
  } else if (key == "bootstrap") {
    if (value == "singletons") {
      o.bootstrap = BootstrapMode::singletons;
    } else if (value == "exact-name" || value == "exact_name") {
      o.bootstrap = BootstrapMode::exact_name;
    } else {
      throw std::invalid_argument("bootstrap must be singletons or exact-name");
    }
  } else if (key == "bootstrap_cutoff") {
    o.bootstrap_cutoff = to_real(key, value);
  } else if (key == "ambiguity") {
    if (value == "naive") {
      o.ambiguity = AmbiguityMode::naive;
    } else if (value == "conditional") {
      o.ambiguity = AmbiguityMode::conditional;
    } else if (value == "numeric") {
      o.ambiguity = AmbiguityMode::numeric;
    } else {
      throw std::invalid_argument("ambiguity must be naive, conditional or numeric");
    }
  } else if (key == "ambiguity_window") {
    o.ambiguity_window = to_real(key, value);
  } else if (key == "conservative_outer") {
    o.conservative_outer = to_bool(key, value);
  } else {
    throw std::invalid_argument("unknown setting " + key);
  }
}

EngineOptions engine_options_from(const std::map<std::string, std::string>& kv, bool require_core) {
  EngineOptions o;
  if (require_core) {
    for (const char* k : {"alpha", "epsilon", "delta", "merge_threshold"}) {
      if (!kv.count(k)) throw std::invalid_argument(std::string("config is missing ") + k);
    }
    const bool has_weight =
        std::any_of(kv.begin(), kv.end(), [](const auto& p) { return p.first.rfind("weight.", 0) == 0; });
    if (!has_weight) throw std::invalid_argument("config needs at least one weight.<Attribute>");
  }
  if (std::any_of(kv.begin(), kv.end(), [](const auto& p) { return p.first.rfind("weight.", 0) == 0; })) {
    o.sim.attr_weights.clear();
  }
  for (const auto& [k, v] : kv) apply_setting(o, k, v);
  o.sim.validate();
  o.expansion.validate();
  return o;
}

const std::vector<RefIdx>& QueryResult::level0() const {
  static const std::vector<RefIdx> none;
  return relevant.levels.empty() ? none : relevant.levels.front();
}

Partition QueryResult::answer_at(double threshold) const {
  if (!answerable()) return {};
  return project(run.partition_at(threshold), level0());
}

Engine::Engine(const Dataset& ds, EngineOptions opts)
    : Engine(ds, opts, AmbiguityEstimator(ds, opts.ambiguity, opts.ambiguity_window)) {}

Engine::Engine(const Dataset& ds, EngineOptions opts, AmbiguityEstimator est)
    : ds_(&ds), opts_(std::move(opts)), sim_(ds, opts_.sim), est_(std::move(est)) {
  opts_.expansion.validate();
}

QueryResult Engine::resolve(const Query& q) const { return resolve(q, opts_.sim.merge_threshold); }

QueryResult Engine::resolve(const Query& q, double merge_threshold) const {
  if (q.attribute != "Name") throw std::invalid_argument("only Name queries are supported");
  QueryResult out;
  auto t0 = std::chrono::steady_clock::now();
  out.relevant = build_relevant_set(sim_, q, opts_.expansion, &est_);
  out.extraction_ms = elapsed_ms(t0);
  if (!out.relevant.answerable) return out;

  SimilarityConfig cfg = opts_.sim;
  cfg.merge_threshold = merge_threshold;
  const SimilarityModel sim(*ds_, cfg);
  RcerOptions ropts;
  ropts.bootstrap.mode = opts_.bootstrap;
  ropts.bootstrap.cutoff = opts_.bootstrap_cutoff;
  ropts.bootstrap.ambiguity = [this](std::string_view name) { return est_.estimate(name); };
  if (opts_.conservative_outer && out.relevant.depth >= 1) {
    const auto levels = out.relevant.level_of_all();
    ropts.conservative.resize(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) ropts.conservative[i] = levels[i] == out.relevant.depth;
  }
  t0 = std::chrono::steady_clock::now();
  out.run = run_rcer(sim, out.relevant.all, ropts);
  out.resolution_ms = elapsed_ms(t0);
  out.answer = project(out.run.clusters, out.level0());
  return out;
}

std::vector<RefIdx> Engine::resolve_reference(RefIdx r, const QueryResult& answer) const {
  for (const auto& group : answer.answer) {
    if (std::binary_search(group.begin(), group.end(), r)) return group;
  }
  throw std::invalid_argument("reference " + ds_->ref(r).id + " is not part of the answer");
}

}  // namespace qter
