#include "qter/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qter/analysis.hpp"

namespace qter {

using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<double> parse_sweep(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      parts.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::invalid_argument("sweep must look like lo:hi:step, got " + text);
    }
  }
  if (parts.size() != 3) throw std::invalid_argument("sweep must look like lo:hi:step, got " + text);
  return threshold_grid(parts[0], parts[1], parts[2]);
}

json ids_of(const Dataset& ds, const std::vector<RefIdx>& refs) {
  json a = json::array();
  for (RefIdx r : refs) a.push_back(ds.ref(r).id);
  return a;
}

std::string joined_ids(const Dataset& ds, const std::vector<RefIdx>& refs) {
  std::string s;
  for (RefIdx r : refs) {
    if (!s.empty()) s.push_back(' ');
    s += ds.ref(r).id;
  }
  return s;
}

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  std::string output = "text";
  bool structured() const { return output == "structured"; }
};

struct EngineFlags {
  std::map<std::string, std::string> overrides;
  std::string name_stats;

  void attach(CLI::App* sub) {
    auto bind = [&](const std::string& flag, const std::string& key, const std::string& help) {
      sub->add_option_function<std::string>(flag, [this, key](const std::string& v) { overrides[key] = v; }, help);
    };
    bind("--alpha", "alpha", "weight of relational similarity");
    bind("--epsilon", "epsilon", "conservative attribute threshold");
    bind("--delta", "delta", "liberal attribute threshold (numeric measure)");
    bind("--threshold", "merge_threshold", "clustering merge threshold");
    bind("--measure", "measure", "names | numeric");
    bind("--neighborhood", "neighborhood", "set | multiset");
    bind("--depth", "d_star", "expansion cut-off depth");
    bind("--exact-beyond-level0", "exact_beyond_level0", "exact attribute expansion beyond level 0 (true|false)");
    bind("--h-max", "h_max", "adaptive hyper-edge expansion bound");
    bind("--a-max", "a_max", "fraction of frontier names expanded by attribute");
    bind("--adaptive-depth", "adaptive_depth", "pick depth from the query name (true|false)");
    bind("--initials-cutoff", "initials_cutoff", "distinct initials below which depth 1 is used");
    bind("--bootstrap", "bootstrap", "singletons | exact-name");
    bind("--bootstrap-cutoff", "bootstrap_cutoff", "ambiguity below which exact names start merged");
    bind("--ambiguity", "ambiguity", "naive | conditional | numeric");
    bind("--ambiguity-window", "ambiguity_window", "value window for the numeric estimator");
    bind("--conservative-outer", "conservative_outer", "epsilon test for outermost level (true|false)");
    sub->add_option("--name-stats", name_stats, "extra names (one per line) for ambiguity estimates");
  }

  EngineOptions options(const Globals& g) const {
    std::map<std::string, std::string> kv;
    bool from_file = false;
    if (!g.config.empty()) {
      std::istringstream in(slurp(g.config));
      kv = read_key_values(in);
      from_file = true;
    }
    EngineOptions o = engine_options_from(kv, from_file);
    for (const auto& [k, v] : overrides) apply_setting(o, k, v);
    o.sim.validate();
    o.expansion.validate();
    return o;
  }

  AmbiguityEstimator estimator(const Dataset& ds, const EngineOptions& o) const {
    AmbiguityEstimator est(ds, o.ambiguity, o.ambiguity_window);
    if (!name_stats.empty()) {
      std::istringstream in(slurp(name_stats));
      est.add_background(in);
    }
    return est;
  }
};

void print_metrics_row(std::ostream& out, bool structured, const std::string& who, double t,
                       const PairwiseMetrics& m) {
  if (structured) {
    out << json{{"resolver", who}, {"threshold", t},  {"precision", m.precision}, {"recall", m.recall},
                {"f1", m.f1},      {"tp", m.tp},      {"fp", m.fp},               {"fn", m.fn}}
               .dump()
        << '\n';
  } else {
    out << who << '\t' << t << '\t' << m.precision << '\t' << m.recall << '\t' << m.f1 << '\t' << m.tp << '\t'
        << m.fp << '\t' << m.fn << '\n';
  }
}

int cmd_ingest(const Globals& g, const std::string& input, const std::string& snapshot, std::ostream& out) {
  std::ifstream in(input);
  if (!in) throw DataError("cannot open " + input);
  const Dataset ds = ingest(in);
  if (!snapshot.empty()) {
    std::ofstream os(snapshot);
    if (!os) throw DataError("cannot write " + snapshot);
    write_snapshot(os, ds);
  }
  if (g.structured()) {
    out << json{{"references", ds.num_refs()}, {"hyperedges", ds.num_edges()}, {"names", ds.names().size()}}.dump()
        << '\n';
  } else {
    out << "references: " << ds.num_refs() << "\nhyperedges: " << ds.num_edges()
        << "\ndistinct names: " << ds.names().size() << '\n';
  }
  return 0;
}

int cmd_query(const Globals& g, const EngineFlags& flags, std::string name, const std::string& ref_id,
              const std::string& data, const std::string& gold_path, const std::string& sweep_spec,
              std::ostream& out, std::ostream& err) {
  const Dataset ds = load_dataset(data);
  const EngineOptions opts = flags.options(g);
  const Engine engine(ds, opts, flags.estimator(ds, opts));
  std::optional<RefIdx> target;
  if (!ref_id.empty()) {
    target = ds.require_ref(ref_id);
    name = ds.ref(*target).name;
  }
  if (name.empty()) throw std::invalid_argument("query needs a name or --ref-id");

  std::vector<double> grid;
  if (!sweep_spec.empty()) {
    if (gold_path.empty()) throw std::invalid_argument("--sweep needs --gold to pick a threshold");
    grid = parse_sweep(sweep_spec);
  }
  const double run_threshold =
      grid.empty() ? opts.sim.merge_threshold : std::clamp(*std::min_element(grid.begin(), grid.end()), 0.0, 1.0);
  QueryResult res = engine.resolve(Query{"Name", name}, run_threshold);
  err << "timing: extraction " << res.extraction_ms << " ms, resolution " << res.resolution_ms << " ms\n";

  double chosen = run_threshold;
  std::optional<PairwiseMetrics> metrics;
  if (res.answerable() && !gold_path.empty()) {
    std::ifstream gin(gold_path);
    if (!gin) throw DataError("cannot open " + gold_path);
    const GoldLabeling gold = read_gold(gin, ds);
    const auto& scope = res.level0();
    if (grid.empty()) {
      metrics = pairwise_metrics(res.answer, gold, scope);
    } else {
      const auto best = best_f1_over_thresholds(
          [&](double t) { return pairwise_metrics(res.answer_at(t), gold, scope); }, grid);
      chosen = best.threshold;
      metrics = best.metrics;
      res.answer = res.answer_at(chosen);
    }
  }

  std::vector<RefIdx> reduced;
  if (target && res.answerable()) reduced = engine.resolve_reference(*target, res);

  if (g.structured()) {
    json summary = {{"type", "summary"},
                    {"query", name},
                    {"status", res.answerable() ? "answered" : "unanswerable"},
                    {"depth", res.relevant.depth},
                    {"threshold", chosen},
                    {"relevant_set", res.relevant.size()}};
    json levels = json::array();
    for (const auto& lvl : res.relevant.levels) levels.push_back(lvl.size());
    summary["levels"] = levels;
    if (metrics) {
      summary["precision"] = metrics->precision;
      summary["recall"] = metrics->recall;
      summary["f1"] = metrics->f1;
    }
    if (target) summary["answer"] = ids_of(ds, reduced);
    out << summary.dump() << '\n';
    for (std::size_t i = 0; i < res.answer.size(); ++i) {
      out << json{{"type", "cluster"}, {"index", i + 1}, {"refs", ids_of(ds, res.answer[i])}}.dump() << '\n';
    }
    return 0;
  }
  out << "query: " << name << '\n';
  if (!res.answerable()) {
    out << "status: unanswerable (no matching references)\n";
    return 0;
  }
  out << "status: answered\n";
  out << "depth: " << res.relevant.depth << '\n';
  for (std::size_t i = 0; i < res.relevant.levels.size(); ++i) {
    out << "level " << i << ": " << res.relevant.levels[i].size() << " references\n";
  }
  out << "relevant set: " << res.relevant.size() << " references\n";
  out << "threshold: " << chosen << '\n';
  if (metrics) {
    out << "precision: " << metrics->precision << "\nrecall: " << metrics->recall << "\nf1: " << metrics->f1
        << '\n';
  }
  for (std::size_t i = 0; i < res.answer.size(); ++i) {
    out << "cluster " << i + 1 << ": " << joined_ids(ds, res.answer[i]) << '\n';
  }
  if (target) out << "answer: " << joined_ids(ds, reduced) << '\n';
  return 0;
}

int cmd_synth(const Globals& g, GenParams p, const std::string& records_path, const std::string& gold_path,
              std::ostream& out) {
  p.seed = g.seed;
  const SyntheticWorld world = generate_world(p);
  const SyntheticOutput data = generate_hyperedges(world, p);
  {
    std::ofstream os(records_path);
    if (!os) throw DataError("cannot write " + records_path);
    write_records(os, data.records);
  }
  {
    std::ofstream os(gold_path);
    if (!os) throw DataError("cannot write " + gold_path);
    write_gold(os, data.dataset, data.gold);
  }
  if (g.structured()) {
    out << json{{"hyperedges", data.dataset.num_edges()},
                {"references", data.dataset.num_refs()},
                {"entities", world.entities.size()},
                {"relationships", world.relationships.size()},
                {"ambiguous_entities", world.ambiguous_fraction()},
                {"ambiguous_relationships", world.constructed_ambiguous_fraction()},
                {"ambiguous_fallbacks", world.ambiguous_fallbacks}}
               .dump()
        << '\n';
  } else {
    out << "hyperedges: " << data.dataset.num_edges() << "\nreferences: " << data.dataset.num_refs()
        << "\nentities: " << world.entities.size() << "\nrelationships: " << world.relationships.size()
        << "\nambiguous entity fraction: " << world.ambiguous_fraction()
        << "\nconstructed ambiguous relationship fraction: " << world.constructed_ambiguous_fraction()
        << "\nambiguous construction fallbacks: " << world.ambiguous_fallbacks << '\n';
  }
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string gold;
  std::string baseline = "RCER";
  std::optional<double> threshold;
  std::string sweep;
  bool best = false;
  std::string query;
  std::string trend;
  std::size_t runs = 0;
};

int cmd_eval(const Globals& g, const EngineFlags& flags, const EvalArgs& a, std::ostream& out) {
  if (!a.trend.empty()) {
    TrendConfig cfg = default_trend(parse_trend(a.trend));
    if (a.runs) {
      cfg.seeds.clear();
      for (std::size_t i = 0; i < a.runs; ++i) cfg.seeds.push_back(g.seed + i);
    }
    if (!a.sweep.empty()) cfg.thresholds = parse_sweep(a.sweep);
    write_trend(out, run_trend_experiment(cfg));
    return 0;
  }
  if (a.data.empty() || a.gold.empty()) throw std::invalid_argument("eval needs --data and --gold");
  const Dataset ds = load_dataset(a.data);
  std::ifstream gin(a.gold);
  if (!gin) throw DataError("cannot open " + a.gold);
  const GoldLabeling gold = read_gold(gin, ds);
  const EngineOptions opts = flags.options(g);
  const BaselineKind kind = parse_baseline(a.baseline);

  std::vector<double> grid;
  if (!a.sweep.empty()) {
    grid = parse_sweep(a.sweep);
  } else {
    grid = {a.threshold.value_or(opts.sim.merge_threshold)};
  }
  std::vector<RefIdx> refs;
  std::vector<RefIdx> scope;
  const Engine engine(ds, opts, flags.estimator(ds, opts));
  if (!a.query.empty()) {
    const RelevantSet rs = build_relevant_set(engine.similarity(), Query{"Name", a.query}, opts.expansion,
                                              &engine.estimator());
    if (!rs.answerable) throw std::invalid_argument("query " + a.query + " matches no references");
    refs = rs.all;
    scope = rs.levels.front();
  } else {
    refs.resize(ds.num_refs());
    std::iota(refs.begin(), refs.end(), RefIdx{0});
    scope = refs;
  }
  RcerOptions ropts;
  ropts.bootstrap.mode = opts.bootstrap;
  ropts.bootstrap.cutoff = opts.bootstrap_cutoff;
  ropts.bootstrap.ambiguity = [&](std::string_view n) { return engine.estimator().estimate(n); };
  const auto results = sweep(kind, engine.similarity(), refs, gold, scope, grid, ropts);

  if (!g.structured()) out << "resolver\tthreshold\tprecision\trecall\tf1\ttp\tfp\tfn\n";
  if (a.best) {
    std::size_t bi = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
      if (results[i].f1 > results[bi].f1 || (results[i].f1 == results[bi].f1 && grid[i] < grid[bi])) bi = i;
    }
    print_metrics_row(out, g.structured(), to_string(kind), grid[bi], results[bi]);
  } else {
    for (std::size_t i = 0; i < results.size(); ++i) {
      print_metrics_row(out, g.structured(), to_string(kind), grid[i], results[i]);
    }
  }
  return 0;
}

struct AnalyzeArgs {
  bool closed_form = false;
  double a = 0.0;
  double r = 0.0;
  int n = 0;
  std::string data;
  std::string gold;
  int depth = 1;
};

int cmd_analyze(const Globals& g, const EngineFlags& flags, const AnalyzeArgs& a, std::ostream& out) {
  if (a.closed_form) {
    const double v = closed_form_gp(a.a, a.r, a.n);
    if (g.structured()) {
      out << json{{"a", a.a}, {"r", a.r}, {"n", a.n}, {"value", v}}.dump() << '\n';
    } else {
      out << std::setprecision(10) << v << '\n';
    }
    return 0;
  }
  if (a.data.empty() || a.gold.empty()) throw std::invalid_argument("analyze needs --closed-form or --data and --gold");
  const Dataset ds = load_dataset(a.data);
  std::ifstream gin(a.gold);
  if (!gin) throw DataError("cannot open " + a.gold);
  const GoldLabeling gold = read_gold(gin, ds);
  const EngineOptions opts = flags.options(g);
  const SimilarityModel sim(ds, opts.sim);
  const StructuralProbs probs = estimate_structural_probs(sim, gold);
  if (g.structured()) {
    for (EntityIdx e = 0; e < gold.num_entities(); ++e) {
      json row = {{"entity", gold.entity_name(e)}, {"depth", a.depth}};
      if (probs.a_I.count(e)) row["a_I"] = probs.a_I.at(e);
      if (probs.r_I.count(e)) row["r_I"] = probs.r_I.at(e);
      row["recall"] = predict_recall(probs, e, a.depth);
      out << row.dump() << '\n';
    }
    for (const auto& [pair, v] : probs.a_A) {
      out << json{{"entity", gold.entity_name(pair.first)},
                  {"other", gold.entity_name(pair.second)},
                  {"a_A", v},
                  {"r_A", probs.rA(pair.first, pair.second)},
                  {"imprecision", predict_imprecision(probs, pair.first, pair.second, a.depth)}}
                 .dump()
          << '\n';
    }
    return 0;
  }
  out << "entity\ta_I\tr_I\n";
  for (EntityIdx e = 0; e < gold.num_entities(); ++e) {
    out << gold.entity_name(e) << '\t' << (probs.a_I.count(e) ? std::to_string(probs.a_I.at(e)) : "-") << '\t'
        << (probs.r_I.count(e) ? std::to_string(probs.r_I.at(e)) : "-") << '\n';
  }
  out << "entity\tother\ta_A\tr_A\n";
  std::set<EntityPair> pairs;
  for (const auto& [p, v] : probs.a_A) pairs.insert(p);
  for (const auto& [p, v] : probs.r_A) pairs.insert(p);
  for (const auto& p : pairs) {
    out << gold.entity_name(p.first) << '\t' << gold.entity_name(p.second) << '\t' << probs.aA(p.first, p.second)
        << '\t' << probs.rA(p.first, p.second) << '\n';
  }
  write_prediction(out, predict(probs, a.depth), gold);
  return 0;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  const std::string text = slurp(path);
  const json doc = json::parse(text, nullptr, false);
  if (!doc.is_discarded() && doc.is_object() && doc.contains("format")) {
    std::istringstream in(text);
    return read_snapshot(in);
  }
  std::istringstream in(text);
  return ingest(in);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Query-time entity resolution over author/co-occurrence data", "qter"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key = value settings file");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--output", g.output, "text | structured")->check(CLI::IsMember({"text", "structured"}));

  auto* ingest_cmd = app.add_subcommand("ingest", "parse records and write a dataset snapshot");
  std::string ingest_input, ingest_snapshot;
  ingest_cmd->add_option("input", ingest_input, "newline-delimited publication records")->required();
  ingest_cmd->add_option("--snapshot", ingest_snapshot, "write a snapshot here");

  auto* query_cmd = app.add_subcommand("query", "resolve the references matching a name");
  std::string q_name, q_ref, q_data, q_gold, q_sweep;
  EngineFlags q_flags;
  query_cmd->add_option("name", q_name, "queried name");
  query_cmd->add_option("--ref-id", q_ref, "return the references co-referent with this one");
  query_cmd->add_option("--data", q_data, "records or snapshot")->required();
  query_cmd->add_option("--gold", q_gold, "gold labels `ref_id entity_id`");
  query_cmd->add_option("--sweep", q_sweep, "lo:hi:step thresholds; best F1 against --gold");
  q_flags.attach(query_cmd);

  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic records and gold labels");
  GenParams gp;
  std::string s_records, s_gold;
  synth_cmd->add_option("--entities", gp.n_entities, "number of entities");
  synth_cmd->add_option("--relationships", gp.n_relationships, "number of entity relationships");
  synth_cmd->add_option("--hyperedges", gp.n_hyperedges, "number of co-occurrence records");
  synth_cmd->add_option("--p-a", gp.p_a, "attribute ambiguity probability");
  synth_cmd->add_option("--p-ra", gp.p_r_a, "ambiguous relationship probability");
  synth_cmd->add_option("--p-c", gp.p_c, "hyper-edge continuation probability");
  synth_cmd->add_option("--p-r", gp.p_r, "probability an extension picks a neighbor");
  synth_cmd->add_option("--records", s_records, "output records file")->required();
  synth_cmd->add_option("--gold-out", s_gold, "output gold file")->required();

  auto* eval_cmd = app.add_subcommand("eval", "pairwise accuracy of a resolver, or a trend experiment");
  EvalArgs ea;
  EngineFlags e_flags;
  eval_cmd->add_option("--data", ea.data, "records or snapshot");
  eval_cmd->add_option("--gold", ea.gold, "gold labels");
  eval_cmd->add_option("--baseline", ea.baseline, "A | A* | NR | NR* | RCER");
  eval_cmd->add_option("--at", ea.threshold, "single decision threshold");
  eval_cmd->add_option("--sweep", ea.sweep, "lo:hi:step thresholds");
  eval_cmd->add_flag("--best", ea.best, "print only the best-F1 threshold");
  eval_cmd->add_option("--query", ea.query, "evaluate on this query's answer references");
  eval_cmd->add_option("--trend", ea.trend, "pR_recall | pRa_precision | level_convergence");
  eval_cmd->add_option("--runs", ea.runs, "seeds for --trend, starting at --seed");
  e_flags.attach(eval_cmd);

  auto* analyze_cmd = app.add_subcommand("analyze", "structural probabilities and model predictions");
  AnalyzeArgs aa;
  EngineFlags a_flags;
  analyze_cmd->add_flag("--closed-form", aa.closed_form, "evaluate the geometric closed form");
  analyze_cmd->add_option("--a", aa.a, "identification probability");
  analyze_cmd->add_option("--r", aa.r, "relationship probability");
  analyze_cmd->add_option("--n", aa.n, "highest power in the progression");
  analyze_cmd->add_option("--data", aa.data, "records or snapshot");
  analyze_cmd->add_option("--gold", aa.gold, "gold labels");
  analyze_cmd->add_option("--model-depth", aa.depth, "recursion depth for predictions");
  a_flags.attach(analyze_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*ingest_cmd) return cmd_ingest(g, ingest_input, ingest_snapshot, out);
    if (*query_cmd) return cmd_query(g, q_flags, q_name, q_ref, q_data, q_gold, q_sweep, out, err);
    if (*synth_cmd) return cmd_synth(g, gp, s_records, s_gold, out);
    if (*eval_cmd) return cmd_eval(g, e_flags, ea, out);
    if (*analyze_cmd) return cmd_analyze(g, a_flags, aa, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace qter
