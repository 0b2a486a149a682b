#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "qter/cli.hpp"
#include "qter/engine.hpp"

using namespace qter;
using namespace qter::testing;

namespace {

struct CliRun {
  int status = 0;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "qter");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

EngineOptions running_options() {
  std::ifstream in(data_path("running_example.conf"));
  return engine_options_from(read_key_values(in));
}

std::string temp_path(const std::string& name) { return "qter_test_" + name; }

}  // namespace

TEST_CASE("key = value parsing") {
  std::istringstream in("# comment\n alpha = 0.4  # trailing\n\nweight.Name=1\n");
  const auto kv = read_key_values(in);
  CHECK(kv.at("alpha") == "0.4");
  CHECK(kv.at("weight.Name") == "1");
  CHECK(kv.size() == 2);
  std::istringstream bad("alpha 0.4\n");
  CHECK_THROWS_WITH_AS(read_key_values(bad), "config line 1: expected key = value", std::invalid_argument);
  std::istringstream empty_key(" = 3\n");
  CHECK_THROWS_AS(read_key_values(empty_key), std::invalid_argument);
}

TEST_CASE("engine options from settings") {
  const EngineOptions o = running_options();
  CHECK(o.sim.alpha == 0.5);
  CHECK(o.sim.epsilon == 0.99);
  CHECK(o.sim.merge_threshold == 0.55);
  CHECK(o.expansion.d_star == 1);
  CHECK(o.bootstrap == BootstrapMode::exact_name);
  CHECK(o.ambiguity == AmbiguityMode::conditional);

  std::map<std::string, std::string> kv{{"alpha", "0.5"}, {"epsilon", "0.9"}, {"delta", "0.5"}};
  CHECK_THROWS_WITH_AS(engine_options_from(kv), "config is missing merge_threshold", std::invalid_argument);
  kv["merge_threshold"] = "0.5";
  CHECK_THROWS_AS(engine_options_from(kv), std::invalid_argument);
  kv["weight.Name"] = "1";
  CHECK_NOTHROW(engine_options_from(kv));
  kv["alpha"] = "lots";
  CHECK_THROWS_AS(engine_options_from(kv), std::invalid_argument);
  kv["alpha"] = "1.5";
  CHECK_THROWS_AS(engine_options_from(kv), std::invalid_argument);
  CHECK_NOTHROW(engine_options_from({{"d_star", "2"}}, false));

  EngineOptions e;
  CHECK_THROWS_WITH_AS(apply_setting(e, "colour", "red"), "unknown setting colour", std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(e, "measure", "cosine"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(e, "d_star", "1.5"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(e, "adaptive_depth", "maybe"), std::invalid_argument);
  apply_setting(e, "measure", "numeric");
  apply_setting(e, "neighborhood", "multiset");
  apply_setting(e, "exact_beyond_level0", "false");
  apply_setting(e, "h_max", "2");
  apply_setting(e, "weight.Affiliation", "0.3");
  CHECK(e.sim.measure == AttrMeasure::numeric);
  CHECK(e.sim.neighborhood == NeighborhoodMode::multiset);
  CHECK_FALSE(e.expansion.exact_beyond_level0);
  CHECK(*e.expansion.h_max == 2.0);
  CHECK(e.sim.attr_weights.at("Affiliation") == 0.3);
}

TEST_CASE("engine answers the running query") {
  const Dataset ds = running_example();
  const GoldLabeling gold = running_gold(ds);
  const Engine engine(ds, running_options(), running_estimator(ds));
  const QueryResult res = engine.resolve(Query{"Name", "W. Wang"});
  REQUIRE(res.answerable());
  CHECK(ids_of(ds, res.level0()) == std::vector<std::string>{"r1", "r4", "r8", "r9"});
  REQUIRE(res.answer.size() == 2);
  CHECK(ids_of(ds, res.answer[0]) == std::vector<std::string>{"r1", "r4", "r9"});
  CHECK(ids_of(ds, res.answer[1]) == std::vector<std::string>{"r8"});
  const PairwiseMetrics m = pairwise_metrics(res.answer, gold, res.level0());
  CHECK(m.f1 == 1.0);
  CHECK(engine.resolve_reference(ds.require_ref("r9"), res) == res.answer[0]);
  CHECK_THROWS_AS(engine.resolve_reference(ds.require_ref("r2"), res), std::invalid_argument);
  // Raising the threshold replays fewer merges.
  CHECK(res.answer_at(1.0).size() > res.answer.size());
  CHECK(res.answer_at(0.55) == res.answer);
  CHECK_THROWS_AS(engine.resolve(Query{"Title", "x"}), std::invalid_argument);

  const QueryResult none = engine.resolve(Query{"Name", "Q. Nobody"});
  CHECK_FALSE(none.answerable());
  CHECK(none.answer.empty());
  CHECK(none.answer_at(0.5).empty());
}

TEST_CASE("cli query on the running example") {
  const auto r = cli({"--config", data_path("running_example.conf"), "query", "W. Wang", "--data",
                      data_path("running_example.jsonl"), "--gold", data_path("running_example_gold.txt"),
                      "--name-stats", data_path("background_names.txt")});
  CHECK(r.status == 0);
  CHECK(r.out.find("status: answered") != std::string::npos);
  CHECK(r.out.find("cluster 1: r1 r4 r9\n") != std::string::npos);
  CHECK(r.out.find("cluster 2: r8\n") != std::string::npos);
  CHECK(r.out.find("f1: 1\n") != std::string::npos);
  CHECK(r.err.find("timing:") != std::string::npos);
}

TEST_CASE("cli structured output and reference lookup") {
  const auto r = cli({"--output", "structured", "--config", data_path("running_example.conf"), "query", "W. Wang",
                      "--ref-id", "r4", "--data", data_path("running_example.jsonl"), "--name-stats",
                      data_path("background_names.txt")});
  CHECK(r.status == 0);
  CHECK(r.out.find(R"("type":"summary")") != std::string::npos);
  CHECK(r.out.find(R"("refs":["r1","r4","r9"])") != std::string::npos);
}

TEST_CASE("cli unanswerable query exits cleanly") {
  const auto r = cli({"query", "Z. Nobody", "--data", data_path("running_example.jsonl")});
  CHECK(r.status == 0);
  CHECK(r.out.find("unanswerable") != std::string::npos);
}

TEST_CASE("cli closed form") {
  const auto r = cli({"analyze", "--closed-form", "--a", "0.33", "--r", "1", "--n", "2"});
  CHECK(r.status == 0);
  CHECK(r.out == "0.699237\n");
}

TEST_CASE("cli ingest, synth and eval round trip") {
  const std::string snap = temp_path("snapshot.json");
  auto r = cli({"ingest", data_path("running_example.jsonl"), "--snapshot", snap});
  CHECK(r.status == 0);
  r = cli({"--config", data_path("running_example.conf"), "query", "W. Wang", "--data", snap, "--name-stats",
           data_path("background_names.txt")});
  CHECK(r.status == 0);
  CHECK(r.out.find("cluster 1: r1 r4 r9\n") != std::string::npos);

  const std::string recs = temp_path("synth.jsonl");
  const std::string gold = temp_path("synth_gold.txt");
  r = cli({"--seed", "3", "synth", "--entities", "30", "--relationships", "40", "--hyperedges", "60", "--records",
           recs, "--gold-out", gold});
  CHECK(r.status == 0);
  r = cli({"eval", "--data", recs, "--gold", gold, "--baseline", "A*", "--sweep", "0.1:0.9:0.2"});
  CHECK(r.status == 0);
  CHECK(r.out.rfind("resolver\tthreshold\tprecision\trecall\tf1\ttp\tfp\tfn\n", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 6);
  r = cli({"eval", "--data", recs, "--gold", gold, "--baseline", "RCER", "--sweep", "0.1:0.9:0.2", "--best",
           "--measure", "numeric"});
  CHECK(r.status == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);
  for (const auto& f : {snap, recs, gold}) std::remove(f.c_str());
}

TEST_CASE("cli rejects bad input") {
  CHECK(cli({}).status != 0);
  CHECK(cli({"bogus"}).status != 0);
  CHECK(cli({"query", "x", "--data", "does_not_exist.jsonl"}).status != 0);
  CHECK(cli({"query", "x"}).status != 0);
  CHECK(cli({"--output", "xml", "analyze", "--closed-form"}).status != 0);
  CHECK(cli({"eval", "--data", data_path("running_example.jsonl"), "--baseline", "B"}).status != 0);
  CHECK(cli({"query", "W. Wang", "--data", data_path("running_example.jsonl"), "--alpha", "2"}).status != 0);
}
