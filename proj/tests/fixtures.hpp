#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qter/corpus.hpp"
#include "qter/expansion.hpp"

#ifndef QTER_TEST_DATA
#define QTER_TEST_DATA "tests/data"
#endif

namespace qter::testing {

inline std::string data_path(const std::string& file) { return std::string(QTER_TEST_DATA) + "/" + file; }

// Four papers: h1 = {W. Wang, C. Chen, A. Ansari}, h2 = {W. Wang, A. Ansari},
// h3 = {L. Li, C. Chen, W. Wang}, h4 = {W. W. Wang, A. Ansari}.
inline Dataset running_example() {
  std::ifstream in(data_path("running_example.jsonl"));
  return ingest(in);
}

inline GoldLabeling running_gold(const Dataset& ds) {
  std::ifstream in(data_path("running_example_gold.txt"));
  return read_gold(in, ds);
}

inline AmbiguityEstimator running_estimator(const Dataset& ds) {
  AmbiguityEstimator est(ds, AmbiguityMode::conditional);
  std::ifstream in(data_path("background_names.txt"));
  est.add_background(in);
  return est;
}

inline std::vector<RefIdx> refs_of(const Dataset& ds, const std::vector<std::string>& ids) {
  std::vector<RefIdx> out;
  for (const auto& id : ids) out.push_back(ds.require_ref(id));
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::string> ids_of(const Dataset& ds, std::vector<RefIdx> refs) {
  std::sort(refs.begin(), refs.end());
  std::vector<std::string> out;
  for (RefIdx r : refs) out.push_back(ds.ref(r).id);
  return out;
}

// Dataset from inline JSON lines.
inline Dataset from_lines(const std::string& text) {
  std::istringstream in(text);
  return ingest(in);
}

}  // namespace qter::testing
