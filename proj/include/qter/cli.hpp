#pragma once

// Command-line front end: ingest, query, synth, eval and analyze subcommands.

#include <iosfwd>
#include <string>

#include "qter/engine.hpp"

namespace qter {

// Reads either a dataset snapshot or newline-delimited publication records.
Dataset load_dataset(const std::string& path);

// Returns the process exit status. Output goes to out, diagnostics and
// timings to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qter
