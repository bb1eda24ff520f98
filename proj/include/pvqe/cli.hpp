#pragma once

// Command-line front end. Every subcommand writes its artifacts plus a
// manifest.json into the output directory.

#include "pvqe/csv.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace pvqe {

struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 42;
  std::string out_dir;
  std::string version;
  std::string timestamp; // ISO 8601, UTC

  std::string to_json() const;
};

/// Writes `table` to `path` (header row, LF endings). Throws Error when the
/// file cannot be written.
void emit_curve(const CsvTable &table, const std::string &path);

/// Runs one subcommand. `args` excludes the program name.
/// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
int dispatch(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

std::string version_string();

} // namespace pvqe
