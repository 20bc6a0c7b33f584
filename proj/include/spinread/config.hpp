#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "spinread/rabi.hpp"
#include "spinread/regression.hpp"
#include "spinread/trace.hpp"

namespace spinread {

/// Flat `key = value` text with `[section]` headers. Keys are stored as
/// "section.key"; '#' and ';' start comments.
struct ConfigFile {
  std::map<std::string, std::string> values;
  std::map<std::string, std::size_t> lines;
};

ConfigFile parse_config(std::istream& in);
ConfigFile load_config(const std::filesystem::path& path);

/// Everything an end-to-end run needs besides file paths.
struct RunConfig {
  PhotodynamicsParams simulator = paper_like_params();
  std::uint64_t boundary_repetitions = 10'000'000;
  std::uint64_t rabi_repetitions = 100'000;
  std::uint64_t test_repetitions = 500'000;
  RabiSchedule rabi;
  TrainConfig train;
  std::size_t start_bin = 0;
  FitOptions fit;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Applies a parsed file on top of `base`. Unknown keys and bad values are
/// parse errors naming the line.
RunConfig apply_config(const ConfigFile& file, RunConfig base = {});

/// The config file that reproduces `config`.
std::string format_config(const RunConfig& config);

}  // namespace spinread
