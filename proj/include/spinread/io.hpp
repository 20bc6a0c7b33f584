#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinread/evaluation.hpp"
#include "spinread/gate.hpp"
#include "spinread/rabi.hpp"
#include "spinread/regression.hpp"
#include "spinread/trace.hpp"

namespace spinread::io {

// Schema names and versions written into every file header.
inline constexpr const char* kTraceFormat = "spinread-trace";
inline constexpr const char* kRabiFormat = "spinread-rabi";
inline constexpr const char* kTruthFormat = "spinread-truth";
inline constexpr const char* kSweepFormat = "spinread-sweep";
inline constexpr const char* kModelFormat = "spinread-model";
inline constexpr const char* kFitFormat = "spinread-fit";
inline constexpr const char* kRepairFormat = "spinread-repair";
inline constexpr const char* kReportFormat = "spinread-report";
inline constexpr int kFormatVersion = 1;

/// CSV with `# key=value` comment lines ahead of (or after) a header row.
struct Table {
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;  ///< 1-based source line of each row

  std::size_t column(std::string_view name) const;
  std::optional<std::string> get(const std::string& key) const;
};

Table read_table(std::istream& in);
void write_meta(std::ostream& out, std::string_view key, std::string_view value);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view contents);

// Trace CSV: # repetitions, bin_width_ns, label, seed; bin_index,counts.
std::string format_trace(const TimeTrace& trace);
TimeTrace parse_trace(std::istream& in);
TimeTrace load_trace(const std::filesystem::path& path);
void save_trace(const std::filesystem::path& path, const TimeTrace& trace);

// Rabi CSV, long format: duration_ns,bin_index,counts grouped by duration.
std::string format_rabi(const RabiDataset& dataset, std::optional<std::uint64_t> seed = {});
RabiDataset parse_rabi(std::istream& in);
RabiDataset load_rabi(const std::filesystem::path& path);
void save_rabi(const std::filesystem::path& path, const RabiDataset& dataset,
               std::optional<std::uint64_t> seed = {});

// Known populations: duration_ns,population.
std::string format_truth(std::span<const double> durations, std::span<const double> populations);
std::vector<RabiSample> parse_truth(std::istream& in);
std::vector<RabiSample> load_truth(const std::filesystem::path& path);

// Gate sweep table with a footer naming both optima.
std::string format_sweep(const SweepResult& sweep);
SweepResult parse_sweep(std::istream& in);

// Versioned text model record; save -> load -> save is byte-identical.
std::string format_model(const ReadoutModel& model);
ReadoutModel parse_model(std::istream& in);
ReadoutModel load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const ReadoutModel& model);

// Fit report: duration_ns,p_raw,p_fit,residual with the fit in the header.
std::string format_fit_report(std::span<const RabiSample> samples, const SinusoidFit& fit);
std::pair<std::vector<RabiSample>, SinusoidFit> parse_fit_report(std::istream& in);

// Repair table: duration_ns,p_original,p_repaired,q_fit.
std::string format_repair(std::span<const RepairRow> rows);
std::vector<RepairRow> parse_repair(std::istream& in);

// Evaluation report: one row per method, reductions as footer comments.
std::string format_report(const EvalReport& report);
/// Method rows only (name, averages, contrast, swing); per-point values are not stored.
std::vector<MethodRecord> parse_report(std::istream& in);

}  // namespace spinread::io
