#include "spinread/io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "spinread/error.hpp"
#include "spinread/format.hpp"

namespace spinread::io {

namespace {

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.emplace_back(trim(line.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string format_header(const char* name) {
  return std::string("# format=") + name + " " + std::to_string(kFormatVersion) + "\n";
}

void check_format(const Table& t, const char* name) {
  const auto f = t.get("format");
  if (!f) return;
  std::istringstream in(*f);
  std::string got;
  int version = 0;
  in >> got >> version;
  if (got != name) throw ParseError(1, "expected a " + std::string(name) + " file, found " + got);
  if (version < 1 || version > kFormatVersion) {
    throw ParseError(1, "unsupported " + got + " version " + std::to_string(version));
  }
}

void expect_columns(const Table& t, std::initializer_list<std::string_view> names) {
  std::vector<std::string> want(names.begin(), names.end());
  if (t.columns != want) {
    std::string joined;
    for (const auto& n : want) joined += (joined.empty() ? "" : ",") + n;
    throw ParseError(t.columns.empty() ? 1 : t.row_lines.empty() ? 1 : t.row_lines.front() - 1,
                     "expected header row '" + joined + "'");
  }
}

double cell_double(const Table& t, std::size_t row, std::size_t col) {
  const auto v = parse_double(t.rows[row][col]);
  if (!v) {
    throw ParseError(t.row_lines[row], "column " + t.columns[col] + ": '" + t.rows[row][col] +
                                           "' is not a number");
  }
  return *v;
}

std::uint64_t cell_uint(const Table& t, std::size_t row, std::size_t col) {
  const auto v = parse_uint(t.rows[row][col]);
  if (!v) {
    throw ParseError(t.row_lines[row], "column " + t.columns[col] + ": '" + t.rows[row][col] +
                                           "' is not a nonnegative integer");
  }
  return *v;
}

double meta_double(const Table& t, const std::string& key, std::optional<double> fallback = {}) {
  const auto s = t.get(key);
  if (!s) {
    if (fallback) return *fallback;
    throw ParseError(1, "missing '" + key + "' header");
  }
  const auto v = parse_double(*s);
  if (!v) throw ParseError(1, "header " + key + ": '" + *s + "' is not a number");
  return *v;
}

std::uint64_t meta_uint(const Table& t, const std::string& key) {
  const auto s = t.get(key);
  if (!s) throw ParseError(1, "missing '" + key + "' header");
  const auto v = parse_uint(*s);
  if (!v) throw ParseError(1, "header " + key + ": '" + *s + "' is not a nonnegative integer");
  return *v;
}

std::optional<std::uint64_t> meta_seed(const Table& t) {
  if (!t.get("seed")) return std::nullopt;
  return meta_uint(t, "seed");
}

// Library errors raised while building objects from parsed values become
// parse errors at the given line.
template <class F>
auto at_line(std::size_t line, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(line, e.what());
  }
}

template <class T, class F>
T load_with(const std::filesystem::path& path, F parse) {
  std::istringstream in(read_file(path));
  try {
    return parse(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.detail());
  }
}

void check_single_line(std::string_view what, std::string_view text) {
  if (text.find_first_of("\r\n") != std::string_view::npos) {
    throw_domain(std::string(what) + " must be a single line");
  }
}

}  // namespace

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw ParseError(1, "missing column '" + std::string(name) + "'");
}

std::optional<std::string> Table::get(const std::string& key) const {
  const auto it = meta.find(key);
  if (it == meta.end()) return std::nullopt;
  return it->second;
}

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      const auto text = trim(body.substr(1));
      const auto eq = text.find('=');
      if (eq == std::string_view::npos) continue;  // free-form comment
      std::string key(trim(text.substr(0, eq)));
      if (key.empty()) throw ParseError(lineno, "empty header key");
      if (!t.meta.emplace(key, std::string(trim(text.substr(eq + 1)))).second) {
        throw ParseError(lineno, "duplicate header key '" + key + "'");
      }
      continue;
    }
    auto fields = split_csv(body);
    if (!have_header) {
      t.columns = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.columns.size()) {
      throw ParseError(lineno, "expected " + std::to_string(t.columns.size()) + " fields, got " +
                                   std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.row_lines.push_back(lineno);
  }
  if (!have_header) throw ParseError(lineno == 0 ? 1 : lineno, "no header row");
  return t;
}

void write_meta(std::ostream& out, std::string_view key, std::string_view value) {
  out << "# " << key << '=' << value << '\n';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "cannot read " + path.string());
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot write " + path.string());
  }
}

// Trace ----------------------------------------------------------------------

std::string format_trace(const TimeTrace& trace) {
  check_single_line("trace label", trace.label());
  std::ostringstream out;
  out << format_header(kTraceFormat);
  write_meta(out, "repetitions", std::to_string(trace.repetitions()));
  write_meta(out, "bin_width_ns", format_double(trace.bin_width_ns()));
  write_meta(out, "label", trace.label());
  if (trace.seed()) write_meta(out, "seed", std::to_string(*trace.seed()));
  out << "bin_index,counts\n";
  const auto counts = trace.counts();
  for (std::size_t i = 0; i < counts.size(); ++i) out << i << ',' << counts[i] << '\n';
  return out.str();
}

TimeTrace parse_trace(std::istream& in) {
  const Table t = read_table(in);
  check_format(t, kTraceFormat);
  expect_columns(t, {"bin_index", "counts"});
  const auto reps = meta_uint(t, "repetitions");
  const double bw = meta_double(t, "bin_width_ns", kDefaultBinWidthNs);
  std::vector<std::uint64_t> counts;
  counts.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (cell_uint(t, r, 0) != r) {
      throw ParseError(t.row_lines[r], "bin_index out of order, expected " + std::to_string(r));
    }
    counts.push_back(cell_uint(t, r, 1));
  }
  return at_line(1, [&] {
    return TimeTrace(std::move(counts), bw, reps, t.get("label").value_or(""), meta_seed(t));
  });
}

TimeTrace load_trace(const std::filesystem::path& path) {
  return load_with<TimeTrace>(path, [](std::istream& in) { return parse_trace(in); });
}

void save_trace(const std::filesystem::path& path, const TimeTrace& trace) {
  write_file(path, format_trace(trace));
}

// Rabi -----------------------------------------------------------------------

std::string format_rabi(const RabiDataset& dataset, std::optional<std::uint64_t> seed) {
  const auto& first = dataset.points().front().trace;
  std::ostringstream out;
  out << format_header(kRabiFormat);
  write_meta(out, "repetitions", std::to_string(first.repetitions()));
  write_meta(out, "bin_width_ns", format_double(first.bin_width_ns()));
  if (seed) write_meta(out, "seed", std::to_string(*seed));
  out << "duration_ns,bin_index,counts\n";
  for (const auto& pt : dataset.points()) {
    const auto d = format_double(pt.duration_ns);
    const auto counts = pt.trace.counts();
    for (std::size_t i = 0; i < counts.size(); ++i) out << d << ',' << i << ',' << counts[i] << '\n';
  }
  return out.str();
}

RabiDataset parse_rabi(std::istream& in) {
  const Table t = read_table(in);
  check_format(t, kRabiFormat);
  expect_columns(t, {"duration_ns", "bin_index", "counts"});
  const auto reps = meta_uint(t, "repetitions");
  const double bw = meta_double(t, "bin_width_ns", kDefaultBinWidthNs);
  if (t.rows.empty()) throw ParseError(1, "Rabi file has no rows");
  std::vector<RabiPoint> points;
  std::vector<std::uint64_t> counts;
  double duration = 0.0;
  std::size_t block_line = 0;
  auto flush = [&] {
    points.push_back({duration, at_line(block_line, [&] {
                        return TimeTrace(std::move(counts), bw, reps);
                      })});
    counts.clear();
  };
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double d = cell_double(t, r, 0);
    const auto bin = cell_uint(t, r, 1);
    if (r == 0 || d != duration) {
      if (r > 0) flush();
      duration = d;
      block_line = t.row_lines[r];
    }
    if (bin != counts.size()) {
      throw ParseError(t.row_lines[r],
                       "bin_index out of order, expected " + std::to_string(counts.size()));
    }
    counts.push_back(cell_uint(t, r, 2));
  }
  flush();
  return at_line(block_line, [&] { return RabiDataset(std::move(points)); });
}

RabiDataset load_rabi(const std::filesystem::path& path) {
  return load_with<RabiDataset>(path, [](std::istream& in) { return parse_rabi(in); });
}

void save_rabi(const std::filesystem::path& path, const RabiDataset& dataset,
               std::optional<std::uint64_t> seed) {
  write_file(path, format_rabi(dataset, seed));
}

// Truth ----------------------------------------------------------------------

std::string format_truth(std::span<const double> durations, std::span<const double> populations) {
  if (durations.size() != populations.size()) throw_shape("truth: length mismatch");
  std::ostringstream out;
  out << format_header(kTruthFormat) << "duration_ns,population\n";
  for (std::size_t i = 0; i < durations.size(); ++i) {
    out << format_double(durations[i]) << ',' << format_double(populations[i]) << '\n';
  }
  return out.str();
}

std::vector<RabiSample> parse_truth(std::istream& in) {
  const Table t = read_table(in);
  check_format(t, kTruthFormat);
  expect_columns(t, {"duration_ns", "population"});
  std::vector<RabiSample> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out.push_back({cell_double(t, r, 0), cell_double(t, r, 1)});
  }
  return out;
}

std::vector<RabiSample> load_truth(const std::filesystem::path& path) {
  return load_with<std::vector<RabiSample>>(path, [](std::istream& in) { return parse_truth(in); });
}

// Sweep ----------------------------------------------------------------------

std::string format_sweep(const SweepResult& sweep) {
  std::ostringstream out;
  out << format_header(kSweepFormat);
  write_meta(out, "bin_width_ns", format_double(sweep.bin_width_ns));
  const std::size_t start = sweep.rows.empty() ? 0 : sweep.rows.front().window.start_bin;
  write_meta(out, "start_bin", std::to_string(start));
  out << "width_bins,width_ns,L0,L1,contrast,total_variance,degenerate_flag\n";
  for (const auto& m : sweep.rows) {
    out << m.window.width_bins << ','
        << format_double(static_cast<double>(m.window.width_bins) * sweep.bin_width_ns) << ','
        << format_double(m.L0) << ',' << format_double(m.L1) << ',' << format_double(m.contrast)
        << ',' << format_double(m.total_variance) << ',' << (m.degenerate ? 1 : 0) << '\n';
  }
  auto optimum = [&](const char* key, const std::optional<GateWindow>& w) {
    if (!w) {
      write_meta(out, std::string(key) + "_width_bins", "none");
      return;
    }
    write_meta(out, std::string(key) + "_width_bins", std::to_string(w->width_bins));
    write_meta(out, std::string(key) + "_width_ns",
               format_double(static_cast<double>(w->width_bins) * sweep.bin_width_ns));
  };
  optimum("max_contrast", sweep.max_contrast);
  optimum("min_variance", sweep.min_variance);
  return out.str();
}

SweepResult parse_sweep(std::istream& in) {
  const Table t = read_table(in);
  check_format(t, kSweepFormat);
  expect_columns(t, {"width_bins", "width_ns", "L0", "L1", "contrast", "total_variance",
                     "degenerate_flag"});
  SweepResult s;
  s.bin_width_ns = meta_double(t, "bin_width_ns", kDefaultBinWidthNs);
  const std::size_t start = t.get("start_bin") ? meta_uint(t, "start_bin") : 0;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    GateMetrics m;
    m.window = {start, cell_uint(t, r, 0)};
    m.L0 = cell_double(t, r, 2);
    m.L1 = cell_double(t, r, 3);
    m.contrast = cell_double(t, r, 4);
    m.total_variance = cell_double(t, r, 5);
    const auto flag = cell_uint(t, r, 6);
    if (flag > 1) throw ParseError(t.row_lines[r], "degenerate_flag must be 0 or 1");
    m.degenerate = flag == 1;
    s.rows.push_back(m);
  }
  auto optimum = [&](const std::string& key) -> std::optional<GateWindow> {
    const auto v = t.get(key + "_width_bins");
    if (!v || *v == "none") return std::nullopt;
    return GateWindow{start, meta_uint(t, key + "_width_bins")};
  };
  s.max_contrast = optimum("max_contrast");
  s.min_variance = optimum("min_variance");
  return s;
}

// Model ----------------------------------------------------------------------

std::string format_model(const ReadoutModel& model) {
  std::ostringstream out;
  out << kModelFormat << ' ' << kFormatVersion << '\n';
  out << "bins " << model.size() << '\n';
  out << "bin_width_ns " << format_double(model.bin_width_ns()) << '\n';
  out << "normalization " << format_double(model.normalization()) << '\n';
  out << "intercept " << format_double(model.intercept()) << '\n';
  out << "trained_on";
  if (!model.trained_on().empty()) out << ' ' << model.trained_on();
  out << '\n';
  const auto& l = model.training_loss();
  out << "loss_prediction " << format_double(l.prediction_term) << '\n';
  out << "loss_variance " << format_double(l.variance_term) << '\n';
  out << "loss_total " << format_double(l.total) << '\n';
  out << "weights\n";
  for (double w : model.weights()) out << format_double(w) << '\n';
  out << "end\n";
  return out.str();
}

ReadoutModel parse_model(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](const char* what) -> std::string {
    if (!std::getline(in, line)) throw ParseError(lineno + 1, std::string("missing ") + what);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  auto field = [&](const std::string& key) -> std::string {
    const auto l = next(key.c_str());
    if (l == key) return {};
    if (l.size() <= key.size() || l.compare(0, key.size() + 1, key + " ") != 0) {
      throw ParseError(lineno, "expected '" + key + "'");
    }
    return l.substr(key.size() + 1);
  };
  auto number = [&](const std::string& key) {
    const auto text = field(key);
    const auto v = parse_double(text);
    if (!v) throw ParseError(lineno, key + ": '" + text + "' is not a number");
    return *v;
  };

  {
    std::istringstream head(next("format line"));
    std::string name;
    int version = 0;
    head >> name >> version;
    if (name != kModelFormat) throw ParseError(1, "not a spinread model file");
    if (version < 1 || version > kFormatVersion) {
      throw ParseError(1, "unsupported model version " + std::to_string(version));
    }
  }
  const auto bins_text = field("bins");
  const auto bins = parse_uint(bins_text);
  if (!bins || *bins == 0) throw ParseError(lineno, "bins must be a positive integer");
  const double bw = number("bin_width_ns");
  const double norm = number("normalization");
  const double intercept = number("intercept");
  std::string trained_on = field("trained_on");
  LossBreakdown loss;
  loss.prediction_term = number("loss_prediction");
  loss.variance_term = number("loss_variance");
  loss.total = number("loss_total");
  if (next("weights") != "weights") throw ParseError(lineno, "expected 'weights'");
  std::vector<double> weights;
  weights.reserve(*bins);
  for (std::uint64_t i = 0; i < *bins; ++i) {
    const auto text = next("weight");
    const auto v = parse_double(text);
    if (!v) throw ParseError(lineno, "weight '" + text + "' is not a number");
    if (!(*v >= 0.0) || !std::isfinite(*v)) {
      throw ParseError(lineno, "weight '" + text + "' must be finite and nonnegative");
    }
    weights.push_back(*v);
  }
  if (next("end") != "end") throw ParseError(lineno, "expected 'end' after " +
                                                          std::to_string(*bins) + " weights");
  return at_line(lineno, [&] {
    return ReadoutModel(std::move(weights), intercept, bw, norm, std::move(trained_on), loss);
  });
}

ReadoutModel load_model(const std::filesystem::path& path) {
  return load_with<ReadoutModel>(path, [](std::istream& in) { return parse_model(in); });
}

void save_model(const std::filesystem::path& path, const ReadoutModel& model) {
  write_file(path, format_model(model));
}

// Fit report -----------------------------------------------------------------

std::string format_fit_report(std::span<const RabiSample> samples, const SinusoidFit& fit) {
  std::ostringstream out;
  out << format_header(kFitFormat);
  write_meta(out, "offset", format_double(fit.offset));
  write_meta(out, "amplitude", format_double(fit.amplitude));
  write_meta(out, "frequency", format_double(fit.frequency));
  write_meta(out, "phase", format_double(fit.phase));
  write_meta(out, "residual_rms", format_double(fit.residual_rms));
  out << "duration_ns,p_raw,p_fit,residual\n";
  for (const auto& s : samples) {
    const double f = fit(s.duration_ns);
    out << format_double(s.duration_ns) << ',' << format_double(s.p) << ',' << format_double(f)
        << ',' << format_double(s.p - f) << '\n';
  }
  return out.str();
}

std::pair<std::vector<RabiSample>, SinusoidFit> parse_fit_report(std::istream& in) {
  const Table t = read_table(in);
  check_format(t, kFitFormat);
  expect_columns(t, {"duration_ns", "p_raw", "p_fit", "residual"});
  SinusoidFit fit;
  fit.offset = meta_double(t, "offset");
  fit.amplitude = meta_double(t, "amplitude");
  fit.frequency = meta_double(t, "frequency");
  fit.phase = meta_double(t, "phase");
  fit.residual_rms = meta_double(t, "residual_rms");
  std::vector<RabiSample> samples;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    samples.push_back({cell_double(t, r, 0), cell_double(t, r, 1)});
  }
  return {std::move(samples), fit};
}

// Repair ---------------------------------------------------------------------

std::string format_repair(std::span<const RepairRow> rows) {
  std::ostringstream out;
  out << format_header(kRepairFormat) << "duration_ns,p_original,p_repaired,q_fit\n";
  for (const auto& r : rows) {
    out << format_double(r.duration_ns) << ',' << format_double(r.p_original) << ','
        << format_double(r.p_repaired) << ',' << format_double(r.q_fit) << '\n';
  }
  return out.str();
}

std::vector<RepairRow> parse_repair(std::istream& in) {
  const Table t = read_table(in);
  check_format(t, kRepairFormat);
  expect_columns(t, {"duration_ns", "p_original", "p_repaired", "q_fit"});
  std::vector<RepairRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    rows.push_back({cell_double(t, r, 0), cell_double(t, r, 1), cell_double(t, r, 2),
                    cell_double(t, r, 3)});
  }
  return rows;
}

// Report ---------------------------------------------------------------------

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << format_header(kReportFormat);
  write_meta(out, "test_points", std::to_string(report.durations.size()));
  out << "method,avg_formula_variance,empirical_mse,mse_reference,contrast,swing\n";
  for (const auto& m : report.methods) {
    check_single_line("method name", m.name);
    if (m.name.find(',') != std::string::npos) throw_domain("method names cannot contain ','");
    out << m.name << ',' << format_double(m.avg_formula_variance) << ','
        << format_double(m.empirical_mse) << ',' << (m.mse_against_truth ? "truth" : "fit") << ','
        << format_double(m.contrast) << ',' << format_double(m.swing) << '\n';
  }
  for (const auto& r : report.reductions) {
    write_meta(out, "reduction " + r.method + " vs " + r.baseline, format_double(r.value));
  }
  return out.str();
}

std::vector<MethodRecord> parse_report(std::istream& in) {
  const Table t = read_table(in);
  check_format(t, kReportFormat);
  expect_columns(t, {"method", "avg_formula_variance", "empirical_mse", "mse_reference",
                     "contrast", "swing"});
  std::vector<MethodRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    MethodRecord m;
    m.name = t.rows[r][0];
    m.avg_formula_variance = cell_double(t, r, 1);
    m.empirical_mse = cell_double(t, r, 2);
    const auto& ref = t.rows[r][3];
    if (ref != "truth" && ref != "fit") {
      throw ParseError(t.row_lines[r], "mse_reference must be 'truth' or 'fit'");
    }
    m.mse_against_truth = ref == "truth";
    m.contrast = cell_double(t, r, 4);
    m.swing = cell_double(t, r, 5);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace spinread::io
