#include "spinread/config.hpp"

#include <cmath>
#include <algorithm>
#include <functional>
#include <istream>
#include <sstream>

#include "spinread/error.hpp"
#include "spinread/format.hpp"
#include "spinread/io.hpp"

namespace spinread {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&, std::size_t)>;

double as_double(const std::string& key, const std::string& v, std::size_t line) {
  const auto d = parse_double(v);
  if (!d) throw ParseError(line, key + ": '" + v + "' is not a number");
  return *d;
}

std::uint64_t as_uint(const std::string& key, const std::string& v, std::size_t line) {
  // Accept 1e7-style integers as long as they are exact.
  if (const auto u = parse_uint(v)) return *u;
  const auto d = parse_double(v);
  if (d && *d >= 0.0 && *d < 1.8e19 && *d == static_cast<double>(static_cast<std::uint64_t>(*d))) {
    return static_cast<std::uint64_t>(*d);
  }
  throw ParseError(line, key + ": '" + v + "' is not a nonnegative integer");
}

bool as_bool(const std::string& key, const std::string& v, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError(line, key + ": '" + v + "' is not a boolean");
}

#define SR_DOUBLE(key, field) \
  {key, [](RunConfig& c, const std::string& v, std::size_t l) { c.field = as_double(key, v, l); }}
#define SR_UINT(key, field)                                                \
  {key, [](RunConfig& c, const std::string& v, std::size_t l) {           \
     c.field = static_cast<decltype(c.field)>(as_uint(key, v, l));         \
   }}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      SR_DOUBLE("simulator.steady_rate", simulator.steady_rate),
      SR_DOUBLE("simulator.bright_boost", simulator.bright_boost),
      SR_DOUBLE("simulator.dark_dip", simulator.dark_dip),
      SR_DOUBLE("simulator.tau_bright_ns", simulator.tau_bright_ns),
      SR_DOUBLE("simulator.tau_isc_ns", simulator.tau_isc_ns),
      SR_DOUBLE("simulator.prompt_excess", simulator.prompt_excess),
      SR_DOUBLE("simulator.tau_prompt_ns", simulator.tau_prompt_ns),
      SR_DOUBLE("simulator.trace_length_ns", simulator.trace_length_ns),
      SR_DOUBLE("simulator.bin_width_ns", simulator.bin_width_ns),
      SR_UINT("simulate.boundary_repetitions", boundary_repetitions),
      SR_UINT("simulate.rabi_repetitions", rabi_repetitions),
      SR_UINT("simulate.test_repetitions", test_repetitions),
      SR_UINT("simulate.rabi_points", rabi.count),
      SR_DOUBLE("simulate.rabi_step_ns", rabi.step_ns),
      SR_DOUBLE("simulate.rabi_period_ns", rabi.period_ns),
      SR_DOUBLE("train.weight_factor", train.weight_factor),
      SR_DOUBLE("train.learning_rate", train.learning_rate),
      SR_UINT("train.max_iterations", train.max_iterations),
      SR_DOUBLE("train.relative_tolerance", train.relative_tolerance),
      SR_UINT("train.window", train.window),
      {"train.init",
       [](RunConfig& c, const std::string& v, std::size_t l) {
         if (v == "gated-equal-weights") {
           c.train.init = InitKind::GatedEqualWeights;
         } else if (v == "zeros") {
           c.train.init = InitKind::Zeros;
         } else {
           throw ParseError(l, "train.init: expected gated-equal-weights or zeros");
         }
       }},
      {"train.accelerate",
       [](RunConfig& c, const std::string& v, std::size_t l) {
         c.train.accelerate = as_bool("train.accelerate", v, l);
       }},
      SR_UINT("sweep.start_bin", start_bin),
      SR_DOUBLE("fit.min_amplitude_ratio", fit.min_amplitude_ratio),
      SR_UINT("run.seed", seed),
      SR_UINT("run.threads", threads),
  };
  return table;
}

#undef SR_DOUBLE
#undef SR_UINT

}  // namespace

ConfigFile parse_config(std::istream& in) {
  ConfigFile cfg;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = trim(line);
    if (const auto hash = body.find_first_of("#;"); hash != std::string_view::npos) {
      body = trim(body.substr(0, hash));
    }
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ParseError(lineno, "unterminated section header");
      section = std::string(trim(body.substr(1, body.size() - 2)));
      if (section.empty()) throw ParseError(lineno, "empty section name");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected key = value");
    const std::string key(trim(body.substr(0, eq)));
    if (key.empty()) throw ParseError(lineno, "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.values.contains(full)) {
      throw ParseError(lineno, "duplicate key '" + full + "' (first on line " +
                                   std::to_string(cfg.lines[full]) + ")");
    }
    cfg.values[full] = std::string(trim(body.substr(eq + 1)));
    cfg.lines[full] = lineno;
  }
  return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  try {
    return parse_config(in);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.detail());
  }
}

RunConfig apply_config(const ConfigFile& file, RunConfig base) {
  // The preset replaces the whole simulator block before individual keys.
  if (const auto it = file.values.find("simulator.preset"); it != file.values.end()) {
    if (it->second == "paper-like") {
      base.simulator = paper_like_params();
    } else if (it->second == "default") {
      base.simulator = PhotodynamicsParams{};
    } else {
      throw ParseError(file.lines.at(it->first), "simulator.preset: expected paper-like or default");
    }
  }
  for (const auto& [key, value] : file.values) {
    if (key == "simulator.preset") continue;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ParseError(file.lines.at(key), "unknown key '" + key + "'");
    it->second(base, value, file.lines.at(key));
  }
  auto check = [&](const char* prefix, auto&& validate) {
    try {
      validate();
    } catch (const Error& e) {
      std::size_t line = 1;
      for (const auto& [key, l] : file.lines) {
        if (key.starts_with(prefix)) line = std::max(line, l);
      }
      throw ParseError(line, e.what());
    }
  };
  check("simulator.", [&] { base.simulator.validate(); });
  check("train.", [&] { base.train.validate(); });
  check("simulate.", [&] {
    if (base.boundary_repetitions == 0 || base.rabi_repetitions == 0 ||
        base.test_repetitions == 0) {
      throw_domain("repetitions must be positive");
    }
    if (base.rabi.count == 0 || !(base.rabi.step_ns > 0.0) || !(base.rabi.period_ns > 0.0)) {
      throw_domain("Rabi schedule needs positive rabi_points, rabi_step_ns and rabi_period_ns");
    }
  });
  check("fit.", [&] {
    if (!(base.fit.min_amplitude_ratio >= 0.0) || !std::isfinite(base.fit.min_amplitude_ratio)) {
      throw_domain("fit.min_amplitude_ratio must be finite and >= 0");
    }
  });
  check("run.", [&] {
    if (base.threads == 0) throw_domain("run.threads must be at least 1");
  });
  return base;
}

std::string format_config(const RunConfig& c) {
  std::ostringstream out;
  auto kv = [&](const char* k, const std::string& v) { out << k << " = " << v << '\n'; };
  auto d = [](double v) { return format_double(v); };
  auto u = [](std::uint64_t v) { return std::to_string(v); };
  out << "[simulator]\n";
  kv("steady_rate", d(c.simulator.steady_rate));
  kv("bright_boost", d(c.simulator.bright_boost));
  kv("dark_dip", d(c.simulator.dark_dip));
  kv("tau_bright_ns", d(c.simulator.tau_bright_ns));
  kv("tau_isc_ns", d(c.simulator.tau_isc_ns));
  kv("prompt_excess", d(c.simulator.prompt_excess));
  kv("tau_prompt_ns", d(c.simulator.tau_prompt_ns));
  kv("trace_length_ns", d(c.simulator.trace_length_ns));
  kv("bin_width_ns", d(c.simulator.bin_width_ns));
  out << "\n[simulate]\n";
  kv("boundary_repetitions", u(c.boundary_repetitions));
  kv("rabi_repetitions", u(c.rabi_repetitions));
  kv("test_repetitions", u(c.test_repetitions));
  kv("rabi_points", u(c.rabi.count));
  kv("rabi_step_ns", d(c.rabi.step_ns));
  kv("rabi_period_ns", d(c.rabi.period_ns));
  out << "\n[train]\n";
  kv("weight_factor", d(c.train.weight_factor));
  kv("learning_rate", d(c.train.learning_rate));
  kv("max_iterations", u(c.train.max_iterations));
  kv("relative_tolerance", d(c.train.relative_tolerance));
  kv("window", u(c.train.window));
  kv("init", to_string(c.train.init));
  kv("accelerate", c.train.accelerate ? "true" : "false");
  out << "\n[sweep]\n";
  kv("start_bin", u(c.start_bin));
  out << "\n[fit]\n";
  kv("min_amplitude_ratio", d(c.fit.min_amplitude_ratio));
  out << "\n[run]\n";
  kv("seed", u(c.seed));
  kv("threads", u(c.threads));
  return out.str();
}

}  // namespace spinread
