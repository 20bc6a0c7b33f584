#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include <unistd.h>

#include "spinread/error.hpp"
#include "spinread/evaluation.hpp"
#include "spinread/io.hpp"

using namespace spinread;
namespace fs = std::filesystem;

namespace {

template <class F>
std::size_t parse_error_line(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.line();
  }
  FAIL("expected a parse error");
  return 0;
}

template <class Parse>
auto parse_text(Parse parse, const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / ("spinread_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("read_table") {
  const auto t = parse_text(io::read_table,
                            "# a=1\n\n# b = two words\nx,y\n1,2\n# c=3\n3,4\n");
  CHECK(t.meta.at("a") == "1");
  CHECK(t.get("b") == "two words");
  CHECK(t.get("c") == "3");
  CHECK_FALSE(t.get("d"));
  CHECK(t.columns == std::vector<std::string>{"x", "y"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.row_lines == std::vector<std::size_t>{5, 7});
  CHECK(t.column("y") == 1);
  CHECK(parse_error_line([] { parse_text(io::read_table, "x,y\n1,2\n3\n"); }) == 3);
  CHECK(parse_error_line([] { parse_text(io::read_table, "# a=1\n# a=2\nx\n"); }) == 2);
}

TEST_CASE("trace round trip") {
  const TimeTrace t({0, 5, 18446744073709551615ull, 7}, 2.0, 1000, "bright", 42);
  const auto text = io::format_trace(t);
  CHECK(text.rfind("# format=spinread-trace 1\n", 0) == 0);
  const auto back = parse_text(io::parse_trace, text);
  CHECK(back == t);
  CHECK(back.label() == "bright");
  CHECK(back.seed() == std::optional<std::uint64_t>(42));
  CHECK(io::format_trace(back) == text);
}

TEST_CASE("trace parse errors name the line") {
  const std::string head = "# format=spinread-trace 1\n# repetitions=10\nbin_index,counts\n";
  CHECK(parse_error_line([&] { parse_text(io::parse_trace, head + "0,1\n1,x\n"); }) == 5);
  CHECK(parse_error_line([&] { parse_text(io::parse_trace, head + "0,1\n2,1\n"); }) == 5);
  CHECK(parse_error_line([&] { parse_text(io::parse_trace, head + "0,-1\n"); }) == 4);
  CHECK_THROWS_AS(parse_text(io::parse_trace, "# format=spinread-trace 1\nbin_index,counts\n0,1\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_text(io::parse_trace,
                             "# format=spinread-trace 1\n# repetitions=1.5\nbin_index,counts\n0,1\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_text(io::parse_trace, "# format=spinread-model 1\n# repetitions=1\n"
                                              "bin_index,counts\n0,1\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_text(io::parse_trace, "# format=spinread-trace 2\n# repetitions=1\n"
                                              "bin_index,counts\n0,1\n"),
                  ParseError);
}

TEST_CASE("Rabi round trip") {
  RabiDataset data({{0.0, TimeTrace({1, 2, 3}, 2.0, 10)},
                    {12.5, TimeTrace({4, 5, 6}, 2.0, 10)},
                    {25.0, TimeTrace({7, 8, 9}, 2.0, 10)}});
  const auto text = io::format_rabi(data, 9);
  const auto back = parse_text(io::parse_rabi, text);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.points()[i].duration_ns == data.points()[i].duration_ns);
    CHECK(back.points()[i].trace == data.points()[i].trace);
  }
  CHECK(io::format_rabi(back, 9) == text);
  // A duration block whose bins restart out of order.
  const std::string bad =
      "# format=spinread-rabi 1\n# repetitions=10\nduration_ns,bin_index,counts\n"
      "0,0,1\n0,1,1\n5,1,1\n5,0,1\n";
  CHECK(parse_error_line([&] { parse_text(io::parse_rabi, bad); }) == 6);
}

TEST_CASE("truth round trip") {
  const std::vector<double> d{0.0, 10.0, 20.0}, p{1.0, 0.9045084971874737, 0.6545084971874737};
  const auto back = parse_text(io::parse_truth, io::format_truth(d, p));
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].duration_ns == d[i]);
    CHECK(back[i].p == p[i]);
  }
}

TEST_CASE("sweep round trip") {
  std::vector<double> b{5, 4, 3, 2, 2, 2}, d{2, 2.5, 2.6, 2, 2, 2};
  const auto s = sweep_gate(b, d);
  const auto back = parse_text(io::parse_sweep, io::format_sweep(s));
  REQUIRE(back.rows.size() == s.rows.size());
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    CHECK(back.rows[i].window == s.rows[i].window);
    CHECK(back.rows[i].L0 == s.rows[i].L0);
    CHECK(back.rows[i].L1 == s.rows[i].L1);
    CHECK(back.rows[i].degenerate == s.rows[i].degenerate);
    if (!s.rows[i].degenerate) {
      CHECK(back.rows[i].contrast == s.rows[i].contrast);
      CHECK(back.rows[i].total_variance == s.rows[i].total_variance);
    }
  }
  CHECK(back.max_contrast == s.max_contrast);
  CHECK(back.min_variance == s.min_variance);
  CHECK(back.bin_width_ns == s.bin_width_ns);
}

TEST_CASE("model round trip is byte-identical") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(300);
  for (auto& v : w) v = u(rng) * std::pow(10.0, 20.0 * u(rng) - 10.0);
  w[3] = 0.0;
  const ReadoutModel m(w, -0.123456789012345678, 2.0, 1.0 / 3.0, "boundary",
                       LossBreakdown{1e-7, 2.5e-3, 0.0035});
  const auto dir = temp_dir();
  io::save_model(dir / "m.txt", m);
  const auto first = io::read_file(dir / "m.txt");
  const auto back = io::load_model(dir / "m.txt");
  CHECK(back == m);
  io::save_model(dir / "m2.txt", back);
  CHECK(io::read_file(dir / "m2.txt") == first);
  fs::remove_all(dir);
}

TEST_CASE("model parse errors") {
  const ReadoutModel m({1.0, 2.0}, 0.5, 2.0);
  const auto text = io::format_model(m);
  auto replace = [&](const std::string& from, const std::string& to) {
    auto s = text;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  CHECK(parse_error_line([&] { parse_text(io::parse_model, replace("spinread-model 1", "spinread-model 7")); }) == 1);
  CHECK(parse_error_line([&] { parse_text(io::parse_model, replace("bins 2", "bins 3")); }) > 0);
  CHECK(parse_error_line([&] { parse_text(io::parse_model, replace("weights\n1", "weights\n-1")); }) == 11);
  CHECK(parse_error_line([&] { parse_text(io::parse_model, replace("intercept 0.5", "intercept abc")); }) == 5);
  CHECK(parse_error_line([&] { parse_text(io::parse_model, text.substr(0, text.size() - 4)); }) > 0);
}

TEST_CASE("fit report round trip") {
  const SinusoidFit fit{0.5, 0.4, 0.005, 1.25, 0.01};
  const std::vector<RabiSample> s{{0.0, 0.7}, {10.0, 0.6}, {20.0, 0.55}};
  const auto text = io::format_fit_report(s, fit);
  CHECK(text.find("duration_ns,p_raw,p_fit,residual") != std::string::npos);
  const auto [samples, back] = parse_text(io::parse_fit_report, text);
  REQUIRE(samples.size() == 3);
  CHECK(samples[1].p == 0.6);
  CHECK(back.offset == fit.offset);
  CHECK(back.amplitude == fit.amplitude);
  CHECK(back.frequency == fit.frequency);
  CHECK(back.phase == fit.phase);
  CHECK(back.residual_rms == fit.residual_rms);
}

TEST_CASE("repair round trip keeps NaN") {
  const std::vector<RepairRow> rows{{0.0, 1.01, 0.99, 1.0}, {10.0, 0.5, 0.52, NAN}};
  const auto back = parse_text(io::parse_repair, io::format_repair(rows));
  REQUIRE(back.size() == 2);
  CHECK(back[0].p_original == 1.01);
  CHECK(back[0].p_repaired == 0.99);
  CHECK(std::isnan(back[1].q_fit));
}

TEST_CASE("report round trip") {
  EvalReport report;
  report.durations = {0.0, 10.0};
  for (const char* name : {kMaxContrastGate, kMinVarianceGate, kWeighted}) {
    MethodRecord m;
    m.name = name;
    m.avg_formula_variance = 0.01 * static_cast<double>(report.methods.size() + 1);
    m.empirical_mse = 0.02;
    m.mse_against_truth = true;
    m.contrast = 0.3;
    m.swing = 1.0;
    report.methods.push_back(m);
  }
  report.reductions.push_back({kWeighted, kMaxContrastGate, 1.0 - 0.03 / 0.01});
  const auto text = io::format_report(report);
  CHECK(text.find("# reduction ML vs max-C gate=") != std::string::npos);
  const auto back = parse_text(io::parse_report, text);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].name == report.methods[i].name);
    CHECK(back[i].avg_formula_variance == report.methods[i].avg_formula_variance);
    CHECK(back[i].empirical_mse == report.methods[i].empirical_mse);
    CHECK(back[i].mse_against_truth);
    CHECK(back[i].contrast == 0.3);
    CHECK(back[i].swing == 1.0);
  }
}

TEST_CASE("loaders report the path") {
  const auto dir = temp_dir();
  const auto bad = dir / "bad.csv";
  io::write_file(bad, "# format=spinread-trace 1\n# repetitions=1\nbin_index,counts\n0,z\n");
  try {
    io::load_trace(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("bad.csv") != std::string::npos);
  }
  CHECK_THROWS_AS(io::load_trace(dir / "missing.csv"), Error);
  fs::remove_all(dir);
}
