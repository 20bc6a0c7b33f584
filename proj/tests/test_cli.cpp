#include <doctest.h>

#include <unistd.h>

#include "cli_pipeline.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  auto dir = fs::temp_directory_path() /
             ("spinread_cli_" + std::string(tag) + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("pipeline reruns are byte-identical") {
  const auto root = temp_dir("det");
  const cli::Scale small{"1e6", "1e5", "2e4", "3000", "1"};
  REQUIRE(cli::pipeline(root / "a", "5", small) == "");
  REQUIRE(cli::pipeline(root / "b", "5", small) == "");
  CHECK(cli::differing_outputs(root / "a", root / "b").empty());
  // A different seed changes the simulated data.
  REQUIRE(cli::run("--seed 6 simulate --kind boundary --reps 1e6 --out-dir '" +
                       (root / "c").string() + "'",
                   root / "c.log") == 0);
  CHECK(cli::slurp(root / "a" / "bright.csv") != cli::slurp(root / "c" / "bright.csv"));
  // Thread count does not change Rabi output.
  const auto t1 = root / "t1", t4 = root / "t4";
  REQUIRE(cli::run("--threads 1 simulate --kind rabi --reps 1e4 --out-dir '" + t1.string() + "'",
                   root / "t1.log") == 0);
  REQUIRE(cli::run("--threads 4 simulate --kind rabi --reps 1e4 --out-dir '" + t4.string() + "'",
                   root / "t4.log") == 0);
  CHECK(cli::slurp(t1 / "rabi.csv") == cli::slurp(t4 / "rabi.csv"));

  const auto report = cli::slurp(root / "a" / "report.csv");
  CHECK(report.find("max-C gate") != std::string::npos);
  CHECK(report.find("min-V gate") != std::string::npos);
  CHECK(cli::slurp(root / "a" / "predict.csv").rfind("trace,p,sigma2\n", 0) == 0);
  fs::remove_all(root);
}

TEST_CASE("exit codes") {
  const auto dir = temp_dir("exit");
  const auto log = dir / "out.log";
  CHECK(cli::run("--version", log) == 0);
  CHECK(cli::slurp(log).find("spinread") != std::string::npos);
  CHECK(cli::run("", log) == 1);
  CHECK(cli::run("frobnicate", log) == 1);
  CHECK(cli::run("sweep --bright /nonexistent --dark /nonexistent --out x", log) == 1);
  CHECK(cli::run("simulate --kind sideways --out-dir '" + dir.string() + "'", log) == 1);
  CHECK(cli::run("simulate --reps lots --out-dir '" + dir.string() + "'", log) == 1);

  const auto good = dir / "good.csv", bad = dir / "bad.csv";
  write(good, "# format=spinread-trace 1\n# repetitions=10\nbin_index,counts\n0,5\n1,2\n");
  write(bad, "# format=spinread-trace 1\n# repetitions=10\nbin_index,counts\n0,5\n1,oops\n");
  CHECK(cli::run("sweep --bright '" + bad.string() + "' --dark '" + good.string() + "' --out '" +
                     (dir / "s.csv").string() + "'",
                 log) == 2);
  CHECK(cli::slurp(log).find("line 5") != std::string::npos);
  // Output that would overwrite an input.
  CHECK(cli::run("sweep --bright '" + good.string() + "' --dark '" + good.string() + "' --out '" +
                     good.string() + "'",
                 log) == 1);
  // Degenerate boundaries are a data error.
  CHECK(cli::run("train --mode boundary --bright '" + good.string() + "' --dark '" +
                     good.string() + "' --out '" + (dir / "m.txt").string() + "'",
                 log) == 2);
  write(dir / "c.ini", "[run]\nseed = 1\nnope = 2\n");
  CHECK(cli::run("--config '" + (dir / "c.ini").string() + "' simulate --out-dir '" +
                     dir.string() + "'",
                 log) == 2);
  CHECK(cli::slurp(log).find("line 3") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("swapped boundaries warn") {
  const auto dir = temp_dir("swap");
  REQUIRE(cli::run("simulate --kind boundary --reps 1e5 --out-dir '" + dir.string() + "'",
                   dir / "sim.log") == 0);
  const auto log = dir / "train.log";
  CHECK(cli::run("train --mode boundary --bright '" + (dir / "dark.csv").string() + "' --dark '" +
                     (dir / "bright.csv").string() + "' --max-iterations 100 --out '" +
                     (dir / "m.txt").string() + "'",
                 log) == 0);
  CHECK(cli::slurp(log).find("warning: negative boundary contrast") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("calibrate writes a loadable config") {
  const auto dir = temp_dir("cal");
  const auto cfg = dir / "run.ini";
  REQUIRE(cli::run("calibrate --mean-photons 0.02 --contrast 0.3 --out '" + cfg.string() + "'",
                   dir / "cal.log") == 0);
  CHECK(cli::run("--config '" + cfg.string() + "' simulate --reps 1e4 --out-dir '" +
                     dir.string() + "'",
                 dir / "sim.log") == 0);
  CHECK(fs::exists(dir / "bright.csv"));
  fs::remove_all(dir);
}
