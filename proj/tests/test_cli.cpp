#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(TARPIT_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, n);
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() /
                       ("tarpit_cli_" + std::to_string(::getpid())) / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kMotivating =
    (fs::path(TARPIT_TEST_DIR) / ".." / "scenarios" / "motivating.json")
        .lexically_normal()
        .string();

}  // namespace

TEST_CASE("identical run invocations produce byte-identical artifacts") {
  const fs::path a = fresh_dir("run_a");
  const fs::path b = fresh_dir("run_b");
  const std::string common = "run --scenario " + kMotivating +
                             " --mode hybrid --advisor oracle --seed 11 --budget 400"
                             " --out-dir ";
  const CliResult ra = run_cli(common + a.string());
  const CliResult rb = run_cli(common + b.string());
  CHECK(ra.exit_code == 0);
  CHECK(rb.exit_code == 0);
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "memory.json") == slurp(b / "memory.json"));
  for (const char* f : {"report.json", "trace.csv", "summary.csv", "curves.svg",
                        "memory.json"})
    CHECK(fs::exists(a / f));
  CHECK(ra.output.find("scenario            motivating") != std::string::npos);
}

TEST_CASE("a different seed changes the report") {
  const fs::path a = fresh_dir("seed_a");
  const fs::path b = fresh_dir("seed_b");
  const std::string common = "run --scenario " + kMotivating +
                             " --mode no_llm --budget 300 --out-dir ";
  CHECK(run_cli(common + a.string() + " --seed 1").exit_code == 0);
  CHECK(run_cli(common + b.string() + " --seed 2").exit_code == 0);
  CHECK(slurp(a / "report.json") != slurp(b / "report.json"));
}

TEST_CASE("missing scenario file exits 2 and names the path") {
  const CliResult r = run_cli("run --scenario /definitely/not/here.json --mode no_llm");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("/definitely/not/here.json") != std::string::npos);
}

TEST_CASE("http advisor without an endpoint exits 3") {
  const CliResult r =
      run_cli("run --scenario " + kMotivating + " --advisor http --budget 100");
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("--llm-endpoint") != std::string::npos);
}

TEST_CASE("replay advisor without a cassette exits 3") {
  const CliResult r =
      run_cli("run --scenario " + kMotivating + " --advisor replay --budget 100");
  CHECK(r.exit_code == 3);
}

TEST_CASE("unknown flags and bad values exit 1") {
  CHECK(run_cli("run --scenario x.json --bogus").exit_code == 1);
  CHECK(run_cli("run").exit_code == 1);
  CHECK(run_cli("frobnicate").exit_code == 1);
  CHECK(run_cli("run --scenario x.json --mode quantum").exit_code == 1);
  CHECK(run_cli("").exit_code == 1);
}

TEST_CASE("help exits 0") {
  CHECK(run_cli("--help").exit_code == 0);
  const CliResult r = run_cli("run --help");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("--scenario") != std::string::npos);
}

TEST_CASE("no_llm mode runs without advisor flags and reports zero queries") {
  const fs::path dir = fresh_dir("no_llm");
  const CliResult r = run_cli("run --scenario " + kMotivating +
                              " --mode no_llm --seed 5 --budget 300 --out-dir " +
                              dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("advisor queries     0") != std::string::npos);
}

TEST_CASE("reproduce-sec22 prints the analytic values and passes") {
  const CliResult r = run_cli("reproduce-sec22 --trials 3000 --crash-trials 150000");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("70 events") != std::string::npos);
  CHECK(r.output.find("80 events") != std::string::npos);
  CHECK(r.output.find("0.7930") != std::string::npos);
  CHECK(r.output.find("1.786e-04") != std::string::npos);
  CHECK(r.output.find("PASS") != std::string::npos);
  CHECK(r.output.find("FAIL") == std::string::npos);
}

TEST_CASE("generate is deterministic and validates its parameters") {
  const fs::path dir = fresh_dir("gen");
  const std::string f1 = (dir / "a.json").string();
  const std::string f2 = (dir / "b.json").string();
  CHECK(run_cli("generate --screens 20 --tarpit-factor 0.9 --seed 1 --out " + f1)
            .exit_code == 0);
  CHECK(run_cli("generate --screens 20 --tarpit-factor 0.9 --seed 1 --out " + f2)
            .exit_code == 0);
  CHECK(slurp(f1) == slurp(f2));

  CHECK(run_cli("generate --screens 1 --out " + (dir / "c.json").string()).exit_code ==
        1);
  CHECK(run_cli("generate --screens 10 --tarpit-factor 1.5 --out " +
                (dir / "d.json").string())
            .exit_code == 1);
}

TEST_CASE("generated file is loadable and zero tarpit factor flags nothing") {
  const fs::path dir = fresh_dir("gen_zero");
  const std::string file = (dir / "flat.json").string();
  CHECK(run_cli("generate --screens 8 --tarpit-factor 0 --seed 4 --out " + file)
            .exit_code == 0);
  const std::string text = slurp(file);
  CHECK(text.find("\"tarpit_ground_truth\": true") == std::string::npos);

  // Round-trip through `run` proves the loader accepts it.
  const fs::path out = fresh_dir("gen_zero_run");
  CHECK(run_cli("run --scenario " + file + " --mode no_llm --budget 100 --out-dir " +
                out.string())
            .exit_code == 0);
}

TEST_CASE("compare writes per-cell reports, summary, aggregates and curves") {
  const fs::path dir = fresh_dir("cmp");
  const CliResult r = run_cli(
      "compare --apps 1 --screens 6 --tarpit-factor 0.7 --suite-seed 30"
      " --mode hybrid --mode no_llm --seed 1 --seed 2 --budget 300 --jobs 2"
      " --out-dir " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "summary.csv"));
  CHECK(fs::exists(dir / "aggregates.csv"));

  int reports = 0, curves = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.path().filename() == "report.json") ++reports;
    if (entry.path().extension() == ".svg") ++curves;
  }
  CHECK(reports == 4);
  CHECK(curves == 1);

  // Header plus one row per cell.
  std::istringstream lines(slurp(dir / "summary.csv"));
  int rows = 0;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
  CHECK(r.output.find("hybrid") != std::string::npos);
  CHECK(r.output.find("no_llm") != std::string::npos);
}

TEST_CASE("compare without scenarios or apps exits 1") {
  CHECK(run_cli("compare --mode no_llm --seed 1").exit_code == 1);
}

TEST_CASE("scripted advisor drives a run from a response file") {
  const fs::path dir = fresh_dir("scripted");
  const fs::path script = dir / "answers.txt";
  std::ofstream(script) << "Action ID: 2\n";
  const CliResult r = run_cli("run --scenario " + kMotivating +
                              " --mode hybrid --advisor scripted --script-file " +
                              script.string() + " --seed 3 --budget 300 --out-dir " +
                              (dir / "out").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("episodes") != std::string::npos);
}

TEST_CASE("recorded cassettes replay to an identical report") {
  const fs::path dir = fresh_dir("cassette");
  const fs::path cassette = dir / "exchanges.json";
  const std::string common = "run --scenario " + kMotivating +
                             " --mode hybrid --seed 9 --budget 300 --out-dir ";
  CHECK(run_cli(common + (dir / "rec").string() + " --advisor oracle" +
                " --record-cassette " + cassette.string())
            .exit_code == 0);
  REQUIRE(fs::exists(cassette));
  CHECK(run_cli(common + (dir / "rep").string() + " --advisor replay --cassette " +
                cassette.string())
            .exit_code == 0);
  CHECK(slurp(dir / "rec" / "report.json") == slurp(dir / "rep" / "report.json"));
}
