#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "minifunc/errors.hpp"
#include "minifunc/poly_approx.hpp"

using namespace minifunc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "minifunc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "minifunc_cli_test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("run config JSON round trip") {
  cli::RunConfig c;
  c.command = "approx";
  c.master_seed = 18446744073709551615ull;
  c.params = {{"L", 8}, {"interval", {0.0, 0.1}}, {"phi", {{"kind", "power"}, {"alpha", 0.5}}}};
  const auto text = c.to_json().dump();
  CHECK(cli::RunConfig::from_json(json::parse(text)) == c);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"({"params":{}})")), InputError);
  CHECK_THROWS_AS(cli::RunConfig::from_json(json::parse(R"({"command":"x","master_seed":-1})")),
                  InputError);
}

TEST_CASE("histogram CSV input") {
  std::istringstream in("symbol,count\n3,5\n1,2\n\n7,0\n");
  const auto h = cli::read_histogram(in);
  CHECK(h.counts == std::vector<std::int64_t>{2, 0, 5, 0, 0, 0, 0});
  CHECK(h.n_nominal == 7);
  std::istringstream in2("symbol,count\n3,5\n");
  CHECK(cli::read_histogram(in2, 10).k() == 10);
  std::istringstream in3("symbol,count\n3,5\n");
  CHECK_THROWS_AS(cli::read_histogram(in3, 2), InputError);
}

TEST_CASE("raw sample input") {
  std::istringstream in("2\n2\n1\n 4 \n");
  const auto h = cli::read_histogram(in);
  CHECK(h.counts == std::vector<std::int64_t>{1, 2, 0, 1});
}

TEST_CASE("input errors report the line number") {
  const std::pair<std::string, std::string> cases[] = {
      {"symbol,count\n1,2\n2,x\n", "line 3"},
      {"symbol,count\n1,2\n1,3\n", "line 3"},
      {"symbol,count\n1,-2\n", "line 2"},
      {"1\n2\n0\n", "line 3"},
      {"1\n2.5\n", "line 2"},
  };
  for (const auto& [text, where] : cases) {
    std::istringstream in(text);
    try {
      cli::read_histogram(in);
      FAIL("expected InputError for " << text);
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find(where) != std::string::npos);
    }
  }
  std::istringstream empty("symbol,count\n");
  CHECK_THROWS_AS(cli::read_histogram(empty), InputError);
}

TEST_CASE("seed from the environment") {
  unsetenv("MINIFUNC_SEED");
  CHECK(cli::seed_from_env() == 0);
  setenv("MINIFUNC_SEED", "42", 1);
  CHECK(cli::seed_from_env() == 42);
  const auto r = run_cli({"check-speed", "--phi", "shannon", "--ell", "2"});
  CHECK(json::parse(r.out)["config"]["master_seed"] == 42);
  const auto r2 = run_cli({"--seed", "7", "check-speed", "--phi", "shannon", "--ell", "2"});
  CHECK(json::parse(r2.out)["config"]["master_seed"] == 7);
  setenv("MINIFUNC_SEED", "abc", 1);
  CHECK_THROWS_AS(cli::seed_from_env(), InputError);
  CHECK(run_cli({"check-speed", "--phi", "shannon", "--ell", "2"}).code == 2);
  unsetenv("MINIFUNC_SEED");
}

TEST_CASE("approx matches the library bit for bit") {
  const auto r = run_cli({"approx", "--phi", "power:0.5", "--L", "8", "--interval", "0,0.1"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  const auto lib = remez_best_approx([](double x) { return std::sqrt(x); }, 8, {0, 0.1});
  CHECK(j["sup_error"].get<double>() == lib.sup_error);
  CHECK(j["coeffs"].get<std::vector<double>>() == lib.poly.coeffs());
  CHECK(j["alternation_points"].size() == 10);
  CHECK(j["config"]["params"]["max_iterations"] == 100);
}

TEST_CASE("estimate in plugin mode on a point mass") {
  const auto f = write_file("point.csv", "symbol,count\n1,1000\n");
  const auto r = run_cli(
      {"estimate", "--phi", "shannon", "--input", f.string(), "--k", "20", "--mode", "plugin"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["estimate"] == 0.0);
  CHECK(j["branch_counts"]["plugin"] == 20);
  CHECK(j["config"]["params"]["k"] == 20);
}

TEST_CASE("check-speed for entropy") {
  const auto r = run_cli({"check-speed", "--phi", "shannon", "--ell", "2"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["holds"] == true);
  CHECK(j["W"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("exit codes") {
  const auto bad = write_file("bad.csv", "symbol,count\n1,2\nfoo\n");
  auto r = run_cli({"estimate", "--phi", "shannon", "--input", bad.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 3") != std::string::npos);

  const auto good = write_file("good.csv", "symbol,count\n1,20\n2,30\n");
  r = run_cli(
      {"estimate", "--phi", "shannon", "--input", good.string(), "--c1", "1", "--c2", "0.5"});
  CHECK(r.code == 3);
  CHECK(r.err.find("c2 > 8 alpha") != std::string::npos);

  r = run_cli(
      {"approx", "--phi", "power:0.5", "--L", "8", "--interval", "0,1", "--max-iterations", "1"});
  CHECK(r.code == 4);

  r = run_cli({"priors", "--phi", "shannon", "--L", "3", "--interval", "0,1", "--grid", "10"});
  CHECK(r.code == 3);
  CHECK(run_cli({"approx", "--phi", "cube", "--L", "2", "--interval", "0,1"}).code == 2);
  CHECK(run_cli({"approx", "--phi", "shannon", "--L", "x", "--interval", "0,1"}).code == 2);
  CHECK(run_cli({"estimate", "--phi", "shannon", "--input", "/nonexistent/file"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("priors CSV") {
  const auto r = run_cli({"priors", "--phi", "power:2", "--L", "1", "--interval", "0,1"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,w0,w1");
  double s0 = 0, s1 = 0;
  while (std::getline(in, line)) {
    double x, a, b;
    char c1, c2;
    std::istringstream(line) >> x >> c1 >> a >> c2 >> b;
    s0 += a;
    s1 += b;
  }
  CHECK(s0 == doctest::Approx(1.0));
  CHECK(s1 == doctest::Approx(1.0));
}

TEST_CASE("saved configs reproduce the output") {
  const auto data = write_file("data.csv", "symbol,count\n1,40\n2,25\n3,5\n4,1\n9,3\n");
  const auto first = run_cli({"--seed", "11", "estimate", "--phi", "power:0.5", "--input",
                              data.string(), "--c1", "1", "--c2", "0.5", "--unchecked"});
  REQUIRE(first.code == 0);
  const auto cfg = write_file("cfg.json", json::parse(first.out)["config"].dump());
  const auto again = run_cli({"run", cfg.string()});
  REQUIRE(again.code == 0);
  CHECK(again.out == first.out);

  const auto third = run_cli({"--seed", "11", "estimate", "--phi", "power:0.5", "--input",
                              data.string(), "--c1", "1", "--c2", "0.5", "--unchecked"});
  CHECK(third.out == first.out);

  CHECK(run_cli({"run", write_file("broken.json", "{").string()}).code == 2);
}

TEST_CASE("risk-sweep output is identical across job counts") {
  const auto a = scratch() / "a.csv", b = scratch() / "b.csv";
  const std::vector<std::string> base{
      "--seed",   "5",          "risk-sweep", "--alpha", "1",    "--n-grid", "100,300,1000,3000",
      "--k-rule", "prop:0.5",   "--reps",     "100",     "--c1", "1",        "--c2",
      "0.5",      "--unchecked"};
  auto args = base;
  args.insert(args.end(), {"--out", a.string(), "--jobs", "1"});
  const auto ra = run_cli(args);
  args = base;
  args.insert(args.end(), {"--out", b.string(), "--jobs", "3"});
  const auto rb = run_cli(args);
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(json::parse(ra.out)["rows"] == 12);
}
