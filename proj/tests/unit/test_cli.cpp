#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("shrinktest_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run run(const std::string& args) {
  const auto out = scratch() / "stdout.txt";
  const std::string cmd =
      std::string(SHRINKTEST_CLI) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string write_file(const std::string& name, const std::string& body) {
  const auto p = scratch() / name;
  std::ofstream(p) << body;
  return p.string();
}

const std::string kPrior = "--prior family=horseshoe,n=10000,p=100";

}  // namespace

TEST_CASE("mx prints the CSV curve") {
  const auto r = run("mx " + kPrior + " --x 0:2:1");
  CHECK(r.code == 0);
  CHECK(r.out.starts_with("x,m_x,posterior_mean\n0,"));
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4);
}

TEST_CASE("threshold prints x*") {
  const auto r = run("threshold " + kPrior + " --alpha 0.5");
  CHECK(r.code == 0);
  CHECK(std::stod(r.out) == doctest::Approx(3.9951).epsilon(1e-4));
}

TEST_CASE("test reads one observation per line") {
  std::string data;
  for (int i = 0; i < 10000; ++i) data += (i == 3 ? "12.5\n" : "0.1\n");
  const auto input = write_file("obs.txt", data);
  const auto r = run("test " + kPrior + " --input " + input);
  CHECK(r.code == 0);
  CHECK(r.out.starts_with("index,x,decision\n0,0.1,0\n"));
  CHECK(r.out.find("\n3,12.5,1\n") != std::string::npos);
  const auto bh = run("test --procedure bh --alpha 0.1 --input " + input);
  CHECK(bh.code == 0);
  CHECK(bh.out.find("\n3,12.5,1\n") != std::string::npos);
}

TEST_CASE("check-prior emits JSON records") {
  const auto r = run("check-prior " + kPrior);
  CHECK(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("condition"));
    CHECK(j.contains("satisfied"));
    CHECK(j.contains("constant"));
    CHECK(j.contains("grid"));
    ++count;
  }
  CHECK(count == 4);
}

TEST_CASE("risk subcommands write the risk columns") {
  const auto bayes = run("risk-bayes " + kPrior + " --replicates 20 --seed 3 --threads 2");
  CHECK(bayes.code == 0);
  CHECK(bayes.out.find("n,p,alpha,x_star,type1,type2,bayes_risk,oracle_risk,bound,fdr,fnr,rsup,"
                       "se_type1") != std::string::npos);
  CHECK(bayes.out.find("\nanalytic,") != std::string::npos);
  CHECK(bayes.out.find("\nmc,") != std::string::npos);
  const auto again = run("risk-bayes " + kPrior + " --replicates 20 --seed 3 --threads 8");
  CHECK(again.out == bayes.out);

  const auto mm = run("risk-minimax " + kPrior + " --c1 0 --replicates 5 --scale 0.5,1");
  CHECK(mm.code == 0);
  CHECK(std::count(mm.out.begin(), mm.out.end(), '\n') == 8);  // 5 comments, header, 2 rows
}

TEST_CASE("adaptive test and verification") {
  std::string zeros;
  for (int i = 0; i < 200; ++i) zeros += "0\n";
  const auto input = write_file("zeros.txt", zeros);
  const auto r = run("adaptive --estimator simple --prior-family horseshoe --input " + input);
  CHECK(r.code == 0);
  CHECK(r.out.starts_with("# p_hat=1\n"));
  const auto v = run("adaptive --verify --n 10000 --p 100 --replicates 100 --seed 4");
  CHECK(v.code == 0);
  const auto j = nlohmann::json::parse(v.out);
  CHECK(j["upper"]["trials"] == 100);
  CHECK(j.contains("passed"));
}

TEST_CASE("simulate writes the CSV and a plot script") {
  const auto csv = (scratch() / "sim.csv").string();
  const auto cfg = write_file("sim.ini",
                              "[experiment]\nid=s\nkind=minimax\nreplicates=2\nseed=1\n"
                              "[prior]\nfamily=horseshoe\n[model]\nn=1000\np=20\n"
                              "[signal]\nc1=0\nscale=0.5,1\n");
  const auto r = run("simulate --config " + cfg + " --out " + csv + " --plot risk_vs_signal");
  CHECK(r.code == 0);
  CHECK(fs::exists(csv));
  CHECK(fs::exists(scratch() / "sim_plot.py"));
}

TEST_CASE("exit codes") {
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("mx --x 1").code == 2);                                     // missing --prior
  CHECK(run("mx --prior family=horseshoe,n=10").code == 2);             // missing p
  CHECK(run("threshold " + kPrior + " --alpha 2").code == 2);           // alpha out of range
  CHECK(run("threshold " + kPrior + " --alpha 0.0001").code == 3);      // always reject
  CHECK(run("test " + kPrior + " --input /nonexistent/file").code == 2);
  CHECK(run("simulate --config /nonexistent.ini").code == 2);
  CHECK(run("--help").code == 0);
}
