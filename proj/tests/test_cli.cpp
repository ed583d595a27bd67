#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "sparsetf/io.hpp"
#include "sparsetf/signals.hpp"

#ifndef SPARSETF_CLI
#error "SPARSETF_CLI must name the command-line binary"
#endif

namespace fs = std::filesystem;
using namespace sparsetf;

namespace {

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("sparsetf_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  // Runs the CLI inside the scratch directory with stdout captured to out.txt.
  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" SPARSETF_CLI "' " + args +
                            " > out.txt 2> err.txt";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string read(const std::string& name) const {
    std::ifstream in(dir / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  bool has(const std::string& name) const { return fs::exists(dir / name); }
};

}  // namespace

TEST_CASE("gen writes a signal and its ground truth") {
  Scratch s("gen");
  CHECK(s.run("gen ex1 --n 1024 --sigma 1 --seed 7") == 0);
  CHECK(s.has("ex1.csv"));
  CHECK(s.has("ex1_truth.json"));
  const auto sig = read_signal(s.dir / "ex1.csv");
  CHECK(sig.size() == 1024);
  CHECK(sig.values == gen_example1(1024, 1.0, 7).signal.values);
  CHECK(read_ground_truth(s.dir / "ex1_truth.json").truth.noise_sigma == 1.0);
}

TEST_CASE("gen mdof writes the signal over [0, 9] and the theoretical frequencies") {
  Scratch s("mdof");
  CHECK(s.run("gen mdof") == 0);
  const auto sig = read_signal(s.dir / "mdof.csv");
  CHECK(sig.t0 == 0.0);
  CHECK(sig.time(sig.size()) == doctest::Approx(9.0));
  std::ifstream in(s.dir / "mdof_if.csv");
  const auto table = read_table(in);
  CHECK(table.columns == std::vector<std::string>{"t", "low", "high"});
  CHECK(table.data[1][0] == doctest::Approx(std::sqrt(600.0)));
}

TEST_CASE("gen rejects bad parameters and unknown flags") {
  Scratch s("gen_bad");
  CHECK(s.run("gen ex1 --n 10") != 0);
  CHECK(s.read("err.txt").find("error") != std::string::npos);
  CHECK(s.run("gen ex1 --bogus") != 0);
  CHECK(s.run("gen ex7") != 0);
}

TEST_CASE("decompose writes JSON and per-component CSVs") {
  Scratch s("decompose");
  REQUIRE(s.run("gen ex1 --n 256 --seed 1") == 0);
  CHECK(s.run("decompose ex1.csv --m 2 --init 128pi,32pi --max-outer 3 --prefix run") == 0);
  REQUIRE(s.has("run.json"));
  const auto j = nlohmann::json::parse(s.read("run.json"));
  CHECK(j.at("components").size() == 2);
  CHECK(j.at("outliers").is_null());
  for (const char* name : {"run_c0.csv", "run_c1.csv"}) {
    std::ifstream in(s.dir / name);
    const auto table = read_table(in);
    CHECK(table.columns == std::vector<std::string>{"t", "a", "theta_prime", "imf"});
    CHECK(table.data[0].size() == 256);
  }
}

TEST_CASE("decompose with outliers writes an outlier block") {
  Scratch s("outliers");
  REQUIRE(s.run("gen ex2 --n 256 --outliers 8 --seed 2") == 0);
  CHECK(s.run("decompose ex2.csv --m 2 --outliers --max-outer 2 --prefix run") == 0);
  const auto j = nlohmann::json::parse(s.read("run.json"));
  CHECK_FALSE(j.at("outliers").is_null());
  CHECK(j.at("outliers").contains("indices"));
}

TEST_CASE("decompose fails on missing input and bad options") {
  Scratch s("decompose_bad");
  CHECK(s.run("decompose missing.csv --m 1") != 0);
  REQUIRE(s.run("gen ex1 --n 256") == 0);
  CHECK(s.run("decompose ex1.csv --m 0") != 0);
  CHECK(s.run("decompose ex1.csv --m 2 --init 128pi") != 0);
  CHECK(s.run("decompose ex1.csv --m 1 --init banana") != 0);
}

TEST_CASE("score of a perfect decomposition reports zero error") {
  Scratch s("score");
  const auto g = gen_example1(256, 0.0, 1);
  Decomposition d;
  const auto imfs = g.truth.imfs();
  for (std::size_t j = 0; j < 2; ++j) {
    Component c;
    c.phase = g.truth.phases[j];
    c.a = g.truth.envelopes[j];
    c.imf = imfs[j];
    d.components.push_back(c);
  }
  d.residual.assign(256, 0.0);
  write_decomposition(s.dir / "perfect.json", d, g.signal);
  write_ground_truth(s.dir / "truth.json", g.truth, g.signal);
  CHECK(s.run("score perfect.json truth.json --json") == 0);
  const auto j = nlohmann::json::parse(s.read("out.txt"));
  REQUIRE(j.at("components").size() == 2);
  for (const auto& c : j["components"]) {
    CHECK(c.at("if_error").get<double>() == 0.0);
    CHECK(c.at("imf_error").get<double>() == 0.0);
  }
  CHECK(s.run("score perfect.json truth.json") == 0);
  CHECK(s.read("out.txt").find("IF error 0,") != std::string::npos);
}

TEST_CASE("score rejects mismatched lengths") {
  Scratch s("score_bad");
  REQUIRE(s.run("gen ex1 --n 256 --name short") == 0);
  REQUIRE(s.run("gen ex1 --n 512 --name long") == 0);
  REQUIRE(s.run("decompose short.csv --m 2 --init 128pi,32pi --max-outer 1 --prefix d") == 0);
  CHECK(s.run("score d.json long_truth.json") != 0);
}

TEST_CASE("identical runs produce identical files") {
  Scratch a("same_a"), b("same_b");
  for (const auto* s : {&a, &b}) {
    REQUIRE(s->run("gen ex2noisy --n 256 --seed 5") == 0);
    REQUIRE(s->run("decompose ex2noisy.csv --m 2 --outliers --max-outer 2 --prefix d") == 0);
  }
  CHECK(a.read("ex2noisy.csv") == b.read("ex2noisy.csv"));
  CHECK(a.read("d.json") == b.read("d.json"));
  CHECK(a.read("d_c1.csv") == b.read("d_c1.csv"));
}

TEST_CASE("output directory comes from the flag or the environment") {
  Scratch s("outdir");
  CHECK(s.run("--out-dir sub gen ex1 --n 128") == 0);
  CHECK(s.has("sub/ex1.csv"));
  CHECK(s.run("gen ex1 --n 128 --name e", "SPARSETF_OUT_DIR=envdir") == 0);
  CHECK(s.has("envdir/e.csv"));
}

TEST_CASE("config file supplies subcommand flags") {
  Scratch s("config");
  {
    std::ofstream cfg(s.dir / "run.ini");
    cfg << "[gen]\nn=128\nseed=9\nname=cfg\n";
  }
  CHECK(s.run("--config run.ini gen ex1") == 0);
  REQUIRE(s.has("cfg.csv"));
  CHECK(read_signal(s.dir / "cfg.csv").size() == 128);
  {
    std::ofstream cfg(s.dir / "bad.ini");
    cfg << "[gen]\nnot_a_flag=1\n";
  }
  CHECK(s.run("--config bad.ini gen ex1") != 0);
}

TEST_CASE("help documents the flags") {
  Scratch s("help");
  CHECK(s.run("--help") == 0);
  CHECK(s.read("out.txt").find("decompose") != std::string::npos);
  CHECK(s.run("decompose --help") == 0);
  const auto text = s.read("out.txt");
  for (const char* flag : {"--m", "--init", "--outliers", "--mu", "--max-outer", "--eta", "--prefix"})
    CHECK(text.find(flag) != std::string::npos);
}
