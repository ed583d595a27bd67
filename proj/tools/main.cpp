// sparsetf: generate test signals, decompose them, and score the result.
//
//   sparsetf gen ex1 --n 1024 --sigma 1 --seed 7
//   sparsetf decompose ex1.csv --m 2 --init 128pi,32pi
//   sparsetf score ex1_decomp.json ex1_truth.json --json
//   sparsetf bench --seeds 5 --sigma 1

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsetf/decompose.hpp"
#include "sparsetf/io.hpp"
#include "sparsetf/numerics.hpp"
#include "sparsetf/score.hpp"
#include "sparsetf/signals.hpp"

namespace fs = std::filesystem;
using namespace sparsetf;
using nlohmann::json;

namespace {

constexpr const char* kOutDirEnv = "SPARSETF_OUT_DIR";

struct Common {
  std::string out_dir;
};

struct GenArgs {
  std::string example;
  std::size_t n = 1024;
  double sigma = 0.0;
  std::uint64_t seed = 1;
  std::size_t outliers = 32;
  double outlier_sigma = 1.0;
  std::optional<double> noise;
  std::string name;
};

struct DecomposeArgs {
  std::string input;
  std::size_t m = 1;
  std::string init = "auto";
  bool outliers = false;
  double mu = 0.0;
  int max_outer = 50;
  std::vector<int> eta;
  std::optional<double> noise_sigma;
  std::string prefix;
};

struct ScoreArgs {
  std::string decomposition;
  std::string truth;
  bool as_json = false;
  double fraction = 0.8;
  std::optional<double> threshold;
};

struct BenchArgs {
  int seeds = 5;
  double sigma = 0.0;
  std::size_t n = 1024;
  unsigned workers = 0;
  bool as_json = false;
};

fs::path output_dir(const Common& c) {
  fs::path dir = c.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    dir = env && *env ? fs::path(env) : fs::path(".");
  }
  if (fs::exists(dir) && !fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  fs::create_directories(dir);
  return dir;
}

// "128pi", "pi", "-0.5pi" or a plain number in rad per unit time.
double parse_frequency(std::string token) {
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.erase(0, 1);
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.pop_back();
  if (token.empty()) throw std::invalid_argument("empty initial frequency");
  double scale = 1.0;
  if (token.size() >= 2 && token.compare(token.size() - 2, 2, "pi") == 0) {
    scale = std::numbers::pi;
    token.resize(token.size() - 2);
    if (!token.empty() && token.back() == '*') token.pop_back();
    if (token.empty()) return scale;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || !std::isfinite(v)) throw std::invalid_argument("bad initial frequency '" + token + "'");
  return v * scale;
}

std::optional<std::vector<PhaseFunction>> parse_init(const std::string& spec, const SampledSignal& f,
                                                     std::size_t m) {
  if (spec == "auto") return std::nullopt;
  std::vector<PhaseFunction> phases;
  std::size_t start = 0;
  while (true) {
    const auto comma = spec.find(',', start);
    const double omega = parse_frequency(spec.substr(start, comma - start));
    if (!(omega > 0.0)) throw std::invalid_argument("initial frequencies must be positive");
    phases.push_back(PhaseFunction::linear(f.size(), f.dt, omega));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (phases.size() != m)
    throw std::invalid_argument("--init lists " + std::to_string(phases.size()) + " frequencies for --m " +
                                std::to_string(m));
  return phases;
}

int cmd_gen(const Common& common, const GenArgs& a) {
  const auto dir = output_dir(common);
  const std::string name = a.name.empty() ? a.example : a.name;
  const auto signal_path = dir / (name + ".csv");

  if (a.example == "mdof") {
    MdofParams p;
    p.samples = a.n;
    const auto s = gen_mdof(p);
    Table t;
    t.columns = {"t", "low", "high"};
    t.data = {s.signal.times(), s.low_frequency, s.high_frequency};
    const auto if_path = dir / (name + "_if.csv");
    write_signal(signal_path, s.signal);
    write_table(if_path, t);
    std::cout << "mdof: " << s.signal.size() << " samples on [" << p.t_begin << ", " << p.t_end << "] -> "
              << signal_path.string() << ", " << if_path.string() << '\n';
    return 0;
  }

  GeneratedSignal g;
  if (a.example == "ex1") {
    g = gen_example1(a.n, a.sigma, a.seed);
  } else if (a.example == "ex2" || a.example == "ex2noisy") {
    const double noise = a.noise.value_or(a.example == "ex2noisy" ? 0.1 : 0.0);
    g = gen_example2(a.n, a.outliers, a.outlier_sigma, noise, a.seed);
  } else {
    throw std::invalid_argument("unknown example '" + a.example + "' (ex1, ex2, ex2noisy, mdof)");
  }
  const auto truth_path = dir / (name + "_truth.json");
  write_signal(signal_path, g.signal);
  write_ground_truth(truth_path, g.truth, g.signal);
  std::cout << a.example << ": " << g.signal.size() << " samples, " << g.truth.phases.size() << " components";
  if (g.truth.outliers) std::cout << ", " << g.truth.outliers->size() << " outliers";
  std::cout << " -> " << signal_path.string() << ", " << truth_path.string() << '\n';
  return 0;
}

int cmd_decompose(const Common& common, const DecomposeArgs& a) {
  if (!fs::is_regular_file(a.input)) throw std::runtime_error("cannot read " + a.input);
  const auto dir = output_dir(common);
  const auto f = read_signal(fs::path(a.input));

  DecomposeOptions o;
  o.components = a.m;
  o.alm.mu = a.mu;
  o.max_outer = a.max_outer;
  o.eta_schedule = a.eta;
  o.noise_sigma = a.noise_sigma;
  o.with_outliers = a.outliers;
  const auto init = parse_init(a.init, f, a.m);

  const auto d = decompose(f, init, o);

  const std::string prefix = a.prefix.empty() ? fs::path(a.input).stem().string() + "_decomp" : a.prefix;
  const auto json_path = dir / (prefix + ".json");
  write_decomposition(json_path, d, f);
  const auto t = f.times();
  for (std::size_t j = 0; j < d.components.size(); ++j) {
    const auto& c = d.components[j];
    Table table;
    table.columns = {"t", "a", "theta_prime", "imf"};
    table.data = {t, c.a, c.phase.theta_prime(), c.imf};
    write_table(dir / (prefix + "_c" + std::to_string(j) + ".csv"), table);
  }
  for (const auto& w : d.diagnostics.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "decomposed " << f.size() << " samples into " << d.components.size() << " components, mu "
            << d.diagnostics.mu << ", relative residual " << d.diagnostics.relative_residual
            << (d.diagnostics.converged ? "" : " (not converged)") << " -> " << json_path.string() << '\n';
  return 0;
}

json report_json(const ScoreReport& r) {
  json j;
  json comps = json::array();
  for (const auto& c : r.components)
    comps.push_back({{"estimate", c.estimate}, {"truth", c.truth}, {"if_error", c.if_error}, {"imf_error", c.imf_error}});
  j["components"] = std::move(comps);
  json perm = json::array();
  for (const auto& p : r.permutation) perm.push_back(p ? json(*p) : json(nullptr));
  j["permutation"] = std::move(perm);
  if (r.outliers) {
    const auto& o = *r.outliers;
    j["outliers"] = {{"threshold", o.threshold},     {"true_above", o.true_above}, {"recovered", o.recovered},
                     {"false_positives", o.false_positives}, {"precision", o.precision}, {"recall", o.recall}};
  } else {
    j["outliers"] = nullptr;
  }
  j["residual_norm"] = r.residual_norm;
  j["interior_fraction"] = r.interior_fraction;
  return j;
}

int cmd_score(const Common&, const ScoreArgs& a) {
  if (!fs::is_regular_file(a.decomposition)) throw std::runtime_error("cannot read " + a.decomposition);
  if (!fs::is_regular_file(a.truth)) throw std::runtime_error("cannot read " + a.truth);
  const auto truth = read_ground_truth(fs::path(a.truth));
  const auto d = read_decomposition(fs::path(a.decomposition), truth.dt);
  const auto r = score(d, truth.truth, a.fraction, a.threshold);

  if (a.as_json) {
    std::cout << report_json(r).dump(1) << '\n';
    return 0;
  }
  std::cout << "interior fraction " << r.interior_fraction << '\n';
  for (const auto& c : r.components)
    std::cout << "component " << c.estimate << " -> truth " << c.truth << ": IF error " << c.if_error
              << ", IMF error " << c.imf_error << '\n';
  for (std::size_t i = 0; i < r.permutation.size(); ++i)
    if (!r.permutation[i]) std::cout << "component " << i << " unmatched\n";
  if (r.outliers) {
    const auto& o = *r.outliers;
    std::cout << "outliers above " << o.threshold << ": recovered " << o.recovered << "/" << o.true_above
              << ", false positives " << o.false_positives << ", precision " << o.precision << ", recall "
              << o.recall << '\n';
  }
  std::cout << "residual norm " << r.residual_norm << '\n';
  return 0;
}

struct BenchRow {
  std::uint64_t seed = 0;
  double seconds = 0.0;
  ScoreReport report;
};

int cmd_bench(const Common&, const BenchArgs& a) {
  if (a.seeds < 1) throw std::invalid_argument("--seeds must be at least 1");
  auto run = [&](std::uint64_t seed) {
    const auto g = gen_example1(a.n, a.sigma, seed);
    const double pi = std::numbers::pi;
    const std::vector<PhaseFunction> init{PhaseFunction::linear(a.n, g.signal.dt, 128 * pi),
                                          PhaseFunction::linear(a.n, g.signal.dt, 32 * pi)};
    DecomposeOptions o;
    o.components = 2;
    const auto start = std::chrono::steady_clock::now();
    const auto d = decompose(g.signal, init, o);
    BenchRow row;
    row.seed = seed;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.report = score(d, g.truth);
    return row;
  };

  const unsigned workers = a.workers ? a.workers : std::max(1u, std::thread::hardware_concurrency());
  std::vector<BenchRow> rows(static_cast<std::size_t>(a.seeds));
  for (std::size_t first = 0; first < rows.size(); first += workers) {
    std::vector<std::future<BenchRow>> batch;
    for (std::size_t k = first; k < std::min(rows.size(), first + workers); ++k)
      batch.push_back(std::async(std::launch::async, run, static_cast<std::uint64_t>(k + 1)));
    for (std::size_t k = 0; k < batch.size(); ++k) rows[first + k] = batch[k].get();
  }

  if (a.as_json) {
    json out = json::array();
    for (const auto& r : rows) out.push_back({{"seed", r.seed}, {"seconds", r.seconds}, {"score", report_json(r.report)}});
    std::cout << out.dump(1) << '\n';
    return 0;
  }
  for (const auto& r : rows) {
    std::cout << "seed " << r.seed << ": " << r.seconds << " s";
    for (const auto& c : r.report.components)
      std::cout << " | truth " << c.truth << " IF " << c.if_error << " IMF " << c.imf_error;
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse time-frequency decomposition with adaptive wavelet dictionaries"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; [gen], [decompose], ... sections hold subcommand flags");
  app.allow_config_extras(false);

  Common common;
  app.add_option("--out-dir", common.out_dir,
                 std::string("Output directory (default: $") + kOutDirEnv + " or the working directory)");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Write an example signal CSV and its ground truth");
  g->add_option("example", gen.example, "ex1, ex2, ex2noisy or mdof")->required()
      ->check(CLI::IsMember({"ex1", "ex2", "ex2noisy", "mdof"}));
  g->add_option("--n", gen.n, "Number of samples")->capture_default_str();
  g->add_option("--sigma", gen.sigma, "Noise standard deviation (ex1)")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--outliers", gen.outliers, "Number of impulses (ex2)")->capture_default_str();
  g->add_option("--outlier-sigma", gen.outlier_sigma, "Impulse strength standard deviation (ex2)")
      ->capture_default_str();
  g->add_option("--noise", gen.noise, "Noise standard deviation (ex2; ex2noisy defaults to 0.1)");
  g->add_option("--name", gen.name, "Output file stem (default: the example name)");

  DecomposeArgs dec;
  auto* d = app.add_subcommand("decompose", "Decompose a signal CSV into M components");
  d->add_option("input", dec.input, "Signal CSV with columns t,f")->required();
  d->add_option("--m", dec.m, "Number of components")->capture_default_str()->check(CLI::PositiveNumber);
  d->add_option("--init", dec.init, "Initial frequencies: auto, or a list like 128pi,32pi or 402.1,100.5 (rad/s)")
      ->capture_default_str();
  d->add_flag("--outliers", dec.outliers, "Also fit sparse impulses");
  d->add_option("--mu", dec.mu, "Penalty parameter (0: derived from the data)")->capture_default_str();
  d->add_option("--max-outer", dec.max_outer, "Phase updates per level")->capture_default_str();
  d->add_option("--eta", dec.eta, "Decreasing list of dictionary levels (default: l0 down to 1)")->delimiter(',');
  d->add_option("--noise-sigma", dec.noise_sigma, "Noise standard deviation (default: estimated)");
  d->add_option("--prefix", dec.prefix, "Output file stem (default: <input stem>_decomp)");

  ScoreArgs sc;
  auto* s = app.add_subcommand("score", "Compare a decomposition with ground truth");
  s->add_option("decomposition", sc.decomposition, "Decomposition JSON")->required();
  s->add_option("truth", sc.truth, "Ground-truth JSON")->required();
  s->add_flag("--json", sc.as_json, "Machine-readable report");
  s->add_option("--fraction", sc.fraction, "Central fraction of samples scored")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s->add_option("--threshold", sc.threshold, "Outlier magnitude threshold (default: 2/mu)");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Time Example 1 decompositions over several seeds");
  b->add_option("--seeds", bench.seeds, "Number of seeds")->capture_default_str();
  b->add_option("--sigma", bench.sigma, "Noise standard deviation")->capture_default_str();
  b->add_option("--n", bench.n, "Number of samples")->capture_default_str();
  b->add_option("--workers", bench.workers, "Parallel workers (0: hardware threads)")->capture_default_str();
  b->add_flag("--json", bench.as_json, "Machine-readable report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) return cmd_gen(common, gen);
    if (*d) return cmd_decompose(common, dec);
    if (*s) return cmd_score(common, sc);
    if (*b) return cmd_bench(common, bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
