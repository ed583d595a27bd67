#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sparsetf/basis.hpp"

namespace sparsetf {

// Deterministic Gaussian source: splitmix64 stream with Box-Muller.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  // Uniform in (0, 1).
  double uniform();
  double gaussian();
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

struct Outlier {
  std::size_t index = 0;
  double strength = 0.0;
};

struct GroundTruth {
  std::vector<PhaseFunction> phases;
  std::vector<std::vector<double>> envelopes;
  std::optional<std::vector<Outlier>> outliers;
  double noise_sigma = 0.0;

  // envelope_j · cos θ_j
  std::vector<std::vector<double>> imfs() const;
};

struct GeneratedSignal {
  SampledSignal signal;
  GroundTruth truth;
};

// cos θ₁ + cos θ₂ + σX on t_i = i/N, θ₁ = 39.2πt − 12 sin 2πt, θ₂ = 85.4πt + 12 sin 2πt.
GeneratedSignal gen_example1(std::size_t n, double sigma, std::uint64_t seed);

// The two-tone base of gen_example1 plus impulses at distinct random samples
// with N(0, outlier_sigma²) strengths, plus N(0, noise_sigma²) noise.
GeneratedSignal gen_example2(std::size_t n, std::size_t n_outliers, double outlier_sigma, double noise_sigma,
                             std::uint64_t seed);

// c·cos(ωt) + d
struct StiffnessTerm {
  double c = 0.0;
  double omega = 0.0;
  double d = 0.0;

  double operator()(double t) const;
};

// ü + K(t)u = 0 with K = [[k1 + k2, −k2], [−k2, k2 + k3]].
struct MdofParams {
  StiffnessTerm k1{100.0, 0.2 * 3.14159265358979323846, 500.0};
  StiffnessTerm k2{400.0, 0.2 * 3.14159265358979323846, 400.0};
  StiffnessTerm k3{100.0, 0.2 * 3.14159265358979323846, 500.0};
  double u1 = 1.0, u2 = 2.0, v1 = 0.0, v2 = 0.0;
  double t_begin = 0.0;
  double t_end = 9.0;
  std::size_t samples = 1024;
  int substeps = 16;  // RK4 steps per output sample, at least 8

  void validate() const;
};

struct MdofSignal {
  SampledSignal signal;  // u₁
  std::vector<double> u2;
  std::vector<double> du1, du2;  // velocities
  // √((k₁+k₃)/2) and √((k₁+k₃+4k₂)/2) on the output grid.
  std::vector<double> low_frequency;
  std::vector<double> high_frequency;
};

// Samples t_begin + i·(t_end − t_begin)/samples. Throws std::invalid_argument
// if K(t) is not positive definite at some sample time.
MdofSignal gen_mdof(const MdofParams& params);

// Times in [t_begin, t_end] where the two theoretical frequency curves meet.
// Grid minima of their gap are refined by golden-section search, so
// tangential contacts are found as well as sign changes.
std::vector<double> frequency_crossings(const MdofParams& params);

}  // namespace sparsetf
