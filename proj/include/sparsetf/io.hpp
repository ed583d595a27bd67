#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "sparsetf/decompose.hpp"
#include "sparsetf/signals.hpp"

namespace sparsetf {

// Signal CSV: header `t,f`, one sample per row, uniformly spaced t.
SampledSignal read_signal(std::istream& in);
SampledSignal read_signal(const std::filesystem::path& path);
void write_signal(std::ostream& out, const SampledSignal& s);
void write_signal(const std::filesystem::path& path, const SampledSignal& s);

// Generic numeric CSV with a header row; every row must have one value per column.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // data[column][row]
};
Table read_table(std::istream& in);
void write_table(std::ostream& out, const Table& table);
void write_table(const std::filesystem::path& path, const Table& table);

// Decomposition JSON with keys components, outliers, residual and diagnostics.
std::string decomposition_to_json(const Decomposition& d, const SampledSignal& f, int indent = 1);
void write_decomposition(const std::filesystem::path& path, const Decomposition& d, const SampledSignal& f);
// Reads what write_decomposition wrote. The time step is needed to rebuild phases.
Decomposition read_decomposition(std::istream& in, double dt);
Decomposition read_decomposition(const std::filesystem::path& path, double dt);

std::string ground_truth_to_json(const GroundTruth& g, const SampledSignal& f, int indent = 1);
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& g, const SampledSignal& f);
// Returns the truth together with the time grid it was written for.
struct StoredTruth {
  GroundTruth truth;
  double t0 = 0.0;
  double dt = 1.0;
};
StoredTruth read_ground_truth(std::istream& in);
StoredTruth read_ground_truth(const std::filesystem::path& path);

}  // namespace sparsetf
