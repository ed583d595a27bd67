#include "sparsetf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sparsetf/errors.hpp"

namespace sparsetf {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) throw ParseError("not a number: '" + s + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite value", line);
  return v;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.exceptions(std::ios::badbit | std::ios::failbit);
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

}  // namespace

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (!header) {
      for (const auto& c : cells)
        if (c.empty()) throw ParseError("empty column name", line_no);
      t.columns = cells;
      t.data.assign(cells.size(), {});
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw ParseError("expected " + std::to_string(t.columns.size()) + " fields, found " +
                           std::to_string(cells.size()),
                       line_no);
    for (std::size_t c = 0; c < cells.size(); ++c) t.data[c].push_back(parse_number(cells[c], line_no));
  }
  if (!header) throw ParseError("empty file", line_no + 1);
  return t;
}

void write_table(std::ostream& out, const Table& table) {
  if (table.columns.size() != table.data.size()) throw std::invalid_argument("table shape mismatch");
  const std::size_t rows = table.data.empty() ? 0 : table.data.front().size();
  for (const auto& col : table.data)
    if (col.size() != rows) throw std::invalid_argument("table columns differ in length");
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << format_number(table.data[c][r]);
    out << '\n';
  }
}

void write_table(const std::filesystem::path& path, const Table& table) {
  auto out = open_out(path);
  write_table(out, table);
}

SampledSignal read_signal(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<double> t, f;
  std::vector<std::size_t> lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (!header) {
      if (cells.size() != 2 || cells[0] != "t" || cells[1] != "f") throw ParseError("expected header 't,f'", line_no);
      header = true;
      continue;
    }
    if (cells.size() != 2) throw ParseError("expected 2 fields, found " + std::to_string(cells.size()), line_no);
    t.push_back(parse_number(cells[0], line_no));
    f.push_back(parse_number(cells[1], line_no));
    lines.push_back(line_no);
  }
  if (!header) throw ParseError("empty file", line_no + 1);
  if (t.size() < 2) throw ParseError("need at least two samples", line_no + 1);

  const double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw ParseError("time must increase", lines[1]);
  for (std::size_t i = 2; i < t.size(); ++i) {
    const double expected = t[0] + static_cast<double>(i) * dt;
    const double scale = std::max({std::abs(t[0]), std::abs(expected), dt});
    if (std::abs(t[i] - expected) > 1e-9 * scale) throw ParseError("time samples are not uniformly spaced", lines[i]);
  }
  return {std::move(f), t[0], dt};
}

SampledSignal read_signal(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_signal(in);
}

void write_signal(std::ostream& out, const SampledSignal& s) {
  write_table(out, {{"t", "f"}, {s.times(), s.values}});
}

void write_signal(const std::filesystem::path& path, const SampledSignal& s) {
  auto out = open_out(path);
  write_signal(out, s);
}

std::string decomposition_to_json(const Decomposition& d, const SampledSignal& f, int indent) {
  json j;
  j["t0"] = f.t0;
  j["dt"] = f.dt;
  json comps = json::array();
  for (const auto& c : d.components) {
    comps.push_back({{"a", c.a},
                     {"b", c.b},
                     {"theta", c.phase.theta()},
                     {"theta_prime", c.phase.theta_prime()},
                     {"imf", c.imf}});
  }
  j["components"] = std::move(comps);
  if (d.outliers) {
    std::vector<std::size_t> idx;
    std::vector<double> val;
    for (std::size_t i = 0; i < d.outliers->size(); ++i) {
      if ((*d.outliers)[i] != 0.0) {
        idx.push_back(i);
        val.push_back((*d.outliers)[i]);
      }
    }
    j["outliers"] = {{"indices", idx}, {"values", val}};
  } else {
    j["outliers"] = nullptr;
  }
  j["residual"] = d.residual;

  const auto& g = d.diagnostics;
  json levels = json::array();
  for (const auto& l : g.levels)
    levels.push_back(
        {{"eta", l.eta}, {"outer_iterations", l.outer_iterations}, {"converged", l.converged}, {"last_change", l.last_change}});
  j["diagnostics"] = {{"levels", levels},
                      {"total_outer_iterations", g.total_outer_iterations},
                      {"inner_solves", g.inner_solves},
                      {"inner_unconverged", g.inner_unconverged},
                      {"inner_iterations", g.inner_iterations},
                      {"mu", g.mu},
                      {"noise_sigma", g.noise_sigma},
                      {"noise_stop_eta", g.noise_stop_eta},
                      {"final_residual_norm", g.final_residual_norm},
                      {"relative_residual", g.relative_residual},
                      {"converged", g.converged},
                      {"initial_guess_fallback", g.initial_guess_fallback},
                      {"dropped_components", g.dropped_components},
                      {"warnings", g.warnings}};
  return j.dump(indent);
}

void write_decomposition(const std::filesystem::path& path, const Decomposition& d, const SampledSignal& f) {
  auto out = open_out(path);
  out << decomposition_to_json(d, f) << '\n';
}

Decomposition read_decomposition(std::istream& in, double dt) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), 0);
  }
  try {
    Decomposition d;
    for (const auto& c : j.at("components")) {
      Component comp;
      comp.a = c.at("a").get<std::vector<double>>();
      comp.b = c.contains("b") ? c.at("b").get<std::vector<double>>() : std::vector<double>(comp.a.size(), 0.0);
      comp.phase = PhaseFunction(c.at("theta").get<std::vector<double>>(), c.at("theta_prime").get<std::vector<double>>(),
                                 j.value("dt", dt));
      comp.imf = c.at("imf").get<std::vector<double>>();
      d.components.push_back(std::move(comp));
    }
    d.residual = j.at("residual").get<std::vector<double>>();
    const auto& o = j.at("outliers");
    if (!o.is_null()) {
      std::vector<double> z(d.residual.size(), 0.0);
      const auto idx = o.at("indices").get<std::vector<std::size_t>>();
      const auto val = o.at("values").get<std::vector<double>>();
      if (idx.size() != val.size()) throw ParseError("outlier indices and values differ in length", 0);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= z.size()) throw ParseError("outlier index out of range", 0);
        z[idx[k]] = val[k];
      }
      d.outliers = std::move(z);
    }
    if (j.contains("diagnostics")) {
      const auto& g = j["diagnostics"];
      d.diagnostics.mu = g.value("mu", 0.0);
      d.diagnostics.noise_sigma = g.value("noise_sigma", 0.0);
      d.diagnostics.noise_stop_eta = g.value("noise_stop_eta", 0);
      d.diagnostics.converged = g.value("converged", false);
      d.diagnostics.relative_residual = g.value("relative_residual", 0.0);
      d.diagnostics.final_residual_norm = g.value("final_residual_norm", 0.0);
    }
    return d;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed decomposition: ") + e.what(), 0);
  }
}

Decomposition read_decomposition(const std::filesystem::path& path, double dt) {
  auto in = open_in(path);
  return read_decomposition(in, dt);
}

std::string ground_truth_to_json(const GroundTruth& g, const SampledSignal& f, int indent) {
  json j;
  j["t0"] = f.t0;
  j["dt"] = f.dt;
  json phases = json::array();
  for (std::size_t k = 0; k < g.phases.size(); ++k)
    phases.push_back({{"theta", g.phases[k].theta()},
                      {"theta_prime", g.phases[k].theta_prime()},
                      {"envelope", g.envelopes.at(k)}});
  j["components"] = std::move(phases);
  if (g.outliers) {
    json o = json::array();
    for (const auto& x : *g.outliers) o.push_back({{"index", x.index}, {"strength", x.strength}});
    j["outliers"] = std::move(o);
  } else {
    j["outliers"] = nullptr;
  }
  j["noise_sigma"] = g.noise_sigma;
  return j.dump(indent);
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& g, const SampledSignal& f) {
  auto out = open_out(path);
  out << ground_truth_to_json(g, f) << '\n';
}

StoredTruth read_ground_truth(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), 0);
  }
  try {
    StoredTruth s;
    s.t0 = j.at("t0").get<double>();
    s.dt = j.at("dt").get<double>();
    for (const auto& c : j.at("components")) {
      s.truth.phases.emplace_back(c.at("theta").get<std::vector<double>>(),
                                  c.at("theta_prime").get<std::vector<double>>(), s.dt);
      s.truth.envelopes.push_back(c.at("envelope").get<std::vector<double>>());
    }
    if (!j.at("outliers").is_null()) {
      std::vector<Outlier> o;
      for (const auto& x : j["outliers"]) o.push_back({x.at("index").get<std::size_t>(), x.at("strength").get<double>()});
      s.truth.outliers = std::move(o);
    }
    s.truth.noise_sigma = j.value("noise_sigma", 0.0);
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed ground truth: ") + e.what(), 0);
  }
}

StoredTruth read_ground_truth(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_ground_truth(in);
}

}  // namespace sparsetf
