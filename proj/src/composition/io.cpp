// SPDX-License-Identifier: Apache-2.0

#include "modid/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "modid/error.hpp"

namespace modid {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix& rows) {
  if (!rows.empty() && rows.cols() != header.size())
    throw ShapeError("CSV header has " + std::to_string(header.size()) + " columns, rows have " +
                     std::to_string(rows.cols()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    for (std::size_t c = 0; c < rows.cols(); ++c) out << (c ? "," : "") << format_real(rows(r, c));
    out << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + " is empty");
  table.header = split(line);
  std::vector<double> values;
  std::size_t n_rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size())
      throw ConfigError(path.string() + ": row " + std::to_string(n_rows + 1) + " has " +
                        std::to_string(cells.size()) + " cells");
    for (const auto& c : cells) {
      try {
        values.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ": not a number: '" + c + "'");
      }
    }
    ++n_rows;
  }
  table.rows = Matrix(n_rows, table.header.size());
  std::copy(values.begin(), values.end(), table.rows.data().begin());
  return table;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
  std::vector<std::string> header;
  for (std::size_t i = 0; i < data.inputs.cols(); ++i) header.push_back("u_" + std::to_string(i + 1));
  for (std::size_t i = 0; i < data.outputs.cols(); ++i) header.push_back("Y_" + std::to_string(i + 1));
  Matrix rows(data.size(), header.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    std::size_t c = 0;
    for (double u : data.inputs.row(k)) rows(k, c++) = u;
    for (double y : data.outputs.row(k)) rows(k, c++) = y;
  }
  write_csv(path, header, rows);
}

Dataset read_dataset_csv(const std::filesystem::path& path, Provenance provenance) {
  auto table = read_csv(path);
  std::size_t n = 0, m = 0;
  for (const auto& h : table.header) {
    if (h.rfind("u_", 0) == 0) {
      if (m) throw ConfigError(path.string() + ": input columns must precede output columns");
      ++n;
    } else if (h.rfind("Y_", 0) == 0) {
      ++m;
    } else {
      throw ConfigError(path.string() + ": unexpected column '" + h + "'");
    }
  }
  if (n == 0 || m == 0) throw ConfigError(path.string() + ": need u_* and Y_* columns");
  Dataset data;
  data.provenance = provenance;
  data.inputs = Matrix(table.rows.rows(), n);
  data.outputs = Matrix(table.rows.rows(), m);
  for (std::size_t k = 0; k < table.rows.rows(); ++k) {
    for (std::size_t c = 0; c < n; ++c) data.inputs(k, c) = table.rows(k, c);
    for (std::size_t c = 0; c < m; ++c) data.outputs(k, c) = table.rows(k, n + c);
  }
  return data;
}

void to_json(json& j, const HillFunction& h) {
  j = json{{"kind", h.kind == HillKind::activating ? "activating" : "repressing"},
           {"amplitude", h.amplitude},
           {"half_point", h.half_point},
           {"coefficient", h.coefficient},
           {"basal", h.basal}};
}

void from_json(const json& j, HillFunction& h) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "activating")
    h.kind = HillKind::activating;
  else if (kind == "repressing")
    h.kind = HillKind::repressing;
  else
    throw ConfigError("unknown Hill kind '" + kind + "'");
  h.amplitude = j.at("amplitude").get<double>();
  h.half_point = j.at("half_point").get<double>();
  h.coefficient = j.at("coefficient").get<double>();
  h.basal = j.value("basal", 0.0);
  h.validate();
}

void to_json(json& j, const GroundTruth& t) {
  json intervals = json::array();
  for (const auto& iv : t.input_set.intervals()) intervals.push_back({iv.lo, iv.hi});
  j = json{{"modules", t.modules},
           {"theta", t.theta},
           {"input_set",
            {{"intervals", intervals},
             {"anchor", std::vector<double>(t.input_set.anchor().begin(),
                                            t.input_set.anchor().end())}}},
           {"seed", t.seed}};
}

void from_json(const json& j, GroundTruth& t) {
  try {
    t.modules = j.at("modules").get<std::vector<HillFunction>>();
    t.theta = j.at("theta").get<std::vector<double>>();
    if (t.theta.size() != t.modules.size())
      throw ConfigError("ground truth lists " + std::to_string(t.modules.size()) +
                        " modules but " + std::to_string(t.theta.size()) + " theta values");
    const std::size_t n = t.modules.size();
    if (j.contains("input_set")) {
      const auto& s = j.at("input_set");
      std::vector<Interval> intervals;
      if (s.contains("intervals")) {
        for (const auto& iv : s.at("intervals"))
          intervals.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
      } else {
        intervals.assign(n, Interval{0.0, 1.0});
      }
      std::vector<double> anchor;
      if (s.contains("anchor")) {
        anchor = s.at("anchor").get<std::vector<double>>();
      } else {
        for (const auto& iv : intervals) anchor.push_back(iv.hi);
      }
      t.input_set = UniModularInputSet(std::move(intervals), std::move(anchor));
    } else {
      t.input_set = UniModularInputSet::unit(n);
    }
    if (t.input_set.n_modules() != n) throw ConfigError("input set dimension mismatch");
    t.seed = j.value("seed", std::uint64_t{0});
    (void)t.map();  // validates theta
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed ground-truth config: ") + e.what());
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("invalid ground-truth config: ") + e.what());
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("invalid ground-truth config: ") + e.what());
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

GroundTruth load_truth(const std::filesystem::path& path) {
  return read_json(path).get<GroundTruth>();
}

void save_truth(const std::filesystem::path& path, const GroundTruth& truth) {
  write_json(path, json(truth));
}

}  // namespace modid
