// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "modid/composition.hpp"

namespace modid {

using json = nlohmann::json;

/// Shortest decimal text that carries 17 significant digits.
std::string format_real(double v);

/// Writes `header` then one comma separated row per matrix row.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix& rows);

struct CsvTable {
  std::vector<std::string> header;
  Matrix rows;
};
CsvTable read_csv(const std::filesystem::path& path);

/// CSV with header u_1,...,u_n,Y_1,...,Y_m.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path,
                         Provenance provenance = Provenance::custom);

void to_json(json& j, const HillFunction& h);
void from_json(const json& j, HillFunction& h);
void to_json(json& j, const GroundTruth& t);
void from_json(const json& j, GroundTruth& t);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

GroundTruth load_truth(const std::filesystem::path& path);
void save_truth(const std::filesystem::path& path, const GroundTruth& truth);

}  // namespace modid
