// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <variant>

#include "modid/io.hpp"
#include "modid/mlp.hpp"
#include "modid/trainer.hpp"

namespace modid {

void to_json(json& j, const MlpFunction& net);
void from_json(const json& j, MlpFunction& net);

/// A trained model plus the run coordinates it was saved at.
struct Checkpoint {
  std::variant<ModularModel, MonolithicModel> model;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
};

json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace modid
