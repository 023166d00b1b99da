// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "modid/io.hpp"
#include "modid/rre.hpp"

namespace modid {

// Missing keys keep the values of default_rre_parameters(n) for the module count.
void to_json(json& j, const GeneModule& m);
void to_json(json& j, const HostParameters& h);
void to_json(json& j, const RreParameters& p);
RreParameters rre_parameters_from_json(const json& j);

}  // namespace modid
