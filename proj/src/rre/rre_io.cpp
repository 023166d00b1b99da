// SPDX-License-Identifier: Apache-2.0
//
// { "ribosomes": R_T,
//   "host": { "a0", "dna", "bind", "unbind", "k0", "gamma", "delta" },
//   "modules": [ { "regulator": {...}, "dna", "bind", "unbind", "k0", "gamma", "delta" } ] }

#include "modid/rre_io.hpp"

#include "modid/error.hpp"

namespace modid {

namespace {

void read_module(const json& j, GeneModule& m) {
  if (j.contains("regulator")) m.regulator = j.at("regulator").get<HillFunction>();
  m.dna = j.value("dna", m.dna);
  m.bind = j.value("bind", m.bind);
  m.unbind = j.value("unbind", m.unbind);
  m.k0 = j.value("k0", m.k0);
  m.gamma = j.value("gamma", m.gamma);
  m.delta = j.value("delta", m.delta);
}

}  // namespace

void to_json(json& j, const GeneModule& m) {
  j = json{{"regulator", m.regulator}, {"dna", m.dna},     {"bind", m.bind},
           {"unbind", m.unbind},       {"k0", m.k0},       {"gamma", m.gamma},
           {"delta", m.delta}};
}

void to_json(json& j, const HostParameters& h) {
  j = json{{"a0", h.a0}, {"dna", h.dna},     {"bind", h.bind},  {"unbind", h.unbind},
           {"k0", h.k0}, {"gamma", h.gamma}, {"delta", h.delta}};
}

void to_json(json& j, const RreParameters& p) {
  j = json{{"ribosomes", p.ribosomes}, {"host", p.host}, {"modules", p.modules}};
}

RreParameters rre_parameters_from_json(const json& j) {
  try {
    const auto& mods = j.at("modules");
    if (!mods.is_array() || mods.empty() || mods.size() > 2)
      throw ConfigError("rre parameters need one or two modules");
    RreParameters p = default_rre_parameters(mods.size());
    p.ribosomes = j.value("ribosomes", p.ribosomes);
    for (std::size_t i = 0; i < mods.size(); ++i) read_module(mods[i], p.modules[i]);
    if (j.contains("host")) {
      const auto& h = j.at("host");
      p.host.a0 = h.value("a0", p.host.a0);
      p.host.dna = h.value("dna", p.host.dna);
      p.host.bind = h.value("bind", p.host.bind);
      p.host.unbind = h.value("unbind", p.host.unbind);
      p.host.k0 = h.value("k0", p.host.k0);
      p.host.gamma = h.value("gamma", p.host.gamma);
      p.host.delta = h.value("delta", p.host.delta);
    }
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed rre parameters: ") + e.what());
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("invalid rre parameters: ") + e.what());
  }
}

}  // namespace modid
