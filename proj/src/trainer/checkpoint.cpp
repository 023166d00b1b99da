// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint layout:
//   { "kind": "modular" | "monolithic", "seed": u64, "epoch": n,
//     "networks": [ { "layer_sizes": [...], "output_transform": "identity",
//                     "weights": [[row-major layer 0], ...], "biases": [[...], ...] } ],
//     "theta_hat": [...], "learn_theta": bool }      (modular only)

#include "modid/checkpoint.hpp"

#include <algorithm>

#include "modid/error.hpp"

namespace modid {

void to_json(json& j, const MlpFunction& net) {
  json weights = json::array(), biases = json::array();
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weights(l);
    const auto b = net.biases(l);
    weights.push_back(std::vector<double>(w.begin(), w.end()));
    biases.push_back(std::vector<double>(b.begin(), b.end()));
  }
  j = json{{"layer_sizes",
            std::vector<std::size_t>(net.layer_sizes().begin(), net.layer_sizes().end())},
           {"output_transform",
            net.output_transform() == OutputTransform::softplus ? "softplus" : "identity"},
           {"weights", weights},
           {"biases", biases}};
}

void from_json(const json& j, MlpFunction& net) {
  const auto transform = j.value("output_transform", std::string("identity"));
  if (transform != "identity" && transform != "softplus")
    throw ConfigError("unknown output transform '" + transform + "'");
  net = MlpFunction(j.at("layer_sizes").get<std::vector<std::size_t>>(),
                    transform == "softplus" ? OutputTransform::softplus : OutputTransform::identity);
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != net.num_layers() || biases.size() != net.num_layers())
    throw ConfigError("checkpoint layer count does not match layer_sizes");
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto w = weights.at(l).get<std::vector<double>>();
    const auto b = biases.at(l).get<std::vector<double>>();
    if (w.size() != net.weights(l).size() || b.size() != net.biases(l).size())
      throw ConfigError("checkpoint layer " + std::to_string(l) + " has the wrong shape");
    std::copy(w.begin(), w.end(), net.weights(l).begin());
    std::copy(b.begin(), b.end(), net.biases(l).begin());
  }
}

json checkpoint_to_json(const Checkpoint& c) {
  json j{{"seed", c.seed}, {"epoch", c.epoch}};
  if (const auto* m = std::get_if<ModularModel>(&c.model)) {
    j["kind"] = "modular";
    j["networks"] = m->surrogates;
    j["theta_hat"] = m->theta_hat;
    j["learn_theta"] = m->learn_theta;
  } else {
    j["kind"] = "monolithic";
    j["networks"] = json::array({std::get<MonolithicModel>(c.model).net});
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    Checkpoint c;
    c.seed = j.value("seed", std::uint64_t{0});
    c.epoch = j.value("epoch", std::size_t{0});
    const auto kind = j.at("kind").get<std::string>();
    auto nets = j.at("networks").get<std::vector<MlpFunction>>();
    if (kind == "modular") {
      ModularModel m;
      m.surrogates = std::move(nets);
      m.theta_hat = j.at("theta_hat").get<std::vector<double>>();
      m.learn_theta = j.value("learn_theta", true);
      if (m.theta_hat.size() != m.surrogates.size())
        throw ConfigError("checkpoint needs one theta_hat per network");
      for (const auto& s : m.surrogates)
        if (s.input_width() != 1 || s.output_width() != 1)
          throw ConfigError("modular surrogates must map one input to one output");
      c.model = std::move(m);
    } else if (kind == "monolithic") {
      if (nets.size() != 1) throw ConfigError("monolithic checkpoint holds exactly one network");
      c.model = MonolithicModel{std::move(nets.front())};
    } else {
      throw ConfigError("unknown checkpoint kind '" + kind + "'");
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  } catch (const InvalidArchitecture& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_json(path, checkpoint_to_json(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_json(path));
}

}  // namespace modid
