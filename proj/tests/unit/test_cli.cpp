// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <sys/wait.h>

#include "modid/error.hpp"
#include "modid/experiment.hpp"

using namespace modid;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / "modid_tests" / "cli" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(MODID_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("presets") {
  CHECK(preset_names() == std::vector<std::string>{"fig3", "fig4", "fig5", "rre_check"});

  const auto f3 = preset("fig3");
  CHECK(f3.kind == ExperimentKind::single_module);
  CHECK(f3.modules == 1);
  CHECK(f3.points_per_module == 100);
  CHECK(f3.epochs == 1000);
  CHECK(f3.learning_rate == 0.1);
  CHECK(f3.arch.hidden_width == 20);
  CHECK(f3.arch.hidden_layers == 4);

  const auto f4 = preset("fig4");
  CHECK(f4.kind == ExperimentKind::two_module_modular);
  CHECK(f4.epochs == 84000);
  CHECK(f4.learning_rate == 0.005);
  CHECK(f4.arch.theta_init == 3.0);
  CHECK(f4.arch.learn_theta);

  const auto f5 = preset("fig5");
  CHECK(f5.kind == ExperimentKind::two_module_monolithic);
  CHECK(f5.mono_width == 50);
  CHECK(f5.mono_layers == 4);
  CHECK(f5.mono_epochs == 8000);
  CHECK(f5.mono_learning_rate == 0.001);
  CHECK(f5.grid_points == 100);
  CHECK(f5.compare_modular);

  CHECK(preset("rre_check").kind == ExperimentKind::rre);
  CHECK_THROWS_AS(preset("fig9"), ConfigError);
  for (const auto& n : preset_names()) CHECK_NOTHROW(validate(preset(n)));
}

TEST_CASE("config json") {
  auto c = preset("fig5");
  c.seed = 17;
  c.arch.transform = OutputTransform::softplus;
  c.sweep_factors = {3.0};
  const auto back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));

  const auto overlay = config_from_json(json::parse(R"({"preset": "fig3", "epochs": 10})"));
  CHECK(overlay.kind == ExperimentKind::single_module);
  CHECK(overlay.epochs == 10);
  CHECK(overlay.learning_rate == 0.1);

  CHECK_THROWS_AS(config_from_json(json::parse(R"({"epoch": 10})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"epochs": "ten"})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"kind": "other"})")), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::parse("[1]")), ConfigError);
  for (const auto& k : {"single_module", "rre", "grad_check"}) CHECK(to_string(parse_kind(k)) == k);
}

TEST_CASE("validation") {
  ExperimentConfig c;
  c.modules = 3;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = preset("fig4");
  c.epochs = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = preset("fig4");
  c.dataset = "/nonexistent/data.csv";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = ExperimentConfig{};
  c.kind = ExperimentKind::recover;
  c.probes1 = {0.2};
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("metrics csv header") {
  const auto dir = scratch("metrics");
  fs::create_directories(dir);
  MetricsRecord r;
  r.epoch = 3;
  r.E_G = {0.1, 0.2};
  write_metrics_csv(dir / "m.csv", {r}, 2);
  const auto text = slurp(dir / "m.csv");
  CHECK(text.rfind("epoch,loss,E_G1,E_G2,E_f1,E_f2,E_theta1,E_theta2\n", 0) == 0);
}

TEST_CASE("exit codes") {
  CHECK(cli("--bogus-flag") == exit_config);
  CHECK(cli("") == exit_config);
  CHECK(cli("preset fig9") == exit_config);

  const auto missing = scratch("missing");
  CHECK(cli("--out " + missing.string() + " train --data /nonexistent.csv") == exit_config);
  CHECK_FALSE(fs::exists(missing));

  const auto modules = scratch("modules");
  CHECK(cli("--out " + modules.string() + " train --modules 3") == exit_config);

  const auto degenerate = scratch("degenerate");
  CHECK(cli("--out " + degenerate.string() + " recover --probes2 0.5 0.5") == exit_numerical);
  CHECK(fs::exists(degenerate / "diagnostic.json"));
  CHECK(read_json(degenerate / "diagnostic.json")["detail"]["module"] == 2);
  CHECK(read_json(degenerate / "manifest.json")["exit_code"] == exit_numerical);

  const auto ok = scratch("ok");
  CHECK(cli("--out " + ok.string() + " counterexample --points 50") == exit_ok);
  CHECK(fs::exists(ok / "counterexample.csv"));
  const auto manifest = read_json(ok / "manifest.json");
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["config"]["ce_points"] == 50);
}

TEST_CASE("config file and flag precedence") {
  const auto dir = scratch("precedence");
  fs::create_directories(dir);
  write_json(dir / "cfg.json", json{{"epochs", 30}, {"learning_rate", 0.05}});
  const auto out = dir / "run";
  CHECK(cli("--out " + out.string() + " --config " + (dir / "cfg.json").string() +
            " train --modules 1 --epochs 20 --fixed-theta --theta-init 1") == exit_ok);
  const auto cfg = read_json(out / "manifest.json")["config"];
  CHECK(cfg["epochs"] == 20);
  CHECK(cfg["learning_rate"] == 0.05);
  CHECK(cfg["learn_theta"] == false);
}

TEST_CASE("reruns are byte-identical") {
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  const std::string args = " --seed 5 --log-stride 5 train --modules 1 --epochs 40 --fixed-theta --theta-init 1";
  REQUIRE(cli("--out " + a.string() + args) == exit_ok);
  REQUIRE(cli("--out " + b.string() + args) == exit_ok);
  for (const auto* f : {"dataset.csv", "metrics.csv", "checkpoint.json", "f_comparison.csv", "theta_hat.json"}) {
    INFO(f);
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }

  const auto r1 = scratch("rre_a"), r2 = scratch("rre_b");
  REQUIRE(cli("--out " + r1.string() + " simulate-rre --points 4 --factors 1 1000") == exit_ok);
  REQUIRE(cli("--out " + r2.string() + " simulate-rre --points 4 --factors 1 1000") == exit_ok);
  CHECK(slurp(r1 / "steady_state.csv") == slurp(r2 / "steady_state.csv"));
  CHECK(slurp(r1 / "reduction_report.json") == slurp(r2 / "reduction_report.json"));
}

TEST_CASE("generated data can be trained on") {
  const auto dir = scratch("gen");
  REQUIRE(cli("--out " + dir.string() + " --seed 3 gen-data --modules 2 --points 10") == exit_ok);
  const auto run = scratch("gen_train");
  CHECK(cli("--out " + run.string() + " train --data " + (dir / "dataset.csv").string() +
            " --truth " + (dir / "truth.json").string() + " --epochs 5") == exit_ok);
  CHECK(fs::exists(run / "metrics.csv"));
}
