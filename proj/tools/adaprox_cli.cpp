#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "adaprox/adaprox.h"

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kCheckFailed = 3 };

int exit_for(adaprox_status s) {
  if (s == ADAPROX_OK) return kOk;
  if (s == ADAPROX_E_NUMERICAL) return kNumerical;
  return kConfig;
}

int report_error(adaprox_status s) {
  std::cerr << "adaprox: " << adaprox_status_name(s) << " error: " << adaprox_last_error() << "\n";
  return exit_for(s);
}

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Overrides {
  std::optional<std::string> controller;
  std::optional<double> eta, beta, gamma, alpha, max_epochs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> jobs;

  void attach(CLI::App* app) {
    app->add_option("--controller", controller, "norm, ip, geometric or oracle")
        ->check(CLI::IsMember({"norm", "ip", "geometric", "oracle"}));
    app->add_option("--eta", eta, "norm-test eta");
    app->add_option("--beta", beta, "inner-product beta");
    app->add_option("--gamma", gamma, "geometric growth rate");
    app->add_option("--alpha", alpha, "fixed steplength (replaces the grid)");
    app->add_option("--seed", seed, "single seed (replaces the seed list)");
    app->add_option("--max-epochs", max_epochs, "sample budget in epochs");
    app->add_option("--out", out, "output directory");
    app->add_option("--jobs", jobs, "parallel sweep cells");
  }

  std::string to_json() const {
    nlohmann::json j = nlohmann::json::object();
    if (controller) j["controller"] = *controller;
    if (eta) j["eta"] = *eta;
    if (beta) j["beta"] = *beta;
    if (gamma) j["gamma"] = *gamma;
    if (alpha) j["alpha"] = *alpha;
    if (max_epochs) j["max_epochs"] = *max_epochs;
    if (seed) j["seed"] = *seed;
    if (out) j["out"] = *out;
    if (jobs) j["jobs"] = *jobs;
    return j.dump();
  }
};

int with_string(adaprox_status s, char* text) {
  if (text) {
    std::cout << text << "\n";
    adaprox_string_free(text);
  }
  return s == ADAPROX_OK ? kOk : report_error(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive sampling proximal gradient experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(adaprox_version()));

  std::string config_path;
  Overrides overrides;

  auto* run = app.add_subcommand("run", "run a controller x steplength x seed sweep");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  overrides.attach(run);

  auto* reference = app.add_subcommand("reference", "compute phi* for a config");
  reference->add_option("config", config_path, "experiment config (JSON)")->required();
  reference->add_option("--out", overrides.out, "output directory");

  std::string directory;
  auto* emit = app.add_subcommand("emit", "write long-format plot CSVs from a run directory");
  emit->add_option("directory", directory, "artifact directory of a run")->required();

  std::string suite;
  std::string options = "{}";
  std::optional<std::size_t> seeds;
  auto* verify = app.add_subcommand("verify", "run a verification suite and print its JSON report");
  verify->add_option("suite", suite, "linear, sublinear, eq_test or figure1")
      ->required()
      ->check(CLI::IsMember({"linear", "sublinear", "eq_test", "figure1"}));
  verify->add_option("--options", options, "suite options as a JSON object");
  verify->add_option("--seeds", seeds, "number of seeds for rate suites");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed() || reference->parsed()) {
    const auto text = slurp(config_path);
    if (!text) {
      std::cerr << "adaprox: cannot read config " << config_path << "\n";
      return kConfig;
    }
    const std::string ov = overrides.to_json();
    char* out = nullptr;
    if (run->parsed()) return with_string(adaprox_run_experiment(text->c_str(), ov.c_str(), &out), out);
    return with_string(adaprox_compute_reference(text->c_str(), ov.c_str(), &out), out);
  }

  if (emit->parsed()) {
    char* out = nullptr;
    return with_string(adaprox_emit_plot_data(directory.c_str(), &out), out);
  }

  nlohmann::json opts;
  try {
    opts = nlohmann::json::parse(options);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "adaprox: --options: " << e.what() << "\n";
    return kConfig;
  }
  if (seeds) opts["seeds"] = *seeds;
  char* report = nullptr;
  int passed = 0;
  const adaprox_status s = adaprox_verify(suite.c_str(), opts.dump().c_str(), &report, &passed);
  const int code = with_string(s, report);
  if (code != kOk) return code;
  return passed ? kOk : kCheckFailed;
}
