// qsa <scenario> --config <file> [--seed N] [--out DIR] [--mode M]
//     [--representation R] [--epsilon X]

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qsa/scenario.hpp"

namespace {

int report_failure(const std::filesystem::path& out_dir, qsa::ErrorKind kind,
                   const std::string& message) {
  const nlohmann::json doc = qsa::error_document(kind, message);
  std::cerr << doc.dump() << '\n';
  try {
    std::filesystem::create_directories(out_dir);
    qsa::write_json(out_dir / "error.json", doc);
  } catch (...) {
    // stderr already carries the document
  }
  return qsa::exit_code_for(kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum and classical annealing simulator"};
  std::string scenario;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> mode;
  std::optional<std::string> representation;
  std::optional<double> epsilon;

  app.add_option("scenario", scenario, "spectra | anneal-classical | anneal-quantum | sweep | "
                                       "verify | compare")
      ->required();
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--mode", mode, "randomization | pea")
      ->check(CLI::IsMember({"randomization", "pea"}));
  app.add_option("--representation", representation, "density | trajectory")
      ->check(CLI::IsMember({"density", "trajectory"}));
  app.add_option("--epsilon", epsilon, "target failure probability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qsa::exit_code_for(qsa::ErrorKind::config);
  }

  std::filesystem::path fallback_out = out_dir.value_or("qsa-out");
  try {
    const std::filesystem::path path(config_path);
    qsa::require(std::filesystem::exists(path), qsa::ErrorKind::config,
                 "config file " + config_path + " does not exist");
    nlohmann::json doc = qsa::read_json(path);
    qsa::require(doc.is_object(), qsa::ErrorKind::config, "config must be a JSON object");

    // Command-line flags win over config values; the manifest records the result.
    doc["scenario"] = scenario;
    if (seed) doc["seed"] = *seed;
    if (out_dir) doc["out_dir"] = *out_dir;
    if (mode) doc["mode"] = *mode;
    if (representation) doc["representation"] = *representation;
    if (epsilon) doc["epsilon"] = *epsilon;

    if (!out_dir && doc.contains("out_dir") && doc["out_dir"].is_string()) {
      fallback_out = doc["out_dir"].get<std::string>();
    }
    const qsa::ExperimentConfig config = qsa::parse_config(doc, path.parent_path());
    const qsa::ScenarioOutcome outcome = qsa::run_scenario(config);
    for (const std::string& file : outcome.files) {
      std::cout << (std::filesystem::path(config.out_dir) / file).string() << '\n';
    }
    if (outcome.exit_code == qsa::kVerifyFailedExit) {
      std::cerr << "verify: one or more checks failed, see checks.csv\n";
    }
    return outcome.exit_code;
  } catch (const qsa::Error& e) {
    return report_failure(fallback_out, e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_failure(fallback_out, qsa::ErrorKind::io, e.what());
  }
}
