// Batch CLI. Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spinkernel/config.hpp"
#include "spinkernel/errors.hpp"
#include "spinkernel/pipeline.hpp"

namespace sk = spinkernel;

namespace {

struct Overrides {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> engine;
  std::optional<std::string> kind;
  std::optional<std::uint64_t> shots;
  std::vector<int> sizes;
};

// Precedence: flags > config file > preset defaults.
sk::config::RunConfig resolve(const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw sk::InvalidArgument("cannot open config file " + o.config_path);
    try {
      j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
      throw sk::InvalidArgument("config " + o.config_path + ": " + e.what());
    }
  }
  if (!o.preset.empty()) j["model"] = o.preset;
  if (o.engine) j["engine"] = *o.engine;
  if (o.kind) j["kind"] = *o.kind;
  if (o.seed) j["seed"] = *o.seed;
  if (o.out) j["out"] = *o.out;
  if (o.shots) j["shots"] = *o.shots;
  if (!o.sizes.empty()) j["sizes"] = o.sizes;
  return sk::config::from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fidelity-kernel SVM classification of spin-chain phase transitions"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--preset", o.preset, "ising | xy | xx | xxz | custom");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--engine", o.engine, "analytic | ed");
  app.add_option("--kind", o.kind, "global | per_site");
  app.add_option("--shots", o.shots, "SWAP-test shots per kernel entry");
  app.add_option("--sizes", o.sizes, "system sizes N");

  std::optional<std::string> input;
  auto* scan = app.add_subcommand("scan", "nearest-neighbour fidelity scans");
  auto* gram = app.add_subcommand("gram", "Gram matrices of the training windows");
  auto* sample = app.add_subcommand("sample", "SWAP-test sampled Gram matrices");
  auto* train = app.add_subcommand("train", "SVM training");
  auto* boundary = app.add_subcommand("boundary", "decision-boundary estimates");
  auto* bounds = app.add_subcommand("bounds", "ensemble statistics and shot bounds");
  auto* fit = app.add_subcommand("fit", "drift-law fits of pseudo-critical points");
  auto* pipeline = app.add_subcommand("pipeline", "all stages");
  sample->add_option("--in", input, "Gram JSON to sample")->check(CLI::ExistingFile);
  train->add_option("--in", input, "Gram JSON to train on")->check(CLI::ExistingFile);
  boundary->add_option("--in", input, "SVM JSON")->check(CLI::ExistingFile);
  bounds->add_option("--in", input, "Gram JSON")->check(CLI::ExistingFile);
  fit->add_option("--in", input, "CSV with columns N, estimate and optionally source")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    sk::pipeline::Pipeline p(resolve(o));
    if (scan->parsed()) p.write_scan();
    else if (gram->parsed()) p.write_gram();
    else if (sample->parsed()) p.write_sample(input);
    else if (train->parsed()) p.write_train(input);
    else if (boundary->parsed()) p.write_boundary(input);
    else if (bounds->parsed()) p.write_bounds(input);
    else if (fit->parsed()) p.write_fit(input);
    else if (pipeline->parsed()) p.run_all();
    p.write_manifest();
  } catch (const sk::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const sk::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
