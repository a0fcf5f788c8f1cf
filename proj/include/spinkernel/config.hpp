#pragma once

// Run configuration: a single JSON document. Missing fields take preset
// defaults; unknown fields are rejected. Command-line flags override both.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinkernel/kernel.hpp"
#include "spinkernel/resources.hpp"

namespace spinkernel::config {

struct Window {
  double lo = 0.0;
  double hi = 0.0;
};

struct ScanSettings {
  double lo = 0.8;
  double hi = 1.2;
  double grid_step = 0.002;
  double dx = 0.01;
};

struct BenchmarkSettings {
  double h_ref = 1.75;
  double lo = 0.5;
  double hi = 1.5;
  double step = 1e-4;
};

struct EdSettings {
  double tol = 1e-9;
  int max_sites = kDefaultMaxSites;
  std::optional<std::string> cache_dir;
  int threads = 0;
};

struct RunConfig {
  std::string model = "ising";  // ising | xy | xx | xxz | custom
  double gamma = 1.0;
  double delta = 0.0;
  double h = 0.0;
  kernel::Axis axis = kernel::Axis::h;
  Window left{0.7, 0.95};
  Window right{1.05, 1.3};
  std::size_t points_per_side = 16;
  std::vector<int> sizes;
  kernel::EngineKind engine = kernel::EngineKind::analytic;
  kernel::KernelKind kind = kernel::KernelKind::global;
  std::string sector = "auto";  // auto | full | even | odd
  bool zero_momentum = true;
  ScanSettings scan;
  std::optional<BenchmarkSettings> benchmark;
  std::uint64_t shots = 0;  // 0 skips the sampling stages
  bool sample_diagonal = true;
  resources::BoundParams bounds;
  bool include_diagonal = false;
  kernel::KernelKind stats_kind = kernel::KernelKind::global;
  std::size_t histogram_bins = 20;
  double C = 1e6;
  std::optional<Window> bracket;  // default: [left.lo, right.hi]
  std::string fit = "auto";       // auto | power | bkt | none
  std::uint64_t seed = 0;
  std::string out = "out";
  EdSettings ed;

  // Throws InvalidArgument with a message naming the offending field.
  void validate() const;
  // Base point for size N with the resolved parity sector.
  ModelParams base(int n_sites) const;
  ParitySector resolved_sector() const;
  std::string resolved_fit() const;
  Window resolved_bracket() const;
};

// Preset defaults for a model name.
RunConfig preset(const std::string& model);

RunConfig from_json(const nlohmann::json& j);
RunConfig load(const std::string& path);
// Fully resolved, canonical form; its compact dump is what gets hashed.
nlohmann::json to_json(const RunConfig& c);
std::string config_hash(const RunConfig& c);

}  // namespace spinkernel::config
