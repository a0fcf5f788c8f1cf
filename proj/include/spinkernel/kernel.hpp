#pragma once

// Fidelity kernels between ground states, Gram matrices and nearest-neighbour
// fidelity scans.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spinkernel/ed.hpp"
#include "spinkernel/model.hpp"

namespace spinkernel::kernel {

enum class KernelKind { global, per_site };
enum class EngineKind { analytic, ed };
enum class Axis { h, delta };

std::string to_string(KernelKind k);
std::string to_string(EngineKind e);
std::string to_string(Axis a);
KernelKind parse_kind(const std::string& s);
EngineKind parse_engine(const std::string& s);
Axis parse_axis(const std::string& s);

// Point on the control axis with every other parameter taken from `base`.
ModelParams at(const ModelParams& base, Axis axis, double x);
double coordinate(const ModelParams& p, Axis axis);

// F^(1/N); the F = 0 limit is 0.
double per_site(double fidelity, int n_sites);
// Kernel value from log F without leaving the log domain first, so per-site
// values survive when F itself underflows.
double kernel_from_log(double log_fidelity, int n_sites, KernelKind kind);

struct Provenance {
  enum class Source { analytic, ed, swap_sampled };
  Source source = Source::analytic;
  std::uint64_t seed = 0;
  std::uint64_t shots = 0;
  bool sampled_diagonal = true;
};
std::string to_string(Provenance::Source s);

class FidelityEngine {
 public:
  virtual ~FidelityEngine() = default;
  virtual EngineKind kind() const = 0;
  // log |<psi(a)|psi(b)>|^2, -inf for orthogonal states.
  virtual double log_fidelity(const ModelParams& a, const ModelParams& b) = 0;
  // Optional bulk precomputation (ground states for the ED engine).
  virtual void prepare(std::span<const ModelParams> /*points*/) {}

  double fidelity(const ModelParams& a, const ModelParams& b);
  double kernel(const ModelParams& a, const ModelParams& b, KernelKind kind);
};

class AnalyticEngine final : public FidelityEngine {
 public:
  EngineKind kind() const override { return EngineKind::analytic; }
  double log_fidelity(const ModelParams& a, const ModelParams& b) override;
};

struct EdEngineOptions {
  double tol = 1e-9;
  ed::LanczosOptions lanczos{};
  int max_sites = kDefaultMaxSites;
  std::optional<std::filesystem::path> cache_dir;
  int threads = 0;
};

// Computes each ground state once and shares it read-only. Thread-safe.
class EdEngine final : public FidelityEngine {
 public:
  explicit EdEngine(EdEngineOptions options = {});

  EngineKind kind() const override { return EngineKind::ed; }
  double log_fidelity(const ModelParams& a, const ModelParams& b) override;
  void prepare(std::span<const ModelParams> points) override;

  std::shared_ptr<const ed::GroundState> state(const ModelParams& p);
  std::size_t states_solved() const;
  std::vector<std::shared_ptr<const ed::GroundState>> states() const;
  void clear();

 private:
  using Key = std::tuple<double, double, double, int, int>;
  static Key key_of(const ModelParams& p);
  std::shared_ptr<const ed::GroundState> solve(const ModelParams& p);

  EdEngineOptions options_;
  std::optional<ed::StateCache> disk_;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_ptr<const ed::GroundState>> states_;
  std::size_t solved_ = 0;
};

std::unique_ptr<FidelityEngine> make_engine(EngineKind kind, EdEngineOptions options = {});

struct GramMatrix {
  std::vector<ModelParams> points;
  Eigen::MatrixXd values;
  KernelKind kind = KernelKind::global;
  Provenance provenance;

  std::size_t size() const { return points.size(); }
};

// Upper triangle evaluated once (in parallel), mirrored, unit diagonal.
// All points must share N; the analytic engine further needs delta = 0 and a
// shared gamma.
GramMatrix gram(std::span<const ModelParams> points, KernelKind kind, FidelityEngine& engine,
                int threads = 0);

double min_eigenvalue(const Eigen::MatrixXd& values);

// Feature-space distance between two normalized embeddings with kernel k.
double feature_distance(double k);

struct FidelityScan {
  Axis axis = Axis::h;
  int n_sites = 0;
  KernelKind kind = KernelKind::global;
  double step = 0.0;
  std::vector<double> grid;
  std::vector<double> fidelities;  // F(x, x + step), or its per-site form
  std::size_t argmin_index = 0;
  double argmin = 0.0;             // pseudo-critical estimate
};

FidelityScan fidelity_scan(const ModelParams& base, Axis axis, std::span<const double> grid,
                           double step, FidelityEngine& engine,
                           KernelKind kind = KernelKind::global);

struct BenchmarkResult {
  std::vector<double> grid;
  std::vector<double> similarity;  // S(h, h_ref)
  std::vector<double> slope;       // central differences of S
  double estimate = 0.0;           // argmax |dS/dh|
};

// Training-free pseudo-critical field: argmax over the grid of |d S(h, h_ref) / dh|.
BenchmarkResult benchmark_critical(const ModelParams& base, double h_ref,
                                   std::span<const double> grid, KernelKind kind,
                                   FidelityEngine& engine);

// Inclusive grids.
std::vector<double> linspace(double lo, double hi, std::size_t count);
std::vector<double> arange(double lo, double hi, double step);

// Serialization. CSV: optional '#' preamble lines, then a header row of point
// coordinates along `axis` and row-major values.
void write_gram_csv(std::ostream& os, const GramMatrix& g, Axis axis,
                    const std::vector<std::string>& preamble = {});
nlohmann::json to_json(const ModelParams& p);
ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GramMatrix& g);
GramMatrix gram_from_json(const nlohmann::json& j);

}  // namespace spinkernel::kernel
