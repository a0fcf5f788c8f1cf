#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spinkernel/model.hpp"

namespace spinkernel::ed {

inline constexpr std::uint64_t kDefaultLanczosSeed = 0x5eed5eed2024ULL;

struct GroundState {
  ModelParams params;
  std::vector<double> amplitudes;  // sector basis of HamiltonianOperator, unit norm
  double energy = 0.0;             // Rayleigh quotient of `amplitudes`
  double gap = 0.0;                // second Ritz value minus first; diagnostic only
  bool degenerate = false;         // gap < 1e-10 |E0|
  double residual = 0.0;           // ||H psi - E psi||
  int matvecs = 0;
};

struct LanczosOptions {
  int max_iterations = 2000;  // matrix-vector products
  // Krylov basis size before a thick restart; 0 picks it from memory_budget_bytes.
  int max_basis = 0;
  std::size_t memory_budget_bytes = std::size_t{512} << 20;
  std::uint64_t seed = kDefaultLanczosSeed;
};

// Lowest eigenpair by thick-restart Lanczos with full reorthogonalization.
// `tol` bounds the residual norm ||H psi - E psi|| and must lie in (0, 1e-4].
// Throws NumericalFailure when max_iterations is exhausted.
GroundState ground_state(const HamiltonianOperator& H, double tol = 1e-9,
                         const LanczosOptions& options = {});

// |<a|b>|^2. States from different parity sectors are orthogonal unless one
// of them lives in the full space.
double fidelity_ed(const GroundState& a, const GroundState& b);

// Binary amplitude cache: one file per (gamma, delta, h, N, sector, tol), a
// 64-byte little-endian header followed by the amplitudes as float64 LE.
class StateCache {
 public:
  explicit StateCache(std::filesystem::path dir);

  std::filesystem::path path_for(const ModelParams& p, double tol) const;
  std::optional<GroundState> load(const ModelParams& p, double tol) const;
  void store(const GroundState& gs, double tol) const;

 private:
  std::filesystem::path dir_;
};

void write_state(const std::filesystem::path& file, const GroundState& gs, double tol);
GroundState read_state(const std::filesystem::path& file);

}  // namespace spinkernel::ed
