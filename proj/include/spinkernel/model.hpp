#pragma once

// Anisotropic spin-1/2 chain with periodic boundary conditions:
//
//   H = -sum_i [ (1+g)/2 XX + (1-g)/2 YY + D ZZ ]_(i,i+1) - h sum_i Z_i
//
// Basis convention shared by every module: bit i of a basis index is site
// i+1 (site 1 is the least-significant bit), bit 0 <-> sigma^z = +1.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace spinkernel {

// Eigenspace of the bit parity P = prod_i sigma^z_i, which commutes with H
// for every (gamma, delta, h). `even` is the sector described by the
// free-fermion solution (antiperiodic fermions).
enum class ParitySector { full, even, odd };

std::string_view to_string(ParitySector s);
ParitySector parse_sector(std::string_view s);

struct ModelParams {
  double gamma = 1.0;
  double delta = 0.0;
  double h = 0.0;
  int n_sites = 4;
  ParitySector sector = ParitySector::even;
  // Restrict further to translation-invariant (zero-momentum) states. Every
  // off-diagonal element of H is <= 0, so each parity block's ground state
  // lives there.
  bool zero_momentum = false;

  // Throws InvalidArgument unless N is even and >= 4, gamma in [0,1], h >= 0.
  void validate() const;

  ModelParams with_h(double value) const;
  ModelParams with_delta(double value) const;
  ModelParams with_sites(int n) const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

std::string describe(const ModelParams& p);

inline constexpr int kDefaultMaxSites = 24;

// Hamiltonian restricted to a parity sector, matrix-free in the computational
// basis. With zero_momentum the basis is |r> = R^(-1/2) sum_t T^t |s_r> over
// orbit representatives s_r (the smallest rotation) and a sparse matrix is
// built once. Immutable; apply() is reentrant and allocation-free.
class HamiltonianOperator {
 public:
  HamiltonianOperator(const ModelParams& params, int max_sites = kDefaultMaxSites);

  const ModelParams& params() const { return params_; }
  std::size_t dimension() const { return dim_; }

  // Computational-basis state (bit string) of sector index i, and back. In
  // the zero-momentum basis state_of gives the orbit representative and
  // index_of accepts any member of the orbit.
  std::uint64_t state_of(std::size_t index) const;
  std::size_t index_of(std::uint64_t state) const;
  bool in_sector(std::uint64_t state) const;

  // Coefficient of computational-basis state s in basis vector index_of(s).
  double basis_weight(std::uint64_t state) const;

  double diagonal(std::uint64_t state) const;

  // out = H * in. Both spans must have length dimension() and must not alias.
  void apply(std::span<const double> in, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> in) const;

  // Dense matrix for oracle tests; refuses dimensions above 2^12.
  Eigen::MatrixXd dense() const;

 private:
  ModelParams params_;
  int n_ = 0;
  std::size_t dim_ = 0;
  std::uint64_t full_mask_ = 0;
  std::uint64_t low_mask_ = 0;

  struct MomentumBasis {
    std::vector<std::uint64_t> reps;
    std::vector<double> sqrt_orbit;
    std::vector<std::size_t> row_ptr;
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
  };
  std::shared_ptr<const MomentumBasis> momentum_;
  std::uint64_t representative(std::uint64_t state) const;
};

HamiltonianOperator build_hamiltonian(const ModelParams& params,
                                      int max_sites = kDefaultMaxSites);

// Cyclic shift of a basis state by one site (site i -> site i+1).
std::uint64_t translate_state(std::uint64_t state, int n_sites);
// Number of distinct translates of `state`.
int orbit_size(std::uint64_t state, int n_sites);

}  // namespace spinkernel
