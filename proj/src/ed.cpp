#include "spinkernel/ed.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "spinkernel/errors.hpp"

namespace spinkernel::ed {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr int kRestartKeep = 3;
constexpr int kCheckInterval = 8;

int choose_basis_size(std::size_t dim, const LanczosOptions& opt) {
  std::size_t m = opt.max_basis > 0 ? static_cast<std::size_t>(opt.max_basis)
                                    : opt.memory_budget_bytes / (sizeof(double) * dim);
  m = std::clamp<std::size_t>(m, 12, 300);
  return static_cast<int>(std::min(m, dim));
}

VectorXd start_vector(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  v /= v.norm();
  return v;
}

void apply(const HamiltonianOperator& H, const VectorXd& in, VectorXd& out) {
  H.apply(std::span<const double>(in.data(), static_cast<std::size_t>(in.size())),
          std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
}

// Sign convention: the largest-magnitude amplitude is positive.
void fix_sign(VectorXd& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v[k] < 0) v = -v;
}

// Lowest eigenvalue of H restricted to the complement of x0. Picks up an
// exactly degenerate partner that the main Krylov space cannot contain.
double deflated_second(const HamiltonianOperator& H, const VectorXd& x0, const LanczosOptions& opt,
                       int& matvecs) {
  const auto n = x0.size();
  const int m = std::min(choose_basis_size(static_cast<std::size_t>(n), opt), static_cast<int>(n) - 1);
  MatrixXd V(n, m);
  MatrixXd T = MatrixXd::Zero(m, m);
  VectorXd v = start_vector(static_cast<std::size_t>(n), opt.seed ^ 0x9e3779b97f4a7c15ULL);
  v -= x0 * x0.dot(v);
  V.col(0) = v / v.norm();
  VectorXd w(n);
  double estimate = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    apply(H, V.col(j), w);
    ++matvecs;
    for (int pass = 0; pass < 2; ++pass) {
      w -= x0 * x0.dot(w);
      const auto basis = V.leftCols(j + 1);
      const VectorXd c = basis.transpose() * w;
      w.noalias() -= basis * c;
      for (int i = 0; i <= j; ++i) {
        T(i, j) += c[i];
        if (i != j) T(j, i) = T(i, j);
      }
    }
    const double beta = w.norm();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(T.topLeftCorner(j + 1, j + 1));
    estimate = eig.eigenvalues()[0];
    const double res = beta * std::abs(eig.eigenvectors()(j, 0));
    if (beta < 1e-13 * std::max(1.0, std::abs(T(j, j))) || res < 1e-6 || j + 1 == m) break;
    V.col(j + 1) = w / beta;
  }
  return estimate;
}

GroundState finish(const HamiltonianOperator& H, VectorXd x, double second, int matvecs,
                   const LanczosOptions& opt) {
  x /= x.norm();
  fix_sign(x);
  if (x.size() > 1) second = std::min(second, deflated_second(H, x, opt, matvecs));
  VectorXd hx(x.size());
  apply(H, x, hx);
  GroundState gs;
  gs.params = H.params();
  gs.energy = x.dot(hx);
  gs.residual = (hx - gs.energy * x).norm();
  gs.gap = std::isfinite(second) ? second - gs.energy : 0.0;
  gs.degenerate = std::isfinite(second) && gs.gap < 1e-10 * std::abs(gs.energy);
  gs.matvecs = matvecs + 1;
  gs.amplitudes.assign(x.data(), x.data() + x.size());
  return gs;
}

}  // namespace

GroundState ground_state(const HamiltonianOperator& H, double tol, const LanczosOptions& opt) {
  if (!(tol > 0.0 && tol <= 1e-4)) throw InvalidArgument("ground_state: tol must lie in (0, 1e-4]");
  const std::size_t dim = H.dimension();
  if (dim == 1) {
    VectorXd x = VectorXd::Ones(1);
    return finish(H, x, std::numeric_limits<double>::infinity(), 0, opt);
  }

  const int m = choose_basis_size(dim, opt);
  const auto n = static_cast<Eigen::Index>(dim);
  MatrixXd V(n, m + 1);
  MatrixXd T = MatrixXd::Zero(m + 1, m + 1);
  V.col(0) = start_vector(dim, opt.seed);

  VectorXd w(n);
  int j = 0;  // column being expanded
  int matvecs = 0;
  int since_check = 0;

  while (true) {
    apply(H, V.col(j), w);
    ++matvecs;
    ++since_check;

    const auto basis = V.leftCols(j + 1);
    const double norm_before = w.norm();
    VectorXd c = basis.transpose() * w;
    w.noalias() -= basis * c;
    if (w.norm() < 0.7071 * norm_before) {
      // Heavy cancellation: one more Gram-Schmidt pass.
      VectorXd c2 = basis.transpose() * w;
      w.noalias() -= basis * c2;
    }
    for (int i = 0; i <= j; ++i) {
      T(i, j) = c[i];
      T(j, i) = c[i];
    }
    const double beta = w.norm();
    const double scale = std::max(1.0, std::abs(T(j, j)));
    const bool invariant = beta < 1e-13 * scale;
    const bool full = (j + 1 == m);
    const bool exhausted = matvecs >= opt.max_iterations;

    if (invariant || full || exhausted || since_check >= kCheckInterval) {
      since_check = 0;
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(T.topLeftCorner(j + 1, j + 1));
      const VectorXd& theta = eig.eigenvalues();
      const MatrixXd& S = eig.eigenvectors();
      const double res0 = invariant ? 0.0 : std::abs(beta * S(j, 0));
      const double second = j >= 1 ? theta[1] : std::numeric_limits<double>::infinity();

      if (res0 <= tol) {
        GroundState gs = finish(H, basis * S.col(0), second, matvecs, opt);
        if (gs.residual <= tol) return gs;
        // Estimated and explicit residuals disagree: fall through to a restart.
      }
      if (exhausted) {
        throw NumericalFailure("Lanczos did not converge for " + describe(H.params()) +
                               " after " + std::to_string(matvecs) +
                               " matvecs (residual " + std::to_string(res0) + ")");
      }
      if (full || invariant || res0 <= tol) {
        const int keep = std::min(kRestartKeep, j);
        MatrixXd ritz = basis * S.leftCols(std::max(keep, 1));
        const int kept = static_cast<int>(ritz.cols());
        T.setZero();
        for (int l = 0; l < kept; ++l) {
          V.col(l) = ritz.col(l);
          T(l, l) = theta[l];
        }
        if (invariant) {
          // Krylov space closed; continue from a fresh direction orthogonal to the kept vectors.
          VectorXd r = start_vector(dim, opt.seed + static_cast<std::uint64_t>(matvecs));
          const auto kb = V.leftCols(kept);
          r -= kb * (kb.transpose() * r);
          r -= kb * (kb.transpose() * r);
          V.col(kept) = r / r.norm();
        } else {
          V.col(kept) = w / beta;
          for (int l = 0; l < kept; ++l) {
            T(l, kept) = beta * S(j, l);
            T(kept, l) = T(l, kept);
          }
        }
        j = kept;
        continue;
      }
    }

    V.col(j + 1) = w / beta;
    T(j + 1, j) = beta;
    T(j, j + 1) = beta;
    ++j;
  }
}

double fidelity_ed(const GroundState& a, const GroundState& b) {
  if (a.params.n_sites != b.params.n_sites) {
    throw InvalidArgument("fidelity_ed: states have different N");
  }
  const ParitySector sa = a.params.sector;
  const ParitySector sb = b.params.sector;
  double overlap = 0.0;
  if (sa == sb && a.params.zero_momentum == b.params.zero_momentum) {
    if (a.amplitudes.size() != b.amplitudes.size()) {
      throw InvalidArgument("fidelity_ed: dimension mismatch");
    }
    Eigen::Map<const VectorXd> va(a.amplitudes.data(), static_cast<Eigen::Index>(a.amplitudes.size()));
    Eigen::Map<const VectorXd> vb(b.amplitudes.data(), static_cast<Eigen::Index>(b.amplitudes.size()));
    overlap = va.dot(vb);
  } else if (sa != sb && sa != ParitySector::full && sb != ParitySector::full) {
    return 0.0;
  } else {
    // Different bases: expand each basis vector of `a` into computational states.
    const HamiltonianOperator ha(a.params), hb(b.params);
    if (a.amplitudes.size() != ha.dimension() || b.amplitudes.size() != hb.dimension()) {
      throw InvalidArgument("fidelity_ed: dimension mismatch");
    }
    const int n = a.params.n_sites;
    for (std::size_t i = 0; i < a.amplitudes.size(); ++i) {
      const std::uint64_t rep = ha.state_of(i);
      const int copies = a.params.zero_momentum ? orbit_size(rep, n) : 1;
      std::uint64_t s = rep;
      double acc = 0.0;
      for (int t = 0; t < copies; ++t) {
        if (hb.in_sector(s)) acc += b.amplitudes[hb.index_of(s)] * hb.basis_weight(s);
        s = translate_state(s, n);
      }
      overlap += a.amplitudes[i] * ha.basis_weight(rep) * acc;
    }
  }
  return std::min(1.0, overlap * overlap);
}

}  // namespace spinkernel::ed
