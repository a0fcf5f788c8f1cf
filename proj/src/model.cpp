#include "spinkernel/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "spinkernel/errors.hpp"

namespace spinkernel {

std::string_view to_string(ParitySector s) {
  switch (s) {
    case ParitySector::full: return "full";
    case ParitySector::even: return "even";
    case ParitySector::odd: return "odd";
  }
  return "full";
}

ParitySector parse_sector(std::string_view s) {
  if (s == "full") return ParitySector::full;
  if (s == "even") return ParitySector::even;
  if (s == "odd") return ParitySector::odd;
  throw InvalidArgument("unknown parity sector '" + std::string(s) + "'");
}

void ModelParams::validate() const {
  if (n_sites < 4 || n_sites % 2 != 0) {
    throw InvalidArgument("n_sites must be an even integer >= 4, got " +
                          std::to_string(n_sites));
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw InvalidArgument("gamma must lie in [0,1]");
  }
  if (!(h >= 0.0) || !std::isfinite(h)) {
    throw InvalidArgument("transverse field h must be finite and >= 0");
  }
  if (!std::isfinite(delta)) throw InvalidArgument("delta must be finite");
}

ModelParams ModelParams::with_h(double value) const {
  ModelParams p = *this;
  p.h = value;
  return p;
}

ModelParams ModelParams::with_delta(double value) const {
  ModelParams p = *this;
  p.delta = value;
  return p;
}

ModelParams ModelParams::with_sites(int n) const {
  ModelParams p = *this;
  p.n_sites = n;
  return p;
}

std::string describe(const ModelParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "(gamma=" << p.gamma << ", delta=" << p.delta << ", h=" << p.h
     << ", N=" << p.n_sites << ", sector=" << to_string(p.sector)
     << (p.zero_momentum ? ", k=0" : "") << ")";
  return os.str();
}

HamiltonianOperator::HamiltonianOperator(const ModelParams& params, int max_sites)
    : params_(params), n_(params.n_sites) {
  params.validate();
  if (n_ > max_sites) {
    throw InvalidArgument("N=" + std::to_string(n_) + " exceeds the configured memory cap N<=" +
                          std::to_string(max_sites));
  }
  full_mask_ = (std::uint64_t{1} << n_) - 1;
  low_mask_ = (std::uint64_t{1} << (n_ - 1)) - 1;
  dim_ = params.sector == ParitySector::full ? (std::size_t{1} << n_)
                                             : (std::size_t{1} << (n_ - 1));
  if (!params.zero_momentum) return;

  auto basis = std::make_shared<MomentumBasis>();
  for (std::uint64_t s = 0; s <= full_mask_; ++s) {
    if (!in_sector(s) || representative(s) != s) continue;
    basis->reps.push_back(s);
    basis->sqrt_orbit.push_back(std::sqrt(static_cast<double>(orbit_size(s, n_))));
  }
  dim_ = basis->reps.size();
  momentum_ = basis;  // index_of below needs the representatives

  // H|r> = sum_s' h(r -> s') sqrt(R_r / R_r') |r'>.
  const double amp[2] = {-1.0, -params_.gamma};
  basis->row_ptr.reserve(dim_ + 1);
  basis->row_ptr.push_back(0);
  std::vector<std::pair<std::uint32_t, double>> row;
  for (std::size_t i = 0; i < dim_; ++i) {
    const std::uint64_t s = basis->reps[i];
    row.clear();
    row.emplace_back(static_cast<std::uint32_t>(i), diagonal(s));
    const std::uint64_t antiparallel = s ^ ((s >> 1) | ((s & 1) << (n_ - 1)));
    for (int b = 0; b < n_; ++b) {
      const bool aligned = ((antiparallel >> b) & 1) == 0;
      if (aligned && params_.gamma == 0.0) continue;
      const int c = (b + 1 == n_) ? 0 : b + 1;
      const std::uint64_t flipped = s ^ ((std::uint64_t{1} << b) | (std::uint64_t{1} << c));
      const std::size_t j = index_of(flipped);
      row.emplace_back(static_cast<std::uint32_t>(j),
                       amp[aligned] * basis->sqrt_orbit[i] / basis->sqrt_orbit[j]);
    }
    std::sort(row.begin(), row.end());
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k > 0 && row[k].first == row[k - 1].first) {
        basis->vals.back() += row[k].second;
        continue;
      }
      basis->cols.push_back(row[k].first);
      basis->vals.push_back(row[k].second);
    }
    basis->row_ptr.push_back(basis->cols.size());
  }
}

std::uint64_t HamiltonianOperator::representative(std::uint64_t state) const {
  std::uint64_t best = state, t = state;
  for (int k = 1; k < n_; ++k) {
    t = translate_state(t, n_);
    best = std::min(best, t);
  }
  return best;
}

std::uint64_t HamiltonianOperator::state_of(std::size_t index) const {
  if (momentum_) return momentum_->reps.at(index);
  const auto i = static_cast<std::uint64_t>(index);
  switch (params_.sector) {
    case ParitySector::full: return i;
    case ParitySector::even:
      return i | (static_cast<std::uint64_t>(std::popcount(i) & 1) << (n_ - 1));
    case ParitySector::odd:
      return i | (static_cast<std::uint64_t>((std::popcount(i) & 1) ^ 1) << (n_ - 1));
  }
  return i;
}

std::size_t HamiltonianOperator::index_of(std::uint64_t state) const {
  if (momentum_) {
    const std::uint64_t r = representative(state);
    const auto it = std::lower_bound(momentum_->reps.begin(), momentum_->reps.end(), r);
    if (it == momentum_->reps.end() || *it != r) {
      throw InvalidArgument("index_of: state outside the sector");
    }
    return static_cast<std::size_t>(it - momentum_->reps.begin());
  }
  if (params_.sector == ParitySector::full) return static_cast<std::size_t>(state);
  return static_cast<std::size_t>(state & low_mask_);
}

bool HamiltonianOperator::in_sector(std::uint64_t state) const {
  if (state > full_mask_) return false;
  const int parity = std::popcount(state) & 1;
  switch (params_.sector) {
    case ParitySector::full: return true;
    case ParitySector::even: return parity == 0;
    case ParitySector::odd: return parity == 1;
  }
  return false;
}

double HamiltonianOperator::basis_weight(std::uint64_t state) const {
  if (!in_sector(state)) return 0.0;
  if (!momentum_) return 1.0;
  return 1.0 / momentum_->sqrt_orbit[index_of(state)];
}

double HamiltonianOperator::diagonal(std::uint64_t s) const {
  const std::uint64_t shifted = (s >> 1) | ((s & 1) << (n_ - 1));
  const int broken_bonds = std::popcount(s ^ shifted);
  const double zz = static_cast<double>(n_ - 2 * broken_bonds);
  const double mz = static_cast<double>(n_ - 2 * std::popcount(s));
  return -params_.delta * zz - params_.h * mz;
}

namespace {

template <ParitySector S>
void apply_sector(const ModelParams& p, std::size_t dim, std::uint64_t low_mask,
                  const double* in, double* out) {
  const int n = p.n_sites;
  // XX+YY hops an antiparallel pair with amplitude -1; XX-YY flips an aligned
  // pair with amplitude -gamma.
  const double amp[2] = {-1.0, -p.gamma};
  const bool pairs = p.gamma != 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    std::uint64_t s = i;
    if constexpr (S == ParitySector::even) {
      s |= static_cast<std::uint64_t>(std::popcount(s) & 1) << (n - 1);
    } else if constexpr (S == ParitySector::odd) {
      s |= static_cast<std::uint64_t>((std::popcount(s) & 1) ^ 1) << (n - 1);
    }
    const std::uint64_t shifted = (s >> 1) | ((s & 1) << (n - 1));
    const std::uint64_t antiparallel = s ^ shifted;  // bit b: sites b and b+1 differ
    const double zz = static_cast<double>(n - 2 * std::popcount(antiparallel));
    const double mz = static_cast<double>(n - 2 * std::popcount(s));
    double acc = (-p.delta * zz - p.h * mz) * in[i];
    for (int b = 0; b < n; ++b) {
      const bool aligned = ((antiparallel >> b) & 1) == 0;
      if (aligned && !pairs) continue;
      const int c = (b + 1 == n) ? 0 : b + 1;
      std::uint64_t flipped = s ^ ((std::uint64_t{1} << b) | (std::uint64_t{1} << c));
      if constexpr (S != ParitySector::full) flipped &= low_mask;
      acc += amp[aligned] * in[flipped];
    }
    out[i] = acc;
  }
}

}  // namespace

void HamiltonianOperator::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != dim_ || out.size() != dim_) {
    throw InvalidArgument("apply: vector length does not match Hilbert-space dimension " +
                          std::to_string(dim_));
  }
  if (momentum_) {
    const auto& m = *momentum_;
    for (std::size_t i = 0; i < dim_; ++i) {
      double acc = 0.0;
      for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) acc += m.vals[k] * in[m.cols[k]];
      out[i] = acc;
    }
    return;
  }
  switch (params_.sector) {
    case ParitySector::full:
      apply_sector<ParitySector::full>(params_, dim_, low_mask_, in.data(), out.data());
      break;
    case ParitySector::even:
      apply_sector<ParitySector::even>(params_, dim_, low_mask_, in.data(), out.data());
      break;
    case ParitySector::odd:
      apply_sector<ParitySector::odd>(params_, dim_, low_mask_, in.data(), out.data());
      break;
  }
}

std::vector<double> HamiltonianOperator::apply(std::span<const double> in) const {
  std::vector<double> out(dim_);
  apply(in, out);
  return out;
}

Eigen::MatrixXd HamiltonianOperator::dense() const {
  if (dim_ > 4096) throw InvalidArgument("dense(): dimension too large for a dense build");
  Eigen::MatrixXd m(dim_, dim_);
  std::vector<double> e(dim_, 0.0), col(dim_);
  for (std::size_t j = 0; j < dim_; ++j) {
    e[j] = 1.0;
    apply(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) m(i, j) = col[i];
  }
  return m;
}

HamiltonianOperator build_hamiltonian(const ModelParams& params, int max_sites) {
  return HamiltonianOperator(params, max_sites);
}

std::uint64_t translate_state(std::uint64_t state, int n_sites) {
  const std::uint64_t mask = (std::uint64_t{1} << n_sites) - 1;
  return ((state << 1) | (state >> (n_sites - 1))) & mask;
}

int orbit_size(std::uint64_t state, int n_sites) {
  std::uint64_t t = state;
  for (int k = 1; k <= n_sites; ++k) {
    t = translate_state(t, n_sites);
    if (t == state) return k;
  }
  return n_sites;
}

}  // namespace spinkernel
