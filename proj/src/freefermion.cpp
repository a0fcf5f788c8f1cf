#include "spinkernel/freefermion.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "spinkernel/errors.hpp"

namespace spinkernel::freefermion {
namespace {

void require_xy(const ModelParams& p) {
  p.validate();
  if (p.delta != 0.0) {
    throw InvalidArgument("free-fermion solution requires delta = 0, got " + describe(p));
  }
}

void require_compatible(const ModelParams& a, const ModelParams& b) {
  require_xy(a);
  require_xy(b);
  if (a.n_sites != b.n_sites) throw InvalidArgument("fidelity_xy: mismatched N");
  if (a.gamma != b.gamma) throw InvalidArgument("fidelity_xy: mismatched gamma");
}

constexpr int kLogDomainThreshold = 200;

}  // namespace

MomentumGrid momentum_grid(int n_sites) {
  if (n_sites < 2 || n_sites % 2 != 0) throw InvalidArgument("momentum grid needs even N");
  MomentumGrid g{n_sites, {}};
  g.momenta.reserve(n_sites / 2);
  for (int m = 0; m < n_sites / 2; ++m) {
    g.momenta.push_back((2.0 * m + 1.0) * std::numbers::pi / n_sites);
  }
  return g;
}

double bogoliubov_angle(double gamma, double h, double q) {
  return 0.5 * std::atan2(gamma * std::sin(q), h - std::cos(q));
}

BogoliubovState bogoliubov_state(const ModelParams& params) {
  require_xy(params);
  BogoliubovState st;
  st.params = params;
  st.momenta = momentum_grid(params.n_sites).momenta;
  st.angles.reserve(st.momenta.size());
  st.dispersion.reserve(st.momenta.size());
  for (double q : st.momenta) {
    const double xi = params.h - std::cos(q);
    const double pair = params.gamma * std::sin(q);
    st.angles.push_back(0.5 * std::atan2(pair, xi));
    st.dispersion.push_back(std::hypot(xi, pair));
  }
  return st;
}

double log_fidelity_xy(const ModelParams& a, const ModelParams& b) {
  require_compatible(a, b);
  const auto grid = momentum_grid(a.n_sites);
  double acc = 0.0;
  for (double q : grid.momenta) {
    const double c = std::cos(bogoliubov_angle(b.gamma, b.h, q) -
                              bogoliubov_angle(a.gamma, a.h, q));
    if (c == 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log(c * c);
  }
  return acc;
}

double fidelity_xy(const ModelParams& a, const ModelParams& b) {
  require_compatible(a, b);
  if (a.h == b.h) return 1.0;
  if (a.n_sites > kLogDomainThreshold) return std::exp(log_fidelity_xy(a, b));
  const auto grid = momentum_grid(a.n_sites);
  double f = 1.0;
  for (double q : grid.momenta) {
    const double c = std::cos(bogoliubov_angle(b.gamma, b.h, q) -
                              bogoliubov_angle(a.gamma, a.h, q));
    f *= c * c;
  }
  return f;
}

double theta_sensitivity(const ModelParams& params, double q) {
  const double xi = params.h - std::cos(q);
  const double pair = params.gamma * std::sin(q);
  const double e2 = xi * xi + pair * pair;
  if (e2 < 1e-300) {
    throw NumericalFailure("theta_sensitivity: resonance, E_q^2 vanishes at q=" +
                           std::to_string(q));
  }
  return -0.5 * pair / e2;
}

double free_energy_sum(const ModelParams& params) {
  const auto st = bogoliubov_state(params);
  double e = 0.0;
  for (double eps : st.dispersion) e -= 2.0 * eps;
  return e;
}

}  // namespace spinkernel::freefermion
