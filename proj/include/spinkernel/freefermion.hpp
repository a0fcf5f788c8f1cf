#pragma once

// Closed-form ground states of the XY chain (delta = 0) via Jordan-Wigner and
// a Bogoliubov rotation per (q, -q) pair, in the even fermion-parity sector.

#include <vector>

#include "spinkernel/model.hpp"

namespace spinkernel::freefermion {

// Antiperiodic momenta q = (2m+1) pi / N, m = 0 .. N/2-1.
struct MomentumGrid {
  int n_sites = 0;
  std::vector<double> momenta;
};

MomentumGrid momentum_grid(int n_sites);

struct BogoliubovState {
  ModelParams params;
  std::vector<double> momenta;
  std::vector<double> angles;      // theta_q, radians; 2 theta_q in (0, pi) for gamma > 0
  std::vector<double> dispersion;  // eps_q = sqrt((h - cos q)^2 + gamma^2 sin^2 q)
};

// theta_q = atan2(gamma sin q, h - cos q) / 2. The two-argument form keeps
// 2 theta_q continuous in h and selects the paired ground state of each mode.
double bogoliubov_angle(double gamma, double h, double q);

BogoliubovState bogoliubov_state(const ModelParams& params);

// prod_{q>0} cos^2(theta_q(b) - theta_q(a)). Requires delta = 0 for both,
// equal N and equal gamma.
double fidelity_xy(const ModelParams& a, const ModelParams& b);

// sum_{q>0} log cos^2(theta_q(b) - theta_q(a)); -inf when a mode is orthogonal.
double log_fidelity_xy(const ModelParams& a, const ModelParams& b);

// d theta_q / d h = -(1/2) gamma sin q / E_q^2. Throws NumericalFailure at
// resonance (E_q^2 < 1e-300).
double theta_sensitivity(const ModelParams& params, double q);

// Ground-state energy -sum_{q>0} 2 eps_q of the even-parity sector.
double free_energy_sum(const ModelParams& params);

}  // namespace spinkernel::freefermion
