#pragma once

// Ensemble statistics of Gram matrices and Chebyshev shot bounds:
//   S_spread = (1 - k^2) / ((1 - P) eps^2 IQR^2)
//   S_CA     = (1 - k^2) / ((1 - P) eps^2 k^2)
// with k the median kernel value.

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "spinkernel/kernel.hpp"

namespace spinkernel::resources {

struct EnsembleStats {
  double k_repr = 0.0;  // median
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  std::size_t count = 0;
  bool include_diagonal = false;
};

// Quantile by linear interpolation between order statistics (h = (n-1) p).
double quantile_sorted(std::span<const double> sorted, double p);

EnsembleStats ensemble_stats(std::span<const double> values);
// Strictly-upper-triangle entries, plus the diagonal when requested. Needs at
// least 3 entries.
EnsembleStats ensemble_stats(const kernel::GramMatrix& gram, bool include_diagonal = false);
std::vector<double> upper_entries(const kernel::GramMatrix& gram, bool include_diagonal);

struct Bound {
  enum class State { finite, divergent, infeasible };
  State state = State::finite;
  double value = 0.0;        // +inf unless finite
  std::uint64_t shots = 0;   // ceil(value) when finite

  bool finite() const { return state == State::finite; }
  std::string shots_string() const;  // integer, "divergent" or "infeasible"
};

struct BoundParams {
  double epsilon = 1e-3;
  double p_spread = 0.99;
  double epsilon_ca = 1e-3;
  double p_ca = 0.99;

  void validate() const;
};

struct ShotBounds {
  Bound spread;
  Bound ca;
  BoundParams params;
};

Bound shots_spread(const EnsembleStats& stats, double epsilon, double p_spread);
Bound shots_ca(const EnsembleStats& stats, double epsilon_ca, double p_ca);
ShotBounds shot_bounds(const EnsembleStats& stats, const BoundParams& params = {});

// Counts of strictly-upper entries in `bins` uniform bins on [0, 1]; values
// outside are clamped into the end bins.
std::vector<std::size_t> kernel_histogram(const kernel::GramMatrix& gram, std::size_t bins);

// CSV schema shared with the plotting scripts.
void write_bounds_header(std::ostream& os);
void write_bounds_row(std::ostream& os, const std::string& model, const ModelParams& params,
                      const EnsembleStats& stats, const ShotBounds& bounds);

}  // namespace spinkernel::resources
