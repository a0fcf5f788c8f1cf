#pragma once

// Finite-shot SWAP-test estimates of kernel entries. The ancilla outcome 0
// has probability P0 = (1 + k) / 2; with c zeros in S shots the estimator is
// k_hat = 2 c / S - 1.

#include <algorithm>
#include <cstddef>
#include <cstdint>

#include "spinkernel/kernel.hpp"

namespace spinkernel::swaptest {

struct ShotConfig {
  std::uint64_t shots = 1;
  std::uint64_t master_seed = 0;
};

// Seed of the RNG stream for entry (i, j); symmetric in (i, j).
std::uint64_t entry_seed(std::uint64_t master_seed, std::size_t i, std::size_t j);

// One estimate of k_true in [0, 1] from `shots` outcomes. Deterministic in
// (k_true, cfg, i, j).
double sample_entry(double k_true, const ShotConfig& cfg, std::size_t i, std::size_t j);

// Same as sample_entry but drawing from a caller-owned stream.
template <typename Rng>
double sample_with(double k_true, std::uint64_t shots, Rng& rng);

// Every upper-triangle entry (and the diagonal unless disabled) is sampled
// independently and mirrored. Values are kept as drawn, including negatives.
kernel::GramMatrix sample_gram(const kernel::GramMatrix& gram, const ShotConfig& cfg,
                               bool sample_diagonal = true);

}  // namespace spinkernel::swaptest

#include <random>

namespace spinkernel::swaptest {

template <typename Rng>
double sample_with(double k_true, std::uint64_t shots, Rng& rng) {
  const double p0 = std::clamp(0.5 * (1.0 + k_true), 0.0, 1.0);
  std::binomial_distribution<std::uint64_t> draw(shots, p0);
  const auto c = draw(rng);
  return 2.0 * static_cast<double>(c) / static_cast<double>(shots) - 1.0;
}

}  // namespace spinkernel::swaptest
