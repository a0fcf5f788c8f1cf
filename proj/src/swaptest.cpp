#include "spinkernel/swaptest.hpp"

#include <algorithm>
#include <random>
#include <utility>

#include "spinkernel/errors.hpp"
#include "spinkernel/parallel.hpp"

namespace spinkernel::swaptest {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void check(double k_true, const ShotConfig& cfg) {
  if (cfg.shots == 0) throw InvalidArgument("shots must be >= 1");
  if (!(k_true >= 0.0 && k_true <= 1.0 + 1e-12)) {
    throw InvalidArgument("kernel value outside [0, 1]: " + std::to_string(k_true));
  }
}

}  // namespace

std::uint64_t entry_seed(std::uint64_t master_seed, std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  std::uint64_t s = splitmix64(master_seed);
  s = splitmix64(s ^ static_cast<std::uint64_t>(i));
  return splitmix64(s ^ (static_cast<std::uint64_t>(j) * 0xd1342543de82ef95ULL));
}

double sample_entry(double k_true, const ShotConfig& cfg, std::size_t i, std::size_t j) {
  check(k_true, cfg);
  std::mt19937_64 rng(entry_seed(cfg.master_seed, i, j));
  return sample_with(k_true, cfg.shots, rng);
}

kernel::GramMatrix sample_gram(const kernel::GramMatrix& gram, const ShotConfig& cfg,
                               bool sample_diagonal) {
  if (gram.provenance.source == kernel::Provenance::Source::swap_sampled) {
    throw InvalidArgument("sample_gram: input is already swap-sampled");
  }
  if (cfg.shots == 0) throw InvalidArgument("shots must be >= 1");
  const auto m = static_cast<std::size_t>(gram.values.rows());
  kernel::GramMatrix out = gram;
  out.provenance = {kernel::Provenance::Source::swap_sampled, cfg.master_seed, cfg.shots,
                    sample_diagonal};
  std::vector<std::pair<std::size_t, std::size_t>> entries;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = sample_diagonal ? i : i + 1; j < m; ++j) entries.emplace_back(i, j);
  std::vector<double> drawn(entries.size());
  parallel_for(entries.size(), [&](std::size_t t) {
    const auto [i, j] = entries[t];
    const double k = std::clamp(gram.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 0.0, 1.0);
    drawn[t] = sample_entry(k, cfg, i, j);
  });
  for (std::size_t t = 0; t < entries.size(); ++t) {
    const auto i = static_cast<Eigen::Index>(entries[t].first);
    const auto j = static_cast<Eigen::Index>(entries[t].second);
    out.values(i, j) = drawn[t];
    out.values(j, i) = drawn[t];
  }
  return out;
}

}  // namespace spinkernel::swaptest
