#include "spinkernel/resources.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spinkernel/errors.hpp"

namespace spinkernel::resources {
namespace {

Bound make_bound(double numerator, double denominator) {
  Bound b;
  if (numerator == 0.0) return b;
  if (denominator <= 0.0) {
    b.state = Bound::State::divergent;
    b.value = std::numeric_limits<double>::infinity();
    return b;
  }
  b.value = numerator / denominator;
  // 2^63 is the first double above INT64_MAX.
  if (!std::isfinite(b.value) || std::ceil(b.value) >= 9223372036854775808.0) {
    b.state = Bound::State::infeasible;
    return b;
  }
  b.shots = static_cast<std::uint64_t>(std::ceil(b.value));
  return b;
}

void check_eps_p(double eps, double p, const char* what) {
  if (!(eps > 0.0)) throw InvalidArgument(std::string(what) + ": epsilon must be positive");
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument(std::string(what) + ": probability must lie in (0, 1)");
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

EnsembleStats ensemble_stats(std::span<const double> values) {
  if (values.size() < 3) throw InvalidArgument("ensemble_stats: need at least 3 entries");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  EnsembleStats s;
  s.q1 = quantile_sorted(v, 0.25);
  s.k_repr = quantile_sorted(v, 0.5);
  s.q3 = quantile_sorted(v, 0.75);
  s.iqr = s.q3 - s.q1;
  s.count = v.size();
  return s;
}

std::vector<double> upper_entries(const kernel::GramMatrix& gram, bool include_diagonal) {
  const auto m = gram.values.rows();
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m * (m + 1) / 2));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = include_diagonal ? i : i + 1; j < m; ++j) v.push_back(gram.values(i, j));
  return v;
}

EnsembleStats ensemble_stats(const kernel::GramMatrix& gram, bool include_diagonal) {
  EnsembleStats s = ensemble_stats(upper_entries(gram, include_diagonal));
  s.include_diagonal = include_diagonal;
  return s;
}

std::string Bound::shots_string() const {
  switch (state) {
    case State::finite: return std::to_string(shots);
    case State::divergent: return "divergent";
    case State::infeasible: return "infeasible";
  }
  return "";
}

void BoundParams::validate() const {
  check_eps_p(epsilon, p_spread, "spread bound");
  check_eps_p(epsilon_ca, p_ca, "CA bound");
}

Bound shots_spread(const EnsembleStats& stats, double epsilon, double p_spread) {
  check_eps_p(epsilon, p_spread, "shots_spread");
  const double num = 1.0 - stats.k_repr * stats.k_repr;
  return make_bound(num, (1.0 - p_spread) * epsilon * epsilon * stats.iqr * stats.iqr);
}

Bound shots_ca(const EnsembleStats& stats, double epsilon_ca, double p_ca) {
  check_eps_p(epsilon_ca, p_ca, "shots_ca");
  const double num = 1.0 - stats.k_repr * stats.k_repr;
  return make_bound(num, (1.0 - p_ca) * epsilon_ca * epsilon_ca * stats.k_repr * stats.k_repr);
}

ShotBounds shot_bounds(const EnsembleStats& stats, const BoundParams& params) {
  params.validate();
  return {shots_spread(stats, params.epsilon, params.p_spread),
          shots_ca(stats, params.epsilon_ca, params.p_ca), params};
}

std::vector<std::size_t> kernel_histogram(const kernel::GramMatrix& gram, std::size_t bins) {
  if (bins < 2) throw InvalidArgument("kernel_histogram: need at least 2 bins");
  std::vector<std::size_t> counts(bins, 0);
  for (double k : upper_entries(gram, false)) {
    const double x = std::clamp(k, 0.0, 1.0) * static_cast<double>(bins);
    const auto b = std::min(static_cast<std::size_t>(x), bins - 1);
    ++counts[b];
  }
  return counts;
}

void write_bounds_header(std::ostream& os) {
  os << "model,gamma,delta,N,k_repr,q1,q3,iqr,s_spread,s_ca,epsilon,p_spread,epsilon_ca,p_ca\n";
}

void write_bounds_row(std::ostream& os, const std::string& model, const ModelParams& params,
                      const EnsembleStats& stats, const ShotBounds& bounds) {
  const auto prec = os.precision(17);
  auto bound = [&](const Bound& b) {
    if (b.finite()) os << b.value;
    else os << b.shots_string();
  };
  os << model << ',' << params.gamma << ',' << params.delta << ',' << params.n_sites << ','
     << stats.k_repr << ',' << stats.q1 << ',' << stats.q3 << ',' << stats.iqr << ',';
  bound(bounds.spread);
  os << ',';
  bound(bounds.ca);
  os << ',' << bounds.params.epsilon << ',' << bounds.params.p_spread << ','
     << bounds.params.epsilon_ca << ',' << bounds.params.p_ca << '\n';
  os.precision(prec);
}

}  // namespace spinkernel::resources
