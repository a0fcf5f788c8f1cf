#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "spinkernel/errors.hpp"
#include "spinkernel/freefermion.hpp"
#include "spinkernel/kernel.hpp"

using namespace spinkernel;
using namespace spinkernel::kernel;

namespace {

ModelParams chain(double gamma, int n) { return ModelParams{gamma, 0.0, 0.0, n, ParitySector::even}; }

std::vector<ModelParams> along(const ModelParams& base, Axis axis, const std::vector<double>& xs) {
  std::vector<ModelParams> out;
  for (double x : xs) out.push_back(at(base, axis, x));
  return out;
}

std::vector<double> windows(double a, double b, double c, double d, std::size_t per_side) {
  auto l = linspace(a, b, per_side);
  const auto r = linspace(c, d, per_side);
  l.insert(l.end(), r.begin(), r.end());
  return l;
}

}  // namespace

TEST_CASE("enum round trips") {
  for (auto k : {KernelKind::global, KernelKind::per_site}) CHECK(parse_kind(to_string(k)) == k);
  for (auto e : {EngineKind::analytic, EngineKind::ed}) CHECK(parse_engine(to_string(e)) == e);
  for (auto a : {Axis::h, Axis::delta}) CHECK(parse_axis(to_string(a)) == a);
  CHECK_THROWS_AS(parse_kind("local"), InvalidArgument);
  CHECK_THROWS_AS(parse_axis("gamma"), InvalidArgument);
}

TEST_CASE("per-site transform") {
  CHECK(per_site(1.0, 7) == 1.0);
  CHECK(per_site(0.0, 7) == 0.0);
  CHECK(per_site(0.3, 1) == doctest::Approx(0.3).epsilon(1e-15));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const double f = u(rng);
    const int n = 2 + static_cast<int>(t % 500);
    CHECK(std::abs(std::pow(per_site(f, n), n) - f) <= 1e-12);
    CHECK(kernel_from_log(std::log(f), n, KernelKind::per_site) == doctest::Approx(per_site(f, n)).epsilon(1e-13));
  }
  CHECK(kernel_from_log(-2000.0, 1000, KernelKind::per_site) == doctest::Approx(std::exp(-2.0)));
  CHECK(kernel_from_log(-2000.0, 1000, KernelKind::global) == 0.0);
  CHECK(kernel_from_log(-INFINITY, 10, KernelKind::per_site) == 0.0);
}

TEST_CASE("single point Gram") {
  AnalyticEngine eng;
  const std::vector<ModelParams> pts{at(chain(0.5, 20), Axis::h, 0.7)};
  const auto g = gram(pts, KernelKind::global, eng);
  REQUIRE(g.values.rows() == 1);
  CHECK(g.values(0, 0) == 1.0);
}

TEST_CASE("Gram matrices are symmetric, unit-diagonal and PSD") {
  AnalyticEngine ana;
  EdEngine edeng;
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 40; ++t) {
    const bool use_ed = t % 4 == 3;
    ModelParams base = chain(0.2 + 0.02 * t, use_ed ? 10 : 30 + 2 * t);
    if (use_ed) base.delta = 0.1 * (t % 3);
    std::vector<double> xs(12);
    for (double& x : xs) x = u(rng);
    const auto pts = along(base, Axis::h, xs);
    const auto kind = t % 2 ? KernelKind::per_site : KernelKind::global;
    const auto g = gram(pts, kind, use_ed ? static_cast<FidelityEngine&>(edeng) : ana);
    for (int i = 0; i < 12; ++i) {
      CHECK(g.values(i, i) == 1.0);
      for (int j = 0; j < 12; ++j) {
        CHECK(g.values(i, j) == g.values(j, i));
        CHECK(g.values(i, j) >= 0.0);
        CHECK(g.values(i, j) <= 1.0);
      }
    }
    // Fractional Hadamard powers need not stay PSD, so only the fidelity itself is checked.
    if (kind == KernelKind::global) CHECK(min_eigenvalue(g.values) >= -1e-8);
    CHECK(g.provenance.source == (use_ed ? Provenance::Source::ed : Provenance::Source::analytic));
  }
}

TEST_CASE("per-site and global Gram agree through f^N = F") {
  AnalyticEngine eng;
  const auto pts = along(chain(0.5, 24), Axis::h, linspace(0.6, 1.4, 9));
  const auto g = gram(pts, KernelKind::global, eng);
  const auto p = gram(pts, KernelKind::per_site, eng);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) CHECK(std::abs(std::pow(p.values(i, j), 24) - g.values(i, j)) <= 1e-12);
}

TEST_CASE("ED and analytic engines agree for the XY chain") {
  AnalyticEngine ana;
  EdEngine edeng;
  const auto pts = along(chain(0.5, 10), Axis::h, {0.4, 0.9, 1.0, 1.3});
  const auto a = gram(pts, KernelKind::global, ana);
  const auto e = gram(pts, KernelKind::global, edeng);
  CHECK((a.values - e.values).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(edeng.states_solved() == 4);
  CHECK(std::abs(a.values(0, 2) - oracle::dense_fidelity(pts[0], pts[2])) <= 1e-9);
}

TEST_CASE("analytic engine preconditions") {
  AnalyticEngine eng;
  std::vector<ModelParams> pts{chain(0.5, 10), chain(0.5, 12)};
  CHECK_THROWS_AS(gram(pts, KernelKind::global, eng), InvalidArgument);
  pts[1] = chain(0.6, 10);
  CHECK_THROWS_AS(gram(pts, KernelKind::global, eng), InvalidArgument);
  pts[1] = chain(0.5, 10);
  pts[1].delta = 0.2;
  CHECK_THROWS_AS(gram(pts, KernelKind::global, eng), InvalidArgument);
}

TEST_CASE("block structure across the Ising transition") {
  AnalyticEngine eng;
  const auto pts = along(chain(1.0, 20), Axis::h, windows(0.7, 0.95, 1.05, 1.3, 16));
  const auto g = gram(pts, KernelKind::global, eng);
  double intra = 1.0, cross = 0.0;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      if ((i < 16) == (j < 16)) intra = std::min(intra, g.values(i, j));
      else cross = std::max(cross, g.values(i, j));
    }
  CHECK(g.values(0, 31) < g.values(0, 1));
  CHECK(g.values(15, 16) > g.values(0, 31));
  CHECK(cross < 1.0);
  CHECK(intra > 0.0);
}

TEST_CASE("feature-space distance") {
  AnalyticEngine eng;
  const auto pts = along(chain(1.0, 16), Axis::h, {0.8, 1.2});
  const auto g = gram(pts, KernelKind::global, eng);
  const double k = freefermion::fidelity_xy(pts[0], pts[1]);
  CHECK(std::abs(feature_distance(g.values(0, 1)) - std::sqrt(2.0 * (1.0 - k))) <= 1e-12);
  CHECK(feature_distance(1.0) == 0.0);
  CHECK(feature_distance(0.0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("fidelity scans") {
  AnalyticEngine eng;
  SUBCASE("Ising N = 14 dips just below h = 1") {
    const auto grid = arange(0.8, 1.2, 0.002);
    const auto s = fidelity_scan(chain(1.0, 14), Axis::h, grid, 0.01, eng);
    CHECK(s.argmin >= 0.95);
    CHECK(s.argmin <= 1.0);
    for (double f : s.fidelities) {
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
    CHECK(s.fidelities[s.argmin_index] == *std::min_element(s.fidelities.begin(), s.fidelities.end()));
    CHECK(s.grid[s.argmin_index] == s.argmin);
  }
  SUBCASE("pseudo-critical points drift toward 1") {
    const auto grid = arange(0.8, 1.2, 0.002);
    for (double gamma : {1.0, 0.5}) {
      double prev = 0.0;
      for (int n : {14, 16, 18}) {
        const auto s = fidelity_scan(chain(gamma, n), Axis::h, grid, 0.01, eng);
        CHECK(s.argmin > prev);
        CHECK(s.argmin <= 1.0);
        prev = s.argmin;
      }
    }
  }
  SUBCASE("deep paramagnet is flat") {
    const auto s = fidelity_scan(chain(1.0, 14), Axis::h, linspace(5.0, 6.0, 21), 0.01, eng);
    for (double f : s.fidelities) CHECK(f > 0.999);
  }
  SUBCASE("XXZ N = 14 dips near 0.5") {
    EdEngine edeng;
    ModelParams base = chain(1e-3, 14);
    base.sector = ParitySector::full;
    base.zero_momentum = true;
    const auto s = fidelity_scan(base, Axis::delta, arange(0.3, 0.7, 0.005), 0.005, edeng);
    CHECK(std::abs(s.argmin - 0.5) <= 0.05);
  }
  SUBCASE("grid snapping reuses states") {
    EdEngine edeng;
    const auto grid = arange(0.8, 1.0, 0.01);
    fidelity_scan(chain(0.5, 8), Axis::h, grid, 0.01, edeng);
    CHECK(edeng.states_solved() == grid.size() + 1);
  }
  SUBCASE("preconditions") {
    const std::vector<double> bad{0.5, 0.5, 0.6};
    CHECK_THROWS_AS(fidelity_scan(chain(1.0, 8), Axis::h, bad, 0.01, eng), InvalidArgument);
    const auto grid = linspace(0.5, 0.6, 3);
    CHECK_THROWS_AS(fidelity_scan(chain(1.0, 8), Axis::h, grid, 0.0, eng), InvalidArgument);
  }
}

TEST_CASE("training-free benchmark") {
  AnalyticEngine eng;
  const auto grid = arange(0.5, 1.5, 1e-3);
  const auto b = benchmark_critical(chain(0.5, 1000), 1.75, grid, KernelKind::per_site, eng);
  CHECK(b.estimate >= 0.95);
  CHECK(b.estimate <= 1.0);
  const auto small = benchmark_critical(chain(0.5, 100), 1.75, grid, KernelKind::per_site, eng);
  CHECK(std::abs(b.estimate - 1.0) < std::abs(small.estimate - 1.0));
  const std::vector<double> ref{1.75};
  const auto self = benchmark_critical(chain(0.5, 50), 1.75, linspace(1.7, 1.8, 3), KernelKind::global, eng);
  CHECK(self.similarity[1] == 1.0);
  const std::vector<double> two{0.9, 1.0};
  CHECK_THROWS_AS(benchmark_critical(chain(0.5, 50), 1.75, two, KernelKind::global, eng), InvalidArgument);
}

TEST_CASE("grids") {
  const auto l = linspace(0.0, 1.0, 5);
  CHECK(l == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  const auto a = arange(0.8, 1.2, 0.002);
  CHECK(a.size() == 201);
  CHECK(a.back() == doctest::Approx(1.2));
}

TEST_CASE("serialization") {
  AnalyticEngine eng;
  auto pts = along(chain(0.5, 12), Axis::h, {0.5, 1.5});
  auto g = gram(pts, KernelKind::per_site, eng);
  const auto back = gram_from_json(to_json(g));
  CHECK(back.values == g.values);
  CHECK(back.kind == g.kind);
  CHECK(back.points == g.points);
  CHECK(back.provenance.source == Provenance::Source::analytic);
  ModelParams p{0.3, -0.2, 0.7, 14, ParitySector::odd};
  p.zero_momentum = true;
  CHECK(params_from_json(to_json(p)) == p);

  std::ostringstream os;
  write_gram_csv(os, g, Axis::h, {"seed=1"});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "# seed=1");
  std::getline(is, line);
  CHECK(line.find("0.5") != std::string::npos);
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 2);
}
