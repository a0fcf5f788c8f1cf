#include "spinkernel/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>

#include "spinkernel/errors.hpp"
#include "spinkernel/freefermion.hpp"
#include "spinkernel/parallel.hpp"

namespace spinkernel::kernel {

std::string to_string(KernelKind k) { return k == KernelKind::global ? "global" : "per_site"; }
std::string to_string(EngineKind e) { return e == EngineKind::analytic ? "analytic" : "ed"; }
std::string to_string(Axis a) { return a == Axis::h ? "h" : "delta"; }

std::string to_string(Provenance::Source s) {
  switch (s) {
    case Provenance::Source::analytic: return "analytic";
    case Provenance::Source::ed: return "ed";
    case Provenance::Source::swap_sampled: return "swap-sampled";
  }
  return "analytic";
}

KernelKind parse_kind(const std::string& s) {
  if (s == "global") return KernelKind::global;
  if (s == "per_site" || s == "per-site") return KernelKind::per_site;
  throw InvalidArgument("unknown kernel kind '" + s + "' (expected global|per_site)");
}

EngineKind parse_engine(const std::string& s) {
  if (s == "analytic") return EngineKind::analytic;
  if (s == "ed") return EngineKind::ed;
  throw InvalidArgument("unknown engine '" + s + "' (expected analytic|ed)");
}

Axis parse_axis(const std::string& s) {
  if (s == "h") return Axis::h;
  if (s == "delta") return Axis::delta;
  throw InvalidArgument("unknown control axis '" + s + "' (expected h|delta)");
}

ModelParams at(const ModelParams& base, Axis axis, double x) {
  return axis == Axis::h ? base.with_h(x) : base.with_delta(x);
}

double coordinate(const ModelParams& p, Axis axis) { return axis == Axis::h ? p.h : p.delta; }

double per_site(double fidelity, int n_sites) {
  if (fidelity <= 0.0) return 0.0;
  return std::pow(fidelity, 1.0 / n_sites);
}

double kernel_from_log(double log_fidelity, int n_sites, KernelKind kind) {
  if (log_fidelity == -std::numeric_limits<double>::infinity()) return 0.0;
  const double v = kind == KernelKind::global ? std::exp(log_fidelity)
                                              : std::exp(log_fidelity / n_sites);
  return std::min(v, 1.0);
}

double FidelityEngine::fidelity(const ModelParams& a, const ModelParams& b) {
  return kernel_from_log(log_fidelity(a, b), a.n_sites, KernelKind::global);
}

double FidelityEngine::kernel(const ModelParams& a, const ModelParams& b, KernelKind kind) {
  return kernel_from_log(log_fidelity(a, b), a.n_sites, kind);
}

double AnalyticEngine::log_fidelity(const ModelParams& a, const ModelParams& b) {
  if (a.delta != 0.0 || b.delta != 0.0) {
    throw InvalidArgument("analytic engine requires delta = 0; use the ed engine for XXZ");
  }
  if (a.h == b.h && a.gamma == b.gamma && a.n_sites == b.n_sites) return 0.0;
  return freefermion::log_fidelity_xy(a, b);
}

EdEngine::EdEngine(EdEngineOptions options) : options_(std::move(options)) {
  if (options_.cache_dir) disk_.emplace(*options_.cache_dir);
}

EdEngine::Key EdEngine::key_of(const ModelParams& p) {
  return {p.gamma, p.delta, p.h, p.n_sites, static_cast<int>(p.sector) | (p.zero_momentum ? 4 : 0)};
}

std::shared_ptr<const ed::GroundState> EdEngine::solve(const ModelParams& p) {
  if (disk_) {
    if (auto cached = disk_->load(p, options_.tol)) {
      return std::make_shared<const ed::GroundState>(std::move(*cached));
    }
  }
  const HamiltonianOperator H(p, options_.max_sites);
  auto gs = std::make_shared<const ed::GroundState>(ed::ground_state(H, options_.tol, options_.lanczos));
  if (disk_) disk_->store(*gs, options_.tol);
  return gs;
}

std::shared_ptr<const ed::GroundState> EdEngine::state(const ModelParams& p) {
  const Key key = key_of(p);
  {
    std::lock_guard lock(mutex_);
    if (auto it = states_.find(key); it != states_.end()) return it->second;
  }
  auto gs = solve(p);
  std::lock_guard lock(mutex_);
  auto [it, inserted] = states_.emplace(key, std::move(gs));
  if (inserted) ++solved_;
  return it->second;
}

void EdEngine::prepare(std::span<const ModelParams> points) {
  std::vector<ModelParams> missing;
  {
    std::lock_guard lock(mutex_);
    std::set<Key> seen;
    for (const auto& p : points) {
      const Key k = key_of(p);
      if (states_.count(k) == 0 && seen.insert(k).second) missing.push_back(p);
    }
  }
  parallel_for(missing.size(), [&](std::size_t i) { state(missing[i]); }, options_.threads);
}

double EdEngine::log_fidelity(const ModelParams& a, const ModelParams& b) {
  if (a.n_sites != b.n_sites) throw InvalidArgument("ed engine: mismatched N");
  if (a == b) return 0.0;
  const double f = ed::fidelity_ed(*state(a), *state(b));
  return f > 0.0 ? std::log(f) : -std::numeric_limits<double>::infinity();
}

std::size_t EdEngine::states_solved() const {
  std::lock_guard lock(mutex_);
  return solved_;
}

std::vector<std::shared_ptr<const ed::GroundState>> EdEngine::states() const {
  std::lock_guard lock(mutex_);
  std::vector<std::shared_ptr<const ed::GroundState>> out;
  out.reserve(states_.size());
  for (const auto& [k, v] : states_) out.push_back(v);
  return out;
}

void EdEngine::clear() {
  std::lock_guard lock(mutex_);
  states_.clear();
}

std::unique_ptr<FidelityEngine> make_engine(EngineKind kind, EdEngineOptions options) {
  if (kind == EngineKind::analytic) return std::make_unique<AnalyticEngine>();
  return std::make_unique<EdEngine>(std::move(options));
}

namespace {

void check_points(std::span<const ModelParams> points, const FidelityEngine& engine) {
  if (points.empty()) throw InvalidArgument("gram: no points");
  const auto& first = points.front();
  for (const auto& p : points) {
    p.validate();
    if (p.n_sites != first.n_sites) throw InvalidArgument("gram: points do not share N");
    if (engine.kind() == EngineKind::analytic) {
      if (p.delta != 0.0) throw InvalidArgument("gram: analytic engine requires delta = 0");
      if (p.gamma != first.gamma) throw InvalidArgument("gram: analytic engine requires a shared gamma");
    }
  }
}

}  // namespace

GramMatrix gram(std::span<const ModelParams> points, KernelKind kind, FidelityEngine& engine,
                int threads) {
  check_points(points, engine);
  const auto m = points.size();
  GramMatrix g;
  g.points.assign(points.begin(), points.end());
  g.kind = kind;
  g.provenance.source = engine.kind() == EngineKind::analytic ? Provenance::Source::analytic
                                                              : Provenance::Source::ed;
  g.values = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  engine.prepare(points);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
  std::vector<double> upper(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t t) {
    const auto [i, j] = pairs[t];
    upper[t] = engine.kernel(points[i], points[j], kind);
  }, threads);
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto i = static_cast<Eigen::Index>(pairs[t].first);
    const auto j = static_cast<Eigen::Index>(pairs[t].second);
    g.values(i, j) = upper[t];
    g.values(j, i) = upper[t];
  }
  return g;
}

double min_eigenvalue(const Eigen::MatrixXd& values) {
  if (values.size() == 0) throw InvalidArgument("min_eigenvalue: empty matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(values, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()[0];
}

double feature_distance(double k) { return std::sqrt(std::max(0.0, 2.0 * (1.0 - k))); }

FidelityScan fidelity_scan(const ModelParams& base, Axis axis, std::span<const double> grid,
                           double step, FidelityEngine& engine, KernelKind kind) {
  if (grid.empty()) throw InvalidArgument("fidelity_scan: empty grid");
  if (!(step > 0.0)) throw InvalidArgument("fidelity_scan: step must be positive");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw InvalidArgument("fidelity_scan: grid must be strictly increasing");
  }
  std::vector<ModelParams> left, right, all;
  for (double x : grid) {
    // Reuse a grid point when x + step lands on one up to rounding, so its
    // ground state is shared.
    double xr = x + step;
    const auto it = std::lower_bound(grid.begin(), grid.end(), xr - 1e-10);
    if (it != grid.end() && std::abs(*it - xr) <= 1e-10) xr = *it;
    left.push_back(at(base, axis, x));
    right.push_back(at(base, axis, xr));
  }
  if (engine.kind() == EngineKind::analytic && axis == Axis::delta) {
    throw InvalidArgument("fidelity_scan: analytic engine cannot scan delta");
  }
  all = left;
  all.insert(all.end(), right.begin(), right.end());
  engine.prepare(all);

  FidelityScan scan;
  scan.axis = axis;
  scan.n_sites = base.n_sites;
  scan.kind = kind;
  scan.step = step;
  scan.grid.assign(grid.begin(), grid.end());
  scan.fidelities.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    scan.fidelities[i] = engine.kernel(left[i], right[i], kind);
  });
  const auto it = std::min_element(scan.fidelities.begin(), scan.fidelities.end());
  scan.argmin_index = static_cast<std::size_t>(it - scan.fidelities.begin());
  scan.argmin = scan.grid[scan.argmin_index];
  return scan;
}

BenchmarkResult benchmark_critical(const ModelParams& base, double h_ref,
                                   std::span<const double> grid, KernelKind kind,
                                   FidelityEngine& engine) {
  if (grid.size() < 3) throw InvalidArgument("benchmark_critical: grid needs at least 3 points");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw InvalidArgument("benchmark_critical: grid must be strictly increasing");
  }
  const ModelParams ref = base.with_h(h_ref);
  std::vector<ModelParams> pts;
  pts.reserve(grid.size() + 1);
  for (double h : grid) pts.push_back(base.with_h(h));
  pts.push_back(ref);
  engine.prepare(pts);

  BenchmarkResult r;
  r.grid.assign(grid.begin(), grid.end());
  r.similarity.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { r.similarity[i] = engine.kernel(pts[i], ref, kind); });

  const std::size_t n = grid.size();
  r.slope.resize(n);
  r.slope[0] = (r.similarity[1] - r.similarity[0]) / (grid[1] - grid[0]);
  r.slope[n - 1] = (r.similarity[n - 1] - r.similarity[n - 2]) / (grid[n - 1] - grid[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    r.slope[i] = (r.similarity[i + 1] - r.similarity[i - 1]) / (grid[i + 1] - grid[i - 1]);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(r.slope[i]) > std::abs(r.slope[best])) best = i;
  }
  r.estimate = grid[best];
  return r;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {lo};
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  v.back() = hi;
  return v;
}

std::vector<double> arange(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw InvalidArgument("arange: need step > 0 and hi >= lo");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = lo + step * static_cast<double>(i);
  return v;
}

void write_gram_csv(std::ostream& os, const GramMatrix& g, Axis axis,
                    const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) os << "# " << line << '\n';
  const auto prec = os.precision(17);
  os << to_string(axis);
  for (const auto& p : g.points) os << ',' << coordinate(p, axis);
  os << '\n';
  for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
    os << coordinate(g.points[static_cast<std::size_t>(i)], axis);
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) os << ',' << g.values(i, j);
    os << '\n';
  }
  os.precision(prec);
}

nlohmann::json to_json(const ModelParams& p) {
  return {{"gamma", p.gamma}, {"delta", p.delta}, {"h", p.h},
          {"n_sites", p.n_sites}, {"sector", std::string(to_string(p.sector))},
          {"zero_momentum", p.zero_momentum}};
}

ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  p.gamma = j.at("gamma").get<double>();
  p.delta = j.at("delta").get<double>();
  p.h = j.at("h").get<double>();
  p.n_sites = j.at("n_sites").get<int>();
  p.sector = parse_sector(j.value("sector", std::string("full")));
  p.zero_momentum = j.value("zero_momentum", false);
  return p;
}

nlohmann::json to_json(const GramMatrix& g) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : g.points) pts.push_back(to_json(p));
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) row.push_back(g.values(i, j));
    rows.push_back(std::move(row));
  }
  nlohmann::json prov = {{"source", to_string(g.provenance.source)}};
  if (g.provenance.source == Provenance::Source::swap_sampled) {
    prov["seed"] = g.provenance.seed;
    prov["shots"] = g.provenance.shots;
    prov["sampled_diagonal"] = g.provenance.sampled_diagonal;
  }
  return {{"points", pts}, {"kind", to_string(g.kind)}, {"provenance", prov}, {"values", rows}};
}

GramMatrix gram_from_json(const nlohmann::json& j) {
  GramMatrix g;
  for (const auto& p : j.at("points")) g.points.push_back(params_from_json(p));
  g.kind = parse_kind(j.at("kind").get<std::string>());
  const auto& prov = j.at("provenance");
  const auto src = prov.at("source").get<std::string>();
  if (src == "analytic") g.provenance.source = Provenance::Source::analytic;
  else if (src == "ed") g.provenance.source = Provenance::Source::ed;
  else if (src == "swap-sampled") g.provenance.source = Provenance::Source::swap_sampled;
  else throw InvalidArgument("unknown provenance '" + src + "'");
  g.provenance.seed = prov.value("seed", std::uint64_t{0});
  g.provenance.shots = prov.value("shots", std::uint64_t{0});
  g.provenance.sampled_diagonal = prov.value("sampled_diagonal", true);
  const auto m = static_cast<Eigen::Index>(g.points.size());
  const auto& rows = j.at("values");
  if (static_cast<Eigen::Index>(rows.size()) != m) throw InvalidArgument("gram json: row count mismatch");
  g.values.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != m) throw InvalidArgument("gram json: ragged row");
    for (Eigen::Index k = 0; k < m; ++k) g.values(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return g;
}

}  // namespace spinkernel::kernel
