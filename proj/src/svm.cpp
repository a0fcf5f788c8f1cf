#include "spinkernel/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spinkernel/errors.hpp"

namespace spinkernel::svm {
namespace {

constexpr double kTau = 1e-12;

bool in_up(double a, int y, double C) { return (y == 1 && a < C) || (y == -1 && a > 0); }
bool in_low(double a, int y, double C) { return (y == -1 && a < C) || (y == 1 && a > 0); }

}  // namespace

void LabeledSet::validate() const {
  if (points.size() != labels.size()) throw InvalidArgument("labels do not align with points");
  bool neg = false, pos = false;
  for (int y : labels) {
    if (y == -1) neg = true;
    else if (y == 1) pos = true;
    else throw InvalidArgument("labels must be -1 or +1");
  }
  if (!neg || !pos) throw InvalidArgument("training set needs both classes");
}

LabeledSet two_windows(const ModelParams& base, kernel::Axis axis, double left_lo,
                       double left_hi, double right_lo, double right_hi,
                       std::size_t per_side) {
  if (!(left_lo <= left_hi && left_hi < right_lo && right_lo <= right_hi)) {
    throw InvalidArgument("windows must satisfy left_lo <= left_hi < right_lo <= right_hi");
  }
  if (per_side == 0) throw InvalidArgument("need at least one point per side");
  LabeledSet set;
  set.axis = axis;
  for (double x : kernel::linspace(left_lo, left_hi, per_side)) {
    set.points.push_back(kernel::at(base, axis, x));
    set.labels.push_back(-1);
  }
  for (double x : kernel::linspace(right_lo, right_hi, per_side)) {
    set.points.push_back(kernel::at(base, axis, x));
    set.labels.push_back(1);
  }
  return set;
}

double dual_objective(std::span<const double> alphas, std::span<const int> labels,
                      const Eigen::MatrixXd& K) {
  const auto m = alphas.size();
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    linear += alphas[i];
    for (std::size_t j = 0; j < m; ++j) {
      quad += alphas[i] * alphas[j] * labels[i] * labels[j] *
              K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return linear - 0.5 * quad;
}

SvmModel train(const kernel::GramMatrix& gram, const LabeledSet& data, const SvmOptions& opt) {
  data.validate();
  const auto m = data.points.size();
  if (gram.size() != m || static_cast<std::size_t>(gram.values.rows()) != m) {
    throw InvalidArgument("train: Gram size does not match the training set");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(gram.points[i] == data.points[i])) throw InvalidArgument("train: Gram points differ from training points");
  }
  if (!(opt.C > 0.0) || !(opt.tol > 0.0)) throw InvalidArgument("train: need C > 0 and tol > 0");
  const Eigen::MatrixXd& K = gram.values;
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 0.0) {
    throw InvalidArgument("train: Gram matrix is not symmetric");
  }
  const double C = opt.C;
  const auto& y = data.labels;
  auto Q = [&](std::size_t i, std::size_t j) {
    return y[i] * y[j] * K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  };

  std::vector<double> a(m, 0.0);
  std::vector<double> G(m, -1.0);  // gradient of 1/2 a'Qa - sum a
  long iter = 0;
  double violation = std::numeric_limits<double>::infinity();

  while (true) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = m;
    for (std::size_t t = 0; t < m; ++t) {
      if (in_up(a[t], y[t], C) && -y[t] * G[t] >= gmax) {
        gmax = -y[t] * G[t];
        i = t;
      }
    }
    std::size_t j = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < m; ++t) {
      if (!in_low(a[t], y[t], C)) continue;
      const double v = -y[t] * G[t];
      gmin = std::min(gmin, v);
      if (i == m) continue;
      const double b = gmax - v;
      if (b > 0.0) {
        double quad = Q(i, i) + Q(t, t) - 2.0 * y[i] * y[t] * Q(i, t);
        if (quad <= 0.0) quad = kTau;
        const double score = -b * b / quad;
        if (score <= best) {
          best = score;
          j = t;
        }
      }
    }
    violation = gmax - gmin;
    if (i == m || j == m || violation < opt.tol) break;
    if (iter >= opt.max_iterations) {
      throw NumericalFailure("SMO did not converge after " + std::to_string(iter) +
                             " iterations (KKT violation " + std::to_string(violation) + ")");
    }
    ++iter;

    const double ai = a[i], aj = a[j];
    if (y[i] != y[j]) {
      double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) { a[j] = 0; a[i] = diff; }
      } else {
        if (a[i] < 0) { a[i] = 0; a[j] = -diff; }
      }
      if (diff > 0) {
        if (a[i] > C) { a[i] = C; a[j] = C - diff; }
      } else {
        if (a[j] > C) { a[j] = C; a[i] = C + diff; }
      }
    } else {
      double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) { a[i] = C; a[j] = sum - C; }
      } else {
        if (a[j] < 0) { a[j] = 0; a[i] = sum; }
      }
      if (sum > C) {
        if (a[j] > C) { a[j] = C; a[i] = sum - C; }
      } else {
        if (a[i] < 0) { a[i] = 0; a[j] = sum; }
      }
    }
    const double dai = a[i] - ai, daj = a[j] - aj;
    for (std::size_t t = 0; t < m; ++t) G[t] += Q(t, i) * dai + Q(t, j) * daj;
    if (opt.objective_trace) {
      double f = 0.0;
      for (std::size_t t = 0; t < m; ++t) f += a[t] * (1.0 - G[t]);
      opt.objective_trace->push_back(0.5 * f);
    }
  }

  SvmModel model;
  model.points = data.points;
  model.labels = data.labels;
  model.alphas = a;
  model.kind = gram.kind;
  model.axis = data.axis;
  model.C = C;
  model.iterations = iter;
  model.kkt_violation = violation;
  model.objective = dual_objective(a, y, K);
  model.gram_min_eigenvalue = kernel::min_eigenvalue(K);

  const double amax = *std::max_element(a.begin(), a.end());
  for (std::size_t t = 0; t < m; ++t) {
    if (a[t] > opt.sv_threshold * amax) model.sv_index.push_back(t);
  }
  if (model.sv_index.empty()) throw NumericalFailure("train: no support vectors");
  // Average over margin SVs; bound ones (a = C) do not satisfy y d = 1.
  std::vector<std::size_t> margin;
  for (std::size_t k : model.sv_index) {
    if (a[k] < C * (1.0 - 1e-12)) margin.push_back(k);
  }
  if (margin.empty()) margin = model.sv_index;
  double bsum = 0.0;
  for (std::size_t k : margin) {
    double s = 0.0;
    for (std::size_t i : model.sv_index) s += a[i] * y[i] * K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    bsum += y[k] - s;
  }
  model.bias = bsum / static_cast<double>(margin.size());
  return model;
}

double decision(const SvmModel& model, const ModelParams& x, kernel::FidelityEngine& engine) {
  double d = model.bias;
  for (std::size_t i : model.sv_index) {
    d += model.alphas[i] * model.labels[i] * engine.kernel(model.points[i], x, model.kind);
  }
  return d;
}

double boundary(const SvmModel& model, double lo, double hi, kernel::FidelityEngine& engine) {
  if (!(lo < hi)) throw InvalidArgument("boundary: need lo < hi");
  const ModelParams& base = model.points.front();
  auto d = [&](double x) { return decision(model, kernel::at(base, model.axis, x), engine); };
  double dlo = d(lo);
  const double dhi = d(hi);
  if (dlo == 0.0) return lo;
  if (dhi == 0.0) return hi;
  if (dlo * dhi > 0.0) {
    throw InvalidArgument("boundary: decision function has no sign change in [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    const double dm = d(mid);
    if (dm == 0.0) return mid;
    if ((dm < 0.0) == (dlo < 0.0)) {
      lo = mid;
      dlo = dm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

MidpointDiagnostics midpoint_diagnostics(const SvmModel& model, kernel::FidelityEngine& engine,
                                         std::span<const double> grid) {
  MidpointDiagnostics out;
  auto x_of = [&](std::size_t i) { return kernel::coordinate(model.points[i], model.axis); };
  // Largest alpha per side; ties go to the point nearest the gap between the windows.
  auto dominant = [&](int side) {
    std::size_t best = model.points.size();
    for (std::size_t i : model.sv_index) {
      if (model.labels[i] != side) continue;
      if (best == model.points.size()) {
        best = i;
        continue;
      }
      const double ai = model.alphas[i], ab = model.alphas[best];
      const bool tie = std::abs(ai - ab) <= 1e-9 * std::max(ai, ab);
      const bool inner = side < 0 ? x_of(i) > x_of(best) : x_of(i) < x_of(best);
      if ((!tie && ai > ab) || (tie && inner)) best = i;
    }
    if (best == model.points.size()) throw NumericalFailure("midpoint_diagnostics: no support vector on one side");
    for (std::size_t i : model.sv_index) {
      if (i != best && model.labels[i] == side && model.alphas[i] >= 0.5 * model.alphas[best]) {
        out.ambiguous = true;
      }
    }
    return best;
  };
  out.left_index = dominant(-1);
  out.right_index = dominant(1);
  out.x_left = x_of(out.left_index);
  out.x_right = x_of(out.right_index);
  const ModelParams& pl = model.points[out.left_index];
  const ModelParams& pr = model.points[out.right_index];

  out.grid.assign(grid.begin(), grid.end());
  for (double x : grid) {
    const ModelParams p = kernel::at(pl, model.axis, x);
    out.sim_left.push_back(engine.kernel(pl, p, model.kind));
    out.sim_right.push_back(engine.kernel(pr, p, model.kind));
  }

  auto g = [&](double x) {
    const ModelParams p = kernel::at(pl, model.axis, x);
    return engine.kernel(pl, p, model.kind) - engine.kernel(pr, p, model.kind);
  };
  double lo = std::min(out.x_left, out.x_right), hi = std::max(out.x_left, out.x_right);
  double glo = g(lo);
  if (glo * g(hi) > 0.0) {
    out.ambiguous = true;
    out.x_mid = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  out.x_mid = 0.5 * (lo + hi);
  return out;
}

nlohmann::json to_json(const SvmModel& m) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : m.points) pts.push_back(kernel::to_json(p));
  return {{"points", pts},
          {"labels", m.labels},
          {"alphas", m.alphas},
          {"bias", m.bias},
          {"sv_index", m.sv_index},
          {"kind", kernel::to_string(m.kind)},
          {"axis", kernel::to_string(m.axis)},
          {"C", m.C},
          {"diagnostics",
           {{"iterations", m.iterations},
            {"kkt_violation", m.kkt_violation},
            {"dual_objective", m.objective},
            {"gram_min_eigenvalue", m.gram_min_eigenvalue}}}};
}

SvmModel model_from_json(const nlohmann::json& j) {
  SvmModel m;
  for (const auto& p : j.at("points")) m.points.push_back(kernel::params_from_json(p));
  m.labels = j.at("labels").get<std::vector<int>>();
  m.alphas = j.at("alphas").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.sv_index = j.at("sv_index").get<std::vector<std::size_t>>();
  m.kind = kernel::parse_kind(j.at("kind").get<std::string>());
  m.axis = kernel::parse_axis(j.at("axis").get<std::string>());
  m.C = j.at("C").get<double>();
  if (auto it = j.find("diagnostics"); it != j.end()) {
    m.iterations = it->value("iterations", 0L);
    m.kkt_violation = it->value("kkt_violation", 0.0);
    m.objective = it->value("dual_objective", 0.0);
    m.gram_min_eigenvalue = it->value("gram_min_eigenvalue", 0.0);
  }
  if (m.labels.size() != m.points.size() || m.alphas.size() != m.points.size()) {
    throw InvalidArgument("svm json: inconsistent array lengths");
  }
  for (std::size_t i : m.sv_index) {
    if (i >= m.points.size()) throw InvalidArgument("svm json: support-vector index out of range");
  }
  return m;
}

}  // namespace spinkernel::svm
