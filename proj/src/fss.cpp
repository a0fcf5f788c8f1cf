#include "spinkernel/fss.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "spinkernel/errors.hpp"

namespace spinkernel::fss {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void validate(const DriftData& d, std::size_t min_points, double min_size) {
  if (d.sizes.size() != d.estimates.size()) throw InvalidArgument("drift data: sizes and estimates differ in length");
  if (d.sizes.size() < min_points) {
    throw InvalidArgument("drift fit needs at least " + std::to_string(min_points) + " points");
  }
  for (std::size_t i = 0; i < d.sizes.size(); ++i) {
    if (!(d.sizes[i] >= min_size)) throw InvalidArgument("drift data: sizes must be >= " + std::to_string(min_size));
    if (i > 0 && !(d.sizes[i] > d.sizes[i - 1])) throw InvalidArgument("drift data: sizes must be strictly increasing");
    if (!std::isfinite(d.estimates[i])) throw InvalidArgument("drift data: non-finite estimate");
  }
}

bool admissible(DriftModel model, const VectorXd& p, const DriftData& d) {
  if (!p.allFinite()) return false;
  if (model == DriftModel::bkt) {
    for (double n : d.sizes) {
      if (std::log(n) + p[2] <= 0.0) return false;
    }
  }
  return true;
}

void jacobian_row(DriftModel model, const VectorXd& p, double n, double* row) {
  if (model == DriftModel::power) {
    const double t = std::pow(n, -p[2]);
    row[0] = 1.0;
    row[1] = t;
    row[2] = -p[1] * t * std::log(n);
  } else {
    const double u = std::log(n) + p[2];
    row[0] = 1.0;
    row[1] = 1.0 / (u * u);
    row[2] = -2.0 * p[1] / (u * u * u);
  }
}

VectorXd residuals(DriftModel model, const VectorXd& p, const DriftData& d) {
  const std::vector<double> pv(p.data(), p.data() + p.size());
  VectorXd r(static_cast<Eigen::Index>(d.sizes.size()));
  for (std::size_t i = 0; i < d.sizes.size(); ++i) {
    r[static_cast<Eigen::Index>(i)] = d.estimates[i] - evaluate(model, pv, d.sizes[i]);
  }
  return r;
}

MatrixXd jacobian(DriftModel model, const VectorXd& p, const DriftData& d) {
  MatrixXd J(static_cast<Eigen::Index>(d.sizes.size()), 3);
  double row[3];
  for (std::size_t i = 0; i < d.sizes.size(); ++i) {
    jacobian_row(model, p, d.sizes[i], row);
    for (int k = 0; k < 3; ++k) J(static_cast<Eigen::Index>(i), k) = row[k];
  }
  return J;
}

FitResult levenberg_marquardt(DriftModel model, const DriftData& d, VectorXd p,
                              const FitOptions& opt) {
  if (!admissible(model, p, d)) throw InvalidArgument("drift fit: initial parameters are not admissible");
  double lambda = opt.lambda0;
  VectorXd r = residuals(model, p, d);
  double cost = r.squaredNorm();
  int it = 0;
  bool converged = cost == 0.0;

  while (!converged && it < opt.max_iterations) {
    ++it;
    const MatrixXd J = jacobian(model, p, d);
    const MatrixXd JtJ = J.transpose() * J;
    const VectorXd g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, JtJ.diagonal().maxCoeff())) {
      converged = true;
      break;
    }
    bool accepted = false;
    while (!accepted) {
      MatrixXd A = JtJ;
      for (int k = 0; k < 3; ++k) A(k, k) += lambda * std::max(JtJ(k, k), 1e-300);
      const VectorXd step = A.ldlt().solve(g);
      const VectorXd trial = p + step;
      if (admissible(model, trial, d)) {
        const VectorXd rt = residuals(model, trial, d);
        const double ct = rt.squaredNorm();
        if (ct < cost) {
          const double drop = cost - ct;
          const bool small_step = step.norm() <= 1e-14 * (p.norm() + 1e-14);
          p = trial;
          r = rt;
          cost = ct;
          lambda = std::max(lambda / 10.0, 1e-15);
          accepted = true;
          if (opt.cost_trace) opt.cost_trace->push_back(cost);
          if (cost == 0.0 || small_step || drop <= 1e-15 * cost) converged = true;
          continue;
        }
      }
      lambda *= 10.0;
      if (lambda > 1e20) {
        // No descent direction left at machine precision: local minimum.
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    throw NumericalFailure("drift fit (" + to_string(model) + ") did not converge after " +
                           std::to_string(opt.max_iterations) + " iterations");
  }

  FitResult res;
  res.model = model;
  res.names = model == DriftModel::power ? std::vector<std::string>{"x_c", "a", "p"}
                                         : std::vector<std::string>{"x_c", "A", "B"};
  res.params.assign(p.data(), p.data() + p.size());
  res.residual_norm = std::sqrt(cost);
  res.n_points = d.sizes.size();
  res.iterations = it;
  res.converged = true;

  const MatrixXd J = jacobian(model, p, d);
  const MatrixXd JtJ = J.transpose() * J;
  Eigen::FullPivLU<MatrixXd> lu(JtJ);
  lu.setThreshold(1e-14);
  if (!lu.isInvertible()) throw NumericalFailure("drift fit: singular Jacobian at the optimum");
  const MatrixXd cov = lu.inverse();
  const auto dof = static_cast<double>(d.sizes.size()) - 3.0;
  res.sigmas.resize(3);
  for (int k = 0; k < 3; ++k) {
    res.sigmas[k] = dof > 0 ? std::sqrt(std::max(0.0, cost / dof * cov(k, k)))
                            : std::numeric_limits<double>::infinity();
  }
  return res;
}

}  // namespace

std::string to_string(DriftModel m) { return m == DriftModel::power ? "power" : "bkt"; }

DriftModel parse_drift_model(const std::string& s) {
  if (s == "power") return DriftModel::power;
  if (s == "bkt") return DriftModel::bkt;
  throw InvalidArgument("unknown drift model '" + s + "' (expected power|bkt)");
}

double evaluate(DriftModel model, const std::vector<double>& p, double n) {
  if (model == DriftModel::power) return p[0] + p[1] * std::pow(n, -p[2]);
  const double u = std::log(n) + p[2];
  return p[0] + p[1] / (u * u);
}

FitResult fit_power(const DriftData& data, std::optional<std::vector<double>> init,
                    const FitOptions& opt) {
  validate(data, 3, 1.0);
  VectorXd p(3);
  if (init) {
    if (init->size() != 3) throw InvalidArgument("fit_power: init needs (x_c, a, p)");
    p << (*init)[0], (*init)[1], (*init)[2];
  } else {
    const double xc = data.estimates.back();
    p << xc, (data.estimates.front() - xc) * data.sizes.front(), 1.0;
  }
  return levenberg_marquardt(DriftModel::power, data, p, opt);
}

FitResult fit_bkt(const DriftData& data, std::optional<std::vector<double>> init,
                  const FitOptions& opt) {
  validate(data, 4, 2.0);
  VectorXd p(3);
  if (init) {
    if (init->size() != 3) throw InvalidArgument("fit_bkt: init needs (x_c, A, B)");
    p << (*init)[0], (*init)[1], (*init)[2];
  } else {
    const double xc = data.estimates.back();
    const double l1 = std::log(data.sizes.front());
    p << xc, (data.estimates.front() - xc) * l1 * l1, 0.0;
  }
  return levenberg_marquardt(DriftModel::bkt, data, p, opt);
}

FitResult fit(DriftModel model, const DriftData& data, std::optional<std::vector<double>> init,
              const FitOptions& opt) {
  return model == DriftModel::power ? fit_power(data, std::move(init), opt)
                                    : fit_bkt(data, std::move(init), opt);
}

void write_fit_header(std::ostream& os) {
  os << "source,model,p0_name,p0,p0_sigma,p1_name,p1,p1_sigma,p2_name,p2,p2_sigma,residual,n_points\n";
}

void write_fit_row(std::ostream& os, const std::string& source, const FitResult& r) {
  const auto prec = os.precision(17);
  os << source << ',' << to_string(r.model);
  for (std::size_t k = 0; k < r.params.size(); ++k) {
    os << ',' << r.names[k] << ',' << r.params[k] << ',' << r.sigmas[k];
  }
  os << ',' << r.residual_norm << ',' << r.n_points << '\n';
  os.precision(prec);
}

nlohmann::json to_json(const FitResult& r) {
  nlohmann::json params = nlohmann::json::object();
  for (std::size_t k = 0; k < r.params.size(); ++k) {
    nlohmann::json sigma = std::isfinite(r.sigmas[k]) ? nlohmann::json(r.sigmas[k]) : nlohmann::json("inf");
    params[r.names[k]] = {{"value", r.params[k]}, {"sigma", sigma}};
  }
  return {{"model", to_string(r.model)},   {"params", params},
          {"residual_norm", r.residual_norm}, {"n_points", r.n_points},
          {"iterations", r.iterations},   {"converged", r.converged}};
}

}  // namespace spinkernel::fss
