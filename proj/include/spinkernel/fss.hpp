#pragma once

// Drift-law fits of pseudo-critical points x_c(N):
//   power: x_c(N) = x_c + a N^(-p)
//   bkt:   x_c(N) = x_c + A / (ln N + B)^2

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace spinkernel::fss {

struct DriftData {
  std::vector<double> sizes;
  std::vector<double> estimates;
  std::string source;  // benchmark | svm-delta1 | svm-delta2 | svm-random | fidelity-scan
};

enum class DriftModel { power, bkt };
std::string to_string(DriftModel m);
DriftModel parse_drift_model(const std::string& s);

struct FitOptions {
  int max_iterations = 500;
  double lambda0 = 1e-3;
  std::vector<double>* cost_trace = nullptr;  // sum of squared residuals after each accepted step
};

struct FitResult {
  DriftModel model = DriftModel::power;
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> sigmas;  // 1 sigma; +inf with zero degrees of freedom
  double residual_norm = 0.0;  // sqrt(sum r^2)
  std::size_t n_points = 0;
  int iterations = 0;
  bool converged = false;
};

double evaluate(DriftModel model, const std::vector<double>& params, double n);

// Levenberg-Marquardt; throws NumericalFailure on non-convergence or a
// singular Jacobian at the optimum.
FitResult fit_power(const DriftData& data, std::optional<std::vector<double>> init = {},
                    const FitOptions& opt = {});
FitResult fit_bkt(const DriftData& data, std::optional<std::vector<double>> init = {},
                  const FitOptions& opt = {});
FitResult fit(DriftModel model, const DriftData& data,
              std::optional<std::vector<double>> init = {}, const FitOptions& opt = {});

void write_fit_header(std::ostream& os);
void write_fit_row(std::ostream& os, const std::string& source, const FitResult& r);
nlohmann::json to_json(const FitResult& r);

}  // namespace spinkernel::fss
