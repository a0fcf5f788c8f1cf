#pragma once

// Kernel SVM on a precomputed Gram matrix. Dual:
//   max  sum a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij,   0 <= a_i <= C,  sum a_i y_i = 0
// Decision function d(x) = sum_i a_i y_i K(x_i, x) + b.

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "spinkernel/kernel.hpp"

namespace spinkernel::svm {

// y = -1 for the ordered (low-x) phase, +1 for the disordered one.
struct LabeledSet {
  std::vector<ModelParams> points;
  std::vector<int> labels;
  kernel::Axis axis = kernel::Axis::h;

  // Throws unless labels are +-1, align with points, and both classes occur.
  void validate() const;
};

// Points evenly spaced on two windows; left window labelled -1.
LabeledSet two_windows(const ModelParams& base, kernel::Axis axis, double left_lo,
                       double left_hi, double right_lo, double right_hi,
                       std::size_t per_side);

struct SvmOptions {
  double C = 1e6;
  double tol = 1e-6;           // maximal KKT violation at termination
  long max_iterations = 10'000'000;
  double sv_threshold = 1e-8;  // relative to max alpha
  std::vector<double>* objective_trace = nullptr;  // dual objective after each update
};

struct SvmModel {
  std::vector<ModelParams> points;
  std::vector<int> labels;
  std::vector<double> alphas;
  double bias = 0.0;
  std::vector<std::size_t> sv_index;
  kernel::KernelKind kind = kernel::KernelKind::global;
  kernel::Axis axis = kernel::Axis::h;
  double C = 0.0;
  long iterations = 0;
  double kkt_violation = 0.0;
  double objective = 0.0;
  double gram_min_eigenvalue = 0.0;  // negative for blurred (sampled) Grams
};

double dual_objective(std::span<const double> alphas, std::span<const int> labels,
                      const Eigen::MatrixXd& K);

// SMO with second-order working-set selection. Throws NumericalFailure after
// max_iterations without reaching tol.
SvmModel train(const kernel::GramMatrix& K, const LabeledSet& data, const SvmOptions& opt = {});

double decision(const SvmModel& model, const ModelParams& x, kernel::FidelityEngine& engine);

// Zero crossing of d along the model's axis by bisection to |hi - lo| <= 1e-8.
double boundary(const SvmModel& model, double lo, double hi, kernel::FidelityEngine& engine);

struct MidpointDiagnostics {
  std::size_t left_index = 0;   // dominant support vector with y = -1
  std::size_t right_index = 0;  // dominant support vector with y = +1
  double x_left = 0.0;
  double x_right = 0.0;
  bool ambiguous = false;       // another SV on a side carries a comparable alpha
  std::vector<double> grid;
  std::vector<double> sim_left;   // K(x_left, x)
  std::vector<double> sim_right;  // K(x_right, x)
  double x_mid = 0.0;             // K(x_left, x_mid) = K(x_right, x_mid)
};

MidpointDiagnostics midpoint_diagnostics(const SvmModel& model, kernel::FidelityEngine& engine,
                                         std::span<const double> grid);

nlohmann::json to_json(const SvmModel& m);
SvmModel model_from_json(const nlohmann::json& j);

}  // namespace spinkernel::svm
