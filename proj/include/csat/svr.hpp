#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace csat {

enum class KernelKind { Linear, Polynomial, Sigmoid, Rbf };

struct KernelSpec {
  KernelKind kind = KernelKind::Rbf;
  double gamma = 1.0;   // rbf/poly/sigmoid
  double coef0 = 0.0;   // poly/sigmoid
  int degree = 3;       // poly

  static KernelSpec linear() { return {KernelKind::Linear, 0.0, 0.0, 0}; }
  static KernelSpec rbf(double gamma) {
    return {KernelKind::Rbf, gamma, 0.0, 0};
  }
  static KernelSpec poly(double gamma, double coef0, int degree) {
    return {KernelKind::Polynomial, gamma, coef0, degree};
  }
  static KernelSpec sigmoid(double gamma, double coef0) {
    return {KernelKind::Sigmoid, gamma, coef0, 0};
  }
};

KernelKind kernel_kind_from_string(const std::string& s);
std::string kernel_kind_to_string(KernelKind k);

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y);

struct SvrTrainOptions {
  double kkt_tolerance = 1e-10;  // max violating pair gap at convergence
  long max_iterations = 20'000'000;
};

struct SvrModel {
  KernelSpec kernel;
  double nu = 0.5;
  double c = 1.0;
  double bias = 0.0;
  double epsilon = 0.0;  // tube half-width recovered from the solution
  Eigen::MatrixXd support_vectors;  // m x d
  Eigen::VectorXd dual_coef;        // m, alpha_i - alpha*_i (nonzero)

  // Solver diagnostics.
  double dual_objective = 0.0;      // maximization form
  double equality_residual = 0.0;   // |sum(alpha - alpha*)|
  double kkt_violation = 0.0;
  long iterations = 0;
  int n_support = 0;
  int n_tube_violations = 0;        // training points with |y - f(x)| > eps
};

// Solves the nu-SVR dual: maximize -1/2 sum (a_i-a*_i)(a_j-a*_j) K_ij
// + sum (a_i-a*_i) y_i subject to sum(a_i-a*_i)=0, sum(a_i+a*_i)=C*nu,
// 0 <= a_i, a*_i <= C/l, via SMO with maximal-violating-pair selection
// within each constraint group. Non-convergence raises ConvergenceError
// with best-so-far diagnostics.
SvrModel train_nu_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const KernelSpec& kernel, double nu, double c,
                      const SvrTrainOptions& opts = SvrTrainOptions{});

double predict_nu_svr_raw(const SvrModel& model, const Eigen::VectorXd& x);

// Raw decision value clamped to the CSAT range [1, 5].
double predict_nu_svr(const SvrModel& model, const Eigen::VectorXd& x);

}  // namespace csat
