#include "csat/svr.hpp"

#include <cmath>
#include <limits>

#include "csat/errors.hpp"

namespace csat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCurvatureFloor = 1e-12;

void validate_kernel(const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::Linear:
      break;
    case KernelKind::Rbf:
      if (spec.gamma <= 0.0) throw ConfigError("rbf kernel requires gamma > 0");
      break;
    case KernelKind::Polynomial:
      if (spec.gamma <= 0.0) {
        throw ConfigError("polynomial kernel requires gamma > 0");
      }
      if (spec.degree < 1) {
        throw ConfigError("polynomial kernel requires degree >= 1");
      }
      break;
    case KernelKind::Sigmoid:
      if (spec.gamma <= 0.0) {
        throw ConfigError("sigmoid kernel requires gamma > 0");
      }
      break;
  }
}

}  // namespace

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "linear") return KernelKind::Linear;
  if (s == "poly" || s == "polynomial") return KernelKind::Polynomial;
  if (s == "sigmoid") return KernelKind::Sigmoid;
  if (s == "rbf") return KernelKind::Rbf;
  throw ConfigError("unknown kernel: " + s);
}

std::string kernel_kind_to_string(KernelKind k) {
  switch (k) {
    case KernelKind::Linear: return "linear";
    case KernelKind::Polynomial: return "poly";
    case KernelKind::Sigmoid: return "sigmoid";
    case KernelKind::Rbf: return "rbf";
  }
  return "unknown";
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw DataError("kernel_eval: dim mismatch");
  validate_kernel(spec);
  switch (spec.kind) {
    case KernelKind::Linear:
      return x.dot(y);
    case KernelKind::Polynomial:
      return std::pow(spec.gamma * x.dot(y) + spec.coef0, spec.degree);
    case KernelKind::Sigmoid:
      return std::tanh(spec.gamma * x.dot(y) + spec.coef0);
    case KernelKind::Rbf:
      return std::exp(-spec.gamma * (x - y).squaredNorm());
  }
  throw ConfigError("kernel_eval: unreachable");
}

SvrModel train_nu_svr(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const KernelSpec& kernel, double nu, double c,
                      const SvrTrainOptions& opts) {
  validate_kernel(kernel);
  const long l = x.rows();
  if (l < 2) throw DataError("train_nu_svr: need at least 2 points");
  if (y.size() != l) throw DataError("train_nu_svr: x/y length mismatch");
  if (nu <= 0.0 || nu > 1.0) throw ConfigError("train_nu_svr: nu must be in (0,1]");
  if (c <= 0.0) throw ConfigError("train_nu_svr: C must be positive");

  const double box = c / static_cast<double>(l);

  Eigen::MatrixXd k_mat(l, l);
  for (long i = 0; i < l; ++i) {
    for (long j = 0; j <= i; ++j) {
      const double v = kernel_eval(kernel, x.row(i), x.row(j));
      k_mat(i, j) = v;
      k_mat(j, i) = v;
    }
  }

  // Dual variables: beta[0..l) = alpha (group +), beta[l..2l) = alpha*
  // (group -). Q(a,b) = s_a s_b K(a%l, b%l), p_a = -s_a y_{a%l}. SMO pairs
  // stay within one group, which keeps both sum constraints invariant:
  // each group's mass is fixed at C*nu/2 by the greedy initialization.
  const long n = 2 * l;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
  {
    double remaining = c * nu / 2.0;
    for (long i = 0; i < l && remaining > 0.0; ++i) {
      const double v = std::min(remaining, box);
      beta(i) = v;
      beta(l + i) = v;
      remaining -= v;
    }
  }

  auto q_col_dot = [&](long a, const Eigen::VectorXd& b) {
    // (Q b)_a without materializing the 2l x 2l matrix
    const long i = a % l;
    const double s = (a < l) ? 1.0 : -1.0;
    double acc = 0.0;
    for (long j = 0; j < l; ++j) {
      acc += k_mat(i, j) * (b(j) - b(l + j));
    }
    return s * acc;
  };

  Eigen::VectorXd grad(n);
  for (long a = 0; a < n; ++a) {
    const double p = (a < l) ? -y(a % l) : y(a % l);
    grad(a) = q_col_dot(a, beta) + p;
  }

  auto q_entry = [&](long a, long b) {
    const double s = ((a < l) == (b < l)) ? 1.0 : -1.0;
    return s * k_mat(a % l, b % l);
  };

  long iter = 0;
  double violation = kInf;
  for (; iter < opts.max_iterations; ++iter) {
    // Maximal violating pair within each group.
    long best_i = -1, best_j = -1;
    violation = -kInf;
    for (int grp = 0; grp < 2; ++grp) {
      const long lo = (grp == 0) ? 0 : l;
      const long hi = lo + l;
      long i_min = -1, j_max = -1;
      double g_min = kInf, g_max = -kInf;
      for (long a = lo; a < hi; ++a) {
        if (beta(a) < box && grad(a) < g_min) {
          g_min = grad(a);
          i_min = a;
        }
        if (beta(a) > 0.0 && grad(a) > g_max) {
          g_max = grad(a);
          j_max = a;
        }
      }
      if (i_min >= 0 && j_max >= 0 && g_max - g_min > violation) {
        violation = g_max - g_min;
        best_i = i_min;
        best_j = j_max;
      }
    }
    if (best_i < 0 || violation < opts.kkt_tolerance) break;

    const long i = best_i, j = best_j;
    double eta = q_entry(i, i) + q_entry(j, j) - 2.0 * q_entry(i, j);
    if (eta < kCurvatureFloor) eta = kCurvatureFloor;  // indefinite kernels
    double delta = (grad(j) - grad(i)) / eta;
    // beta_i += delta, beta_j -= delta within [0, box]
    delta = std::min(delta, box - beta(i));
    delta = std::min(delta, beta(j));
    if (delta <= 0.0) {
      // numerically stuck pair; nothing to move
      break;
    }
    beta(i) += delta;
    beta(j) -= delta;
    for (long a = 0; a < n; ++a) {
      grad(a) += delta * (q_entry(a, i) - q_entry(a, j));
    }
  }

  if (iter >= opts.max_iterations) {
    throw ConvergenceError(
        "train_nu_svr: SMO did not converge",
        "iterations=" + std::to_string(iter) +
            " kkt_violation=" + std::to_string(violation) +
            " tolerance=" + std::to_string(opts.kkt_tolerance));
  }

  // Multiplier of each group-sum constraint, from free points when
  // available, else the midpoint of the KKT bounds. For group + the
  // multiplier is -(eps + b), for group - it is b - eps.
  auto group_multiplier = [&](long lo) {
    double free_sum = 0.0;
    int free_count = 0;
    double lower = -kInf, upper = kInf;
    for (long a = lo; a < lo + l; ++a) {
      const double margin = box * 1e-9;
      if (beta(a) > margin && beta(a) < box - margin) {
        free_sum += grad(a);
        ++free_count;
      } else if (beta(a) <= margin) {
        upper = std::min(upper, grad(a));
      } else {
        lower = std::max(lower, grad(a));
      }
    }
    if (free_count > 0) return free_sum / free_count;
    if (std::isinf(lower)) return upper;
    if (std::isinf(upper)) return lower;
    return (lower + upper) / 2.0;
  };
  const double lambda_pos = group_multiplier(0);
  const double lambda_neg = group_multiplier(l);

  SvrModel model;
  model.kernel = kernel;
  model.nu = nu;
  model.c = c;
  model.epsilon = -(lambda_pos + lambda_neg) / 2.0;
  model.bias = (lambda_neg - lambda_pos) / 2.0;
  model.iterations = iter;
  model.kkt_violation = std::isinf(violation) ? 0.0 : violation;

  Eigen::VectorXd theta(l);
  double eq_residual = 0.0;
  for (long i = 0; i < l; ++i) {
    theta(i) = beta(i) - beta(l + i);
    eq_residual += theta(i);
  }
  model.equality_residual = std::fabs(eq_residual);

  // Dual objective, maximization form.
  double quad = 0.0;
  for (long i = 0; i < l; ++i) {
    for (long j = 0; j < l; ++j) quad += theta(i) * theta(j) * k_mat(i, j);
  }
  model.dual_objective = -0.5 * quad + theta.dot(y);

  const double sv_threshold = box * 1e-9;
  std::vector<long> sv_idx;
  for (long i = 0; i < l; ++i) {
    if (std::fabs(theta(i)) > sv_threshold) sv_idx.push_back(i);
  }
  model.n_support = static_cast<int>(sv_idx.size());
  model.support_vectors.resize(static_cast<long>(sv_idx.size()), x.cols());
  model.dual_coef.resize(static_cast<long>(sv_idx.size()));
  for (std::size_t k = 0; k < sv_idx.size(); ++k) {
    model.support_vectors.row(static_cast<long>(k)) = x.row(sv_idx[k]);
    model.dual_coef(static_cast<long>(k)) = theta(sv_idx[k]);
  }

  int violations = 0;
  for (long i = 0; i < l; ++i) {
    double f = model.bias;
    for (long j = 0; j < l; ++j) f += theta(j) * k_mat(i, j);
    if (std::fabs(y(i) - f) > model.epsilon + 1e-8) ++violations;
  }
  model.n_tube_violations = violations;
  return model;
}

double predict_nu_svr_raw(const SvrModel& model, const Eigen::VectorXd& x) {
  if (model.support_vectors.rows() > 0 &&
      x.size() != model.support_vectors.cols()) {
    throw DataError("predict_nu_svr: dim mismatch");
  }
  double f = model.bias;
  for (long i = 0; i < model.support_vectors.rows(); ++i) {
    f += model.dual_coef(i) *
         kernel_eval(model.kernel, model.support_vectors.row(i), x);
  }
  return f;
}

double predict_nu_svr(const SvrModel& model, const Eigen::VectorXd& x) {
  return std::min(5.0, std::max(1.0, predict_nu_svr_raw(model, x)));
}

}  // namespace csat
