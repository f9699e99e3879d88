#include "csat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csat/errors.hpp"

namespace csat {

namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

// Regularized incomplete beta function via the Lentz continued fraction.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of a t statistic with nu degrees of freedom:
// P(|T| >= t) = I_{nu/(nu+t^2)}(nu/2, 1/2).
double t_two_sided_p(double t, double nu) {
  return reg_inc_beta(nu / 2.0, 0.5, nu / (nu + t * t));
}

}  // namespace

double ccc(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("ccc: length mismatch");
  if (x.size() < 2) throw DataError("ccc: need at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x);
  const double my = mean(y);
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  vx /= n;
  vy /= n;
  cov /= n;
  const double denom = vx + vy + (mx - my) * (mx - my);
  if (denom == 0.0) return 0.0;
  return 2.0 * cov / denom;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

SpearmanResult spearman(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("spearman: length mismatch");
  if (x.size() < 2) throw DataError("spearman: need at least 2 points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = mean(rx);
  const double my = mean(ry);
  double vx = 0.0, vy = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
  }
  if (vx == 0.0) throw DataError("spearman: x is degenerate (all values tied)");
  if (vy == 0.0) throw DataError("spearman: y is degenerate (all values tied)");
  SpearmanResult r;
  r.n = x.size();
  r.rho = cov / std::sqrt(vx * vy);
  r.rho = std::min(1.0, std::max(-1.0, r.rho));
  if (x.size() >= 3) {
    if (std::fabs(r.rho) >= 1.0) {
      r.p_value = 0.0;
    } else {
      const double t =
          r.rho * std::sqrt((n - 2.0) / (1.0 - r.rho * r.rho));
      r.p_value = t_two_sided_p(std::fabs(t), n - 2.0);
    }
  } else {
    r.p_value = 1.0;
  }
  return r;
}

std::vector<std::pair<double, double>> filter_subset(
    const std::vector<std::pair<double, double>>& pairs, SubsetRule rule) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : pairs) {
    const double t = p.first;
    bool keep = true;
    switch (rule) {
      case SubsetRule::All: keep = true; break;
      case SubsetRule::R1: keep = (t <= 2.0 || t >= 3.0); break;
      case SubsetRule::R2: keep = (t < 2.0 || t > 4.0); break;
    }
    if (keep) out.push_back(p);
  }
  return out;
}

CrossvalResult crossval_spearman(
    const std::vector<std::string>& ids, const std::vector<double>& labels,
    const FoldAssignment& folds,
    const std::function<std::vector<double>(const std::vector<int>&,
                                            const std::vector<int>&)>&
        predict_fold) {
  if (ids.size() != labels.size()) {
    throw DataError("crossval_spearman: ids/labels length mismatch");
  }
  CrossvalResult result;
  std::vector<std::pair<std::string, std::pair<double, double>>> pooled_by_id;

  for (int f = 0; f < folds.k; ++f) {
    std::vector<int> train_idx, test_idx;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto it = folds.assignment.find(ids[i]);
      if (it == folds.assignment.end()) {
        throw DataError("crossval_spearman: id not in fold assignment: " +
                        ids[i]);
      }
      if (it->second == f) {
        test_idx.push_back(static_cast<int>(i));
      } else {
        train_idx.push_back(static_cast<int>(i));
      }
    }
    if (test_idx.empty()) {
      result.warnings.push_back("fold " + std::to_string(f) +
                                ": empty test split, skipped");
      continue;
    }
    const auto preds = predict_fold(train_idx, test_idx);
    if (preds.size() != test_idx.size()) {
      throw DataError("crossval_spearman: predictor returned wrong count");
    }
    std::vector<double> truth;
    truth.reserve(test_idx.size());
    for (int i : test_idx) truth.push_back(labels[static_cast<std::size_t>(i)]);
    for (std::size_t j = 0; j < test_idx.size(); ++j) {
      pooled_by_id.push_back(
          {ids[static_cast<std::size_t>(test_idx[j])], {truth[j], preds[j]}});
    }
    try {
      const auto sp = spearman(truth, preds);
      result.fold_index.push_back(f);
      result.per_fold_rho.push_back(sp.rho);
      result.per_fold_p.push_back(sp.p_value);
      result.per_fold_n.push_back(static_cast<int>(test_idx.size()));
    } catch (const DataError& e) {
      result.warnings.push_back("fold " + std::to_string(f) +
                                ": degenerate, skipped (" + e.what() + ")");
    }
  }
  if (result.per_fold_rho.empty()) {
    throw DataError("crossval_spearman: no valid folds");
  }
  result.mean_rho =
      std::accumulate(result.per_fold_rho.begin(), result.per_fold_rho.end(),
                      0.0) /
      static_cast<double>(result.per_fold_rho.size());
  std::sort(pooled_by_id.begin(), pooled_by_id.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& p : pooled_by_id) result.pooled.push_back(p.second);
  return result;
}

}  // namespace csat
