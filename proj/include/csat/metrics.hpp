#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "csat/corpus.hpp"

namespace csat {

// Concordance Correlation Coefficient with population (1/N) moments:
// 2 cov(x,y) / (var(x) + var(y) + (mean(x) - mean(y))^2).
// A zero denominator (both series constant with equal means) yields 0.
double ccc(const std::vector<double>& x, const std::vector<double>& y);

// Average ranks (1-based), ties get the mean of their rank positions.
std::vector<double> average_ranks(const std::vector<double>& v);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided, t-approximation
  std::size_t n = 0;
};

// Pearson correlation of average ranks. An all-tied series is degenerate
// and raises DataError. The p-value uses t = rho*sqrt((n-2)/(1-rho^2)).
SpearmanResult spearman(const std::vector<double>& x,
                        const std::vector<double>& y);

enum class SubsetRule {
  All,
  R1,  // csat <= 2 or csat >= 3
  R2,  // csat <  2 or csat >  4
};

// Keeps (csat_true, csat_pred) pairs whose TRUE csat satisfies the rule.
std::vector<std::pair<double, double>> filter_subset(
    const std::vector<std::pair<double, double>>& pairs, SubsetRule rule);

struct CrossvalResult {
  std::vector<int> fold_index;      // folds that produced a valid rho
  std::vector<double> per_fold_rho;
  std::vector<double> per_fold_p;
  std::vector<int> per_fold_n;
  double mean_rho = 0.0;            // unweighted mean over valid folds
  std::vector<std::string> warnings;
  // Pooled held-out predictions over all folds, (csat_true, csat_pred),
  // sorted by conversation id for determinism.
  std::vector<std::pair<double, double>> pooled;
};

// Generic k-fold evaluation: for each fold, predict_fold is called with
// (train indices, test indices) into `ids`/`labels` and must return one
// prediction per test index. Degenerate folds are skipped with a warning.
CrossvalResult crossval_spearman(
    const std::vector<std::string>& ids, const std::vector<double>& labels,
    const FoldAssignment& folds,
    const std::function<std::vector<double>(const std::vector<int>&,
                                            const std::vector<int>&)>&
        predict_fold);

}  // namespace csat
