#pragma once

#include <functional>
#include <vector>

namespace bivol {

using Matrix = std::vector<std::vector<double>>;  // row-major feature rows

// Equal-frequency binning into at most n_bins bins (duplicate quantile
// edges are merged). Returns the bin index per value.
std::vector<int> quantile_bins(const std::vector<double>& values, int n_bins);

// Mutual information in bits between two discrete assignments.
double mutual_information(const std::vector<int>& a, const std::vector<int>& b);

struct MrmrResult {
    std::vector<int> ranking;            // permutation of all feature indices
    std::vector<int> constant_features;  // flagged, appended last in ranking
};

// Greedy max-relevance/min-redundancy ordering. Features are binned into
// 8 quantile bins; the first pick maximizes MI with the labels, later picks
// maximize MI(f;y) minus the mean pairwise MI with the already-selected
// features. Ties break toward the lower feature index. Constant features
// are flagged and ranked last. Requires >= 2 classes and >= 10 rows.
MrmrResult rank_features_mrmr(const Matrix& X, const std::vector<int>& y);

// Per-feature importance scores for one elimination round.
using ImportanceFn =
    std::function<std::vector<double>(const Matrix& X, const std::vector<int>& y)>;

// Recursive feature elimination: drops the lowest-importance feature per
// round (ties: lowest original index) and returns the elimination-reversed
// ranking, best feature first.
std::vector<int> rank_features_rfe(const Matrix& X, const std::vector<int>& y,
                                   const ImportanceFn& importance);

// Default importance source: squared weights of one-vs-rest linear-kernel
// SVMs (summed over machines), trained on standardized columns.
ImportanceFn linear_svm_importance(double C = 1.0);

}  // namespace bivol
