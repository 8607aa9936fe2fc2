#include "bivol/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "bivol/classify.hpp"
#include "bivol/errors.hpp"

namespace bivol {

std::vector<int> quantile_bins(const std::vector<double>& values, int n_bins) {
    if (n_bins < 2)
        throw Error(ErrorCode::InvalidArgument, "need at least 2 bins");
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    // interior quantile edges (linear interpolation), duplicates merged
    std::vector<double> edges;
    for (int q = 1; q < n_bins; ++q) {
        const double pos = static_cast<double>(q) / n_bins * (n - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(lo);
        const double e = lo + 1 < n
                             ? sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
                             : sorted[lo];
        if (edges.empty() || e > edges.back()) edges.push_back(e);
    }

    std::vector<int> bins(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        int b = 0;
        for (double e : edges)
            if (values[i] > e) ++b;
        bins[i] = b;
    }
    return bins;
}

double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size() || a.empty())
        throw Error(ErrorCode::InvalidArgument, "MI size mismatch");
    const double n = static_cast<double>(a.size());
    std::map<int, double> pa, pb;
    std::map<std::pair<int, int>, double> pab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        pa[a[i]] += 1.0;
        pb[b[i]] += 1.0;
        pab[{a[i], b[i]}] += 1.0;
    }
    double mi = 0.0;
    for (const auto& [key, c] : pab) {
        const double pj = c / n;
        mi += pj * std::log2(pj / ((pa[key.first] / n) * (pb[key.second] / n)));
    }
    return std::max(0.0, mi);
}

MrmrResult rank_features_mrmr(const Matrix& X, const std::vector<int>& y) {
    if (X.size() != y.size())
        throw Error(ErrorCode::InvalidArgument, "X/y size mismatch");
    if (X.size() < 10)
        throw Error(ErrorCode::DegenerateData, "need at least 10 rows");
    if (std::set<int>(y.begin(), y.end()).size() < 2)
        throw Error(ErrorCode::DegenerateData, "need at least 2 classes");

    const int d = static_cast<int>(X[0].size());
    MrmrResult out;

    std::vector<std::vector<int>> binned(d);
    std::vector<bool> constant(d, false);
    for (int f = 0; f < d; ++f) {
        std::vector<double> col(X.size());
        for (std::size_t r = 0; r < X.size(); ++r) col[r] = X[r][f];
        if (std::adjacent_find(col.begin(), col.end(), std::not_equal_to<>()) ==
            col.end()) {
            constant[f] = true;
            out.constant_features.push_back(f);
            continue;
        }
        binned[f] = quantile_bins(col, 8);
    }

    std::vector<double> relevance(d, 0.0);
    std::vector<int> candidates;
    for (int f = 0; f < d; ++f) {
        if (constant[f]) continue;
        relevance[f] = mutual_information(binned[f], y);
        candidates.push_back(f);
    }
    if (candidates.empty()) {
        out.ranking = out.constant_features;
        return out;
    }

    // pairwise MI cache, filled lazily as features get selected
    std::vector<double> redundancy_sum(d, 0.0);
    std::vector<int> selected;
    while (!candidates.empty()) {
        int best = -1;
        double best_score = 0.0;
        for (int f : candidates) {
            const double score =
                selected.empty()
                    ? relevance[f]
                    : relevance[f] - redundancy_sum[f] /
                                         static_cast<double>(selected.size());
            if (best < 0 || score > best_score) {
                best = f;
                best_score = score;
            }
        }
        selected.push_back(best);
        candidates.erase(std::find(candidates.begin(), candidates.end(), best));
        for (int f : candidates)
            redundancy_sum[f] += mutual_information(binned[f], binned[best]);
    }

    out.ranking = selected;
    out.ranking.insert(out.ranking.end(), out.constant_features.begin(),
                       out.constant_features.end());
    return out;
}

std::vector<int> rank_features_rfe(const Matrix& X, const std::vector<int>& y,
                                   const ImportanceFn& importance) {
    if (X.empty() || X.size() != y.size())
        throw Error(ErrorCode::InvalidArgument, "bad RFE input");
    std::vector<int> remaining(X[0].size());
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<int> eliminated;

    while (remaining.size() > 1) {
        Matrix sub(X.size(), std::vector<double>(remaining.size()));
        for (std::size_t r = 0; r < X.size(); ++r)
            for (std::size_t c = 0; c < remaining.size(); ++c)
                sub[r][c] = X[r][static_cast<std::size_t>(remaining[c])];
        const auto imp = importance(sub, y);
        if (imp.size() != remaining.size())
            throw Error(ErrorCode::DimensionMismatch,
                        "importance size mismatch");
        std::size_t drop = 0;
        for (std::size_t c = 1; c < imp.size(); ++c)
            if (imp[c] < imp[drop]) drop = c;  // ties: lowest index dropped
        eliminated.push_back(remaining[drop]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(drop));
    }

    std::vector<int> ranking(remaining);
    ranking.insert(ranking.end(), eliminated.rbegin(), eliminated.rend());
    return ranking;
}

namespace {

// Linear kernel decision weights recovered from the dual coefficients.
std::vector<double> linear_weights(const SvmBinary& m, std::size_t dim) {
    std::vector<double> w(dim, 0.0);
    for (std::size_t s = 0; s < m.coef.size(); ++s)
        for (std::size_t f = 0; f < dim; ++f)
            w[f] += m.coef[s] * m.support_vectors[s][f];
    return w;
}

}  // namespace

ImportanceFn linear_svm_importance(double C) {
    return [C](const Matrix& X, const std::vector<int>& y) {
        LabeledDataset ds{X, y, {}};
        SvmConfig cfg;
        cfg.C = C;
        cfg.gamma = 0.0;  // unused by the linear path
        const auto model = train_linear_svm(ds, cfg);
        const std::size_t dim = X[0].size();
        std::vector<double> imp(dim, 0.0);
        for (const auto& machine : model.machines) {
            const auto w = linear_weights(machine, dim);
            for (std::size_t f = 0; f < dim; ++f) imp[f] += w[f] * w[f];
        }
        return imp;
    };
}

}  // namespace bivol
