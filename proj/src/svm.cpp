#include <algorithm>
#include <cmath>
#include <limits>

#include "bivol/classify.hpp"
#include "bivol/errors.hpp"

namespace bivol {

namespace {

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double kernel_eval(SvmKernel k, std::span<const double> a,
                   std::span<const double> b, double gamma) {
    return k == SvmKernel::Rbf ? rbf(a, b, gamma) : dot(a, b);
}

struct BinaryResult {
    std::vector<double> alpha;
    double bias = 0.0;
    double kkt_gap = 0.0;
    int iterations = 0;
};

// SMO on the dual with maximal-violating-pair working-set selection.
// K is the kernel matrix of the training rows, yb in {-1,+1}.
BinaryResult solve_binary(const Matrix& K, const std::vector<int>& yb, double C,
                          double tol, int max_iter) {
    const std::size_t n = yb.size();
    constexpr double kTau = 1e-12;
    BinaryResult out;
    out.alpha.assign(n, 0.0);
    std::vector<double> grad(n, -1.0);  // gradient of the dual at alpha = 0

    auto& alpha = out.alpha;
    int iter = 0;
    while (true) {
        // working set: i maximizes -y*grad over I_up, j minimizes over I_low
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -yb[t] * grad[t];
            const bool in_up = (yb[t] > 0 && alpha[t] < C) || (yb[t] < 0 && alpha[t] > 0);
            const bool in_low = (yb[t] < 0 && alpha[t] < C) || (yb[t] > 0 && alpha[t] > 0);
            if (in_up && v > m_up) {
                m_up = v;
                i = t;
            }
            if (in_low && v < m_low) {
                m_low = v;
                j = t;
            }
        }
        out.kkt_gap = m_up - m_low;
        if (i == n || j == n || out.kkt_gap <= tol) break;
        if (iter >= max_iter)
            throw Error(ErrorCode::NoConvergence,
                        "SMO did not converge within " +
                            std::to_string(max_iter) + " pair updates (gap " +
                            std::to_string(out.kkt_gap) + ")");
        ++iter;

        const double old_ai = alpha[i], old_aj = alpha[j];
        // curvature along the feasible direction is the same in both branches
        if (yb[i] != yb[j]) {
            double quad = K[i][i] + K[j][j] - 2.0 * K[i][j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
            }
            if (diff > 0.0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = C + diff;
                }
            }
        } else {
            double quad = K[i][i] + K[j][j] - 2.0 * K[i][j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
            } else {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
            }
            if (sum > C) {
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else {
                if (alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        const double dai = alpha[i] - old_ai;
        const double daj = alpha[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t)
            grad[t] += yb[t] * (yb[i] * K[i][t] * dai + yb[j] * K[j][t] * daj);
    }
    out.iterations = iter;

    // bias from the free support vectors, else the midpoint of the KKT band
    double sum_b = 0.0;
    int n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > kTau && alpha[t] < C - kTau) {
            // y_t * f(x_t) = 1 for free SVs; grad_t = y_t*f_raw(x_t) - 1
            sum_b += yb[t] - yb[t] * (grad[t] + 1.0);
            ++n_free;
        }
    }
    if (n_free > 0) {
        out.bias = sum_b / n_free;
    } else {
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -yb[t] * grad[t];
            const bool in_up = (yb[t] > 0 && alpha[t] < C) || (yb[t] < 0 && alpha[t] > 0);
            const bool in_low = (yb[t] < 0 && alpha[t] < C) || (yb[t] > 0 && alpha[t] > 0);
            if (in_up) m_up = std::max(m_up, v);
            if (in_low) m_low = std::min(m_low, v);
        }
        out.bias = (m_up + m_low) / 2.0;
    }
    return out;
}

}  // namespace

namespace {

SvmModel train_svm_impl(const LabeledDataset& ds, const SvmConfig& cfg,
                        SvmKernel kernel) {
    if (ds.size() == 0)
        throw Error(ErrorCode::DegenerateData, "empty dataset");
    if (ds.n_classes() < 2)
        throw Error(ErrorCode::DegenerateData,
                    "SVM training needs at least 2 classes");
    if (!(cfg.C > 0.0) || (kernel == SvmKernel::Rbf && !(cfg.gamma > 0.0)))
        throw Error(ErrorCode::InvalidArgument, "gamma and C must be > 0");

    SvmModel model;
    model.kernel = kernel;
    model.gamma = cfg.gamma;
    model.C = cfg.C;
    model.input_dim = ds.dim();
    model.standardization = ds.standardization;
    if (!model.standardization.fitted()) model.standardization.fit(ds.X);
    const Matrix Xs = model.standardization.transform(ds.X);

    const std::size_t n = Xs.size();
    Matrix K(n, std::vector<double>(n));
    for (std::size_t a = 0; a < n; ++a) {
        K[a][a] = kernel_eval(kernel, Xs[a], Xs[a], cfg.gamma);
        for (std::size_t b = a + 1; b < n; ++b)
            K[a][b] = K[b][a] = kernel_eval(kernel, Xs[a], Xs[b], cfg.gamma);
    }

    for (int cls = 0; cls < kNumClasses; ++cls) {
        std::vector<int> yb(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t t = 0; t < n; ++t) {
            yb[t] = ds.y[t] == cls ? 1 : -1;
            (yb[t] > 0 ? has_pos : has_neg) = true;
        }
        auto& machine = model.machines[cls];
        if (!has_pos || !has_neg) {
            // class absent from the training rows: constant decision
            machine.bias = has_pos ? 1.0 : -1.0;
            continue;
        }
        const auto res = solve_binary(K, yb, cfg.C, cfg.tol, cfg.max_iter);
        machine.bias = res.bias;
        machine.kkt_gap = res.kkt_gap;
        machine.iterations = res.iterations;
        for (std::size_t t = 0; t < n; ++t) {
            if (res.alpha[t] > 1e-12) {
                machine.support_vectors.push_back(Xs[t]);
                machine.coef.push_back(res.alpha[t] * yb[t]);
            }
        }
    }
    return model;
}

}  // namespace

SvmModel train_svm(const LabeledDataset& ds, const SvmConfig& cfg, uint64_t) {
    return train_svm_impl(ds, cfg, SvmKernel::Rbf);
}

SvmModel train_linear_svm(const LabeledDataset& ds, const SvmConfig& cfg) {
    return train_svm_impl(ds, cfg, SvmKernel::Linear);
}

std::array<double, kNumClasses> svm_scores(const SvmModel& m,
                                           std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.input_dim)
        throw Error(ErrorCode::DimensionMismatch,
                    "expected " + std::to_string(m.input_dim) +
                        " features, got " + std::to_string(x.size()));
    const auto xs = m.standardization.transform(x);
    std::array<double, kNumClasses> scores{};
    for (int cls = 0; cls < kNumClasses; ++cls) {
        const auto& machine = m.machines[cls];
        double f = machine.bias;
        for (std::size_t s = 0; s < machine.coef.size(); ++s)
            f += machine.coef[s] *
                 kernel_eval(m.kernel, machine.support_vectors[s], xs, m.gamma);
        scores[cls] = f;
    }
    return scores;
}

}  // namespace bivol
