#include <algorithm>
#include <cmath>
#include <numeric>

#include "bivol/classify.hpp"
#include "bivol/errors.hpp"
#include "bivol/rng.hpp"

namespace bivol {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Numerically safe binary cross-entropy from the logit:
// bce = softplus(z) - y*z, d/dz = sigmoid(z) - y.
double softplus(double z) {
    if (z > 30.0) return z;
    if (z < -30.0) return 0.0;
    return std::log1p(std::exp(z));
}

struct ForwardPass {
    std::vector<std::vector<double>> activations;  // per layer incl. input
    std::vector<double> logits;                    // output pre-activations
};

ForwardPass forward(const MlpModel& m, std::span<const double> x) {
    ForwardPass fp;
    fp.activations.emplace_back(x.begin(), x.end());
    const std::size_t n_layers = m.weights.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& in = fp.activations.back();
        const auto& W = m.weights[l];
        const auto& b = m.biases[l];
        std::vector<double> z(W.size());
        for (std::size_t o = 0; o < W.size(); ++o) {
            double acc = b[o];
            for (std::size_t i = 0; i < in.size(); ++i) acc += W[o][i] * in[i];
            z[o] = acc;
        }
        if (l + 1 == n_layers) {
            fp.logits = z;
        } else {
            for (auto& v : z) v = std::max(0.0, v);  // relu
            fp.activations.push_back(std::move(z));
        }
    }
    return fp;
}

}  // namespace

std::size_t MlpModel::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        n += weights[l].size() * weights[l][0].size();
        n += biases[l].size();
    }
    return n;
}

std::vector<double> MlpModel::flat_params() const {
    std::vector<double> p;
    p.reserve(param_count());
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (const auto& row : weights[l]) p.insert(p.end(), row.begin(), row.end());
        p.insert(p.end(), biases[l].begin(), biases[l].end());
    }
    return p;
}

void MlpModel::set_flat_params(std::span<const double> p) {
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (auto& row : weights[l])
            for (auto& w : row) w = p[k++];
        for (auto& b : biases[l]) b = p[k++];
    }
    if (k != p.size())
        throw Error(ErrorCode::DimensionMismatch, "flat parameter size mismatch");
}

MlpModel init_mlp(int input_dim, const std::vector<int>& hidden, uint64_t seed) {
    if (input_dim <= 0)
        throw Error(ErrorCode::InvalidArgument, "input_dim must be > 0");
    MlpModel m;
    m.layer_sizes.push_back(input_dim);
    for (int h : hidden) {
        if (h <= 0) throw Error(ErrorCode::InvalidArgument, "bad hidden size");
        m.layer_sizes.push_back(h);
    }
    m.layer_sizes.push_back(kNumClasses);

    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
        const int fan_in = m.layer_sizes[l];
        const int fan_out = m.layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Matrix W(fan_out, std::vector<double>(fan_in));
        for (auto& row : W)
            for (auto& w : row) w = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(W));
        m.biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

Matrix one_hot_targets(const std::vector<int>& y) {
    Matrix t(y.size(), std::vector<double>(kNumClasses, 0.0));
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || y[i] >= kNumClasses)
            throw Error(ErrorCode::InvalidArgument, "label code out of range");
        t[i][static_cast<std::size_t>(y[i])] = 1.0;
    }
    return t;
}

double mlp_loss(const MlpModel& m, const Matrix& X, const Matrix& targets) {
    double total = 0.0;
    for (std::size_t r = 0; r < X.size(); ++r) {
        const auto fp = forward(m, X[r]);
        for (int c = 0; c < kNumClasses; ++c)
            total += softplus(fp.logits[c]) - targets[r][c] * fp.logits[c];
    }
    return total / static_cast<double>(X.size());
}

std::pair<double, std::vector<double>> mlp_loss_and_grad(const MlpModel& m,
                                                         const Matrix& X,
                                                         const Matrix& targets) {
    if (X.size() != targets.size() || X.empty())
        throw Error(ErrorCode::DimensionMismatch, "X/targets mismatch");
    const std::size_t n_layers = m.weights.size();
    std::vector<Matrix> gW(n_layers);
    std::vector<std::vector<double>> gB(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        gW[l].assign(m.weights[l].size(),
                     std::vector<double>(m.weights[l][0].size(), 0.0));
        gB[l].assign(m.biases[l].size(), 0.0);
    }

    double total = 0.0;
    for (std::size_t r = 0; r < X.size(); ++r) {
        const auto fp = forward(m, X[r]);
        std::vector<double> delta(kNumClasses);
        for (int c = 0; c < kNumClasses; ++c) {
            total += softplus(fp.logits[c]) - targets[r][c] * fp.logits[c];
            delta[c] = sigmoid(fp.logits[c]) - targets[r][c];
        }
        // backward through the layers
        for (std::size_t l = n_layers; l-- > 0;) {
            const auto& in = fp.activations[l];
            for (std::size_t o = 0; o < delta.size(); ++o) {
                gB[l][o] += delta[o];
                for (std::size_t i = 0; i < in.size(); ++i)
                    gW[l][o][i] += delta[o] * in[i];
            }
            if (l == 0) break;
            std::vector<double> prev(in.size(), 0.0);
            for (std::size_t i = 0; i < in.size(); ++i) {
                if (in[i] <= 0.0) continue;  // relu gate (activation == 0)
                double acc = 0.0;
                for (std::size_t o = 0; o < delta.size(); ++o)
                    acc += m.weights[l][o][i] * delta[o];
                prev[i] = acc;
            }
            delta = std::move(prev);
        }
    }

    const double inv_n = 1.0 / static_cast<double>(X.size());
    std::vector<double> flat;
    flat.reserve(m.param_count());
    for (std::size_t l = 0; l < n_layers; ++l) {
        for (const auto& row : gW[l])
            for (double g : row) flat.push_back(g * inv_n);
        for (double g : gB[l]) flat.push_back(g * inv_n);
    }
    return {total * inv_n, std::move(flat)};
}

MlpTrainResult train_mlp(const LabeledDataset& ds, const MlpConfig& cfg,
                         uint64_t seed) {
    if (ds.size() == 0)
        throw Error(ErrorCode::DegenerateData, "empty dataset");
    if (!(cfg.lr >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "learning rate must be >= 0");
    if (cfg.batch_size <= 0 || cfg.epochs < 0)
        throw Error(ErrorCode::InvalidArgument, "bad epoch/batch configuration");

    MlpTrainResult out;
    out.model = init_mlp(ds.dim(), cfg.hidden, seed);
    out.model.standardization = ds.standardization;
    if (!out.model.standardization.fitted()) out.model.standardization.fit(ds.X);
    const Matrix Xs = out.model.standardization.transform(ds.X);
    const Matrix targets = one_hot_targets(ds.y);

    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::size_t> order(Xs.size());
    std::iota(order.begin(), order.end(), 0);

    auto params = out.model.flat_params();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            Matrix bx, bt;
            bx.reserve(end - start);
            bt.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) {
                bx.push_back(Xs[order[k]]);
                bt.push_back(targets[order[k]]);
            }
            auto [loss, grad] = mlp_loss_and_grad(out.model, bx, bt);
            if (!std::isfinite(loss))
                throw Error(ErrorCode::DivergedLoss,
                            "training loss became non-finite");
            for (std::size_t i = 0; i < params.size(); ++i)
                params[i] -= cfg.lr * grad[i];
            out.model.set_flat_params(params);
        }
    }
    out.final_loss = mlp_loss(out.model, Xs, targets);
    if (!std::isfinite(out.final_loss))
        throw Error(ErrorCode::DivergedLoss, "final loss non-finite");
    return out;
}

std::array<double, kNumClasses> mlp_scores(const MlpModel& m,
                                           std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.layer_sizes.front())
        throw Error(ErrorCode::DimensionMismatch,
                    "expected " + std::to_string(m.layer_sizes.front()) +
                        " features, got " + std::to_string(x.size()));
    const auto xs = m.standardization.fitted() ? m.standardization.transform(x)
                                               : std::vector<double>(x.begin(), x.end());
    const auto fp = forward(m, xs);
    std::array<double, kNumClasses> scores{};
    for (int c = 0; c < kNumClasses; ++c) scores[c] = sigmoid(fp.logits[c]);
    return scores;
}

}  // namespace bivol
