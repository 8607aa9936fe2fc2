#include "bivol/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bivol/errors.hpp"
#include "bivol/io.hpp"
#include "bivol/rng.hpp"

namespace bivol {

void Standardizer::fit(const Matrix& X) {
    if (X.empty()) throw Error(ErrorCode::DegenerateData, "empty matrix");
    const std::size_t d = X[0].size();
    mean.assign(d, 0.0);
    std.assign(d, 0.0);
    for (const auto& row : X)
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    for (auto& m : mean) m /= static_cast<double>(X.size());
    for (const auto& row : X)
        for (std::size_t j = 0; j < d; ++j) {
            const double dxy = row[j] - mean[j];
            std[j] += dxy * dxy;
        }
    for (auto& s : std) {
        s = std::sqrt(s / static_cast<double>(X.size()));
        if (s <= 0.0) s = 1.0;  // constant column passes through centred
    }
}

std::vector<double> Standardizer::transform(std::span<const double> x) const {
    if (!fitted()) return {x.begin(), x.end()};
    if (x.size() != mean.size())
        throw Error(ErrorCode::DimensionMismatch, "standardizer dim mismatch");
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        out[j] = (x[j] - mean[j]) / std[j];
    return out;
}

Matrix Standardizer::transform(const Matrix& X) const {
    Matrix out;
    out.reserve(X.size());
    for (const auto& row : X) out.push_back(transform(row));
    return out;
}

int LabeledDataset::n_classes() const {
    std::set<int> s(y.begin(), y.end());
    return static_cast<int>(s.size());
}

LabeledDataset make_dataset(const FeatureMatrix& m, int feature_set_id) {
    if (!m.labeled())
        throw Error(ErrorCode::DegenerateData, "feature matrix has no labels");
    const auto& fs = feature_set(feature_set_id);
    LabeledDataset ds;
    ds.X.reserve(m.rows.size());
    for (const auto& row : m.rows) ds.X.push_back(project(row, fs));
    ds.y = m.labels;
    return ds;
}

Prediction predict(const SvmModel& m, std::span<const double> x) {
    const auto scores = svm_scores(m, x);
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
        if (scores[c] > scores[best]) best = c;  // ties keep the lower code
    return {static_cast<ArtefactLabel>(best), scores};
}

Prediction predict(const MlpModel& m, std::span<const double> x) {
    const auto scores = mlp_scores(m, x);
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
        if (scores[c] > scores[best]) best = c;
    return {static_cast<ArtefactLabel>(best), scores};
}

Prediction predict(const AnyModel& m, std::span<const double> x) {
    return std::visit([&](const auto& mm) { return predict(mm, x); }, m);
}

int model_input_dim(const AnyModel& m) {
    if (const auto* s = std::get_if<SvmModel>(&m)) return s->input_dim;
    return std::get<MlpModel>(m).layer_sizes.front();
}

int model_feature_set_id(const AnyModel& m) {
    if (const auto* s = std::get_if<SvmModel>(&m)) return s->feature_set_id;
    return std::get<MlpModel>(m).feature_set_id;
}

TrainerFn svm_trainer(const SvmConfig& cfg, uint64_t seed) {
    return [cfg, seed](const Matrix& X, const std::vector<int>& y) -> PredictFn {
        LabeledDataset ds{X, y, {}};
        auto model = std::make_shared<SvmModel>(train_svm(ds, cfg, seed));
        return [model](std::span<const double> x) { return svm_scores(*model, x); };
    };
}

TrainerFn mlp_trainer(const MlpConfig& cfg, uint64_t seed) {
    return [cfg, seed](const Matrix& X, const std::vector<int>& y) -> PredictFn {
        LabeledDataset ds{X, y, {}};
        auto model = std::make_shared<MlpModel>(train_mlp(ds, cfg, seed).model);
        return [model](std::span<const double> x) { return mlp_scores(*model, x); };
    };
}

namespace {

// Trapezoid AUC with integer accumulation so the result equals pairwise
// win/tie counting exactly.
RocCurve roc_binary(const std::vector<double>& score, const std::vector<char>& pos) {
    RocCurve out;
    long long P = 0, N = 0;
    for (char p : pos) (p ? P : N) += 1;
    if (P == 0 || N == 0) return out;  // single class: invalid

    std::vector<std::size_t> idx(score.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return score[a] > score[b];
    });

    out.points.emplace_back(0.0, 0.0);
    long long tp = 0, fp = 0, tp_prev = 0, fp_prev = 0;
    long long num2 = 0;  // 2 * area * P * N
    std::size_t i = 0;
    while (i < idx.size()) {
        const double s = score[idx[i]];
        while (i < idx.size() && score[idx[i]] == s) {
            (pos[idx[i]] ? tp : fp) += 1;
            ++i;
        }
        num2 += (fp - fp_prev) * (tp + tp_prev);
        out.points.emplace_back(static_cast<double>(fp) / static_cast<double>(N),
                                static_cast<double>(tp) / static_cast<double>(P));
        tp_prev = tp;
        fp_prev = fp;
    }
    out.auc = static_cast<double>(num2) / static_cast<double>(2 * P * N);
    out.valid = true;
    return out;
}

}  // namespace

std::array<RocCurve, kNumClasses> roc_auc(
    const std::vector<std::array<double, kNumClasses>>& scores,
    const std::vector<int>& y) {
    if (scores.size() != y.size())
        throw Error(ErrorCode::DimensionMismatch, "scores/labels size mismatch");
    std::array<RocCurve, kNumClasses> out;
    for (int c = 0; c < kNumClasses; ++c) {
        std::vector<double> s(y.size());
        std::vector<char> pos(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            s[i] = scores[i][c];
            pos[i] = y[i] == c ? 1 : 0;
        }
        out[c] = roc_binary(s, pos);
    }
    return out;
}

ClassifierMetrics compute_metrics(
    const std::vector<int>& y_true, const std::vector<int>& y_pred,
    const std::vector<std::array<double, kNumClasses>>& scores) {
    if (y_true.size() != y_pred.size() || y_true.empty())
        throw Error(ErrorCode::DimensionMismatch, "prediction size mismatch");
    ClassifierMetrics m;
    m.n = y_true.size();
    long long correct = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        m.confusion[y_true[i]][y_pred[i]] += 1;
        if (y_true[i] == y_pred[i]) ++correct;
    }
    m.overall_accuracy = static_cast<double>(correct) / static_cast<double>(m.n);

    double prec_sum = 0.0, rec_sum = 0.0, f_sum = 0.0, acc_sum = 0.0;
    int classes_present = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        long long tp = m.confusion[c][c];
        long long fn = 0, fp = 0;
        for (int o = 0; o < kNumClasses; ++o) {
            if (o == c) continue;
            fn += m.confusion[c][o];
            fp += m.confusion[o][c];
        }
        const long long tn = static_cast<long long>(m.n) - tp - fn - fp;
        m.per_class_accuracy[c] =
            static_cast<double>(tp + tn) / static_cast<double>(m.n);
        acc_sum += m.per_class_accuracy[c];
        if (tp + fn == 0) continue;  // class absent: skip macro terms
        ++classes_present;
        const double prec = tp + fp > 0
                                ? static_cast<double>(tp) / static_cast<double>(tp + fp)
                                : 0.0;
        const double rec = static_cast<double>(tp) / static_cast<double>(tp + fn);
        prec_sum += prec;
        rec_sum += rec;
        f_sum += prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    }
    m.macro_class_accuracy = acc_sum / kNumClasses;
    if (classes_present > 0) {
        m.precision_macro = prec_sum / classes_present;
        m.recall_macro = rec_sum / classes_present;
        m.f_score_macro = f_sum / classes_present;
    }
    if (!scores.empty()) m.roc = roc_auc(scores, y_true);
    return m;
}

ClassifierMetrics kfold_cv(const LabeledDataset& ds, int k,
                           const TrainerFn& trainer, uint64_t seed) {
    if (k < 2) throw Error(ErrorCode::InvalidArgument, "k must be >= 2");
    if (ds.size() < static_cast<std::size_t>(k))
        throw Error(ErrorCode::TooFewSamples,
                    "dataset smaller than fold count");

    // stratified assignment: shuffle within each class, deal round-robin
    std::vector<int> fold_of(ds.size(), 0);
    Rng rng(seed);
    for (int c = 0; c < kNumClasses; ++c) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.y[i] == c) idx.push_back(i);
        rng.shuffle(idx);
        for (std::size_t p = 0; p < idx.size(); ++p)
            fold_of[idx[p]] = static_cast<int>(p % static_cast<std::size_t>(k));
    }

    std::vector<int> y_pred(ds.size(), 0);
    std::vector<std::array<double, kNumClasses>> scores(ds.size());
    for (int f = 0; f < k; ++f) {
        Matrix Xtr;
        std::vector<int> ytr;
        std::vector<std::size_t> test_idx;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (fold_of[i] == f) {
                test_idx.push_back(i);
            } else {
                Xtr.push_back(ds.X[i]);
                ytr.push_back(ds.y[i]);
            }
        }
        if (test_idx.empty()) continue;
        if (Xtr.empty())
            throw Error(ErrorCode::TooFewSamples, "empty training fold");
        const PredictFn pf = trainer(Xtr, ytr);
        for (std::size_t i : test_idx) {
            scores[i] = pf(ds.X[i]);
            int best = 0;
            for (int c = 1; c < kNumClasses; ++c)
                if (scores[i][c] > scores[i][best]) best = c;
            y_pred[i] = best;
        }
    }
    return compute_metrics(ds.y, y_pred, scores);
}

double cv_accuracy_for_feature_set(const FeatureMatrix& m, int feature_set_id,
                                   const TrainerFn& trainer, int k,
                                   uint64_t seed) {
    const auto ds = make_dataset(m, feature_set_id);
    return kfold_cv(ds, k, trainer, seed).overall_accuracy;
}

GridSearchResult grid_search_svm(const LabeledDataset& ds,
                                 const std::vector<double>& gammas,
                                 const std::vector<double>& Cs, int k,
                                 uint64_t seed) {
    if (gammas.empty() || Cs.empty())
        throw Error(ErrorCode::InvalidArgument, "empty hyperparameter grid");
    GridSearchResult best{0.0, 0.0, -1.0};
    for (double g : gammas) {
        for (double c : Cs) {
            SvmConfig cfg;
            cfg.gamma = g;
            cfg.C = c;
            const auto metrics = kfold_cv(ds, k, svm_trainer(cfg, seed), seed);
            if (metrics.overall_accuracy > best.accuracy)
                best = {g, c, metrics.overall_accuracy};
        }
    }
    return best;
}

namespace {

std::string fmt(double v) { return format_double(v); }

}  // namespace

std::string ClassifierMetrics::to_csv() const {
    std::ostringstream out;
    out << "metric,class,value\n";
    out << "overall_accuracy,," << fmt(overall_accuracy) << '\n';
    out << "macro_class_accuracy,," << fmt(macro_class_accuracy) << '\n';
    for (int c = 0; c < kNumClasses; ++c)
        out << "class_accuracy,L" << c << ',' << fmt(per_class_accuracy[c]) << '\n';
    out << "precision_macro,," << fmt(precision_macro) << '\n';
    out << "recall_macro,," << fmt(recall_macro) << '\n';
    out << "f_score_macro,," << fmt(f_score_macro) << '\n';
    for (int c = 0; c < kNumClasses; ++c)
        if (roc[c].valid) out << "auc,L" << c << ',' << fmt(roc[c].auc) << '\n';
    for (int t = 0; t < kNumClasses; ++t)
        for (int p = 0; p < kNumClasses; ++p)
            out << "confusion,L" << t << ">L" << p << ',' << confusion[t][p] << '\n';
    return out.str();
}

std::string ClassifierMetrics::to_text() const {
    std::ostringstream out;
    out << "samples: " << n << '\n';
    out << "overall accuracy (micro): " << fmt(overall_accuracy) << '\n';
    out << "macro one-vs-rest accuracy: " << fmt(macro_class_accuracy) << '\n';
    for (int c = 0; c < kNumClasses; ++c) {
        out << "  L" << c << " accuracy " << fmt(per_class_accuracy[c]);
        if (roc[c].valid) out << "  auc " << fmt(roc[c].auc);
        out << '\n';
    }
    out << "precision/recall/F (macro): " << fmt(precision_macro) << " / "
        << fmt(recall_macro) << " / " << fmt(f_score_macro) << '\n';
    out << "confusion (rows true, cols predicted):\n";
    for (int t = 0; t < kNumClasses; ++t) {
        out << "  L" << t << ':';
        for (int p = 0; p < kNumClasses; ++p) out << ' ' << confusion[t][p];
        out << '\n';
    }
    return out.str();
}

// ------------------------------------------------------ model files

namespace {

nlohmann::json standardizer_json(const Standardizer& s) {
    return {{"mean", s.mean}, {"std", s.std}};
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
    Standardizer s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    return s;
}

}  // namespace

void save_model(const std::filesystem::path& path, const AnyModel& m) {
    nlohmann::json j;
    j["format"] = "bivol-model";
    j["version"] = 1;
    if (const auto* svm = std::get_if<SvmModel>(&m)) {
        j["type"] = "svm";
        j["feature_set"] = svm->feature_set_id;
        j["standardization"] = standardizer_json(svm->standardization);
        nlohmann::json machines = nlohmann::json::array();
        for (const auto& mc : svm->machines) {
            machines.push_back({{"bias", mc.bias},
                                {"coef", mc.coef},
                                {"support_vectors", mc.support_vectors},
                                {"kkt_gap", mc.kkt_gap}});
        }
        j["svm"] = {{"gamma", svm->gamma},
                    {"C", svm->C},
                    {"input_dim", svm->input_dim},
                    {"machines", machines}};
    } else {
        const auto& mlp = std::get<MlpModel>(m);
        j["type"] = "mlp";
        j["feature_set"] = mlp.feature_set_id;
        j["standardization"] = standardizer_json(mlp.standardization);
        j["mlp"] = {{"layer_sizes", mlp.layer_sizes},
                    {"weights", mlp.weights},
                    {"biases", mlp.biases}};
    }
    write_text_file(path, j.dump(2) + "\n");
}

AnyModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        if (j.at("format") != "bivol-model" || j.at("version") != 1)
            throw Error(ErrorCode::SchemaError, "unsupported model file");
        const std::string type = j.at("type").get<std::string>();
        if (type == "svm") {
            SvmModel m;
            m.feature_set_id = j.at("feature_set").get<int>();
            m.standardization = standardizer_from_json(j.at("standardization"));
            const auto& js = j.at("svm");
            m.gamma = js.at("gamma").get<double>();
            m.C = js.at("C").get<double>();
            m.input_dim = js.at("input_dim").get<int>();
            const auto& machines = js.at("machines");
            if (machines.size() != kNumClasses)
                throw Error(ErrorCode::SchemaError, "expected 4 machines");
            for (int c = 0; c < kNumClasses; ++c) {
                auto& mc = m.machines[c];
                mc.bias = machines[c].at("bias").get<double>();
                mc.coef = machines[c].at("coef").get<std::vector<double>>();
                mc.support_vectors = machines[c].at("support_vectors").get<Matrix>();
                mc.kkt_gap = machines[c].value("kkt_gap", 0.0);
            }
            return m;
        }
        if (type == "mlp") {
            MlpModel m;
            m.feature_set_id = j.at("feature_set").get<int>();
            m.standardization = standardizer_from_json(j.at("standardization"));
            const auto& jm = j.at("mlp");
            m.layer_sizes = jm.at("layer_sizes").get<std::vector<int>>();
            m.weights = jm.at("weights").get<std::vector<Matrix>>();
            m.biases = jm.at("biases").get<std::vector<std::vector<double>>>();
            return m;
        }
        throw Error(ErrorCode::SchemaError, "unknown model type: " + type);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaError,
                    "bad model file " + path.string() + ": " + e.what());
    }
}

}  // namespace bivol
