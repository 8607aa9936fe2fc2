#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bivol/features.hpp"
#include "bivol/ranking.hpp"
#include "bivol/types.hpp"

namespace bivol {

inline constexpr int kNumClasses = 4;

// Per-column standardization constants, learned from training rows only.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> std;

    void fit(const Matrix& X);
    std::vector<double> transform(std::span<const double> x) const;
    Matrix transform(const Matrix& X) const;
    bool fitted() const { return !mean.empty(); }
};

// Feature rows after feature-set projection, with label codes 0..3.
struct LabeledDataset {
    Matrix X;
    std::vector<int> y;
    Standardizer standardization;

    std::size_t size() const { return X.size(); }
    int dim() const { return X.empty() ? 0 : static_cast<int>(X[0].size()); }
    int n_classes() const;
};

LabeledDataset make_dataset(const FeatureMatrix& m, int feature_set_id);

// ------------------------------------------------------------------ SVM

// One one-vs-rest binary machine: decision = sum(coef_i * K(sv_i, x)) + bias.
struct SvmBinary {
    Matrix support_vectors;
    std::vector<double> coef;  // alpha_i * y_i, |coef| <= C
    double bias = 0.0;
    double kkt_gap = 0.0;  // final max KKT violation (m - M)
    int iterations = 0;
};

enum class SvmKernel { Rbf, Linear };

struct SvmModel {
    SvmKernel kernel = SvmKernel::Rbf;
    double gamma = 0.1;
    double C = 100.0;
    int input_dim = 0;
    int feature_set_id = 0;  // 0 when trained on raw rows
    Standardizer standardization;
    std::array<SvmBinary, kNumClasses> machines;
};

struct SvmConfig {
    double gamma = 0.1;
    double C = 100.0;
    double tol = 1e-3;       // KKT stopping tolerance
    int max_iter = 100000;   // SMO pair updates before NoConvergence
};

// Four one-vs-rest RBF machines trained by sequential minimal optimization
// with maximal-violating-pair selection. Fully deterministic; the seed is
// accepted for interface symmetry with the MLP trainer.
SvmModel train_svm(const LabeledDataset& ds, const SvmConfig& cfg = {},
                   uint64_t seed = 0);

// Linear-kernel variant (used for recursive feature elimination).
SvmModel train_linear_svm(const LabeledDataset& ds, const SvmConfig& cfg = {});

std::array<double, kNumClasses> svm_scores(const SvmModel& m,
                                           std::span<const double> x);

// ------------------------------------------------------------------ MLP

struct MlpModel {
    std::vector<int> layer_sizes;  // [in, hidden..., 4]
    std::vector<Matrix> weights;   // per layer, out x in
    std::vector<std::vector<double>> biases;
    int feature_set_id = 0;
    Standardizer standardization;

    std::size_t param_count() const;
    std::vector<double> flat_params() const;
    void set_flat_params(std::span<const double> p);
};

struct MlpConfig {
    std::vector<int> hidden{8, 8, 8, 8, 8, 8};
    int epochs = 500;
    double lr = 0.01;
    int batch_size = 32;
};

// Glorot-uniform initialized network, relu hidden units, per-class sigmoid
// outputs. Deterministic under seed.
MlpModel init_mlp(int input_dim, const std::vector<int>& hidden, uint64_t seed);

// One-hot targets from label codes.
Matrix one_hot_targets(const std::vector<int>& y);

// Mean over rows of the binary cross-entropy summed across the 4 outputs.
double mlp_loss(const MlpModel& m, const Matrix& X, const Matrix& targets);
// Loss plus gradient in flat-parameter order (matches flat_params()).
std::pair<double, std::vector<double>> mlp_loss_and_grad(const MlpModel& m,
                                                         const Matrix& X,
                                                         const Matrix& targets);

struct MlpTrainResult {
    MlpModel model;
    double final_loss = 0.0;
};

// Mini-batch gradient descent on the loss above. Throws DivergedLoss when
// the loss stops being finite.
MlpTrainResult train_mlp(const LabeledDataset& ds, const MlpConfig& cfg = {},
                         uint64_t seed = 0);

std::array<double, kNumClasses> mlp_scores(const MlpModel& m,
                                           std::span<const double> x);

// ------------------------------------------------------------- predict

struct Prediction {
    ArtefactLabel label;
    std::array<double, kNumClasses> scores;
};

using AnyModel = std::variant<SvmModel, MlpModel>;

// Argmax of the per-class scores, ties broken toward the lower label code.
Prediction predict(const SvmModel& m, std::span<const double> x);
Prediction predict(const MlpModel& m, std::span<const double> x);
Prediction predict(const AnyModel& m, std::span<const double> x);
int model_input_dim(const AnyModel& m);
int model_feature_set_id(const AnyModel& m);

// ------------------------------------------------- cross-validation

using PredictFn = std::function<std::array<double, kNumClasses>(std::span<const double>)>;
using TrainerFn = std::function<PredictFn(const Matrix& X, const std::vector<int>& y)>;

// Trainers that fit standardization on their training rows and wrap the
// resulting model; rows passed to the returned PredictFn are raw.
TrainerFn svm_trainer(const SvmConfig& cfg = {}, uint64_t seed = 0);
TrainerFn mlp_trainer(const MlpConfig& cfg = {}, uint64_t seed = 0);

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (FPR, TPR)
    double auc = 0.0;
    bool valid = false;  // false when only one class is present
};

// One-vs-rest ROC per class from per-sample scores; trapezoid AUC.
std::array<RocCurve, kNumClasses> roc_auc(
    const std::vector<std::array<double, kNumClasses>>& scores,
    const std::vector<int>& y);

struct ClassifierMetrics {
    std::array<std::array<int, kNumClasses>, kNumClasses> confusion{};  // [true][pred]
    double overall_accuracy = 0.0;  // micro
    std::array<double, kNumClasses> per_class_accuracy{};  // one-vs-rest
    double macro_class_accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f_score_macro = 0.0;
    std::array<RocCurve, kNumClasses> roc{};
    std::size_t n = 0;

    std::string to_csv() const;
    std::string to_text() const;
};

ClassifierMetrics compute_metrics(
    const std::vector<int>& y_true, const std::vector<int>& y_pred,
    const std::vector<std::array<double, kNumClasses>>& scores);

// Stratified k-fold cross-validation aggregating all out-of-fold
// predictions into a single confusion matrix and metric set.
ClassifierMetrics kfold_cv(const LabeledDataset& ds, int k,
                           const TrainerFn& trainer, uint64_t seed);

// Accuracy of one feature set under k-fold CV (comparison harness).
double cv_accuracy_for_feature_set(const FeatureMatrix& m, int feature_set_id,
                                   const TrainerFn& trainer, int k,
                                   uint64_t seed);

struct GridSearchResult {
    double gamma = 0.0;
    double C = 0.0;
    double accuracy = 0.0;
};

// Small documented grid over (gamma, C) scored by 10-fold CV accuracy.
GridSearchResult grid_search_svm(const LabeledDataset& ds,
                                 const std::vector<double>& gammas,
                                 const std::vector<double>& Cs, int k,
                                 uint64_t seed);

// ------------------------------------------------------ model files

// Versioned JSON model documents (weights / support vectors as arrays,
// feature-set id and standardization constants as metadata).
void save_model(const std::filesystem::path& path, const AnyModel& m);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace bivol
