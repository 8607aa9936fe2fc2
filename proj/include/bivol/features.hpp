#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bivol/preprocess.hpp"
#include "bivol/types.hpp"

namespace bivol {

// Per-channel descriptive statistics of a smoothed window. Values are in
// raw smoothed ohms; entropy is in bits (16-bin histogram).
struct FeatureRecord {
    double mean = 0.0;
    double std = 0.0;
    double min = 0.0;
    double max = 0.0;
    double peak_to_peak = 0.0;
    double energy = 0.0;   // sum of squared values
    double entropy = 0.0;  // Shannon, log2, 0*log0 := 0
    double grad_mean = 0.0;  // mean(this) - mean(previous window)
    double drift_flag = 0.0;  // -1, 0, +1
    double slope = 0.0;       // OLS of value against (t - t_start)
    double intercept = 0.0;   // fit value at window start

    std::array<double, 11> as_array() const {
        return {mean, std, min, max, peak_to_peak, energy,
                entropy, grad_mean, drift_flag, slope, intercept};
    }
};

inline constexpr int kFeaturesPerChannel = 11;
inline constexpr int kChannels = 5;  // bi, se1..se4
inline constexpr int kTotalFeatures = kFeaturesPerChannel * kChannels;

// Flattened layout: channel-major, bi first then se1..se4, features in
// FeatureRecord order. feature_name(i) yields "bi.mean", "se3.energy", ...
std::string feature_name(int flat_index);
const std::vector<std::string>& all_feature_names();

struct WindowFeatures {
    int window_index = 0;
    FeatureRecord bi;
    std::array<FeatureRecord, 4> se;

    std::array<double, kTotalFeatures> flatten() const;
};

// Previous-window means per channel, input to grad_mean / drift_flag.
struct ChannelMeans {
    double bi = 0.0;
    std::array<double, 4> se{};
};

// Drift decision: +-1 when |curr - prev| exceeds 3*sqrt(sigma2_c/n),
// else 0. n is the number of samples in the current window.
int drift_flag(double curr_mean, double prev_mean, double sigma2_c, std::size_t n);
// Threshold used by the rule above (and by the simulator's label rules).
double drift_threshold(double sigma2_c, std::size_t n);

// Features of a smoothed window. prev is absent only for window 0, which
// gets grad_mean = 0 and drift_flag = 0 on all channels.
WindowFeatures extract_features(const Window& w,
                                const std::optional<ChannelMeans>& prev,
                                const CalibrationState& cal);

ChannelMeans channel_means(const Window& w);

// Feature subsets evaluated for artefact classification. Sizes are fixed:
// 1 -> 8, 2 -> 11, 3 -> 14, 4 -> 12, 5 -> 10.
struct FeatureSet {
    int id = 0;
    std::vector<int> indices;  // into the flattened 55-entry vector
    std::string description;
};

// Registry lookup; throws UnknownFeatureSet outside 1..5.
const FeatureSet& feature_set(int id);

std::vector<double> project(const std::array<double, kTotalFeatures>& flat,
                            const FeatureSet& fs);

// Feature matrix CSV: header `window,<55 names>[,label]`.
struct FeatureMatrix {
    std::vector<std::array<double, kTotalFeatures>> rows;
    std::vector<int> window_index;
    std::vector<int> labels;  // empty when unlabeled

    bool labeled() const { return !labels.empty(); }
};

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(const std::filesystem::path& path);

}  // namespace bivol
