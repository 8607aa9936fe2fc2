#include "bivol/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bivol/errors.hpp"
#include "bivol/io.hpp"

namespace bivol {

namespace {

const std::array<const char*, kFeaturesPerChannel> kFeatureShortNames = {
    "mean", "std", "min", "max", "peak_to_peak", "energy",
    "entropy", "grad_mean", "drift_flag", "slope", "intercept"};

const std::array<const char*, kChannels> kChannelNames = {"bi", "se1", "se2",
                                                          "se3", "se4"};

double shannon_entropy_bits(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx <= mn) return 0.0;  // constant window
    constexpr int kBins = 16;
    std::array<std::size_t, kBins> counts{};
    const double width = (mx - mn) / kBins;
    for (double x : v) {
        int b = static_cast<int>((x - mn) / width);
        b = std::clamp(b, 0, kBins - 1);
        ++counts[b];
    }
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(n);
        h -= p * std::log2(p);
    }
    return h;
}

FeatureRecord channel_features(std::span<const double> t,
                               std::span<const double> v, double t_start,
                               std::optional<double> prev_mean, double sigma2_c) {
    FeatureRecord f;
    const std::size_t n = v.size();
    f.mean = mean(v);
    f.std = std::sqrt(sample_variance(v));
    const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
    f.min = *mn_it;
    f.max = *mx_it;
    f.peak_to_peak = f.max - f.min;
    f.energy = 0.0;
    for (double x : v) f.energy += x * x;
    f.entropy = shannon_entropy_bits(v);

    // OLS of value against (t - t_start); intercept is the fit at t_start.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = t[i] - t_start;
        sx += x;
        sy += v[i];
        sxx += x * x;
        sxy += x * v[i];
    }
    const double dn = static_cast<double>(n);
    const double denom = dn * sxx - sx * sx;
    if (denom > 0.0) {
        f.slope = (dn * sxy - sx * sy) / denom;
        f.intercept = (sy - f.slope * sx) / dn;
    } else {
        f.slope = 0.0;
        f.intercept = f.mean;
    }

    if (prev_mean) {
        f.grad_mean = f.mean - *prev_mean;
        f.drift_flag = drift_flag(f.mean, *prev_mean, sigma2_c, n);
    }
    return f;
}

}  // namespace

std::string feature_name(int flat_index) {
    if (flat_index < 0 || flat_index >= kTotalFeatures)
        throw Error(ErrorCode::InvalidArgument, "feature index out of range");
    const int ch = flat_index / kFeaturesPerChannel;
    const int f = flat_index % kFeaturesPerChannel;
    return std::string(kChannelNames[ch]) + "." + kFeatureShortNames[f];
}

const std::vector<std::string>& all_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        v.reserve(kTotalFeatures);
        for (int i = 0; i < kTotalFeatures; ++i) v.push_back(feature_name(i));
        return v;
    }();
    return names;
}

std::array<double, kTotalFeatures> WindowFeatures::flatten() const {
    std::array<double, kTotalFeatures> out{};
    auto put = [&out](int ch, const FeatureRecord& r) {
        const auto a = r.as_array();
        std::copy(a.begin(), a.end(), out.begin() + ch * kFeaturesPerChannel);
    };
    put(0, bi);
    for (int c = 0; c < 4; ++c) put(c + 1, se[c]);
    return out;
}

double drift_threshold(double sigma2_c, std::size_t n) {
    return 3.0 * std::sqrt(sigma2_c / static_cast<double>(n));
}

int drift_flag(double curr_mean, double prev_mean, double sigma2_c,
               std::size_t n) {
    if (n < kMinWindowSamples)
        throw Error(ErrorCode::InvalidArgument,
                    "drift_flag needs >= 5 samples per window");
    const double thr = drift_threshold(sigma2_c, n);
    const double d = curr_mean - prev_mean;
    if (d > thr) return 1;
    if (d < -thr) return -1;
    return 0;
}

ChannelMeans channel_means(const Window& w) {
    ChannelMeans m;
    m.bi = mean(w.bi);
    for (int c = 0; c < 4; ++c) m.se[c] = mean(w.se[c]);
    return m;
}

WindowFeatures extract_features(const Window& w,
                                const std::optional<ChannelMeans>& prev,
                                const CalibrationState& cal) {
    if (w.size() < kMinWindowSamples)
        throw Error(ErrorCode::DegenerateWindow,
                    "window " + std::to_string(w.index) + " too small");
    if (!prev && w.index != 0)
        throw Error(ErrorCode::InvalidArgument,
                    "previous means absent for non-first window");
    WindowFeatures out;
    out.window_index = w.index;
    out.bi = channel_features(
        w.t, w.bi, w.t_start,
        prev ? std::optional<double>(prev->bi) : std::nullopt, cal.sigma2_c);
    for (int c = 0; c < 4; ++c)
        out.se[c] = channel_features(
            w.t, w.se[c], w.t_start,
            prev ? std::optional<double>(prev->se[c]) : std::nullopt,
            cal.se_sigma2[c]);
    return out;
}

namespace {

// Flat index helpers for the registry below.
constexpr int kMean = 0, kStd = 1, kMin = 2, kMax = 3, kPtp = 4, kEnergy = 5,
              kEntropy = 6, kGradMean = 7, kDriftFlag = 8, kSlope = 9,
              kIntercept = 10;

constexpr int se(int electrode, int feature) {
    return electrode * kFeaturesPerChannel + feature;  // electrode 1..4
}

std::vector<FeatureSet> build_registry() {
    // BI features selected by recursive elimination.
    const std::vector<int> rfe_bi = {kStd, kEntropy, kGradMean, kMin,
                                     kMax, kPtp,     kSlope,    kDriftFlag};
    // All BI features in relevance order from the MRMR ranking.
    const std::vector<int> mrmr_bi = {kDriftFlag, kSlope, kIntercept, kGradMean,
                                      kStd,       kEnergy, kMax,      kEntropy,
                                      kMin,       kPtp,    kMean};
    auto with_se = [&rfe_bi](std::vector<int> extra) {
        std::vector<int> v = rfe_bi;
        v.insert(v.end(), extra.begin(), extra.end());
        return v;
    };
    std::vector<FeatureSet> reg;
    reg.push_back({1, rfe_bi, "top BI features (recursive elimination)"});
    reg.push_back({2, mrmr_bi, "top BI features (MRMR)"});
    reg.push_back({3,
                   with_se({se(1, kMean), se(1, kEnergy), se(2, kMean),
                            se(3, kMean), se(3, kEnergy), se(4, kMean)}),
                   "BI + selected SE mean/energy features"});
    reg.push_back({4,
                   with_se({se(1, kMean), se(2, kMean), se(3, kMean),
                            se(4, kMean)}),
                   "BI + all SE mean features"});
    reg.push_back({5, with_se({se(1, kEnergy), se(3, kEnergy)}),
                   "BI + selected SE energy features"});
    return reg;
}

}  // namespace

const FeatureSet& feature_set(int id) {
    static const std::vector<FeatureSet> registry = build_registry();
    if (id < 1 || id > static_cast<int>(registry.size()))
        throw Error(ErrorCode::UnknownFeatureSet,
                    "unknown feature set id " + std::to_string(id));
    return registry[static_cast<std::size_t>(id - 1)];
}

std::vector<double> project(const std::array<double, kTotalFeatures>& flat,
                            const FeatureSet& fs) {
    std::vector<double> out;
    out.reserve(fs.indices.size());
    for (int i : fs.indices) out.push_back(flat[static_cast<std::size_t>(i)]);
    return out;
}

namespace {

std::string feature_csv_header(bool labeled) {
    std::ostringstream h;
    h << "window";
    for (const auto& n : all_feature_names()) h << ',' << n;
    if (labeled) h << ",label";
    return h.str();
}

}  // namespace

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
    if (m.labeled() && m.labels.size() != m.rows.size())
        throw Error(ErrorCode::DimensionMismatch, "labels/rows size mismatch");
    std::ostringstream out;
    out << feature_csv_header(m.labeled()) << '\n';
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        out << (r < m.window_index.size() ? m.window_index[r]
                                          : static_cast<int>(r));
        for (double v : m.rows[r]) out << ',' << format_double(v);
        if (m.labeled()) out << ',' << m.labels[r];
        out << '\n';
    }
    write_text_file(path, out.str());
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path) {
    FeatureMatrix m;
    bool labeled = true;
    std::vector<std::string> lines;
    try {
        lines = read_csv_body(path, feature_csv_header(true));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SchemaError) throw;
        labeled = false;
        lines = read_csv_body(path, feature_csv_header(false));
    }
    const std::size_t expect = 1 + kTotalFeatures + (labeled ? 1 : 0);
    for (const auto& line : lines) {
        auto f = split_csv_line(line);
        if (f.size() != expect)
            throw Error(ErrorCode::SchemaError,
                        "feature CSV row has " + std::to_string(f.size()) +
                            " columns, expected " + std::to_string(expect));
        m.window_index.push_back(static_cast<int>(parse_double(f[0])));
        std::array<double, kTotalFeatures> row{};
        for (int i = 0; i < kTotalFeatures; ++i)
            row[static_cast<std::size_t>(i)] =
                parse_double(f[static_cast<std::size_t>(i + 1)]);
        m.rows.push_back(row);
        if (labeled)
            m.labels.push_back(static_cast<int>(parse_double(f.back())));
    }
    return m;
}

}  // namespace bivol
