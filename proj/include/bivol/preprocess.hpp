#pragma once

#include <array>
#include <span>
#include <vector>

#include "bivol/types.hpp"

namespace bivol {

// One analysis window. t_start/t_end are the nominal window bounds
// (k*L, (k+1)*L); the samples inside share one time axis across channels.
// Retained windows are renumbered consecutively in time order.
struct Window {
    int index = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> t;
    std::vector<double> bi;
    std::array<std::vector<double>, 4> se;

    std::size_t size() const { return t.size(); }
};

// Baseline statistics from the first (smoothed) window: per-channel mean
// and unbiased variance.
struct CalibrationState {
    double mu_c = 0.0;
    double sigma2_c = 0.0;
    std::array<double, 4> se_mu{};
    std::array<double, 4> se_sigma2{};
    std::size_t n = 0;
};

struct LowessConfig {
    double span_frac = 0.3;  // fraction of window samples per local fit
    int robust_iters = 5;    // bisquare reweighting passes
};

// Minimum samples for a window to be usable by smoothing and features.
inline constexpr std::size_t kMinWindowSamples = 5;

// Consecutive non-overlapping windows of length window_len covering the
// session. A trailing partial window is dropped when it holds fewer than
// half the nominal sample count; windows with < kMinWindowSamples samples
// are dropped as well. Throws EmptySession when nothing remains.
std::vector<Window> segment_windows(const SessionRecording& rec, double window_len);

// Robust LOWESS: degree-1 local fits with tricube kernel weights over the
// span_frac nearest neighbours, followed by robust_iters bisquare
// reweighting passes. Values are replaced by the fit at each sample time;
// timestamps are unchanged. Throws DegenerateWindow below kMinWindowSamples.
std::vector<double> lowess(std::span<const double> x, std::span<const double> y,
                           double span_frac, int robust_iters);
Window smooth_window(const Window& w, double span_frac = 0.3, int robust_iters = 5);

// Baseline from the smoothed first window (index must be 0).
CalibrationState calibrate(const Window& first);

struct NormalizeResult {
    Window window;
    bool applied = true;  // false when sigma2_c == 0 (flagged pass-through)
};

// Z-scores every channel against the calibration baseline.
NormalizeResult normalize(const Window& w, const CalibrationState& cal);
// Inverse of normalize for the BI channel value.
double denormalize_bi(double z, const CalibrationState& cal);

double mean(std::span<const double> v);
// Unbiased sample variance; 0 for n < 2.
double sample_variance(std::span<const double> v);

}  // namespace bivol
