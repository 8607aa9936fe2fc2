#include "bivol/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bivol/errors.hpp"

namespace bivol {

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(n - 1);
}

std::vector<Window> segment_windows(const SessionRecording& rec, double window_len) {
    if (window_len <= 0.0)
        throw Error(ErrorCode::InvalidArgument, "window_len must be > 0");
    if (rec.samples.empty())
        throw Error(ErrorCode::EmptySession, "no samples in session");

    const double t0 = rec.samples.front().t;
    const double t_last = rec.samples.back().t;
    const int n_windows =
        static_cast<int>(std::floor((t_last - t0) / window_len)) + 1;
    const std::size_t nominal_count = static_cast<std::size_t>(
        std::llround(window_len / kNominalSamplePeriod));

    std::vector<Window> windows(static_cast<std::size_t>(n_windows));
    for (int k = 0; k < n_windows; ++k) {
        windows[k].t_start = t0 + k * window_len;
        windows[k].t_end = t0 + (k + 1) * window_len;
    }
    for (const auto& s : rec.samples) {
        int k = static_cast<int>(std::floor((s.t - t0) / window_len));
        k = std::clamp(k, 0, n_windows - 1);
        // guard against float edge: sample exactly at a boundary belongs right
        if (s.t >= windows[k].t_end && k + 1 < n_windows) ++k;
        auto& w = windows[k];
        w.t.push_back(s.t);
        w.bi.push_back(s.bi);
        for (int c = 0; c < 4; ++c) w.se[c].push_back(s.se[c]);
    }

    // Drop a trailing partial window below 50% of the nominal sample count.
    if (!windows.empty() && windows.back().size() * 2 < nominal_count)
        windows.pop_back();
    // Drop windows too small for smoothing/features.
    std::erase_if(windows,
                  [](const Window& w) { return w.size() < kMinWindowSamples; });

    if (windows.empty())
        throw Error(ErrorCode::EmptySession,
                    "no complete window fits the session");
    for (std::size_t i = 0; i < windows.size(); ++i)
        windows[i].index = static_cast<int>(i);
    return windows;
}

namespace {

double tricube(double u) {
    if (u >= 1.0) return 0.0;
    const double c = 1.0 - u * u * u;
    return c * c * c;
}

// Weighted degree-1 least squares of y against x, evaluated at x0.
// Falls back to the weighted mean when the x spread is degenerate.
double weighted_linear_fit(std::span<const double> x, std::span<const double> y,
                           std::span<const double> w, std::size_t lo,
                           std::size_t hi, double x0) {
    double sw = 0.0, swx = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
        sw += w[j];
        swx += w[j] * x[j];
    }
    if (sw <= 0.0) return y[lo + (hi - lo) / 2];
    const double xbar = swx / sw;
    double sxx = 0.0, sxy = 0.0, sy = 0.0;
    for (std::size_t j = lo; j < hi; ++j) {
        const double dx = x[j] - xbar;
        sxx += w[j] * dx * dx;
        sxy += w[j] * dx * y[j];
        sy += w[j] * y[j];
    }
    const double ybar = sy / sw;
    if (sxx <= 1e-12 * (x.back() - x.front()) * (x.back() - x.front()))
        return ybar;
    const double slope = sxy / sxx;
    return ybar + slope * (x0 - xbar);
}

}  // namespace

std::vector<double> lowess(std::span<const double> x, std::span<const double> y,
                           double span_frac, int robust_iters) {
    const std::size_t n = x.size();
    if (n != y.size())
        throw Error(ErrorCode::InvalidArgument, "lowess: x/y size mismatch");
    if (n < kMinWindowSamples)
        throw Error(ErrorCode::DegenerateWindow,
                    "lowess needs >= " + std::to_string(kMinWindowSamples) +
                        " samples, got " + std::to_string(n));
    if (!(span_frac > 0.0 && span_frac <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "span_frac must be in (0,1]");
    if (robust_iters < 0)
        throw Error(ErrorCode::InvalidArgument, "robust_iters must be >= 0");

    const std::size_t ns = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(span_frac * static_cast<double>(n))),
        2, n);

    std::vector<double> fitted(n, 0.0);
    std::vector<double> robust_w(n, 1.0);
    std::vector<double> kernel_w(n, 0.0);
    std::vector<double> res(n, 0.0);

    for (int iter = 0; iter <= robust_iters; ++iter) {
        std::size_t lo = 0, hi = ns;  // nearest-neighbour span [lo, hi)
        for (std::size_t i = 0; i < n; ++i) {
            // slide the span right while that shrinks the radius around x[i]
            while (hi < n && x[i] - x[lo] > x[hi] - x[i]) {
                ++lo;
                ++hi;
            }
            const double h = std::max(x[i] - x[lo], x[hi - 1] - x[i]);
            for (std::size_t j = lo; j < hi; ++j) {
                const double u = h > 0.0 ? std::abs(x[j] - x[i]) / h : 0.0;
                kernel_w[j] = tricube(u) * robust_w[j];
            }
            fitted[i] = weighted_linear_fit(x, y, kernel_w, lo, hi, x[i]);
        }
        if (iter == robust_iters) break;

        for (std::size_t i = 0; i < n; ++i) res[i] = std::abs(y[i] - fitted[i]);
        std::vector<double> tmp(res);
        std::nth_element(tmp.begin(), tmp.begin() + n / 2, tmp.end());
        double med = tmp[n / 2];
        if (n % 2 == 0) {
            std::nth_element(tmp.begin(), tmp.begin() + n / 2 - 1, tmp.end());
            med = 0.5 * (med + tmp[n / 2 - 1]);
        }
        const double s = 6.0 * med;  // bisquare scale
        if (s <= 0.0) {
            std::fill(robust_w.begin(), robust_w.end(), 1.0);
            break;  // perfect fit, further iterations are no-ops
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double u = res[i] / s;
            robust_w[i] = u >= 1.0 ? 0.0 : (1.0 - u * u) * (1.0 - u * u);
        }
    }
    return fitted;
}

Window smooth_window(const Window& w, double span_frac, int robust_iters) {
    if (w.size() < kMinWindowSamples)
        throw Error(ErrorCode::DegenerateWindow,
                    "window " + std::to_string(w.index) + " has " +
                        std::to_string(w.size()) + " samples");
    Window out = w;
    out.bi = lowess(w.t, w.bi, span_frac, robust_iters);
    for (int c = 0; c < 4; ++c)
        out.se[c] = lowess(w.t, w.se[c], span_frac, robust_iters);
    return out;
}

CalibrationState calibrate(const Window& first) {
    if (first.index != 0)
        throw Error(ErrorCode::InvalidCalibration,
                    "calibration requires window index 0, got " +
                        std::to_string(first.index));
    if (first.size() < kMinWindowSamples)
        throw Error(ErrorCode::DegenerateWindow, "calibration window too small");
    CalibrationState cal;
    cal.n = first.size();
    cal.mu_c = mean(first.bi);
    cal.sigma2_c = sample_variance(first.bi);
    for (int c = 0; c < 4; ++c) {
        cal.se_mu[c] = mean(first.se[c]);
        cal.se_sigma2[c] = sample_variance(first.se[c]);
    }
    return cal;
}

NormalizeResult normalize(const Window& w, const CalibrationState& cal) {
    NormalizeResult out{w, true};
    if (cal.sigma2_c <= 0.0) {
        out.applied = false;
        return out;
    }
    const double sd = std::sqrt(cal.sigma2_c);
    for (auto& v : out.window.bi) v = (v - cal.mu_c) / sd;
    for (int c = 0; c < 4; ++c) {
        if (cal.se_sigma2[c] <= 0.0) continue;
        const double se_sd = std::sqrt(cal.se_sigma2[c]);
        for (auto& v : out.window.se[c]) v = (v - cal.se_mu[c]) / se_sd;
    }
    return out;
}

double denormalize_bi(double z, const CalibrationState& cal) {
    return cal.mu_c + z * std::sqrt(cal.sigma2_c);
}

}  // namespace bivol
