#include "bivol/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "bivol/errors.hpp"
#include "bivol/preprocess.hpp"
#include "bivol/rng.hpp"

namespace bivol {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Piecewise-linear time warp mapping [0,T] onto [0,1] with the midpoint
// (the sin^2 peak) reached at peak_frac * T.
double warp(double t, double T, double peak_frac) {
    const double tp = peak_frac * T;
    if (t <= tp) return tp > 0.0 ? 0.5 * t / tp : 0.5;
    return 0.5 + 0.5 * (t - tp) / (T - tp);
}

// Integral of sin^2(pi u) from 0 to w.
double sin2_integral(double w) {
    return 0.5 * w - std::sin(2.0 * kPi * w) / (4.0 * kPi);
}

void check_voiding(const VoidingProfile& p) {
    if (!(p.voided_volume_ml > 0.0))
        throw Error(ErrorCode::InvalidArgument, "voided volume must be > 0");
    if (!(p.duration_s > 0.0))
        throw Error(ErrorCode::InvalidArgument, "voiding duration must be > 0");
    if (!(p.peak_frac > 0.0 && p.peak_frac < 1.0))
        throw Error(ErrorCode::InvalidArgument, "peak_frac must be in (0,1)");
}

}  // namespace

ArtefactSpec::Kind artefact_kind_from_string(const std::string& s) {
    if (s == "noise" || s == "highvariance") return ArtefactSpec::Kind::HighVariance;
    if (s == "drift+" || s == "positivedrift") return ArtefactSpec::Kind::PositiveDrift;
    if (s == "drift-" || s == "negativedrift") return ArtefactSpec::Kind::NegativeDrift;
    throw Error(ErrorCode::InvalidArgument, "unknown artefact kind: " + s);
}

double flow_rate(const VoidingProfile& p, double t) {
    check_voiding(p);
    if (t <= 0.0 || t >= p.duration_s) return 0.0;
    const double qmax = 2.0 * p.voided_volume_ml / p.duration_s;
    const double s = std::sin(kPi * warp(t, p.duration_s, p.peak_frac));
    return qmax * s * s;
}

double voided_by(const VoidingProfile& p, double t) {
    check_voiding(p);
    if (t <= 0.0) return 0.0;
    if (t >= p.duration_s) return p.voided_volume_ml;
    const double T = p.duration_s;
    const double tp = p.peak_frac * T;
    const double qmax = 2.0 * p.voided_volume_ml / T;
    double integral;  // of sin^2(pi w(tau)) dtau
    if (t <= tp) {
        integral = 2.0 * tp * sin2_integral(0.5 * t / tp);
    } else {
        integral = 2.0 * tp * sin2_integral(0.5) +
                   2.0 * (T - tp) *
                       (sin2_integral(warp(t, T, p.peak_frac)) - sin2_integral(0.5));
    }
    return qmax * integral;
}

SimResult gen_filling(const FillingProfile& p, uint64_t seed) {
    if (!(p.duration_min > 0.0))
        throw Error(ErrorCode::InvalidArgument, "duration must be > 0");
    std::vector<RateSegment> segs = p.segments;
    if (segs.empty()) {
        if (!(p.rate_ml_per_min > 0.0))
            throw Error(ErrorCode::InvalidArgument, "rate must be > 0");
        segs.push_back({p.duration_min, p.rate_ml_per_min});
    }
    for (const auto& s : segs)
        if (!(s.duration_min > 0.0) || !(s.rate_ml_per_min > 0.0))
            throw Error(ErrorCode::InvalidArgument, "bad rate segment");

    auto volume_at = [&segs](double t_min) {
        double v = 0.0, t = t_min;
        for (const auto& s : segs) {
            const double d = std::min(t, s.duration_min);
            if (d <= 0.0) break;
            v += d * s.rate_ml_per_min;
            t -= d;
        }
        if (t > 0.0 && !segs.empty()) v += t * segs.back().rate_ml_per_min;
        return v;
    };

    Rng rng(seed);
    std::array<double, 4> se_base;
    for (auto& b : se_base) b = rng.uniform(100.0, 2000.0);

    SimResult out;
    out.rec.meta.subject_id = "sim";
    out.rec.meta.context = MeasurementContext::Filling;
    out.rec.meta.delta = p.delta_ohm_per_ml;
    out.rec.meta.window_len = kDefaultFillingWindow;

    const double duration_s = p.duration_min * 60.0;
    const long long n_samples =
        static_cast<long long>(std::floor(duration_s / kNominalSamplePeriod + 1e-9)) + 1;
    double confounder_onset_min = -1.0;  // time the onset volume is crossed
    for (long long i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) * kNominalSamplePeriod;
        const double t_min = t / 60.0;
        const double v = volume_at(t_min);
        double bi = p.mu0_ohm - p.delta_ohm_per_ml * v;
        if (p.confounder && v >= p.confounder->onset_volume_ml) {
            if (confounder_onset_min < 0.0) confounder_onset_min = t_min;
            bi += p.confounder->drift_ohm_per_min * (t_min - confounder_onset_min);
        }
        if (p.noise_sd_ohm > 0.0) bi += rng.normal(0.0, p.noise_sd_ohm);
        Sample s;
        s.t = t;
        s.bi = bi;
        for (int c = 0; c < 4; ++c) {
            s.se[c] = se_base[c];
            if (p.se_noise_sd_ohm > 0.0)
                s.se[c] += rng.normal(0.0, p.se_noise_sd_ohm);
        }
        out.rec.samples.push_back(s);
        out.truth.points.push_back({t, v});
    }
    out.rec.meta.ground_truth = out.truth;
    return out;
}

SimResult gen_voiding(const VoidingProfile& p, uint64_t seed) {
    check_voiding(p);
    Rng rng(seed);
    std::array<double, 4> se_base;
    for (auto& b : se_base) b = rng.uniform(100.0, 2000.0);

    SimResult out;
    out.rec.meta.subject_id = "sim";
    out.rec.meta.context = MeasurementContext::Voiding;
    out.rec.meta.delta = p.delta_ohm_per_ml;
    out.rec.meta.window_len = kDefaultVoidingWindow;

    const long long n_samples = static_cast<long long>(
        std::floor(p.duration_s / kNominalSamplePeriod + 1e-9)) + 1;
    for (long long i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) * kNominalSamplePeriod;
        const double voided = voided_by(p, t);
        double bi = p.mu0_ohm + p.delta_ohm_per_ml * voided;
        if (p.noise_sd_ohm > 0.0) bi += rng.normal(0.0, p.noise_sd_ohm);
        Sample s;
        s.t = t;
        s.bi = bi;
        for (int c = 0; c < 4; ++c) {
            s.se[c] = se_base[c];
            if (p.se_noise_sd_ohm > 0.0)
                s.se[c] += rng.normal(0.0, p.se_noise_sd_ohm);
        }
        out.rec.samples.push_back(s);
        // ground truth records the remaining bladder content
        out.truth.points.push_back({t, p.voided_volume_ml - voided});
    }
    out.rec.meta.ground_truth = out.truth;
    return out;
}

namespace {

std::vector<ArtefactLabel> label_by_rules(const SessionRecording& rec,
                                          double cal_sd,
                                          const std::vector<ArtefactSpec>& specs) {
    const auto windows = segment_windows(rec, rec.meta.window_len);
    std::vector<ArtefactLabel> labels(windows.size(), ArtefactLabel::L0_NoChange);
    double prev_mean = 0.0;
    for (std::size_t k = 0; k < windows.size(); ++k) {
        const auto& w = windows[k];
        const bool noisy =
            std::any_of(specs.begin(), specs.end(), [&w](const ArtefactSpec& a) {
                return a.kind == ArtefactSpec::Kind::HighVariance &&
                       a.t_start < w.t_end && a.t_end > w.t_start;
            });
        const double m = mean(w.bi);
        if (noisy) {
            labels[k] = ArtefactLabel::L1_HighVarianceNoise;
        } else if (k > 0) {
            const double thr = drift_threshold(cal_sd * cal_sd, w.size());
            const double d = m - prev_mean;
            if (d > thr)
                labels[k] = ArtefactLabel::L2_PositiveDrift;
            else if (d < -thr)
                labels[k] = ArtefactLabel::L3_NegativeDrift;
        }
        prev_mean = m;
    }
    return labels;
}

}  // namespace

std::vector<ArtefactLabel> derive_trend_labels(const SessionRecording& rec,
                                               double cal_sd) {
    return label_by_rules(rec, cal_sd, {});
}

InjectResult inject_artefacts(const SessionRecording& rec,
                              std::vector<ArtefactSpec> specs, double cal_sd,
                              uint64_t seed) {
    if (rec.samples.empty())
        throw Error(ErrorCode::EmptySession, "empty recording");
    const double t0 = rec.samples.front().t;
    const double t_last = rec.samples.back().t;
    std::sort(specs.begin(), specs.end(),
              [](const ArtefactSpec& a, const ArtefactSpec& b) {
                  return a.t_start < b.t_start;
              });
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& a = specs[i];
        if (!(a.t_start < a.t_end) || a.t_start < t0 || a.t_end > t_last)
            throw Error(ErrorCode::InvalidSpan, "artefact span outside session");
        if (a.kind == ArtefactSpec::Kind::HighVariance && a.magnitude < 2.5)
            throw Error(ErrorCode::InvalidArgument,
                        "high-variance multiplier must be >= 2.5");
        if (i > 0 && specs[i - 1].t_end > a.t_start)
            throw Error(ErrorCode::OverlappingSpans, "artefact spans overlap");
    }

    InjectResult out;
    out.rec = rec;
    Rng rng(seed);
    for (auto& s : out.rec.samples) {
        for (const auto& a : specs) {
            switch (a.kind) {
                case ArtefactSpec::Kind::HighVariance:
                    if (s.t >= a.t_start && s.t <= a.t_end)
                        s.bi += rng.normal(0.0, cal_sd * std::sqrt(a.magnitude));
                    break;
                case ArtefactSpec::Kind::PositiveDrift:
                case ArtefactSpec::Kind::NegativeDrift: {
                    const double mag = a.kind == ArtefactSpec::Kind::PositiveDrift
                                           ? a.magnitude
                                           : -a.magnitude;
                    if (s.t >= a.t_end) {
                        s.bi += mag;  // ramps persist as a baseline offset
                    } else if (s.t > a.t_start) {
                        s.bi += mag * (s.t - a.t_start) / (a.t_end - a.t_start);
                    }
                    break;
                }
            }
        }
    }
    out.labels = label_by_rules(out.rec, cal_sd, specs);
    return out;
}

FeatureMatrix gen_labeled_corpus(const CorpusOptions& opt, uint64_t seed) {
    if (opt.per_class <= 0)
        throw Error(ErrorCode::InvalidArgument, "per_class must be > 0");
    Rng rng(seed);
    const double L = opt.window_len_s;
    const std::size_t n = static_cast<std::size_t>(
        std::llround(L / kNominalSamplePeriod));
    const double sd = opt.noise_sd_ohm;

    auto make_window = [&](int index, double t_start) {
        Window w;
        w.index = index;
        w.t_start = t_start;
        w.t_end = t_start + L;
        w.t.resize(n);
        w.bi.resize(n);
        for (auto& ch : w.se) ch.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            w.t[i] = t_start + static_cast<double>(i) * kNominalSamplePeriod;
        return w;
    };

    // shared calibration: a flat baseline window, smoothed like the pipeline
    Window cal_raw = make_window(0, 0.0);
    const double mu_cal = 500.0;
    for (std::size_t i = 0; i < n; ++i) {
        cal_raw.bi[i] = mu_cal + rng.normal(0.0, sd);
        for (int c = 0; c < 4; ++c)
            cal_raw.se[c][i] = 400.0 + 100.0 * c + rng.normal(0.0, 0.5);
    }
    const Window cal_smooth = smooth_window(cal_raw);
    const CalibrationState cal = calibrate(cal_smooth);
    const double sigma2_raw = sample_variance(cal_raw.bi);
    const double thr_raw = drift_threshold(sigma2_raw, n);

    FeatureMatrix out;
    std::array<int, 4> filled{};
    const int target = opt.per_class;
    int attempts = 0;
    const int max_attempts = target * 40;

    while ((filled[0] < target || filled[1] < target || filled[2] < target ||
            filled[3] < target) &&
           attempts < max_attempts) {
        const int intent = attempts % 4;
        ++attempts;
        const double mu = rng.uniform(300.0, 900.0);

        Window prev = make_window(0, 0.0);
        Window curr = make_window(1, L);
        std::array<double, 4> se_base;
        for (auto& b : se_base) b = rng.uniform(100.0, 2000.0);
        for (std::size_t i = 0; i < n; ++i) {
            prev.bi[i] = mu + rng.normal(0.0, sd);
            for (int c = 0; c < 4; ++c) {
                prev.se[c][i] = se_base[c] + rng.normal(0.0, 0.5);
                curr.se[c][i] = se_base[c] + rng.normal(0.0, 0.5);
            }
        }

        double noise_scale = sd;
        double dmean = 0.0;
        switch (intent) {
            case 0:  // flat, sub-threshold offset
                dmean = rng.uniform(-0.3, 0.3) * thr_raw;
                break;
            case 1:  // high-variance noise
                noise_scale = sd * std::sqrt(rng.uniform(2.5, 8.0));
                dmean = rng.uniform(-0.3, 0.3) * thr_raw;
                break;
            case 2:
                dmean = rng.uniform(1.2, 8.0) * thr_raw;
                break;
            case 3:
                dmean = -rng.uniform(1.2, 8.0) * thr_raw;
                break;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double frac = static_cast<double>(i) / static_cast<double>(n - 1);
            curr.bi[i] = mu + 2.0 * dmean * frac + rng.normal(0.0, noise_scale);
        }
        // SE disturbance coupled with artefact-like windows
        if (intent != 0) {
            for (int c = 0; c < 4; ++c) {
                if (rng.uniform01() > opt.se_artefact_coupling) continue;
                const double bump = rng.uniform(2.0, 12.0);
                for (std::size_t i = 0; i < n; ++i)
                    curr.se[c][i] +=
                        bump * static_cast<double>(i) / static_cast<double>(n - 1) +
                        rng.normal(0.0, 1.0);
            }
        }

        // rule-true label from the raw windows
        ArtefactLabel label;
        if (intent == 1 && sample_variance(curr.bi) > 2.5 * sigma2_raw) {
            label = ArtefactLabel::L1_HighVarianceNoise;
        } else {
            const double d = mean(curr.bi) - mean(prev.bi);
            if (d > thr_raw)
                label = ArtefactLabel::L2_PositiveDrift;
            else if (d < -thr_raw)
                label = ArtefactLabel::L3_NegativeDrift;
            else
                label = ArtefactLabel::L0_NoChange;
        }
        const int code = label_code(label);
        if (filled[code] >= target) continue;
        ++filled[code];

        const Window prev_s = smooth_window(prev);
        const Window curr_s = smooth_window(curr);
        const auto feats =
            extract_features(curr_s, channel_means(prev_s), cal);
        out.rows.push_back(feats.flatten());
        out.window_index.push_back(static_cast<int>(out.rows.size()) - 1);
        out.labels.push_back(code);
    }
    if (filled[0] < target || filled[1] < target || filled[2] < target ||
        filled[3] < target)
        throw Error(ErrorCode::DegenerateData,
                    "corpus generation could not balance classes");
    return out;
}

}  // namespace bivol
