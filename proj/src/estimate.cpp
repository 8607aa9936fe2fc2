#include "bivol/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bivol/errors.hpp"
#include "bivol/features.hpp"
#include "bivol/io.hpp"

namespace bivol {

bool is_artefact(ArtefactLabel label, MeasurementContext ctx) {
    switch (label) {
        case ArtefactLabel::L0_NoChange:
        case ArtefactLabel::L1_HighVarianceNoise:
            return true;
        case ArtefactLabel::L2_PositiveDrift:
            return ctx == MeasurementContext::Filling;
        case ArtefactLabel::L3_NegativeDrift:
            return ctx == MeasurementContext::Voiding;
    }
    return false;
}

FilterState init_filter(const CalibrationState& cal, const SensitivityModel& sens,
                        MeasurementContext ctx, double dt_seconds,
                        double v_rate0_ml_per_min, double q0_ml_per_s) {
    if (!(dt_seconds > 0.0))
        throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
    if (!(v_rate0_ml_per_min > 0.0) || !(q0_ml_per_s > 0.0))
        throw Error(ErrorCode::InvalidArgument,
                    "assumed volume rates must be > 0");
    if (!std::isfinite(cal.sigma2_c) || cal.sigma2_c < 0.0)
        throw Error(ErrorCode::InvalidCalibration,
                    "calibration variance not finite");
    if (!(sens.delta > 0.0))
        throw Error(ErrorCode::InvalidArgument, "delta must be > 0");

    FilterState s;
    s.dt = dt_seconds;
    s.sigma2_floor = cal.sigma2_c;
    s.bi_hat = cal.mu_c;
    // expected BI change per window for the assumed volume rate
    s.bi_rate_hat = ctx == MeasurementContext::Filling
                        ? -sens.delta * v_rate0_ml_per_min * (dt_seconds / 60.0)
                        : sens.delta * q0_ml_per_s * dt_seconds;
    s.gamma_bi = 100.0;
    s.gamma_rate = s.bi_rate_hat * s.bi_rate_hat;
    // prediction for the first estimated window; uncertainties stay at
    // their initial values so the first gain comes from gamma_bi = 100
    s.bi_hat_pred = s.bi_hat + s.bi_rate_hat;
    s.bi_rate_pred = s.bi_rate_hat;
    return s;
}

FilterState kalman_update(const FilterState& s, double z, double gamma_meas) {
    if (!(gamma_meas >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "gamma_meas must be >= 0");
    const double denom_bi = s.gamma_bi + gamma_meas;
    const double gamma_rate_meas = 2.0 * gamma_meas;  // variance of a difference
    const double denom_rate = s.gamma_rate + gamma_rate_meas;
    if (denom_bi <= 0.0 || denom_rate <= 0.0)
        throw Error(ErrorCode::NumericalDegenerate,
                    "both estimate and measurement uncertainty are zero");

    FilterState out = s;
    out.gain_bi = s.gamma_bi / denom_bi;
    out.gain_rate = s.gamma_rate / denom_rate;
    out.bi_hat = s.bi_hat_pred + out.gain_bi * (z - s.bi_hat_pred);
    const double z_rate = z - s.bi_hat;  // one-window difference quotient
    out.bi_rate_hat = s.bi_rate_pred + out.gain_rate * (z_rate - s.bi_rate_pred);
    out.gamma_bi = s.gamma_bi * (1.0 - out.gain_bi);
    out.gamma_rate = s.gamma_rate * (1.0 - out.gain_rate);
    return out;
}

FilterState kalman_predict(const FilterState& s) {
    FilterState out = s;
    out.bi_hat_pred = s.bi_hat + s.bi_rate_hat;  // unit step in window time
    out.bi_rate_pred = s.bi_rate_hat;
    out.gamma_bi = s.gamma_bi + s.gamma_rate;
    return out;
}

std::pair<FilterState, StepResult> step(const FilterState& s, double window_mean,
                                        double window_var, ArtefactLabel label,
                                        MeasurementContext ctx,
                                        const SensitivityModel& sens,
                                        const std::optional<StepResult>& prev,
                                        bool suppress) {
    const int index = prev ? prev->window_index + 1 : 0;
    if (s.last_window + 1 != index)
        throw Error(ErrorCode::OutOfOrderWindow,
                    "expected window " + std::to_string(s.last_window + 1) +
                        ", got " + std::to_string(index));

    StepResult r;
    r.window_index = index;
    r.label = label;
    r.artefact = is_artefact(label, ctx);

    if (!prev) {
        // calibration window: volume starts at zero here
        FilterState out = s;
        out.last_window = 0;
        r.bi_hat = s.bi_hat;
        return {out, r};
    }

    const bool gated = suppress && r.artefact;
    const double gamma_meas =
        gated ? std::max(window_var, 10.0 * s.sigma2_floor) : s.sigma2_floor;

    FilterState upd = kalman_update(s, window_mean, gamma_meas);
    r.bi_hat = upd.bi_hat;
    r.d_bi = upd.bi_hat - s.bi_hat;
    // volume increment in the context's direction: filling accumulates
    // stored volume (-dBI/delta), voiding accumulates voided volume
    const double dv_content = -r.d_bi / sens.delta;
    r.d_v = ctx == MeasurementContext::Filling ? dv_content : -dv_content;
    r.v_cum = prev->v_cum + r.d_v;
    if (r.v_cum < 0.0) {
        r.v_cum = 0.0;
        r.clamped = true;
    }

    FilterState out = kalman_predict(upd);
    out.last_window = index;
    return {out, r};
}

namespace {

std::vector<ArtefactLabel> predict_labels(const std::vector<Window>& smoothed,
                                          const CalibrationState& cal,
                                          const AnyModel& model) {
    const auto& fs = feature_set(model_feature_set_id(model));
    std::vector<ArtefactLabel> labels;
    labels.reserve(smoothed.size());
    std::optional<ChannelMeans> prev;
    for (const auto& w : smoothed) {
        const auto feats = extract_features(w, prev, cal);
        const auto x = project(feats.flatten(), fs);
        labels.push_back(predict(model, x).label);
        prev = channel_means(w);
    }
    return labels;
}

SessionRun run_pipeline(const SessionRecording& rec,
                        const std::vector<ArtefactLabel>* given_labels,
                        const AnyModel* model, const SensitivityModel& sens,
                        MeasurementContext ctx, const PipelineConfig& cfg) {
    const auto report = validate_session(rec);
    if (!report.pass)
        throw Error(ErrorCode::SchemaError,
                    "session failed validation (" +
                        std::to_string(report.fatal_count()) + " fatal issues)");

    auto windows = segment_windows(rec, rec.meta.window_len);
    std::vector<Window> smoothed;
    smoothed.reserve(windows.size());
    for (const auto& w : windows)
        smoothed.push_back(
            smooth_window(w, cfg.lowess.span_frac, cfg.lowess.robust_iters));

    SessionRun run;
    run.cal = calibrate(smoothed.front());

    if (given_labels) {
        if (given_labels->size() != windows.size())
            throw Error(ErrorCode::DimensionMismatch,
                        "got " + std::to_string(given_labels->size()) +
                            " labels for " + std::to_string(windows.size()) +
                            " windows");
        run.labels = *given_labels;
    } else {
        run.labels = predict_labels(smoothed, run.cal, *model);
    }

    FilterState state = init_filter(run.cal, sens, ctx, rec.meta.window_len,
                                    cfg.v_rate0_ml_per_min, cfg.q0_ml_per_s);
    std::optional<StepResult> prev;
    for (std::size_t i = 0; i < smoothed.size(); ++i) {
        const auto& w = smoothed[i];
        const double z = mean(w.bi);
        const double var = sample_variance(w.bi);
        auto [next, res] =
            step(state, z, var, run.labels[i], ctx, sens, prev, cfg.suppress);
        res.t = 0.5 * (w.t_start + w.t_end);  // estimates anchor at centres
        if (res.clamped) ++run.clamp_events;
        run.steps.push_back(res);
        state = next;
        prev = res;
    }
    return run;
}

}  // namespace

SessionRun run_session(const SessionRecording& rec,
                       const std::vector<ArtefactLabel>& labels,
                       const SensitivityModel& sens, MeasurementContext ctx,
                       const PipelineConfig& cfg) {
    return run_pipeline(rec, &labels, nullptr, sens, ctx, cfg);
}

SessionRun run_session(const SessionRecording& rec, const AnyModel& model,
                       const SensitivityModel& sens, MeasurementContext ctx,
                       const PipelineConfig& cfg) {
    return run_pipeline(rec, nullptr, &model, sens, ctx, cfg);
}

static const char* kStepsHeader =
    "window,t_s,label,artefact,bi_hat_ohm,d_bi_ohm,d_v_ml,v_ml";

void write_steps_csv(const std::filesystem::path& path,
                     const std::vector<StepResult>& steps) {
    std::ostringstream out;
    out << kStepsHeader << '\n';
    for (const auto& s : steps) {
        out << s.window_index << ',' << format_double(s.t) << ','
            << label_code(s.label) << ',' << (s.artefact ? 1 : 0) << ','
            << format_double(s.bi_hat) << ',' << format_double(s.d_bi) << ','
            << format_double(s.d_v) << ',' << format_double(s.v_cum) << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<StepResult> read_steps_csv(const std::filesystem::path& path) {
    auto lines = read_csv_body(path, kStepsHeader);
    std::vector<StepResult> steps;
    for (const auto& line : lines) {
        auto f = split_csv_line(line);
        if (f.size() != 8)
            throw Error(ErrorCode::SchemaError, "expected 8 columns in steps CSV");
        StepResult s;
        s.window_index = static_cast<int>(parse_double(f[0]));
        s.t = parse_double(f[1]);
        s.label = label_from_code(static_cast<int>(parse_double(f[2])));
        s.artefact = parse_double(f[3]) != 0.0;
        s.bi_hat = parse_double(f[4]);
        s.d_bi = parse_double(f[5]);
        s.d_v = parse_double(f[6]);
        s.v_cum = parse_double(f[7]);
        steps.push_back(s);
    }
    return steps;
}

}  // namespace bivol
