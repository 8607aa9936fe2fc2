#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "bivol/classify.hpp"
#include "bivol/preprocess.hpp"
#include "bivol/types.hpp"

namespace bivol {

// Sensitivity of the lower-abdomen BI to bladder volume, ohm per ml.
// Sign convention: a content change dV corresponds to dBI = -delta * dV,
// so filling lowers the BI and voiding raises it.
struct SensitivityModel {
    double delta = 0.05;
};

// Two-state filter over window means: level estimate plus per-window rate.
// The rate is kept in ohm/window, so the prediction step uses a unit time
// step; the physical window length enters only at initialization.
struct FilterState {
    double bi_hat = 0.0;
    double bi_rate_hat = 0.0;
    double gamma_bi = 0.0;    // level estimate uncertainty, ohm^2
    double gamma_rate = 0.0;  // rate estimate uncertainty, (ohm/window)^2
    double bi_hat_pred = 0.0;
    double bi_rate_pred = 0.0;
    double gain_bi = 0.0;  // gains applied by the last update
    double gain_rate = 0.0;
    double dt = 0.0;            // window length, seconds
    double sigma2_floor = 0.0;  // calibration measurement variance
    int last_window = -1;       // sequencing guard
};

struct StepResult {
    int window_index = 0;
    double t = 0.0;  // window centre time, filled by run_session
    ArtefactLabel label = ArtefactLabel::L0_NoChange;
    bool artefact = false;
    double bi_hat = 0.0;
    double d_bi = 0.0;   // bi_hat(i) - bi_hat(i-1)
    double d_v = 0.0;    // volume increment toward the context's direction, ml
    double v_cum = 0.0;  // running volume, clamped at >= 0
    bool clamped = false;
};

// Which labels contradict the context's expected trend. Filling expects a
// falling BI, so L0/L1/L2 are artefacts; voiding expects a rising BI, so
// L0/L1/L3 are artefacts.
bool is_artefact(ArtefactLabel label, MeasurementContext ctx);

// Initial estimates: level at the calibration mean, rate from the assumed
// volume rate (v_rate0 for filling, q0 for voiding), level uncertainty
// 100 ohm^2, rate uncertainty (initial rate)^2.
FilterState init_filter(const CalibrationState& cal, const SensitivityModel& sens,
                        MeasurementContext ctx, double dt_seconds,
                        double v_rate0_ml_per_min = 1.0,
                        double q0_ml_per_s = 20.0);

// Measurement update. The rate pseudo-measurement is the one-window
// difference quotient of the window mean against the previous estimate,
// with measurement variance 2 * gamma_meas.
FilterState kalman_update(const FilterState& s, double z, double gamma_meas);

// Constant-rate propagation to the next window.
FilterState kalman_predict(const FilterState& s);

// One full pipeline step for the next window in sequence. The first call
// (prev absent) consumes the calibration window and yields d_v = 0. Clean
// windows measure at the calibration variance floor; artefact windows
// inflate the measurement variance to max(window_var, 10 * floor).
std::pair<FilterState, StepResult> step(const FilterState& s, double window_mean,
                                        double window_var, ArtefactLabel label,
                                        MeasurementContext ctx,
                                        const SensitivityModel& sens,
                                        const std::optional<StepResult>& prev,
                                        bool suppress = true);

struct PipelineConfig {
    LowessConfig lowess;
    double v_rate0_ml_per_min = 1.0;
    double q0_ml_per_s = 20.0;
    bool suppress = true;  // artefact gating; off = ablation baseline
};

struct SessionRun {
    std::vector<StepResult> steps;
    CalibrationState cal;
    std::vector<ArtefactLabel> labels;
    int clamp_events = 0;

    double endpoint_ml() const { return steps.empty() ? 0.0 : steps.back().v_cum; }
};

// Full pipeline with labels supplied per retained window.
SessionRun run_session(const SessionRecording& rec,
                       const std::vector<ArtefactLabel>& labels,
                       const SensitivityModel& sens, MeasurementContext ctx,
                       const PipelineConfig& cfg = {});

// Full pipeline with labels predicted by a trained classifier; the model's
// feature-set id selects the input projection.
SessionRun run_session(const SessionRecording& rec, const AnyModel& model,
                       const SensitivityModel& sens, MeasurementContext ctx,
                       const PipelineConfig& cfg = {});

// StepResult stream CSV:
//   window,t_s,label,artefact,bi_hat_ohm,d_bi_ohm,d_v_ml,v_ml
void write_steps_csv(const std::filesystem::path& path,
                     const std::vector<StepResult>& steps);
std::vector<StepResult> read_steps_csv(const std::filesystem::path& path);

}  // namespace bivol
