#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bivol/features.hpp"
#include "bivol/types.hpp"

namespace bivol {

struct RateSegment {
    double duration_min = 0.0;
    double rate_ml_per_min = 0.0;
};

// Muscle-tension style confounder: a linear BI rise that starts once the
// stored volume crosses the onset.
struct Confounder {
    double onset_volume_ml = 300.0;
    double drift_ohm_per_min = 1.4;
};

struct FillingProfile {
    double rate_ml_per_min = 45.0;      // used when segments is empty
    std::vector<RateSegment> segments;  // piecewise infusion schedule
    double duration_min = 14.0;
    double mu0_ohm = 700.0;
    double delta_ohm_per_ml = 0.05;
    double noise_sd_ohm = 0.2;
    double se_noise_sd_ohm = 0.5;
    std::optional<Confounder> confounder;
};

struct VoidingProfile {
    double voided_volume_ml = 500.0;
    double duration_s = 45.0;
    double mu0_ohm = 500.0;
    double delta_ohm_per_ml = 0.04;
    double noise_sd_ohm = 0.2;
    double se_noise_sd_ohm = 0.5;
    double peak_frac = 0.5;  // flow peak position as a fraction of duration
};

struct ArtefactSpec {
    enum class Kind { HighVariance, PositiveDrift, NegativeDrift };
    Kind kind = Kind::HighVariance;
    double t_start = 0.0;
    double t_end = 0.0;
    // total drift in ohms for drifts; variance multiplier (>= 2.5) for
    // high-variance noise
    double magnitude = 0.0;
};

ArtefactSpec::Kind artefact_kind_from_string(const std::string& s);

// Flow rate Q(t) in ml/s: a sin^2 pulse time-warped so the peak sits at
// peak_frac * duration; the integral equals voided_volume exactly for any
// peak position, with Qmax = 2 * V / T.
double flow_rate(const VoidingProfile& p, double t);
// Volume voided by time t (closed form).
double voided_by(const VoidingProfile& p, double t);

struct SimResult {
    SessionRecording rec;
    VolumeTrace truth;  // stored content (filling) / remaining content (voiding)
};

SimResult gen_filling(const FillingProfile& p, uint64_t seed);
SimResult gen_voiding(const VoidingProfile& p, uint64_t seed);

struct InjectResult {
    SessionRecording rec;
    std::vector<ArtefactLabel> labels;  // per retained window
};

// Adds the artefacts onto the recording and returns per-window ground-truth
// labels. High-variance spans add Gaussian noise of variance
// multiplier * cal_sd^2 and label their windows L1; drift spans add a linear
// ramp that persists after t_end. Drift/trend labels come from the
// window-over-window mean change of the emitted signal against the
// 3*sqrt(cal_sd^2/n) threshold.
InjectResult inject_artefacts(const SessionRecording& rec,
                              std::vector<ArtefactSpec> specs, double cal_sd,
                              uint64_t seed);

// Label rule used above, applied to an arbitrary recording (no injected
// spans): L2/L3 by thresholded mean change, else L0.
std::vector<ArtefactLabel> derive_trend_labels(const SessionRecording& rec,
                                               double cal_sd);

// Balanced labeled window corpus for classifier training/evaluation.
// Each sample is an independent window pair (previous + current) pushed
// through smoothing and feature extraction; labels follow the same rules
// the pipeline uses, so boundary draws land in their rule-true class.
struct CorpusOptions {
    int per_class = 500;
    double noise_sd_ohm = 0.2;
    double window_len_s = 30.0;
    double se_artefact_coupling = 0.7;  // chance an artefact disturbs each SE channel
};

FeatureMatrix gen_labeled_corpus(const CorpusOptions& opt, uint64_t seed);

}  // namespace bivol
