#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bivol {

// Nominal sample period of the impedance sensor stream, seconds.
inline constexpr double kNominalSamplePeriod = 0.3;

// Measurement context: the physiological trend the estimator expects.
enum class MeasurementContext : uint8_t { Filling = 0, Voiding = 1 };

const char* to_string(MeasurementContext ctx);
MeasurementContext context_from_string(const std::string& s);

// Window-level artefact classification. Integer codes are fixed for
// serialization and model files.
enum class ArtefactLabel : uint8_t {
    L0_NoChange = 0,
    L1_HighVarianceNoise = 1,
    L2_PositiveDrift = 2,
    L3_NegativeDrift = 3,
};

ArtefactLabel label_from_code(int code);
inline int label_code(ArtefactLabel l) { return static_cast<int>(l); }

// One sensor sample: tetrapolar lower-abdomen bio-impedance plus the four
// skin-electrode contact impedances, all in ohms.
struct Sample {
    double t = 0.0;  // seconds since session start
    double bi = 0.0;
    std::array<double, 4> se{0.0, 0.0, 0.0, 0.0};
};

// Ordered (t, volume) pairs in (s, ml). For filling ground truth the volume
// is the stored bladder content (non-decreasing); for voiding ground truth
// it is the remaining content (non-increasing).
struct VolumeTrace {
    struct Point {
        double t = 0.0;
        double v = 0.0;
    };
    std::vector<Point> points;

    bool empty() const { return points.empty(); }
    // Linear interpolation, clamped to the first/last point.
    double at(double t) const;
};

struct SessionMeta {
    std::string subject_id;
    MeasurementContext context = MeasurementContext::Filling;
    double delta = 0.05;       // sensitivity, ohm per ml
    double window_len = 30.0;  // seconds
    std::optional<VolumeTrace> ground_truth;
};

// Sanity band for the sensitivity parameter, ohm/ml.
inline constexpr double kDeltaMin = 0.005;
inline constexpr double kDeltaMax = 0.5;

// Default analysis window lengths per context, seconds. The voiding default
// is the shortest multiple of the sample period that yields at least five
// samples per window.
inline constexpr double kDefaultFillingWindow = 30.0;
inline constexpr double kDefaultVoidingWindow = 1.5;

struct SessionRecording {
    std::vector<Sample> samples;
    SessionMeta meta;
};

// Report-only session validation outcome.
struct ValidationReport {
    struct Issue {
        enum class Kind { NonMonotoneTime, NonFinite, Gap } kind;
        std::size_t sample_index = 0;
        std::string detail;
        bool fatal = false;
    };
    bool pass = true;
    std::vector<Issue> issues;

    std::size_t warning_count() const;
    std::size_t fatal_count() const;
};

// Checks timestamps (strictly increasing), finiteness of all channels and
// sample-period gaps larger than twice the nominal period. Gaps are
// warnings; ordering and finiteness violations fail the session.
ValidationReport validate_session(const SessionRecording& rec);

}  // namespace bivol
