#include "bivol/types.hpp"

#include <cmath>

#include "bivol/errors.hpp"

namespace bivol {

const char* to_string(MeasurementContext ctx) {
    return ctx == MeasurementContext::Filling ? "filling" : "voiding";
}

MeasurementContext context_from_string(const std::string& s) {
    if (s == "filling") return MeasurementContext::Filling;
    if (s == "voiding") return MeasurementContext::Voiding;
    throw Error(ErrorCode::SchemaError, "unknown context: " + s);
}

ArtefactLabel label_from_code(int code) {
    if (code < 0 || code > 3)
        throw Error(ErrorCode::SchemaError,
                    "artefact label code out of range: " + std::to_string(code));
    return static_cast<ArtefactLabel>(code);
}

double VolumeTrace::at(double t) const {
    if (points.empty()) return 0.0;
    if (t <= points.front().t) return points.front().v;
    if (t >= points.back().t) return points.back().v;
    // points are strictly increasing in t
    std::size_t lo = 0, hi = points.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (points[mid].t <= t)
            lo = mid;
        else
            hi = mid;
    }
    const auto& a = points[lo];
    const auto& b = points[hi];
    const double w = (t - a.t) / (b.t - a.t);
    return a.v + w * (b.v - a.v);
}

std::size_t ValidationReport::warning_count() const {
    std::size_t n = 0;
    for (const auto& i : issues)
        if (!i.fatal) ++n;
    return n;
}

std::size_t ValidationReport::fatal_count() const {
    std::size_t n = 0;
    for (const auto& i : issues)
        if (i.fatal) ++n;
    return n;
}

ValidationReport validate_session(const SessionRecording& rec) {
    ValidationReport rep;
    const auto& s = rec.samples;
    if (s.empty()) {
        rep.pass = false;
        rep.issues.push_back({ValidationReport::Issue::Kind::NonFinite, 0,
                              "empty session", true});
        return rep;
    }
    const double gap_threshold = 2.0 * kNominalSamplePeriod;
    for (std::size_t i = 0; i < s.size(); ++i) {
        bool finite = std::isfinite(s[i].t) && std::isfinite(s[i].bi) &&
                      s[i].bi > 0.0;
        for (double v : s[i].se) finite = finite && std::isfinite(v) && v > 0.0;
        if (!finite) {
            rep.issues.push_back({ValidationReport::Issue::Kind::NonFinite, i,
                                  "non-finite or non-positive value", true});
        }
        if (i > 0) {
            const double dt = s[i].t - s[i - 1].t;
            if (dt <= 0.0) {
                rep.issues.push_back({ValidationReport::Issue::Kind::NonMonotoneTime,
                                      i, "non-monotone t", true});
            } else if (dt > gap_threshold) {
                rep.issues.push_back({ValidationReport::Issue::Kind::Gap, i,
                                      "gap of " + std::to_string(dt) + " s", false});
            }
        }
    }
    if (s.front().t < 0.0)
        rep.issues.push_back({ValidationReport::Issue::Kind::NonFinite, 0,
                              "negative start time", true});
    rep.pass = rep.fatal_count() == 0;
    return rep;
}

}  // namespace bivol
