#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bivol/estimate.hpp"
#include "bivol/types.hpp"

namespace bivol {

struct EndpointError {
    std::string case_id;
    double ground_truth = 0.0;
    double estimate = 0.0;
    double delta_err = 0.0;  // estimate - ground_truth
};

struct EndpointSummary {
    std::vector<EndpointError> cases;
    double mean = 0.0;
    double sd = 0.0;          // sample standard deviation of the errors
    bool sd_defined = false;  // false (sd = 0) for a single case
};

// Per-case errors plus their mean and sample standard deviation.
// cases are (ground_truth, estimate) pairs; ids are optional.
EndpointSummary endpoint_errors(
    const std::vector<std::pair<double, double>>& cases,
    const std::vector<std::string>& ids = {});

struct AgreementStats {
    double bias = 0.0;     // mean(estimate - truth)
    double sd_diff = 0.0;  // sample sd of the differences
    double loa_upper = 0.0;
    double loa_lower = 0.0;
    std::size_t n = 0;
    std::vector<std::pair<double, double>> points;  // (pair mean, difference)
};

// Bland-Altman agreement: bias, sd of differences and the 1.96-sd limits
// of agreement. pairs are (estimate, truth); throws TooFewPairs for n < 2.
AgreementStats bland_altman(
    const std::vector<std::pair<double, double>>& estimate_truth);

// Ground truth accrued over the estimation span: the truth trace is rebased
// at the first step's anchor time, in the context's direction (stored
// volume for filling, voided volume for voiding). Returns (estimate, truth)
// per step.
std::vector<std::pair<double, double>> pair_with_truth(
    const std::vector<StepResult>& steps, const VolumeTrace& truth,
    MeasurementContext ctx);

// Intermediate agreement pairs sampled every 60 s (filling) or 5 s (voiding).
std::vector<std::pair<double, double>> sample_agreement_pairs(
    const std::vector<StepResult>& steps, const VolumeTrace& truth,
    MeasurementContext ctx);

struct CaseResult {
    std::string id;
    MeasurementContext ctx = MeasurementContext::Filling;
    std::vector<StepResult> steps;
    VolumeTrace truth;
};

// Writes endpoint.csv, agreement.csv plus two SVG plots (Bland-Altman
// scatter with bias/LoA lines; per-case estimate-vs-truth volume traces
// with a max-error annotation). Deterministic for a given input.
void emit_report(const std::vector<CaseResult>& cases,
                 const std::filesystem::path& out_dir);

}  // namespace bivol
