#pragma once

#include <filesystem>
#include <string>

namespace sgtest {

struct SuiteResult {
    bool ok = true;
    std::string detail; // first failure, or a short summary
    double seconds = 0.0;
};

/// Real-input conjugate symmetry and Parseval on 20 random images.
SuiteResult spectrum_suite();
/// Mask equals the set of columns with a nonzero operator weight, and
/// perturbing pixels outside (inside) it leaves (changes) the output.
SuiteResult mask_suite();
/// Operator rows sum to one; nearest rows are a single unit tap.
SuiteResult stochasticity_suite();
/// Calibrated thresholds never exceed the target FPR on their own set.
SuiteResult calibration_suite();
/// Turning a vote from benign to attack never turns the verdict to benign.
SuiteResult voting_suite();
/// Two runs of a small full pipeline with one seed give identical reports;
/// a resumed third run recomputes nothing.
SuiteResult determinism_suite(const std::filesystem::path& scratch);

} // namespace sgtest
