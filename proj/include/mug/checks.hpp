#pragma once

// Self-contained verification suites shared by the `scan-check` and
// `grad-check` commands and the acceptance runner.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mug::checks {

// `value` is the observed deviation (or error); the check passes when
// value < tolerance, or value == 0 when `exact`.
struct CheckOutcome {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool exact = false;
    std::string detail;

    bool pass() const { return exact ? value == 0.0 : value < tolerance; }
};

bool all_pass(const std::vector<CheckOutcome>& outcomes);
double worst_value(const std::vector<CheckOutcome>& outcomes);

struct ScanOracleReport {
    std::size_t cases = 0;
    double max_abs_deviation = 0.0;
    std::string worst_case;  // "T=.. D=.. N=.."
    double seconds = 0.0;
};

// Parallel kernel against the sequential recurrence on random problems with
// T in [1,64], D and N in [1,16].
ScanOracleReport scan_oracle_suite(std::size_t cases = 100, std::uint64_t seed = 0);

// Backward scan vs reversed forward on reversed input (exact), dynamic scan
// with a one-hot start vs forward (exact), dynamic scan vs the term-by-term
// mixture of rotated forward scans.
std::vector<CheckOutcome> scan_definition_checks(std::uint64_t seed = 0);

// Central finite differences for every differentiable op, the Mamba block,
// and the full model at T=4, d=8, C=3. Tolerance is a relative error of 1e-3.
std::vector<CheckOutcome> gradient_suite(std::uint64_t seed = 0);

// Shared B projection: gradient of the summed modality losses equals the sum
// of the per-modality gradients; with sharing hard-off, perturbing the shared
// matrices leaves the outputs unchanged.
std::vector<CheckOutcome> shared_matrix_checks(std::uint64_t seed = 0);

// Fusion with zero scale and bias is the identity; enhancement factors lie in
// (1,2); attention weights lie in (0,1). Values count violations.
std::vector<CheckOutcome> block_fidelity_checks(std::uint64_t seed = 0, std::size_t trials = 20);

}  // namespace mug::checks
