#pragma once

#include "cvhl/opo.hpp"
#include "cvhl/scan.hpp"

#include <cstdint>
#include <string>

namespace cvhl {

struct OutputPaths {
    std::string trace;
    std::string rho;
    std::string report;
};

struct ExperimentConfig {
    OPOParams opo;
    EfficiencyBudget budget;
    PhaseScanModel scan;
    int n_samples = 7000;
    std::uint64_t seed = 1;
    int cutoff = 12;
    OutputPaths output;
};

// Strict JSON config loader: unknown keys are rejected and every error names
// the offending field path. Throws std::invalid_argument.
ExperimentConfig load_config(const std::string& path);

// Full referential validation (factor ranges, scan invariants, cutoff bound).
void validate_config(const ExperimentConfig& config);

bool same_opo(const OPOParams& a, const OPOParams& b);

} // namespace cvhl
