#pragma once

#include "cvhl/gaussian.hpp"

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace cvhl {

enum class ScanKind { Linear, PowerLaw };
enum class ScanDirection { Up, Down };

// Local-oscillator phase trajectory. Linear models a piezo ramp; PowerLaw
// models a thermo-optic shifter driven by a voltage ramp (phase tracks
// dissipated power, exponent 2 for an unlinearized drive).
struct PhaseScanModel {
    ScanKind kind = ScanKind::Linear;
    double theta0 = 0.0;
    double span = 3.141592653589793;
    double duration = 0.7;   // seconds
    double exponent = 2.0;   // used by PowerLaw only
    ScanDirection direction = ScanDirection::Up;
};

struct TraceSample {
    double t;      // seconds
    double theta;  // radians
    double x;      // quadrature value, shot-noise units (vacuum variance 1)
};

struct HomodyneTrace {
    std::vector<TraceSample> samples;
    double sample_rate = 0.0;        // Hz
    double demod_frequency = 3.0e6;  // Hz, metadata only
    double calibration_scale = 1.0;  // raw-to-shot-noise divisor
    std::string source_label;
    std::uint64_t seed = 0;
};

void validate_scan_model(const PhaseScanModel& model);

// theta at time t; direction Down runs the same trajectory backwards in time.
double phase_at(const PhaseScanModel& model, double t);

// Index-keyed standard normal draw: depends only on (seed, index), so
// synthesis can be partitioned arbitrarily without changing the trace.
double normal_draw(std::uint64_t seed, std::uint64_t index);

// Uniform integer in [0, bound), same keying guarantee.
std::uint64_t uniform_index(std::uint64_t seed, std::uint64_t index, std::uint64_t bound);

HomodyneTrace synthesize_trace(const GaussianState& state, const PhaseScanModel& model,
                               int n_samples, std::uint64_t seed,
                               const std::string& source_label = "synthetic");

// Divides every sample by the vacuum reference's sample standard deviation and
// records it as calibration_scale.
HomodyneTrace calibrate_shot_noise(const HomodyneTrace& raw, const HomodyneTrace& vacuum_reference);

// Sinusoidal variance model V(theta) = a0 + b*cos(2 theta) + c*sin(2 theta)
// fitted to per-bin sample variances by weighted least squares (exact form for
// any state's quadrature variance). Also carries the directly averaged field
// amplitude <a>; together these give the second moments used for variance
// extremes and the Gaussian part of the nonclassicality analysis.
struct BinnedVarianceFit {
    double a0 = 0.0, b = 0.0, c = 0.0;
    double v_min = 0.0, v_max = 0.0;
    double sigma_vmin = 0.0, sigma_vmax = 0.0;
    std::complex<double> mean_a{0.0, 0.0};
    int n_bins = 0;
    int bins_used = 0;
};

BinnedVarianceFit fit_binned_variance(const HomodyneTrace& trace, int n_bins = 0);

// Sample variance of x over samples whose theta falls within +/- half_width of
// center (theta reduced mod pi). Used for quick trace checks.
double windowed_variance(const HomodyneTrace& trace, double center, double half_width);

struct PhaseFitResult {
    PhaseScanModel model;
    double amplitude = 0.0;     // fitted fringe amplitude 2|alpha|
    double phase_offset = 0.0;  // fitted arg(alpha)
    double residual = 0.0;      // rms of windowed-mean residuals
    int iterations = 0;
    bool converged = false;
};

// Recovers (span, exponent, offset) of the scan model from the fringe pattern
// of a coherent-state trace by Levenberg-Marquardt on windowed running means.
// theta0 is kept at its initial value: it is degenerate with the fitted field
// phase, so the gauge is fixed by convention.
PhaseFitResult fit_phase_model(const HomodyneTrace& trace, const PhaseScanModel& initial,
                               bool fit_exponent = true);

} // namespace cvhl
