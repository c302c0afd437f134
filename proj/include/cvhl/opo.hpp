#pragma once
#include "cvhl/gaussian.hpp"

#include <complex>
#include <optional>
#include <string>

namespace cvhl {

enum class SeedPhaseMode { None, PhaseSqueezed, AmplitudeSqueezed };
enum class DetectorConfig { SHD, IHA };

struct OPOParams {
    double pump_ratio = 0.0;       // P / P_threshold, below-threshold only
    double sideband_ratio = 0.0;   // 2*pi*f / gamma at the analysis sideband
    std::complex<double> seed_amplitude = {0.0, 0.0};
    SeedPhaseMode seed_phase_mode = SeedPhaseMode::None;
    // Optional classical pump-noise excess on the anti-squeezed quadrature.
    double excess_noise = 0.0;
};

struct EfficiencyBudget {
    DetectorConfig config = DetectorConfig::SHD;
    double eta_dm = 1.0;     // dichroic/steering optics
    double eta_esc = 1.0;    // cavity escape
    double eta_d = 1.0;      // photodiode quantum efficiency
    double eta_el = 1.0;     // electronic noise clearance
    double visibility = 1.0; // fringe visibility V (mode matching enters as V^2)
    double eta_bs = 1.0;     // balancing beamsplitter
    double eta_f = 1.0;      // chip coupling (IHA only)
    double eta_w = 1.0;      // waveguide propagation (IHA only)
};

double homodyne_efficiency(const EfficiencyBudget& budget);
double total_efficiency(const EfficiencyBudget& budget);

// Sideband quadrature variances of a below-threshold OPO seen through total
// efficiency eta_tot: V+- = 1 +- eta*4*s / ((1 -+ s)^2 + 4*r^2), s = sqrt(pump_ratio).
struct NoiseSpectrum {
    double v_minus;
    double v_plus;
};
NoiseSpectrum noise_spectrum(const OPOParams& params, double eta_tot);

GaussianState effective_output_state(const OPOParams& params, const EfficiencyBudget& budget);

// eta_el = 1 - 10^(-clearance_db/10)
double electronic_efficiency_from_clearance(double clearance_db);

} // namespace cvhl
