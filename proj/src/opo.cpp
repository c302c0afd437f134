#include "cvhl/opo.hpp"

#include <cmath>
#include <stdexcept>

namespace cvhl {

double homodyne_efficiency(const EfficiencyBudget& b) {
    double eta = b.visibility * b.visibility * b.eta_bs;
    if (b.config == DetectorConfig::IHA)
        eta *= b.eta_f * b.eta_w;
    return eta;
}

static void check_factor(double v, const char* name) {
    if (!(v > 0.0) || v > 1.0)
        throw std::invalid_argument(std::string("efficiency factor out of (0,1]: ") + name);
}

double total_efficiency(const EfficiencyBudget& b) {
    check_factor(b.eta_dm, "eta_dm");
    check_factor(b.eta_esc, "eta_esc");
    check_factor(b.eta_d, "eta_d");
    check_factor(b.eta_el, "eta_el");
    check_factor(b.visibility, "visibility");
    check_factor(b.eta_bs, "eta_bs");
    if (b.config == DetectorConfig::IHA) {
        check_factor(b.eta_f, "eta_f");
        check_factor(b.eta_w, "eta_w");
    }
    return b.eta_dm * b.eta_esc * homodyne_efficiency(b) * b.eta_d * b.eta_el;
}

NoiseSpectrum noise_spectrum(const OPOParams& p, double eta_tot) {
    if (p.pump_ratio < 0.0 || p.pump_ratio >= 1.0)
        throw std::invalid_argument("pump_ratio must lie in [0,1) (below threshold)");
    if (p.sideband_ratio < 0.0)
        throw std::invalid_argument("sideband_ratio must be nonnegative");
    if (eta_tot < 0.0 || eta_tot > 1.0)
        throw std::invalid_argument("eta_tot must lie in [0,1]");
    const double s = std::sqrt(p.pump_ratio);
    const double r2 = 4.0 * p.sideband_ratio * p.sideband_ratio;
    const double dm = (1.0 + s) * (1.0 + s) + r2;  // denominator of the squeezed branch
    const double dp = (1.0 - s) * (1.0 - s) + r2;
    return {1.0 - eta_tot * 4.0 * s / dm, 1.0 + eta_tot * 4.0 * s / dp};
}

GaussianState effective_output_state(const OPOParams& p, const EfficiencyBudget& b) {
    const double eta = total_efficiency(b);
    NoiseSpectrum ns = noise_spectrum(p, eta);
    ns.v_plus += p.excess_noise;

    GaussianState st;
    st.cov.setIdentity();
    st.mean.setZero();
    const bool squeezed = p.pump_ratio > 0.0;
    const double root_eta = std::sqrt(eta);
    switch (p.seed_phase_mode) {
    case SeedPhaseMode::None:
        if (squeezed)
            st = build_state(StateKind::SqueezedVacuum, {}, ns.v_minus, ns.v_plus, 0.0);
        st.mean << 2.0 * p.seed_amplitude.real() * root_eta,
                   2.0 * p.seed_amplitude.imag() * root_eta;
        break;
    case SeedPhaseMode::AmplitudeSqueezed:
        // squeezing along the displacement direction: V(0) = v_minus
        if (squeezed)
            st = build_state(StateKind::SqueezedVacuum, {}, ns.v_minus, ns.v_plus, 0.0);
        st.mean << 2.0 * std::abs(p.seed_amplitude) * root_eta, 0.0;
        break;
    case SeedPhaseMode::PhaseSqueezed:
        // displacement along the anti-squeezed axis, squeezing at theta = pi/2
        if (squeezed)
            st = build_state(StateKind::SqueezedVacuum, {}, ns.v_minus, ns.v_plus, M_PI / 2.0);
        st.mean << 2.0 * std::abs(p.seed_amplitude) * root_eta, 0.0;
        break;
    }
    return st;
}

double electronic_efficiency_from_clearance(double clearance_db) {
    if (!(clearance_db > 0.0))
        throw std::invalid_argument("clearance must be positive (dB below shot noise)");
    return 1.0 - std::pow(10.0, -clearance_db / 10.0);
}

} // namespace cvhl
