#pragma once
#include <Eigen/Dense>
#include <complex>

// Single-mode Gaussian states in shot-noise units: the quadrature is
// X(theta) = a e^{-i theta} + a^+ e^{i theta}, so the vacuum has variance 1
// and a coherent state alpha has <X(theta)> = 2|alpha| cos(theta - arg alpha).

namespace cvhl {

enum class StateKind { Vacuum, Coherent, SqueezedVacuum, SqueezedCoherent };

struct GaussianState {
    Eigen::Vector2d mean;   // (<X(0)>, <X(pi/2)>)
    Eigen::Matrix2d cov;    // vacuum = identity
};

GaussianState build_state(StateKind kind,
                          std::complex<double> amplitude = {0.0, 0.0},
                          double v_minus = 1.0,
                          double v_plus = 1.0,
                          double squeeze_axis = 0.0);

GaussianState apply_loss(const GaussianState& state, double eta);

struct QuadratureStats {
    double mean;
    double variance;
};
QuadratureStats quadrature_stats(const GaussianState& state, double theta);

// 1/sqrt(det cov); 1 exactly for pure states.
double gaussian_purity(const GaussianState& state);

// max(0, (1 - lambda_min(cov))/2): the smallest Gaussian smoothing that makes
// every quadrature variance at least the vacuum level.
double gaussian_ncd(const GaussianState& state);

// Throws std::invalid_argument when cov is not a physical covariance matrix.
void validate_state(const GaussianState& state);

} // namespace cvhl
