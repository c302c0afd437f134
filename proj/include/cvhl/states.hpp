#pragma once

#include <Eigen/Dense>
#include <complex>

namespace cvhl {

// Analytic Fock-basis density matrices of standard states, used as references
// for the tomography and analysis layers.

Eigen::MatrixXcd coherent_density(std::complex<double> alpha, int cutoff);
Eigen::MatrixXcd thermal_density(double nbar, int cutoff);
Eigen::MatrixXcd fock_density(int n, int cutoff);

// Zero-mean Gaussian state with quadrature variances (v_minus, v_plus) along
// the x/p axes, shot-noise units (vacuum = 1). Requires v_minus*v_plus >= 1;
// realized as a squeezed thermal state.
Eigen::MatrixXcd squeezed_thermal_density(double v_minus, double v_plus, int cutoff);

// Matrix elements <m|S(r)|n> of the squeezing operator with real parameter r
// (x variance scaled by e^{-2r}); dimensions (m_max+1) x (n_max+1).
Eigen::MatrixXd squeeze_operator(double r, int m_max, int n_max);

} // namespace cvhl
