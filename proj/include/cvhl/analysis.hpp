#pragma once

#include "cvhl/tomography.hpp"

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace cvhl {

// Field moments extracted from a Fock-basis density matrix. With
// tail_extrapolation the truncated diagonal and |n><n-2| band sums are
// extended by a fitted geometric tail (separately per parity chain), which
// recovers most of the truncation deficit for Gaussian-like states.
struct FockMoments {
    std::complex<double> a{0.0, 0.0};
    std::complex<double> a2{0.0, 0.0};
    double nbar = 0.0;
};

FockMoments density_moments(const DensityMatrix& dm, bool tail_extrapolation = true);

// Tr[rho^2]
double purity(const DensityMatrix& dm);

// W(q,p) on a square grid [-extent, extent]^2, canonical units (vacuum
// variance 1/2, W_vac(0,0) = 1/pi). values(iq, ip), q = -extent + iq*step.
struct WignerGrid {
    double extent = 0.0;
    double step = 0.0;
    int n_points = 0;
    Eigen::MatrixXd values;
};

WignerGrid wigner_function(const DensityMatrix& dm, double extent, int n_points);
double wigner_value(const DensityMatrix& dm, double q, double p);
void write_wigner(const WignerGrid& grid, const std::string& path);

struct NcdResult {
    double tau = 0.0;
    bool unreliable = false;       // trailing diagonal > 0.01
    bool wigner_negative = false;  // certified Wigner negativity forced tau = 0.5
    double wigner_min = 0.0;
};

// Smallest tau in [0, 1/2] whose Gaussian smoothing (s = 1 - 2 tau) renders
// the quasiprobability nonnegative, found by 12-step bisection. Positivity at
// a given tau is certified through the second-moment covariance (sufficient
// and necessary for Gaussian states; conservative for the truncated
// reconstructions this library produces, where literal grid evaluation of the
// deconvolved s > 0 distribution diverges). Statistical noise is handled by
// shrinking the fitted minimum variance one standard error toward shot noise.
// Certified Wigner negativity (beyond noise) short-circuits to 0.5.
NcdResult nonclassical_depth(const DensityMatrix& dm);

// Var[X(theta)] in shot-noise units from the matrix moments:
// 1 + 2<n> + 2 Re(<a^2> e^{-2i theta}) - (2 Re(<a> e^{-i theta}))^2.
std::vector<std::pair<double, double>> quadrature_variance_curve(
    const DensityMatrix& dm, const std::vector<double>& thetas);

// Variance extremes implied by moments (exact closed form of the curve).
struct VarianceExtremes {
    double v_min = 0.0;
    double v_max = 0.0;
    double sigma_vmin = 0.0;  // standard error when derived from a trace fit, else 0
};
VarianceExtremes variance_extremes(const DensityMatrix& dm);

double squeezing_db(double variance);

} // namespace cvhl
