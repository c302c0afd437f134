#pragma once

#include "cvhl/gaussian.hpp"
#include "cvhl/pattern.hpp"
#include "cvhl/scan.hpp"

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace cvhl {

// Second moments of the field extracted directly from the trace via the
// binned variance fit; carried as a reconstruction diagnostic because they
// give lower-variance estimates of the quadrature extremes than the
// truncated density matrix does.
struct SecondMoments {
    std::complex<double> a{0.0, 0.0};   // <a>
    double nbar = 0.0;                  // <a^dag a>
    std::complex<double> a2{0.0, 0.0};  // <a^2>
    double sigma_vmin = 0.0;            // standard error of the fitted minimum variance
};

struct ReconstructionDiagnostics {
    double trailing_diagonal = 0.0;  // rho_NN, truncation indicator
    std::vector<int> empty_bins;     // empty on success (rejection otherwise)
    double min_diagonal = 0.0;
    bool negative_diagonal_flagged = false;  // any diagonal below -5e-3
    bool low_sample_warning = false;         // fewer than 50 samples per free parameter
    bool has_second_moments = false;
    SecondMoments second_moments;
    bool has_purity_unbiased = false;
    double purity_unbiased = 0.0;  // U-statistic estimate of Tr[rho^2]
    bool has_bootstrap = false;
    Eigen::MatrixXd bootstrap_errors;
};

struct DensityMatrix {
    int cutoff = 0;
    Eigen::MatrixXcd rho;
    ReconstructionDiagnostics diag;
};

// Hermiticity/trace/diagonal checks; throws DataQualityError on violation.
void validate_density(const DensityMatrix& dm);

// Number of worker threads: CVHL_THREADS if set, else hardware concurrency
// capped at 8.
int effective_threads();

// Pattern-function sampling estimator. Samples are folded mod pi (with the
// matching x sign flip), weighted by the inverse empirical phase density,
// rescaled x -> x/sqrt(2) into canonical units, and averaged against the
// kernel: rho_nm = (1/M) sum_k w_k f_nm(x_k) e^{i(n-m) theta_k}. The result
// is Hermitized and trace-normalized. Rejects traces with any empty pi/20
// phase bin. A prebuilt kernel covering `cutoff` may be supplied.
DensityMatrix estimate_density_matrix(const HomodyneTrace& trace, int cutoff,
                                      const PatternKernel* kernel = nullptr);

// Standard error per matrix entry over `resamples` bootstrap re-estimates;
// deterministic given seed (index-keyed resampling).
Eigen::MatrixXd bootstrap_errors(const HomodyneTrace& trace, int cutoff, int resamples,
                                 std::uint64_t seed, const PatternKernel* kernel = nullptr);

// The estimator with the sample average replaced by the analytic double
// integral over theta and the Gaussian quadrature density p(x|theta).
// Reproduces the exact Fock matrix of the state up to truncation; run as an
// oracle before trusting sampled estimates.
Eigen::MatrixXcd integral_oracle_estimate(const GaussianState& state, int cutoff,
                                          int n_theta = 256, double x_step = 0.005,
                                          const PatternKernel* kernel = nullptr);

// Optional cleanup: project onto the positive-semidefinite cone (clip
// negative eigenvalues, renormalize the trace).
void psd_project(DensityMatrix& dm);

// JSON density-matrix file: {cutoff, re, im, diagnostics:{...}}.
void write_density(const DensityMatrix& dm, const std::string& path);
DensityMatrix read_density(const std::string& path);

} // namespace cvhl
