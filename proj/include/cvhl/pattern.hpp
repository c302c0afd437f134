#pragma once
#include <vector>

// Harmonic-oscillator eigenfunctions psi_n, their irregular second solutions
// phi_n, and the tomography kernels f_nm = d/dx (psi_n phi_m).
//
// Internal canonical units: vacuum variance of x is 1/2 (psi_0 = pi^{-1/4}
// e^{-x^2/2}). phi_n is normalized so the Wronskian psi_n phi_n' - psi_n' phi_n
// equals 2, which is exactly the choice that makes the kernels biorthogonal to
// the products psi_j psi_k with unit weight. phi_0(0) = 0 (odd seed).

namespace cvhl {

inline constexpr int kPatternMaxLevel = 48;

double eigenfunction_psi(int n, double x);

// psi_0..psi_nmax at one point (stable three-term recurrence in n).
void psi_levels(int nmax, double x, double* out);

// phi_0..phi_nmax at one point. phi_0, phi_1 come from Dawson's integral in
// closed form; higher levels integrate the oscillator equation outward from
// x = 0 (Numerov). The n-recurrence is *not* used upward in the classically
// forbidden region, where phi is the subdominant solution and the recurrence
// loses all accuracy; outward ODE integration tracks the growing solution and
// is stable in every regime.
void phi_levels(int nmax, double x, double* out, double h = 2.5e-4);

double irregular_phi(int n, double x);

// Direct evaluation of f_nm (accurate; used by tests and as the fallback for
// samples outside the tabulated range).
double pattern_function(int n, int m, double x);

// Tabulated kernels on a uniform grid over [-x_max, x_max] with linear
// interpolation, for the estimator's hot loop. Also exposes the marched
// grid values themselves so quadrature oracles can reuse them.
class PatternKernel {
public:
    static PatternKernel build(int cutoff, double x_max = 12.0, double step = 1e-3);

    int cutoff() const { return cutoff_; }
    double x_max() const { return x_max_; }
    double step() const { return step_; }
    int n_pairs() const { return n_pairs_; }
    int n_grid() const { return n_grid_; }

    static int pair_index(int n, int m, int cutoff);

    // f_nm for every 0 <= n <= m <= cutoff at one point, written into
    // out[pair_index(n,m)]. Interpolates inside the table, evaluates directly
    // in the overflow-safe band beyond it, and returns 0 past |x| = 26 where
    // the kernels have decayed below 2e-3.
    void eval_all(double x, double* out) const;

    double eval(int n, int m, double x) const;

    // grid value access (exact marched values, no interpolation)
    double grid_x(int i) const { return -x_max_ + step_ * i; }
    double grid_value(int pair, int i) const { return table_[static_cast<size_t>(i) * n_pairs_ + pair]; }

private:
    int cutoff_ = 0;
    int n_pairs_ = 0;
    int n_grid_ = 0;
    double x_max_ = 0.0;
    double step_ = 0.0;
    std::vector<double> table_;  // [grid][pair], pairs packed upper-triangular
};

} // namespace cvhl
