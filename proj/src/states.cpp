#include "cvhl/states.hpp"

#include <cmath>
#include <stdexcept>

namespace cvhl {

namespace {

void check_cutoff(int cutoff) {
    if (cutoff < 0 || cutoff > 200)
        throw std::invalid_argument("cutoff outside supported range");
}

} // namespace

Eigen::MatrixXcd coherent_density(std::complex<double> alpha, int cutoff) {
    check_cutoff(cutoff);
    // c_n = e^{-|a|^2/2} a^n / sqrt(n!)
    Eigen::VectorXcd c(cutoff + 1);
    c[0] = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n <= cutoff; ++n)
        c[n] = c[n - 1] * alpha / std::sqrt(double(n));
    Eigen::MatrixXcd rho = c * c.adjoint();
    return rho / rho.trace().real();  // renormalize the truncation
}

Eigen::MatrixXcd thermal_density(double nbar, int cutoff) {
    check_cutoff(cutoff);
    if (nbar < 0.0)
        throw std::invalid_argument("thermal occupation must be nonnegative");
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
    double p = 1.0 / (1.0 + nbar);
    const double ratio = nbar / (1.0 + nbar);
    for (int n = 0; n <= cutoff; ++n) {
        rho(n, n) = p;
        p *= ratio;
    }
    return rho / rho.trace().real();
}

Eigen::MatrixXcd fock_density(int n, int cutoff) {
    check_cutoff(cutoff);
    if (n < 0 || n > cutoff)
        throw std::invalid_argument("Fock level beyond cutoff");
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
    rho(n, n) = 1.0;
    return rho;
}

Eigen::MatrixXd squeeze_operator(double r, int m_max, int n_max) {
    if (m_max < 0 || n_max < 0)
        throw std::invalid_argument("negative matrix dimension");
    const double th = std::tanh(r);
    const double sh = 1.0 / std::cosh(r);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m_max + 1, n_max + 1);
    s(0, 0) = std::sqrt(sh);
    for (int m = 2; m <= m_max; m += 2)
        s(m, 0) = -std::sqrt((m - 1.0) / m) * th * s(m - 2, 0);
    for (int n = 1; n <= n_max; ++n)
        for (int m = (n & 1); m <= m_max; m += 2) {
            double v = 0.0;
            if (n >= 2)
                v += std::sqrt((n - 1.0) / n) * th * s(m, n - 2);
            if (m >= 1)
                v += std::sqrt(double(m) / n) * sh * s(m - 1, n - 1);
            s(m, n) = v;
        }
    return s;
}

Eigen::MatrixXcd squeezed_thermal_density(double v_minus, double v_plus, int cutoff) {
    check_cutoff(cutoff);
    if (!(v_minus > 0.0) || !(v_plus > 0.0) || v_minus * v_plus < 1.0 - 1e-12)
        throw std::invalid_argument("variances must be positive with product >= 1");
    const double nu = std::sqrt(v_minus * v_plus);  // symplectic eigenvalue
    const double nbar = (nu - 1.0) / 2.0;
    const double r = 0.5 * std::log(nu / v_minus);
    // rho = S(r) rho_th S(r)^dag; carry the inner (thermal) index far enough
    // past the cutoff that the discarded weight is negligible
    const int inner = cutoff + 40;
    const Eigen::MatrixXd s = squeeze_operator(r, cutoff, inner);
    Eigen::VectorXd p(inner + 1);
    double pk = 1.0 / (1.0 + nbar);
    const double ratio = nbar / (1.0 + nbar);
    for (int k = 0; k <= inner; ++k) {
        p[k] = pk;
        pk *= ratio;
    }
    Eigen::MatrixXd rho = s * p.asDiagonal() * s.transpose();
    rho /= rho.trace();
    return rho.cast<std::complex<double>>();
}

} // namespace cvhl
