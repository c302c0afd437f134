#include "cvhl/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace cvhl {

void validate_state(const GaussianState& state) {
    const auto& c = state.cov;
    if (std::abs(c(0, 1) - c(1, 0)) > 1e-9)
        throw std::invalid_argument("covariance matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c);
    if (es.eigenvalues()(0) <= 0.0)
        throw std::invalid_argument("covariance matrix must be positive definite");
    if (c.determinant() < 1.0 - 1e-12)
        throw std::invalid_argument("covariance violates the uncertainty bound det(cov) >= 1");
}

GaussianState build_state(StateKind kind, std::complex<double> amplitude,
                          double v_minus, double v_plus, double squeeze_axis) {
    GaussianState s;
    s.mean.setZero();
    s.cov.setIdentity();
    const bool squeezed = (kind == StateKind::SqueezedVacuum || kind == StateKind::SqueezedCoherent);
    if (squeezed) {
        if (v_minus <= 0.0 || v_plus <= 0.0)
            throw std::invalid_argument("variances must be positive");
        if (v_minus * v_plus < 1.0 - 1e-12)
            throw std::invalid_argument("unphysical squeezing: v_minus*v_plus < 1");
        if (v_minus > 1.0 + 1e-12 || v_plus < 1.0 - 1e-12)
            throw std::invalid_argument("squeezed kinds require v_minus <= 1 <= v_plus");
        const double c = std::cos(squeeze_axis), sn = std::sin(squeeze_axis);
        Eigen::Matrix2d rot;
        rot << c, -sn, sn, c;
        Eigen::Matrix2d diag = Eigen::Matrix2d::Zero();
        diag(0, 0) = v_minus;
        diag(1, 1) = v_plus;
        s.cov = rot * diag * rot.transpose();
    }
    if (kind == StateKind::Coherent || kind == StateKind::SqueezedCoherent)
        s.mean << 2.0 * amplitude.real(), 2.0 * amplitude.imag();
    return s;
}

GaussianState apply_loss(const GaussianState& state, double eta) {
    if (eta < 0.0 || eta > 1.0)
        throw std::invalid_argument("loss transmission must lie in [0,1]");
    GaussianState out;
    out.mean = std::sqrt(eta) * state.mean;
    out.cov = eta * state.cov + (1.0 - eta) * Eigen::Matrix2d::Identity();
    return out;
}

QuadratureStats quadrature_stats(const GaussianState& state, double theta) {
    Eigen::Vector2d u(std::cos(theta), std::sin(theta));
    return {u.dot(state.mean), u.dot(state.cov * u)};
}

double gaussian_purity(const GaussianState& state) {
    return 1.0 / std::sqrt(state.cov.determinant());
}

double gaussian_ncd(const GaussianState& state) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(state.cov);
    const double lmin = es.eigenvalues()(0);
    return std::max(0.0, (1.0 - lmin) / 2.0);
}

} // namespace cvhl
