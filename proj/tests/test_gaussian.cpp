#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cvhl/gaussian.hpp"

#include <cmath>

using namespace cvhl;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("vacuum state") {
    const GaussianState v = build_state(StateKind::Vacuum);
    CHECK(v.mean.norm() == 0.0);
    CHECK((v.cov - Eigen::Matrix2d::Identity()).norm() == 0.0);
    for (double th : {0.0, 0.7, kPi / 2.0, 2.9}) {
        const auto st = quadrature_stats(v, th);
        CHECK(st.mean == 0.0);
        CHECK(st.variance == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(gaussian_purity(v) == doctest::Approx(1.0));
    CHECK(gaussian_ncd(v) == 0.0);
}

TEST_CASE("coherent state mean follows 2|alpha|cos(theta - arg alpha)") {
    const std::complex<double> alpha{1.0, 0.5};
    const GaussianState s = build_state(StateKind::Coherent, alpha);
    CHECK(s.mean(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s.mean(1) == doctest::Approx(1.0).epsilon(1e-15));
    for (double th : {0.0, 0.4, 1.3, 2.8}) {
        const auto st = quadrature_stats(s, th);
        CHECK(st.mean ==
              doctest::Approx(2.0 * std::abs(alpha) * std::cos(th - std::arg(alpha)))
                  .epsilon(1e-14));
        CHECK(st.variance == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(gaussian_purity(s) == doctest::Approx(1.0));
    CHECK(gaussian_ncd(s) == 0.0);
}

TEST_CASE("squeezed vacuum variances and figures of merit") {
    const GaussianState s = build_state(StateKind::SqueezedVacuum, {}, 0.5, 2.0);
    CHECK(quadrature_stats(s, 0.0).variance == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(quadrature_stats(s, kPi / 2.0).variance == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(quadrature_stats(s, kPi / 4.0).variance == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(gaussian_purity(s) == doctest::Approx(1.0).epsilon(1e-14));  // 0.5*2 = 1
    CHECK(gaussian_ncd(s) == doctest::Approx(0.25).epsilon(1e-14));

    // mixed squeezed state: purity 1/sqrt(v- v+)
    const GaussianState m = build_state(StateKind::SqueezedVacuum, {}, 0.5, 4.0);
    CHECK(gaussian_purity(m) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("squeeze axis rotates the covariance") {
    const double axis = kPi / 6.0;
    const GaussianState s = build_state(StateKind::SqueezedVacuum, {}, 0.4, 3.0, axis);
    CHECK(quadrature_stats(s, axis).variance == doctest::Approx(0.4).epsilon(1e-13));
    CHECK(quadrature_stats(s, axis + kPi / 2.0).variance == doctest::Approx(3.0).epsilon(1e-13));
    // rotation covariance: stats at theta of the rotated state equal stats at
    // theta - axis of the unrotated one
    const GaussianState s0 = build_state(StateKind::SqueezedVacuum, {}, 0.4, 3.0, 0.0);
    for (double th : {0.1, 0.9, 2.2}) {
        CHECK(quadrature_stats(s, th).variance ==
              doctest::Approx(quadrature_stats(s0, th - axis).variance).epsilon(1e-13));
    }
}

TEST_CASE("loss channel") {
    const GaussianState s = build_state(StateKind::SqueezedCoherent, {0.8, -0.2}, 0.5, 2.0);

    SUBCASE("eta=1 is the identity") {
        const GaussianState out = apply_loss(s, 1.0);
        CHECK((out.mean - s.mean).norm() == 0.0);
        CHECK((out.cov - s.cov).norm() == 0.0);
    }
    SUBCASE("eta=0 gives vacuum") {
        const GaussianState out = apply_loss(s, 0.0);
        CHECK(out.mean.norm() == 0.0);
        CHECK((out.cov - Eigen::Matrix2d::Identity()).norm() == 0.0);
    }
    SUBCASE("mean scales by sqrt(eta), cov interpolates to the identity") {
        const double eta = 0.37;
        const GaussianState out = apply_loss(s, eta);
        CHECK((out.mean - std::sqrt(eta) * s.mean).norm() < 1e-15);
        const Eigen::Matrix2d expect =
            eta * s.cov + (1.0 - eta) * Eigen::Matrix2d::Identity();
        CHECK((out.cov - expect).norm() < 1e-15);
    }
    SUBCASE("composition: loss(eta1) then loss(eta2) equals loss(eta1*eta2)") {
        for (int i = 0; i <= 20; ++i) {
            const double e1 = i / 20.0;
            const double e2 = 0.63;
            const GaussianState two = apply_loss(apply_loss(s, e1), e2);
            const GaussianState one = apply_loss(s, e1 * e2);
            CHECK((two.mean - one.mean).norm() < 1e-12);
            CHECK((two.cov - one.cov).norm() < 1e-12);
        }
    }
    SUBCASE("loss never decreases NCD toward nonclassicality") {
        double prev = gaussian_ncd(s);
        for (double eta : {0.9, 0.7, 0.5, 0.3, 0.1}) {
            const double now = gaussian_ncd(apply_loss(s, eta));
            CHECK(now <= prev + 1e-12);
            prev = now;
        }
    }
}

TEST_CASE("validation rejects unphysical states") {
    GaussianState s = build_state(StateKind::Vacuum);
    CHECK_NOTHROW(validate_state(s));

    s.cov << 0.5, 0.0, 0.0, 0.5;  // det < 1: violates uncertainty
    CHECK_THROWS_AS(validate_state(s), std::invalid_argument);

    s.cov << 1.0, 0.5, -0.5, 1.0;  // asymmetric
    CHECK_THROWS_AS(validate_state(s), std::invalid_argument);

    s.cov << -1.0, 0.0, 0.0, -2.0;  // not positive definite
    CHECK_THROWS_AS(validate_state(s), std::invalid_argument);

    CHECK_THROWS_AS(build_state(StateKind::SqueezedVacuum, {}, 0.5, 1.5),
                    std::invalid_argument);  // v- v+ < 1
    CHECK_THROWS_AS(build_state(StateKind::SqueezedVacuum, {}, -0.5, 2.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_state(StateKind::SqueezedVacuum, {}, 1.3, 2.0),
                    std::invalid_argument);  // v- > 1
    CHECK_THROWS_AS(apply_loss(s, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(apply_loss(s, -0.1), std::invalid_argument);
}

TEST_CASE("variance curve of a squeezed state is pi-periodic and sinusoidal in 2theta") {
    const GaussianState s = build_state(StateKind::SqueezedVacuum, {}, 0.31, 7.5);
    for (double th : {0.0, 0.3, 1.1, 2.0}) {
        const double v = quadrature_stats(s, th).variance;
        CHECK(quadrature_stats(s, th + kPi).variance == doctest::Approx(v).epsilon(1e-12));
        // V(theta) = mid - amp*cos(2 theta) for axis-aligned squeezing
        const double mid = (0.31 + 7.5) / 2.0, amp = (7.5 - 0.31) / 2.0;
        CHECK(v == doctest::Approx(mid - amp * std::cos(2.0 * th)).epsilon(1e-12));
    }
}
