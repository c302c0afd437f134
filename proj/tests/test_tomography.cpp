#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cvhl/errors.hpp"
#include "cvhl/states.hpp"
#include "cvhl/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <random>

using namespace cvhl;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

PhaseScanModel pi_scan() {
    PhaseScanModel m;
    m.kind = ScanKind::Linear;
    m.span = kPi;
    m.duration = 0.7;
    return m;
}

GaussianState shd_state() { return build_state(StateKind::SqueezedVacuum, {}, 0.31, 7.5); }

} // namespace

TEST_CASE("worker count selection honors the environment override") {
    unsetenv("CVHL_THREADS");
    CHECK(effective_threads() >= 1);
    CHECK(effective_threads() <= 8);
    setenv("CVHL_THREADS", "3", 1);
    CHECK(effective_threads() == 3);
    setenv("CVHL_THREADS", "0", 1);
    CHECK(effective_threads() >= 1);  // nonsense values fall back
    unsetenv("CVHL_THREADS");
}

TEST_CASE("vacuum reconstruction concentrates on the ground state") {
    const HomodyneTrace tr =
        synthesize_trace(build_state(StateKind::Vacuum), pi_scan(), 50000, 3);
    const DensityMatrix dm = estimate_density_matrix(tr, 4);
    CHECK(dm.cutoff == 4);
    CHECK(dm.rho.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dm.rho(0, 0).real() == doctest::Approx(1.0).epsilon(0.02));
    for (int n = 1; n <= 4; ++n)
        CHECK(std::abs(dm.rho(n, n)) < 0.02);
    CHECK(std::abs(dm.rho(0, 2)) < 0.03);
    // exactly Hermitian by construction
    CHECK((dm.rho - dm.rho.adjoint()).norm() == 0.0);
    CHECK_FALSE(dm.diag.low_sample_warning);
    CHECK(dm.diag.has_second_moments);
    CHECK(dm.diag.has_purity_unbiased);
    CHECK(dm.diag.purity_unbiased == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("coherent reconstruction recovers amplitude and phase") {
    const std::complex<double> alpha{0.9, -0.4};
    const HomodyneTrace tr =
        synthesize_trace(build_state(StateKind::Coherent, alpha), pi_scan(), 60000, 8);
    const DensityMatrix dm = estimate_density_matrix(tr, 6);
    const Eigen::MatrixXcd ref = coherent_density(alpha, 6);
    CHECK((dm.rho - ref).cwiseAbs().maxCoeff() < 0.025);
    // the 10 element (<1|rho|0>, proportional to alpha) fixes the phase
    // convention of the whole pipeline
    CHECK(std::arg(dm.rho(1, 0)) == doctest::Approx(std::arg(alpha)).epsilon(0.08));
}

TEST_CASE("estimation is deterministic and thread-count independent") {
    const HomodyneTrace tr = synthesize_trace(shd_state(), pi_scan(), 12000, 17);
    setenv("CVHL_THREADS", "1", 1);
    const DensityMatrix one = estimate_density_matrix(tr, 8);
    setenv("CVHL_THREADS", "7", 1);
    const DensityMatrix many = estimate_density_matrix(tr, 8);
    unsetenv("CVHL_THREADS");
    const DensityMatrix again = estimate_density_matrix(tr, 8);
    CHECK((one.rho - many.rho).norm() == 0.0);
    CHECK((one.rho - again.rho).norm() == 0.0);
}

TEST_CASE("phase-offset covariance: theta shift multiplies rho_nm by e^{i(n-m)D}") {
    // theta0 keeps every sample away from the phase-bin boundaries: a sample
    // sitting exactly on a boundary may be re-rounded into the neighboring bin
    // after the shift, which perturbs the inverse-density weights and masks
    // the covariance being tested.
    PhaseScanModel model = pi_scan();
    model.theta0 = 0.1003;
    const HomodyneTrace tr = synthesize_trace(shd_state(), model, 9000, 23);
    const double delta = kPi / 4.0;  // a whole number of coverage bins
    HomodyneTrace shifted = tr;
    for (auto& s : shifted.samples)
        s.theta += delta;
    const DensityMatrix base = estimate_density_matrix(tr, 8);
    const DensityMatrix moved = estimate_density_matrix(shifted, 8);
    for (int n = 0; n <= 8; ++n)
        for (int m = 0; m <= 8; ++m) {
            const std::complex<double> expect =
                base.rho(n, m) *
                std::exp(std::complex<double>(0.0, (n - m) * delta));
            CHECK(std::abs(moved.rho(n, m) - expect) < 1e-10);
        }
}

TEST_CASE("estimator depends only on the empirical distribution") {
    const HomodyneTrace tr = synthesize_trace(shd_state(), pi_scan(), 8000, 29);
    const DensityMatrix base = estimate_density_matrix(tr, 6);

    SUBCASE("sample order is irrelevant") {
        HomodyneTrace perm = tr;
        std::mt19937 rng(5);
        std::shuffle(perm.samples.begin(), perm.samples.end(), rng);
        const DensityMatrix out = estimate_density_matrix(perm, 6);
        CHECK((out.rho - base.rho).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("duplicating the trace changes nothing") {
        HomodyneTrace dup = tr;
        dup.samples.insert(dup.samples.end(), tr.samples.begin(), tr.samples.end());
        const DensityMatrix out = estimate_density_matrix(dup, 6);
        CHECK((out.rho - base.rho).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("concatenation averages the two halves") {
        // same scan structure, so the inverse-density weights coincide and the
        // raw estimates combine linearly; trace renormalization makes the
        // combination exact only up to the small per-half trace spread
        const HomodyneTrace other = synthesize_trace(shd_state(), pi_scan(), 8000, 30);
        HomodyneTrace cat = tr;
        cat.samples.insert(cat.samples.end(), other.samples.begin(), other.samples.end());
        const DensityMatrix a = estimate_density_matrix(tr, 6);
        const DensityMatrix b = estimate_density_matrix(other, 6);
        const DensityMatrix c = estimate_density_matrix(cat, 6);
        CHECK((c.rho - 0.5 * (a.rho + b.rho)).cwiseAbs().maxCoeff() < 5e-3);
    }
}

TEST_CASE("phase coverage rejection") {
    HomodyneTrace tr = synthesize_trace(shd_state(), pi_scan(), 6000, 31);
    // keep only the first 60% of the scan: the last pi/20 bins go empty
    tr.samples.resize(3600);
    CHECK_THROWS_WITH_AS(estimate_density_matrix(tr, 6),
                         doctest::Contains("insufficient phase coverage"), DataQualityError);
}

TEST_CASE("degenerate traces are rejected") {
    HomodyneTrace tr = synthesize_trace(shd_state(), pi_scan(), 6000, 32);
    for (auto& s : tr.samples)
        s.x = 0.0;
    CHECK_THROWS_AS(estimate_density_matrix(tr, 6), DataQualityError);
}

TEST_CASE("input validation") {
    const HomodyneTrace tr = synthesize_trace(shd_state(), pi_scan(), 6000, 33);
    CHECK_THROWS_AS(estimate_density_matrix(tr, -1), std::invalid_argument);
    CHECK_THROWS_AS(estimate_density_matrix(tr, 41), std::invalid_argument);
    HomodyneTrace empty;
    CHECK_THROWS_AS(estimate_density_matrix(empty, 4), DataQualityError);
}

TEST_CASE("low sample warning fires under 50 samples per free parameter") {
    const HomodyneTrace tr = synthesize_trace(build_state(StateKind::Vacuum), pi_scan(), 900, 34);
    const DensityMatrix dm = estimate_density_matrix(tr, 4);  // needs 50*25 = 1250
    CHECK(dm.diag.low_sample_warning);
}

TEST_CASE("integral oracle reproduces analytic Fock matrices (cutoff 6 spot check)") {
    const PatternKernel kernel = PatternKernel::build(6);

    SUBCASE("coherent alpha = 1") {
        const Eigen::MatrixXcd est =
            integral_oracle_estimate(build_state(StateKind::Coherent, {1.0, 0.0}), 6, 128,
                                     0.01, &kernel);
        // raw (untruncated) coherent elements
        Eigen::MatrixXcd ref(7, 7);
        for (int n = 0; n <= 6; ++n)
            for (int m = 0; m <= 6; ++m)
                ref(n, m) = std::exp(-1.0) /
                            std::sqrt(std::tgamma(n + 1.0) * std::tgamma(m + 1.0));
        CHECK((est - ref).cwiseAbs().maxCoeff() < 1e-4);
    }
    SUBCASE("squeezed vacuum kills odd rows") {
        const Eigen::MatrixXcd est = integral_oracle_estimate(
            build_state(StateKind::SqueezedVacuum, {}, 0.5, 2.0), 6, 128, 0.01, &kernel);
        CHECK(std::abs(est(0, 1)) < 1e-4);
        CHECK(std::abs(est(1, 1)) < 1e-4);
        CHECK(std::abs(est(2, 3)) < 1e-4);
        CHECK(est(0, 0).real() > 0.9);
        CHECK(est(0, 2).real() < 0.0);  // squeezing correlation sign along x
    }
}

TEST_CASE("second moments diagnostic matches the synthesized state") {
    const HomodyneTrace tr = synthesize_trace(shd_state(), pi_scan(), 100000, 40);
    const DensityMatrix dm = estimate_density_matrix(tr, 8);
    REQUIRE(dm.diag.has_second_moments);
    const SecondMoments& sm = dm.diag.second_moments;
    CHECK(sm.nbar == doctest::Approx((0.31 + 7.5 - 2.0) / 4.0).epsilon(0.03));
    CHECK(sm.a2.real() == doctest::Approx((0.31 - 7.5) / 4.0).epsilon(0.03));
    CHECK(std::abs(sm.a2.imag()) < 0.05);
    CHECK(std::abs(sm.a) < 0.05);
    CHECK(sm.sigma_vmin > 0.0);
}

TEST_CASE("bootstrap errors are deterministic and sized like sampling noise") {
    const HomodyneTrace tr = synthesize_trace(shd_state(), pi_scan(), 5000, 41);
    const PatternKernel kernel = PatternKernel::build(6);
    const Eigen::MatrixXd e1 = bootstrap_errors(tr, 6, 60, 9, &kernel);
    const Eigen::MatrixXd e2 = bootstrap_errors(tr, 6, 60, 9, &kernel);
    CHECK((e1 - e2).norm() == 0.0);
    const Eigen::MatrixXd e3 = bootstrap_errors(tr, 6, 60, 10, &kernel);
    CHECK((e1 - e3).norm() != 0.0);
    CHECK(e1.minCoeff() > 0.0);
    CHECK(e1.maxCoeff() < 0.2);
    CHECK_THROWS_AS(bootstrap_errors(tr, 6, 10, 9, &kernel), std::invalid_argument);
}

TEST_CASE("density matrix file round trip is exact") {
    const HomodyneTrace tr = synthesize_trace(shd_state(), pi_scan(), 7000, 42);
    DensityMatrix dm = estimate_density_matrix(tr, 8);
    dm.diag.bootstrap_errors = bootstrap_errors(tr, 8, 50, 1);
    dm.diag.has_bootstrap = true;
    const auto path =
        (std::filesystem::temp_directory_path() / "cvhl_rho_roundtrip.json").string();
    write_density(dm, path);
    const DensityMatrix back = read_density(path);
    CHECK(back.cutoff == dm.cutoff);
    CHECK((back.rho - dm.rho).norm() == 0.0);  // %.17g serialization is lossless
    CHECK(back.diag.trailing_diagonal == dm.diag.trailing_diagonal);
    CHECK(back.diag.has_second_moments);
    CHECK(back.diag.second_moments.nbar == dm.diag.second_moments.nbar);
    CHECK(back.diag.has_purity_unbiased);
    CHECK(back.diag.purity_unbiased == dm.diag.purity_unbiased);
    REQUIRE(back.diag.has_bootstrap);
    CHECK((back.diag.bootstrap_errors - dm.diag.bootstrap_errors).norm() == 0.0);
    std::filesystem::remove(path);
}

TEST_CASE("validate_density catches broken matrices") {
    const HomodyneTrace tr = synthesize_trace(shd_state(), pi_scan(), 7000, 43);
    DensityMatrix dm = estimate_density_matrix(tr, 6);
    CHECK_NOTHROW(validate_density(dm));
    DensityMatrix bad = dm;
    bad.rho(0, 1) = std::conj(bad.rho(1, 0)) + std::complex<double>(1e-3, 0.0);
    CHECK_THROWS_AS(validate_density(bad), DataQualityError);
    bad = dm;
    bad.rho(2, 2) = -0.1;
    CHECK_THROWS_AS(validate_density(bad), DataQualityError);
    bad = dm;
    bad.rho *= 1.5;
    CHECK_THROWS_AS(validate_density(bad), DataQualityError);
}

TEST_CASE("PSD projection clips negative eigenvalues and keeps the trace") {
    const HomodyneTrace tr = synthesize_trace(shd_state(), pi_scan(), 3000, 44);
    DensityMatrix dm = estimate_density_matrix(tr, 10);
    psd_project(dm);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dm.rho);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    CHECK(dm.rho.trace().real() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((dm.rho - dm.rho.adjoint()).norm() < 1e-12);
    CHECK(dm.diag.min_diagonal >= -1e-12);
}
