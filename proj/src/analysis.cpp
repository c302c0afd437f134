#include "cvhl/analysis.hpp"
#include "cvhl/errors.hpp"
#include "cvhl/trace_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

namespace cvhl {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Sum of weight(k) * v(L + 2k) for k >= 1, where the chain values follow
// v_j ~ C q^j / sqrt(j) and q is estimated from the last two chain entries.
double geometric_tail(double last, double prev, int k_last,
                      const std::function<double(int)>& weight) {
    if (last == 0.0 || prev == 0.0)
        return 0.0;
    const double q = (last / prev) * std::sqrt(k_last / (k_last - 1.0));
    if (!(q > 0.0 && q < 0.95))
        return 0.0;
    double acc = 0.0, cur = last;
    for (int k = 1; k < 500; ++k) {
        cur *= q * std::sqrt(double(k_last) / (k_last + k));
        const double t = weight(k) * cur;
        acc += t;
        if (std::abs(t) < 1e-18 * std::max(1e-30, std::abs(acc)))
            break;
    }
    return acc;
}

bool chain_usable(double q1, double q2) {
    return q1 > 0.0 && q1 < 0.95 && std::abs(q1 - q2) < 0.3 * std::max(q1, q2);
}

} // namespace

FockMoments density_moments(const DensityMatrix& dm, bool tail_extrapolation) {
    const int n_max = dm.cutoff;
    const auto& rho = dm.rho;
    FockMoments mom;
    std::vector<double> d(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        d[n] = rho(n, n).real();
        mom.nbar += n * d[n];
    }
    for (int m = 1; m <= n_max; ++m)
        mom.a += std::sqrt(double(m)) * rho(m, m - 1);
    for (int m = 2; m <= n_max; ++m)
        mom.a2 += std::sqrt(m * (m - 1.0)) * rho(m, m - 2);

    if (tail_extrapolation && n_max >= 9) {
        // <n>: extend each parity chain of the diagonal
        for (int last : {n_max, n_max - 1}) {
            const int kl = last / 2;
            if (kl < 3 || !(d[last] > 0.0) || !(d[last - 2] > 0.0) || !(d[last - 4] > 0.0))
                continue;
            const double q1 = (d[last] / d[last - 2]) * std::sqrt(kl / (kl - 1.0));
            const double q2 = (d[last - 2] / d[last - 4]) * std::sqrt((kl - 1.0) / (kl - 2.0));
            if (chain_usable(q1, q2))
                mom.nbar += geometric_tail(d[last], d[last - 2], kl,
                                           [last](int k) { return double(last + 2 * k); });
        }
        // <a^2>: extend the |n><n-2| band, again per parity chain
        for (int off = 0; off <= 1; ++off) {
            const int last = n_max - off;
            if (last - 6 < 0)
                continue;
            const std::complex<double> bl = rho(last, last - 2);
            const std::complex<double> bp = rho(last - 2, last - 4);
            const std::complex<double> bpp = rho(last - 4, last - 6);
            const int kl = last / 2;
            if (kl < 3 || std::abs(bp) == 0.0 || std::abs(bpp) == 0.0 || std::abs(bl) == 0.0)
                continue;
            const double q1 = std::abs(bl / bp) * std::sqrt(kl / (kl - 1.0));
            const double q2 = std::abs(bp / bpp) * std::sqrt((kl - 1.0) / (kl - 2.0));
            if (!chain_usable(q1, q2))
                continue;
            const std::complex<double> phase = bl / std::abs(bl);
            const double mag =
                geometric_tail(std::abs(bl), std::abs(bp), kl, [last](int k) {
                    return std::sqrt((last + 2.0 * k) * (last + 2.0 * k - 1.0));
                });
            mom.a2 += phase * mag;
        }
    }
    return mom;
}

double purity(const DensityMatrix& dm) {
    return dm.rho.squaredNorm();  // sum |rho_nm|^2 = Tr[rho^2] for Hermitian rho
}

namespace {

// Fock-basis Wigner kernel, canonical units: for m >= n at w = q + ip,
// W_nm = (1/pi) (-1)^n sqrt(2^{m-n} n!/m!) w^{m-n} e^{-|w|^2} L_n^{m-n}(2|w|^2)
struct WignerEvaluator {
    int cutoff;
    std::vector<double> coef;  // packed n<=m coefficients without the (1/pi) e^{-r2} w^d part

    explicit WignerEvaluator(int n) : cutoff(n) {
        coef.resize((n + 1) * (n + 2) / 2);
        int pi_idx = 0;
        for (int a = 0; a <= n; ++a)
            for (int b = a; b <= n; ++b, ++pi_idx) {
                const int d = b - a;
                const double lg = 0.5 * (d * std::log(2.0) + std::lgamma(a + 1.0) -
                                         std::lgamma(b + 1.0));
                coef[pi_idx] = ((a & 1) ? -1.0 : 1.0) * std::exp(lg);
            }
    }

    double value(const Eigen::MatrixXcd& rho, double q, double p) const {
        const double r2 = q * q + p * p;
        const double damp = std::exp(-r2) / kPi;
        if (damp == 0.0)
            return 0.0;
        const std::complex<double> w{q, p};
        std::vector<std::complex<double>> wpow(cutoff + 1);
        wpow[0] = 1.0;
        for (int d = 1; d <= cutoff; ++d)
            wpow[d] = wpow[d - 1] * w;
        double acc = 0.0;
        int pi_idx = 0;
        for (int n = 0; n <= cutoff; ++n)
            for (int m = n; m <= cutoff; ++m, ++pi_idx) {
                const double lag = std::assoc_laguerre(unsigned(n), unsigned(m - n), 2.0 * r2);
                const std::complex<double> ker = coef[pi_idx] * wpow[m - n] * lag;
                if (m == n)
                    acc += rho(n, n).real() * ker.real();
                else
                    acc += 2.0 * (rho(n, m) * ker).real();
            }
        return damp * acc;
    }
};

} // namespace

double wigner_value(const DensityMatrix& dm, double q, double p) {
    return WignerEvaluator(dm.cutoff).value(dm.rho, q, p);
}

WignerGrid wigner_function(const DensityMatrix& dm, double extent, int n_points) {
    if (n_points < 2)
        throw std::invalid_argument("Wigner grid needs at least 2 points per axis");
    if (!(extent > 0.0))
        throw std::invalid_argument("Wigner grid extent must be positive");
    WignerGrid grid;
    grid.extent = extent;
    grid.n_points = n_points;
    grid.step = 2.0 * extent / (n_points - 1);
    if (grid.step > 0.5)
        throw std::invalid_argument("Wigner grid too coarse (step > 0.5)");
    grid.values.resize(n_points, n_points);
    const WignerEvaluator ev(dm.cutoff);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int iq; (iq = next.fetch_add(1)) < n_points;) {
            const double q = -extent + iq * grid.step;
            for (int ip = 0; ip < n_points; ++ip)
                grid.values(iq, ip) = ev.value(dm.rho, q, -extent + ip * grid.step);
        }
    };
    const int nthreads = std::min(effective_threads(), n_points);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    return grid;
}

void write_wigner(const WignerGrid& grid, const std::string& path) {
    std::ostringstream out;
    char buf[40];
    auto f = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "# q_min=" << f(-grid.extent) << "\n# q_max=" << f(grid.extent) << "\n";
    out << "# p_min=" << f(-grid.extent) << "\n# p_max=" << f(grid.extent) << "\n";
    out << "# step=" << f(grid.step) << "\n# n_points=" << grid.n_points << "\n";
    for (int iq = 0; iq < grid.n_points; ++iq) {
        for (int ip = 0; ip < grid.n_points; ++ip)
            out << (ip ? "," : "") << f(grid.values(iq, ip));
        out << "\n";
    }
    atomic_write_text(path, out.str());
}

VarianceExtremes variance_extremes(const DensityMatrix& dm) {
    VarianceExtremes ve;
    std::complex<double> a, a2;
    double nbar;
    if (dm.diag.has_second_moments) {
        a = dm.diag.second_moments.a;
        a2 = dm.diag.second_moments.a2;
        nbar = dm.diag.second_moments.nbar;
        ve.sigma_vmin = dm.diag.second_moments.sigma_vmin;
    } else {
        const FockMoments mom = density_moments(dm);
        a = mom.a;
        a2 = mom.a2;
        nbar = mom.nbar;
    }
    const std::complex<double> a2c = a2 - a * a;  // central second moment
    const double mid = 1.0 + 2.0 * nbar - 2.0 * std::norm(a);
    ve.v_min = mid - 2.0 * std::abs(a2c);
    ve.v_max = mid + 2.0 * std::abs(a2c);
    return ve;
}

NcdResult nonclassical_depth(const DensityMatrix& dm) {
    NcdResult res;
    res.unreliable = dm.diag.trailing_diagonal > 0.01;

    const VarianceExtremes ve = variance_extremes(dm);
    // conservative estimate of the smallest quadrature variance: shrink one
    // standard error toward shot noise so sampling noise cannot inflate tau
    const double vmin_est = ve.v_min + ve.sigma_vmin;

    // Wigner-negativity certificate on an adaptive grid. Without error
    // information the floor is 0.05 (truncation ripples of Gaussian-like
    // states stay below 2e-3); for sampled reconstructions a certificate
    // needs bootstrap error bars, otherwise the branch stays out.
    double floor;
    if (dm.diag.has_bootstrap) {
        double ssq = 0.0;
        const auto& be = dm.diag.bootstrap_errors;
        for (int n = 0; n <= dm.cutoff; ++n)
            for (int m = n; m <= dm.cutoff; ++m)
                ssq += (m == n ? 1.0 : 2.0) * be(n, m) * be(n, m);
        floor = std::max(0.05, 5.0 * std::sqrt(ssq) / kPi);
    } else if (dm.diag.has_second_moments) {
        floor = -1.0;  // sampled matrix without error bars: cannot certify
    } else {
        floor = 0.05;
    }
    {
        const double sigma_max = std::sqrt(std::max(ve.v_max, 1.0) / 2.0);
        double extent = std::max(4.0, 3.0 * sigma_max);
        const WignerEvaluator ev(dm.cutoff);
        for (int tries = 0; tries < 3; ++tries) {
            const int npts = std::max(81, int(extent / 0.1) * 2 + 1);
            const double step = 2.0 * extent / (npts - 1);
            double wmin = 1e300;
            int at_iq = 0, at_ip = 0;
            for (int iq = 0; iq < npts; ++iq)
                for (int ip = 0; ip < npts; ++ip) {
                    const double v =
                        ev.value(dm.rho, -extent + iq * step, -extent + ip * step);
                    if (v < wmin) {
                        wmin = v;
                        at_iq = iq;
                        at_ip = ip;
                    }
                }
            res.wigner_min = wmin;
            const bool on_edge = at_iq <= 1 || at_ip <= 1 || at_iq >= npts - 2 ||
                                 at_ip >= npts - 2;
            if (!(on_edge && wmin < 0.0))
                break;  // interior minimum (or boundary nonnegative): grid large enough
            extent *= 1.5;
        }
    }
    if (floor > 0.0 && res.wigner_min < -floor) {
        res.wigner_negative = true;
        res.tau = 0.5;
        return res;
    }

    // bisection on tau with the covariance certificate: positive at tau iff
    // vmin_est >= 1 - 2 tau - tol
    const double tol = 1e-6;
    auto positive_at = [&](double tau) { return vmin_est >= 1.0 - 2.0 * tau - tol; };
    if (positive_at(0.0)) {
        res.tau = 0.0;
        return res;
    }
    if (!positive_at(0.5)) {
        res.tau = 0.5;  // fitted variance at or below zero: estimation artifact, clamp
        return res;
    }
    double lo = 0.0, hi = 0.5;
    for (int i = 0; i < 12; ++i) {  // resolution 0.5 / 4096 < 2e-4
        const double mid = 0.5 * (lo + hi);
        (positive_at(mid) ? hi : lo) = mid;
    }
    res.tau = hi;
    return res;
}

std::vector<std::pair<double, double>> quadrature_variance_curve(
    const DensityMatrix& dm, const std::vector<double>& thetas) {
    const FockMoments mom = density_moments(dm);
    std::vector<std::pair<double, double>> curve;
    curve.reserve(thetas.size());
    for (double th : thetas) {
        const std::complex<double> e2{std::cos(2.0 * th), -std::sin(2.0 * th)};
        const std::complex<double> e1{std::cos(th), -std::sin(th)};
        const double mean = 2.0 * (mom.a * e1).real();
        const double var = 1.0 + 2.0 * mom.nbar + 2.0 * (mom.a2 * e2).real() - mean * mean;
        curve.emplace_back(th, var);
    }
    return curve;
}

double squeezing_db(double variance) {
    if (!(variance > 0.0))
        throw std::invalid_argument("variance must be positive for a dB value");
    return 10.0 * std::log10(variance);
}

} // namespace cvhl
