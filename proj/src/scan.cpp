#include "cvhl/scan.hpp"
#include "cvhl/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cvhl {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t stream_for(std::uint64_t seed, std::uint64_t index) {
    return seed ^ ((index + 1) * 0x9E3779B97F4A7C15ULL);
}

// fold theta into [0, pi) and flip x accordingly (X(theta+pi) = -X(theta))
inline void fold_sample(double theta, double x, double& tf, double& xf) {
    double t = std::fmod(theta, 2.0 * kPi);
    if (t < 0.0)
        t += 2.0 * kPi;
    if (t >= kPi) {
        t -= kPi;
        x = -x;
    }
    tf = t;
    xf = x;
}

} // namespace

void validate_scan_model(const PhaseScanModel& model) {
    if (!(model.duration > 0.0))
        throw std::invalid_argument("scan duration must be positive");
    if (!(model.span > 0.0))
        throw std::invalid_argument("scan span must be positive");
    if (model.kind == ScanKind::PowerLaw && !(model.exponent >= 1.0))
        throw std::invalid_argument("scan exponent must be >= 1");
}

double phase_at(const PhaseScanModel& model, double t) {
    validate_scan_model(model);
    if (t < -1e-12 || t > model.duration * (1.0 + 1e-12))
        throw std::invalid_argument("time outside scan duration");
    double u = std::clamp(t / model.duration, 0.0, 1.0);
    if (model.direction == ScanDirection::Down)
        u = 1.0 - u;  // same trajectory traversed backwards
    const double frac = (model.kind == ScanKind::Linear) ? u : std::pow(u, model.exponent);
    return model.theta0 + model.span * frac;
}

double normal_draw(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = stream_for(seed, index);
    const std::uint64_t r1 = splitmix64(s);
    const std::uint64_t r2 = splitmix64(s);
    const double u1 = ((r1 >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = (r2 >> 11) * 0x1.0p-53;        // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::uint64_t uniform_index(std::uint64_t seed, std::uint64_t index, std::uint64_t bound) {
    if (bound == 0)
        throw std::invalid_argument("uniform_index bound must be positive");
    std::uint64_t s = stream_for(seed, index);
    // 64-bit multiply-high rejection-free mapping; bias < 2^-64, irrelevant here
    const unsigned __int128 prod = static_cast<unsigned __int128>(splitmix64(s)) * bound;
    return static_cast<std::uint64_t>(prod >> 64);
}

HomodyneTrace synthesize_trace(const GaussianState& state, const PhaseScanModel& model,
                               int n_samples, std::uint64_t seed,
                               const std::string& source_label) {
    if (n_samples < 2)
        throw std::invalid_argument("need at least 2 samples");
    validate_state(state);
    validate_scan_model(model);
    HomodyneTrace trace;
    trace.samples.resize(n_samples);
    trace.sample_rate = n_samples / model.duration;
    trace.calibration_scale = 1.0;
    trace.source_label = source_label;
    trace.seed = seed;
    const double dt = model.duration / n_samples;
    for (int k = 0; k < n_samples; ++k) {
        const double t = k * dt;
        const double theta = phase_at(model, t);
        const auto stats = quadrature_stats(state, theta);
        trace.samples[k] = {t, theta,
                            stats.mean + std::sqrt(stats.variance) *
                                             normal_draw(seed, static_cast<std::uint64_t>(k))};
    }
    return trace;
}

HomodyneTrace calibrate_shot_noise(const HomodyneTrace& raw, const HomodyneTrace& vacuum_reference) {
    const auto& ref = vacuum_reference.samples;
    if (ref.size() < 100)
        throw DataQualityError("vacuum reference too short (need >= 100 samples)");
    double mean = 0.0;
    for (const auto& s : ref)
        mean += s.x;
    mean /= ref.size();
    double ss = 0.0;
    for (const auto& s : ref)
        ss += (s.x - mean) * (s.x - mean);
    const double sd = std::sqrt(ss / (ref.size() - 1));
    if (!(sd > 0.0))
        throw DataQualityError("vacuum reference has zero variance");
    HomodyneTrace out = raw;
    for (auto& s : out.samples)
        s.x /= sd;
    out.calibration_scale = sd;
    return out;
}

BinnedVarianceFit fit_binned_variance(const HomodyneTrace& trace, int n_bins) {
    const auto& samples = trace.samples;
    const std::size_t m = samples.size();
    if (m < 200)
        throw DataQualityError("too few samples for a binned variance fit");
    if (n_bins <= 0)
        n_bins = std::clamp(static_cast<int>(std::lround(std::sqrt(double(m)) / 3.0)), 24, 96);

    std::vector<double> sum(n_bins, 0.0), sumsq(n_bins, 0.0);
    std::vector<std::complex<double>> asum(n_bins, {0.0, 0.0});
    std::vector<int> count(n_bins, 0);
    for (const auto& s : samples) {
        double tf, xf;
        fold_sample(s.theta, s.x, tf, xf);
        int b = std::min(static_cast<int>(tf / kPi * n_bins), n_bins - 1);
        sum[b] += xf;
        sumsq[b] += xf * xf;
        asum[b] += xf * std::complex<double>(std::cos(tf), std::sin(tf));
        ++count[b];
    }

    const double h = kPi / (2.0 * n_bins);          // half bin width
    const double atten = std::sin(2.0 * h) / (2.0 * h);  // bin-average factor for cos/sin(2 theta)

    struct Bin { double theta, var; int n; };
    std::vector<Bin> bins;
    std::complex<double> abar{0.0, 0.0};
    for (int b = 0; b < n_bins; ++b) {
        if (count[b] < 5)
            continue;
        const double mu = sum[b] / count[b];
        const double var = (sumsq[b] - count[b] * mu * mu) / (count[b] - 1);
        bins.push_back({(b + 0.5) * kPi / n_bins, var, count[b]});
        abar += asum[b] / double(count[b]);
    }
    if (bins.size() < 6)
        throw DataQualityError("too few populated phase bins for a variance fit");
    abar /= double(bins.size());

    // two passes of weighted least squares: weights 1/Var(sample variance)
    // = (n-1)/(2 V^2), first from the empirical bin variance, then from the
    // fitted model
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int pass = 0; pass < 2; ++pass) {
        Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
        Eigen::Vector3d atb = Eigen::Vector3d::Zero();
        for (const auto& bin : bins) {
            double v_for_w = (pass == 0)
                                 ? bin.var
                                 : p[0] + atten * (p[1] * std::cos(2.0 * bin.theta) +
                                                   p[2] * std::sin(2.0 * bin.theta));
            v_for_w = std::max(v_for_w, 1e-6);
            const double w = (bin.n - 1) / (2.0 * v_for_w * v_for_w);
            Eigen::Vector3d row(1.0, atten * std::cos(2.0 * bin.theta),
                                atten * std::sin(2.0 * bin.theta));
            ata += w * row * row.transpose();
            atb += w * row * bin.var;
        }
        Eigen::LDLT<Eigen::Matrix3d> ldlt(ata);
        if (ldlt.info() != Eigen::Success)
            throw NumericalError("variance fit normal equations not solvable");
        p = ldlt.solve(atb);
        cov = ldlt.solve(Eigen::Matrix3d::Identity());
    }

    BinnedVarianceFit fit;
    fit.a0 = p[0];
    fit.b = p[1];
    fit.c = p[2];
    fit.n_bins = n_bins;
    fit.bins_used = static_cast<int>(bins.size());
    fit.mean_a = abar;
    const double amp = std::hypot(p[1], p[2]);
    fit.v_min = p[0] - amp;
    fit.v_max = p[0] + amp;
    Eigen::Vector3d gmin(1.0, 0.0, 0.0), gmax(1.0, 0.0, 0.0);
    if (amp > 1e-12) {
        gmin << 1.0, -p[1] / amp, -p[2] / amp;
        gmax << 1.0, p[1] / amp, p[2] / amp;
    }
    fit.sigma_vmin = std::sqrt(std::max(0.0, gmin.dot(cov * gmin)));
    fit.sigma_vmax = std::sqrt(std::max(0.0, gmax.dot(cov * gmax)));
    return fit;
}

double windowed_variance(const HomodyneTrace& trace, double center, double half_width) {
    double cf = std::fmod(center, kPi);
    if (cf < 0.0)
        cf += kPi;
    double s1 = 0.0, s2 = 0.0;
    int n = 0;
    for (const auto& s : trace.samples) {
        double tf, xf;
        fold_sample(s.theta, s.x, tf, xf);
        double d = std::abs(tf - cf);
        d = std::min(d, kPi - d);  // circular distance mod pi
        if (d <= half_width) {
            s1 += xf;
            s2 += xf * xf;
            ++n;
        }
    }
    if (n < 2)
        throw DataQualityError("phase window contains fewer than 2 samples");
    const double mu = s1 / n;
    return (s2 - n * mu * mu) / (n - 1);
}

namespace {

struct FringeData {
    std::vector<double> t, xbar;
};

FringeData windowed_means(const HomodyneTrace& trace) {
    const std::size_t m = trace.samples.size();
    const int nw = std::clamp(static_cast<int>(m / 50), 40, 200);
    FringeData d;
    d.t.reserve(nw);
    d.xbar.reserve(nw);
    std::size_t pos = 0;
    for (int w = 0; w < nw; ++w) {
        const std::size_t end = m * (w + 1) / nw;
        double st = 0.0, sx = 0.0;
        std::size_t n = 0;
        for (; pos < end; ++pos, ++n) {
            st += trace.samples[pos].t;
            sx += trace.samples[pos].x;
        }
        if (n == 0)
            continue;
        d.t.push_back(st / n);
        d.xbar.push_back(sx / n);
    }
    return d;
}

} // namespace

PhaseFitResult fit_phase_model(const HomodyneTrace& trace, const PhaseScanModel& initial,
                               bool fit_exponent) {
    validate_scan_model(initial);
    if (trace.samples.size() < 400)
        throw DataQualityError("trace too short for phase-model fitting");
    const FringeData data = windowed_means(trace);
    const int nw = static_cast<int>(data.t.size());

    double xmin = data.xbar[0], xmax = data.xbar[0];
    for (double v : data.xbar) {
        xmin = std::min(xmin, v);
        xmax = std::max(xmax, v);
    }
    const double amp0 = (xmax - xmin) / 2.0;
    if (amp0 < 1.0)
        throw DataQualityError("no coherent fringe: mean-amplitude excursion below 1 "
                               "(requires |alpha| >= 1)");

    const bool with_exp = fit_exponent && initial.kind == ScanKind::PowerLaw;
    const int np = with_exp ? 4 : 3;  // span, delta, amplitude [, exponent]
    const double duration = trace.samples.back().t * trace.samples.size() /
                            std::max<std::size_t>(trace.samples.size() - 1, 1);

    auto model_with = [&](const Eigen::VectorXd& p) {
        PhaseScanModel mdl = initial;
        mdl.span = p[0];
        mdl.duration = duration;
        if (with_exp)
            mdl.exponent = p[3];
        return mdl;
    };
    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        const PhaseScanModel mdl = model_with(p);
        for (int w = 0; w < nw; ++w) {
            const double th = phase_at(mdl, std::min(data.t[w], mdl.duration));
            r[w] = data.xbar[w] - p[2] * std::cos(th - p[1]);
        }
    };

    // coarse grid over the fringe phase to land in the right basin
    Eigen::VectorXd p(np), r(nw);
    p[0] = initial.span;
    p[2] = amp0;
    if (with_exp)
        p[3] = initial.exponent;
    double best_sse = 1e300, best_delta = 0.0;
    for (int g = 0; g < 32; ++g) {
        p[1] = g * 2.0 * kPi / 32;
        residuals(p, r);
        const double sse = r.squaredNorm();
        if (sse < best_sse) {
            best_sse = sse;
            best_delta = p[1];
        }
    }
    p[1] = best_delta;

    // Levenberg-Marquardt with a numerical Jacobian
    double lambda = 1e-3;
    double sse = best_sse;
    int iter = 0;
    bool converged = false;
    Eigen::MatrixXd jac(nw, np);
    Eigen::VectorXd r0(nw), rt(nw);
    residuals(p, r0);
    for (; iter < 200; ++iter) {
        for (int j = 0; j < np; ++j) {
            const double step = 1e-6 * std::max(1.0, std::abs(p[j]));
            Eigen::VectorXd pj = p;
            pj[j] += step;
            residuals(pj, rt);
            jac.col(j) = (rt - r0) / step;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r0;
        bool accepted = false;
        for (int tries = 0; tries < 12; ++tries) {
            Eigen::MatrixXd lhs = jtj;
            lhs.diagonal() += lambda * jtj.diagonal();
            const Eigen::VectorXd step = lhs.ldlt().solve(-jtr);
            Eigen::VectorXd pn = p + step;
            pn[0] = std::max(pn[0], 1e-3);  // span > 0
            pn[2] = std::max(pn[2], 1e-3);  // amplitude > 0
            if (with_exp)
                pn[3] = std::clamp(pn[3], 1.0, 5.0);
            residuals(pn, rt);
            const double sse_new = rt.squaredNorm();
            if (sse_new < sse) {
                const double rel = (sse - sse_new) / std::max(sse, 1e-300);
                p = pn;
                r0 = rt;
                sse = sse_new;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                if (rel < 1e-12 || step.cwiseAbs().maxCoeff() < 1e-11)
                    converged = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) {
            converged = true;  // no further descent possible
            break;
        }
        if (converged)
            break;
    }

    PhaseFitResult result;
    result.model = model_with(p);
    result.amplitude = p[2];
    result.phase_offset = std::remainder(p[1], 2.0 * kPi);
    result.residual = std::sqrt(sse / nw);
    result.iterations = iter + 1;
    result.converged = converged;
    return result;
}

} // namespace cvhl
