#include "cvhl/tomography.hpp"
#include "cvhl/errors.hpp"
#include "cvhl/trace_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace cvhl {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr int kCoverageBins = 20;  // pi/20 coverage/weighting bins
constexpr int kBlock = 1024;       // fixed summation block size

struct FoldedTrace {
    std::vector<double> theta, x, w;
};

// theta mod pi with the compensating x sign flip; also derives the inverse
// phase-density weights (sum w = M) and enforces coverage.
FoldedTrace fold_and_weight(const HomodyneTrace& trace) {
    const std::size_t m = trace.samples.size();
    if (m < 2)
        throw DataQualityError("trace has fewer than 2 samples");
    FoldedTrace f;
    f.theta.resize(m);
    f.x.resize(m);
    f.w.resize(m);
    std::vector<int> bin(m);
    std::vector<int> counts(kCoverageBins, 0);
    double xmin = 1e300, xmax = -1e300;
    for (std::size_t k = 0; k < m; ++k) {
        double t = std::fmod(trace.samples[k].theta, 2.0 * kPi);
        if (t < 0.0)
            t += 2.0 * kPi;
        double x = trace.samples[k].x;
        if (t >= kPi) {
            t -= kPi;
            x = -x;
        }
        f.theta[k] = t;
        f.x[k] = x;
        bin[k] = std::min(static_cast<int>(t / kPi * kCoverageBins), kCoverageBins - 1);
        ++counts[bin[k]];
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
    }
    if (!(xmax > xmin))
        throw DataQualityError("degenerate trace: all quadrature values identical");
    std::vector<int> empty;
    for (int b = 0; b < kCoverageBins; ++b)
        if (counts[b] == 0)
            empty.push_back(b);
    if (!empty.empty()) {
        std::ostringstream msg;
        msg << "insufficient phase coverage; empty pi/20 bins:";
        for (int b : empty)
            msg << ' ' << b;
        throw DataQualityError(msg.str());
    }
    const double c = double(m) / kCoverageBins;
    for (std::size_t k = 0; k < m; ++k)
        f.w[k] = c / counts[bin[k]];
    return f;
}

struct PairSums {
    std::vector<std::complex<double>> acc;  // sum of w f e^{i(n-m)theta}
    std::vector<double> sq;                 // sum of (w f)^2
    void init(int npairs) {
        acc.assign(npairs, {0.0, 0.0});
        sq.assign(npairs, 0.0);
    }
    void add(const PairSums& o) {
        for (std::size_t i = 0; i < acc.size(); ++i) {
            acc[i] += o.acc[i];
            sq[i] += o.sq[i];
        }
    }
};

// Accumulate one fixed-size block serially; blocks are later combined by a
// fixed pairwise tree, so the result is independent of thread partitioning.
void accumulate_block(const FoldedTrace& f, std::size_t lo, std::size_t hi,
                      const PatternKernel& kernel, int cutoff, PairSums& out) {
    const int npairs = kernel.n_pairs();
    out.init(npairs);
    std::vector<double> fbuf(npairs);
    std::vector<std::complex<double>> pw(cutoff + 1);
    const double inv_sqrt2 = 0.70710678118654752440;
    for (std::size_t k = lo; k < hi; ++k) {
        kernel.eval_all(f.x[k] * inv_sqrt2, fbuf.data());
        const std::complex<double> e{std::cos(f.theta[k]), std::sin(f.theta[k])};
        pw[0] = 1.0;
        for (int d = 1; d <= cutoff; ++d)
            pw[d] = pw[d - 1] * e;
        const double w = f.w[k];
        int pi = 0;
        for (int n = 0; n <= cutoff; ++n)
            for (int mm = n; mm <= cutoff; ++mm, ++pi) {
                const double wf = w * fbuf[pi];
                out.acc[pi] += wf * std::conj(pw[mm - n]);  // e^{i(n-mm)theta}
                out.sq[pi] += wf * wf;
            }
    }
}

PairSums accumulate_all(const FoldedTrace& f, const PatternKernel& kernel, int cutoff) {
    const std::size_t m = f.x.size();
    const std::size_t nblocks = (m + kBlock - 1) / kBlock;
    std::vector<PairSums> blocks(nblocks);
    const int nthreads = std::min<int>(effective_threads(), static_cast<int>(nblocks));
    if (nthreads <= 1) {
        for (std::size_t b = 0; b < nblocks; ++b)
            accumulate_block(f, b * kBlock, std::min(m, (b + 1) * std::size_t(kBlock)),
                             kernel, cutoff, blocks[b]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back([&] {
                for (std::size_t b; (b = next.fetch_add(1)) < nblocks;)
                    accumulate_block(f, b * kBlock,
                                     std::min(m, (b + 1) * std::size_t(kBlock)), kernel,
                                     cutoff, blocks[b]);
            });
        for (auto& t : pool)
            t.join();
    }
    // pairwise tree reduction in block order
    for (std::size_t stride = 1; stride < nblocks; stride *= 2)
        for (std::size_t b = 0; b + stride < nblocks; b += 2 * stride)
            blocks[b].add(blocks[b + stride]);
    return std::move(blocks[0]);
}

// Core estimate from folded data: Hermitian by construction, trace-normalized.
Eigen::MatrixXcd assemble_rho(const PairSums& sums, int cutoff, std::size_t m,
                              double* purity_u = nullptr) {
    Eigen::MatrixXcd rho(cutoff + 1, cutoff + 1);
    int pi = 0;
    for (int n = 0; n <= cutoff; ++n)
        for (int mm = n; mm <= cutoff; ++mm, ++pi) {
            const std::complex<double> v = sums.acc[pi] / double(m);
            rho(n, mm) = v;
            rho(mm, n) = std::conj(v);
        }
    for (int n = 0; n <= cutoff; ++n)
        rho(n, n) = rho(n, n).real();  // kill rounding residue on the diagonal
    const double tr = rho.trace().real();
    if (!(std::abs(tr) > 1e-6))
        throw NumericalError("estimated trace vanishes; cannot normalize");
    if (purity_u) {
        // unbiased U-statistic for sum |rho_nm|^2 built from per-sample terms
        double s = 0.0;
        pi = 0;
        for (int n = 0; n <= cutoff; ++n)
            for (int mm = n; mm <= cutoff; ++mm, ++pi) {
                const double u = (std::norm(sums.acc[pi]) - sums.sq[pi]) /
                                 (double(m) * (double(m) - 1.0));
                s += (mm == n ? 1.0 : 2.0) * u;
            }
        *purity_u = s / (tr * tr);
    }
    rho /= tr;
    return rho;
}

} // namespace

int effective_threads() {
    if (const char* env = std::getenv("CVHL_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1)
            return std::min(v, 64);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return std::clamp<int>(static_cast<int>(hw), 1, 8);
}

void validate_density(const DensityMatrix& dm) {
    const auto& rho = dm.rho;
    if (rho.rows() != dm.cutoff + 1 || rho.cols() != dm.cutoff + 1)
        throw DataQualityError("density matrix dimension does not match cutoff");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw DataQualityError("density matrix is not Hermitian");
    if (std::abs(rho.trace().real() - 1.0) > 1e-9 || std::abs(rho.trace().imag()) > 1e-12)
        throw DataQualityError("density matrix trace is not 1");
    for (int n = 0; n <= dm.cutoff; ++n)
        if (rho(n, n).real() < -5e-3)
            throw DataQualityError("density matrix diagonal below -5e-3");
}

DensityMatrix estimate_density_matrix(const HomodyneTrace& trace, int cutoff,
                                      const PatternKernel* kernel) {
    if (cutoff < 0 || cutoff > 40)
        throw std::invalid_argument("cutoff must lie in [0, 40]");
    const FoldedTrace folded = fold_and_weight(trace);
    const std::size_t m = folded.x.size();

    PatternKernel local;
    if (!kernel) {
        local = PatternKernel::build(cutoff);
        kernel = &local;
    } else if (kernel->cutoff() < cutoff) {
        throw std::invalid_argument("supplied kernel cutoff too small");
    } else if (kernel->cutoff() > cutoff) {
        local = PatternKernel::build(cutoff, kernel->x_max(), kernel->step());
        kernel = &local;
    }

    const PairSums sums = accumulate_all(folded, *kernel, cutoff);
    DensityMatrix dm;
    dm.cutoff = cutoff;
    double purity_u = 0.0;
    dm.rho = assemble_rho(sums, cutoff, m, m >= 2 ? &purity_u : nullptr);
    if (m >= 2) {
        dm.diag.has_purity_unbiased = true;
        dm.diag.purity_unbiased = purity_u;
    }

    dm.diag.trailing_diagonal = dm.rho(cutoff, cutoff).real();
    double mind = 0.0;
    for (int n = 0; n <= cutoff; ++n)
        mind = std::min(mind, dm.rho(n, n).real());
    dm.diag.min_diagonal = mind;
    dm.diag.negative_diagonal_flagged = mind < -5e-3;
    dm.diag.low_sample_warning =
        double(m) < 50.0 * (cutoff + 1.0) * (cutoff + 1.0);

    try {
        const BinnedVarianceFit fit = fit_binned_variance(trace);
        SecondMoments sm;
        sm.a = fit.mean_a;
        sm.nbar = (fit.a0 - 1.0 + 2.0 * std::norm(fit.mean_a)) / 2.0;
        sm.a2 = std::complex<double>(fit.b, fit.c) / 2.0 + fit.mean_a * fit.mean_a;
        sm.sigma_vmin = fit.sigma_vmin;
        dm.diag.second_moments = sm;
        dm.diag.has_second_moments = true;
    } catch (const DataQualityError&) {
        // short traces: moments diagnostic simply omitted
    }
    return dm;
}

Eigen::MatrixXd bootstrap_errors(const HomodyneTrace& trace, int cutoff, int resamples,
                                 std::uint64_t seed, const PatternKernel* kernel) {
    if (resamples < 50)
        throw std::invalid_argument("need at least 50 bootstrap resamples");
    if (cutoff < 0 || cutoff > 40)
        throw std::invalid_argument("cutoff must lie in [0, 40]");
    const FoldedTrace folded = fold_and_weight(trace);  // also validates the trace
    const std::size_t m = folded.x.size();

    PatternKernel local;
    if (!kernel || kernel->cutoff() != cutoff) {
        local = PatternKernel::build(cutoff);
        kernel = &local;
    }

    std::vector<Eigen::MatrixXcd> estimates(resamples);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int b; (b = next.fetch_add(1)) < resamples;) {
            FoldedTrace rs;
            rs.theta.resize(m);
            rs.x.resize(m);
            rs.w.resize(m);
            std::vector<int> counts(kCoverageBins, 0);
            std::vector<int> bin(m);
            for (std::size_t j = 0; j < m; ++j) {
                const std::uint64_t idx =
                    uniform_index(seed, std::uint64_t(b) * m + j, m);
                rs.theta[j] = folded.theta[idx];
                rs.x[j] = folded.x[idx];
                bin[j] = std::min(static_cast<int>(rs.theta[j] / kPi * kCoverageBins),
                                  kCoverageBins - 1);
                ++counts[bin[j]];
            }
            const double c = double(m) / kCoverageBins;
            bool ok = true;
            for (std::size_t j = 0; j < m; ++j) {
                if (counts[bin[j]] == 0) {
                    ok = false;
                    break;
                }
                rs.w[j] = c / counts[bin[j]];
            }
            if (!ok) {  // vanishing probability for sane traces; reuse original weights
                rs.w = folded.w;
            }
            PairSums sums;
            accumulate_block(rs, 0, m, *kernel, cutoff, sums);
            estimates[b] = assemble_rho(sums, cutoff, m);
        }
    };
    const int nthreads = std::min(effective_threads(), resamples);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }

    Eigen::MatrixXcd mean = Eigen::MatrixXcd::Zero(cutoff + 1, cutoff + 1);
    for (const auto& e : estimates)
        mean += e;
    mean /= double(resamples);
    Eigen::MatrixXd err = Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1);
    for (const auto& e : estimates)
        err += (e - mean).cwiseAbs2().real();
    return (err / double(resamples - 1)).cwiseSqrt();
}

Eigen::MatrixXcd integral_oracle_estimate(const GaussianState& state, int cutoff,
                                          int n_theta, double x_step,
                                          const PatternKernel* kernel) {
    if (cutoff < 0 || cutoff > 40)
        throw std::invalid_argument("cutoff must lie in [0, 40]");
    if (n_theta < 8 || x_step <= 0.0 || x_step > 0.1)
        throw std::invalid_argument("oracle grid parameters out of range");
    validate_state(state);
    PatternKernel local;
    if (!kernel || kernel->cutoff() != cutoff) {
        local = PatternKernel::build(cutoff);
        kernel = &local;
    }
    const int npairs = kernel->n_pairs();
    std::vector<std::complex<double>> acc(npairs, {0.0, 0.0});
    std::vector<double> fbuf(npairs);
    std::vector<std::complex<double>> pw(cutoff + 1);
    const double inv_sqrt2 = 0.70710678118654752440;
    // theta integral: trapezoid on a periodic integrand (spectrally accurate);
    // x integral: Simpson over +/- 9 sigma in canonical units
    for (int it = 0; it < n_theta; ++it) {
        const double theta = kPi * it / n_theta;
        const auto stats = quadrature_stats(state, theta);
        const double mu = stats.mean * inv_sqrt2;
        const double sigma = std::sqrt(stats.variance / 2.0);
        const int half = static_cast<int>(std::ceil(9.0 * sigma / x_step));
        std::vector<double> fx(npairs, 0.0);
        const double norm = 1.0 / (sigma * std::sqrt(2.0 * kPi));
        for (int j = -half; j <= half; ++j) {
            const double y = mu + j * x_step;
            const double p = norm * std::exp(-0.5 * (j * x_step) * (j * x_step) /
                                             (sigma * sigma));
            kernel->eval_all(y, fbuf.data());
            const double simpson = (std::abs(j) == half) ? 1.0 : ((j + half) % 2 ? 4.0 : 2.0);
            const double wgt = p * simpson * x_step / 3.0;
            for (int i = 0; i < npairs; ++i)
                fx[i] += wgt * fbuf[i];
        }
        const std::complex<double> e{std::cos(theta), std::sin(theta)};
        pw[0] = 1.0;
        for (int d = 1; d <= cutoff; ++d)
            pw[d] = pw[d - 1] * e;
        int pi = 0;
        for (int n = 0; n <= cutoff; ++n)
            for (int mm = n; mm <= cutoff; ++mm, ++pi)
                acc[pi] += fx[pi] * std::conj(pw[mm - n]) / double(n_theta);
    }
    Eigen::MatrixXcd rho(cutoff + 1, cutoff + 1);
    int pi = 0;
    for (int n = 0; n <= cutoff; ++n)
        for (int mm = n; mm <= cutoff; ++mm, ++pi) {
            rho(n, mm) = acc[pi];
            rho(mm, n) = std::conj(acc[pi]);
        }
    return rho;
}

void psd_project(DensityMatrix& dm) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dm.rho);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigendecomposition failed in PSD projection");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    const double tr = ev.sum();
    if (!(tr > 0.0))
        throw NumericalError("PSD projection yielded a zero matrix");
    ev /= tr;
    dm.rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    double mind = 0.0;
    for (int n = 0; n <= dm.cutoff; ++n) {
        dm.rho(n, n) = dm.rho(n, n).real();
        mind = std::min(mind, dm.rho(n, n).real());
    }
    dm.diag.min_diagonal = mind;
    dm.diag.negative_diagonal_flagged = false;
    dm.diag.trailing_diagonal = dm.rho(dm.cutoff, dm.cutoff).real();
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j, int dim, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw std::invalid_argument(std::string("bad matrix field: ") + what);
    Eigen::MatrixXd m(dim, dim);
    for (int r = 0; r < dim; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || static_cast<int>(row.size()) != dim)
            throw std::invalid_argument(std::string("bad matrix row in ") + what);
        for (int c = 0; c < dim; ++c)
            m(r, c) = row[c].get<double>();
    }
    return m;
}

} // namespace

void write_density(const DensityMatrix& dm, const std::string& path) {
    ordered_json j;
    j["cutoff"] = dm.cutoff;
    j["re"] = matrix_to_json(dm.rho.real());
    j["im"] = matrix_to_json(dm.rho.imag());
    ordered_json d;
    d["trailing_diagonal"] = dm.diag.trailing_diagonal;
    d["empty_bins"] = dm.diag.empty_bins;
    d["min_diagonal"] = dm.diag.min_diagonal;
    d["negative_diagonal_flagged"] = dm.diag.negative_diagonal_flagged;
    d["low_sample_warning"] = dm.diag.low_sample_warning;
    if (dm.diag.has_second_moments) {
        const auto& sm = dm.diag.second_moments;
        d["second_moments"] = {{"a_re", sm.a.real()},   {"a_im", sm.a.imag()},
                               {"nbar", sm.nbar},       {"a2_re", sm.a2.real()},
                               {"a2_im", sm.a2.imag()}, {"sigma_vmin", sm.sigma_vmin}};
    }
    if (dm.diag.has_purity_unbiased)
        d["purity_unbiased"] = dm.diag.purity_unbiased;
    if (dm.diag.has_bootstrap)
        d["bootstrap_errors"] = matrix_to_json(dm.diag.bootstrap_errors);
    j["diagnostics"] = std::move(d);
    atomic_write_text(path, j.dump(2) + "\n");
}

DensityMatrix read_density(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open density-matrix file: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path + ": JSON parse error: " + e.what());
    }
    DensityMatrix dm;
    if (!j.contains("cutoff") || !j.contains("re") || !j.contains("im"))
        throw std::invalid_argument(path + ": missing cutoff/re/im fields");
    dm.cutoff = j["cutoff"].get<int>();
    if (dm.cutoff < 0 || dm.cutoff > 40)
        throw std::invalid_argument(path + ": cutoff out of range");
    const int dim = dm.cutoff + 1;
    const Eigen::MatrixXd re = matrix_from_json(j["re"], dim, "re");
    const Eigen::MatrixXd im = matrix_from_json(j["im"], dim, "im");
    dm.rho = re.cast<std::complex<double>>() +
             std::complex<double>(0.0, 1.0) * im.cast<std::complex<double>>();
    if (j.contains("diagnostics")) {
        const auto& d = j["diagnostics"];
        auto& g = dm.diag;
        if (d.contains("trailing_diagonal"))
            g.trailing_diagonal = d["trailing_diagonal"].get<double>();
        if (d.contains("empty_bins"))
            g.empty_bins = d["empty_bins"].get<std::vector<int>>();
        if (d.contains("min_diagonal"))
            g.min_diagonal = d["min_diagonal"].get<double>();
        if (d.contains("negative_diagonal_flagged"))
            g.negative_diagonal_flagged = d["negative_diagonal_flagged"].get<bool>();
        if (d.contains("low_sample_warning"))
            g.low_sample_warning = d["low_sample_warning"].get<bool>();
        if (d.contains("second_moments")) {
            const auto& s = d["second_moments"];
            g.second_moments.a = {s["a_re"].get<double>(), s["a_im"].get<double>()};
            g.second_moments.nbar = s["nbar"].get<double>();
            g.second_moments.a2 = {s["a2_re"].get<double>(), s["a2_im"].get<double>()};
            g.second_moments.sigma_vmin = s["sigma_vmin"].get<double>();
            g.has_second_moments = true;
        }
        if (d.contains("purity_unbiased")) {
            g.purity_unbiased = d["purity_unbiased"].get<double>();
            g.has_purity_unbiased = true;
        }
        if (d.contains("bootstrap_errors")) {
            g.bootstrap_errors = matrix_from_json(d["bootstrap_errors"], dim, "bootstrap_errors");
            g.has_bootstrap = true;
        }
    }
    return dm;
}

} // namespace cvhl
