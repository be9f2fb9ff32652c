#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <omp.h>

#include "qawg/analysis.hpp"

namespace qawg::analysis {
namespace {

using Index = Eigen::Index;

constexpr double kMaxPovmEntries = 6e7;

struct Bin {
    double theta_sum = 0.0;
    double x_sum = 0.0;
    std::size_t count = 0;
};

// sqrt(binomial(n, k) eta^(n-k) (1-eta)^k)
double loss_amplitude(std::size_t n, std::size_t k, double eta) {
    if (k > n) return 0.0;
    if (eta == 1.0) return k == 0 ? 1.0 : 0.0;
    const double lb = std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) - std::lgamma(double(n - k) + 1);
    return std::exp(0.5 * (lb + double(n - k) * std::log(eta) + double(k) * std::log1p(-eta)));
}

// Quadrature projector at (theta, x) seen through loss eta, dx-weighted.
CMatrix povm(double theta, double x, double dx, double eta, std::size_t cutoff) {
    const std::size_t dim = cutoff + 1;
    const auto psi = hermite_functions(cutoff, x);
    CVector v(static_cast<Index>(dim));
    for (std::size_t n = 0; n < dim; ++n) v(Index(n)) = std::polar(psi[n], double(n) * theta);
    if (eta == 1.0) return dx * v * v.adjoint();
    CMatrix out = CMatrix::Zero(Index(dim), Index(dim));
    CVector w(static_cast<Index>(dim));
    for (std::size_t k = 0; k < dim; ++k) {
        w.setZero();
        for (std::size_t m = k; m < dim; ++m) w(Index(m)) = loss_amplitude(m, k, eta) * v(Index(m - k));
        out += w * w.adjoint();
    }
    return dx * out;
}

// tr(rho P) for Hermitian P.
double expectation(const CMatrix& rho, const CMatrix& p) {
    const cplx* a = rho.data();
    const cplx* b = p.data();
    double s = 0.0;
    for (Index i = 0; i < rho.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    return s;
}

// R = sum_i f_i P_i / p_i and the log-likelihood sum_i f_i log p_i.
double r_operator(const CMatrix& rho, const std::vector<CMatrix>& povms, const std::vector<double>& freq, CMatrix& r,
                  Execution exec) {
    const Index dim = rho.rows();
    r.setZero(dim, dim);
    double ll = 0.0;
    const long n = static_cast<long>(povms.size());
    if (exec == Execution::serial) {
        for (long i = 0; i < n; ++i) {
            const double p = std::max(expectation(rho, povms[std::size_t(i)]), 1e-300);
            r += (freq[std::size_t(i)] / p) * povms[std::size_t(i)];
            ll += freq[std::size_t(i)] * std::log(p);
        }
        return ll;
    }
    // Partials combined in thread order for reproducible bits.
    const std::size_t threads = std::size_t(omp_get_max_threads());
    std::vector<CMatrix> parts(threads, CMatrix::Zero(dim, dim));
    std::vector<double> ll_parts(threads, 0.0);
#pragma omp parallel
    {
        const std::size_t t = std::size_t(omp_get_thread_num());
#pragma omp for schedule(static)
        for (long i = 0; i < n; ++i) {
            const double p = std::max(expectation(rho, povms[std::size_t(i)]), 1e-300);
            parts[t] += (freq[std::size_t(i)] / p) * povms[std::size_t(i)];
            ll_parts[t] += freq[std::size_t(i)] * std::log(p);
        }
    }
    for (std::size_t t = 0; t < threads; ++t) {
        r += parts[t];
        ll += ll_parts[t];
    }
    return ll;
}

}  // namespace

TomographyResult mle_tomography(std::span<const QuadratureSample> samples, const TomographyOptions& opt, Execution exec) {
    if (samples.size() < kMinTomographySamples) throw PreconditionError("tomography needs at least 1000 samples");
    if (!(opt.eta > 0.0 && opt.eta <= 1.0)) throw PreconditionError("tomography efficiency must lie in (0, 1]");
    if (opt.cutoff == 0 || opt.cutoff > herald::kMaxCutoff) throw PreconditionError("tomography cutoff must lie in [1, 30]");
    if (opt.phase_bins == 0 || !(opt.x_bin > 0.0)) throw PreconditionError("tomography bins must be positive");

    const double wtheta = 2.0 * kPi / double(opt.phase_bins);
    std::map<std::pair<long, long>, Bin> bins;
    std::set<long> phases;
    for (const auto& s : samples) {
        if (!std::isfinite(s.theta) || !std::isfinite(s.x)) throw PreconditionError("non-finite quadrature sample");
        const long k = std::lround(s.theta / wtheta);
        const double offset = s.theta - double(k) * wtheta;
        const long kb = ((k % long(opt.phase_bins)) + long(opt.phase_bins)) % long(opt.phase_bins);
        const long xb = std::lround(std::floor(s.x / opt.x_bin));
        Bin& b = bins[{kb, xb}];
        b.theta_sum += double(kb) * wtheta + offset;
        b.x_sum += s.x;
        ++b.count;
        phases.insert(kb);
    }

    TomographyResult out;
    if (phases.size() < 3) out.warnings.emplace_back(kPhaseWarning);
    const std::size_t dim = opt.cutoff + 1;
    if (double(bins.size()) * double(dim * dim) > kMaxPovmEntries)
        throw PreconditionError("too many occupied phase/quadrature bins; use coarser bins");

    std::vector<CMatrix> povms;
    std::vector<double> freq;
    povms.reserve(bins.size());
    for (const auto& [key, b] : bins) {
        const double c = double(b.count);
        povms.push_back(povm(b.theta_sum / c, b.x_sum / c, opt.x_bin, opt.eta, opt.cutoff));
        freq.push_back(c / double(samples.size()));
    }

    CMatrix rho = CMatrix::Identity(Index(dim), Index(dim)) / double(dim);
    CMatrix r;
    double ll = r_operator(rho, povms, freq, r, exec);
    for (out.iterations = 1; out.iterations <= opt.max_iterations; ++out.iterations) {
        CMatrix next = r * rho * r;
        next = 0.5 * (next + next.adjoint()).eval();
        next /= next.trace().real();
        rho = next;
        const double ll_new = r_operator(rho, povms, freq, r, exec);
        const double gain = ll_new - ll;
        ll = ll_new;
        if (std::abs(gain) < opt.tolerance) {
            out.converged = true;
            break;
        }
    }
    out.iterations = std::min(out.iterations, opt.max_iterations);
    out.rho = rho;
    out.log_likelihood = ll;
    return out;
}

}  // namespace qawg::analysis
