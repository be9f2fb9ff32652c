#include <algorithm>
#include <cmath>
#include <limits>

#include "qawg/analysis.hpp"

namespace qawg::analysis {
namespace {

using Index = Eigen::Index;

constexpr double kCatTailTolerance = 1e-8;
constexpr double kMaxCatMagnitude = 2.5;

void check_square(const CMatrix& rho) {
    if (rho.rows() == 0 || rho.rows() != rho.cols()) throw PreconditionError("density matrix must be square and non-empty");
}

// Iterative Wigner evaluation: wlist[n] holds the Wigner function of |m><n|
// as the outer loop advances over m.
double wigner_point(const CMatrix& rho, double x, double p, std::vector<cplx>& wlist) {
    const std::size_t dim = static_cast<std::size_t>(rho.rows());
    const cplx a(x / std::sqrt(2.0), p / std::sqrt(2.0));
    wlist.assign(dim, 0.0);
    wlist[0] = std::exp(-2.0 * std::norm(a)) / kPi;
    double w = rho(0, 0).real() * wlist[0].real();
    for (std::size_t n = 1; n < dim; ++n) {
        wlist[n] = 2.0 * a * wlist[n - 1] / std::sqrt(double(n));
        w += 2.0 * (rho(0, Index(n)) * wlist[n]).real();
    }
    for (std::size_t m = 1; m < dim; ++m) {
        cplx temp = wlist[m];
        const double sm = std::sqrt(double(m));
        wlist[m] = (2.0 * std::conj(a) * temp - sm * wlist[m - 1]) / sm;
        w += (rho(Index(m), Index(m)) * wlist[m]).real();
        for (std::size_t n = m + 1; n < dim; ++n) {
            const cplx next = (2.0 * a * wlist[n - 1] - sm * temp) / std::sqrt(double(n));
            temp = wlist[n];
            wlist[n] = next;
            w += 2.0 * (rho(Index(m), Index(n)) * wlist[n]).real();
        }
    }
    return w;
}

double log_factorial(std::size_t n) { return std::lgamma(double(n) + 1.0); }

cplx second_moment(const CMatrix& rho) {
    cplx s = 0.0;
    for (Index j = 2; j < rho.rows(); ++j) s += rho(j, j - 2) * std::sqrt(double(j) * double(j - 1));
    return s;
}

double golden_max(const auto& f, double lo, double hi, double tol) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = f(c), fd = f(d);
    while (hi - lo > tol) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

WignerGrid WignerGrid::covering(std::size_t cutoff, std::size_t resolution) {
    const double reach = std::sqrt(2.0 * double(cutoff)) + 1.0;
    return WignerGrid{reach, reach, resolution};
}

void WignerGrid::validate(std::size_t cutoff) const {
    const double reach = std::sqrt(2.0 * double(cutoff)) + 1.0;
    if (resolution < 3) throw PreconditionError("Wigner grid needs at least 3 samples per axis");
    if (x_max < reach * (1.0 - 1e-12) || p_max < reach * (1.0 - 1e-12))
        throw PreconditionError("Wigner grid must cover +-(sqrt(2 cutoff) + 1) = " + std::to_string(reach));
}

double WignerGrid::x(std::size_t i) const { return -x_max + 2.0 * x_max * double(i) / double(resolution - 1); }
double WignerGrid::p(std::size_t j) const { return -p_max + 2.0 * p_max * double(j) / double(resolution - 1); }

WignerField wigner(const CMatrix& rho, const WignerGrid& grid, Execution exec) {
    check_square(rho);
    grid.validate(static_cast<std::size_t>(rho.rows()) - 1);
    WignerField field{grid, RMatrix(Index(grid.resolution), Index(grid.resolution))};
    const long n = static_cast<long>(grid.resolution);
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
    for (long i = 0; i < n; ++i) {
        std::vector<cplx> work;
        for (long j = 0; j < n; ++j)
            field.values(i, j) = wigner_point(rho, grid.x(std::size_t(i)), grid.p(std::size_t(j)), work);
    }
    return field;
}

double wigner_at(const CMatrix& rho, double x, double p) {
    check_square(rho);
    std::vector<cplx> work;
    return wigner_point(rho, x, p, work);
}

double negativity_at_origin(const CMatrix& rho) {
    check_square(rho);
    double s = 0.0;
    for (Index n = 0; n < rho.rows(); ++n) s += (n % 2 == 0 ? 1.0 : -1.0) * rho(n, n).real();
    return s / kPi;
}

std::vector<double> hermite_functions(std::size_t n_max, double x) {
    std::vector<double> psi(n_max + 1);
    psi[0] = std::pow(kPi, -0.25) * std::exp(-0.5 * x * x);
    if (n_max >= 1) psi[1] = std::sqrt(2.0) * x * psi[0];
    for (std::size_t n = 2; n <= n_max; ++n)
        psi[n] = std::sqrt(2.0 / double(n)) * x * psi[n - 1] - std::sqrt(double(n - 1) / double(n)) * psi[n - 2];
    return psi;
}

std::vector<double> marginal(const CMatrix& rho, double theta, std::span<const double> x) {
    check_square(rho);
    const std::size_t dim = static_cast<std::size_t>(rho.rows());
    std::vector<cplx> phase(dim);
    for (std::size_t n = 0; n < dim; ++n) phase[n] = std::polar(1.0, double(n) * theta);
    std::vector<double> out(x.size());
    CVector v(static_cast<Index>(dim));
    for (std::size_t k = 0; k < x.size(); ++k) {
        const auto psi = hermite_functions(dim - 1, x[k]);
        for (std::size_t n = 0; n < dim; ++n) v(Index(n)) = phase[n] * psi[n];
        out[k] = v.dot(rho * v).real();
    }
    return out;
}

double cat_tail(double magnitude, Parity parity, std::size_t cutoff) {
    if (magnitude < 1e-150) return 0.0;
    const double m2 = magnitude * magnitude;
    const std::size_t first = parity == Parity::odd ? 1 : 0;
    // Normalizer sum over the parity class of m2^n / n!, in logs.
    const double log_norm = parity == Parity::odd ? std::log(std::sinh(m2)) : std::log(std::cosh(m2));
    double tail = 0.0;
    std::size_t n = cutoff + 1;
    if ((n % 2) != first % 2) ++n;
    for (; n < cutoff + 400; n += 2) {
        const double term = std::exp(double(n) * std::log(m2) - log_factorial(n) - log_norm);
        tail += term;
        if (term < 1e-300 || (double(n) > m2 && term < 1e-20 * tail)) break;
    }
    return tail;
}

CVector cat_state(cplx alpha, Parity parity, std::size_t cutoff) {
    const std::size_t first = parity == Parity::odd ? 1 : 0;
    if (cutoff < first) throw TruncationError("cutoff too small for an odd cat");
    const double mag = std::abs(alpha);
    if (cat_tail(mag, parity, cutoff) > kCatTailTolerance)
        throw TruncationError("cat state with |alpha| = " + std::to_string(mag) +
                              " is not covered by the Fock cutoff; increase the cutoff");
    CVector v = CVector::Zero(Index(cutoff + 1));
    if (mag < 1e-150) {
        v(Index(first)) = 1.0;
        return v;
    }
    const double log_mag = std::log(mag);
    const double arg = std::arg(alpha);
    // Scale by |alpha|^-first so small alpha stays representable.
    for (std::size_t n = first; n <= cutoff; n += 2) {
        const double lm = double(n - first) * log_mag - 0.5 * log_factorial(n);
        v(Index(n)) = std::polar(std::exp(lm), double(n) * arg);
    }
    return v / v.norm();
}

double cat_fidelity(const CMatrix& rho, cplx alpha, Parity parity) {
    check_square(rho);
    const CVector c = cat_state(alpha, parity, static_cast<std::size_t>(rho.rows()) - 1);
    return c.dot(rho * c).real();
}

CatFit best_cat(const CMatrix& rho, Parity parity) {
    check_square(rho);
    const std::size_t cutoff = static_cast<std::size_t>(rho.rows()) - 1;
    const cplx a2 = second_moment(rho);
    const double phase = std::abs(a2) > 1e-12 ? 0.5 * std::arg(a2) : 0.0;

    double hi = kMaxCatMagnitude;
    if (cat_tail(hi, parity, cutoff) > kCatTailTolerance) {
        double lo = 0.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (cat_tail(mid, parity, cutoff) > kCatTailTolerance ? hi : lo) = mid;
        }
        // Margin: |polar(m, phase)| can round above m.
        hi = lo * (1.0 - 1e-12);
    }
        auto f = [&](double m) { return cat_fidelity(rho, std::polar(std::min(m, hi), phase), parity); };

    constexpr std::size_t kScan = 250;
    const double step = hi / double(kScan);
    std::size_t best = 0;
    double best_f = -1.0;
    for (std::size_t k = 0; k <= kScan; ++k) {
        const double v = f(step * double(k));
        if (v > best_f) {
            best_f = v;
            best = k;
        }
    }
    CatFit fit{std::min(step * double(best), hi), phase, best_f};
    const double lo = step * double(best == 0 ? 0 : best - 1);
    const double up = std::min(hi, step * double(best + 1));
    const double m = golden_max(f, lo, up, 1e-5);
    const double fm = f(m);
    if (fm > fit.fidelity) {
        fit.magnitude = std::min(m, hi);
        fit.fidelity = fm;
    }
    return fit;
}

double fidelity(const CMatrix& rho, const CMatrix& sigma) {
    check_square(rho);
    if (sigma.rows() != rho.rows() || sigma.cols() != rho.cols()) throw PreconditionError("fidelity needs equal dimensions");
    const CMatrix h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    const RVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const CMatrix s = es.eigenvectors() * root.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    CMatrix m = s * sigma * s;
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> em(m, Eigen::EigenvaluesOnly);
    const double t = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return t * t;
}

double match_squeezing_to_cat(double alpha, double tap, std::size_t cutoff) {
    if (!(alpha > 0.0 && alpha < kMaxCatMagnitude)) throw PreconditionError("target cat magnitude must lie in (0, 2.5)");
    auto mag = [&](double r) { return best_cat(herald::photon_subtract(r, tap, 1, cutoff).rho, Parity::odd).magnitude; };
    double lo = 1e-3, hi = 0.2;
    while (mag(hi) < alpha) {
        lo = hi;
        hi *= 1.5;
        if (hi > 3.0) throw PhysicsError("no squeezing below r = 3 reaches the requested cat size");
    }
    while (hi - lo > 1e-7) {
        const double mid = 0.5 * (lo + hi);
        (mag(mid) < alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double fit_eta_state(const herald::HeraldedState& ideal, const herald::ImperfectionModel& base, double target_w0) {
    auto w0 = [&](double eta) {
        herald::ImperfectionModel m = base;
        m.eta_state = eta;
        return negativity_at_origin(herald::apply_imperfections(ideal, m).rho);
    };
    double lo = 0.0, hi = 1.0;
    const double w_hi = w0(hi), w_lo = w0(lo);
    if (!(target_w0 >= std::min(w_hi, w_lo) && target_w0 <= std::max(w_hi, w_lo)))
        throw PhysicsError("W(0,0) target is outside what eta_state in [0, 1] can reach");
    const bool increasing = w_hi > w_lo;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((w0(mid) < target_w0) == increasing ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace qawg::analysis
