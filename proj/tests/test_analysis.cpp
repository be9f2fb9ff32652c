#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "qawg/analysis.hpp"

using namespace qawg;
using namespace qawg::analysis;
using herald::HeraldedState;
using Index = Eigen::Index;

namespace {

const double kGamma = 2.0 * kPi * 8.2e6;
const double kBin = 20e-9;

CMatrix fock(std::size_t n, std::size_t cutoff) {
    CMatrix rho = CMatrix::Zero(Index(cutoff + 1), Index(cutoff + 1));
    rho(Index(n), Index(n)) = 1.0;
    return rho;
}

HeraldedState as_state(const CMatrix& rho) {
    HeraldedState hs;
    hs.rho = rho;
    hs.background = fock(0, std::size_t(rho.rows()) - 1);
    hs.p_success = 1.0;
    return hs;
}

// Coherent-state amplitudes by direct Poisson weights.
CVector coherent(cplx alpha, std::size_t cutoff) {
    CVector v(Index(cutoff + 1));
    for (std::size_t n = 0; n <= cutoff; ++n)
        v(Index(n)) = std::exp(-0.5 * std::norm(alpha)) * std::pow(alpha, double(n)) / std::sqrt(std::tgamma(n + 1.0));
    return v;
}

CMatrix pure(const CVector& v) { return v * v.adjoint() / v.squaredNorm(); }

CMatrix random_density(std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CMatrix a = CMatrix::Zero(Index(dim), Index(dim));
    for (Index i = 0; i < a.size(); ++i) a.data()[i] = cplx(g(rng), g(rng));
    CMatrix rho = a * a.adjoint();
    return rho / rho.trace().real();
}

double trapezoid(const std::vector<double>& y, double h) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) s += 0.5 * (y[i] + y[i + 1]) * h;
    return s;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = a + (b - a) * double(i) / double(n - 1);
    return x;
}

modes::TimeGrid record_grid() { return modes::TimeGrid(-5e-9, 2.5e-9, 20); }

modes::ModeFunction record_time_bin() {
    return modes::make_time_bin({kGamma, kBin}, modes::TimeGrid::standard()).rebinned(record_grid());
}

void check_density_invariants(const CMatrix& rho) {
    CHECK(herald::trace_defect(rho) < 1e-10);
    CHECK(herald::hermiticity_defect(rho) < 1e-12);
    CHECK(herald::min_eigenvalue(rho) > -1e-9);
}

}  // namespace

TEST_CASE("Wigner function conventions") {
    const auto grid = WignerGrid::covering(10, 101);
    CHECK(wigner_at(fock(0, 10), 0, 0) == doctest::Approx(1.0 / kPi).epsilon(1e-14));
    CHECK(wigner_at(fock(1, 10), 0, 0) == doctest::Approx(-1.0 / kPi).epsilon(1e-14));
    CMatrix mix = CMatrix::Zero(11, 11);
    mix(0, 0) = mix(1, 1) = 0.5;
    CHECK(std::abs(wigner_at(mix, 0, 0)) < 1e-15);

    // Coherent state: displaced Gaussian exp(-(x-x0)^2 - (p-p0)^2)/pi.
    const cplx alpha(0.7, -0.4);
    const CMatrix coh = pure(coherent(alpha, 25));
    const double x0 = std::sqrt(2.0) * alpha.real(), p0 = std::sqrt(2.0) * alpha.imag();
    for (double x : {-1.0, 0.3, 1.2})
        for (double p : {-0.8, 0.0, 0.5})
            CHECK(std::abs(wigner_at(coh, x, p) - std::exp(-(x - x0) * (x - x0) - (p - p0) * (p - p0)) / kPi) < 1e-12);

    const auto field = wigner(pure(cat_state(1.1, Parity::odd, 14)), WignerGrid::covering(14, 121));
    const double h = 2.0 * field.grid.x_max / double(field.grid.resolution - 1);
    CHECK(std::abs(field.values.sum() * h * h - 1.0) < 1e-6);
    CHECK(wigner(fock(0, 10), grid).values(50, 50) == doctest::Approx(1.0 / kPi));

    CHECK_THROWS_AS(wigner(fock(0, 10), WignerGrid{3.0, 3.0, 51}), PreconditionError);
}

TEST_CASE("Wigner origin agrees with the parity formula") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix rho = random_density(3 + std::size_t(trial % 12), rng);
        CHECK(std::abs(wigner_at(rho, 0, 0) - negativity_at_origin(rho)) < 1e-9);
    }
    for (double a : {0.1, 0.94, 1.7}) CHECK(negativity_at_origin(pure(cat_state(a, Parity::odd, 20))) == doctest::Approx(-1.0 / kPi));
}

TEST_CASE("serial and parallel Wigner kernels agree") {
    std::mt19937_64 rng(3);
    const CMatrix rho = random_density(9, rng);
    const auto grid = WignerGrid::covering(8, 61);
    const auto a = wigner(rho, grid, Execution::serial);
    const auto b = wigner(rho, grid, Execution::parallel);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quadrature marginals") {
    const auto x = linspace(-12.0, 12.0, 4801);
    const double h = x[1] - x[0];
    for (double theta : {0.0, 0.4, kPi / 2}) {
        const auto p = marginal(fock(0, 6), theta, x);
        std::vector<double> x2(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) x2[i] = x[i] * x[i] * p[i];
        CHECK(trapezoid(x2, h) == doctest::Approx(0.5).epsilon(1e-10));
    }
    const std::vector<double> origin{0.0};
    CHECK(marginal(fock(1, 6), 0.3, origin)[0] == doctest::Approx(0.0));

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const CMatrix rho = random_density(12, rng);
        for (double theta : {0.0, 1.0, 2.5}) {
            const auto p = marginal(rho, theta, x);
            CHECK(std::abs(trapezoid(p, h) - 1.0) < 1e-8);
            CHECK(*std::min_element(p.begin(), p.end()) > -1e-10);
        }
    }
}

TEST_CASE("Wigner line integrals reproduce the marginals") {
    const CMatrix rho = pure(cat_state(cplx(0.6, 0.8), Parity::odd, 12));
    const auto line = linspace(-9.0, 9.0, 1801);
    const double h = line[1] - line[0];
    for (double x : {-1.3, 0.0, 0.45, 2.0}) {
        std::vector<double> wx(line.size()), wp(line.size());
        for (std::size_t i = 0; i < line.size(); ++i) {
            wx[i] = wigner_at(rho, x, line[i]);
            wp[i] = wigner_at(rho, line[i], x);
        }
        const std::vector<double> at{x};
        CHECK(std::abs(trapezoid(wx, h) - marginal(rho, 0.0, at)[0]) < 1e-4);
        CHECK(std::abs(trapezoid(wp, h) - marginal(rho, kPi / 2, at)[0]) < 1e-4);
    }
}

TEST_CASE("odd cat fringes along p") {
    // |<p|a> - <p|-a>|^2 for real a gives 2 e^{-p^2} sin^2(sqrt2 a p) / (sqrt(pi)(1 - e^{-2a^2})).
    const double a = 1.5;
    const CMatrix rho = pure(cat_state(a, Parity::odd, 30));
    const auto p = linspace(-4.0, 4.0, 161);
    const auto m = marginal(rho, kPi / 2, p);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double s = std::sin(std::sqrt(2.0) * a * p[i]);
        const double ref = 2.0 * std::exp(-p[i] * p[i]) * s * s / (std::sqrt(kPi) * (1.0 - std::exp(-2.0 * a * a)));
        CHECK(std::abs(m[i] - ref) < 1e-10);
    }
    // Fringe zero at p = pi / (sqrt2 a).
    const std::vector<double> zero{kPi / (std::sqrt(2.0) * a)};
    CHECK(marginal(rho, kPi / 2, zero)[0] < 1e-12);
}

TEST_CASE("cat states against a coherent-state oracle") {
    for (cplx alpha : {cplx(0.94, 0.0), cplx(0.0, 0.94), cplx(-1.2, 0.5)}) {
        const CVector odd = coherent(alpha, 25) - coherent(-alpha, 25);
        const CVector even = coherent(alpha, 25) + coherent(-alpha, 25);
        CHECK(std::abs(std::abs(cat_state(alpha, Parity::odd, 25).dot(odd / odd.norm())) - 1.0) < 1e-12);
        CHECK(std::abs(std::abs(cat_state(alpha, Parity::even, 25).dot(even / even.norm())) - 1.0) < 1e-12);
    }
    CHECK(cat_fidelity(pure(cat_state(0.94, Parity::odd, 15)), 0.94, Parity::odd) == doctest::Approx(1.0));
    CHECK(cat_fidelity(fock(1, 15), 1e-4, Parity::odd) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(cat_fidelity(fock(1, 15), 0.0, Parity::odd) == 1.0);
    CHECK(cat_fidelity(fock(0, 15), 0.0, Parity::even) == 1.0);
    CHECK_THROWS_AS(cat_fidelity(fock(1, 5), 2.5, Parity::odd), TruncationError);
    CHECK(cat_tail(2.5, Parity::odd, 5) > 1e-2);
    CHECK(cat_tail(0.94, Parity::odd, 15) < 1e-12);
}

TEST_CASE("best cat search") {
    const cplx alpha = std::polar(0.94, 0.3);
    const auto fit = best_cat(pure(cat_state(alpha, Parity::odd, 15)), Parity::odd);
    CHECK(fit.magnitude == doctest::Approx(0.94).epsilon(1e-4));
    CHECK(fit.phase == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(fit.fidelity == doctest::Approx(1.0).epsilon(1e-9));

    const auto vac = best_cat(fock(0, 15), Parity::odd);
    CHECK(vac.fidelity <= 0.5);

    // Direct dense scan oracle on a lossy state.
    const CMatrix lossy = herald::loss_channel(pure(cat_state(cplx(0.0, 1.2), Parity::odd, 18)), 0.6);
    const auto lf = best_cat(lossy, Parity::odd);
    double scan_best = 0.0;
    for (int k = 0; cat_tail(1e-4 * k, Parity::odd, 18) < 1e-8 && k <= 25000; ++k) scan_best = std::max(scan_best, cat_fidelity(lossy, cplx(0.0, 1e-4 * k), Parity::odd));
    CHECK(lf.fidelity >= scan_best - 1e-9);
    CHECK(std::abs(lf.phase - kPi / 2) < 1e-9);
}

TEST_CASE("photon-subtracted squeezed vacuum approximates an odd cat") {
    const double r = match_squeezing_to_cat(0.94, 0.05, 15);
    CHECK(r == doctest::Approx(0.304).epsilon(2e-3));
    const auto hs = herald::photon_subtract(r, 0.05, 1, 15);
    const auto fit = best_cat(hs.rho, Parity::odd);
    CHECK(fit.magnitude == doctest::Approx(0.94).epsilon(1e-4));
    CHECK(fit.fidelity >= 0.99);
    CHECK(std::abs(fit.phase - kPi / 2) < 1e-9);
    CHECK(std::abs(negativity_at_origin(hs.rho) + 1.0 / kPi) < 1e-3);
    CHECK(cat_fidelity(hs.rho, cplx(0.0, 0.94), Parity::odd) >= 0.99);
}

TEST_CASE("Uhlmann fidelity") {
    std::mt19937_64 rng(5);
    const CMatrix a = random_density(6, rng);
    const CMatrix b = random_density(6, rng);
    CHECK(fidelity(a, a) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fidelity(a, b) == doctest::Approx(fidelity(b, a)).epsilon(1e-8));
    CHECK(fidelity(a, b) <= 1.0 + 1e-12);
    const CVector u = coherent(0.5, 5), v = coherent(cplx(0.1, 0.4), 5);
    CHECK(fidelity(pure(u), pure(v)) == doctest::Approx(std::norm(u.normalized().dot(v.normalized()))).epsilon(1e-9));
    CHECK(fidelity(pure(u), a) == doctest::Approx((u.normalized().adjoint() * a * u.normalized())(0, 0).real()).epsilon(1e-9));
}

TEST_CASE("eta_state fit inverts the loss model") {
    const auto hs = herald::photon_subtract(0.3, 0.05, 1, 12);
    herald::ImperfectionModel m;
    m.eta_state = 0.7;
    m.fake_rate_fraction = 0.02;
    const double w0 = negativity_at_origin(herald::apply_imperfections(hs, m).rho);
    CHECK(fit_eta_state(hs, m, w0) == doctest::Approx(0.7).epsilon(1e-9));
    CHECK_THROWS_AS(fit_eta_state(hs, m, -0.5), PhysicsError);
}

TEST_CASE("simulated records: shot noise and planted photon") {
    const auto f = record_time_bin();
    RecordOptions opt;
    opt.n_events = 20000;
    opt.phases = {0.0};
    opt.seed = 42;
    opt.vacuum_orthogonal = true;
    const auto vac = simulate_records(as_state(fock(0, 8)), f, opt);
    const double n = double(opt.n_events);
    for (Index j = 0; j < vac[0].traces.cols(); ++j) {
        const double var = vac[0].traces.col(j).squaredNorm() / n;
        CHECK(std::abs(var - 0.5) < 3.0 * 0.5 * std::sqrt(2.0 / n));
    }

    const auto one = simulate_records(as_state(fock(1, 8)), f, opt);
    const auto xs = project_records(one, f);
    double s2 = 0.0;
    for (const auto& q : xs) s2 += q.x * q.x;
    CHECK(std::abs(s2 / n - 1.5) < 3.0 * std::sqrt(1.5 / n));

    // Squeezed orthogonal background: basis mode 2 carries the squeezed variance.
    opt.vacuum_orthogonal = false;
    opt.background_r = 0.3;
    opt.background_eta = 0.6;
    opt.phases = {0.0, kPi / 2};
    const auto sq = simulate_records(as_state(fock(0, 8)), f, opt);
    const auto basis = modes::complete_basis(f, opt.basis_size);
    for (std::size_t k = 0; k < 2; ++k) {
        const auto proj = project_records(std::span(sq).subspan(k, 1), basis[3]);
        double v = 0.0;
        for (const auto& q : proj) v += q.x * q.x;
        v /= n;
        const double th = opt.phases[k];
        const double expect = 0.5 * 0.6 * (std::exp(-0.6) * std::pow(std::cos(th), 2) + std::exp(0.6) * std::pow(std::sin(th), 2)) + 0.2;
        CHECK(std::abs(v - expect) < 3.0 * expect * std::sqrt(2.0 / n));
    }
}

TEST_CASE("simulated records are deterministic") {
    const auto f = record_time_bin();
    RecordOptions opt;
    opt.n_events = 3000;
    opt.phases = six_phases();
    opt.seed = 9;
    opt.background_r = 0.3;
    opt.background_eta = 0.6;
    const auto hs = herald::photon_subtract(0.3, 0.05, 1, 10);
    const auto a = simulate_records(hs, f, opt, Execution::serial);
    const auto b = simulate_records(hs, f, opt, Execution::parallel);
    const auto c = simulate_records(hs, f, opt, Execution::parallel);
    CHECK(encode_records(a) == encode_records(b));
    CHECK(encode_records(b) == encode_records(c));
    opt.seed = 10;
    CHECK(encode_records(simulate_records(hs, f, opt)) != encode_records(a));

    CHECK_THROWS_AS(simulate_records(hs, f.scaled(cplx(0.0, 1.0)), opt), PreconditionError);
    opt.basis_size = 4;
    CHECK_THROWS_AS(simulate_records(hs, f, opt), PreconditionError);
}

TEST_CASE("sampled quadratures pass a Kolmogorov-Smirnov test") {
    const auto f = record_time_bin();
    const auto hs = herald::photon_subtract(0.3, 0.05, 1, 12);
    const auto lossy = herald::apply_imperfections(hs, herald::ImperfectionModel{0.68});
    RecordOptions opt;
    opt.n_events = 10000;
    opt.phases = {0.0, kPi / 3, kPi / 2};
    opt.seed = 2024;
    const auto blocks = simulate_records(lossy, f, opt);
    const auto grid = linspace(-10.0, 10.0, 40001);
    const double h = grid[1] - grid[0];
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const auto pdf = marginal(lossy.rho, opt.phases[k], grid);
        std::vector<double> cdf(grid.size(), 0.0);
        for (std::size_t i = 1; i < grid.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * h;
        auto xs = project_records(std::span(blocks).subspan(k, 1), f);
        std::vector<double> x;
        for (const auto& q : xs) x.push_back(q.x);
        std::sort(x.begin(), x.end());
        double d = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double pos = (x[i] - grid.front()) / h;
            const auto j = std::min<std::size_t>(std::size_t(pos), grid.size() - 2);
            const double c = cdf[j] + (pos - double(j)) * (cdf[j + 1] - cdf[j]);
            d = std::max({d, std::abs(c - double(i) / double(x.size())), std::abs(c - double(i + 1) / double(x.size()))});
        }
        // Critical value at significance 1e-3: sqrt(ln(2/1e-3)/2)/sqrt(n).
        CHECK(d < std::sqrt(std::log(2.0 / 1e-3) / 2.0) / std::sqrt(double(x.size())));
    }
}

TEST_CASE("record file round trip and corruption") {
    const auto f = record_time_bin();
    RecordOptions opt;
    opt.n_events = 200;
    opt.phases = {0.0, 1.0};
    opt.seed = 1;
    auto blocks = simulate_records(as_state(fock(1, 6)), f, opt);
    const auto vac = simulate_vacuum_reference(f.grid(), 50, std::vector<double>{0.0}, 3);
    blocks.insert(blocks.end(), vac.begin(), vac.end());
    const auto bytes = encode_records(blocks);
    const auto back = decode_records(bytes);
    REQUIRE(back.size() == 3);
    CHECK(back[2].kind == RecordKind::vacuum_reference);
    CHECK(back[1].theta_lo == 1.0);
    CHECK(back[0].traces == blocks[0].traces);
    CHECK(encode_records(back) == bytes);
    CHECK(back[0].event(3).trace.size() == 20);

    auto cut = bytes;
    cut.resize(cut.size() - 5);
    try {
        decode_records(cut);
        FAIL("truncated file accepted");
    } catch (const DataError& e) {
        CHECK(e.offset() > 16);
    }
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_records(bad), DataError);
    auto nan = bytes;
    const double q = std::nan("");
    const std::size_t at = 16 + 56 + 8 * 7;
    std::memcpy(nan.data() + at, &q, 8);
    try {
        decode_records(nan);
        FAIL("non-finite sample accepted");
    } catch (const DataError& e) {
        CHECK(e.offset() == at);
    }
}

TEST_CASE("PCA of vacuum and planted-photon records") {
    const auto f = record_time_bin();
    const auto grid = f.grid();
    const auto refs = simulate_vacuum_reference(grid, 20000, std::vector<double>{0.0}, 100);
    const auto vac = simulate_vacuum_reference(grid, 20000, std::vector<double>{0.0}, 200);
    const auto pv = pca_estimate(vac, refs);
    for (double l : pv.eigenvalues) {
        CHECK(l > 0.9);
        CHECK(l < 1.1);
    }
    CHECK_FALSE(pv.mode_identified);
    CHECK(std::is_sorted(pv.eigenvalues.rbegin(), pv.eigenvalues.rend()));

    RecordOptions opt;
    opt.n_events = 2000;
    opt.phases = {0.0};
    opt.seed = 5;
    opt.vacuum_orthogonal = true;
    const auto one = simulate_records(as_state(fock(1, 6)), f, opt);
    const auto p1 = pca_estimate(one, refs);
    CHECK(p1.eigenvalues[0] == doctest::Approx(3.0).epsilon(0.1));
    CHECK(modes::mode_match(p1.eigenfunctions[0], f) >= 0.99);
    CHECK(p1.mode_identified);
    CHECK(p1.gap > 5.0 * p1.bulk_spread);
    for (std::size_t i = 0; i < p1.eigenfunctions.size(); ++i)
        for (std::size_t j = 0; j < p1.eigenfunctions.size(); ++j)
            CHECK(std::abs(modes::inner_product(p1.eigenfunctions[i], p1.eigenfunctions[j]) - (i == j ? 1.0 : 0.0)) < 1e-8);
    // Positive leading lobe.
    CHECK(p1.eigenfunctions[0][4].real() > 0.0);

    const auto serial = pca_estimate(one, refs, Execution::serial);
    for (std::size_t i = 0; i < serial.eigenvalues.size(); ++i)
        CHECK(std::abs(serial.eigenvalues[i] - p1.eigenvalues[i]) < 1e-12);

    opt.n_events = 99;
    CHECK_THROWS_AS(pca_estimate(simulate_records(as_state(fock(1, 6)), f, opt), refs), PreconditionError);
}

TEST_CASE("waveform estimate aligns signs") {
    const auto f = record_time_bin();
    RecordOptions opt;
    opt.n_events = 1000;
    opt.phases = six_phases();
    opt.seed = 77;
    opt.vacuum_orthogonal = true;
    const auto refs = simulate_vacuum_reference(f.grid(), 5000, std::vector<double>{0.0}, 1);
    const auto blocks = simulate_records(as_state(fock(1, 6)), f, opt);
    std::vector<PcaResult> per;
    double best_single = 0.0;
    std::mt19937_64 rng(4);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        auto r = pca_estimate(std::span(blocks).subspan(k, 1), refs);
        best_single = std::max(best_single, modes::mode_match(r.eigenfunctions[0], f));
        if (rng() % 2) r.eigenfunctions[0] = r.eigenfunctions[0].scaled(-1.0);
        per.push_back(std::move(r));
    }
    const auto est = estimate_waveform(per);
    CHECK(modes::mode_match(est, f) >= best_single);
    CHECK(est.norm() == doctest::Approx(1.0));

    std::vector<PcaResult> same{per[0], per[0]};
    CHECK(modes::mode_match(estimate_waveform(same), per[0].eigenfunctions[0]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(estimate_waveform(std::span(per).subspan(0, 1)), PreconditionError);
}

TEST_CASE("maximum-likelihood tomography") {
    // Stratified vacuum samples: exact quantiles of N(0, 1/2) at each phase,
    // so the reconstruction is tested without shot noise in the variance.
    std::vector<QuadratureSample> vac;
    const int per_phase = 10000 / 6 + 1;
    for (int ph = 0; ph < 6; ++ph)
        for (int i = 0; i < per_phase; ++i) {
            const double u = (i + 0.5) / per_phase;
            double lo = -10.0, hi = 10.0;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                (0.5 * std::erfc(-mid) < u ? lo : hi) = mid;
            }
            vac.push_back({ph * kPi / 6.0, 0.5 * (lo + hi)});
        }
    TomographyOptions opt;
    opt.cutoff = 8;
    const auto res = mle_tomography(vac, opt);
    CHECK(res.converged);
    CHECK(fidelity(res.rho, fock(0, 8)) >= 0.999);

    // Random samples: the sample variance alone fluctuates by 0.5 sqrt(2/n)
    // = 0.007, which the reconstruction reads as photon number.
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    std::vector<QuadratureSample> noisy;
    for (int i = 0; i < 10000; ++i) noisy.push_back({double(i % 6) * kPi / 6.0, g(rng)});
    CHECK(fidelity(mle_tomography(noisy, opt).rho, fock(0, 8)) >= 1.0 - 3.0 * 0.5 * std::sqrt(2.0 / 10000));
    CHECK(res.warnings.empty());
    check_density_invariants(res.rho);

    const auto serial = mle_tomography(vac, opt, Execution::serial);
    CHECK((serial.rho - res.rho).cwiseAbs().maxCoeff() < 1e-9);

    std::vector<QuadratureSample> single(vac.begin(), vac.end());
    for (auto& s : single) s.theta = 0.2;
    const auto warned = mle_tomography(single, opt);
    REQUIRE(warned.warnings.size() == 1);
    CHECK(warned.warnings[0] == kPhaseWarning);
    check_density_invariants(warned.rho);

    CHECK_THROWS_AS(mle_tomography(std::span(vac).subspan(0, 999), opt), PreconditionError);
    opt.eta = 0.0;
    CHECK_THROWS_AS(mle_tomography(vac, opt), PreconditionError);
}

TEST_CASE("loss-corrected tomography deepens the negativity") {
    const auto f = record_time_bin();
    const CMatrix lossy = herald::loss_channel(fock(1, 6), 0.8);
    RecordOptions ro;
    ro.n_events = 4000;
    ro.phases = six_phases();
    ro.seed = 31;
    ro.vacuum_orthogonal = true;
    const auto xs = project_records(simulate_records(as_state(lossy), f, ro), f);
    TomographyOptions opt;
    opt.cutoff = 6;
    const auto measured = mle_tomography(xs, opt);
    opt.eta = 0.8;
    const auto corrected = mle_tomography(xs, opt);
    check_density_invariants(measured.rho);
    check_density_invariants(corrected.rho);
    CHECK(fidelity(measured.rho, lossy) >= 0.98);
    CHECK(negativity_at_origin(corrected.rho) < negativity_at_origin(measured.rho));
    CHECK(fidelity(corrected.rho, fock(1, 6)) > fidelity(measured.rho, fock(1, 6)));
}
