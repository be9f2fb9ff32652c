#include "doctest.h"

#include <cmath>
#include <random>

#include "qawg/modes.hpp"

using namespace qawg;
using namespace qawg::modes;

namespace {

const WaveformParams kExperiment{2.0 * kPi * 8.2e6, 20e-9};

// Brute-force midpoint quadrature of the continuous waveforms, independent of
// the grid code: f_TB ~ exp(G t) on [0, T), f_BTB the balanced pair.
double continuous_overlap_tb_btb(double gamma, double bin) {
    const int n = 200000;
    const double h = bin / n;
    double norm_tb = 0.0, cross = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) * h;
        const double e = std::exp(gamma * t);
        norm_tb += e * e * h;
        cross += e * e * h;  // second bin of f_BTB does not overlap f_TB
    }
    const double norm_btb = 2.0 * norm_tb;
    return cross / std::sqrt(norm_tb * norm_btb);
}

ModeFunction chirped(const TimeGrid& grid) {
    std::vector<cplx> v(grid.size(), 0.0);
    for (std::size_t i = grid.zero_index(); i < grid.zero_index() + 120; ++i) {
        const double t = grid.time(i);
        v[i] = std::exp(-t / 15e-9) * std::polar(1.0, 3e15 * t * t);
    }
    return ModeFunction(grid, v, "chirp").normalized();
}

}  // namespace

TEST_CASE("time grid geometry") {
    const auto g = TimeGrid::standard();
    CHECK(g.size() == 1024);
    CHECK(g.zero_index() == 256);
    CHECK(g.domega() == doctest::Approx(2.0 * kPi / (1024 * 0.25e-9)));
    CHECK(g.omega(512) == 0.0);
    CHECK(g.samples_in(20e-9) == 80);
    CHECK_THROWS_AS(g.samples_in(20.1e-9), PreconditionError);
    CHECK_THROWS_AS(TimeGrid(0.0, 0.0, 10), PreconditionError);
    CHECK_THROWS_AS(TimeGrid(0.0, 1.0, 1), PreconditionError);
    CHECK_THROWS_AS(TimeGrid(0.1e-9, 0.25e-9, 10).zero_index(), PreconditionError);
}

TEST_CASE("time bin waveform") {
    const auto g = TimeGrid::standard();
    const auto f = make_time_bin(kExperiment, g);
    CHECK(std::abs(f.norm() - 1.0) < 1e-10);
    const std::size_t z = g.zero_index();
    CHECK(f[z - 1] == cplx(0.0));
    CHECK(f[z + 79] != cplx(0.0));
    CHECK(f[z + 80] == cplx(0.0));
    // Rising exponential inside the bin.
    CHECK(f[z + 40].real() / f[z].real() == doctest::Approx(std::exp(kExperiment.gamma * 10e-9)).epsilon(1e-12));
    CHECK(f.is_real());

    SUBCASE("flat-top limit") {
        const WaveformParams flat{1e-6 / 20e-9, 20e-9};
        const auto h = make_time_bin(flat, g);
        for (std::size_t i = z; i < z + 80; ++i) CHECK(std::abs(h[i].real() * std::sqrt(20e-9) - 1.0) < 1e-4);
    }
    SUBCASE("coarse grids are rejected") {
        CHECK_THROWS_AS(make_time_bin(kExperiment, TimeGrid(-64e-9, 2e-9, 128)), PreconditionError);
        CHECK_THROWS_AS(make_time_bin(kExperiment, TimeGrid(-10e-9, 0.25e-9, 1024)), PreconditionError);
        CHECK_THROWS_AS(make_time_bin(WaveformParams{-1.0, 20e-9}, g), PreconditionError);
    }
}

TEST_CASE("balanced time bin waveform") {
    const auto g = TimeGrid::standard();
    const auto b = make_balanced_time_bin(kExperiment, g);
    CHECK(std::abs(b.norm() - 1.0) < 1e-10);
    cplx sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) sum += b[i] * g.dt();
    CHECK(std::abs(sum) < 1e-12);
    const std::size_t z = g.zero_index();
    for (std::size_t j = 0; j < 80; ++j) CHECK(b[z + 80 + j] == -b[z + j]);
    CHECK(b[z + 160] == cplx(0.0));
    CHECK_THROWS_AS(make_balanced_time_bin(kExperiment, TimeGrid(-64e-9, 0.25e-9, 480)), PreconditionError);

    SUBCASE("zero mean for other parameters") {
        for (double gamma : {1e6, 3e7, 2e8})
            for (double bin : {5e-9, 12.5e-9, 30e-9}) {
                const auto bb = make_balanced_time_bin({gamma, bin}, g);
                cplx s = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) s += bb[i] * g.dt();
                CHECK(std::abs(s) < 1e-12);
            }
    }
}

TEST_CASE("inner products and mode match") {
    const auto g = TimeGrid::standard();
    const auto f = make_time_bin(kExperiment, g);
    const auto b = make_balanced_time_bin(kExperiment, g);
    const double oracle = continuous_overlap_tb_btb(kExperiment.gamma, kExperiment.delta_t);
    CHECK(std::abs(oracle - 1.0 / std::sqrt(2.0)) < 1e-9);
    CHECK(std::abs(inner_product(f, b) - cplx(oracle)) < 1e-6);
    CHECK(std::abs(mode_match(f, b) - 0.5) < 1e-6);
    CHECK(std::abs(inner_product(f, f) - 1.0) < 1e-12);
    CHECK(std::abs(inner_product(f, shifted(f, 160))) == 0.0);

    const auto c = chirped(g);
    CHECK(std::abs(inner_product(c, f) - std::conj(inner_product(f, c))) < 1e-15);
    CHECK(std::abs(mode_match(c, f) - mode_match(f, c)) < 1e-15);
    CHECK(std::abs(mode_match(c, c.scaled(std::polar(1.0, 1.234))) - 1.0) < 1e-12);
    CHECK(std::abs(mode_match(f.scaled(std::polar(1.0, -2.0)), c) - mode_match(f, c)) < 1e-12);

    CHECK_THROWS_AS(inner_product(f, make_time_bin(kExperiment, TimeGrid(-64e-9, 0.125e-9, 2048))),
                    PreconditionError);
}

TEST_CASE("spectrum is norm preserving and invertible") {
    const auto g = TimeGrid::standard();
    for (const auto& f : {make_time_bin(kExperiment, g), make_balanced_time_bin(kExperiment, g), chirped(g)}) {
        const auto s = f.spectrum();
        double e = 0.0;
        for (const auto& v : s) e += std::norm(v) * g.domega();
        CHECK(std::abs(e - 1.0) < 1e-10);
        const auto back = from_spectrum(g, s);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(back[i] - f[i]) < 1e-9 * std::abs(f[g.zero_index()]));
        // Direct evaluation agrees with the FFT path on grid frequencies.
        for (std::size_t k : {0ul, 300ul, 512ul, 700ul})
            CHECK(std::abs(f.spectrum_at(g.omega(k)) - s[k]) < 1e-12 * std::sqrt(1.0 / g.domega()));
    }
}

TEST_CASE("spectrum of a time-bin matches its closed form") {
    // Discrete transform of the sampled exponential, summed geometrically.
    const auto g = TimeGrid::standard();
    const auto f = make_time_bin(kExperiment, g);
    const double dt = g.dt();
    const double amp = f[g.zero_index()].real();
    for (std::size_t k : {100ul, 512ul, 530ul}) {
        const double w = g.omega(k);
        const cplx q = std::exp(cplx(kExperiment.gamma * dt, -w * dt));
        const cplx sum = (1.0 - std::pow(q, 80)) / (1.0 - q);
        const cplx expected = amp * dt / std::sqrt(2.0 * kPi) * sum;
        CHECK(std::abs(f.spectrum()[k] - expected) < 1e-10 * std::abs(expected) + 1e-18);
    }
}

TEST_CASE("basis completion") {
    const auto g = TimeGrid::standard();
    const auto f = make_time_bin(kExperiment, g);
    const auto one = complete_basis(f, 1);
    REQUIRE(one.size() == 1);
    CHECK(std::abs(inner_product(one[0], f) - 1.0) < 1e-12);

    for (const auto& seed : {f, chirped(g), make_balanced_time_bin(kExperiment, g)}) {
        const auto basis = complete_basis(seed, 8);
        REQUIRE(basis.size() == 8);
        CHECK(mode_match(basis[0], seed) > 1.0 - 1e-12);
        double worst = 0.0;
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j)
                worst = std::max(worst, std::abs(inner_product(basis[i], basis[j]) - (i == j ? 1.0 : 0.0)));
        CHECK(worst < 1e-8);
    }
    CHECK_THROWS_AS(complete_basis(f, 1025), PreconditionError);
}

TEST_CASE("complete basis resolves the identity") {
    const TimeGrid g(-20e-9, 0.5e-9, 128);
    const auto f = make_time_bin(kExperiment, g);
    const auto basis = complete_basis(f, g.size());
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    std::vector<cplx> v(g.size());
    for (auto& x : v) x = cplx(n01(rng), n01(rng));
    const ModeFunction test(g, v);
    std::vector<cplx> rebuilt(g.size(), 0.0);
    for (const auto& e : basis) {
        const cplx c = inner_product(e, test);
        for (std::size_t i = 0; i < g.size(); ++i) rebuilt[i] += c * e[i];
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(rebuilt[i] - v[i]));
    CHECK(worst < 1e-8);
}

TEST_CASE("time shift and rebinning") {
    const auto g = TimeGrid::standard();
    const auto f = make_time_bin(kExperiment, g);
    const auto s = shifted(f, 10);
    CHECK(s[g.zero_index() + 10] == f[g.zero_index()]);
    CHECK(shifted(s, -10)[g.zero_index()] == f[g.zero_index()]);

    const TimeGrid coarse(-5e-9, 2.5e-9, 20);
    const auto r = f.rebinned(coarse);
    CHECK(std::abs(r.norm() - 1.0) < 1e-12);
    CHECK(r[1] == cplx(0.0));
    CHECK(r[2].real() > 0.0);
    CHECK(r[10] == cplx(0.0));
    // Box averages of a rising exponential increase across the bin.
    for (std::size_t i = 2; i < 9; ++i) CHECK(r[i + 1].real() > r[i].real());
    CHECK_THROWS_AS(f.rebinned(TimeGrid(-5e-9, 0.3e-9, 20)), PreconditionError);
}
