#include "doctest.h"

#include <cmath>

#include "qawg/filters.hpp"

using namespace qawg;
using namespace qawg::filters;
using modes::TimeGrid;

namespace {

const double kGamma = 2.0 * kPi * 8.2e6;
const double kBin = 20e-9;

IirStage cavity() { return IirStage{kGamma, 2.0 * kPi * 3.6e9}; }

ImpulseResponse spike(const TimeGrid& g, cplx height) {
    return fir_response(FirStage{{std::abs(height), 0.0, 0.0}, {std::arg(height), 0.0, 0.0}, kBin}, g);
}

double l2_distance(const std::vector<cplx>& a, const std::vector<cplx>& b, double dt) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s * dt);
}

double l2(const std::vector<cplx>& a, double dt) { return l2_distance(a, std::vector<cplx>(a.size(), 0.0), dt); }

}  // namespace

TEST_CASE("cavity impulse response") {
    const auto g = TimeGrid::standard();
    const auto ir = iir_response(cavity(), g);
    const std::size_t z = g.zero_index();
    CHECK(ir.g()[z].real() == doctest::Approx(kGamma).epsilon(1e-15));
    CHECK(ir.g()[z - 1] == cplx(0.0));
    CHECK(acausal_leakage(ir) == 0.0);

    // Log-linear interpolation to t = 1/Gamma gives exactly the e-fold.
    const double t = 1.0 / kGamma;
    const auto i = static_cast<std::size_t>(std::floor(t / g.dt())) + z;
    const double frac = (t - g.time(i)) / g.dt();
    const double lg = (1.0 - frac) * std::log(ir.g()[i].real()) + frac * std::log(ir.g()[i + 1].real());
    CHECK(std::abs(ir.g()[z].real() / std::exp(lg) - std::exp(1.0)) < 1e-6);

    // Trapezoid integral (tail beyond the grid is e^-9.9).
    double area = 0.0;
    for (std::size_t k = z; k < g.size(); ++k) area += ir.g()[k].real() * g.dt();
    area -= 0.5 * ir.g()[z].real() * g.dt();
    CHECK(std::abs(area - 1.0) < 1e-3);

    const double half = std::norm(ir.transfer_at(kGamma)) / std::norm(ir.transfer_at(0.0));
    CHECK(std::abs(half - 0.5) < 1e-3);

    CHECK_THROWS_AS(iir_response(IirStage{kGamma, kGamma}, g), PreconditionError);
    CHECK_THROWS_AS(iir_response(IirStage{2e9, 3e10}, g), PreconditionError);
}

TEST_CASE("cavity transfer approaches the Lorentzian") {
    const auto g = TimeGrid::standard();
    const auto ir = iir_response(cavity(), g);
    for (std::size_t k : {400ul, 512ul, 520ul, 600ul}) {
        const double w = g.omega(k);
        const cplx lorentz = kGamma / cplx(kGamma, w);
        CHECK(std::abs(ir.transmit_spectrum()[k] - lorentz) < 1e-2);
    }
}

TEST_CASE("interferometer taps") {
    const auto g = TimeGrid::standard();
    const std::size_t z = g.zero_index();
    const auto one = fir_response(FirStage{{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, kBin}, g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(one.g()[i] == (i == z ? cplx(1.0 / g.dt()) : cplx(0.0)));

    const auto tb = fir_response(FirStage::time_bin(kGamma, kBin), g);
    CHECK(std::abs(tb.g()[z + 80] / tb.g()[z] + std::exp(-kGamma * kBin)) < 1e-14);
    CHECK(tb.g()[z + 160] == cplx(0.0));

    const double e = std::exp(-kGamma * kBin);
    const auto lit = fir_response(FirStage{{1.0, 2.0 * e, e * e}, {0.0, kPi, 0.0}, kBin}, g);
    CHECK(std::abs(lit.g()[z + 80] / lit.g()[z] + 2.0 * e) < 1e-14);
    CHECK(std::abs(lit.g()[z + 160] / lit.g()[z] - e * e) < 1e-14);

    CHECK_THROWS_AS(fir_response(FirStage{{1.0, 1.0, 0.0}, {0.0, 0.0, 0.0}, 20.1e-9}, g), PreconditionError);
    CHECK_THROWS_AS(fir_response(FirStage{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, kBin}, g), PreconditionError);
    CHECK_THROWS_AS(fir_response(FirStage{{1.0, -0.1, 0.0}, {0.0, 0.0, 0.0}, kBin}, g), PreconditionError);
}

TEST_CASE("composition reproduces the designed responses") {
    const auto g = TimeGrid::standard();
    const auto iir = iir_response(cavity(), g);

    const auto same = compose(iir, spike(g, 1.0));
    CHECK(l2_distance(same.g(), iir.g(), g.dt()) < 1e-14 * iir.l2_norm());

    const auto tb = compose(iir, fir_response(FirStage::time_bin(kGamma, kBin), g));
    const auto tb_ref = analytic_time_bin_response(kGamma, kBin, g);
    CHECK(l2_distance(tb.g(), tb_ref, g.dt()) < 1e-6 * l2(tb_ref, g.dt()));
    CHECK(acausal_leakage(tb) < 1e-12);

    const auto btb = compose(iir, fir_response(FirStage::balanced_time_bin(kGamma, kBin), g));
    const auto btb_ref = analytic_balanced_time_bin_response(kGamma, kBin, g);
    CHECK(l2_distance(btb.g(), btb_ref, g.dt()) < 1e-6 * l2(btb_ref, g.dt()));

    SUBCASE("detection modes match the target waveforms") {
        const modes::WaveformParams p{kGamma, kBin};
        CHECK(modes::mode_match(detection_mode(tb), modes::make_time_bin(p, g)) >= 1.0 - 1e-9);
        CHECK(modes::mode_match(detection_mode(btb), modes::make_balanced_time_bin(p, g)) >= 1.0 - 1e-9);
    }
}

TEST_CASE("squared tap ratios leave the second bin unbalanced") {
    // Taps 1 : 2e : e^2 continue the decay into the second bin instead of
    // restarting it, so the two bins carry unequal weight.
    const auto g = TimeGrid::standard();
    const double e = std::exp(-kGamma * kBin);
    const auto ir = compose(iir_response(cavity(), g), fir_response(FirStage{{1.0, 2.0 * e, e * e}, {0.0, kPi, 0.0}, kBin}, g));
    const auto target = modes::make_balanced_time_bin({kGamma, kBin}, g);
    const double m = modes::mode_match(detection_mode(ir), target);
    CHECK(m < 0.9);
    CHECK(m > 0.7);
    const std::size_t z = g.zero_index();
    CHECK(std::abs(ir.g()[z + 80] / ir.g()[z] + e) < 1e-12);
    CHECK(std::abs(ir.g()[z + 200]) < 1e-9 * kGamma);
}

TEST_CASE("convolution algebra") {
    const auto g = TimeGrid::standard();
    const auto a = iir_response(cavity(), g);
    const auto b = fir_response(FirStage::balanced_time_bin(kGamma, kBin), g);
    const auto c = fir_response(FirStage::time_bin(kGamma, 10e-9), g);
    const auto ab = compose(a, b);
    const auto ba = compose(b, a);
    const double scale = l2(compose(ab, c).g(), g.dt());
    CHECK(l2_distance(ab.g(), ba.g(), g.dt()) < 1e-10 * l2(ab.g(), g.dt()));
    CHECK(l2_distance(compose(ab, c).g(), compose(a, compose(b, c)).g(), g.dt()) < 1e-10 * scale);
}

TEST_CASE("detection mode of a chirped response is an involution") {
    const auto g = TimeGrid::standard();
    std::vector<cplx> v(g.size(), 0.0);
    for (std::size_t i = g.zero_index(); i < g.zero_index() + 150; ++i) {
        const double t = g.time(i);
        v[i] = std::exp(-t / 12e-9) * std::polar(1.0, 5e15 * t * t + 1e8 * t);
    }
    const ImpulseResponse ir(g, v, "chirp");
    const auto f = detection_mode(ir);
    CHECK(f[g.zero_index()] != cplx(0.0));
    CHECK(std::abs(f[g.zero_index()] - std::conj(v[g.zero_index() + 149]) / ir.l2_norm()) < 1e-12);
    const auto back = detection_mode(ImpulseResponse(g, std::vector<cplx>(f.values().begin(), f.values().end()), "f"));
    const auto expect = ir.as_mode().normalized();
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(back[i] - expect[i]));
    CHECK(worst < 1e-12 * std::sqrt(1.0 / g.dt()));

    CHECK_THROWS_AS(detection_mode(ImpulseResponse(g, std::vector<cplx>(g.size(), 0.0), "zero")), PreconditionError);
}

TEST_CASE("two-port completion") {
    const auto g = TimeGrid::standard();
    const auto pass = two_port_complete(spike(g, 1.0));
    for (const auto& h : pass.ancilla_spectrum()) CHECK(std::abs(h) < 1e-7);
    CHECK(passivity_defect(pass) < 1e-9);

    const auto half = two_port_complete(spike(g, 1.0 / std::sqrt(2.0)));
    for (const auto& h : half.ancilla_spectrum()) CHECK(std::abs(h - 1.0 / std::sqrt(2.0)) < 1e-12);

    const auto tb = compose(iir_response(cavity(), g), fir_response(FirStage::time_bin(kGamma, kBin), g));
    CHECK(passivity_defect(two_port_complete(tb)) < 1e-9);
    const auto btb = compose(iir_response(cavity(), g), fir_response(FirStage::balanced_time_bin(kGamma, kBin), g));
    CHECK(passivity_defect(two_port_complete(btb)) < 1e-9);
    CHECK(rescale_to_passive(btb).g() == btb.g());
    const auto fixed = rescale_to_passive(compose(iir_response(cavity(), g), spike(g, 1.5)));
    CHECK(passivity_defect(two_port_complete(fixed)) < 1e-9);
    double peak = 0.0;
    for (const auto& h : fixed.transmit_spectrum()) peak = std::max(peak, std::abs(h));
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(two_port_complete(spike(g, 1.5)), PhysicsError);
    CHECK_THROWS_AS(passivity_defect(tb), PreconditionError);
}

TEST_CASE("wide-band cavity keeps its half width") {
    const double fsr = 8.5e9;
    const double dt = 1.0 / (fsr * 8.0);
    const TimeGrid g(-4096 * dt, dt, 32768);
    const auto ir = iir_response_wideband(cavity(), fsr, g);
    const double h0 = std::norm(ir.transfer_at(0.0));
    CHECK(h0 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(std::norm(ir.transfer_at(kGamma)) / h0 - 0.5) < 1e-3);
    // Side mode one free spectral range away transmits again.
    const double wf = 2.0 * kPi * fsr;
    const double bandpass = std::norm(cavity().bandpass_hwhm / cplx(cavity().bandpass_hwhm, wf));
    CHECK(std::norm(ir.transfer_at(wf)) / bandpass > 0.9);
    CHECK_THROWS_AS(iir_response_wideband(cavity(), fsr, TimeGrid::standard()), PreconditionError);
}
