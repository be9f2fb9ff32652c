#include "qawg/filters.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qawg::filters {
namespace {

constexpr double kPassivityTol = 1e-9;
constexpr std::size_t kMinSamplesPerDecay = 16;

std::vector<cplx> transfer_on_grid(const modes::TimeGrid& grid, const std::vector<cplx>& g) {
    // sqrt(2 pi) times the mode transform.
    const modes::ModeFunction m(grid, g);
    auto s = m.spectrum();
    const double root = std::sqrt(2.0 * kPi);
    for (auto& v : s) v *= root;
    return s;
}

}  // namespace

void IirStage::validate() const {
    if (!(hwhm > 0.0)) throw PreconditionError("cavity half width must be positive");
    if (!(bandpass_hwhm >= 10.0 * hwhm))
        throw PreconditionError("band-pass half width must be at least 10x the cavity half width");
}

void FirStage::validate() const {
    if (std::any_of(kappas.begin(), kappas.end(), [](double k) { return !(k >= 0.0); }))
        throw PreconditionError("FIR arm amplitudes must be non-negative");
    if (std::all_of(kappas.begin(), kappas.end(), [](double k) { return k == 0.0; }))
        throw PreconditionError("at least one FIR arm must transmit");
    if (!(delay > 0.0)) throw PreconditionError("FIR delay must be positive");
}

FirStage FirStage::time_bin(double gamma, double delay) {
    return FirStage{{1.0, std::exp(-gamma * delay), 0.0}, {0.0, kPi, 0.0}, delay};
}

FirStage FirStage::balanced_time_bin(double gamma, double delay) {
    const double e = std::exp(-gamma * delay);
    return FirStage{{1.0, 1.0 + e, e}, {0.0, kPi, 0.0}, delay};
}

ImpulseResponse::ImpulseResponse(modes::TimeGrid grid, std::vector<cplx> g, std::string label)
    : grid_(grid), g_(std::move(g)), label_(std::move(label)) {
    if (g_.size() != grid_.size()) throw PreconditionError("impulse response length does not match its grid");
    transmit_ = transfer_on_grid(grid_, g_);
}

cplx ImpulseResponse::transfer_at(double omega) const {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < g_.size(); ++i) acc += g_[i] * std::polar(1.0, -omega * grid_.time(i));
    return acc * grid_.dt();
}

double ImpulseResponse::l2_norm() const { return modes::ModeFunction(grid_, g_).norm(); }

modes::ModeFunction ImpulseResponse::as_mode() const { return modes::ModeFunction(grid_, g_, label_); }

ImpulseResponse ImpulseResponse::scaled(double factor) const {
    std::vector<cplx> g(g_);
    for (auto& v : g) v *= factor;
    return ImpulseResponse(grid_, std::move(g), label_);
}

ImpulseResponse iir_response(const IirStage& stage, const modes::TimeGrid& grid) {
    stage.validate();
    const double per_decay = 1.0 / (stage.hwhm * grid.dt());
    if (per_decay < static_cast<double>(kMinSamplesPerDecay)) {
        std::ostringstream os;
        os << "grid under-resolves the cavity decay: " << per_decay << " samples per 1/Gamma, need "
           << kMinSamplesPerDecay;
        throw PreconditionError(os.str());
    }
    const std::size_t z = grid.zero_index();
    std::vector<cplx> g(grid.size(), 0.0);
    for (std::size_t i = z; i < grid.size(); ++i) g[i] = stage.hwhm * std::exp(-stage.hwhm * grid.time(i));
    return ImpulseResponse(grid, std::move(g), "iir");
}

ImpulseResponse iir_response_wideband(const IirStage& stage, double fsr_hz, const modes::TimeGrid& grid) {
    stage.validate();
    if (!(fsr_hz > 0.0)) throw PreconditionError("free spectral range must be positive");
    const double round_trip = 1.0 / fsr_hz;
    if (grid.dt() * 4.0 > round_trip) throw PreconditionError("grid does not resolve the cavity round trip");
    // Mirror product R chosen so that |H(hwhm)|^2 = 1/2 exactly.
    const double c = 4.0 - 2.0 * std::cos(stage.hwhm * round_trip);
    const double r = 0.5 * (c - std::sqrt(c * c - 4.0));
    std::vector<cplx> h(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double w = grid.omega(k);
        const cplx cavity = (1.0 - r) / (1.0 - r * std::polar(1.0, -w * round_trip));
        const cplx bandpass = stage.bandpass_hwhm / cplx(stage.bandpass_hwhm, w);
        h[k] = cavity * bandpass;
    }
    auto g = modes::from_spectrum(grid, h);
    for (auto& v : g) v /= std::sqrt(2.0 * kPi);
    return ImpulseResponse(grid, std::move(g), "iir_wideband");
}

ImpulseResponse fir_response(const FirStage& stage, const modes::TimeGrid& grid) {
    stage.validate();
    const std::size_t z = grid.zero_index();
    const std::size_t k = grid.samples_in(stage.delay);
    if (z + 2 * k >= grid.size()) throw PreconditionError("FIR taps fall outside the time grid");
    std::vector<cplx> g(grid.size(), 0.0);
    for (std::size_t arm = 0; arm < 3; ++arm)
        g[z + arm * k] += std::polar(stage.kappas[arm], stage.thetas[arm]) / grid.dt();
    return ImpulseResponse(grid, std::move(g), "fir");
}

ImpulseResponse compose(const ImpulseResponse& a, const ImpulseResponse& b) {
    const auto& grid = a.grid();
    if (!grid.same_as(b.grid())) throw PreconditionError("cannot compose responses on different grids");
    const auto n = static_cast<std::ptrdiff_t>(grid.size());
    const auto z = static_cast<std::ptrdiff_t>(grid.zero_index());
    // (a*b)(t_i) = sum_k a(t_k) b(t_i - t_k) dt, and t_i - t_k = t_{i - k + z}.
    std::vector<cplx> out(grid.size(), 0.0);
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const cplx ak = a.g()[static_cast<std::size_t>(k)];
        if (ak == cplx(0.0)) continue;
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const std::ptrdiff_t j = i - k + z;
            if (j >= 0 && j < n) out[static_cast<std::size_t>(i)] += ak * b.g()[static_cast<std::size_t>(j)];
        }
    }
    for (auto& v : out) v *= grid.dt();
    return ImpulseResponse(grid, std::move(out), a.label() + "*" + b.label());
}

modes::ModeFunction detection_mode(const ImpulseResponse& ir) {
    const auto& grid = ir.grid();
    const auto& g = ir.g();
    double peak = 0.0;
    for (const auto& v : g) peak = std::max(peak, std::abs(v));
    if (!(peak > 0.0)) throw PreconditionError("impulse response has zero norm");
    std::size_t end = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(g[i]) > 1e-12 * peak) end = i;
    const auto n = static_cast<std::ptrdiff_t>(g.size());
    const auto z = static_cast<std::ptrdiff_t>(grid.zero_index());
    std::vector<cplx> f(g.size(), 0.0);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(end) + z - i;
        if (j >= 0 && j < n) f[static_cast<std::size_t>(i)] = std::conj(g[static_cast<std::size_t>(j)]);
    }
    return modes::ModeFunction(grid, std::move(f), "detection(" + ir.label() + ")").normalized();
}

ImpulseResponse two_port_complete(const ImpulseResponse& ir) {
    ImpulseResponse out = ir;
    out.ancilla_.resize(ir.transmit_.size());
    for (std::size_t k = 0; k < ir.transmit_.size(); ++k) {
        const double t2 = std::norm(ir.transmit_[k]);
        if (std::sqrt(t2) > 1.0 + kPassivityTol) {
            std::ostringstream os;
            os << "non-passive filter: |H| = " << std::sqrt(t2) << " at omega = " << ir.grid().omega(k) << " rad/s";
            throw PhysicsError(os.str());
        }
        out.ancilla_[k] = std::sqrt(std::max(0.0, 1.0 - t2));
    }
    return out;
}

ImpulseResponse rescale_to_passive(const ImpulseResponse& ir) {
    double peak = 0.0;
    for (const auto& h : ir.transmit_spectrum()) peak = std::max(peak, std::abs(h));
    if (peak <= 1.0) return ir;
    return ir.scaled(1.0 / peak);
}

double acausal_leakage(const ImpulseResponse& ir) {
    const std::size_t z = ir.grid().zero_index();
    double worst = 0.0;
    for (std::size_t i = 0; i < z; ++i) worst = std::max(worst, std::abs(ir.g()[i]));
    return worst;
}

double passivity_defect(const ImpulseResponse& ir) {
    if (ir.ancilla_spectrum().size() != ir.transmit_spectrum().size())
        throw PreconditionError("passivity defect needs a completed two-port");
    double worst = 0.0;
    for (std::size_t k = 0; k < ir.transmit_spectrum().size(); ++k) {
        const double s = std::norm(ir.transmit_spectrum()[k]) + std::norm(ir.ancilla_spectrum()[k]);
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

std::vector<cplx> analytic_time_bin_response(double gamma, double delay, const modes::TimeGrid& grid) {
    const std::size_t z = grid.zero_index();
    const std::size_t k = grid.samples_in(delay);
    std::vector<cplx> g(grid.size(), 0.0);
    for (std::size_t j = 0; j < k && z + j < grid.size(); ++j) g[z + j] = gamma * std::exp(-gamma * grid.time(z + j));
    return g;
}

std::vector<cplx> analytic_balanced_time_bin_response(double gamma, double delay, const modes::TimeGrid& grid) {
    const std::size_t z = grid.zero_index();
    const std::size_t k = grid.samples_in(delay);
    std::vector<cplx> g(grid.size(), 0.0);
    for (std::size_t j = 0; j < k && z + k + j < grid.size(); ++j) {
        g[z + j] = gamma * std::exp(-gamma * grid.time(z + j));
        g[z + k + j] = -gamma * std::exp(-gamma * (grid.time(z + k + j) - delay));
    }
    return g;
}

}  // namespace qawg::filters
