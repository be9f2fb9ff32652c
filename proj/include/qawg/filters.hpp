#pragma once

// Photon-detection-path filter synthesis: a cavity low-pass (IIR) stage
// followed by a three-arm delay interferometer (FIR), their convolution, the
// two-port (signal + ancilla) completion, and the heralded detection mode.
//
// transmit_spectrum holds the transfer function H(w) = \int g(t) e^{-iwt} dt,
// i.e. sqrt(2 pi) times the mode-normalized transform, so that a lossless
// all-pass filter has |H| = 1.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qawg/modes.hpp"

namespace qawg::filters {

struct IirStage {
    double hwhm;           // cavity half width, rad/s
    double bandpass_hwhm;  // broad pre-filter half width, rad/s

    void validate() const;
};

struct FirStage {
    std::array<double, 3> kappas;
    std::array<double, 3> thetas;  // rad
    double delay;                  // s; arms are delayed by 0, delay, 2 delay

    void validate() const;

    // g_IIR * g_FIR = truncated exponential on [0, delay).
    static FirStage time_bin(double gamma, double delay);
    // g_IIR * g_FIR = +exp bin on [0, delay), -exp bin (restarted) on [delay, 2 delay).
    static FirStage balanced_time_bin(double gamma, double delay);
};

class ImpulseResponse {
  public:
    ImpulseResponse(modes::TimeGrid grid, std::vector<cplx> g, std::string label);

    const modes::TimeGrid& grid() const { return grid_; }
    const std::vector<cplx>& g() const { return g_; }
    const std::vector<cplx>& transmit_spectrum() const { return transmit_; }
    // Empty until two_port_complete has run.
    const std::vector<cplx>& ancilla_spectrum() const { return ancilla_; }
    const std::string& label() const { return label_; }

    cplx transfer_at(double omega) const;
    double l2_norm() const;
    modes::ModeFunction as_mode() const;
    ImpulseResponse scaled(double factor) const;

  private:
    friend ImpulseResponse two_port_complete(const ImpulseResponse&);

    modes::TimeGrid grid_;
    std::vector<cplx> g_;
    std::vector<cplx> transmit_;
    std::vector<cplx> ancilla_;
    std::string label_;
};

ImpulseResponse iir_response(const IirStage& stage, const modes::TimeGrid& grid);

// Airy cavity with free spectral range fsr_hz followed by a first-order band
// pass; synthesized in the frequency domain. Meant for grids fine enough to
// resolve the cavity side modes (dt well below 1/fsr).
ImpulseResponse iir_response_wideband(const IirStage& stage, double fsr_hz, const modes::TimeGrid& grid);

// Delta taps are single samples of height 1/dt.
ImpulseResponse fir_response(const FirStage& stage, const modes::TimeGrid& grid);

// Time-domain convolution on the shared grid.
ImpulseResponse compose(const ImpulseResponse& a, const ImpulseResponse& b);

// N(g*(T - t)) where T is the end of the causal support of g, so the returned
// waveform starts at t = 0 like the design targets.
modes::ModeFunction detection_mode(const ImpulseResponse& ir);

// Fills the ancilla transfer sqrt(1 - |H|^2) (zero phase).
ImpulseResponse two_port_complete(const ImpulseResponse& ir);

// Divides g by max |H| when the cascade has gain above one.
ImpulseResponse rescale_to_passive(const ImpulseResponse& ir);

// Largest |g(t)| for t < 0.
double acausal_leakage(const ImpulseResponse& ir);
// max_w | |H|^2 + |h|^2 - 1 |; requires a completed two-port.
double passivity_defect(const ImpulseResponse& ir);

// Closed forms for the designed cascades (kappa_1 = 1).
std::vector<cplx> analytic_time_bin_response(double gamma, double delay, const modes::TimeGrid& grid);
std::vector<cplx> analytic_balanced_time_bin_response(double gamma, double delay, const modes::TimeGrid& grid);

}  // namespace qawg::filters
