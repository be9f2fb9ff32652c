#pragma once

// Heralded single-mode states: Fock amplitudes of a pure multimode Gaussian
// state, photon-number projection of the ancilla channels, photon subtraction,
// and the imperfection model used to compare against measured data.
//
// Mode 0 of the Gaussian state is always the signal mode; modes 1..M-1 are the
// heralding channels in state order.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qawg/gaussian.hpp"

namespace qawg::herald {

inline constexpr double kDefaultTailTolerance = 1e-4;
inline constexpr std::size_t kMaxFockModes = 3;
inline constexpr std::size_t kMaxCutoff = 30;

struct FockAmplitudes {
    std::size_t cutoff = 0;  // largest photon number kept per mode
    std::size_t modes = 0;
    // Row-major over (n_0, ..., n_{M-1}), each index in [0, cutoff].
    std::vector<cplx> tensor;
    // 1 - sum |c|^2: probability outside the truncated cube.
    double tail = 0.0;
    std::vector<std::string> labels;

    std::size_t flat_index(std::span<const std::size_t> n) const;
    cplx at(std::span<const std::size_t> n) const { return tensor[flat_index(n)]; }
};

// Amplitudes <n_0 ... n_{M-1}|G> by the multidimensional Hermite recurrence.
// Throws TruncationError when the tail exceeds tail_tolerance and
// PreconditionError for mixed states, more than 3 modes, or cutoff > 30.
FockAmplitudes fock_amplitudes(const gaussian::GaussianState& state, std::size_t cutoff,
                               double tail_tolerance = kDefaultTailTolerance);

struct ImperfectionModel {
    double eta_state = 1.0;
    double eta_tap = 0.05;
    double eta_snspd = 0.63;
    double fake_rate_fraction = 0.0;
    double eta_homodyne = 0.93;
    // Transmission of the tapped light from the beam splitter to the detector
    // (filter cascade and fiber coupling). Rate bookkeeping only.
    double eta_tap_chain = 1.0;

    void validate() const;
    double eta_total() const { return eta_state * eta_homodyne; }

    // Lossless, fake-free model with the default tap.
    static ImperfectionModel ideal();
};

struct Provenance {
    std::vector<std::size_t> pattern;
    std::string filter_label;
    std::optional<ImperfectionModel> imperfections;
};

struct HeraldedState {
    CMatrix rho;          // (cutoff+1)^2 density matrix of the signal mode
    double p_success;     // probability of the heralding pattern per window
    CMatrix background;   // unconditioned signal-mode state (fake-herald model)
    Provenance provenance;

    std::size_t cutoff() const { return static_cast<std::size_t>(rho.rows()) - 1; }
};

// Projects modes 1..M-1 onto the photon numbers in pattern.
HeraldedState herald_project(const FockAmplitudes& amps, std::span<const std::size_t> pattern,
                             const std::string& filter_label = {});

// Squeezed vacuum (r > 0 squeezes x) on channel 1, tap beam splitter to
// channel 2, n photons detected on channel 2.
HeraldedState photon_subtract(double r, double tap, std::size_t n, std::size_t cutoff,
                              const std::string& filter_label = {});

// Pure-loss channel on a Fock-basis density matrix.
CMatrix loss_channel(const CMatrix& rho, double eta);

// Loss eta_state * eta_homodyne on the heralded and background states, then
// (1 - q) rho + q background with q the fake fraction.
HeraldedState apply_imperfections(const HeraldedState& hs, const ImperfectionModel& imp);
// Same with eta_state only: the state as it enters the homodyne detector.
HeraldedState apply_source_imperfections(const HeraldedState& hs, const ImperfectionModel& imp);

// p_success x bandwidth x eta_tap_chain x eta_snspd. Order of magnitude only.
double success_rate(const HeraldedState& hs, double bandwidth_hz, const ImperfectionModel& imp);

// Invariant checks shared by producers of density matrices.
double trace_defect(const CMatrix& rho);
double hermiticity_defect(const CMatrix& rho);
double min_eigenvalue(const CMatrix& rho);
// <(-1)^n>
double parity(const CMatrix& rho);

}  // namespace qawg::herald
