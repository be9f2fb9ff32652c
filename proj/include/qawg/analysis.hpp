#pragma once

// Evaluation chain downstream of state generation: phase-space functions,
// cat-state fidelity, Monte-Carlo homodyne records, PCA waveform estimation
// and maximum-likelihood tomography.
//
// Quadrature convention: x = (a + a^dag)/sqrt(2), x_theta = x cos(theta) +
// p sin(theta), vacuum variance 1/2, W_vacuum(0, 0) = 1/pi.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qawg/herald.hpp"
#include "qawg/modes.hpp"

namespace qawg::analysis {

inline constexpr const char* kConventionStamp = "x=(a+adag)/sqrt2; vacuum variance 1/2; W_vac(0,0)=1/pi";

// ---------------------------------------------------------------- phase space

struct WignerGrid {
    double x_max = 0.0;  // x in [-x_max, x_max]
    double p_max = 0.0;
    std::size_t resolution = 0;  // samples per axis

    // Square grid reaching sqrt(2 cutoff) + 1.
    static WignerGrid covering(std::size_t cutoff, std::size_t resolution = 201);
    // Throws PreconditionError when the ranges do not cover the cutoff.
    void validate(std::size_t cutoff) const;
    double x(std::size_t i) const;
    double p(std::size_t j) const;
};

struct WignerField {
    WignerGrid grid;
    RMatrix values;  // values(i, j) = W(x_i, p_j)
};

WignerField wigner(const CMatrix& rho, const WignerGrid& grid, Execution exec = Execution::parallel);
double wigner_at(const CMatrix& rho, double x, double p);
// (1/pi) sum_n (-1)^n rho_nn
double negativity_at_origin(const CMatrix& rho);

// Harmonic-oscillator eigenfunctions psi_0..psi_{n_max}(x).
std::vector<double> hermite_functions(std::size_t n_max, double x);
// P_theta(x) on the given abscissae.
std::vector<double> marginal(const CMatrix& rho, double theta, std::span<const double> x);

enum class Parity { even, odd };

// Normalized |alpha> + |-alpha> (even) or |alpha> - |-alpha> (odd) in Fock
// space up to cutoff. alpha -> 0 gives |0> or |1>. Throws TruncationError when
// the exact state has more than 1e-8 probability above the cutoff.
CVector cat_state(cplx alpha, Parity parity, std::size_t cutoff);
double cat_tail(double magnitude, Parity parity, std::size_t cutoff);
double cat_fidelity(const CMatrix& rho, cplx alpha, Parity parity);

struct CatFit {
    double magnitude = 0.0;
    double phase = 0.0;  // orientation arg(<a^2>)/2
    double fidelity = 0.0;
    cplx alpha() const { return std::polar(magnitude, phase); }
};

// Maximizes the fidelity over |alpha| in [0, 2.5] (clipped to what the cutoff
// supports) at the orientation of <a^2>; tolerance 1e-4 in |alpha|.
CatFit best_cat(const CMatrix& rho, Parity parity);

// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const CMatrix& rho, const CMatrix& sigma);

// Squeezing r for which single-photon subtraction at the given tap yields a
// best odd cat of the requested magnitude.
double match_squeezing_to_cat(double alpha, double tap, std::size_t cutoff);

// eta_state at which the imperfect state reaches W(0,0) = target_w0; the other
// fields of base are kept. Throws PhysicsError when the target is unreachable.
double fit_eta_state(const herald::HeraldedState& ideal, const herald::ImperfectionModel& base, double target_w0);

// ---------------------------------------------------------------- records

enum class RecordKind { heralded, vacuum_reference, pulse_probe };

std::string to_string(RecordKind kind);
RecordKind record_kind_from_string(const std::string& name);

struct HomodyneRecord {
    double theta_lo = 0.0;
    RecordKind kind = RecordKind::heralded;
    std::vector<double> trace;
};

// Events sharing one LO phase and kind. traces(e, j) is sample j of event e;
// Eigen's column-major storage makes data() the columnar file body.
struct RecordBlock {
    modes::TimeGrid grid;
    double theta_lo = 0.0;
    RecordKind kind = RecordKind::heralded;
    std::uint64_t seed = 0;
    RMatrix traces;

    std::size_t events() const { return static_cast<std::size_t>(traces.rows()); }
    HomodyneRecord event(std::size_t e) const;
};

struct RecordOptions {
    std::size_t basis_size = 8;
    std::size_t n_events = 20000;
    std::vector<double> phases;
    std::uint64_t seed = 0;
    // Squeezed-vacuum background on the basis_size - 1 modes orthogonal to f:
    // squeezing r (x squeezed for r > 0) seen through transmission
    // background_eta. Ignored with vacuum_orthogonal.
    double background_r = 0.0;
    double background_eta = 1.0;
    bool vacuum_orthogonal = false;
    // Single-pole detector low-pass in Hz; 0 disables it.
    double detector_bandwidth_hz = 0.0;
};

// Six LO phases k pi / 6.
std::vector<double> six_phases();

// Heralded traces: x_f drawn from the marginal of hs.rho (taken as measured,
// imperfections already applied), orthogonal basis modes from their Gaussian
// marginals, remaining directions vacuum. f must be real, normalized and live
// on the record grid. Deterministic in (seed, phase index, event index).
std::vector<RecordBlock> simulate_records(const herald::HeraldedState& hs, const modes::ModeFunction& f,
                                          const RecordOptions& opt, Execution exec = Execution::parallel);
// Shot-noise traces with per-sample variance 1/2.
std::vector<RecordBlock> simulate_vacuum_reference(const modes::TimeGrid& grid, std::size_t n_events,
                                                   std::span<const double> phases, std::uint64_t seed,
                                                   Execution exec = Execution::parallel);
// Coherent pulse of amplitude |beta| in mode f at uniformly random phase on
// top of shot noise; used to calibrate a waveform without heralding.
RecordBlock simulate_pulse_probe(const modes::ModeFunction& f, double beta, std::size_t n_events, std::uint64_t seed);

struct QuadratureSample {
    double theta = 0.0;
    double x = 0.0;
};

// x_f = sum_j sqrt(dt) f_j x_j for every event of every block.
std::vector<QuadratureSample> project_records(std::span<const RecordBlock> blocks, const modes::ModeFunction& f);

// Binary columnar record file plus JSON sidecar (path + ".json").
void write_records(const std::string& path, std::span<const RecordBlock> blocks);
std::vector<RecordBlock> read_records(const std::string& path);
std::vector<std::uint8_t> encode_records(std::span<const RecordBlock> blocks);
std::vector<RecordBlock> decode_records(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------- PCA

inline constexpr std::size_t kMinPcaRecords = 100;

struct PcaResult {
    std::vector<double> eigenvalues;  // descending, vacuum units
    std::vector<modes::ModeFunction> eigenfunctions;
    // First eigenvalue minus the second, and the spread (standard deviation)
    // of eigenvalues 2..D.
    double gap = 0.0;
    double bulk_spread = 0.0;
    bool mode_identified = false;
};

// Second-moment matrix of the traces without mean subtraction. Eigenvalues
// are divided by the mean per-sample variance of the vacuum references.
// Eigenfunctions are sign-fixed so the first sample above half the peak
// magnitude is positive. A mode counts as identified when the gap exceeds
// 5x the bulk spread.
PcaResult pca_estimate(std::span<const RecordBlock> records, std::span<const RecordBlock> vacuum_refs,
                       Execution exec = Execution::parallel);
// Sign-aligned average of the first eigenfunctions, renormalized.
modes::ModeFunction estimate_waveform(std::span<const PcaResult> per_phase);

// ---------------------------------------------------------------- tomography

inline constexpr std::size_t kMinTomographySamples = 1000;

struct TomographyOptions {
    std::size_t cutoff = 15;
    double eta = 1.0;  // detection efficiency folded into the POVM
    std::size_t max_iterations = 2000;
    double tolerance = 1e-10;  // log-likelihood gain per sample
    std::size_t phase_bins = 180;
    double x_bin = 0.02;
};

struct TomographyResult {
    CMatrix rho;
    std::size_t iterations = 0;
    bool converged = false;
    double log_likelihood = 0.0;  // per sample
    std::vector<std::string> warnings;
};

inline constexpr const char* kPhaseWarning =
    "fewer than 3 distinct LO phases: reconstruction is unidentifiable up to phase-insensitive mixtures";

TomographyResult mle_tomography(std::span<const QuadratureSample> samples, const TomographyOptions& opt,
                                Execution exec = Execution::parallel);

}  // namespace qawg::analysis
