#pragma once

// Scenario configuration and the end-to-end pipeline stages the command-line
// verbs are built from: filter design, heralding with imperfections, record
// simulation and the PCA / tomography evaluation.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qawg/analysis.hpp"
#include "qawg/filters.hpp"
#include "qawg/gaussian.hpp"
#include "qawg/herald.hpp"

namespace qawg::scenario {

inline constexpr const char* kSchema = "qawg-scenario/1";

enum class Waveform { time_bin, balanced_time_bin, custom };

struct SqueezingConfig {
    // Exactly one of r and match_cat_alpha is set.
    std::optional<double> r;
    std::optional<double> match_cat_alpha;
    std::string spectrum = "flat";  // flat | gaussian
    double hwhm_hz = 0.0;           // gaussian spectrum half width (ordinary frequency)
};

struct RunConfig {
    std::size_t n_events = 20000;
    std::vector<double> phases = analysis::six_phases();
    std::uint64_t seed = 1;
    std::size_t cutoff = 15;
    std::size_t basis_size = 8;
    std::size_t wigner_resolution = 121;
};

// Published values and the acceptance bands they are compared against.
struct PublishedReference {
    double w0 = 0.0;
    double w0_sigma = 0.0;
    std::array<double, 2> w0_band{};
    double fidelity = 0.0;
    double fidelity_sigma = 0.0;
    std::array<double, 2> fidelity_band{};
    double cat_alpha = 0.0;
    double filter_mode_match = 0.0;
    double waveform_mode_match = 0.0;
    double mode_match_floor = 0.0;
};

struct ScenarioConfig {
    std::string name;
    Waveform waveform = Waveform::time_bin;
    std::string custom_file;  // resolved against the config directory
    modes::WaveformParams params{2.0 * kPi * 8.2e6, 20e-9};
    double bandpass_hwhm = 2.0 * kPi * 3.6e9;  // rad/s
    SqueezingConfig squeezing;
    double tap = 0.05;
    std::vector<std::size_t> herald_pattern{1};
    herald::ImperfectionModel imperfections;
    RunConfig run;
    std::optional<PublishedReference> published;
    nlohmann::json source;  // parsed document, hashed for metadata

    std::string hash() const;
};

std::string to_string(Waveform w);

// Throws ConfigError (with line and column for malformed JSON, or the
// offending key for schema violations).
ScenarioConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ScenarioConfig load_config(const std::string& path);

// Fine simulation grid (dt = delta_t / 80, 1024 samples from -3.2 delta_t)
// and the coarse homodyne record grid (dt = delta_t / 8, 20 samples from
// -delta_t / 4).
modes::TimeGrid fine_grid(const modes::WaveformParams& p);
modes::TimeGrid record_grid(const modes::WaveformParams& p);

// Target waveform on the fine grid (custom: as read from file).
modes::ModeFunction target_mode(const ScenarioConfig& cfg);
// Real waveform on the record grid (custom: the file's own grid).
modes::ModeFunction record_mode(const ScenarioConfig& cfg);

struct FilterDesign {
    filters::ImpulseResponse response;
    filters::ImpulseResponse completed;  // with the ancilla transfer
    modes::ModeFunction detection;
    modes::ModeFunction target;
    double mode_match = 0.0;
    double analytic_l2_error = 0.0;  // relative to the closed-form response
    double acausal_leakage = 0.0;
    double passivity_defect = 0.0;
    cplx dc_transfer = 0.0;
};

// Cavity + interferometer cascade for the configured waveform. Throws
// PhysicsError for a non-passive cascade and ConfigError for custom waveforms.
FilterDesign design_filter(const ScenarioConfig& cfg);

gaussian::SqueezingSpectrum squeezing_spectrum(const ScenarioConfig& cfg, const modes::TimeGrid& grid, double r);

struct Heralding {
    double r = 0.0;
    herald::ImperfectionModel model;
    herald::HeraldedState ideal;     // lossless heralded state
    herald::HeraldedState source;    // after eta_state and fakes
    herald::HeraldedState measured;  // also through the homodyne efficiency
};

// Photon subtraction with the configured squeezing; ideal ignores the
// imperfection model (default tap kept).
Heralding herald_state(const ScenarioConfig& cfg, bool ideal = false);

analysis::RecordOptions record_options(const ScenarioConfig& cfg, const Heralding& h);

struct Evaluation {
    std::vector<analysis::PcaResult> pca;  // one per LO phase
    modes::ModeFunction waveform;          // sign-aligned PCA average (or theory when no mode is found)
    bool mode_identified = false;
    double mode_match = 0.0;  // waveform vs theory
    analysis::TomographyResult measured;   // eta = 1
    analysis::TomographyResult corrected;  // eta = eta_homodyne
    std::vector<std::string> warnings;
};

// Heralded blocks are grouped by phase; vacuum_reference blocks are pooled.
Evaluation evaluate(std::span<const analysis::RecordBlock> blocks, const modes::ModeFunction& theory, double eta_homodyne,
                    std::size_t cutoff, Execution exec = Execution::parallel);

// Odd cat for odd photon-number patterns, even otherwise.
analysis::Parity cat_parity(const ScenarioConfig& cfg);

}  // namespace qawg::scenario
