#include "qawg/scenario.hpp"

#include <filesystem>
#include <set>

#include "qawg/io.hpp"

namespace qawg::scenario {
namespace {

using nlohmann::json;

// Object reader that records which keys were consumed so leftovers can be
// reported as unknown.
class Fields {
  public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError("'" + where_ + "' must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError("missing key '" + path(key) + "'");
        used_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError("'" + path(key) + "' must be a number");
        return v.get<double>();
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    std::size_t count(const std::string& key, std::size_t fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_unsigned()) throw ConfigError("'" + path(key) + "' must be a non-negative integer");
        return v.get<std::size_t>();
    }

    std::string text(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError("'" + path(key) + "' must be a string");
        return v.get<std::string>();
    }
    std::string text(const std::string& key, const std::string& fallback) { return has(key) ? text(key) : fallback; }

    Fields object(const std::string& key) { return Fields(raw(key), path(key)); }

    std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError("unknown key '" + path(it.key()) + "'");
    }

  private:
    const json& j_;
    std::string where_;
    std::set<std::string> used_;
};

void require_range(double v, double lo, double hi, const std::string& name) {
    if (!(v >= lo && v <= hi))
        throw ConfigError("'" + name + "' = " + io::format_double(v) + " is outside [" + io::format_double(lo) + ", " +
                          io::format_double(hi) + "]");
}

std::array<double, 2> band(Fields& f, const std::string& key) {
    const json& v = f.raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number() || v[0].get<double>() > v[1].get<double>())
        throw ConfigError("'" + f.path(key) + "' must be [low, high]");
    return {v[0].get<double>(), v[1].get<double>()};
}

std::string position(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::string to_string(Waveform w) {
    switch (w) {
        case Waveform::time_bin: return "time_bin";
        case Waveform::balanced_time_bin: return "balanced_time_bin";
        case Waveform::custom: return "custom";
    }
    return "unknown";
}

std::string ScenarioConfig::hash() const { return io::fnv1a_hex(source.dump()); }

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        // e.byte is one past the offending character.
        throw ConfigError("malformed JSON at " + position(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
    }
    ScenarioConfig cfg;
    cfg.source = doc;
    Fields top(doc, "");
    const std::string schema = top.text("schema");
    if (schema != kSchema) throw ConfigError("unsupported schema '" + schema + "' (expected " + kSchema + ")");
    cfg.name = top.text("name");
    if (top.has("notes")) {
        const json& notes = top.raw("notes");
        if (!notes.is_object()) throw ConfigError("'notes' must be an object of strings");
        for (const auto& [k, v] : notes.items())
            if (!v.is_string()) throw ConfigError("'notes." + k + "' must be a string");
    }

    const std::string wf = top.text("waveform");
    if (wf == "time_bin") {
        cfg.waveform = Waveform::time_bin;
    } else if (wf == "balanced_time_bin") {
        cfg.waveform = Waveform::balanced_time_bin;
    } else if (wf == "custom") {
        cfg.waveform = Waveform::custom;
        const std::string file = top.text("custom_file");
        const std::filesystem::path p(file);
        cfg.custom_file = p.is_absolute() ? file : (std::filesystem::path(base_dir) / p).string();
        if (!std::filesystem::exists(cfg.custom_file)) throw ConfigError("custom waveform file not found: " + cfg.custom_file);
    } else {
        throw ConfigError("'waveform' must be time_bin, balanced_time_bin or custom (got '" + wf + "')");
    }
    if (cfg.waveform != Waveform::custom && top.has("custom_file"))
        throw ConfigError("'custom_file' is only valid with waveform 'custom'");

    {
        Fields p = top.object("params");
        const double gamma_hz = p.number("gamma_over_2pi_hz");
        const double dt = p.number("delta_t_s");
        const double bp = p.number("bandpass_hwhm_over_2pi_hz", 3.6e9);
        require_range(gamma_hz, 1e3, 1e12, "params.gamma_over_2pi_hz");
        require_range(dt, 1e-12, 1e-3, "params.delta_t_s");
        cfg.params = {2.0 * kPi * gamma_hz, dt};
        cfg.bandpass_hwhm = 2.0 * kPi * bp;
        if (!(bp >= 10.0 * gamma_hz)) throw ConfigError("'params.bandpass_hwhm_over_2pi_hz' must be at least 10x the cavity half width");
        p.finish();
    }
    {
        Fields s = top.object("squeezing");
        if (s.has("r") == s.has("match_cat_alpha"))
            throw ConfigError("'squeezing' needs exactly one of 'r' and 'match_cat_alpha'");
        if (s.has("r")) {
            cfg.squeezing.r = s.number("r");
            require_range(*cfg.squeezing.r, 0.0, 2.0, "squeezing.r");
        } else {
            cfg.squeezing.match_cat_alpha = s.number("match_cat_alpha");
            require_range(*cfg.squeezing.match_cat_alpha, 0.05, 2.4, "squeezing.match_cat_alpha");
        }
        cfg.squeezing.spectrum = s.text("spectrum", "flat");
        if (cfg.squeezing.spectrum == "gaussian") {
            cfg.squeezing.hwhm_hz = s.number("hwhm_hz");
            require_range(cfg.squeezing.hwhm_hz, 1e3, 1e15, "squeezing.hwhm_hz");
        } else if (cfg.squeezing.spectrum != "flat") {
            throw ConfigError("'squeezing.spectrum' must be flat or gaussian");
        }
        s.finish();
    }
    cfg.tap = top.number("tap");
    require_range(cfg.tap, 1e-6, 0.5, "tap");
    {
        const json& pat = top.raw("herald_pattern");
        if (!pat.is_array() || pat.size() != 1 || !pat[0].is_number_unsigned())
            throw ConfigError("'herald_pattern' must list one photon count (single heralding channel)");
        cfg.herald_pattern = {pat[0].get<std::size_t>()};
        if (cfg.herald_pattern[0] > 5) throw ConfigError("'herald_pattern' photon count above 5 is not supported");
    }
    {
        Fields m = top.object("imperfections");
        auto& imp = cfg.imperfections;
        imp.eta_state = m.number("eta_state", 1.0);
        imp.fake_rate_fraction = m.number("fake_rate_fraction", 0.0);
        imp.eta_homodyne = m.number("eta_homodyne", 0.93);
        imp.eta_snspd = m.number("eta_snspd", 0.63);
        imp.eta_tap_chain = m.number("eta_tap_chain", 1.0);
        imp.eta_tap = cfg.tap;
        m.text("provenance", "");
        require_range(imp.eta_state, 0.0, 1.0, "imperfections.eta_state");
        require_range(imp.fake_rate_fraction, 0.0, 1.0, "imperfections.fake_rate_fraction");
        require_range(imp.eta_homodyne, 0.0, 1.0, "imperfections.eta_homodyne");
        require_range(imp.eta_snspd, 0.0, 1.0, "imperfections.eta_snspd");
        require_range(imp.eta_tap_chain, 0.0, 1.0, "imperfections.eta_tap_chain");
        m.finish();
    }
    if (top.has("run")) {
        Fields r = top.object("run");
        cfg.run.n_events = r.count("n_events", cfg.run.n_events);
        cfg.run.seed = r.count("seed", cfg.run.seed);
        cfg.run.cutoff = r.count("cutoff", cfg.run.cutoff);
        cfg.run.basis_size = r.count("basis_size", cfg.run.basis_size);
        cfg.run.wigner_resolution = r.count("wigner_resolution", cfg.run.wigner_resolution);
        if (r.has("phases_rad")) {
            const json& ph = r.raw("phases_rad");
            if (!ph.is_array() || ph.empty()) throw ConfigError("'run.phases_rad' must be a non-empty list");
            cfg.run.phases.clear();
            for (const auto& v : ph) {
                if (!v.is_number()) throw ConfigError("'run.phases_rad' entries must be numbers");
                cfg.run.phases.push_back(v.get<double>());
            }
        }
        require_range(double(cfg.run.n_events), 100, 1e7, "run.n_events");
        require_range(double(cfg.run.cutoff), 2, double(herald::kMaxCutoff), "run.cutoff");
        require_range(double(cfg.run.basis_size), 8, 20, "run.basis_size");
        require_range(double(cfg.run.wigner_resolution), 11, 1001, "run.wigner_resolution");
        r.finish();
    }
    if (top.has("published")) {
        Fields p = top.object("published");
        PublishedReference ref;
        ref.w0 = p.number("w0");
        ref.w0_sigma = p.number("w0_sigma");
        ref.w0_band = band(p, "w0_band");
        ref.fidelity = p.number("fidelity");
        ref.fidelity_sigma = p.number("fidelity_sigma");
        ref.fidelity_band = band(p, "fidelity_band");
        ref.cat_alpha = p.number("cat_alpha");
        ref.filter_mode_match = p.number("filter_mode_match");
        ref.waveform_mode_match = p.number("waveform_mode_match");
        ref.mode_match_floor = p.number("mode_match_floor");
        cfg.published = ref;
        p.finish();
    }
    top.finish();
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    const std::string text = io::read_text(path);
    try {
        return parse_config(text, std::filesystem::path(path).parent_path().string());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

modes::TimeGrid fine_grid(const modes::WaveformParams& p) { return modes::TimeGrid(-3.2 * p.delta_t, p.delta_t / 80.0, 1024); }

modes::TimeGrid record_grid(const modes::WaveformParams& p) {
    return modes::TimeGrid(-0.25 * p.delta_t, p.delta_t / 8.0, 20);
}

modes::ModeFunction target_mode(const ScenarioConfig& cfg) {
    switch (cfg.waveform) {
        case Waveform::time_bin: return modes::make_time_bin(cfg.params, fine_grid(cfg.params));
        case Waveform::balanced_time_bin: return modes::make_balanced_time_bin(cfg.params, fine_grid(cfg.params));
        case Waveform::custom: break;
    }
    return io::read_mode_csv(cfg.custom_file, "custom").normalized();
}

modes::ModeFunction record_mode(const ScenarioConfig& cfg) {
    if (cfg.waveform == Waveform::custom) return target_mode(cfg);
    return target_mode(cfg).rebinned(record_grid(cfg.params)).with_label(to_string(cfg.waveform) + "@record");
}

FilterDesign design_filter(const ScenarioConfig& cfg) {
    if (cfg.waveform == Waveform::custom) throw ConfigError("filter design needs waveform time_bin or balanced_time_bin");
    const auto grid = fine_grid(cfg.params);
    const double gamma = cfg.params.gamma, dt = cfg.params.delta_t;
    const auto iir = filters::iir_response(filters::IirStage{gamma, cfg.bandpass_hwhm}, grid);
    const bool balanced = cfg.waveform == Waveform::balanced_time_bin;
    const auto fir = filters::fir_response(
        balanced ? filters::FirStage::balanced_time_bin(gamma, dt) : filters::FirStage::time_bin(gamma, dt), grid);
    auto response = filters::compose(iir, fir);
    const auto analytic = balanced ? filters::analytic_balanced_time_bin_response(gamma, dt, grid)
                                   : filters::analytic_time_bin_response(gamma, dt, grid);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        num += std::norm(response.g()[i] - analytic[i]);
        den += std::norm(analytic[i]);
    }
    auto completed = filters::two_port_complete(response);
    const auto detection = filters::detection_mode(response);
    const auto target = target_mode(cfg);
    return FilterDesign{response,
                        completed,
                        detection,
                        target,
                        modes::mode_match(detection, target),
                        std::sqrt(num / den),
                        filters::acausal_leakage(response),
                        filters::passivity_defect(completed),
                        response.transfer_at(0.0)};
}

gaussian::SqueezingSpectrum squeezing_spectrum(const ScenarioConfig& cfg, const modes::TimeGrid& grid, double r) {
    if (cfg.squeezing.spectrum == "gaussian")
        return gaussian::SqueezingSpectrum::gaussian(grid, r, 2.0 * kPi * cfg.squeezing.hwhm_hz);
    return gaussian::SqueezingSpectrum::flat(grid, r);
}

Heralding herald_state(const ScenarioConfig& cfg, bool ideal) {
    Heralding h;
    h.r = cfg.squeezing.r ? *cfg.squeezing.r
                          : analysis::match_squeezing_to_cat(*cfg.squeezing.match_cat_alpha, cfg.tap, cfg.run.cutoff);
    h.model = ideal ? herald::ImperfectionModel::ideal() : cfg.imperfections;
    h.model.eta_tap = cfg.tap;
    h.ideal = herald::photon_subtract(h.r, cfg.tap, cfg.herald_pattern[0], cfg.run.cutoff, to_string(cfg.waveform));
    h.source = herald::apply_source_imperfections(h.ideal, h.model);
    h.measured = herald::apply_imperfections(h.ideal, h.model);
    return h;
}

analysis::RecordOptions record_options(const ScenarioConfig& cfg, const Heralding& h) {
    analysis::RecordOptions opt;
    opt.basis_size = cfg.run.basis_size;
    opt.n_events = cfg.run.n_events;
    opt.phases = cfg.run.phases;
    opt.seed = cfg.run.seed;
    opt.background_r = h.r;
    opt.background_eta = (1.0 - cfg.tap) * h.model.eta_total();
    return opt;
}

Evaluation evaluate(std::span<const analysis::RecordBlock> blocks, const modes::ModeFunction& theory, double eta_homodyne,
                    std::size_t cutoff, Execution exec) {
    std::vector<analysis::RecordBlock> heralded, vacuum;
    for (const auto& b : blocks) (b.kind == analysis::RecordKind::vacuum_reference ? vacuum : heralded).push_back(b);
    if (heralded.empty()) throw DataError("record file holds no heralded blocks", 0);
    if (vacuum.empty()) throw DataError("record file holds no vacuum reference blocks", 0);
    if (!heralded.front().grid.same_as(theory.grid()))
        throw DataError("records were taken on a different time grid than the configured waveform", 0);

    Evaluation ev{{}, theory, false, 0.0, {}, {}, {}};
    for (std::size_t k = 0; k < heralded.size(); ++k) {
        ev.pca.push_back(analysis::pca_estimate(std::span(heralded).subspan(k, 1), vacuum, exec));
        ev.mode_identified = ev.mode_identified || ev.pca.back().mode_identified;
    }
    if (ev.mode_identified && ev.pca.size() >= 2) {
        ev.waveform = analysis::estimate_waveform(ev.pca);
    } else if (ev.mode_identified) {
        ev.waveform = ev.pca.front().eigenfunctions.front();
    } else {
        ev.waveform = theory;
        ev.warnings.emplace_back("no mode identified: tomography uses the theoretical waveform");
    }
    // Align the estimate's sign with the theory before projecting.
    if (modes::inner_product(theory, ev.waveform).real() < 0.0) ev.waveform = ev.waveform.scaled(-1.0);
    ev.mode_match = modes::mode_match(ev.waveform, theory);

    const auto samples = analysis::project_records(heralded, ev.waveform);
    analysis::TomographyOptions opt;
    opt.cutoff = cutoff;
    ev.measured = analysis::mle_tomography(samples, opt, exec);
    opt.eta = eta_homodyne;
    ev.corrected = analysis::mle_tomography(samples, opt, exec);
    for (const auto& w : ev.measured.warnings) ev.warnings.push_back(w);
    return ev;
}

analysis::Parity cat_parity(const ScenarioConfig& cfg) {
    return cfg.herald_pattern[0] % 2 == 1 ? analysis::Parity::odd : analysis::Parity::even;
}

}  // namespace qawg::scenario
