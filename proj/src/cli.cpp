#include "qawg/cli.hpp"

#include <filesystem>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "qawg/io.hpp"
#include "qawg/scenario.hpp"

#ifndef QAWG_SCENARIO_DIR
#define QAWG_SCENARIO_DIR "scenarios"
#endif

namespace qawg::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using analysis::Parity;

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    bool ideal = false;
    std::string format = "csv";
    std::string records;
    std::string scenarios = QAWG_SCENARIO_DIR;
    std::optional<double> target_w0;
};

struct Context {
    scenario::ScenarioConfig cfg;
    io::Metadata meta;
    io::TableFormat format;
    fs::path out;
};

Context make_context(const Options& o, const std::string& command, std::ostream& out) {
    if (o.config.empty()) throw ConfigError("--config is required for " + command);
    Context c{scenario::load_config(o.config), {}, io::table_format_from_string(o.format), fs::path(o.out)};
    if (o.seed) {
        c.cfg.run.seed = *o.seed;
        out << "seed " << *o.seed << " (override); rerun with --seed " << *o.seed << " to reproduce\n";
    }
    c.meta.config_hash = c.cfg.hash();
    c.meta.seed = c.cfg.run.seed;
    c.meta.command = command;
    fs::create_directories(c.out);
    return c;
}

std::string table_path(const Context& c, const std::string& stem) { return (c.out / (stem + io::extension(c.format))).string(); }
std::string json_path(const Context& c, const std::string& stem) { return (c.out / (stem + ".json")).string(); }

json cat_json(const analysis::CatFit& fit) {
    return {{"alpha_magnitude", fit.magnitude}, {"alpha_phase", fit.phase}, {"fidelity", fit.fidelity}};
}

// Fidelity against a cat of fixed magnitude at the state's own orientation.
double fidelity_at(const CMatrix& rho, double magnitude, Parity parity) {
    const auto fit = analysis::best_cat(rho, parity);
    return analysis::cat_fidelity(rho, std::polar(magnitude, fit.phase), parity);
}

int cmd_design_filter(const Options& o, std::ostream& out) {
    Context c = make_context(o, "design-filter", out);
    const auto d = scenario::design_filter(c.cfg);
    io::write_table(table_path(c, "impulse_response"), io::response_table(d.response), c.meta, c.format);
    io::write_table(table_path(c, "transfer"), io::spectrum_table(d.response.grid(), d.response.transmit_spectrum()), c.meta,
                    c.format);
    io::write_table(table_path(c, "ancilla_transfer"), io::spectrum_table(d.completed.grid(), d.completed.ancilla_spectrum()),
                    c.meta, c.format);
    io::write_table(table_path(c, "detection_mode"), io::mode_table(d.detection), c.meta, c.format);

    cplx area = 0.0;
    for (const auto& g : d.response.g()) area += g * d.response.grid().dt();
    const bool match_ok = d.mode_match >= 0.999;
    const bool causal_ok = d.acausal_leakage < 1e-12;
    const bool passive_ok = d.passivity_defect < 1e-9;
    json report = {{"waveform", scenario::to_string(c.cfg.waveform)},
                   {"mode_match_vs_target", d.mode_match},
                   {"analytic_relative_l2_error", d.analytic_l2_error},
                   {"acausal_leakage", d.acausal_leakage},
                   {"passivity_defect", d.passivity_defect},
                   {"integral_g_dt", {area.real(), area.imag()}},
                   {"checks", {{"mode_match_ge_0.999", match_ok}, {"causal", causal_ok}, {"passive", passive_ok}}}};
    io::write_json(json_path(c, "design_report"), report, c.meta);
    out << "design-filter " << scenario::to_string(c.cfg.waveform) << ": mode match " << d.mode_match
        << ", analytic L2 error " << d.analytic_l2_error << ", integral g dt " << area.real() << ", passivity defect "
        << d.passivity_defect << "\n";
    return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    Context c = make_context(o, o.ideal ? "simulate --ideal" : "simulate", out);
    const auto h = scenario::herald_state(c.cfg, o.ideal);
    const Parity parity = scenario::cat_parity(c.cfg);
    io::write_json(json_path(c, "heralded_ideal"), io::heralded_state_json(h.ideal), c.meta);
    io::write_json(json_path(c, "heralded_imperfect"), io::heralded_state_json(h.measured), c.meta);
    const auto field = analysis::wigner(h.measured.rho, analysis::WignerGrid::covering(c.cfg.run.cutoff, c.cfg.run.wigner_resolution));
    io::write_table(table_path(c, "wigner"), io::wigner_table(field), c.meta, c.format);

    const double w0_ideal = analysis::negativity_at_origin(h.ideal.rho);
    const double w0 = analysis::negativity_at_origin(h.measured.rho);
    const auto fit = analysis::best_cat(h.measured.rho, parity);
    const auto fit_ideal = analysis::best_cat(h.ideal.rho, parity);
    const bool gaussian_output = c.cfg.herald_pattern[0] == 0;
    const auto f = scenario::target_mode(c.cfg);
    const double purity = gaussian::purity_real(f, scenario::squeezing_spectrum(c.cfg, f.grid(), h.r));
    const double modes_per_second = 1.0 / c.cfg.params.delta_t;

    json report = {{"squeezing_r", h.r},
                   {"herald_pattern", c.cfg.herald_pattern},
                   {"parity", parity == Parity::odd ? "odd" : "even"},
                   {"w00_ideal", w0_ideal},
                   {"w00_imperfect", w0},
                   {"negative_at_origin", w0 < 0.0},
                   {"best_cat_ideal", cat_json(fit_ideal)},
                   {"best_cat_imperfect", cat_json(fit)},
                   {"p_success", h.ideal.p_success},
                   {"success_rate_hz", herald::success_rate(h.ideal, modes_per_second, h.model)},
                   {"success_rate_note", "order of magnitude: p_success x (1/delta_t) x eta_tap_chain x eta_snspd"},
                   {"imperfections", io::imperfections_json(h.model)},
                   {"decomposition_purity", purity}};
    if (gaussian_output) report["flag"] = "Gaussian output: a zero-photon herald produces no Wigner negativity";
    if (c.cfg.published) report["fidelity_at_published_alpha"] = fidelity_at(h.measured.rho, c.cfg.published->cat_alpha, parity);
    io::write_json(json_path(c, "report"), report, c.meta);

    const auto fr = scenario::record_mode(c.cfg);
    auto blocks = analysis::simulate_records(h.measured, fr, scenario::record_options(c.cfg, h));
    const auto vac = analysis::simulate_vacuum_reference(fr.grid(), c.cfg.run.n_events, c.cfg.run.phases, c.cfg.run.seed);
    blocks.insert(blocks.end(), vac.begin(), vac.end());
    analysis::write_records((c.out / "records.qrec").string(), blocks);

    out << "simulate: r = " << h.r << ", W(0,0) = " << w0 << " (ideal " << w0_ideal << "), best cat |alpha| = " << fit.magnitude
        << " F = " << fit.fidelity << ", p_success = " << h.ideal.p_success << "\n";
    if (gaussian_output) out << "note: " << report["flag"].get<std::string>() << "\n";
    return kOk;
}

int cmd_analyze(const Options& o, std::ostream& out) {
    Context c = make_context(o, "analyze", out);
    if (o.records.empty()) throw ConfigError("analyze needs --records PATH");
    const auto blocks = analysis::read_records(o.records);
    const auto theory = scenario::record_mode(c.cfg);
    const auto ev = scenario::evaluate(blocks, theory, c.cfg.imperfections.eta_homodyne, c.cfg.run.cutoff);
    const Parity parity = scenario::cat_parity(c.cfg);

    io::Table eig{{"phase_rad", "index", "eigenvalue_vacuum_units"}, {}};
    std::size_t k = 0;
    for (const auto& b : blocks) {
        if (b.kind == analysis::RecordKind::vacuum_reference) continue;
        const auto& p = ev.pca[k++];
        for (std::size_t i = 0; i < p.eigenvalues.size(); ++i) eig.rows.push_back({b.theta_lo, double(i + 1), p.eigenvalues[i]});
    }
    io::write_table(table_path(c, "pca_eigenvalues"), eig, c.meta, c.format);
    io::write_table(table_path(c, "estimated_waveform"), io::mode_table(ev.waveform), c.meta, c.format);
    auto tomo_json = [](const analysis::TomographyResult& t, double eta) {
        return json{{"eta", eta},
                    {"iterations", t.iterations},
                    {"converged", t.converged},
                    {"log_likelihood_per_sample", t.log_likelihood},
                    {"warnings", t.warnings},
                    {"rho", io::matrix_json(t.rho)}};
    };
    io::write_json(json_path(c, "rho_measured"), tomo_json(ev.measured, 1.0), c.meta);
    io::write_json(json_path(c, "rho_corrected"), tomo_json(ev.corrected, c.cfg.imperfections.eta_homodyne), c.meta);
    const auto field =
        analysis::wigner(ev.measured.rho, analysis::WignerGrid::covering(c.cfg.run.cutoff, c.cfg.run.wigner_resolution));
    io::write_table(table_path(c, "wigner"), io::wigner_table(field), c.meta, c.format);

    const auto fit = analysis::best_cat(ev.measured.rho, parity);
    json summary = {{"pca", ev.mode_identified ? "mode identified" : "no mode identified"},
                    {"mode_match_vs_theory", ev.mode_match},
                    {"w00_measured", analysis::negativity_at_origin(ev.measured.rho)},
                    {"w00_loss_corrected", analysis::negativity_at_origin(ev.corrected.rho)},
                    {"best_cat", cat_json(fit)},
                    {"warnings", ev.warnings}};
    if (c.cfg.published) summary["fidelity_at_published_alpha"] = fidelity_at(ev.measured.rho, c.cfg.published->cat_alpha, parity);
    io::write_json(json_path(c, "summary"), summary, c.meta);

    out << "analyze: " << summary["pca"].get<std::string>() << "; mode match " << ev.mode_match << "; W(0,0) "
        << summary["w00_measured"].get<double>() << " (loss-corrected " << summary["w00_loss_corrected"].get<double>()
        << "); best cat |alpha| = " << fit.magnitude << " F = " << fit.fidelity << "\n";
    for (const auto& w : ev.warnings) out << "warning: " << w << "\n";
    return kOk;
}

struct Row {
    std::string scenario;
    std::string quantity;
    double published;
    double simulated;
    double low;
    double high;
    bool pass() const { return simulated >= low && simulated <= high; }
};

std::vector<Row> scenario_rows(const scenario::ScenarioConfig& cfg, bool ideal) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::string& name = cfg.name;
    const Parity parity = scenario::cat_parity(cfg);
    const auto h = scenario::herald_state(cfg, ideal);
    std::vector<Row> rows;
    if (ideal) {
        const auto fit = analysis::best_cat(h.ideal.rho, parity);
        rows.push_back({name, "ideal best-cat fidelity", nan, fit.fidelity, 0.99, 1.0 + 1e-12});
        rows.push_back({name, "ideal best-cat |alpha|", 0.94, fit.magnitude, 0.89, 0.99});
        rows.push_back({name, "ideal W(0,0)", nan, analysis::negativity_at_origin(h.ideal.rho), -1.0 / kPi - 1e-3, -1.0 / kPi + 1e-3});
        return rows;
    }
    if (!cfg.published) throw ConfigError("scenario '" + name + "' has no published reference block");
    const auto& p = *cfg.published;
    const auto design = scenario::design_filter(cfg);
    rows.push_back({name, "filter mode match", p.filter_mode_match, design.mode_match, 0.999, 1.0});
    const double w0 = analysis::negativity_at_origin(h.measured.rho);
    rows.push_back({name, "W(0,0)", p.w0, w0, p.w0_band[0], p.w0_band[1]});
    rows.push_back({name, "cat fidelity at |alpha|=" + io::format_double(p.cat_alpha), p.fidelity,
                    fidelity_at(h.measured.rho, p.cat_alpha, parity), p.fidelity_band[0], p.fidelity_band[1]});

    const auto fr = scenario::record_mode(cfg);
    auto blocks = analysis::simulate_records(h.measured, fr, scenario::record_options(cfg, h));
    const auto vac = analysis::simulate_vacuum_reference(fr.grid(), cfg.run.n_events, cfg.run.phases, cfg.run.seed);
    blocks.insert(blocks.end(), vac.begin(), vac.end());
    const auto ev = scenario::evaluate(blocks, fr, cfg.imperfections.eta_homodyne, cfg.run.cutoff);
    rows.push_back({name, "estimated waveform mode match", p.waveform_mode_match, ev.mode_match, p.mode_match_floor, 1.0});
    rows.push_back({name, "reconstruction fidelity to input", nan, analysis::fidelity(ev.measured.rho, h.measured.rho), 0.98,
                    1.0 + 1e-9});
    rows.push_back({name, "reconstructed W(0,0)", p.w0, analysis::negativity_at_origin(ev.measured.rho), w0 - 0.01, w0 + 0.01});
    return rows;
}

int cmd_reproduce(const Options& o, std::ostream& out) {
    const fs::path dir(o.scenarios);
    const std::vector<std::string> files{"published_time_bin.json", "published_balanced_time_bin.json"};
    fs::create_directories(o.out);
    std::vector<Row> rows;
    std::string hashes;
    std::uint64_t seed = 0;
    for (const auto& f : files) {
        auto cfg = scenario::load_config((dir / f).string());
        if (o.seed) cfg.run.seed = *o.seed;
        seed = cfg.run.seed;
        hashes += cfg.hash();
        const auto r = scenario_rows(cfg, o.ideal);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    io::Metadata meta;
    meta.config_hash = io::fnv1a_hex(hashes);
    meta.seed = seed;
    meta.command = o.ideal ? "reproduce-paper --ideal" : "reproduce-paper";
    if (o.seed) out << "seed " << *o.seed << " (override); rerun with --seed " << *o.seed << " to reproduce\n";
    else out << "seed " << seed << " (from scenario files)\n";

    json table = json::array();
    std::vector<std::string> failures;
    out << std::left << std::setw(26) << "scenario" << std::setw(36) << "quantity" << std::right << std::setw(10) << "published"
        << std::setw(12) << "simulated" << std::setw(22) << "band" << "  result\n";
    for (const auto& r : rows) {
        std::ostringstream band;
        band << "[" << std::setprecision(4) << r.low << ", " << r.high << "]";
        std::ostringstream published;
        if (std::isnan(r.published)) published << "-";
        else published << r.published;
        out << std::left << std::setw(26) << r.scenario << std::setw(36) << r.quantity << std::right << std::setw(10) << published.str()
            << std::setw(12) << std::setprecision(4) << r.simulated << std::setw(22) << band.str() << "  "
            << (r.pass() ? "pass" : "FAIL") << "\n";
        table.push_back({{"scenario", r.scenario},
                         {"quantity", r.quantity},
                         {"published", std::isnan(r.published) ? json(nullptr) : json(r.published)},
                         {"simulated", r.simulated},
                         {"band", {r.low, r.high}},
                         {"pass", r.pass()}});
        if (!r.pass()) failures.push_back(r.scenario + ": " + r.quantity);
    }
    io::write_json((fs::path(o.out) / "comparison.json").string(), json{{"rows", table}}, meta);
    if (!failures.empty()) {
        out << "band violations:\n";
        for (const auto& f : failures) out << "  " << f << "\n";
        return kBandViolation;
    }
    out << "all bands satisfied\n";
    return kOk;
}

int cmd_fit_loss(const Options& o, std::ostream& out) {
    Context c = make_context(o, "fit-loss", out);
    double target = 0.0;
    if (o.target_w0) target = *o.target_w0;
    else if (c.cfg.published) target = c.cfg.published->w0;
    else throw ConfigError("fit-loss needs --target-w0 or a published block in the scenario");
    auto model = c.cfg.imperfections;
    const auto hs = scenario::herald_state(c.cfg, true).ideal;
    const double eta = analysis::fit_eta_state(hs, model, target);
    model.eta_state = eta;
    json report = {{"target_w00", target},
                   {"eta_state", eta},
                   {"eta_total", model.eta_total()},
                   {"fake_rate_fraction", model.fake_rate_fraction},
                   {"note", "fitted; not a published measurement"}};
    io::write_json(json_path(c, "fit_report"), report, c.meta);
    out << "fit-loss: eta_state = " << std::setprecision(6) << eta << " (eta_total " << model.eta_total() << ") reaches W(0,0) = " << target
        << "\n";
    return kOk;
}

}  // namespace

std::string default_scenario_dir() { return QAWG_SCENARIO_DIR; }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Heralded non-Gaussian state and temporal-waveform laboratory", "qawg"};
    app.require_subcommand(1);
    Options o;
    std::uint64_t seed = 0;

    auto common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", o.config, "scenario JSON file");
        if (needs_config) c->required();
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", seed, "override the scenario seed");
        sub->add_option("--format", o.format, "table format")->check(CLI::IsMember({"csv", "json"}));
    };
    auto* design = app.add_subcommand("design-filter", "synthesize the filter cascade and its detection mode");
    common(design, true);
    auto* simulate = app.add_subcommand("simulate", "herald the state, apply imperfections, write records");
    common(simulate, true);
    simulate->add_flag("--ideal", o.ideal, "lossless, fake-free run");
    auto* analyze = app.add_subcommand("analyze", "PCA, waveform estimate and tomography of a record file");
    common(analyze, true);
    analyze->add_option("--records", o.records, "record file written by simulate")->required();
    auto* reproduce = app.add_subcommand("reproduce-paper", "run both published scenarios and compare against bands");
    reproduce->add_option("--out", o.out, "output directory");
    reproduce->add_option("--seed", seed, "override the scenario seeds");
    reproduce->add_flag("--ideal", o.ideal, "lossless run");
    reproduce->add_option("--scenarios", o.scenarios, "directory with the scenario files");
    auto* fit = app.add_subcommand("fit-loss", "fit eta_state to a target W(0,0)");
    common(fit, true);
    double target = 0.0;
    auto* target_opt = fit->add_option("--target-w0", target, "target W(0,0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }
    auto seen = [&](CLI::App* sub) { return sub->count("--seed") > 0; };
    for (auto* sub : {design, simulate, analyze, reproduce, fit})
        if (sub->parsed() && seen(sub)) o.seed = seed;
    if (target_opt->count() > 0) o.target_w0 = target;

    try {
        if (design->parsed()) return cmd_design_filter(o, out);
        if (simulate->parsed()) return cmd_simulate(o, out);
        if (analyze->parsed()) return cmd_analyze(o, out);
        if (reproduce->parsed()) return cmd_reproduce(o, out);
        if (fit->parsed()) return cmd_fit_loss(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const TruncationError& e) {
        err << "truncation error: " << e.what() << " (raise run.cutoff in the scenario)\n";
        return kFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "file error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}

}  // namespace qawg::cli
