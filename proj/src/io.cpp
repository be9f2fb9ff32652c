#include "qawg/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qawg::io {
namespace {

using Index = Eigen::Index;

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw PreconditionError("cannot open " + path + " for writing");
    return os;
}

}  // namespace

nlohmann::json Metadata::to_json() const {
    return {{"config_hash", config_hash}, {"seed", seed}, {"command", command}, {"convention", convention}, {"version", version}};
}

std::string Metadata::csv_header() const {
    std::ostringstream os;
    os << "# config_hash: " << config_hash << "\n# seed: " << seed << "\n# command: " << command
       << "\n# convention: " << convention << "\n# version: " << version << "\n";
    return os.str();
}

TableFormat table_format_from_string(const std::string& name) {
    if (name == "csv") return TableFormat::csv;
    if (name == "json") return TableFormat::json;
    throw ConfigError("unknown table format '" + name + "' (expected csv or json)");
}

std::string extension(TableFormat format) { return format == TableFormat::csv ? ".csv" : ".json"; }

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_table(const std::string& path, const Table& table, const Metadata& meta, TableFormat format) {
    auto os = open_out(path);
    if (format == TableFormat::csv) {
        os << meta.csv_header();
        for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "," : "") << table.columns[c];
        os << "\n";
        for (const auto& row : table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
            os << "\n";
        }
        return;
    }
    nlohmann::json body;
    body["metadata"] = meta.to_json();
    body["columns"] = table.columns;
    body["rows"] = table.rows;
    os << body.dump(1) << "\n";
}

void write_json(const std::string& path, nlohmann::json body, const Metadata& meta) {
    body["metadata"] = meta.to_json();
    auto os = open_out(path);
    os << body.dump(2) << "\n";
}

std::string read_text(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Table mode_table(const modes::ModeFunction& f) {
    Table t{{"t_seconds", "re", "im"}, {}};
    for (std::size_t i = 0; i < f.size(); ++i) t.rows.push_back({f.grid().time(i), f[i].real(), f[i].imag()});
    return t;
}

Table spectrum_table(const modes::TimeGrid& grid, const std::vector<cplx>& values) {
    Table t{{"omega_rad_per_s", "re", "im"}, {}};
    for (std::size_t k = 0; k < values.size(); ++k) t.rows.push_back({grid.omega(k), values[k].real(), values[k].imag()});
    return t;
}

Table response_table(const filters::ImpulseResponse& ir) {
    Table t{{"t_seconds", "re", "im"}, {}};
    for (std::size_t i = 0; i < ir.g().size(); ++i) t.rows.push_back({ir.grid().time(i), ir.g()[i].real(), ir.g()[i].imag()});
    return t;
}

Table wigner_table(const analysis::WignerField& field) {
    Table t{{"x", "p", "W"}, {}};
    for (std::size_t i = 0; i < field.grid.resolution; ++i)
        for (std::size_t j = 0; j < field.grid.resolution; ++j)
            t.rows.push_back({field.grid.x(i), field.grid.p(j), field.values(Index(i), Index(j))});
    return t;
}

modes::ModeFunction read_mode_csv(const std::string& path, const std::string& label) {
    std::istringstream in(read_text(path));
    std::string line;
    std::vector<double> t;
    std::vector<cplx> v;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            if (line.rfind("t_seconds", 0) == 0) continue;
        }
        double vals[3];
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int k = 0; k < 3; ++k) {
            const auto res = std::from_chars(p, end, vals[k]);
            if (res.ec != std::errc())
                throw ConfigError(path + ":" + std::to_string(line_no) + ": expected three numbers t_seconds,re,im");
            p = res.ptr;
            if (k < 2) {
                if (p == end || *p != ',') throw ConfigError(path + ":" + std::to_string(line_no) + ": expected ','");
                ++p;
            }
        }
        t.push_back(vals[0]);
        v.emplace_back(vals[1], vals[2]);
    }
    if (t.size() < 2) throw ConfigError(path + ": a mode file needs at least two samples");
    const double dt = t[1] - t[0];
    for (std::size_t i = 1; i < t.size(); ++i)
        if (std::abs(t[i] - t[0] - double(i) * dt) > 1e-6 * dt)
            throw ConfigError(path + ": samples are not uniformly spaced (line of sample " + std::to_string(i) + ")");
    return modes::ModeFunction(modes::TimeGrid(t[0], dt, t.size()), std::move(v), label);
}

nlohmann::json matrix_json(const CMatrix& m) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        nlohmann::json rr = nlohmann::json::array(), ii = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) {
            rr.push_back(m(i, j).real());
            ii.push_back(m(i, j).imag());
        }
        re.push_back(rr);
        im.push_back(ii);
    }
    return {{"re", re}, {"im", im}};
}

CMatrix matrix_from_json(const nlohmann::json& j) {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    const Index n = Index(re.size());
    CMatrix m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < n; ++k) m(i, k) = cplx(re.at(std::size_t(i)).at(std::size_t(k)).get<double>(), im.at(std::size_t(i)).at(std::size_t(k)).get<double>());
    return m;
}

nlohmann::json imperfections_json(const herald::ImperfectionModel& imp) {
    return {{"eta_state", imp.eta_state},           {"eta_tap", imp.eta_tap},
            {"eta_snspd", imp.eta_snspd},           {"fake_rate_fraction", imp.fake_rate_fraction},
            {"eta_homodyne", imp.eta_homodyne},     {"eta_tap_chain", imp.eta_tap_chain}};
}

nlohmann::json heralded_state_json(const herald::HeraldedState& hs) {
    nlohmann::json j;
    j["cutoff"] = hs.cutoff();
    j["p_success"] = hs.p_success;
    j["rho"] = matrix_json(hs.rho);
    j["background"] = matrix_json(hs.background);
    j["provenance"] = {{"pattern", hs.provenance.pattern}, {"filter", hs.provenance.filter_label}};
    if (hs.provenance.imperfections) j["provenance"]["imperfections"] = imperfections_json(*hs.provenance.imperfections);
    j["invariants"] = {{"trace_defect", herald::trace_defect(hs.rho)},
                       {"hermiticity_defect", herald::hermiticity_defect(hs.rho)},
                       {"min_eigenvalue", herald::min_eigenvalue(hs.rho)}};
    return j;
}

}  // namespace qawg::io
