#pragma once

// File writers shared by the command-line front end. Doubles are printed in
// shortest round-trip form; every file carries the metadata header.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "qawg/analysis.hpp"
#include "qawg/filters.hpp"
#include "qawg/herald.hpp"

namespace qawg::io {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct Metadata {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string command;
    std::string convention = analysis::kConventionStamp;
    std::string version = kArtifactVersion;

    nlohmann::json to_json() const;
    // "# key: value" lines.
    std::string csv_header() const;
};

enum class TableFormat { csv, json };

TableFormat table_format_from_string(const std::string& name);
std::string extension(TableFormat format);

// Shortest representation that parses back to the same double.
std::string format_double(double v);

// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

void write_table(const std::string& path, const Table& table, const Metadata& meta, TableFormat format);
void write_json(const std::string& path, nlohmann::json body, const Metadata& meta);
std::string read_text(const std::string& path);

Table mode_table(const modes::ModeFunction& f);
Table spectrum_table(const modes::TimeGrid& grid, const std::vector<cplx>& values);
Table response_table(const filters::ImpulseResponse& ir);
Table wigner_table(const analysis::WignerField& field);
// Reads t_seconds,re,im rows (comment lines start with '#').
modes::ModeFunction read_mode_csv(const std::string& path, const std::string& label);

nlohmann::json matrix_json(const CMatrix& m);
CMatrix matrix_from_json(const nlohmann::json& j);
nlohmann::json heralded_state_json(const herald::HeraldedState& hs);
nlohmann::json imperfections_json(const herald::ImperfectionModel& imp);

}  // namespace qawg::io
