/*
 * Copyright 2026 The nvcav Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NVCAV_IO_HPP
#define NVCAV_IO_HPP

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nvcav/core.hpp"
#include "nvcav/farfield.hpp"
#include "nvcav/fdtd.hpp"
#include "nvcav/g2.hpp"
#include "nvcav/geometry.hpp"
#include "nvcav/mode.hpp"
#include "nvcav/spectro_fit.hpp"
#include "nvcav/spectrum.hpp"

namespace nvcav {

using json = nlohmann::json;

/// Configuration error tagged with the offending field path.
class config_error : public invalid_input
{
public:
    config_error(const std::string& path, const std::string& what)
        : invalid_input(path + ": " + what), m_path(path)
    {
    }
    const std::string& path() const { return m_path; }

private:
    std::string m_path;
};

/// Parse error tagged with a 1-based line number.
class parse_error : public invalid_input
{
public:
    parse_error(const std::string& file, std::size_t line, const std::string& what)
        : invalid_input(file + ":" + std::to_string(line) + ": " + what), m_line(line)
    {
    }
    std::size_t line() const { return m_line; }

private:
    std::size_t m_line;
};

namespace cfg {

inline std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path, T fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error(join(path, key), "wrong type");
    }
}

template <class T>
T need(const json& j, const std::string& key, const std::string& path)
{
    if (!j.contains(key)) {
        throw config_error(join(path, key), "missing required field");
    }
    return get<T>(j, key, path, T{});
}

inline vec3 get_vec3(const json& j, const std::string& key, const std::string& path, vec3 fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 3) {
        throw config_error(join(path, key), "expected an array of three numbers");
    }
    vec3 out;
    for (int a = 0; a < 3; ++a) {
        if (!v[static_cast<std::size_t>(a)].is_number()) {
            throw config_error(join(path, key), "expected an array of three numbers");
        }
        out[a] = v[static_cast<std::size_t>(a)].get<double>();
    }
    return out;
}

inline void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys)
{
    if (!j.is_object()) {
        throw config_error(path.empty() ? "<root>" : path, "expected an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) {
            known = known || it.key() == k;
        }
        if (!known) {
            throw config_error(join(path, it.key()), "unknown field");
        }
    }
}

// Re-throws a validation failure with a field path attached.
template <class Fn>
void checked(const std::string& path, Fn&& fn)
{
    try {
        fn();
    } catch (const config_error&) {
        throw;
    } catch (const invalid_input& e) {
        throw config_error(path, e.what());
    }
}

inline json to_json(vec3 v) { return json::array({v[0], v[1], v[2]}); }

} // namespace cfg

inline cavity_design design_from_json(const json& j, const std::string& path = "design")
{
    using namespace cfg;
    only_keys(j, path, {"name", "lattice", "defect", "nanocrystal", "domain"});
    cavity_design d;
    d.name = get<std::string>(j, "name", path, d.name);
    if (j.contains("lattice")) {
        const auto& l = j.at("lattice");
        const std::string p = join(path, "lattice");
        only_keys(l, p, {"lattice_constant_nm", "hole_radius_nm", "slab_thickness_nm", "slab_index", "n_rows",
                         "n_cols", "min_periods_per_side"});
        auto& L = d.lattice;
        L.lattice_constant_nm = get<double>(l, "lattice_constant_nm", p, L.lattice_constant_nm);
        L.hole_radius_nm = get<double>(l, "hole_radius_nm", p, L.hole_radius_nm);
        L.slab_thickness_nm = get<double>(l, "slab_thickness_nm", p, L.slab_thickness_nm);
        L.slab_index = get<double>(l, "slab_index", p, L.slab_index);
        L.n_rows = get<int>(l, "n_rows", p, L.n_rows);
        L.n_cols = get<int>(l, "n_cols", p, L.n_cols);
        L.min_periods_per_side = get<int>(l, "min_periods_per_side", p, L.min_periods_per_side);
        checked(p, [&] { L.validate(); });
    }
    if (j.contains("defect")) {
        const auto& df = j.at("defect");
        const std::string p = join(path, "defect");
        only_keys(df, p, {"kind", "side_hole_shift_nm"});
        checked(join(p, "kind"), [&] { d.defect.kind = defect_from_name(get<std::string>(df, "kind", p, "S1")); });
        d.defect.side_hole_shift_nm = get<double>(df, "side_hole_shift_nm", p, 0.0);
        checked(p, [&] { d.defect.validate(); });
    }
    if (j.contains("nanocrystal") && !j.at("nanocrystal").is_null()) {
        const auto& nc = j.at("nanocrystal");
        const std::string p = join(path, "nanocrystal");
        only_keys(nc, p, {"center_nm", "diameter_nm", "index"});
        nanocrystal_placement pl;
        pl.center_nm = get_vec3(nc, "center_nm", p, pl.center_nm);
        pl.diameter_nm = get<double>(nc, "diameter_nm", p, pl.diameter_nm);
        pl.index = get<double>(nc, "index", p, pl.index);
        checked(p, [&] { pl.validate(); });
        d.nanocrystal = pl;
    }
    if (j.contains("domain")) {
        const auto& dm = j.at("domain");
        const std::string p = join(path, "domain");
        only_keys(dm, p, {"size_nm", "lateral_padding_nm", "air_padding_nm", "pml_cells"});
        d.domain.size_nm = get_vec3(dm, "size_nm", p, d.domain.size_nm);
        d.domain.lateral_padding_nm = get<double>(dm, "lateral_padding_nm", p, d.domain.lateral_padding_nm);
        d.domain.air_padding_nm = get<double>(dm, "air_padding_nm", p, d.domain.air_padding_nm);
        d.domain.pml_cells = get<int>(dm, "pml_cells", p, d.domain.pml_cells);
    }
    checked(path, [&] { d.validate(); });
    return d;
}

inline json design_to_json(const cavity_design& d)
{
    json j;
    j["name"] = d.name;
    j["lattice"] = {{"lattice_constant_nm", d.lattice.lattice_constant_nm},
                    {"hole_radius_nm", d.lattice.hole_radius_nm},
                    {"slab_thickness_nm", d.lattice.slab_thickness_nm},
                    {"slab_index", d.lattice.slab_index},
                    {"n_rows", d.lattice.n_rows},
                    {"n_cols", d.lattice.n_cols},
                    {"min_periods_per_side", d.lattice.min_periods_per_side}};
    j["defect"] = {{"kind", defect_name(d.defect.kind)}, {"side_hole_shift_nm", d.defect.side_hole_shift_nm}};
    if (d.nanocrystal) {
        j["nanocrystal"] = {{"center_nm", cfg::to_json(d.nanocrystal->center_nm)},
                            {"diameter_nm", d.nanocrystal->diameter_nm},
                            {"index", d.nanocrystal->index}};
    }
    j["domain"] = {{"size_nm", cfg::to_json(d.domain.size_nm)},
                   {"lateral_padding_nm", d.domain.lateral_padding_nm},
                   {"air_padding_nm", d.domain.air_padding_nm},
                   {"pml_cells", d.domain.pml_cells}};
    return j;
}

/**
 * Boundary block. "mirrors" maps an axis to "pec", "pmc" or "none" and puts
 * that wall on the lower face; "faces" sets both faces of an axis
 * explicitly.
 */
inline boundary_spec boundary_from_json(const json& j, const std::string& path = "boundary")
{
    using namespace cfg;
    only_keys(j, path, {"faces", "mirrors", "pml_cells", "grading_order", "sigma_scale", "kappa_max", "alpha_max_per_nm"});
    boundary_spec b;
    b.pml_cells = get<int>(j, "pml_cells", path, b.pml_cells);
    b.grading_order = get<double>(j, "grading_order", path, b.grading_order);
    b.sigma_scale = get<double>(j, "sigma_scale", path, b.sigma_scale);
    b.kappa_max = get<double>(j, "kappa_max", path, b.kappa_max);
    b.alpha_max = get<double>(j, "alpha_max_per_nm", path, b.alpha_max);
    const char* axes[3] = {"x", "y", "z"};
    if (j.contains("faces")) {
        const auto& f = j.at("faces");
        const std::string p = join(path, "faces");
        only_keys(f, p, {"x", "y", "z"});
        for (int a = 0; a < 3; ++a) {
            if (!f.contains(axes[a])) {
                continue;
            }
            const auto& v = f.at(axes[a]);
            const std::string pa = join(p, axes[a]);
            if (!v.is_array() || v.size() != 2 || !v[0].is_string() || !v[1].is_string()) {
                throw config_error(pa, "expected [lower, upper] boundary kinds");
            }
            checked(pa, [&] {
                b.faces[a][0] = boundary_from_name(v[0].get<std::string>());
                b.faces[a][1] = boundary_from_name(v[1].get<std::string>());
            });
        }
    }
    if (j.contains("mirrors")) {
        const auto& m = j.at("mirrors");
        const std::string p = join(path, "mirrors");
        only_keys(m, p, {"x", "y", "z"});
        for (int a = 0; a < 3; ++a) {
            const std::string kind = get<std::string>(m, axes[a], p, "none");
            if (kind == "none") {
                continue;
            }
            if (kind != "pec" && kind != "pmc") {
                throw config_error(join(p, axes[a]), "mirror must be pec, pmc or none");
            }
            b.faces[a][0] = boundary_from_name(kind);
        }
    }
    checked(path, [&] { b.validate(); });
    return b;
}

inline json boundary_to_json(const boundary_spec& b)
{
    json faces;
    const char* axes[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
        faces[axes[a]] = {boundary_name(b.faces[a][0]), boundary_name(b.faces[a][1])};
    }
    return {{"faces", faces},
            {"pml_cells", b.pml_cells},
            {"grading_order", b.grading_order},
            {"sigma_scale", b.sigma_scale},
            {"kappa_max", b.kappa_max},
            {"alpha_max_per_nm", b.alpha_max}};
}

inline source_spec source_from_json(const json& j, const std::string& path = "source")
{
    using namespace cfg;
    only_keys(j, path, {"position_nm", "orientation", "wavelength_nm", "bandwidth", "amplitude", "width_steps", "delay_steps"});
    source_spec s;
    s.position_nm = get_vec3(j, "position_nm", path, s.position_nm);
    s.orientation = get_vec3(j, "orientation", path, s.orientation);
    const double n = norm(s.orientation);
    if (n > 0.0 && std::abs(n - 1.0) < 1e-3) {
        s.orientation = (1.0 / n) * s.orientation;
    }
    s.wavelength_nm = get<double>(j, "wavelength_nm", path, s.wavelength_nm);
    s.bandwidth = get<double>(j, "bandwidth", path, s.bandwidth);
    s.amplitude = get<double>(j, "amplitude", path, s.amplitude);
    if (j.contains("width_steps")) {
        s.width_steps = get<double>(j, "width_steps", path, 0.0);
    }
    if (j.contains("delay_steps")) {
        s.delay_steps = get<double>(j, "delay_steps", path, 0.0);
    }
    checked(path, [&] { s.validate(); });
    return s;
}

inline json source_to_json(const source_spec& s)
{
    json j = {{"position_nm", cfg::to_json(s.position_nm)},
              {"orientation", cfg::to_json(s.orientation)},
              {"wavelength_nm", s.wavelength_nm},
              {"bandwidth", s.bandwidth},
              {"amplitude", s.amplitude}};
    if (s.width_steps) {
        j["width_steps"] = *s.width_steps;
    }
    if (s.delay_steps) {
        j["delay_steps"] = *s.delay_steps;
    }
    return j;
}

inline json read_json_file(const std::string& file)
{
    std::ifstream in(file);
    if (!in) {
        throw invalid_input(file + ": cannot open file");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw invalid_input(file + ": " + e.what());
    }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',' || c == ';' || c == '\t') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        const auto b = s.find_first_not_of(' ');
        const auto e = s.find_last_not_of(' ');
        s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    }
    return out;
}

inline double parse_number(const std::string& tok, const std::string& file, std::size_t line)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) {
            throw std::invalid_argument(tok);
        }
        return v;
    } catch (const std::exception&) {
        throw parse_error(file, line, "not a number: '" + tok + "'");
    }
}

inline bool is_header(const std::vector<std::string>& cells)
{
    for (const auto& c : cells) {
        if (c.empty()) {
            continue;
        }
        const char f = c.front();
        if (!(std::isdigit(static_cast<unsigned char>(f)) || f == '-' || f == '+' || f == '.')) {
            return true;
        }
    }
    return false;
}

} // namespace detail

/**
 * Numeric CSV table. Blank lines and lines starting with '#' are skipped; a
 * single non-numeric first row is taken as a header. Every data row must
 * have between min_cols and max_cols columns, and as many as the first.
 */
inline std::vector<std::vector<double>> read_numeric_csv(std::istream& in, const std::string& name, std::size_t min_cols,
                                                         std::size_t max_cols)
{
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t n = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++n;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        auto cells = detail::split_csv(line);
        if (header_allowed && detail::is_header(cells)) {
            header_allowed = false;
            continue;
        }
        header_allowed = false;
        if (cells.size() < min_cols || cells.size() > max_cols) {
            throw parse_error(name, n,
                              "expected " + std::to_string(min_cols) +
                                  (max_cols != min_cols ? "-" + std::to_string(max_cols) : "") + " columns, found " +
                                  std::to_string(cells.size()));
        }
        if (!rows.empty() && cells.size() != rows.front().size()) {
            throw parse_error(name, n, "inconsistent column count");
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            row.push_back(detail::parse_number(c, name, n));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw parse_error(name, n, "no data rows");
    }
    return rows;
}

/// wavelength_nm, counts[, uncertainty]
inline spectrum read_spectrum_csv(std::istream& in, const std::string& name)
{
    const auto rows = read_numeric_csv(in, name, 2, 3);
    spectrum s;
    const bool unc = rows.front().size() == 3;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        s.wavelength_nm.push_back(rows[i][0]);
        s.intensity.push_back(rows[i][1]);
        if (unc) {
            s.uncertainty.push_back(rows[i][2]);
        }
    }
    try {
        s.validate();
    } catch (const invalid_input& e) {
        throw invalid_input(name + ": " + e.what());
    }
    return s;
}

inline spectrum read_spectrum_csv(const std::string& file)
{
    std::ifstream in(file);
    if (!in) {
        throw invalid_input(file + ": cannot open file");
    }
    return read_spectrum_csv(in, file);
}

inline void write_spectrum_csv(std::ostream& os, const spectrum& s)
{
    os << (s.uncertainty.empty() ? "wavelength_nm,counts\n" : "wavelength_nm,counts,uncertainty\n");
    os << std::setprecision(12);
    for (std::size_t i = 0; i < s.size(); ++i) {
        os << s.wavelength_nm[i] << ',' << s.intensity[i];
        if (!s.uncertainty.empty()) {
            os << ',' << s.uncertainty[i];
        }
        os << '\n';
    }
}

/// power_uw followed by one or more count columns.
inline std::vector<std::vector<saturation_point>> read_saturation_csv(std::istream& in, const std::string& name)
{
    const auto rows = read_numeric_csv(in, name, 2, 64);
    const std::size_t cols = rows.front().size();
    std::vector<std::vector<saturation_point>> curves(cols - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 1; c < cols; ++c) {
            curves[c - 1].push_back({rows[i][0], rows[i][c]});
        }
    }
    return curves;
}

inline void write_saturation_csv(std::ostream& os, const std::vector<std::vector<saturation_point>>& curves)
{
    require(!curves.empty(), "write_saturation_csv: no curves");
    os << "power_uw";
    for (std::size_t c = 0; c < curves.size(); ++c) {
        os << ",counts_" << c;
    }
    os << '\n' << std::setprecision(12);
    for (std::size_t i = 0; i < curves.front().size(); ++i) {
        os << curves.front()[i].power_uw;
        for (const auto& c : curves) {
            os << ',' << c[i].counts;
        }
        os << '\n';
    }
}

/// One unsigned 64-bit picosecond time tag per line.
inline std::vector<std::uint64_t> read_timestamps(std::istream& in, const std::string& name)
{
    std::vector<std::uint64_t> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') {
            continue;
        }
        const auto e = line.find_last_not_of(" \t\r");
        const std::string tok = line.substr(b, e - b + 1);
        if (tok.find_first_not_of("0123456789") != std::string::npos) {
            throw parse_error(name, n, "not an unsigned integer: '" + tok + "'");
        }
        try {
            out.push_back(std::stoull(tok));
        } catch (const std::exception&) {
            throw parse_error(name, n, "time tag out of range: '" + tok + "'");
        }
        if (out.size() > 1 && out[out.size() - 2] > out.back()) {
            throw parse_error(name, n, "time tags must be sorted");
        }
    }
    return out;
}

inline std::vector<std::uint64_t> read_timestamps(const std::string& file)
{
    std::ifstream in(file);
    if (!in) {
        throw invalid_input(file + ": cannot open file");
    }
    return read_timestamps(in, file);
}

inline void write_timestamps(std::ostream& os, const std::vector<std::uint64_t>& t)
{
    for (auto v : t) {
        os << v << '\n';
    }
}

inline void write_monitor_csv(std::ostream& os, const monitor_record& r)
{
    os << "time_step,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        os << r.first_step + static_cast<std::int64_t>(i) << ',' << r.samples[i] << '\n';
    }
}

inline void write_g2_csv(std::ostream& os, const g2_corrected& g)
{
    os << "tau_ns,g2_raw,g2_corr\n" << std::setprecision(12);
    for (std::size_t i = 0; i < g.tau_ns.size(); ++i) {
        os << g.tau_ns[i] << ',' << g.raw[i] << ',' << g.corrected[i] << '\n';
    }
}

/**
 * Binary array files: 8-byte magic, uint32 version, uint64 dims[3],
 * float64 cell_nm, float64 origin_nm[3], uint32 array count, then the
 * arrays as little-endian float64, index k fastest. Complex arrays are
 * stored as consecutive real and imaginary arrays.
 */
namespace binfmt {

inline constexpr char grid_magic[8] = {'N', 'V', 'C', 'A', 'V', 'G', 'R', 'D'};
inline constexpr char profile_magic[8] = {'N', 'V', 'C', 'A', 'V', 'P', 'R', 'F'};
inline constexpr char kspace_magic[8] = {'N', 'V', 'C', 'A', 'V', 'F', 'F', 'K'};

inline void header(std::ostream& os, const char (&magic)[8], std::array<int, 3> n, double cell, vec3 origin,
                   std::uint32_t arrays)
{
    os.write(magic, 8);
    detail::write_pod<std::uint32_t>(os, 1);
    for (int a = 0; a < 3; ++a) {
        detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(n[a] + 1));
    }
    detail::write_pod<double>(os, cell);
    for (int a = 0; a < 3; ++a) {
        detail::write_pod<double>(os, origin[a]);
    }
    detail::write_pod<std::uint32_t>(os, arrays);
}

} // namespace binfmt

inline void write_grid_binary(std::ostream& os, const permittivity_grid& g)
{
    binfmt::header(os, binfmt::grid_magic, g.n, g.cell_nm, g.origin_nm, 3);
    for (const auto& e : g.eps) {
        os.write(reinterpret_cast<const char*>(e.data()), static_cast<std::streamsize>(e.size() * sizeof(double)));
    }
}

inline permittivity_grid read_grid_binary(std::istream& is)
{
    char magic[8];
    is.read(magic, 8);
    require(is && std::equal(magic, magic + 8, binfmt::grid_magic), "grid file: bad magic");
    require(detail::read_pod<std::uint32_t>(is) == 1, "grid file: unsupported version");
    permittivity_grid g;
    for (int a = 0; a < 3; ++a) {
        g.n[a] = static_cast<int>(detail::read_pod<std::uint64_t>(is)) - 1;
    }
    g.cell_nm = detail::read_pod<double>(is);
    for (int a = 0; a < 3; ++a) {
        g.origin_nm[a] = detail::read_pod<double>(is);
    }
    require(detail::read_pod<std::uint32_t>(is) == 3, "grid file: expected three arrays");
    for (auto& e : g.eps) {
        e.resize(g.size());
        is.read(reinterpret_cast<char*>(e.data()), static_cast<std::streamsize>(e.size() * sizeof(double)));
    }
    require(static_cast<bool>(is), "grid file: truncated");
    return g;
}

/// Profile file: ex, ey, ez as (re, im) pairs of arrays, then the eps arrays.
inline void write_profile_binary(std::ostream& os, const mode_profile& p)
{
    binfmt::header(os, binfmt::profile_magic, p.n, p.cell_nm, p.origin_nm, 9);
    std::vector<double> buf(p.size());
    for (int c = 0; c < 3; ++c) {
        for (int part = 0; part < 2; ++part) {
            for (std::size_t i = 0; i < buf.size(); ++i) {
                buf[i] = part == 0 ? p.e[c][i].real() : p.e[c][i].imag();
            }
            os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
        }
    }
    for (int c = 0; c < 3; ++c) {
        os.write(reinterpret_cast<const char*>(p.eps[c].data()),
                 static_cast<std::streamsize>(p.eps[c].size() * sizeof(double)));
    }
}

/// (kx, ky) power grid: magic, version, uint64 n_k, float64 k0, float64 wavelength, n_k^2 float64.
inline void write_kspace_binary(std::ostream& os, const farfield& ff)
{
    os.write(binfmt::kspace_magic, 8);
    detail::write_pod<std::uint32_t>(os, 1);
    detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(ff.n_k));
    detail::write_pod<double>(os, ff.k0);
    detail::write_pod<double>(os, ff.wavelength_nm);
    os.write(reinterpret_cast<const char*>(ff.k_power.data()),
             static_cast<std::streamsize>(ff.k_power.size() * sizeof(double)));
}

inline json composite_to_json(const composite_fit_result& r)
{
    json params;
    json unc;
    const auto v = r.params.to_array();
    for (int i = 0; i < composite_params::count; ++i) {
        params[composite_params::names[static_cast<std::size_t>(i)]] = v[static_cast<std::size_t>(i)];
        unc[composite_params::names[static_cast<std::size_t>(i)]] = r.uncertainty[static_cast<std::size_t>(i)];
    }
    params["background_reference_nm"] = r.params.background.reference_nm;
    return {{"parameters", params},
            {"uncertainties", unc},
            {"residual_norm", r.residual_norm},
            {"reduced_chi2", r.reduced_chi2},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"status", r.status},
            {"warnings", r.warnings}};
}

inline json saturation_to_json(const saturation_fit_result& r)
{
    return {{"y_inf_counts", r.y_inf},
            {"y_inf_err", r.y_inf_err},
            {"p_sat_uw", r.p_sat_uw},
            {"p_sat_err_uw", r.p_sat_err},
            {"a_counts_per_uw", r.a},
            {"a_err", r.a_err},
            {"a_fixed_zero", r.a_fixed},
            {"p_sat_fixed", r.p_sat_fixed},
            {"p_sat_identifiable", r.p_sat_identifiable},
            {"residual_norm", r.residual_norm},
            {"converged", r.converged},
            {"status", r.status}};
}

inline json mode_to_json(const resonant_mode& m)
{
    json j = {{"wavelength_nm", m.wavelength_nm},
              {"frequency_per_nm", m.frequency},
              {"q", m.decay_unresolved ? json(nullptr) : json(m.q)},
              {"decay_unresolved", m.decay_unresolved},
              {"amplitude", m.amplitude},
              {"probes", m.probes},
              {"label", m.label}};
    if (m.volume) {
        j["volume"] = {{"nm3", m.volume->nm3},
                       {"cubic_wavelengths_in_slab", m.volume->cubic_wavelengths},
                       {"um3", m.volume->um3}};
    }
    return j;
}

} // namespace nvcav

#endif // NVCAV_IO_HPP
