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

#ifndef NVCAV_PIPELINE_HPP
#define NVCAV_PIPELINE_HPP

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <fftw3.h>

#include "nvcav/core.hpp"
#include "nvcav/farfield.hpp"
#include "nvcav/fdtd.hpp"
#include "nvcav/g2.hpp"
#include "nvcav/geometry.hpp"
#include "nvcav/io.hpp"
#include "nvcav/mode.hpp"
#include "nvcav/parallel.hpp"
#include "nvcav/purcell.hpp"
#include "nvcav/spectro_fit.hpp"
#include "nvcav/synthetic.hpp"

namespace nvcav {

inline constexpr const char* version_string = "0.1.0";

struct emitter_config
{
    std::optional<vec3> position_nm;   ///< empty: the energy maximum
    std::optional<vec3> orientation;   ///< empty: optimal at the position
    std::optional<double> wavelength_nm; ///< empty: on resonance
    std::vector<double> detunings_nm{-1.0, -0.5, 0.0, 0.5, 1.0};
};

struct farfield_config
{
    double na = 0.9;
    std::optional<double> height_above_slab_nm; ///< empty: one wavelength
    bool reference = true;
    std::int64_t reference_ringdown_steps = 4000;
    farfield_options grid;
};

struct sweep_config
{
    std::vector<double> lattice_constants_nm;
    std::vector<double> hole_radii_nm;
    double target_wavelength_nm = 637.0;
    double tolerance_nm = 15.0;
};

struct run_config
{
    std::optional<cavity_design> design; ///< empty: vacuum box
    vec3 vacuum_size_nm{1200.0, 1200.0, 1200.0};
    double vacuum_cell_nm = 20.0;
    double resolution = 10.0; ///< cells per lattice period
    boundary_spec boundary;
    std::array<bool, 3> mirrored{false, false, false};
    std::vector<source_spec> sources;
    std::set<std::string> analyses{"modes"};
    mode_search_options search;
    profile_options profile;
    emitter_config emitter;
    farfield_config far;
    sweep_config sweep;
    std::uint64_t seed = 0;
    double courant = 0.5;
    bool write_grid = true;

    double cell_nm() const
    {
        return design ? design->lattice.lattice_constant_nm / resolution : vacuum_cell_nm;
    }
};

inline const std::vector<std::string>& analysis_names()
{
    static const std::vector<std::string> n{"modes", "profile", "purcell", "farfield"};
    return n;
}

/// Prerequisites of every analysis.
inline void check_analysis_chain(const std::set<std::string>& a)
{
    for (const auto& name : a) {
        if (std::find(analysis_names().begin(), analysis_names().end(), name) == analysis_names().end()) {
            throw config_error("analyses", "unknown analysis '" + name + "'");
        }
    }
    auto need = [&](const char* what, const char* pre) {
        if (a.count(what) && !a.count(pre)) {
            throw config_error("analyses", std::string(what) + " requires " + pre);
        }
    };
    need("profile", "modes");
    need("purcell", "modes");
    need("purcell", "profile");
    need("farfield", "modes");
    need("farfield", "profile");
}

inline run_config run_config_from_json(const json& j, const std::string& base_dir = ".")
{
    using namespace cfg;
    only_keys(j, "", {"design", "design_file", "vacuum", "resolution_cells_per_period", "boundary", "sources",
                      "analyses", "search", "profile", "emitter", "farfield", "sweep", "seed", "courant", "write_grid"});
    run_config c;
    if (j.contains("design") && j.contains("design_file")) {
        throw config_error("design_file", "give either design or design_file, not both");
    }
    if (j.contains("design_file")) {
        std::filesystem::path p = need<std::string>(j, "design_file", "");
        if (p.is_relative()) {
            p = std::filesystem::path(base_dir) / p;
        }
        if (!std::filesystem::exists(p)) {
            throw config_error("design_file", "file not found: " + p.string());
        }
        c.design = design_from_json(read_json_file(p.string()), "design_file");
    } else if (j.contains("design")) {
        c.design = design_from_json(j.at("design"));
    }
    if (j.contains("vacuum")) {
        if (c.design) {
            throw config_error("vacuum", "a run has either a design or a vacuum box");
        }
        const auto& v = j.at("vacuum");
        only_keys(v, "vacuum", {"size_nm", "cell_nm"});
        c.vacuum_size_nm = get_vec3(v, "size_nm", "vacuum", c.vacuum_size_nm);
        c.vacuum_cell_nm = get<double>(v, "cell_nm", "vacuum", c.vacuum_cell_nm);
        if (c.vacuum_cell_nm <= 0.0) {
            throw config_error("vacuum.cell_nm", "must be > 0");
        }
    } else if (!c.design) {
        throw config_error("design", "missing: give design, design_file or vacuum");
    }
    c.resolution = get<double>(j, "resolution_cells_per_period", "", c.resolution);
    if (c.resolution < 10.0) {
        throw config_error("resolution_cells_per_period", "must be >= 10");
    }
    if (j.contains("boundary")) {
        c.boundary = boundary_from_json(j.at("boundary"));
        if (j.at("boundary").contains("mirrors")) {
            const auto& m = j.at("boundary").at("mirrors");
            const char* axes[3] = {"x", "y", "z"};
            for (int a = 0; a < 3; ++a) {
                c.mirrored[a] = m.contains(axes[a]) && m.at(axes[a]) != "none";
            }
        }
    }
    if (c.design) {
        if (!(j.contains("boundary") && j.at("boundary").contains("pml_cells"))) {
            c.boundary.pml_cells = c.design->domain.pml_cells;
        }
        checked("boundary", [&] { c.boundary.validate(); });
    }
    if (j.contains("sources")) {
        const auto& s = j.at("sources");
        if (!s.is_array()) {
            throw config_error("sources", "expected an array");
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
            c.sources.push_back(source_from_json(s[i], "sources[" + std::to_string(i) + "]"));
        }
    }
    c.search.sources = c.sources;
    if (j.contains("analyses")) {
        const auto& a = j.at("analyses");
        if (!a.is_array()) {
            throw config_error("analyses", "expected an array of names");
        }
        c.analyses.clear();
        for (const auto& v : a) {
            if (!v.is_string()) {
                throw config_error("analyses", "expected an array of names");
            }
            c.analyses.insert(v.get<std::string>());
        }
    }
    check_analysis_chain(c.analyses);
    if (j.contains("search")) {
        const auto& s = j.at("search");
        only_keys(s, "search", {"wavelength_min_nm", "wavelength_max_nm", "ringdown_steps", "min_q", "probes_nm",
                                "min_probe_fraction"});
        c.search.wavelength_min_nm = get<double>(s, "wavelength_min_nm", "search", c.search.wavelength_min_nm);
        c.search.wavelength_max_nm = get<double>(s, "wavelength_max_nm", "search", c.search.wavelength_max_nm);
        c.search.ringdown_steps = get<std::int64_t>(s, "ringdown_steps", "search", c.search.ringdown_steps);
        c.search.min_q = get<double>(s, "min_q", "search", c.search.min_q);
        c.search.min_probe_fraction = get<double>(s, "min_probe_fraction", "search", c.search.min_probe_fraction);
        if (s.contains("probes_nm")) {
            const auto& p = s.at("probes_nm");
            if (!p.is_array()) {
                throw config_error("search.probes_nm", "expected an array of points");
            }
            for (std::size_t i = 0; i < p.size(); ++i) {
                json wrap = {{"p", p[i]}};
                c.search.probes_nm.push_back(get_vec3(wrap, "p", "search.probes_nm[" + std::to_string(i) + "]", {}));
            }
        }
        if (!(c.search.wavelength_max_nm > c.search.wavelength_min_nm && c.search.wavelength_min_nm > 0.0)) {
            throw config_error("search", "need 0 < wavelength_min_nm < wavelength_max_nm");
        }
        if (c.search.ringdown_steps < 64) {
            throw config_error("search.ringdown_steps", "must be >= 64");
        }
    }
    if (j.contains("profile")) {
        const auto& p = j.at("profile");
        only_keys(p, "profile", {"bandwidth", "ringdown_steps", "source"});
        c.profile.bandwidth = get<double>(p, "bandwidth", "profile", c.profile.bandwidth);
        c.profile.ringdown_steps = get<std::int64_t>(p, "ringdown_steps", "profile", c.profile.ringdown_steps);
        if (p.contains("source")) {
            c.profile.source = source_from_json(p.at("source"), "profile.source");
        }
        if (!(c.profile.bandwidth > 0.0 && c.profile.bandwidth < 1.0)) {
            throw config_error("profile.bandwidth", "must be in (0, 1)");
        }
    }
    if (j.contains("emitter")) {
        const auto& e = j.at("emitter");
        only_keys(e, "emitter", {"position_nm", "orientation", "wavelength_nm", "detunings_nm"});
        if (e.contains("position_nm")) {
            c.emitter.position_nm = get_vec3(e, "position_nm", "emitter", {});
        }
        if (e.contains("orientation")) {
            vec3 o = get_vec3(e, "orientation", "emitter", {});
            if (!(norm(o) > 0.0)) {
                throw config_error("emitter.orientation", "must be non-zero");
            }
            c.emitter.orientation = (1.0 / norm(o)) * o;
        }
        if (e.contains("wavelength_nm")) {
            c.emitter.wavelength_nm = get<double>(e, "wavelength_nm", "emitter", 0.0);
        }
        c.emitter.detunings_nm = get<std::vector<double>>(e, "detunings_nm", "emitter", c.emitter.detunings_nm);
    }
    if (j.contains("farfield")) {
        const auto& f = j.at("farfield");
        only_keys(f, "farfield", {"na", "height_above_slab_nm", "reference", "reference_ringdown_steps", "n_theta",
                                  "n_phi", "n_k", "taper"});
        c.far.na = get<double>(f, "na", "farfield", c.far.na);
        if (!(c.far.na > 0.0 && c.far.na <= 1.0)) {
            throw config_error("farfield.na", "must be in (0, 1]");
        }
        if (f.contains("height_above_slab_nm")) {
            c.far.height_above_slab_nm = get<double>(f, "height_above_slab_nm", "farfield", 0.0);
        }
        c.far.reference = get<bool>(f, "reference", "farfield", c.far.reference);
        c.far.reference_ringdown_steps =
            get<std::int64_t>(f, "reference_ringdown_steps", "farfield", c.far.reference_ringdown_steps);
        c.far.grid.n_theta = get<int>(f, "n_theta", "farfield", c.far.grid.n_theta);
        c.far.grid.n_phi = get<int>(f, "n_phi", "farfield", c.far.grid.n_phi);
        c.far.grid.n_k = get<int>(f, "n_k", "farfield", c.far.grid.n_k);
        c.far.grid.taper = get<double>(f, "taper", "farfield", c.far.grid.taper);
        if (!(c.far.grid.taper >= 0.0 && c.far.grid.taper < 1.0)) {
            throw config_error("farfield.taper", "must be in [0, 1)");
        }
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        only_keys(s, "sweep", {"lattice_constant_nm", "hole_radius_nm", "target_wavelength_nm", "tolerance_nm"});
        c.sweep.lattice_constants_nm = get<std::vector<double>>(s, "lattice_constant_nm", "sweep", {});
        c.sweep.hole_radii_nm = get<std::vector<double>>(s, "hole_radius_nm", "sweep", {});
        c.sweep.target_wavelength_nm = get<double>(s, "target_wavelength_nm", "sweep", c.sweep.target_wavelength_nm);
        c.sweep.tolerance_nm = get<double>(s, "tolerance_nm", "sweep", c.sweep.tolerance_nm);
    }
    c.seed = get<std::uint64_t>(j, "seed", "", c.seed);
    c.courant = get<double>(j, "courant", "", c.courant);
    c.write_grid = get<bool>(j, "write_grid", "", c.write_grid);
    return c;
}

/// Canonical form of a configuration; the run id hashes its serialisation.
inline json run_config_to_json(const run_config& c)
{
    json j;
    if (c.design) {
        j["design"] = design_to_json(*c.design);
    } else {
        j["vacuum"] = {{"size_nm", cfg::to_json(c.vacuum_size_nm)}, {"cell_nm", c.vacuum_cell_nm}};
    }
    j["resolution_cells_per_period"] = c.resolution;
    j["boundary"] = boundary_to_json(c.boundary);
    const char* axes[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
        j["boundary"]["mirrors"][axes[a]] = c.mirrored[a] ? boundary_name(c.boundary.faces[a][0]) : "none";
    }
    j["sources"] = json::array();
    for (const auto& s : c.sources) {
        j["sources"].push_back(source_to_json(s));
    }
    j["analyses"] = json(std::vector<std::string>(c.analyses.begin(), c.analyses.end()));
    json probes = json::array();
    for (const auto& p : c.search.probes_nm) {
        probes.push_back(cfg::to_json(p));
    }
    j["search"] = {{"wavelength_min_nm", c.search.wavelength_min_nm},
                   {"wavelength_max_nm", c.search.wavelength_max_nm},
                   {"ringdown_steps", c.search.ringdown_steps},
                   {"min_q", c.search.min_q},
                   {"min_probe_fraction", c.search.min_probe_fraction},
                   {"probes_nm", probes}};
    j["profile"] = {{"bandwidth", c.profile.bandwidth}, {"ringdown_steps", c.profile.ringdown_steps}};
    if (c.profile.source) {
        j["profile"]["source"] = source_to_json(*c.profile.source);
    }
    json em = {{"detunings_nm", c.emitter.detunings_nm}};
    if (c.emitter.position_nm) {
        em["position_nm"] = cfg::to_json(*c.emitter.position_nm);
    }
    if (c.emitter.orientation) {
        em["orientation"] = cfg::to_json(*c.emitter.orientation);
    }
    if (c.emitter.wavelength_nm) {
        em["wavelength_nm"] = *c.emitter.wavelength_nm;
    }
    j["emitter"] = em;
    j["farfield"] = {{"na", c.far.na},
                     {"reference", c.far.reference},
                     {"reference_ringdown_steps", c.far.reference_ringdown_steps},
                     {"n_theta", c.far.grid.n_theta},
                     {"n_phi", c.far.grid.n_phi},
                     {"n_k", c.far.grid.n_k},
                     {"taper", c.far.grid.taper}};
    if (c.far.height_above_slab_nm) {
        j["farfield"]["height_above_slab_nm"] = *c.far.height_above_slab_nm;
    }
    if (!c.sweep.lattice_constants_nm.empty() || !c.sweep.hole_radii_nm.empty()) {
        j["sweep"] = {{"lattice_constant_nm", c.sweep.lattice_constants_nm},
                      {"hole_radius_nm", c.sweep.hole_radii_nm},
                      {"target_wavelength_nm", c.sweep.target_wavelength_nm},
                      {"tolerance_nm", c.sweep.tolerance_nm}};
    }
    j["seed"] = c.seed;
    j["courant"] = c.courant;
    j["write_grid"] = c.write_grid;
    return j;
}

inline std::string run_id(const json& canonical) { return hex64(fnv1a(canonical.dump())); }

/// Grid for a run: the rasterised design or a vacuum box.
inline permittivity_grid make_grid(const run_config& c)
{
    if (c.design) {
        return build_permittivity(*c.design, c.cell_nm(), c.mirrored);
    }
    permittivity_grid g;
    g.cell_nm = c.vacuum_cell_nm;
    for (int a = 0; a < 3; ++a) {
        const int pml = c.boundary.pml_thickness(a, 0);
        const int half = static_cast<int>(std::ceil(c.vacuum_size_nm[a] / 2.0 / g.cell_nm - 1e-9));
        if (c.mirrored[a]) {
            g.n[a] = half;
            g.origin_nm[a] = 0.0;
            g.pml_cells[a] = {0, c.boundary.pml_thickness(a, 1)};
        } else {
            g.n[a] = 2 * half;
            g.origin_nm[a] = -half * g.cell_nm;
            g.pml_cells[a] = {pml, c.boundary.pml_thickness(a, 1)};
        }
        g.mirrored[a] = c.mirrored[a];
    }
    for (auto& e : g.eps) {
        e.assign(g.size(), 1.0);
    }
    return g;
}

/// Writes files under one run directory and records their checksums.
class artifact_writer
{
public:
    explicit artifact_writer(std::filesystem::path dir) : m_dir(std::move(dir))
    {
        std::filesystem::create_directories(m_dir);
    }

    const std::filesystem::path& dir() const { return m_dir; }

    template <class Fn>
    void write(const std::string& rel, Fn&& fn)
    {
        std::ostringstream os(std::ios::binary);
        fn(os);
        const std::string data = os.str();
        const auto path = m_dir / rel;
        std::filesystem::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary);
        f.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!f) {
            throw std::runtime_error("cannot write " + path.string());
        }
        m_sums[rel] = hex64(fnv1a(data.data(), data.size()));
    }

    void write_json(const std::string& rel, const json& j)
    {
        write(rel, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

    /// Manifest of everything written so far; contains no timestamps.
    void finish(const std::string& command, const json& canonical, const json& extra = json::object())
    {
        json files = json::object();
        for (const auto& [k, v] : m_sums) {
            files[k] = v;
        }
        json versions = {{"nvcav", version_string},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                       std::to_string(EIGEN_MINOR_VERSION)},
                         {"fftw", std::string(fftw_version)},
                         {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
        json m = {{"command", command},
                  {"run_id", run_id(canonical)},
                  {"config", canonical},
                  {"versions", versions},
                  {"checksum", "fnv1a-64"},
                  {"files", files}};
        for (auto it = extra.begin(); it != extra.end(); ++it) {
            m[it.key()] = it.value();
        }
        const std::string data = m.dump(2) + "\n";
        std::ofstream f(m_dir / "manifest.json", std::ios::binary);
        f.write(data.data(), static_cast<std::streamsize>(data.size()));
    }

private:
    std::filesystem::path m_dir;
    std::map<std::string, std::string> m_sums;
};

struct simulate_result
{
    std::string run_id;
    std::filesystem::path dir;
    std::vector<resonant_mode> modes;
    std::optional<resonant_mode> dominant;
    std::optional<mode_profile> profile;
    std::optional<vec3> argmax_nm;
    bool argmax_in_first_ring_hole = false;
    std::optional<purcell_breakdown> purcell;
    std::optional<double> collection_efficiency;
    std::optional<double> detection_ratio;
    bool ok = true;
    std::vector<std::string> messages;
};

namespace detail {

inline simulation_options sim_options(const run_config& c, unsigned threads)
{
    simulation_options o;
    o.courant = c.courant;
    o.threads = threads;
    return o;
}

inline json vec_json(vec3 v) { return cfg::to_json(v); }

// Far field of a narrowband dipole in the defect-free lattice, used as the
// reference for directly detected emission. Symmetry planes through the
// dipole become mirror walls: PMC when the dipole lies in the plane, PEC
// when it is normal to it.
inline farfield reference_farfield(const run_config& c, const emitter_spec& em, double frequency, double plane_z,
                                   unsigned threads)
{
    cavity_design ref = *c.design;
    ref.defect = {defect_kind::none, 0.0};
    ref.nanocrystal.reset();
    std::array<bool, 3> mir{false, false, false};
    boundary_spec b = c.boundary;
    for (int a = 0; a < 3; ++a) {
        b.faces[a] = {boundary_kind::pml, boundary_kind::pml};
        if (em.position_nm[a] != 0.0) {
            continue;
        }
        const double along = std::abs(em.orientation[a]);
        if (along == 0.0) {
            mir[a] = true;
            b.faces[a][0] = boundary_kind::pmc;
        } else if (along == 1.0) {
            mir[a] = true;
            b.faces[a][0] = boundary_kind::pec;
        }
    }
    const auto g = build_permittivity(ref, c.cell_nm(), mir);
    source_spec s;
    s.position_nm = em.position_nm;
    s.orientation = em.orientation;
    s.wavelength_nm = 1.0 / frequency;
    s.bandwidth = c.profile.bandwidth;
    fdtd_simulation sim(g, {s}, b, sim_options(c, threads));
    const int k = static_cast<int>(std::lround((plane_z - g.origin_nm[2]) / g.cell_nm));
    require(k >= 0 && k <= g.n[2], "farfield: collection plane outside the reference domain");
    // the whole pulse contributes: the reference has no resonance to ring
    const auto id = sim.add_dft({component::ex, component::ey}, {0, 0, k}, {g.n[0], g.n[1], k}, {frequency}, 0);
    sim.run(sim.sources_off_step() + c.far.reference_ringdown_steps, {});

    mode_profile p = mode_profile::on_grid(g, frequency);
    for (int a = 0; a < 3; ++a) {
        p.mirror_kind[a] = b.faces[a][0];
    }
    const auto& d = sim.dft(id);
    for (int comp = 0; comp < 2; ++comp) {
        for (int i = 0; i <= g.n[0]; ++i) {
            for (int j = 0; j <= g.n[1]; ++j) {
                p.e[comp][p.index(i, j, k)] = d.data[comp][0][d.index(i, j, k)];
            }
        }
    }
    auto opt = c.far.grid;
    opt.threads = threads;
    return near_to_far(slice_from_profile(p, plane_z), opt);
}

} // namespace detail

/**
 * Runs the requested analyses for one configuration and writes
 * out/<run-id>/ with a manifest.
 */
inline simulate_result cmd_simulate(const run_config& c, const std::filesystem::path& out_root, unsigned threads,
                                    const std::string& command = "simulate")
{
    const json canonical = run_config_to_json(c);
    simulate_result res;
    res.run_id = run_id(canonical);
    res.dir = out_root / res.run_id;
    std::filesystem::remove_all(res.dir);
    artifact_writer w(res.dir);
    w.write_json("config.json", canonical);

    const permittivity_grid g = make_grid(c);
    if (c.write_grid) {
        w.write("grid.bin", [&](std::ostream& os) { write_grid_binary(os, g); });
    }
    const auto opts = detail::sim_options(c, threads);

    json modes_doc;
    modes_doc["modes"] = json::array();
    if (c.analyses.count("modes")) {
        const auto sr = find_resonances(g, c.boundary, c.search, opts);
        res.modes = sr.modes;
        for (const auto& r : sr.records) {
            w.write("monitors/" + r.name + ".csv", [&](std::ostream& os) { write_monitor_csv(os, r); });
        }
        res.dominant = dominant_mode(res.modes);
        modes_doc["convergence"] = {{"cell_nm", g.cell_nm},
                                    {"resolution_cells_per_period", c.design ? c.resolution : 0.0},
                                    {"courant", c.courant},
                                    {"steps", sr.steps},
                                    {"window_start_step", sr.window_start},
                                    {"ringdown_steps", c.search.ringdown_steps},
                                    {"grid_cells", {g.n[0], g.n[1], g.n[2]}}};
    }

    if (c.analyses.count("profile") && res.dominant) {
        profile_options po = c.profile;
        for (const auto& m : res.modes) {
            if (m.frequency != res.dominant->frequency) {
                po.other_frequencies.push_back(m.frequency);
            }
        }
        try {
            res.profile = extract_mode_profile(g, res.dominant->frequency, c.boundary, po, opts);
            const double n_slab = c.design ? c.design->lattice.slab_index : 1.0;
            res.dominant->volume = mode_volume(*res.profile, n_slab);
            for (auto& m : res.modes) {
                if (m.frequency == res.dominant->frequency) {
                    m.volume = res.dominant->volume;
                }
            }
            res.argmax_nm = res.profile->argmax_position();
            json prof = {{"argmax_nm", detail::vec_json(*res.argmax_nm)},
                         {"eps_at_argmax", res.profile->eps_at(*res.argmax_nm)},
                         {"localization", localization_metric(*res.profile, res.dominant->wavelength_nm)}};
            if (c.design) {
                const auto h = first_ring_hole_containing(c.design->lattice, c.design->defect, *res.argmax_nm);
                res.argmax_in_first_ring_hole = h.has_value();
                prof["argmax_in_first_ring_hole"] = res.argmax_in_first_ring_hole;
                if (h) {
                    prof["hole_center_nm"] = {h->x, h->y};
                }
            }
            modes_doc["profile"] = prof;
            w.write("profile.bin", [&](std::ostream& os) { write_profile_binary(os, *res.profile); });
        } catch (const invalid_input& e) {
            res.ok = false;
            res.messages.push_back(std::string("profile: ") + e.what());
        }
    } else if (c.analyses.count("profile")) {
        res.ok = false;
        res.messages.push_back("profile: no resonance found");
    }

    for (const auto& m : res.modes) {
        modes_doc["modes"].push_back(mode_to_json(m));
    }
    if (res.dominant) {
        modes_doc["dominant"] = mode_to_json(*res.dominant);
    }
    w.write_json("modes.json", modes_doc);

    if (c.analyses.count("purcell") && res.profile && res.dominant) {
        try {
            emitter_spec em;
            em.position_nm = c.emitter.position_nm ? *c.emitter.position_nm : *res.argmax_nm;
            em.orientation = c.emitter.orientation ? *c.emitter.orientation
                                                   : optimal_orientation(*res.profile, em.position_nm);
            em.wavelength_nm = c.emitter.wavelength_nm ? *c.emitter.wavelength_nm : res.dominant->wavelength_nm;
            res.purcell = purcell_factor(*res.dominant, *res.profile, em);
            json pj = {{"emitter", {{"position_nm", detail::vec_json(em.position_nm)},
                                    {"orientation", detail::vec_json(em.orientation)},
                                    {"wavelength_nm", em.wavelength_nm}}},
                       {"purcell_factor", res.purcell->factor},
                       {"orientation_factor", res.purcell->orientation},
                       {"local_field_factor", res.purcell->local},
                       {"detuning_factor", res.purcell->detuning},
                       {"n_host", res.purcell->n_host}};
            w.write_json("purcell.json", pj);

            // position x orientation x detuning table
            std::vector<vec3> positions{em.position_nm};
            if (c.design) {
                for (const auto& h : first_ring_holes(c.design->lattice, c.design->defect)) {
                    const vec3 p{h.x, h.y, 0.0};
                    if (res.profile->contains(p)) {
                        positions.push_back(p);
                    }
                }
            }
            w.write("purcell_sweep.csv", [&](std::ostream& os) {
                os << "x_nm,y_nm,z_nm,dx,dy,dz,emitter_wavelength_nm,purcell\n" << std::setprecision(10);
                for (const auto& p : positions) {
                    std::vector<vec3> dirs{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
                    if (std::norm(res.profile->field_at(p)[0]) + std::norm(res.profile->field_at(p)[1]) +
                            std::norm(res.profile->field_at(p)[2]) > 0.0) {
                        dirs.push_back(optimal_orientation(*res.profile, p));
                    }
                    for (const auto& d : dirs) {
                        for (double dl : c.emitter.detunings_nm) {
                            emitter_spec e2 = em;
                            e2.position_nm = p;
                            e2.orientation = d;
                            e2.wavelength_nm = res.dominant->wavelength_nm + dl;
                            const auto b = purcell_factor(*res.dominant, *res.profile, e2);
                            os << p.x << ',' << p.y << ',' << p.z << ',' << d.x << ',' << d.y << ',' << d.z << ','
                               << e2.wavelength_nm << ',' << b.factor << '\n';
                        }
                    }
                }
            });
        } catch (const invalid_input& e) {
            res.ok = false;
            res.messages.push_back(std::string("purcell: ") + e.what());
        }
    }

    if (c.analyses.count("farfield") && res.profile && res.dominant) {
        try {
            require(c.design.has_value(), "farfield: a design is required");
            const double lam = res.dominant->wavelength_nm;
            const double h = c.far.height_above_slab_nm ? *c.far.height_above_slab_nm : lam;
            const double z = c.design->lattice.slab_thickness_nm / 2.0 + h;
            auto fopt = c.far.grid;
            fopt.threads = threads;
            const auto ff = near_to_far(slice_from_profile(*res.profile, z), fopt);
            res.collection_efficiency = collection_efficiency(ff, c.far.na);
            w.write("farfield.csv", [&](std::ostream& os) { write_farfield_csv(os, ff); });
            w.write("farfield_k.bin", [&](std::ostream& os) { write_kspace_binary(os, ff); });
            json fj = {{"wavelength_nm", lam},
                       {"plane_z_nm", z},
                       {"na", c.far.na},
                       {"total_upward_power", ff.total_power},
                       {"collection_efficiency", *res.collection_efficiency}};
            if (c.far.reference) {
                emitter_spec em;
                em.position_nm = c.emitter.position_nm ? *c.emitter.position_nm : *res.argmax_nm;
                em.orientation = c.emitter.orientation ? *c.emitter.orientation
                                                       : optimal_orientation(*res.profile, em.position_nm);
                const auto ref = detail::reference_farfield(c, em, res.dominant->frequency, z, threads);
                res.detection_ratio = detection_ratio(ref, ff, c.far.na);
                fj["reference_collection_efficiency"] = collection_efficiency(ref, c.far.na);
                fj["detection_ratio"] = *res.detection_ratio;
                fj["reference_model"] = "dipole at the emitter position in the defect-free lattice";
                w.write("farfield_reference.csv", [&](std::ostream& os) { write_farfield_csv(os, ref); });
            }
            w.write_json("farfield.json", fj);
        } catch (const invalid_input& e) {
            res.ok = false;
            res.messages.push_back(std::string("farfield: ") + e.what());
        }
    }

    json status = {{"ok", res.ok}, {"messages", res.messages}};
    w.write_json("status.json", status);
    w.finish(command, canonical);
    return res;
}

struct sweep_row
{
    double a_nm = 0.0;
    double r_nm = 0.0;
    double wavelength_nm = std::numeric_limits<double>::quiet_NaN();
    double q = std::numeric_limits<double>::quiet_NaN();
    double v = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
    std::vector<resonant_mode> modes;
};

struct sweep_result
{
    std::string run_id;
    std::filesystem::path dir;
    std::vector<sweep_row> rows;
    std::optional<std::size_t> best;
};

/// Row with the largest Q among successful rows within the wavelength tolerance.
inline std::optional<std::size_t> select_best(const std::vector<sweep_row>& rows, double target_nm, double tol_nm)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.status != "ok" || !(std::abs(r.wavelength_nm - target_nm) < tol_nm)) {
            continue;
        }
        if (!best || r.q > rows[*best].q) {
            best = i;
        }
    }
    return best;
}

/// Evaluates one design point: dominant resonance, and its volume when a
/// profile is requested.
inline sweep_row evaluate_point(const run_config& c, double a, double r, unsigned threads)
{
    sweep_row row;
    row.a_nm = a;
    row.r_nm = r;
    try {
        run_config pc = c;
        pc.design->lattice.lattice_constant_nm = a;
        pc.design->lattice.hole_radius_nm = r;
        pc.design->validate();
        const auto g = make_grid(pc);
        const auto opts = detail::sim_options(pc, threads);
        const auto sr = find_resonances(g, pc.boundary, pc.search, opts);
        row.modes = sr.modes;
        const auto dm = dominant_mode(sr.modes);
        if (!dm) {
            row.status = "no resonance";
            return row;
        }
        row.wavelength_nm = dm->wavelength_nm;
        row.q = dm->q;
        if (pc.analyses.count("profile")) {
            profile_options po = pc.profile;
            for (const auto& m : sr.modes) {
                if (m.frequency != dm->frequency) {
                    po.other_frequencies.push_back(m.frequency);
                }
            }
            const auto p = extract_mode_profile(g, dm->frequency, pc.boundary, po, opts);
            row.v = mode_volume(p, pc.design->lattice.slab_index).cubic_wavelengths;
        }
    } catch (const std::exception& e) {
        row.status = std::string("failed: ") + e.what();
    }
    return row;
}

/**
 * Grid sweep over lattice constant and hole radius. Points run in a worker
 * pool with single-threaded engines; rows come back in parameter order.
 */
inline sweep_result cmd_sweep(const run_config& c, const std::filesystem::path& out_root, unsigned threads)
{
    require(c.design.has_value(), "sweep: a design is required");
    auto as = c.sweep.lattice_constants_nm;
    auto rs = c.sweep.hole_radii_nm;
    if (as.empty()) {
        as.push_back(c.design->lattice.lattice_constant_nm);
    }
    if (rs.empty()) {
        rs.push_back(c.design->lattice.hole_radius_nm);
    }
    const json canonical = run_config_to_json(c);
    sweep_result res;
    res.run_id = run_id(canonical);
    res.dir = out_root / res.run_id;
    std::filesystem::remove_all(res.dir);
    artifact_writer w(res.dir);
    w.write_json("config.json", canonical);

    std::vector<std::pair<double, double>> points;
    for (double a : as) {
        for (double r : rs) {
            points.push_back({a, r});
        }
    }
    res.rows.resize(points.size());
    const unsigned point_threads = points.size() == 1 ? threads : 1;
    worker_pool pool(points.size() == 1 ? 1 : threads);
    pool.for_chunks(0, static_cast<long>(points.size()), static_cast<long>(points.size()), [&](long lo, long hi) {
        for (long i = lo; i < hi; ++i) {
            res.rows[static_cast<std::size_t>(i)] = evaluate_point(c, points[static_cast<std::size_t>(i)].first,
                                                                   points[static_cast<std::size_t>(i)].second,
                                                                   point_threads);
        }
    });
    res.best = select_best(res.rows, c.sweep.target_wavelength_nm, c.sweep.tolerance_nm);

    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const auto& r = res.rows[i];
        std::ostringstream name;
        name << "points/" << std::setw(3) << std::setfill('0') << i << "_a" << r.a_nm << "_r" << r.r_nm;
        json modes = json::array();
        for (const auto& m : r.modes) {
            modes.push_back(mode_to_json(m));
        }
        json pj = {{"a_nm", r.a_nm}, {"r_nm", r.r_nm}, {"status", r.status}, {"modes", modes}};
        pj["wavelength_nm"] = std::isfinite(r.wavelength_nm) ? json(r.wavelength_nm) : json(nullptr);
        pj["q"] = std::isfinite(r.q) ? json(r.q) : json(nullptr);
        pj["v_cubic_wavelengths"] = std::isfinite(r.v) ? json(r.v) : json(nullptr);
        w.write_json(name.str() + "/point.json", pj);
    }

    w.write("sweep.csv", [&](std::ostream& os) {
        os << "a_nm,r_nm,lambda_nm,q,v_cubic_wavelengths,status\n" << std::setprecision(12);
        for (const auto& r : res.rows) {
            os << r.a_nm << ',' << r.r_nm << ',' << r.wavelength_nm << ',' << r.q << ',' << r.v << ',' << r.status
               << '\n';
        }
    });
    json sj = {{"objective", {{"maximize", "q"},
                              {"target_wavelength_nm", c.sweep.target_wavelength_nm},
                              {"tolerance_nm", c.sweep.tolerance_nm}}},
               {"points", points.size()}};
    if (res.best) {
        const auto& b = res.rows[*res.best];
        sj["best"] = {{"a_nm", b.a_nm}, {"r_nm", b.r_nm}, {"wavelength_nm", b.wavelength_nm}, {"q", b.q}};
    } else {
        sj["best"] = nullptr;
    }
    w.write_json("sweep.json", sj);
    w.finish("sweep", canonical);
    return res;
}

} // namespace nvcav

#endif // NVCAV_PIPELINE_HPP
