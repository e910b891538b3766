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

#ifndef NVCAV_MODE_HPP
#define NVCAV_MODE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nvcav/core.hpp"
#include "nvcav/fdtd.hpp"
#include "nvcav/geometry.hpp"
#include "nvcav/harminv.hpp"

namespace nvcav {

using cvec3 = std::array<std::complex<double>, 3>;

/**
 * Time-harmonic electric field of one resonance on the staggered grid,
 * together with the permittivity it was computed in.
 *
 * Storage mirrors permittivity_grid: component c sample (i, j, k) sits at
 * origin + cell * (idx + 1/2 along c). Mirrored axes start at the symmetry
 * plane; `mirror_kind` records whether the plane was an electric (PEC) or a
 * magnetic (PMC) wall so that the field can be unfolded to negative
 * coordinates.
 */
class mode_profile
{
public:
    double cell_nm = 0.0;
    std::array<int, 3> n{0, 0, 0};
    vec3 origin_nm{};
    std::array<bool, 3> mirrored{false, false, false};
    std::array<boundary_kind, 3> mirror_kind{boundary_kind::pec, boundary_kind::pec, boundary_kind::pec};
    std::array<std::array<int, 2>, 3> pml_cells{};
    double frequency = 0.0;
    std::array<std::vector<std::complex<double>>, 3> e;
    std::array<std::vector<double>, 3> eps;
    bool normalized = false;

    std::size_t size() const { return static_cast<std::size_t>(n[0] + 1) * (n[1] + 1) * (n[2] + 1); }
    std::size_t index(int i, int j, int k) const
    {
        return (static_cast<std::size_t>(i) * (n[1] + 1) + j) * (n[2] + 1) + k;
    }
    double wavelength_nm() const { return 1.0 / frequency; }

    /// Empty profile on the layout of a permittivity grid.
    static mode_profile on_grid(const permittivity_grid& g, double frequency)
    {
        mode_profile p;
        p.cell_nm = g.cell_nm;
        p.n = g.n;
        p.origin_nm = g.origin_nm;
        p.mirrored = g.mirrored;
        p.pml_cells = g.pml_cells;
        p.frequency = frequency;
        for (int c = 0; c < 3; ++c) {
            p.eps[c] = g.eps[c];
            p.e[c].assign(g.size(), 0.0);
        }
        return p;
    }

    /// Profile sampled from closed-form permittivity and field functions.
    template <class EpsFn, class FieldFn>
    static mode_profile from_functions(double cell_nm, std::array<int, 3> n, vec3 origin, double frequency,
                                       EpsFn&& eps_fn, FieldFn&& field_fn)
    {
        mode_profile p;
        p.cell_nm = cell_nm;
        p.n = n;
        p.origin_nm = origin;
        p.frequency = frequency;
        for (int c = 0; c < 3; ++c) {
            p.eps[c].assign(p.size(), 1.0);
            p.e[c].assign(p.size(), 0.0);
            for (int i = 0; i <= n[0]; ++i) {
                for (int j = 0; j <= n[1]; ++j) {
                    for (int k = 0; k <= n[2]; ++k) {
                        const vec3 r = p.sample_position(c, i, j, k);
                        p.eps[c][p.index(i, j, k)] = eps_fn(r);
                        p.e[c][p.index(i, j, k)] = field_fn(r)[c];
                    }
                }
            }
        }
        return p;
    }

    vec3 sample_position(int c, int i, int j, int k) const
    {
        const std::array<int, 3> idx{i, j, k};
        vec3 r;
        for (int a = 0; a < 3; ++a) {
            r[a] = origin_nm[a] + (idx[a] + (a == c ? 0.5 : 0.0)) * cell_nm;
        }
        return r;
    }

    vec3 node_position(int i, int j, int k) const
    {
        return {origin_nm[0] + i * cell_nm, origin_nm[1] + j * cell_nm, origin_nm[2] + k * cell_nm};
    }

    double sample_energy(int c, std::size_t idx) const { return eps[c][idx] * std::norm(e[c][idx]); }

    /// eps |E|^2 at grid node (i, j, k): each component averaged over its
    /// two neighbouring samples along its own axis.
    double node_energy(int i, int j, int k) const
    {
        const std::array<int, 3> idx{i, j, k};
        double u = 0.0;
        for (int c = 0; c < 3; ++c) {
            auto lower = idx;
            lower[c] -= 1;
            const bool has_hi = idx[c] <= n[c] - 1;
            bool has_lo = lower[c] >= 0;
            double hi_v = has_hi ? sample_energy(c, index(idx[0], idx[1], idx[2])) : 0.0;
            double lo_v = has_lo ? sample_energy(c, index(lower[0], lower[1], lower[2])) : 0.0;
            if (!has_lo && mirrored[c] && has_hi) {
                lo_v = hi_v;
                has_lo = true;
            }
            const int count = int(has_lo) + int(has_hi);
            u += count ? (hi_v + lo_v) / count : 0.0;
        }
        return u;
    }

    /// |E|^2 at a node with the same averaging as node_energy.
    double node_intensity(int i, int j, int k) const
    {
        const std::array<int, 3> idx{i, j, k};
        double u = 0.0;
        for (int c = 0; c < 3; ++c) {
            auto lower = idx;
            lower[c] -= 1;
            const bool has_hi = idx[c] <= n[c] - 1;
            const bool has_lo = lower[c] >= 0;
            const double hi_v = has_hi ? std::norm(e[c][index(idx[0], idx[1], idx[2])]) : 0.0;
            double lo_v = has_lo ? std::norm(e[c][index(lower[0], lower[1], lower[2])]) : 0.0;
            int count = int(has_lo) + int(has_hi);
            if (!has_lo && mirrored[c] && has_hi) {
                lo_v = hi_v;
                count = 2;
            }
            u += count ? (hi_v + lo_v) / count : 0.0;
        }
        return u;
    }

    /// Permittivity at a node, averaged over the six adjacent E samples.
    double node_eps(int i, int j, int k) const
    {
        const std::array<int, 3> idx{i, j, k};
        double s = 0.0;
        int count = 0;
        for (int c = 0; c < 3; ++c) {
            auto lower = idx;
            lower[c] -= 1;
            if (idx[c] <= n[c] - 1) {
                s += eps[c][index(idx[0], idx[1], idx[2])];
                ++count;
            }
            if (lower[c] >= 0) {
                s += eps[c][index(lower[0], lower[1], lower[2])];
                ++count;
            }
        }
        return count ? s / count : 1.0;
    }

    bool node_in_interior(int i, int j, int k) const
    {
        const std::array<int, 3> idx{i, j, k};
        for (int a = 0; a < 3; ++a) {
            if (idx[a] < pml_cells[a][0] || idx[a] > n[a] - pml_cells[a][1]) {
                return false;
            }
        }
        return true;
    }

    /// Largest node energy density outside the PML and the node holding it.
    std::pair<double, std::array<int, 3>> max_energy() const { return max_of(&mode_profile::node_energy); }

    /// Largest node |E|^2 outside the PML and the node holding it.
    std::pair<double, std::array<int, 3>> max_intensity() const { return max_of(&mode_profile::node_intensity); }

    std::pair<double, std::array<int, 3>> max_of(double (mode_profile::*fn)(int, int, int) const) const
    {
        double best = -1.0;
        std::array<int, 3> arg{0, 0, 0};
        for (int i = 0; i <= n[0]; ++i) {
            for (int j = 0; j <= n[1]; ++j) {
                for (int k = 0; k <= n[2]; ++k) {
                    if (!node_in_interior(i, j, k)) {
                        continue;
                    }
                    const double u = (this->*fn)(i, j, k);
                    if (u > best) {
                        best = u;
                        arg = {i, j, k};
                    }
                }
            }
        }
        return {best, arg};
    }

    vec3 argmax_position() const
    {
        const auto [u, idx] = max_energy();
        return node_position(idx[0], idx[1], idx[2]);
    }

    /// Scales the field so that the maximum node energy density is 1.
    void normalize()
    {
        const double m = max_energy().first;
        require(m > 0.0, "mode_profile: field is identically zero");
        const double s = 1.0 / std::sqrt(m);
        for (auto& comp : e) {
            for (auto& v : comp) {
                v *= s;
            }
        }
        normalized = true;
    }

    void scale(std::complex<double> s)
    {
        for (auto& comp : e) {
            for (auto& v : comp) {
                v *= s;
            }
        }
        normalized = false;
    }

    /// Whether p lies in the modelled domain once mirrored axes are unfolded.
    bool contains(vec3 p) const
    {
        for (int a = 0; a < 3; ++a) {
            const double x = mirrored[a] ? std::abs(p[a]) : p[a];
            if (x < origin_nm[a] || x > origin_nm[a] + n[a] * cell_nm) {
                return false;
            }
        }
        return true;
    }

    bool in_interior(vec3 p) const
    {
        for (int a = 0; a < 3; ++a) {
            const double x = mirrored[a] ? std::abs(p[a]) : p[a];
            if (x < origin_nm[a] + pml_cells[a][0] * cell_nm ||
                x > origin_nm[a] + (n[a] - pml_cells[a][1]) * cell_nm) {
                return false;
            }
        }
        return true;
    }

    /// Complex field at an arbitrary point by trilinear interpolation of each
    /// component on its own sample lattice.
    cvec3 field_at(vec3 p) const
    {
        require(contains(p), "mode_profile: point outside the profile domain");
        std::array<double, 3> sign{1.0, 1.0, 1.0};
        for (int a = 0; a < 3; ++a) {
            if (mirrored[a] && p[a] < 0.0) {
                p[a] = -p[a];
                for (int c = 0; c < 3; ++c) {
                    const bool tangential = c != a;
                    const bool odd = mirror_kind[a] == boundary_kind::pec ? tangential : !tangential;
                    if (odd) {
                        sign[c] = -sign[c];
                    }
                }
            }
        }
        cvec3 out{};
        for (int c = 0; c < 3; ++c) {
            out[c] = sign[c] * interpolate([&](int i, int j, int k) { return e[c][index(i, j, k)]; }, c, p);
        }
        return out;
    }

    /// Node energy density interpolated to an arbitrary point (unfolded).
    double energy_at(vec3 p) const
    {
        require(contains(p), "mode_profile: point outside the profile domain");
        for (int a = 0; a < 3; ++a) {
            if (mirrored[a]) {
                p[a] = std::abs(p[a]);
            }
        }
        return interpolate([&](int i, int j, int k) { return node_energy(i, j, k); }, -1, p);
    }

    double eps_at(vec3 p) const
    {
        require(contains(p), "mode_profile: point outside the profile domain");
        for (int a = 0; a < 3; ++a) {
            if (mirrored[a]) {
                p[a] = std::abs(p[a]);
            }
        }
        return interpolate([&](int i, int j, int k) { return node_eps(i, j, k); }, -1, p);
    }

private:
    // Trilinear interpolation on the lattice of component c (c < 0: nodes).
    template <class Get>
    auto interpolate(Get&& get, int c, vec3 p) const -> decltype(get(0, 0, 0))
    {
        std::array<int, 3> i0{};
        std::array<double, 3> w{};
        for (int a = 0; a < 3; ++a) {
            const double h = a == c ? 0.5 : 0.0;
            const int top = a == c ? n[a] - 1 : n[a];
            double x = (p[a] - origin_nm[a]) / cell_nm - h;
            x = std::clamp(x, 0.0, static_cast<double>(top));
            int lo = std::min(static_cast<int>(std::floor(x)), std::max(top - 1, 0));
            i0[a] = lo;
            w[a] = top == 0 ? 0.0 : x - lo;
        }
        using T = decltype(get(0, 0, 0));
        T acc{};
        for (int di = 0; di < 2; ++di) {
            for (int dj = 0; dj < 2; ++dj) {
                for (int dk = 0; dk < 2; ++dk) {
                    const double wt = (di ? w[0] : 1.0 - w[0]) * (dj ? w[1] : 1.0 - w[1]) *
                                      (dk ? w[2] : 1.0 - w[2]);
                    if (wt == 0.0) {
                        continue;
                    }
                    acc += wt * get(i0[0] + di, i0[1] + dj, i0[2] + dk);
                }
            }
        }
        return acc;
    }
};

struct mode_volume_result
{
    double nm3 = 0.0;
    double cubic_wavelengths = 0.0; ///< in units of (lambda_c / n_slab)^3
    double um3 = 0.0;
};

/**
 * V = sum(eps |E|^2) cell^3 / max(eps |E|^2), summed over the samples outside
 * the PML. Samples off a mirror plane count once for every image.
 */
inline mode_volume_result mode_volume(const mode_profile& p, double n_slab)
{
    require(p.normalized, "mode_volume: profile is not normalized");
    const double m = p.max_energy().first;
    require(std::abs(m - 1.0) < 1e-9, "mode_volume: profile is not normalized");
    require(n_slab >= 1.0, "mode_volume: n_slab must be >= 1");
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const std::array<int, 3> top{c == 0 ? p.n[0] - 1 : p.n[0], c == 1 ? p.n[1] - 1 : p.n[1],
                                     c == 2 ? p.n[2] - 1 : p.n[2]};
        for (int i = 0; i <= top[0]; ++i) {
            for (int j = 0; j <= top[1]; ++j) {
                double row = 0.0;
                for (int k = 0; k <= top[2]; ++k) {
                    const std::array<int, 3> idx{i, j, k};
                    double w = 1.0;
                    bool inside = true;
                    for (int a = 0; a < 3; ++a) {
                        const double x = idx[a] + (a == c ? 0.5 : 0.0);
                        if (x < p.pml_cells[a][0] || x > p.n[a] - p.pml_cells[a][1]) {
                            inside = false;
                        }
                        if (p.mirrored[a] && x > 0.0) {
                            w *= 2.0;
                        }
                    }
                    if (inside) {
                        row += w * p.sample_energy(c, p.index(i, j, k));
                    }
                }
                total += row;
            }
        }
    }
    mode_volume_result v;
    v.nm3 = total * p.cell_nm * p.cell_nm * p.cell_nm;
    const double lam = p.wavelength_nm() / n_slab;
    v.cubic_wavelengths = v.nm3 / (lam * lam * lam);
    v.um3 = v.nm3 * 1e-9;
    return v;
}

/**
 * Share of the energy within `radius_nm` (in-plane) of the energy maximum.
 * Close to 1 for a confined mode, small for a field spread over the slab.
 */
inline double localization_metric(const mode_profile& p, double radius_nm)
{
    const vec3 peak = p.argmax_position();
    double inside = 0.0;
    double total = 0.0;
    for (int i = 0; i <= p.n[0]; ++i) {
        for (int j = 0; j <= p.n[1]; ++j) {
            for (int k = 0; k <= p.n[2]; ++k) {
                if (!p.node_in_interior(i, j, k)) {
                    continue;
                }
                const vec3 r = p.node_position(i, j, k);
                // unfolded images of the node
                double mult = 1.0;
                for (int a = 0; a < 3; ++a) {
                    if (p.mirrored[a] && r[a] > 0.0) {
                        mult *= 2.0;
                    }
                }
                const double u = mult * p.node_energy(i, j, k);
                total += u;
                const double dx = r[0] - peak[0];
                const double dy = r[1] - peak[1];
                if (p.mirrored[0] || p.mirrored[1]) {
                    // distance to the nearest image of the peak
                    const double ax = p.mirrored[0] ? std::abs(r[0]) - std::abs(peak[0]) : dx;
                    const double ay = p.mirrored[1] ? std::abs(r[1]) - std::abs(peak[1]) : dy;
                    if (ax * ax + ay * ay <= radius_nm * radius_nm) {
                        inside += u;
                    }
                } else if (dx * dx + dy * dy <= radius_nm * radius_nm) {
                    inside += u;
                }
            }
        }
    }
    return total > 0.0 ? inside / total : 0.0;
}

struct resonant_mode
{
    double wavelength_nm = 0.0;
    double frequency = 0.0;
    double q = 0.0;
    double amplitude = 0.0; ///< summed |amplitude| over the probes that saw it
    int probes = 0;         ///< number of probes reporting the resonance
    bool decay_unresolved = false;
    std::string label;
    std::optional<mode_volume_result> volume;
};

struct mode_search_options
{
    double wavelength_min_nm = 560.0;
    double wavelength_max_nm = 760.0;
    /// Broadband excitation; empty selects an off-axis in-plane dipole.
    std::vector<source_spec> sources;
    /// Probe points; empty selects a default set near the defect.
    std::vector<vec3> probes_nm;
    std::int64_t ringdown_steps = 8000;
    double min_q = 20.0;
    /// Fraction of probes that must report a resonance for it to be kept.
    double min_probe_fraction = 0.5;
    /// Relative frequency tolerance when matching resonances across probes.
    double match_tolerance = 1e-3;
    harminv_options harminv;
};

struct mode_search_result
{
    std::vector<resonant_mode> modes;
    std::vector<monitor_record> records;
    std::int64_t window_start = 0;
    std::int64_t steps = 0;
};

/// Human-readable symmetry label from the mirror walls of a run.
inline std::string symmetry_label(const permittivity_grid& g, const boundary_spec& b)
{
    std::string s;
    for (int a = 0; a < 3; ++a) {
        if (!g.mirrored[a]) {
            continue;
        }
        if (!s.empty()) {
            s += ",";
        }
        s += std::string(1, "xyz"[a]) + "=" + boundary_name(b.faces[a][0]);
    }
    return s.empty() ? "full" : "mirror[" + s + "]";
}

namespace detail {

inline std::vector<vec3> default_probes(const permittivity_grid& g)
{
    const double a = g.design ? g.design->lattice.lattice_constant_nm : 200.0;
    std::vector<vec3> pts = {{0.27 * a, 0.16 * a, 0.0}, {0.55 * a, 0.35 * a, 0.0},
                             {0.1 * a, 0.75 * a, 0.0},  {0.9 * a, 0.05 * a, 0.0}};
    std::vector<vec3> out;
    for (auto p : pts) {
        for (int ax = 0; ax < 3; ++ax) {
            if (!g.mirrored[ax] && g.lo(ax) > p[ax]) {
                p[ax] = g.lo(ax);
            }
        }
        if (g.inside_interior(p)) {
            out.push_back(p);
        }
    }
    return out;
}

inline source_spec default_search_source(const permittivity_grid& g, double lam_center, double bandwidth)
{
    const double a = g.design ? g.design->lattice.lattice_constant_nm : 200.0;
    source_spec s;
    s.position_nm = {0.185 * a, 0.115 * a, 0.0};
    s.orientation = {std::sqrt(0.5), std::sqrt(0.5), 0.0};
    s.wavelength_nm = lam_center;
    s.bandwidth = bandwidth;
    return s;
}

} // namespace detail

/**
 * Broadband ring-down run followed by harmonic inversion of every probe.
 * Resonances seen by enough probes are merged; the window opens two pulse
 * widths after the last source has switched off.
 */
inline mode_search_result find_resonances(const permittivity_grid& g, const boundary_spec& b,
                                          const mode_search_options& opt, const simulation_options& sim_opt = {})
{
    require(opt.wavelength_max_nm > opt.wavelength_min_nm && opt.wavelength_min_nm > 0.0,
            "find_resonances: invalid wavelength band");
    require(opt.ringdown_steps >= 64, "find_resonances: ring-down too short");
    const double f_lo = 1.0 / opt.wavelength_max_nm;
    const double f_hi = 1.0 / opt.wavelength_min_nm;
    auto sources = opt.sources;
    if (sources.empty()) {
        const double fc = 0.5 * (f_lo + f_hi);
        const double bw = std::min(0.9, 1.2 * (f_hi - f_lo) / fc);
        sources.push_back(detail::default_search_source(g, 1.0 / fc, bw));
    }
    auto probes = opt.probes_nm.empty() ? detail::default_probes(g) : opt.probes_nm;
    require(!probes.empty(), "find_resonances: no probe inside the interior");

    fdtd_simulation sim(g, sources, b, sim_opt);
    std::vector<monitor_spec> mons;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        mons.push_back({"p" + std::to_string(i) + "_ex", component::ex, {probes[i]}});
        mons.push_back({"p" + std::to_string(i) + "_ey", component::ey, {probes[i]}});
    }
    double width = 0.0;
    for (const auto& s : sources) {
        width = std::max(width, s.width(sim.dt_nm()));
    }
    const std::int64_t off = sim.sources_off_step();
    const auto start = off + static_cast<std::int64_t>(std::ceil(2.0 * width));

    mode_search_result res;
    res.records = sim.run(start + opt.ringdown_steps, mons);
    res.window_start = start;
    res.steps = start + opt.ringdown_steps;

    struct hit
    {
        harmonic_mode m;
        std::size_t probe;
    };
    std::vector<hit> hits;
    for (std::size_t r = 0; r < res.records.size(); ++r) {
        bool silent = true;
        for (double v : res.records[r].samples) {
            if (v != 0.0) {
                silent = false;
                break;
            }
        }
        if (silent) {
            continue;
        }
        for (const auto& m : harmonic_inversion(res.records[r], f_lo, f_hi, start + 1, opt.harminv)) {
            if (m.q >= opt.min_q) {
                hits.push_back({m, r / 2});
            }
        }
    }
    std::sort(hits.begin(), hits.end(), [](const hit& a, const hit& b) { return a.m.frequency < b.m.frequency; });

    const std::string label = symmetry_label(g, b);
    std::size_t i = 0;
    while (i < hits.size()) {
        std::size_t j = i + 1;
        while (j < hits.size() &&
               hits[j].m.frequency - hits[j - 1].m.frequency < opt.match_tolerance * hits[j - 1].m.frequency) {
            ++j;
        }
        std::vector<bool> seen(probes.size(), false);
        resonant_mode rm;
        double best = -1.0;
        for (std::size_t h = i; h < j; ++h) {
            seen[hits[h].probe] = true;
            const double amp = std::abs(hits[h].m.amplitude);
            rm.amplitude += amp;
            if (amp > best) {
                best = amp;
                rm.frequency = hits[h].m.frequency;
                rm.q = hits[h].m.q;
                rm.decay_unresolved = hits[h].m.decay_unresolved;
            }
        }
        rm.probes = static_cast<int>(std::count(seen.begin(), seen.end(), true));
        rm.wavelength_nm = 1.0 / rm.frequency;
        rm.label = label;
        if (rm.probes >= std::max(1.0, std::ceil(opt.min_probe_fraction * static_cast<double>(probes.size())))) {
            res.modes.push_back(rm);
        }
        i = j;
    }
    return res;
}

/// The resonance with the largest summed amplitude, if any.
inline std::optional<resonant_mode> dominant_mode(const std::vector<resonant_mode>& modes)
{
    std::optional<resonant_mode> best;
    for (const auto& m : modes) {
        if (!best || m.amplitude > best->amplitude) {
            best = m;
        }
    }
    return best;
}

struct profile_options
{
    /// Position and orientation of the narrowband source; wavelength is
    /// replaced by the mode wavelength. Empty selects the search default.
    std::optional<source_spec> source;
    std::vector<source_spec> extra_sources;
    double bandwidth = 0.02;
    /// Number of ring-down steps over which the DFT accumulates.
    std::int64_t ringdown_steps = 4000;
    /// Other known resonances, used to reject overlapping windows.
    std::vector<double> other_frequencies;
    /// Half-width of the narrowband window in source standard deviations.
    double window_sigmas = 2.0;
};

/**
 * Narrowband run at the resonance frequency. The running DFT of the three E
 * components accumulates over the ring-down only and is normalised so that
 * max eps |E|^2 = 1.
 */
inline mode_profile extract_mode_profile(const permittivity_grid& g, double frequency, const boundary_spec& b,
                                         const profile_options& opt = {}, const simulation_options& sim_opt = {})
{
    require(frequency > 0.0, "extract_mode_profile: frequency must be > 0");
    require(opt.bandwidth > 0.0 && opt.bandwidth < 1.0, "extract_mode_profile: bandwidth must be in (0, 1)");
    const double half_window = opt.window_sigmas * opt.bandwidth * frequency;
    for (double f : opt.other_frequencies) {
        if (f != frequency && std::abs(f - frequency) <= half_window) {
            throw invalid_input("extract_mode_profile: degenerate modes at " + std::to_string(1.0 / frequency) +
                                " nm and " + std::to_string(1.0 / f) +
                                " nm share the narrowband window; select one with the source orientation "
                                "or a symmetry mirror");
        }
    }
    source_spec src = opt.source ? *opt.source : detail::default_search_source(g, 1.0 / frequency, opt.bandwidth);
    src.wavelength_nm = 1.0 / frequency;
    src.bandwidth = opt.bandwidth;
    std::vector<source_spec> sources{src};
    for (auto s : opt.extra_sources) {
        s.wavelength_nm = src.wavelength_nm;
        s.bandwidth = src.bandwidth;
        sources.push_back(s);
    }
    fdtd_simulation sim(g, sources, b, sim_opt);
    const std::int64_t off = sim.sources_off_step();
    const auto id = sim.add_dft({component::ex, component::ey, component::ez}, {0, 0, 0}, g.n, {frequency}, off);
    sim.run(off + opt.ringdown_steps, {});

    mode_profile p = mode_profile::on_grid(g, frequency);
    for (int a = 0; a < 3; ++a) {
        if (g.mirrored[a]) {
            p.mirror_kind[a] = b.faces[a][0];
        }
    }
    const auto& d = sim.dft(id);
    for (int c = 0; c < 3; ++c) {
        p.e[c] = d.data[c][0];
    }
    p.normalize();
    return p;
}

} // namespace nvcav

#endif // NVCAV_MODE_HPP
