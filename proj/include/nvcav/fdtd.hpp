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

#ifndef NVCAV_FDTD_HPP
#define NVCAV_FDTD_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nvcav/core.hpp"
#include "nvcav/geometry.hpp"
#include "nvcav/parallel.hpp"

namespace nvcav {

enum class boundary_kind { pml, pec, pmc, periodic };

inline const char* boundary_name(boundary_kind k)
{
    switch (k) {
    case boundary_kind::pml: return "pml";
    case boundary_kind::pec: return "pec";
    case boundary_kind::pmc: return "pmc";
    case boundary_kind::periodic: return "periodic";
    }
    return "?";
}

inline boundary_kind boundary_from_name(const std::string& s)
{
    for (auto k : {boundary_kind::pml, boundary_kind::pec, boundary_kind::pmc, boundary_kind::periodic}) {
        if (s == boundary_name(k)) {
            return k;
        }
    }
    throw invalid_input("boundary: unknown kind '" + s + "'");
}

/**
 * Per-face boundary conditions. PML layers are convolutional (CFS) PMLs
 * backed by a PEC wall. PEC and PMC faces double as symmetry mirrors.
 * Periodic faces must come in pairs and are limited to x and y.
 */
struct boundary_spec
{
    std::array<std::array<boundary_kind, 2>, 3> faces{{{boundary_kind::pml, boundary_kind::pml},
                                                       {boundary_kind::pml, boundary_kind::pml},
                                                       {boundary_kind::pml, boundary_kind::pml}}};
    int pml_cells = 10;
    double grading_order = 3.0;
    /// Multiplier on the optimal polynomial-graded conductivity.
    double sigma_scale = 1.0;
    double kappa_max = 2.0;
    /// CFS shift alpha at the PML inner edge, in 1/nm.
    double alpha_max = 1.0e-3;

    bool any_pml() const
    {
        for (const auto& f : faces) {
            if (f[0] == boundary_kind::pml || f[1] == boundary_kind::pml) {
                return true;
            }
        }
        return false;
    }

    int pml_thickness(int a, int side) const
    {
        return faces[a][side] == boundary_kind::pml ? pml_cells : 0;
    }

    static boundary_spec closed_pec()
    {
        boundary_spec b;
        for (auto& f : b.faces) {
            f = {boundary_kind::pec, boundary_kind::pec};
        }
        return b;
    }

    void validate() const
    {
        if (any_pml()) {
            require(pml_cells >= 8, "boundary: PML thickness must be >= 8 cells");
        }
        require(grading_order >= 1.0, "boundary: grading order must be >= 1");
        require(sigma_scale > 0.0 && kappa_max >= 1.0 && alpha_max >= 0.0,
                "boundary: invalid PML profile parameters");
        for (int a = 0; a < 3; ++a) {
            const bool p0 = faces[a][0] == boundary_kind::periodic;
            const bool p1 = faces[a][1] == boundary_kind::periodic;
            require(p0 == p1, "boundary: periodic faces must be paired");
            require(!(p0 && a == 2), "boundary: periodic z faces are not supported");
        }
    }
};

/**
 * Point-dipole soft current source with a Gaussian-enveloped sine
 * waveform. The fractional bandwidth sets the envelope width:
 * sigma_t = 1 / (2 pi bandwidth f0).
 */
struct source_spec
{
    vec3 position_nm{};
    vec3 orientation{0.0, 1.0, 0.0};
    double wavelength_nm = 637.0;
    double bandwidth = 0.2;
    double amplitude = 1.0;
    /// Optional explicit envelope width / delay in time steps.
    std::optional<double> width_steps;
    std::optional<double> delay_steps;

    void validate() const
    {
        require(is_unit(orientation, 1e-6), "source: orientation must be a unit vector");
        require(bandwidth > 0.0 && bandwidth < 1.0, "source: bandwidth must be in (0, 1)");
        require(wavelength_nm > 0.0, "source: wavelength_nm must be > 0");
    }

    double width(double dt) const
    {
        if (width_steps) {
            return *width_steps;
        }
        return 1.0 / (2.0 * pi * bandwidth / wavelength_nm) / dt;
    }
    double delay(double dt) const { return delay_steps ? *delay_steps : 6.0 * width(dt); }

    /// First step at which the envelope has decayed below exp(-18).
    std::int64_t off_step(double dt) const
    {
        return static_cast<std::int64_t>(std::ceil(delay(dt) + 6.0 * width(dt)));
    }

    /// Waveform at time t (in steps, may be fractional).
    double waveform(double t_steps, double dt) const
    {
        const double w = width(dt);
        const double tau = t_steps - delay(dt);
        const double f0 = 1.0 / wavelength_nm;
        return amplitude * std::exp(-0.5 * (tau / w) * (tau / w)) *
               std::sin(2.0 * pi * f0 * tau * dt);
    }
};

struct monitor_spec
{
    std::string name;
    component comp = component::ey;
    std::vector<vec3> positions_nm;
};

/// Sampled time series of one field component (summed over positions).
struct monitor_record
{
    std::string name;
    component comp = component::ey;
    std::vector<vec3> positions_nm;
    double dt_nm = 0.0;
    std::int64_t first_step = 0;
    std::vector<double> samples;
};

struct simulation_options
{
    double courant = 0.5;
    unsigned threads = 1;
    /// Full non-finite scan interval in steps.
    int stability_check_interval = 100;
};

/**
 * Running discrete Fourier transform of field components over an index box.
 * Accumulates sum F(t) exp(i 2 pi f t) dt for each frequency.
 */
struct dft_box
{
    std::vector<component> comps;
    std::array<int, 3> lo{};
    std::array<int, 3> hi{}; // inclusive
    std::vector<double> freqs;
    std::int64_t start_step = 0;
    /// data[comp][freq] -> box samples, k fastest
    std::vector<std::vector<std::vector<std::complex<double>>>> data;

    std::array<int, 3> extent() const
    {
        return {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
    }
    std::size_t size() const
    {
        const auto e = extent();
        return static_cast<std::size_t>(e[0]) * e[1] * e[2];
    }
    std::size_t index(int i, int j, int k) const
    {
        const auto e = extent();
        return (static_cast<std::size_t>(i - lo[0]) * e[1] + (j - lo[1])) * e[2] + (k - lo[2]);
    }
};

class fdtd_simulation
{
public:
    /// Prepares zero fields and all update coefficients.
    fdtd_simulation(const permittivity_grid& grid, std::vector<source_spec> sources,
                    boundary_spec boundary, simulation_options opt = {})
        : m_n(grid.n), m_cell(grid.cell_nm), m_origin(grid.origin_nm), m_boundary(boundary),
          m_opt(opt), m_sources(std::move(sources)), m_pool(std::make_unique<worker_pool>(opt.threads))
    {
        m_boundary.validate();
        require(opt.courant > 0.0 && opt.courant <= 1.0 / std::sqrt(3.0),
                "init_simulation: Courant factor exceeds the 3D stability limit 1/sqrt(3)");
        for (int a = 0; a < 3; ++a) {
            require(m_n[a] >= 1, "init_simulation: empty grid");
            require(m_n[a] > m_boundary.pml_thickness(a, 0) + m_boundary.pml_thickness(a, 1),
                    "init_simulation: grid too small for its PML layers");
            if (grid.mirrored[a]) {
                require(m_boundary.faces[a][0] == boundary_kind::pec ||
                            m_boundary.faces[a][0] == boundary_kind::pmc,
                        std::string("init_simulation: mirrored axis ") + "xyz"[a] +
                            " needs a PEC or PMC lower face");
            }
        }
        m_dt = opt.courant * m_cell;
        for (int a = 0; a < 3; ++a) {
            m_pad[a] = m_n[a] + 3;
        }
        m_stride = {static_cast<long>(m_pad[1]) * m_pad[2], m_pad[2], 1};
        const std::size_t total = static_cast<std::size_t>(m_pad[0]) * m_pad[1] * m_pad[2];
        for (auto& f : m_f) {
            f.assign(total, 0.0);
        }
        for (int c = 0; c < 3; ++c) {
            m_ce[c].assign(total, 0.0);
            for (int i = 0; i <= m_n[0]; ++i) {
                for (int j = 0; j <= m_n[1]; ++j) {
                    for (int k = 0; k <= m_n[2]; ++k) {
                        const double e = grid.at(c, i, j, k);
                        require(e >= 1.0 - 1e-12, "init_simulation: permittivity below 1");
                        m_ce[c][lin(i, j, k)] = opt.courant / e;
                    }
                }
            }
        }
        setup_ranges();
        setup_pml();
        setup_sources();
    }

    const std::array<int, 3>& dims() const { return m_n; }
    double cell_nm() const { return m_cell; }
    double dt_nm() const { return m_dt; }
    double courant() const { return m_opt.courant; }
    std::int64_t time_step() const { return m_step; }
    const boundary_spec& boundary() const { return m_boundary; }
    const vec3& origin_nm() const { return m_origin; }
    const std::vector<source_spec>& sources() const { return m_sources; }
    unsigned threads() const { return m_pool->size(); }

    /// Step after which every source envelope has decayed.
    std::int64_t sources_off_step() const
    {
        std::int64_t s = 0;
        for (const auto& src : m_sources) {
            s = std::max(s, src.off_step(m_dt));
        }
        return s;
    }

    /// Relative permittivity seen by E component c at sample (i, j, k).
    double eps(int c, int i, int j, int k) const { return m_opt.courant / m_ce[c][lin(i, j, k)]; }

    double field(component c, int i, int j, int k) const
    {
        return m_f[static_cast<int>(c)][lin(i, j, k)];
    }
    void set_field(component c, int i, int j, int k, double v)
    {
        m_f[static_cast<int>(c)][lin(i, j, k)] = v;
    }

    /// Physical position of sample (i, j, k) of a component.
    vec3 sample_position(component c, int i, int j, int k) const
    {
        const std::array<int, 3> idx{i, j, k};
        vec3 p;
        for (int a = 0; a < 3; ++a) {
            p[a] = m_origin[a] + (idx[a] + (is_half(c, a) ? 0.5 : 0.0)) * m_cell;
        }
        return p;
    }

    /// Nearest sample index of component c to a point.
    std::array<int, 3> nearest_sample(component c, vec3 p) const
    {
        std::array<int, 3> idx{};
        for (int a = 0; a < 3; ++a) {
            const double h = is_half(c, a) ? 0.5 : 0.0;
            int v = static_cast<int>(std::lround((p[a] - m_origin[a]) / m_cell - h));
            idx[a] = std::clamp(v, 0, is_half(c, a) ? m_n[a] - 1 : m_n[a]);
        }
        return idx;
    }

    /// Whether a point lies outside every PML layer.
    bool in_interior(vec3 p) const
    {
        for (int a = 0; a < 3; ++a) {
            const double lo = m_origin[a] + m_boundary.pml_thickness(a, 0) * m_cell;
            const double hi = m_origin[a] + (m_n[a] - m_boundary.pml_thickness(a, 1)) * m_cell;
            if (p[a] < lo || p[a] > hi) {
                return false;
            }
        }
        return true;
    }

    /// Advance one leapfrog step: H to n+1/2, then E to n+1 with sources.
    void step()
    {
        update_h();
        fill_h_ghosts();
        update_e();
        apply_sources();
        copy_periodic_e();
        ++m_step;
        if (m_opt.stability_check_interval > 0 && m_step % m_opt.stability_check_interval == 0) {
            check_finite();
        }
        for (auto& d : m_dfts) {
            accumulate_dft(d);
        }
    }

    /// Steps n_steps times, sampling every monitor after each step.
    std::vector<monitor_record> run(std::int64_t n_steps, const std::vector<monitor_spec>& monitors,
                                    const std::function<void(const fdtd_simulation&)>& observer = {})
    {
        require(n_steps >= 0, "run: negative step count");
        require(m_step + n_steps >= sources_off_step(),
                "run: step count does not cover the source pulse");
        std::vector<monitor_record> recs;
        std::vector<std::vector<std::size_t>> where;
        for (const auto& m : monitors) {
            monitor_record r;
            r.name = m.name;
            r.comp = m.comp;
            r.positions_nm = m.positions_nm;
            r.dt_nm = m_dt;
            r.first_step = m_step + 1;
            r.samples.reserve(static_cast<std::size_t>(n_steps));
            std::vector<std::size_t> idx;
            for (const auto& p : m.positions_nm) {
                const auto s = nearest_sample(m.comp, p);
                idx.push_back(lin(s[0], s[1], s[2]));
            }
            require(!idx.empty(), "run: monitor '" + m.name + "' has no positions");
            where.push_back(std::move(idx));
            recs.push_back(std::move(r));
        }
        for (std::int64_t s = 0; s < n_steps; ++s) {
            step();
            for (std::size_t m = 0; m < recs.size(); ++m) {
                const auto& f = m_f[static_cast<int>(recs[m].comp)];
                double v = 0.0;
                for (std::size_t idx : where[m]) {
                    v += f[idx];
                }
                if (!std::isfinite(v)) {
                    throw instability_error("fdtd: non-finite field at monitor '" + recs[m].name + "'",
                                            m_step);
                }
                recs[m].samples.push_back(v);
            }
            if (observer) {
                observer(*this);
            }
        }
        check_finite();
        return recs;
    }

    /// 1/2 sum(eps |E|^2 + |H|^2) cell^3 over the non-PML region.
    double total_field_energy() const
    {
        return 0.5 * m_cell * m_cell * m_cell * energy_sum(false);
    }

    /**
     * Discrete energy conserved exactly (to round-off) by the leapfrog
     * scheme in a lossless closed domain:
     * 1/2 sum(eps E^n . E^n + H^(n-1/2) . H^(n+1/2)) cell^3.
     * H^(n+1/2) is formed on the fly without advancing the state.
     */
    double discrete_energy() const
    {
        return 0.5 * m_cell * m_cell * m_cell * energy_sum(true);
    }

    /// Registers a running DFT; accumulation starts after `start_step`.
    std::size_t add_dft(std::vector<component> comps, std::array<int, 3> lo, std::array<int, 3> hi,
                        std::vector<double> freqs, std::int64_t start_step)
    {
        dft_box d;
        d.comps = std::move(comps);
        d.lo = lo;
        d.hi = hi;
        d.freqs = std::move(freqs);
        d.start_step = start_step;
        for (int a = 0; a < 3; ++a) {
            require(lo[a] >= 0 && hi[a] <= m_n[a] && lo[a] <= hi[a], "add_dft: box outside grid");
        }
        d.data.resize(d.comps.size());
        for (auto& per_comp : d.data) {
            per_comp.assign(d.freqs.size(), std::vector<std::complex<double>>(d.size()));
        }
        m_dfts.push_back(std::move(d));
        return m_dfts.size() - 1;
    }

    const dft_box& dft(std::size_t id) const { return m_dfts.at(id); }

    /// Binary checkpoint: header, six field arrays, then CPML state.
    void save_checkpoint(std::ostream& os) const;
    void load_checkpoint(std::istream& is);

    static bool is_half(component c, int a)
    {
        const int ca = component_axis(c);
        return is_electric(c) ? (ca == a) : (ca != a);
    }

private:
    struct box
    {
        std::array<int, 3> lo;
        std::array<int, 3> hi; // inclusive
        bool empty() const { return lo[0] > hi[0] || lo[1] > hi[1] || lo[2] > hi[2]; }
    };

    struct pml_term
    {
        int field;   // index into m_f
        int source;  // index into m_f
        int axis;    // derivative axis
        double sign; // final multiplier sign
        bool electric;
        std::array<box, 2> region; // lower / upper slab
        std::array<std::vector<double>, 2> psi;
    };

    std::size_t lin(int i, int j, int k) const
    {
        return static_cast<std::size_t>(i + 1) * m_stride[0] + static_cast<std::size_t>(j + 1) * m_stride[1] +
               static_cast<std::size_t>(k + 1);
    }

    bool node_updated_lo(int a) const
    {
        const auto f = m_boundary.faces[a][0];
        return f == boundary_kind::pmc || f == boundary_kind::periodic;
    }
    bool node_updated_hi(int a) const { return m_boundary.faces[a][1] == boundary_kind::pmc; }

    void setup_ranges()
    {
        for (int c = 0; c < 6; ++c) {
            const auto comp = static_cast<component>(c);
            box b{};
            for (int a = 0; a < 3; ++a) {
                if (is_half(comp, a)) {
                    b.lo[a] = 0;
                    b.hi[a] = m_n[a] - 1;
                } else if (is_electric(comp)) {
                    b.lo[a] = node_updated_lo(a) ? 0 : 1;
                    b.hi[a] = node_updated_hi(a) ? m_n[a] : m_n[a] - 1;
                } else {
                    b.lo[a] = 0;
                    b.hi[a] = m_n[a];
                }
            }
            m_range[c] = b;
        }
    }

    void setup_pml()
    {
        const double m = m_boundary.grading_order;
        const int p = m_boundary.pml_cells;
        const double d = p * m_cell;
        const double sigma_max = m_boundary.sigma_scale * 0.8 * (m + 1.0) / m_cell;
        for (int a = 0; a < 3; ++a) {
            for (int half = 0; half < 2; ++half) {
                auto& b = m_pml_b[a][half];
                auto& c = m_pml_c[a][half];
                auto& ik = m_pml_invk[a][half];
                const int count = m_n[a] + 1;
                b.assign(count, 0.0);
                c.assign(count, 0.0);
                ik.assign(count, 1.0);
                for (int i = 0; i < count; ++i) {
                    const double pos = i + (half ? 0.5 : 0.0);
                    double depth = 0.0;
                    if (m_boundary.faces[a][0] == boundary_kind::pml) {
                        depth = std::max(depth, (p - pos) * m_cell);
                    }
                    if (m_boundary.faces[a][1] == boundary_kind::pml) {
                        depth = std::max(depth, (pos - (m_n[a] - p)) * m_cell);
                    }
                    if (depth <= 0.0) {
                        continue;
                    }
                    const double x = std::min(depth / d, 1.0);
                    const double sigma = sigma_max * std::pow(x, m);
                    const double kappa = 1.0 + (m_boundary.kappa_max - 1.0) * std::pow(x, m);
                    const double alpha = m_boundary.alpha_max * (1.0 - x);
                    const double bb = std::exp(-(sigma / kappa + alpha) * m_dt);
                    b[i] = bb;
                    c[i] = sigma > 0.0 ? sigma / (sigma * kappa + kappa * kappa * alpha) * (bb - 1.0) : 0.0;
                    ik[i] = 1.0 / kappa;
                }
            }
        }

        // (field, derivative axis, source, sign) of each curl term
        struct term { component f; int axis; component g; double sign; };
        const std::array<term, 12> terms{{
            {component::ex, 1, component::hz, +1.0}, {component::ex, 2, component::hy, -1.0},
            {component::ey, 2, component::hx, +1.0}, {component::ey, 0, component::hz, -1.0},
            {component::ez, 0, component::hy, +1.0}, {component::ez, 1, component::hx, -1.0},
            {component::hx, 1, component::ez, -1.0}, {component::hx, 2, component::ey, +1.0},
            {component::hy, 2, component::ex, -1.0}, {component::hy, 0, component::ez, +1.0},
            {component::hz, 0, component::ey, -1.0}, {component::hz, 1, component::ex, +1.0},
        }};
        for (const auto& t : terms) {
            pml_term pt;
            pt.field = static_cast<int>(t.f);
            pt.source = static_cast<int>(t.g);
            pt.axis = t.axis;
            pt.sign = t.sign;
            pt.electric = is_electric(t.f);
            bool any = false;
            for (int side = 0; side < 2; ++side) {
                box r = m_range[pt.field];
                if (m_boundary.faces[t.axis][side] != boundary_kind::pml) {
                    r.lo[0] = 1;
                    r.hi[0] = 0;
                    pt.region[side] = r;
                    continue;
                }
                const bool half = is_half(t.f, t.axis);
                if (side == 0) {
                    // positions with depth > 0: node i < p, half i < p
                    r.hi[t.axis] = std::min(r.hi[t.axis], p - 1);
                } else {
                    r.lo[t.axis] = std::max(r.lo[t.axis], half ? m_n[t.axis] - p : m_n[t.axis] - p + 1);
                }
                pt.region[side] = r;
                if (!r.empty()) {
                    std::size_t sz = 1;
                    for (int a = 0; a < 3; ++a) {
                        sz *= static_cast<std::size_t>(r.hi[a] - r.lo[a] + 1);
                    }
                    pt.psi[side].assign(sz, 0.0);
                    any = true;
                }
            }
            if (any) {
                m_pml.push_back(std::move(pt));
            }
        }
    }

    struct compiled_source
    {
        int comp;
        std::size_t idx;
        double weight;
        std::size_t spec;
    };

    void setup_sources()
    {
        for (std::size_t s = 0; s < m_sources.size(); ++s) {
            const auto& src = m_sources[s];
            src.validate();
            require(in_interior(src.position_nm), "init_simulation: source lies in the PML or outside the grid");
            for (int c = 0; c < 3; ++c) {
                const double w = src.orientation[c];
                if (w == 0.0) {
                    continue;
                }
                const auto comp = static_cast<component>(c);
                const auto at = nearest_sample(comp, src.position_nm);
                for (int a = 0; a < 3; ++a) {
                    require(at[a] >= m_range[c].lo[a] && at[a] <= m_range[c].hi[a],
                            "init_simulation: source sits on a fixed boundary sample");
                }
                m_compiled.push_back({c, lin(at[0], at[1], at[2]), w, s});
            }
        }
    }

    template <class Fn>
    void for_box(const box& b, Fn&& fn)
    {
        if (b.empty()) {
            return;
        }
        m_pool->for_range(b.lo[0], b.hi[0] + 1, [&](long i0, long i1) {
            for (long i = i0; i < i1; ++i) {
                for (int j = b.lo[1]; j <= b.hi[1]; ++j) {
                    fn(static_cast<int>(i), j, lin(static_cast<int>(i), j, b.lo[2]), b.hi[2] - b.lo[2] + 1);
                }
            }
        });
    }

    void update_h()
    {
        const double s = m_opt.courant;
        const long sx = m_stride[0];
        const long sy = m_stride[1];
        {
            double* hx = m_f[3].data();
            const double* ey = m_f[1].data();
            const double* ez = m_f[2].data();
            for_box(m_range[3], [&](int, int, std::size_t base, int len) {
                for (int k = 0; k < len; ++k) {
                    const std::size_t q = base + k;
                    hx[q] -= s * ((ez[q + sy] - ez[q]) - (ey[q + 1] - ey[q]));
                }
            });
        }
        {
            double* hy = m_f[4].data();
            const double* ex = m_f[0].data();
            const double* ez = m_f[2].data();
            for_box(m_range[4], [&](int, int, std::size_t base, int len) {
                for (int k = 0; k < len; ++k) {
                    const std::size_t q = base + k;
                    hy[q] -= s * ((ex[q + 1] - ex[q]) - (ez[q + sx] - ez[q]));
                }
            });
        }
        {
            double* hz = m_f[5].data();
            const double* ex = m_f[0].data();
            const double* ey = m_f[1].data();
            for_box(m_range[5], [&](int, int, std::size_t base, int len) {
                for (int k = 0; k < len; ++k) {
                    const std::size_t q = base + k;
                    hz[q] -= s * ((ey[q + sx] - ey[q]) - (ex[q + sy] - ex[q]));
                }
            });
        }
        apply_pml(false);
    }

    void update_e()
    {
        const long sx = m_stride[0];
        const long sy = m_stride[1];
        {
            double* ex = m_f[0].data();
            const double* hy = m_f[4].data();
            const double* hz = m_f[5].data();
            const double* ce = m_ce[0].data();
            for_box(m_range[0], [&](int, int, std::size_t base, int len) {
                for (int k = 0; k < len; ++k) {
                    const std::size_t q = base + k;
                    ex[q] += ce[q] * ((hz[q] - hz[q - sy]) - (hy[q] - hy[q - 1]));
                }
            });
        }
        {
            double* ey = m_f[1].data();
            const double* hx = m_f[3].data();
            const double* hz = m_f[5].data();
            const double* ce = m_ce[1].data();
            for_box(m_range[1], [&](int, int, std::size_t base, int len) {
                for (int k = 0; k < len; ++k) {
                    const std::size_t q = base + k;
                    ey[q] += ce[q] * ((hx[q] - hx[q - 1]) - (hz[q] - hz[q - sx]));
                }
            });
        }
        {
            double* ez = m_f[2].data();
            const double* hx = m_f[3].data();
            const double* hy = m_f[4].data();
            const double* ce = m_ce[2].data();
            for_box(m_range[2], [&](int, int, std::size_t base, int len) {
                for (int k = 0; k < len; ++k) {
                    const std::size_t q = base + k;
                    ez[q] += ce[q] * ((hy[q] - hy[q - sx]) - (hx[q] - hx[q - sy]));
                }
            });
        }
        apply_pml(true);
    }

    void apply_pml(bool electric)
    {
        for (auto& t : m_pml) {
            if (t.electric != electric) {
                continue;
            }
            double* f = m_f[t.field].data();
            const double* g = m_f[t.source].data();
            const double* ce = electric ? m_ce[t.field].data() : nullptr;
            const double s = m_opt.courant;
            const long st = m_stride[t.axis];
            const int half = electric ? 0 : 1;
            const auto& bv = m_pml_b[t.axis][half];
            const auto& cv = m_pml_c[t.axis][half];
            const auto& kv = m_pml_invk[t.axis][half];
            for (int side = 0; side < 2; ++side) {
                const box& r = t.region[side];
                if (r.empty()) {
                    continue;
                }
                double* psi = t.psi[side].data();
                const int ey = r.hi[1] - r.lo[1] + 1;
                const int ez = r.hi[2] - r.lo[2] + 1;
                for_box(r, [&](int i, int j, std::size_t base, int len) {
                    std::size_t pq = (static_cast<std::size_t>(i - r.lo[0]) * ey + (j - r.lo[1])) * ez;
                    for (int k = 0; k < len; ++k, ++pq) {
                        const std::size_t q = base + k;
                        const int pos = t.axis == 0 ? i : (t.axis == 1 ? j : r.lo[2] + k);
                        const double d = electric ? (g[q] - g[q - st]) : (g[q + st] - g[q]);
                        psi[pq] = bv[pos] * psi[pq] + cv[pos] * d;
                        const double corr = (kv[pos] - 1.0) * d + psi[pq];
                        f[q] += t.sign * (electric ? ce[q] : s) * corr;
                    }
                });
            }
        }
    }

    void fill_h_ghosts()
    {
        for (int a = 0; a < 3; ++a) {
            const auto lo = m_boundary.faces[a][0];
            const auto hi = m_boundary.faces[a][1];
            for (int c = 3; c < 6; ++c) {
                if (!is_half(static_cast<component>(c), a)) {
                    continue; // only tangential H is read across the face
                }
                if (lo == boundary_kind::pmc) {
                    copy_plane(c, a, -1, 0, -1.0);
                } else if (lo == boundary_kind::periodic) {
                    copy_plane(c, a, -1, m_n[a] - 1, 1.0);
                }
                if (hi == boundary_kind::pmc) {
                    copy_plane(c, a, m_n[a], m_n[a] - 1, -1.0);
                }
            }
        }
    }

    void copy_periodic_e()
    {
        for (int a = 0; a < 2; ++a) {
            if (m_boundary.faces[a][0] != boundary_kind::periodic) {
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                if (!is_half(static_cast<component>(c), a)) {
                    copy_plane(c, a, m_n[a], 0, 1.0);
                }
            }
        }
    }

    /// dst plane := sign * src plane (full padded extent of the other axes).
    void copy_plane(int c, int a, int dst, int src, double sign)
    {
        auto& f = m_f[c];
        const int b1 = (a + 1) % 3;
        const int b2 = (a + 2) % 3;
        for (int u = -1; u <= m_n[b1] + 1; ++u) {
            for (int v = -1; v <= m_n[b2] + 1; ++v) {
                std::array<int, 3> d{};
                std::array<int, 3> s{};
                d[a] = dst;
                s[a] = src;
                d[b1] = s[b1] = u;
                d[b2] = s[b2] = v;
                f[lin(d[0], d[1], d[2])] = sign * f[lin(s[0], s[1], s[2])];
            }
        }
    }

    void apply_sources()
    {
        const double t = static_cast<double>(m_step) + 0.5;
        for (const auto& cs : m_compiled) {
            const double w = m_sources[cs.spec].waveform(t, m_dt);
            m_f[cs.comp][cs.idx] -= m_ce[cs.comp][cs.idx] * cs.weight * w;
        }
    }

    void check_finite() const
    {
        for (int c = 0; c < 6; ++c) {
            for (double v : m_f[c]) {
                if (!std::isfinite(v)) {
                    throw instability_error(std::string("fdtd: non-finite ") +
                                                component_name(static_cast<component>(c)) +
                                                " field, time step unstable",
                                            m_step);
                }
            }
        }
    }

    /// Unique samples of component c (periodic duplicate planes excluded).
    box energy_box(int c) const
    {
        const auto comp = static_cast<component>(c);
        box b{};
        for (int a = 0; a < 3; ++a) {
            const bool half = is_half(comp, a);
            int lo = 0;
            int hi = half ? m_n[a] - 1 : m_n[a];
            if (!half && m_boundary.faces[a][0] == boundary_kind::periodic) {
                hi = m_n[a] - 1;
            }
            const int p0 = m_boundary.pml_thickness(a, 0);
            const int p1 = m_boundary.pml_thickness(a, 1);
            lo = std::max(lo, p0);
            hi = std::min(hi, half ? m_n[a] - p1 - 1 : m_n[a] - p1);
            b.lo[a] = lo;
            b.hi[a] = hi;
        }
        return b;
    }

    double energy_sum(bool staggered) const
    {
        const long chunks = worker_pool::default_chunks;
        std::vector<double> partial(static_cast<std::size_t>(chunks) * 6, 0.0);
        const long sx = m_stride[0];
        const long sy = m_stride[1];
        const double s = m_opt.courant;
        for (int c = 0; c < 6; ++c) {
            const box b = energy_box(c);
            if (b.empty()) {
                continue;
            }
            const double* f = m_f[c].data();
            const double* ce = c < 3 ? m_ce[c].data() : nullptr;
            const double* ex = m_f[0].data();
            const double* ey = m_f[1].data();
            const double* ez = m_f[2].data();
            const long n_i = b.hi[0] - b.lo[0] + 1;
            m_pool->for_chunks(0, chunks, chunks, [&](long c0, long c1) {
                for (long ch = c0; ch < c1; ++ch) {
                    double acc = 0.0;
                    const long i0 = b.lo[0] + worker_pool::chunk_lo(0, n_i, chunks, ch);
                    const long i1 = b.lo[0] + worker_pool::chunk_lo(0, n_i, chunks, ch + 1);
                    for (long i = i0; i < i1; ++i) {
                        for (int j = b.lo[1]; j <= b.hi[1]; ++j) {
                            std::size_t q = lin(static_cast<int>(i), j, b.lo[2]);
                            for (int k = b.lo[2]; k <= b.hi[2]; ++k, ++q) {
                                const double v = f[q];
                                if (c < 3) {
                                    acc += s / ce[q] * v * v;
                                } else if (!staggered) {
                                    acc += v * v;
                                } else {
                                    double next = v;
                                    if (c == 3) {
                                        next -= s * ((ez[q + sy] - ez[q]) - (ey[q + 1] - ey[q]));
                                    } else if (c == 4) {
                                        next -= s * ((ex[q + 1] - ex[q]) - (ez[q + sx] - ez[q]));
                                    } else {
                                        next -= s * ((ey[q + sx] - ey[q]) - (ex[q + sy] - ex[q]));
                                    }
                                    acc += v * next;
                                }
                            }
                        }
                    }
                    partial[static_cast<std::size_t>(c) * chunks + ch] = acc;
                }
            });
        }
        double total = 0.0;
        for (double p : partial) {
            total += p;
        }
        return total;
    }

    void accumulate_dft(dft_box& d)
    {
        if (m_step <= d.start_step) {
            return;
        }
        const auto e = d.extent();
        for (std::size_t ci = 0; ci < d.comps.size(); ++ci) {
            const auto comp = d.comps[ci];
            const double* f = m_f[static_cast<int>(comp)].data();
            // E is known at n dt, H at (n - 1/2) dt
            const double t = (static_cast<double>(m_step) - (is_electric(comp) ? 0.0 : 0.5)) * m_dt;
            for (std::size_t fi = 0; fi < d.freqs.size(); ++fi) {
                const std::complex<double> ph = std::polar(m_dt, 2.0 * pi * d.freqs[fi] * t);
                auto* out = d.data[ci][fi].data();
                m_pool->for_range(0, e[0], [&](long i0, long i1) {
                    for (long ii = i0; ii < i1; ++ii) {
                        for (int jj = 0; jj < e[1]; ++jj) {
                            const std::size_t q = lin(d.lo[0] + static_cast<int>(ii), d.lo[1] + jj, d.lo[2]);
                            std::size_t o = (static_cast<std::size_t>(ii) * e[1] + jj) * e[2];
                            for (int kk = 0; kk < e[2]; ++kk) {
                                out[o + kk] += f[q + kk] * ph;
                            }
                        }
                    }
                });
            }
        }
    }

    std::array<int, 3> m_n;
    double m_cell;
    vec3 m_origin;
    boundary_spec m_boundary;
    simulation_options m_opt;
    std::vector<source_spec> m_sources;
    std::unique_ptr<worker_pool> m_pool;

    double m_dt = 0.0;
    std::int64_t m_step = 0;
    std::array<int, 3> m_pad{};
    std::array<long, 3> m_stride{};
    std::array<std::vector<double>, 6> m_f;
    std::array<std::vector<double>, 3> m_ce;
    std::array<box, 6> m_range{};
    std::array<std::array<std::vector<double>, 2>, 3> m_pml_b;
    std::array<std::array<std::vector<double>, 2>, 3> m_pml_c;
    std::array<std::array<std::vector<double>, 2>, 3> m_pml_invk;
    std::vector<pml_term> m_pml;
    std::vector<compiled_source> m_compiled;
    std::vector<dft_box> m_dfts;
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

template <class T>
void write_pod(std::ostream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) {
        throw invalid_input("binary read: unexpected end of stream");
    }
    return v;
}

inline constexpr char checkpoint_magic[8] = {'N', 'V', 'C', 'A', 'V', 'C', 'K', 'P'};

} // namespace detail

inline void fdtd_simulation::save_checkpoint(std::ostream& os) const
{
    os.write(detail::checkpoint_magic, 8);
    detail::write_pod<std::uint32_t>(os, 1);
    for (int a = 0; a < 3; ++a) {
        detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m_n[a]));
    }
    detail::write_pod<double>(os, m_cell);
    detail::write_pod<double>(os, m_dt);
    detail::write_pod<std::int64_t>(os, m_step);
    std::uint64_t aux = 0;
    for (const auto& t : m_pml) {
        aux += t.psi[0].size() + t.psi[1].size();
    }
    detail::write_pod<std::uint64_t>(os, aux);
    for (int c = 0; c < 6; ++c) {
        for (int i = 0; i <= m_n[0]; ++i) {
            for (int j = 0; j <= m_n[1]; ++j) {
                os.write(reinterpret_cast<const char*>(&m_f[c][lin(i, j, 0)]),
                         static_cast<std::streamsize>(sizeof(double) * (m_n[2] + 1)));
            }
        }
    }
    for (const auto& t : m_pml) {
        for (const auto& p : t.psi) {
            os.write(reinterpret_cast<const char*>(p.data()),
                     static_cast<std::streamsize>(sizeof(double) * p.size()));
        }
    }
}

inline void fdtd_simulation::load_checkpoint(std::istream& is)
{
    char magic[8];
    is.read(magic, 8);
    require(is && std::memcmp(magic, detail::checkpoint_magic, 8) == 0, "checkpoint: bad magic");
    require(detail::read_pod<std::uint32_t>(is) == 1, "checkpoint: unsupported version");
    for (int a = 0; a < 3; ++a) {
        require(detail::read_pod<std::uint64_t>(is) == static_cast<std::uint64_t>(m_n[a]),
                "checkpoint: grid dimensions differ");
    }
    require(detail::read_pod<double>(is) == m_cell, "checkpoint: cell size differs");
    require(detail::read_pod<double>(is) == m_dt, "checkpoint: time step differs");
    m_step = detail::read_pod<std::int64_t>(is);
    std::uint64_t aux = 0;
    for (const auto& t : m_pml) {
        aux += t.psi[0].size() + t.psi[1].size();
    }
    require(detail::read_pod<std::uint64_t>(is) == aux, "checkpoint: PML layout differs");
    for (int c = 0; c < 6; ++c) {
        for (int i = 0; i <= m_n[0]; ++i) {
            for (int j = 0; j <= m_n[1]; ++j) {
                is.read(reinterpret_cast<char*>(&m_f[c][lin(i, j, 0)]),
                        static_cast<std::streamsize>(sizeof(double) * (m_n[2] + 1)));
            }
        }
    }
    for (auto& t : m_pml) {
        for (auto& p : t.psi) {
            is.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(sizeof(double) * p.size()));
        }
    }
    require(static_cast<bool>(is), "checkpoint: truncated stream");
    fill_h_ghosts();
    copy_periodic_e();
}

/// Field-free copy helpers used by analysis code.
inline std::vector<std::complex<double>> dft_component(const dft_box& d, component c, std::size_t freq = 0)
{
    for (std::size_t i = 0; i < d.comps.size(); ++i) {
        if (d.comps[i] == c) {
            return d.data[i].at(freq);
        }
    }
    throw invalid_input(std::string("dft: component ") + component_name(c) + " not recorded");
}

} // namespace nvcav

#endif
