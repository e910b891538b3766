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

#ifndef NVCAV_GEOMETRY_HPP
#define NVCAV_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nvcav/core.hpp"

namespace nvcav {

/**
 * Triangular lattice of air holes in a dielectric membrane.
 *
 * Rows run along x and are spaced a*sqrt(3)/2 in y; odd rows are shifted by
 * a/2. The patch is clipped to |x| <= (n_cols - 1)/2 * a, so even rows hold
 * n_cols sites and odd rows n_cols - 1. This keeps the patch symmetric under
 * both x -> -x and y -> -y.
 */
struct lattice_spec
{
    double lattice_constant_nm = 200.0;
    double hole_radius_nm = 60.0;
    double slab_thickness_nm = 120.0;
    double slab_index = 3.31;
    int n_rows = 15;
    int n_cols = 15;
    int min_periods_per_side = 7;

    double row_pitch_nm() const { return lattice_constant_nm * std::sqrt(3.0) / 2.0; }

    void validate() const
    {
        require(lattice_constant_nm > 0.0, "lattice: lattice_constant_nm must be > 0");
        require(hole_radius_nm >= 0.0 && hole_radius_nm < lattice_constant_nm / 2.0,
                "lattice: hole_radius_nm must satisfy 0 <= r < a/2");
        require(slab_thickness_nm > 0.0, "lattice: slab_thickness_nm must be > 0");
        require(slab_index > 1.0, "lattice: slab_index must be > 1");
        require(n_rows % 2 == 1 && n_cols % 2 == 1,
                "lattice: n_rows and n_cols must be odd so the defect is centred");
        require(min_periods_per_side >= 1, "lattice: min_periods_per_side must be >= 1");
        require((n_rows - 1) / 2 >= min_periods_per_side && (n_cols - 1) / 2 >= min_periods_per_side,
                "lattice: extent must provide at least " + std::to_string(min_periods_per_side) +
                    " periods on each side of the defect");
    }
};

/// `none` is the unperturbed lattice, used as an emission reference.
enum class defect_kind { s1, l3, none };

inline const char* defect_name(defect_kind k)
{
    switch (k) {
    case defect_kind::s1: return "S1";
    case defect_kind::l3: return "L3";
    default: return "none";
    }
}

inline defect_kind defect_from_name(const std::string& s)
{
    if (s == "S1" || s == "s1") {
        return defect_kind::s1;
    }
    if (s == "L3" || s == "l3") {
        return defect_kind::l3;
    }
    if (s == "none") {
        return defect_kind::none;
    }
    throw invalid_input("defect: unknown kind '" + s + "' (expected S1, L3 or none)");
}

struct defect_spec
{
    defect_kind kind = defect_kind::s1;
    /// Outward shift of the two holes terminating an L3 line.
    double side_hole_shift_nm = 0.0;

    void validate() const
    {
        require(kind == defect_kind::l3 || side_hole_shift_nm == 0.0,
                "defect: side_hole_shift_nm must be 0 for S1");
    }
};

struct nanocrystal_placement
{
    /// Centre relative to the defect centre (slab mid-plane at z = 0).
    vec3 center_nm{};
    double diameter_nm = 50.0;
    double index = 2.4;

    void validate() const
    {
        require(diameter_nm > 0.0, "nanocrystal: diameter_nm must be > 0");
        require(index >= 1.0, "nanocrystal: index must be >= 1");
    }

    friend bool operator==(const nanocrystal_placement&, const nanocrystal_placement&) = default;
};

/// Simulation box around the design. A size of 0 selects the automatic size.
struct domain_spec
{
    vec3 size_nm{};
    double lateral_padding_nm = 200.0;
    double air_padding_nm = 700.0;
    int pml_cells = 10;
};

struct cavity_design
{
    std::string name = "s1-default";
    lattice_spec lattice;
    defect_spec defect;
    std::optional<nanocrystal_placement> nanocrystal;
    domain_spec domain;

    void validate() const
    {
        lattice.validate();
        defect.validate();
        if (nanocrystal) {
            nanocrystal->validate();
        }
        require(domain.pml_cells >= 0, "domain: pml_cells must be >= 0");
    }
};

struct hole
{
    double x;
    double y;
    friend bool operator==(const hole&, const hole&) = default;
};

/**
 * Centres of the air holes, defect sites omitted, sorted by (y, x).
 * Coordinates are exact multiples of a/2 (x) and of the row pitch (y), so
 * mirrored holes are exact negations of each other.
 */
inline std::vector<hole> hole_positions(const lattice_spec& lat, const defect_spec& def)
{
    lat.validate();
    def.validate();
    const int half_rows = (lat.n_rows - 1) / 2;
    const int half_cols = (lat.n_cols - 1) / 2;
    require(half_rows >= 1, "hole_positions: extent too small for one ring around the defect");
    require(half_cols >= (def.kind == defect_kind::l3 ? 2 : 1),
            "hole_positions: extent too small for one ring around the defect");

    const double half_a = lat.lattice_constant_nm / 2.0;
    const double pitch = lat.row_pitch_nm();
    std::vector<hole> out;
    for (int n = -half_rows; n <= half_rows; ++n) {
        const bool odd = (n % 2) != 0;
        // twice the x coordinate in units of a/2: even rows 2m, odd rows 2m+1
        for (int twice = -2 * half_cols; twice <= 2 * half_cols; ++twice) {
            if ((std::abs(twice) % 2 == 1) != odd) {
                continue;
            }
            const int m2 = twice;
            if (n == 0 && def.kind != defect_kind::none) {
                if (m2 == 0) {
                    continue;
                }
                if (def.kind == defect_kind::l3 && std::abs(m2) == 2) {
                    continue;
                }
            }
            double x = m2 * half_a;
            if (n == 0 && def.kind == defect_kind::l3 && std::abs(m2) == 4) {
                x += (m2 > 0 ? 1.0 : -1.0) * def.side_hole_shift_nm;
            }
            out.push_back({x, n * pitch});
        }
    }
    std::sort(out.begin(), out.end(), [](const hole& a, const hole& b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    return out;
}

/// Holes closest to the defect centre.
inline std::vector<hole> first_ring_holes(const lattice_spec& lat, const defect_spec& def)
{
    const auto all = hole_positions(lat, def);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : all) {
        best = std::min(best, std::hypot(h.x, h.y));
    }
    std::vector<hole> ring;
    for (const auto& h : all) {
        if (std::hypot(h.x, h.y) <= best * (1.0 + 1e-9)) {
            ring.push_back(h);
        }
    }
    return ring;
}

/// The first-ring hole whose cylinder contains p, if any.
inline std::optional<hole> first_ring_hole_containing(const lattice_spec& lat, const defect_spec& def, vec3 p)
{
    if (std::abs(p.z) > lat.slab_thickness_nm / 2.0) {
        return std::nullopt;
    }
    for (const auto& h : first_ring_holes(lat, def)) {
        if (std::hypot(p.x - h.x, p.y - h.y) < lat.hole_radius_nm) {
            return h;
        }
    }
    return std::nullopt;
}

/**
 * Relative permittivity sampled at the staggered electric-field locations.
 *
 * Sample (i, j, k) of component c sits at
 *   origin + cell * (i + h_x, j + h_y, k + h_z),  h_a = 1/2 if a == c else 0.
 * Every component array has (nx+1)(ny+1)(nz+1) entries; index k varies
 * fastest. Axes flagged in `mirrored` start at the symmetry plane (origin 0).
 */
class permittivity_grid
{
public:
    double cell_nm = 0.0;
    std::array<int, 3> n{0, 0, 0};
    vec3 origin_nm{};
    std::array<bool, 3> mirrored{false, false, false};
    /// PML cells at the lower/upper face of each axis (0 for mirrored faces).
    std::array<std::array<int, 2>, 3> pml_cells{};
    std::array<std::vector<double>, 3> eps;

    /// Geometry the grid was rasterised from, and nanocrystals placed since.
    std::optional<cavity_design> design;
    std::vector<nanocrystal_placement> spheres;

    std::size_t size() const
    {
        return static_cast<std::size_t>(n[0] + 1) * (n[1] + 1) * (n[2] + 1);
    }

    std::size_t index(int i, int j, int k) const
    {
        return (static_cast<std::size_t>(i) * (n[1] + 1) + j) * (n[2] + 1) + k;
    }

    double at(int c, int i, int j, int k) const { return eps[c][index(i, j, k)]; }

    /// Twice the sample coordinate along axis a, in units of cell/2 offset
    /// from the origin; kept integral so mirrored samples negate exactly.
    double coord(int a, int idx, bool half) const
    {
        return origin_nm[a] + (2.0 * idx + (half ? 1.0 : 0.0)) * (cell_nm / 2.0);
    }

    vec3 sample_position(int c, int i, int j, int k) const
    {
        return {coord(0, i, c == 0), coord(1, j, c == 1), coord(2, k, c == 2)};
    }

    /// Physical extent [lo, hi] along axis a.
    double lo(int a) const { return origin_nm[a]; }
    double hi(int a) const { return origin_nm[a] + n[a] * cell_nm; }

    /// Region inside all PML layers, as [lo, hi] per axis.
    std::array<std::array<double, 2>, 3> interior() const
    {
        std::array<std::array<double, 2>, 3> box{};
        for (int a = 0; a < 3; ++a) {
            box[a] = {lo(a) + pml_cells[a][0] * cell_nm, hi(a) - pml_cells[a][1] * cell_nm};
        }
        return box;
    }

    bool inside_interior(vec3 p) const
    {
        const auto box = interior();
        for (int a = 0; a < 3; ++a) {
            if (p[a] < box[a][0] || p[a] > box[a][1]) {
                return false;
            }
        }
        return true;
    }
};

permittivity_grid place_nanocrystal(permittivity_grid g, const nanocrystal_placement& p);

namespace detail {

inline constexpr int subsamples = 16;

/// Fraction of [c - d/2, c + d/2] covered by [lo, hi].
inline double interval_overlap(double c, double d, double lo, double hi)
{
    const double a = std::max(c - d / 2.0, lo);
    const double b = std::min(c + d / 2.0, hi);
    return b > a ? (b - a) / d : 0.0;
}

/// Holes whose circle can touch the square cell centred at (x, y).
inline void nearby_holes(const std::vector<hole>& holes, double x, double y, double half_cell,
                         double r, std::vector<const hole*>& out)
{
    out.clear();
    const double reach = r + half_cell * std::sqrt(2.0);
    for (const auto& h : holes) {
        if (std::abs(h.x - x) <= reach && std::abs(h.y - y) <= reach) {
            out.push_back(&h);
        }
    }
}

inline bool in_any_hole(const std::vector<const hole*>& hs, double px, double py, double r2)
{
    for (const hole* h : hs) {
        const double dx = px - h->x;
        const double dy = py - h->y;
        if (dx * dx + dy * dy < r2) {
            return true;
        }
    }
    return false;
}

/* Offsets are built from integers so that the subsample set of a mirrored
 * sample is the exact negation of the original one. */
inline double sub_offset(int s, double cell)
{
    return (2.0 * s + 1.0 - subsamples) * (cell / (2.0 * subsamples));
}

} // namespace detail

/**
 * Rasterise the design into a permittivity grid.
 *
 * Cells straddling a boundary get the volume-fraction average of their
 * contents (scalar averaging). The slab fraction along z is exact; the
 * in-plane hole fraction uses a 16x16 sub-sample.
 */
inline permittivity_grid build_permittivity(const cavity_design& design, double cell_nm,
                                            std::array<bool, 3> mirrored = {false, false, false},
                                            double min_cells_per_period = 10.0)
{
    design.validate();
    const auto& lat = design.lattice;
    require(cell_nm > 0.0, "build_permittivity: cell size must be > 0");
    require(cell_nm <= lat.lattice_constant_nm / min_cells_per_period * (1.0 + 1e-12),
            "build_permittivity: cell size exceeds a/" + std::to_string(min_cells_per_period));

    const auto holes = hole_positions(lat, design.defect);
    const int pml = design.domain.pml_cells;
    const double pml_nm = pml * cell_nm;
    const double r = lat.hole_radius_nm;

    std::array<double, 3> lattice_half{
        (lat.n_cols - 1) / 2 * lat.lattice_constant_nm + r,
        (lat.n_rows - 1) / 2 * lat.row_pitch_nm() + r,
        lat.slab_thickness_nm / 2.0,
    };
    std::array<double, 3> pad{design.domain.lateral_padding_nm, design.domain.lateral_padding_nm,
                              design.domain.air_padding_nm};

    permittivity_grid g;
    g.cell_nm = cell_nm;
    g.mirrored = mirrored;
    for (int a = 0; a < 3; ++a) {
        const double requested = design.domain.size_nm[a];
        double half;
        if (requested > 0.0) {
            half = requested / 2.0;
            require(half >= lattice_half[a] + pml_nm,
                    std::string("build_permittivity: domain too small along ") + "xyz"[a] +
                        " for lattice plus PML margin");
        } else {
            half = lattice_half[a] + pad[a] + pml_nm;
        }
        const int half_cells = static_cast<int>(std::ceil(half / cell_nm - 1e-9));
        if (mirrored[a]) {
            g.n[a] = half_cells;
            g.origin_nm[a] = 0.0;
            g.pml_cells[a] = {0, pml};
        } else {
            g.n[a] = 2 * half_cells;
            g.origin_nm[a] = -half_cells * cell_nm;
            g.pml_cells[a] = {pml, pml};
        }
    }

    const double eps_slab = lat.slab_index * lat.slab_index;
    const double t_half = lat.slab_thickness_nm / 2.0;
    const double r2 = r * r;
    constexpr int S = detail::subsamples;

    std::vector<const hole*> near;
    for (int c = 0; c < 3; ++c) {
        auto& e = g.eps[c];
        e.assign(g.size(), 1.0);
        // per-k slab fraction
        std::vector<double> fz(g.n[2] + 1);
        for (int k = 0; k <= g.n[2]; ++k) {
            fz[k] = detail::interval_overlap(g.coord(2, k, c == 2), cell_nm, -t_half, t_half);
        }
        for (int i = 0; i <= g.n[0]; ++i) {
            const double x = g.coord(0, i, c == 0);
            for (int j = 0; j <= g.n[1]; ++j) {
                const double y = g.coord(1, j, c == 1);
                double f_hole = 0.0;
                if (r > 0.0) {
                    detail::nearby_holes(holes, x, y, cell_nm / 2.0, r, near);
                    if (!near.empty()) {
                        int inside = 0;
                        for (int sx = 0; sx < S; ++sx) {
                            const double px = x + detail::sub_offset(sx, cell_nm);
                            for (int sy = 0; sy < S; ++sy) {
                                const double py = y + detail::sub_offset(sy, cell_nm);
                                inside += detail::in_any_hole(near, px, py, r2) ? 1 : 0;
                            }
                        }
                        f_hole = static_cast<double>(inside) / (S * S);
                    }
                }
                for (int k = 0; k <= g.n[2]; ++k) {
                    const double fd = fz[k] * (1.0 - f_hole);
                    e[g.index(i, j, k)] = fd * eps_slab + (1.0 - fd) * 1.0;
                }
            }
        }
    }
    g.design = design;
    g.design->nanocrystal.reset();
    if (design.nanocrystal) {
        g = place_nanocrystal(std::move(g), *design.nanocrystal);
    }
    return g;
}

/**
 * Blend a dielectric sphere into the grid by volume fraction.
 *
 * Cells touched by the sphere are re-evaluated from the underlying geometry
 * on a 16^3 sub-sample; other cells are left untouched. Placing the same
 * sphere twice gives the same grid.
 */
inline permittivity_grid place_nanocrystal(permittivity_grid g, const nanocrystal_placement& p)
{
    p.validate();
    require(g.design.has_value(), "place_nanocrystal: grid carries no source geometry");
    const double rad = p.diameter_nm / 2.0;
    const auto box = g.interior();
    for (int a = 0; a < 3; ++a) {
        require(!g.mirrored[a], "place_nanocrystal: not supported on mirror-reduced grids");
        require(p.center_nm[a] >= g.lo(a) && p.center_nm[a] <= g.hi(a),
                "place_nanocrystal: placement outside the grid domain");
        require(p.center_nm[a] - rad >= box[a][0] && p.center_nm[a] + rad <= box[a][1],
                "place_nanocrystal: nanocrystal overlaps the PML region");
    }
    if (std::find(g.spheres.begin(), g.spheres.end(), p) == g.spheres.end()) {
        g.spheres.push_back(p);
    }

    const auto& lat = g.design->lattice;
    const auto holes = hole_positions(lat, g.design->defect);
    const double eps_slab = lat.slab_index * lat.slab_index;
    const double t_half = lat.slab_thickness_nm / 2.0;
    const double r2 = lat.hole_radius_nm * lat.hole_radius_nm;
    const double d = g.cell_nm;
    constexpr int S = detail::subsamples;

    auto in_sphere = [&](double x, double y, double z, const nanocrystal_placement& s) {
        const double dx = x - s.center_nm.x;
        const double dy = y - s.center_nm.y;
        const double dz = z - s.center_nm.z;
        const double rr = s.diameter_nm / 2.0;
        return dx * dx + dy * dy + dz * dz < rr * rr;
    };

    std::vector<const hole*> near;
    for (int c = 0; c < 3; ++c) {
        std::array<int, 3> lo_idx{};
        std::array<int, 3> hi_idx{};
        for (int a = 0; a < 3; ++a) {
            const double h = (a == c) ? 0.5 : 0.0;
            lo_idx[a] = std::max(0, static_cast<int>(std::floor((p.center_nm[a] - rad - g.origin_nm[a]) / d - h)) - 1);
            hi_idx[a] = std::min(g.n[a], static_cast<int>(std::ceil((p.center_nm[a] + rad - g.origin_nm[a]) / d - h)) + 1);
        }
        for (int i = lo_idx[0]; i <= hi_idx[0]; ++i) {
            for (int j = lo_idx[1]; j <= hi_idx[1]; ++j) {
                for (int k = lo_idx[2]; k <= hi_idx[2]; ++k) {
                    const vec3 s = g.sample_position(c, i, j, k);
                    // nearest point of the cell box to the sphere centre
                    double dist2 = 0.0;
                    for (int a = 0; a < 3; ++a) {
                        const double q = std::clamp(p.center_nm[a], s[a] - d / 2, s[a] + d / 2);
                        dist2 += (q - p.center_nm[a]) * (q - p.center_nm[a]);
                    }
                    if (dist2 >= rad * rad) {
                        continue;
                    }
                    detail::nearby_holes(holes, s.x, s.y, d / 2.0, lat.hole_radius_nm, near);
                    long n_sphere = 0;
                    long n_slab = 0;
                    double sphere_eps_sum = 0.0;
                    for (int sx = 0; sx < S; ++sx) {
                        const double px = s.x + detail::sub_offset(sx, d);
                        for (int sy = 0; sy < S; ++sy) {
                            const double py = s.y + detail::sub_offset(sy, d);
                            const bool hole_here = lat.hole_radius_nm > 0.0 &&
                                                   detail::in_any_hole(near, px, py, r2);
                            for (int sz = 0; sz < S; ++sz) {
                                const double pz = s.z + detail::sub_offset(sz, d);
                                const nanocrystal_placement* hit = nullptr;
                                for (const auto& sp : g.spheres) {
                                    if (in_sphere(px, py, pz, sp)) {
                                        hit = &sp;
                                    }
                                }
                                if (hit) {
                                    ++n_sphere;
                                    sphere_eps_sum += hit->index * hit->index;
                                } else if (!hole_here && pz > -t_half && pz < t_half) {
                                    ++n_slab;
                                }
                            }
                        }
                    }
                    if (n_sphere == 0) {
                        continue;
                    }
                    constexpr double total = static_cast<double>(S) * S * S;
                    const long n_air = static_cast<long>(total) - n_sphere - n_slab;
                    const double eps_sph = sphere_eps_sum / n_sphere;
                    g.eps[c][g.index(i, j, k)] = (n_sphere / total) * eps_sph +
                                                 (n_slab / total) * eps_slab +
                                                 (n_air / total) * 1.0;
                }
            }
        }
    }
    return g;
}

/// Dielectric excess sum((eps - 1) * cell^3) of one component over n[0]*n[1]*n[2] samples.
inline double dielectric_excess(const permittivity_grid& g, int c)
{
    double s = 0.0;
    for (int i = 0; i < g.n[0]; ++i) {
        for (int j = 0; j < g.n[1]; ++j) {
            for (int k = 0; k < g.n[2]; ++k) {
                s += g.at(c, i, j, k) - 1.0;
            }
        }
    }
    return s * g.cell_nm * g.cell_nm * g.cell_nm;
}

} // namespace nvcav

#endif
