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

#ifndef NVCAV_TEST_UTIL_HPP
#define NVCAV_TEST_UTIL_HPP

#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nvcav/fdtd.hpp"
#include "nvcav/geometry.hpp"

namespace testutil {

using namespace nvcav;

inline permittivity_grid vacuum_grid(std::array<int, 3> n, double cell, vec3 origin = {})
{
    permittivity_grid g;
    g.cell_nm = cell;
    g.n = n;
    g.origin_nm = origin;
    for (auto& e : g.eps) {
        e.assign(g.size(), 1.0);
    }
    return g;
}

/// Centred vacuum box of n cells per axis with PML on every face.
inline permittivity_grid centred_vacuum(int n, double cell, int pml, std::array<bool, 3> mirrored = {})
{
    std::array<int, 3> dims{};
    vec3 origin{};
    permittivity_grid g;
    for (int a = 0; a < 3; ++a) {
        dims[a] = mirrored[a] ? n / 2 : n;
        origin[a] = mirrored[a] ? 0.0 : -n * cell / 2.0;
    }
    g = vacuum_grid(dims, cell, origin);
    g.mirrored = mirrored;
    for (int a = 0; a < 3; ++a) {
        g.pml_cells[a] = {mirrored[a] ? 0 : pml, pml};
    }
    return g;
}

struct layer
{
    double thickness_nm;
    double index;
};

/**
 * Transfer matrix of a layered medium between two PEC walls at normal
 * incidence: starting from E = 0, H = 1 at the first wall, the tangential
 * E at the second wall vanishes exactly at a cavity resonance.
 */
inline double pec_cavity_residual(double f, const std::vector<layer>& layers)
{
    std::complex<double> e = 0.0;
    std::complex<double> h = 1.0;
    const std::complex<double> i(0.0, 1.0);
    for (const auto& l : layers) {
        const double kd = 2.0 * pi * f * l.index * l.thickness_nm;
        const auto e2 = std::cos(kd) * e + i * std::sin(kd) / l.index * h;
        const auto h2 = i * l.index * std::sin(kd) * e + std::cos(kd) * h;
        e = e2;
        h = h2;
    }
    return e.imag();
}

/// Resonance frequencies of the layered PEC cavity in [f_lo, f_hi].
inline std::vector<double> pec_cavity_modes(const std::vector<layer>& layers, double f_lo, double f_hi,
                                            int scan = 4000)
{
    std::vector<double> out;
    const double df = (f_hi - f_lo) / scan;
    double prev = pec_cavity_residual(f_lo, layers);
    for (int s = 1; s <= scan; ++s) {
        const double f = f_lo + s * df;
        const double v = pec_cavity_residual(f, layers);
        if ((v < 0.0) != (prev < 0.0)) {
            double a = f - df;
            double b = f;
            double fa = prev;
            for (int it = 0; it < 200; ++it) {
                const double m = 0.5 * (a + b);
                const double fm = pec_cavity_residual(m, layers);
                if ((fm < 0.0) == (fa < 0.0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            out.push_back(0.5 * (a + b));
        }
        prev = v;
    }
    return out;
}

inline double overlap(double a, double b, double lo, double hi)
{
    return std::max(0.0, std::min(b, hi) - std::max(a, lo));
}

/**
 * One-cell-wide column along z, periodic in x and y, with a dielectric
 * layer [z1, z2]. Tangential components take the cell-averaged
 * permittivity, Ez the cell-averaged inverse.
 */
inline permittivity_grid layered_column(double length_nm, double cell, double z1, double z2, double index)
{
    const int n = static_cast<int>(std::lround(length_nm / cell));
    auto g = vacuum_grid({1, 1, n}, cell);
    const double e2 = index * index;
    for (int i = 0; i <= 1; ++i) {
        for (int j = 0; j <= 1; ++j) {
            for (int k = 0; k <= n; ++k) {
                const double z = k * cell;
                const double fr = overlap(z - cell / 2.0, z + cell / 2.0, z1, z2) / cell;
                g.eps[0][g.index(i, j, k)] = 1.0 + (e2 - 1.0) * fr;
                g.eps[1][g.index(i, j, k)] = 1.0 + (e2 - 1.0) * fr;
                const double zh = z + cell / 2.0;
                const double fh = overlap(zh - cell / 2.0, zh + cell / 2.0, z1, z2) / cell;
                g.eps[2][g.index(i, j, k)] = 1.0 / (1.0 + (1.0 / e2 - 1.0) * fh);
            }
        }
    }
    return g;
}

inline boundary_spec column_boundary()
{
    boundary_spec b;
    b.faces = {{{boundary_kind::periodic, boundary_kind::periodic},
                {boundary_kind::periodic, boundary_kind::periodic},
                {boundary_kind::pec, boundary_kind::pec}}};
    return b;
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("nvcav_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& s)
{
    std::ofstream out(p, std::ios::binary);
    out << s;
}

} // namespace testutil

#endif
