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

#ifndef NVCAV_FARFIELD_HPP
#define NVCAV_FARFIELD_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "nvcav/core.hpp"
#include "nvcav/fdtd.hpp"
#include "nvcav/mode.hpp"
#include "nvcav/parallel.hpp"

namespace nvcav {

/// One tangential component sampled on a uniform lateral lattice.
struct plane_samples
{
    double x0 = 0.0; ///< position of sample (0, 0)
    double y0 = 0.0;
    double dx = 0.0;
    double dy = 0.0;
    int nx = 0;
    int ny = 0;
    std::vector<std::complex<double>> v; ///< index i * ny + j

    std::complex<double>& at(int i, int j) { return v[static_cast<std::size_t>(i) * ny + j]; }
    const std::complex<double>& at(int i, int j) const { return v[static_cast<std::size_t>(i) * ny + j]; }
};

/// Time-harmonic tangential electric field on a plane z = const.
struct field_slice
{
    double z_nm = 0.0;
    double wavelength_nm = 0.0;
    plane_samples ex;
    plane_samples ey;
};

struct farfield_options
{
    int n_theta = 181; ///< samples over [0, pi/2]
    int n_phi = 360;   ///< samples over [0, 2 pi)
    int n_k = 401;     ///< (kx, ky) grid points per axis over [-k0, k0]
    /// Outer fraction of each lateral half-width rolled off with a raised
    /// cosine before the transform; 0 keeps the hard edge.
    double taper = 0.3;
    unsigned threads = 1;
};

/**
 * Upper-hemisphere radiation intensity U(theta, phi) (power per steradian,
 * unit impedance) together with the plane-wave amplitudes it came from.
 */
struct farfield
{
    double wavelength_nm = 0.0;
    int n_theta = 0;
    int n_phi = 0;
    std::vector<double> theta;
    std::vector<double> phi;
    std::vector<double> power; ///< index t * n_phi + p
    std::array<std::vector<std::complex<double>>, 3> amplitude; ///< plane-wave E per direction
    int n_k = 0;
    double k0 = 0.0;
    std::vector<double> k_power; ///< U on the (kx, ky) grid, zero outside the light cone
    double total_power = 0.0;

    double at(int t, int p) const { return power[static_cast<std::size_t>(t) * n_phi + p]; }
};

namespace detail {

// phi-integrated intensity times sin(theta) at every theta sample
inline std::vector<double> theta_profile(const farfield& ff)
{
    std::vector<double> g(static_cast<std::size_t>(ff.n_theta), 0.0);
    const double dphi = 2.0 * pi / ff.n_phi;
    for (int t = 0; t < ff.n_theta; ++t) {
        double s = 0.0;
        for (int p = 0; p < ff.n_phi; ++p) {
            s += ff.at(t, p);
        }
        g[static_cast<std::size_t>(t)] = s * dphi * std::sin(ff.theta[static_cast<std::size_t>(t)]);
    }
    return g;
}

// trapezoid integral of the sampled profile up to theta_c
inline double cumulative(const farfield& ff, const std::vector<double>& g, double theta_c)
{
    double s = 0.0;
    for (int t = 0; t + 1 < ff.n_theta; ++t) {
        const double a = ff.theta[static_cast<std::size_t>(t)];
        const double b = ff.theta[static_cast<std::size_t>(t + 1)];
        const double ga = g[static_cast<std::size_t>(t)];
        const double gb = g[static_cast<std::size_t>(t + 1)];
        if (theta_c >= b) {
            s += 0.5 * (ga + gb) * (b - a);
        } else {
            if (theta_c > a) {
                const double gc = ga + (gb - ga) * (theta_c - a) / (b - a);
                s += 0.5 * (ga + gc) * (theta_c - a);
            }
            break;
        }
    }
    return s;
}

inline std::complex<double> bilinear(const std::vector<std::complex<double>>& grid, int n, double u, double v)
{
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    v = std::clamp(v, 0.0, static_cast<double>(n - 1));
    const int i = std::min(static_cast<int>(u), n - 2);
    const int j = std::min(static_cast<int>(v), n - 2);
    const double fu = u - i;
    const double fv = v - j;
    auto g = [&](int a, int b) { return grid[static_cast<std::size_t>(a) * n + b]; };
    return (1 - fu) * ((1 - fv) * g(i, j) + fv * g(i, j + 1)) + fu * ((1 - fv) * g(i + 1, j) + fv * g(i + 1, j + 1));
}

// raised-cosine weight of sample i out of n
inline double edge_weight(int i, int n, double taper)
{
    if (taper <= 0.0 || n < 3) {
        return 1.0;
    }
    const double a = std::abs(2.0 * i / (n - 1) - 1.0);
    const double e = 1.0 - taper;
    return a <= e ? 1.0 : 0.5 * (1.0 + std::cos(pi * (a - e) / taper));
}

// F(kx, ky) = sum w f(x, y) exp(-i (kx x + ky y)) dx dy on an n_k x n_k grid
inline std::vector<std::complex<double>> plane_spectrum(const plane_samples& s, const std::vector<double>& k,
                                                        double taper, worker_pool& pool)
{
    const int nk = static_cast<int>(k.size());
    std::vector<std::complex<double>> stage(static_cast<std::size_t>(s.nx) * nk);
    pool.for_range(0, s.nx, [&](long lo, long hi) {
        for (int i = static_cast<int>(lo); i < hi; ++i) {
            for (int b = 0; b < nk; ++b) {
                std::complex<double> acc = 0.0;
                for (int j = 0; j < s.ny; ++j) {
                    const double y = s.y0 + j * s.dy;
                    acc += edge_weight(j, s.ny, taper) * s.at(i, j) * std::polar(1.0, -k[static_cast<std::size_t>(b)] * y);
                }
                stage[static_cast<std::size_t>(i) * nk + b] = edge_weight(i, s.nx, taper) * acc;
            }
        }
    });
    std::vector<std::complex<double>> out(static_cast<std::size_t>(nk) * nk);
    pool.for_range(0, nk, [&](long lo, long hi) {
        for (int a = static_cast<int>(lo); a < hi; ++a) {
            for (int b = 0; b < nk; ++b) {
                std::complex<double> acc = 0.0;
                for (int i = 0; i < s.nx; ++i) {
                    const double x = s.x0 + i * s.dx;
                    acc += stage[static_cast<std::size_t>(i) * nk + b] * std::polar(1.0, -k[static_cast<std::size_t>(a)] * x);
                }
                out[static_cast<std::size_t>(a) * nk + b] = acc * s.dx * s.dy;
            }
        }
    });
    return out;
}

} // namespace detail

/**
 * Plane-wave decomposition of the tangential field on a plane. Propagating
 * components (kx^2 + ky^2 <= k0^2) give
 *   U(theta, phi) = k0^2 cos^2(theta) |E~|^2 / (8 pi^2),
 * with E~z = -(kx E~x + ky E~y) / kz; evanescent components are dropped.
 */
inline farfield near_to_far(const field_slice& s, const farfield_options& opt = {})
{
    require(s.wavelength_nm > 0.0, "near_to_far: wavelength must be > 0");
    require(opt.n_theta >= 3 && opt.n_phi >= 4 && opt.n_k >= 3, "near_to_far: angular grid too coarse");
    require(opt.taper >= 0.0 && opt.taper < 1.0, "near_to_far: taper must be in [0, 1)");
    require(!s.ex.v.empty() && !s.ey.v.empty(), "near_to_far: empty slice");
    const double k0 = 2.0 * pi / s.wavelength_nm;
    farfield ff;
    ff.wavelength_nm = s.wavelength_nm;
    ff.n_theta = opt.n_theta;
    ff.n_phi = opt.n_phi;
    ff.n_k = opt.n_k;
    ff.k0 = k0;
    std::vector<double> k(static_cast<std::size_t>(opt.n_k));
    for (int i = 0; i < opt.n_k; ++i) {
        k[static_cast<std::size_t>(i)] = -k0 + 2.0 * k0 * i / (opt.n_k - 1);
    }
    worker_pool pool(opt.threads);
    const auto fx = detail::plane_spectrum(s.ex, k, opt.taper, pool);
    const auto fy = detail::plane_spectrum(s.ey, k, opt.taper, pool);

    const double pref = k0 * k0 / (8.0 * pi * pi);
    ff.k_power.assign(fx.size(), 0.0);
    for (int a = 0; a < opt.n_k; ++a) {
        for (int b = 0; b < opt.n_k; ++b) {
            const double kx = k[static_cast<std::size_t>(a)];
            const double ky = k[static_cast<std::size_t>(b)];
            const double kt2 = kx * kx + ky * ky;
            if (kt2 > k0 * k0) {
                continue;
            }
            const double c2 = 1.0 - kt2 / (k0 * k0);
            const auto ex = fx[static_cast<std::size_t>(a) * opt.n_k + b];
            const auto ey = fy[static_cast<std::size_t>(a) * opt.n_k + b];
            const auto lon = (kx * ex + ky * ey) / k0;
            ff.k_power[static_cast<std::size_t>(a) * opt.n_k + b] =
                pref * (c2 * (std::norm(ex) + std::norm(ey)) + std::norm(lon));
        }
    }

    const std::size_t n_dir = static_cast<std::size_t>(opt.n_theta) * opt.n_phi;
    ff.power.assign(n_dir, 0.0);
    for (auto& comp : ff.amplitude) {
        comp.assign(n_dir, 0.0);
    }
    for (int t = 0; t < opt.n_theta; ++t) {
        ff.theta.push_back(0.5 * pi * t / (opt.n_theta - 1));
    }
    for (int p = 0; p < opt.n_phi; ++p) {
        ff.phi.push_back(2.0 * pi * p / opt.n_phi);
    }
    const double scale = (opt.n_k - 1) / (2.0 * k0);
    for (int t = 0; t < opt.n_theta; ++t) {
        const double th = ff.theta[static_cast<std::size_t>(t)];
        const double st = std::sin(th);
        const double ct = std::cos(th);
        for (int p = 0; p < opt.n_phi; ++p) {
            const double ph = ff.phi[static_cast<std::size_t>(p)];
            const double ux = st * std::cos(ph);
            const double uy = st * std::sin(ph);
            const double u = (k0 * ux + k0) * scale;
            const double v = (k0 * uy + k0) * scale;
            const auto ex = detail::bilinear(fx, opt.n_k, u, v);
            const auto ey = detail::bilinear(fy, opt.n_k, u, v);
            const auto lon = ux * ex + uy * ey; // = -cos(theta) E~z
            const std::size_t idx = static_cast<std::size_t>(t) * opt.n_phi + p;
            // far-zone amplitude  -i k cos(theta) E~ / (2 pi)
            const std::complex<double> f(0.0, -k0 / (2.0 * pi));
            ff.amplitude[0][idx] = f * ct * ex;
            ff.amplitude[1][idx] = f * ct * ey;
            ff.amplitude[2][idx] = -f * lon;
            ff.power[idx] = pref * (ct * ct * (std::norm(ex) + std::norm(ey)) + std::norm(lon));
        }
    }
    ff.total_power = detail::cumulative(ff, detail::theta_profile(ff), 0.5 * pi);
    return ff;
}

/// Fraction of the upward power within theta <= asin(NA).
inline double collection_efficiency(const farfield& ff, double na)
{
    require(na > 0.0 && na <= 1.0, "collection_efficiency: NA must be in (0, 1]");
    const auto g = detail::theta_profile(ff);
    const double total = detail::cumulative(ff, g, 0.5 * pi);
    require(total > 0.0, "collection_efficiency: far field carries no power");
    const double part = na >= 1.0 ? total : detail::cumulative(ff, g, std::asin(na));
    return part / total;
}

inline double detection_ratio(const farfield& reference, const farfield& cavity, double na)
{
    const double c = collection_efficiency(cavity, na);
    require(c > 0.0, "detection_ratio: cavity collection efficiency is zero");
    return collection_efficiency(reference, na) / c;
}

/**
 * Tangential E on the node plane nearest to z from a normalized profile,
 * restricted to the lateral interior and unfolded across mirror planes.
 */
inline field_slice slice_from_profile(const mode_profile& p, double z_nm)
{
    const int k = static_cast<int>(std::lround((z_nm - p.origin_nm[2]) / p.cell_nm));
    require(k >= 0 && k <= p.n[2], "slice: plane outside the profile");
    require(k >= p.pml_cells[2][0] && k <= p.n[2] - p.pml_cells[2][1], "slice: plane lies inside the PML");
    field_slice s;
    s.z_nm = p.origin_nm[2] + k * p.cell_nm;
    s.wavelength_nm = p.wavelength_nm();

    for (int c = 0; c < 2; ++c) {
        plane_samples& out = c == 0 ? s.ex : s.ey;
        out.dx = out.dy = p.cell_nm;
        std::array<std::vector<int>, 2> idx;     // source index per lateral axis
        std::array<std::vector<double>, 2> sgn;  // unfolding sign per lateral axis
        for (int a = 0; a < 2; ++a) {
            const bool half = a == c;
            const int top = half ? p.n[a] - 1 : p.n[a];
            int lo = p.pml_cells[a][0];
            int hi = top - p.pml_cells[a][1];
            if (half) {
                hi = p.n[a] - p.pml_cells[a][1] - 1;
            }
            // parity of this component under the mirror of axis a
            const bool tangential = c != a;
            const bool odd = p.mirror_kind[a] == boundary_kind::pec ? tangential : !tangential;
            if (p.mirrored[a]) {
                for (int i = hi; i >= (half ? 0 : 1); --i) {
                    idx[a].push_back(i);
                    sgn[a].push_back(odd ? -1.0 : 1.0);
                }
                lo = 0;
            }
            for (int i = lo; i <= hi; ++i) {
                idx[a].push_back(i);
                sgn[a].push_back(1.0);
            }
            const double first = p.mirrored[a] ? -(idx[a].front() + (half ? 0.5 : 0.0)) * p.cell_nm + p.origin_nm[a]
                                               : p.origin_nm[a] + (idx[a].front() + (half ? 0.5 : 0.0)) * p.cell_nm;
            (a == 0 ? out.x0 : out.y0) = first;
        }
        out.nx = static_cast<int>(idx[0].size());
        out.ny = static_cast<int>(idx[1].size());
        out.v.resize(static_cast<std::size_t>(out.nx) * out.ny);
        for (int i = 0; i < out.nx; ++i) {
            for (int j = 0; j < out.ny; ++j) {
                const std::size_t src = p.index(idx[0][static_cast<std::size_t>(i)], idx[1][static_cast<std::size_t>(j)], k);
                require(std::abs(p.eps[c][src] - 1.0) < 1e-12, "slice: plane intersects dielectric");
                out.at(i, j) = sgn[0][static_cast<std::size_t>(i)] * sgn[1][static_cast<std::size_t>(j)] * p.e[c][src];
            }
        }
    }
    return s;
}

/// Tangential E on node plane k of a DFT box that recorded ex and ey.
inline field_slice slice_from_dft(const fdtd_simulation& sim, const dft_box& d, int k, std::size_t freq = 0)
{
    require(k >= d.lo[2] && k <= d.hi[2], "slice: plane outside the DFT box");
    const auto& b = sim.boundary();
    require(k >= b.pml_thickness(2, 0) && k <= sim.dims()[2] - b.pml_thickness(2, 1),
            "slice: plane lies inside the PML");
    field_slice s;
    s.wavelength_nm = 1.0 / d.freqs.at(freq);
    s.z_nm = sim.origin_nm()[2] + k * sim.cell_nm();
    for (int c = 0; c < 2; ++c) {
        const component comp = c == 0 ? component::ex : component::ey;
        const auto data = dft_component(d, comp, freq);
        plane_samples& out = c == 0 ? s.ex : s.ey;
        out.dx = out.dy = sim.cell_nm();
        std::array<int, 2> lo{d.lo[0], d.lo[1]};
        std::array<int, 2> hi{d.hi[0], d.hi[1]};
        if (c == 0) {
            hi[0] = std::min(hi[0], sim.dims()[0] - 1);
        } else {
            hi[1] = std::min(hi[1], sim.dims()[1] - 1);
        }
        const vec3 origin = sim.sample_position(comp, lo[0], lo[1], k);
        out.x0 = origin[0];
        out.y0 = origin[1];
        out.nx = hi[0] - lo[0] + 1;
        out.ny = hi[1] - lo[1] + 1;
        out.v.resize(static_cast<std::size_t>(out.nx) * out.ny);
        for (int i = 0; i < out.nx; ++i) {
            for (int j = 0; j < out.ny; ++j) {
                require(std::abs(sim.eps(c, lo[0] + i, lo[1] + j, k) - 1.0) < 1e-12, "slice: plane intersects dielectric");
                out.at(i, j) = data[d.index(lo[0] + i, lo[1] + j, k)];
            }
        }
    }
    return s;
}

/// CSV rows theta_deg, phi_deg, power.
inline void write_farfield_csv(std::ostream& os, const farfield& ff)
{
    os << "theta_deg,phi_deg,power\n";
    os.precision(12);
    for (int t = 0; t < ff.n_theta; ++t) {
        for (int p = 0; p < ff.n_phi; ++p) {
            os << ff.theta[static_cast<std::size_t>(t)] * 180.0 / pi << ','
               << ff.phi[static_cast<std::size_t>(p)] * 180.0 / pi << ',' << ff.at(t, p) << '\n';
        }
    }
}

} // namespace nvcav

#endif // NVCAV_FARFIELD_HPP
