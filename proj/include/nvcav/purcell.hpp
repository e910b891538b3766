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

#ifndef NVCAV_PURCELL_HPP
#define NVCAV_PURCELL_HPP

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "nvcav/core.hpp"
#include "nvcav/mode.hpp"
#include "nvcav/spectro_fit.hpp"
#include "nvcav/spectrum.hpp"

namespace nvcav {

struct emitter_spec
{
    vec3 position_nm{};
    vec3 orientation{1.0, 0.0, 0.0};
    double wavelength_nm = 637.0;
    /// Fraction of emission in the spectral slice considered.
    double branching = 1.0;

    void validate() const
    {
        require(is_unit(orientation, 1e-6), "emitter: orientation must be a unit vector");
        require(wavelength_nm > 0.0, "emitter: wavelength_nm must be > 0");
        require(branching >= 0.0 && branching <= 1.0, "emitter: branching must be in [0, 1]");
    }
};

/// Lorentzian detuning factor 1 / (1 + (2 Q delta / f_c)^2), delta in frequency.
inline double detuning_factor(double q, double f_cavity, double f_emitter)
{
    const double x = 2.0 * q * (f_emitter - f_cavity) / f_cavity;
    return 1.0 / (1.0 + x * x);
}

/**
 * F = 3/(4 pi^2) (lambda_c / n_host)^3 / V * Q * orientation * local * L.
 * `orientation` is |e.d|^2 and `local` is eps|E|^2 at the emitter over its
 * maximum.
 */
inline double purcell_formula(double wavelength_c_nm, double n_host, double volume_nm3, double q,
                              double orientation = 1.0, double local = 1.0, double detuning = 1.0)
{
    require(wavelength_c_nm > 0.0 && n_host >= 1.0 && volume_nm3 > 0.0 && q > 0.0,
            "purcell: wavelength, index, volume and Q must be positive");
    const double l = wavelength_c_nm / n_host;
    return 3.0 / (4.0 * pi * pi) * l * l * l / volume_nm3 * q * orientation * local * detuning;
}

struct purcell_breakdown
{
    double factor = 0.0;
    double n_host = 1.0;
    double orientation = 0.0; ///< |e(r).d|^2
    double local = 0.0;       ///< eps|E|^2(r) / max
    double detuning = 1.0;
};

/// Purcell factor of an emitter in a resonance with a normalized profile.
inline purcell_breakdown purcell_factor(const resonant_mode& mode, const mode_profile& profile,
                                        const emitter_spec& em)
{
    em.validate();
    require(mode.volume.has_value(), "purcell: mode has no volume");
    require(profile.normalized, "purcell: profile is not normalized");
    require(profile.contains(em.position_nm), "purcell: emitter outside the profile domain");
    require(profile.in_interior(em.position_nm), "purcell: emitter inside the PML");
    purcell_breakdown b;
    const cvec3 e = profile.field_at(em.position_nm);
    const double e2 = std::norm(e[0]) + std::norm(e[1]) + std::norm(e[2]);
    const std::complex<double> proj = e[0] * em.orientation[0] + e[1] * em.orientation[1] + e[2] * em.orientation[2];
    b.orientation = e2 > 0.0 ? std::norm(proj) / e2 : 0.0;
    b.local = profile.energy_at(em.position_nm);
    b.n_host = std::sqrt(profile.eps_at(em.position_nm));
    b.detuning = detuning_factor(mode.q, mode.frequency, 1.0 / em.wavelength_nm);
    b.factor = purcell_formula(mode.wavelength_nm, b.n_host, mode.volume->nm3, mode.q, b.orientation, b.local,
                               b.detuning);
    return b;
}

/// Unit dipole orientation maximising |e.d|^2 at a point (real part of the
/// phase-aligned field).
inline vec3 optimal_orientation(const mode_profile& profile, vec3 p)
{
    cvec3 e = profile.field_at(p);
    // rotate the common phase so that the real part carries most weight
    std::complex<double> s = e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
    const std::complex<double> ph = std::abs(s) > 0.0 ? std::exp(std::complex<double>(0.0, -0.5 * std::arg(s)))
                                                      : std::complex<double>(1.0, 0.0);
    vec3 d{(e[0] * ph).real(), (e[1] * ph).real(), (e[2] * ph).real()};
    const double n = norm(d);
    require(n > 0.0, "optimal_orientation: field vanishes at the point");
    return (1.0 / n) * d;
}

struct enhancement_estimate
{
    double detected = 0.0;
    double detection_ratio = 0.0;
    double inferred = 0.0;
};

inline enhancement_estimate infer_enhancement(double detected, double detection_ratio)
{
    require(detected > 0.0 && detection_ratio > 0.0, "enhancement: factors must be > 0");
    return {detected, detection_ratio, detected * detection_ratio};
}

struct band_integrals
{
    double in_band = 0.0;
    double out_of_band = 0.0;
    double in_band_sigma = 0.0;
};

/// Trapezoid integrals of (intensity - background) inside and outside a band.
inline band_integrals integrate_band(const spectrum& s, const linear_background& bg, double band_lo, double band_hi)
{
    s.validate();
    require(s.size() >= 2, "enhancement: spectrum too short");
    band_integrals out;
    double var = 0.0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double l0 = s.wavelength_nm[i];
        const double l1 = s.wavelength_nm[i + 1];
        const double mid = 0.5 * (l0 + l1);
        const double v = 0.5 * ((s.intensity[i] - bg(l0)) + (s.intensity[i + 1] - bg(l1))) * (l1 - l0);
        if (mid >= band_lo && mid <= band_hi) {
            out.in_band += v;
            if (!s.uncertainty.empty()) {
                const double u = 0.5 * (l1 - l0);
                var += u * u * (s.uncertainty[i] * s.uncertainty[i] + s.uncertainty[i + 1] * s.uncertainty[i + 1]);
            }
        } else {
            out.out_of_band += v;
        }
    }
    out.in_band_sigma = std::sqrt(var);
    return out;
}

/**
 * Detected enhancement: the background-subtracted in-band emission of each
 * spectrum relative to its own out-of-band NV emission, after over before.
 */
inline enhancement_estimate enhancement_from_spectra(const spectrum& before, const linear_background& before_bg,
                                                     const spectrum& after, const linear_background& after_bg,
                                                     double band_lo_nm, double band_hi_nm, double detection_ratio)
{
    require(band_hi_nm > band_lo_nm, "enhancement: empty cavity band");
    require(detection_ratio > 0.0, "enhancement: detection_ratio must be > 0");
    const auto b = integrate_band(before, before_bg, band_lo_nm, band_hi_nm);
    const auto a = integrate_band(after, after_bg, band_lo_nm, band_hi_nm);
    const double floor_b = std::max(3.0 * b.in_band_sigma, 1e-9 * std::abs(b.out_of_band));
    require(b.in_band > floor_b, "enhancement: in-band intensity of the before spectrum is indistinguishable from zero");
    require(b.out_of_band > 0.0 && a.out_of_band > 0.0, "enhancement: no out-of-band emission to normalize by");
    const double detected = (a.in_band / a.out_of_band) / (b.in_band / b.out_of_band);
    require(detected > 0.0, "enhancement: detected factor is not positive");
    return infer_enhancement(detected, detection_ratio);
}

} // namespace nvcav

#endif // NVCAV_PURCELL_HPP
