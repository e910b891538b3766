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

#ifndef NVCAV_SYNTHETIC_HPP
#define NVCAV_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nvcav/core.hpp"
#include "nvcav/spectro_fit.hpp"
#include "nvcav/spectrum.hpp"

namespace nvcav::synthetic {

using rng = std::mt19937_64;

inline std::vector<double> linspace(double lo, double hi, std::size_t n)
{
    require(n >= 2, "linspace: need at least two points");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return v;
}

/// Composite-model spectrum with additive Gaussian noise of
/// noise_fraction * max(model); the uncertainty column holds that sigma.
inline spectrum composite_spectrum(const composite_params& p, const std::vector<double>& wavelengths,
                                   double noise_fraction, std::uint64_t seed)
{
    spectrum s;
    s.wavelength_nm = wavelengths;
    double peak = 0.0;
    for (double l : wavelengths) {
        peak = std::max(peak, std::abs(p(l)));
    }
    const double sigma = noise_fraction * peak;
    rng gen(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (double l : wavelengths) {
        s.intensity.push_back(p(l) + sigma * noise(gen));
        if (sigma > 0.0) {
            s.uncertainty.push_back(sigma);
        }
    }
    return s;
}

struct emission_model
{
    linear_background background{50.0, 0.2, 650.0};
    double zpl_center_nm = 637.0;
    double zpl_sigma_nm = 1.0;
    double zpl_amplitude = 300.0;
    /// Broad phonon sideband as a wide Gaussian.
    double sideband_center_nm = 680.0;
    double sideband_sigma_nm = 30.0;
    double sideband_amplitude = 600.0;

    double emission(double l) const
    {
        return gaussian_line(l, zpl_center_nm, zpl_sigma_nm, zpl_amplitude) +
               gaussian_line(l, sideband_center_nm, sideband_sigma_nm, sideband_amplitude);
    }
};

struct spectrum_pair
{
    spectrum before;
    spectrum after;
};

/**
 * Before/after spectra of one emitter. In the after spectrum the emission
 * inside [band_lo, band_hi] is multiplied by `boost`; the after spectrum
 * also has its own overall scale and background.
 */
inline spectrum_pair enhancement_pair(const emission_model& m, double band_lo, double band_hi, double boost,
                                      double after_scale, const linear_background& after_background,
                                      const std::vector<double>& wavelengths, double noise_fraction,
                                      std::uint64_t seed)
{
    rng gen(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    spectrum_pair out;
    out.before.wavelength_nm = wavelengths;
    out.after.wavelength_nm = wavelengths;
    double peak_b = 0.0;
    double peak_a = 0.0;
    std::vector<double> b, a;
    for (double l : wavelengths) {
        const double e = m.emission(l);
        const double in_band = (l >= band_lo && l <= band_hi) ? boost : 1.0;
        b.push_back(m.background(l) + e);
        a.push_back(after_background(l) + after_scale * e * in_band);
        peak_b = std::max(peak_b, b.back());
        peak_a = std::max(peak_a, a.back());
    }
    for (std::size_t i = 0; i < wavelengths.size(); ++i) {
        out.before.intensity.push_back(b[i] + noise_fraction * peak_b * noise(gen));
        out.after.intensity.push_back(a[i] + noise_fraction * peak_a * noise(gen));
    }
    return out;
}

inline std::vector<saturation_point> saturation_curve(double y_inf, double p_sat, double a,
                                                      const std::vector<double>& powers, double noise_fraction,
                                                      std::uint64_t seed)
{
    rng gen(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<saturation_point> pts;
    for (double p : powers) {
        const double y = saturation_model(p, y_inf, p_sat, a);
        pts.push_back({p, y * (1.0 + noise_fraction * noise(gen))});
    }
    return pts;
}

/// Homogeneous Poisson time tags (ps) over [0, duration).
inline std::vector<std::uint64_t> poisson_stream(double rate_per_s, double duration_s, rng& gen)
{
    require(rate_per_s > 0.0 && duration_s > 0.0, "poisson_stream: rate and duration must be > 0");
    std::exponential_distribution<double> wait(rate_per_s * 1e-12);
    std::vector<std::uint64_t> out;
    out.reserve(static_cast<std::size_t>(rate_per_s * duration_s * 1.1) + 16);
    const double end = duration_s * 1e12;
    double t = wait(gen);
    while (t < end) {
        out.push_back(static_cast<std::uint64_t>(t));
        t += wait(gen);
    }
    return out;
}

struct emitter_stream_spec
{
    double excitation_rate_per_ns = 1.0 / 12.0;
    double lifetime_ns = 12.0;
    /// Detected signal rate per channel after the 50/50 split.
    double signal_rate_per_s = 5e5;
    /// Signal-to-total ratio per channel; background is Poisson.
    double rho = 1.0;
    double duration_s = 1.0;
};

struct stream_pair
{
    std::vector<std::uint64_t> a;
    std::vector<std::uint64_t> b;
    double signal_rate_per_s = 0.0;
    double background_rate_per_s = 0.0;
};

/**
 * Incoherently pumped two-level emitter: each cycle waits Exp(R) for
 * excitation and Exp(1/lifetime) for emission, so photons are never closer
 * than one cycle and g2(tau) = 1 - exp(-(R + 1/lifetime) |tau|). Emitted
 * photons are detected with probability eta (geometric skipping of whole
 * cycles), split 50/50, and mixed with Poisson background.
 */
inline stream_pair emitter_streams(const emitter_stream_spec& s, std::uint64_t seed)
{
    require(s.rho > 0.0 && s.rho <= 1.0, "emitter_streams: rho must be in (0, 1]");
    require(s.excitation_rate_per_ns > 0.0 && s.lifetime_ns > 0.0, "emitter_streams: rates must be > 0");
    const double cycle_ns = 1.0 / s.excitation_rate_per_ns + s.lifetime_ns;
    const double emit_rate = 1e9 / cycle_ns;
    const double eta = 2.0 * s.signal_rate_per_s / emit_rate;
    require(eta > 0.0 && eta <= 1.0, "emitter_streams: requested signal rate exceeds the emission rate");
    rng gen(seed);
    std::geometric_distribution<long> skip(eta);
    std::bernoulli_distribution split(0.5);
    stream_pair out;
    const double end_ps = s.duration_s * 1e12;
    double t = 0.0;
    while (true) {
        const long k = skip(gen) + 1;
        std::gamma_distribution<double> excite(static_cast<double>(k), 1e3 / s.excitation_rate_per_ns);
        std::gamma_distribution<double> decay(static_cast<double>(k), s.lifetime_ns * 1e3);
        t += excite(gen) + decay(gen);
        if (t >= end_ps) {
            break;
        }
        (split(gen) ? out.a : out.b).push_back(static_cast<std::uint64_t>(t));
    }
    out.signal_rate_per_s = s.signal_rate_per_s;
    if (s.rho < 1.0) {
        out.background_rate_per_s = s.signal_rate_per_s * (1.0 - s.rho) / s.rho;
        for (auto* ch : {&out.a, &out.b}) {
            auto bg = poisson_stream(out.background_rate_per_s, s.duration_s, gen);
            std::vector<std::uint64_t> merged;
            merged.reserve(ch->size() + bg.size());
            std::merge(ch->begin(), ch->end(), bg.begin(), bg.end(), std::back_inserter(merged));
            *ch = std::move(merged);
        }
    }
    return out;
}

/// Closed-form g2 of the pumped two-level emitter averaged over one bin.
inline double emitter_g2_bin(double tau_ns, double bin_ns, double excitation_rate_per_ns, double lifetime_ns)
{
    const double k = excitation_rate_per_ns + 1.0 / lifetime_ns;
    const double lo = tau_ns - bin_ns / 2.0;
    const double hi = tau_ns + bin_ns / 2.0;
    auto prim = [k](double x) {
        // integral of exp(-k|x|) from 0 to x, odd in x
        return x >= 0.0 ? (1.0 - std::exp(-k * x)) / k : -(1.0 - std::exp(k * x)) / k;
    };
    return 1.0 - (prim(hi) - prim(lo)) / bin_ns;
}

} // namespace nvcav::synthetic

#endif // NVCAV_SYNTHETIC_HPP
