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

#ifndef NVCAV_G2_HPP
#define NVCAV_G2_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nvcav/core.hpp"

namespace nvcav {

/// Coincidence counts versus delay tau = t_B - t_A in centred, uniform bins.
struct coincidence_histogram
{
    std::vector<double> tau_ns;
    std::vector<std::uint64_t> counts;
    double bin_ns = 0.0;
    double rate_a = 0.0; ///< counts per second
    double rate_b = 0.0;
    double acquisition_s = 0.0;
    double rho = 1.0;    ///< signal-to-total ratio
    /// Expected coincidences per bin for uncorrelated streams: r_A r_B T dtau.
    double normalization = 0.0;

    std::vector<double> g2_raw() const
    {
        std::vector<double> g(counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i) {
            g[i] = static_cast<double>(counts[i]) / normalization;
        }
        return g;
    }

    /// Index of the bin centred on zero delay.
    std::size_t zero_bin() const { return counts.size() / 2; }
};

/// rho = S / (S + B) from the total rate on the emitter and a background rate.
inline double rho_from_rates(double total_rate, double background_rate)
{
    require(total_rate > 0.0, "rho_from_rates: total rate must be > 0");
    require(background_rate >= 0.0 && background_rate <= total_rate,
            "rho_from_rates: background rate must lie in [0, total]");
    return (total_rate - background_rate) / total_rate;
}

/**
 * Full cross-correlation of two sorted picosecond time-tag streams: every
 * pair with |t_B - t_A| inside the window contributes, not only the first
 * stop after each start.
 */
inline coincidence_histogram g2_histogram(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                                          double bin_ns, double window_ns,
                                          std::optional<double> acquisition_s = std::nullopt)
{
    require(!a.empty() && !b.empty(), "g2_histogram: empty channel");
    require(bin_ns > 0.0 && window_ns >= bin_ns, "g2_histogram: need 0 < bin width <= window");
    require(std::is_sorted(a.begin(), a.end()) && std::is_sorted(b.begin(), b.end()),
            "g2_histogram: timestamps must be sorted");
    const auto bin_ps = static_cast<std::int64_t>(std::llround(bin_ns * 1000.0));
    require(bin_ps > 0 && std::abs(static_cast<double>(bin_ps) - bin_ns * 1000.0) < 1e-6,
            "g2_histogram: bin width must be a whole number of picoseconds");
    const auto half_bins = static_cast<std::int64_t>(std::ceil(window_ns / bin_ns - 1e-9));
    const std::int64_t reach = half_bins * bin_ps + bin_ps / 2;

    coincidence_histogram h;
    h.bin_ns = static_cast<double>(bin_ps) / 1000.0;
    const std::size_t n_bins = static_cast<std::size_t>(2 * half_bins + 1);
    h.counts.assign(n_bins, 0);
    for (std::int64_t k = -half_bins; k <= half_bins; ++k) {
        h.tau_ns.push_back(static_cast<double>(k) * h.bin_ns);
    }
    auto floor_div = [](std::int64_t x, std::int64_t d) {
        std::int64_t q = x / d;
        return (x % d != 0 && (x < 0)) ? q - 1 : q;
    };

    std::size_t lo = 0;
    for (std::uint64_t ta : a) {
        const auto t = static_cast<std::int64_t>(ta);
        while (lo < b.size() && static_cast<std::int64_t>(b[lo]) < t - reach) {
            ++lo;
        }
        for (std::size_t j = lo; j < b.size(); ++j) {
            const std::int64_t d = static_cast<std::int64_t>(b[j]) - t;
            if (d >= reach + (bin_ps % 2 == 0 ? 0 : 1)) {
                break;
            }
            const std::int64_t k = floor_div(d + bin_ps / 2, bin_ps);
            if (k >= -half_bins && k <= half_bins) {
                ++h.counts[static_cast<std::size_t>(k + half_bins)];
            }
        }
    }

    const std::uint64_t t0 = std::min(a.front(), b.front());
    const std::uint64_t t1 = std::max(a.back(), b.back());
    h.acquisition_s = acquisition_s ? *acquisition_s : static_cast<double>(t1 - t0) * 1e-12;
    require(h.acquisition_s > 0.0, "g2_histogram: acquisition time must be > 0");
    h.rate_a = static_cast<double>(a.size()) / h.acquisition_s;
    h.rate_b = static_cast<double>(b.size()) / h.acquisition_s;
    h.normalization = h.rate_a * h.rate_b * h.acquisition_s * h.bin_ns * 1e-9;
    return h;
}

struct g2_verdict_options
{
    int smooth_bins = 3;     ///< moving-average width (odd)
    int search_bins = 2;     ///< neighbourhood of zero delay searched for the minimum
    double z_score = 1.645;  ///< one-sided 95 %
    double threshold = 0.5;
};

struct g2_corrected
{
    std::vector<double> tau_ns;
    std::vector<double> raw;
    std::vector<double> corrected;
    std::vector<double> corrected_sigma;
    double rho = 1.0;
    double dip = 0.0;       ///< smoothed corrected minimum near zero delay
    double dip_sigma = 0.0;
    double dip_tau_ns = 0.0;
    double raw_dip = 0.0;
    bool single_emitter = false;
};

/**
 * g2_corr = (g2_raw - (1 - rho^2)) / rho^2 with Poisson error bars. The
 * verdict requires the smoothed dip plus z standard errors to stay below
 * the threshold.
 */
inline g2_corrected g2_background_correct(const coincidence_histogram& h, const g2_verdict_options& opt = {})
{
    require(h.rho > 0.0, "g2_background_correct: rho = 0 means no signal");
    require(h.rho <= 1.0, "g2_background_correct: rho must be <= 1");
    require(h.normalization > 0.0 && !h.counts.empty(), "g2_background_correct: empty histogram");
    require(opt.smooth_bins >= 1 && opt.smooth_bins % 2 == 1, "g2_background_correct: smooth_bins must be odd");
    const double r2 = h.rho * h.rho;
    g2_corrected out;
    out.tau_ns = h.tau_ns;
    out.raw = h.g2_raw();
    out.rho = h.rho;
    for (std::size_t i = 0; i < out.raw.size(); ++i) {
        out.corrected.push_back((out.raw[i] - (1.0 - r2)) / r2);
        const double n = std::max<double>(1.0, static_cast<double>(h.counts[i]));
        out.corrected_sigma.push_back(std::sqrt(n) / h.normalization / r2);
    }
    const auto z = static_cast<std::ptrdiff_t>(h.zero_bin());
    const std::ptrdiff_t half = opt.smooth_bins / 2;
    const auto size = static_cast<std::ptrdiff_t>(h.counts.size());
    out.dip = std::numeric_limits<double>::infinity();
    for (std::ptrdiff_t c = z - opt.search_bins; c <= z + opt.search_bins; ++c) {
        if (c - half < 0 || c + half >= size) {
            continue;
        }
        double sum = 0.0;
        double raw = 0.0;
        for (std::ptrdiff_t i = c - half; i <= c + half; ++i) {
            sum += static_cast<double>(h.counts[static_cast<std::size_t>(i)]);
            raw += out.raw[static_cast<std::size_t>(i)];
        }
        const double w = static_cast<double>(opt.smooth_bins);
        const double g_raw = raw / w;
        const double g_corr = (g_raw - (1.0 - r2)) / r2;
        if (g_corr < out.dip) {
            out.dip = g_corr;
            out.raw_dip = g_raw;
            out.dip_sigma = std::sqrt(std::max(sum, 1.0)) / (w * h.normalization) / r2;
            out.dip_tau_ns = h.tau_ns[static_cast<std::size_t>(c)];
        }
    }
    require(std::isfinite(out.dip), "g2_background_correct: histogram too narrow for the verdict window");
    out.single_emitter = out.dip + opt.z_score * out.dip_sigma < opt.threshold;
    return out;
}

} // namespace nvcav

#endif // NVCAV_G2_HPP
