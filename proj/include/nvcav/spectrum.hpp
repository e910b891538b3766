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

#ifndef NVCAV_SPECTRUM_HPP
#define NVCAV_SPECTRUM_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <string>
#include <vector>

#include <fftw3.h>

#include "nvcav/core.hpp"
#include "nvcav/fdtd.hpp"

namespace nvcav {

/// Intensity versus wavelength, wavelengths strictly increasing.
struct spectrum
{
    std::vector<double> wavelength_nm;
    std::vector<double> intensity;
    std::vector<double> uncertainty; ///< empty, or one entry per sample
    std::string window = "none";

    std::size_t size() const { return wavelength_nm.size(); }

    void validate() const
    {
        require(wavelength_nm.size() == intensity.size(), "spectrum: column lengths differ");
        require(uncertainty.empty() || uncertainty.size() == intensity.size(),
                "spectrum: uncertainty column length differs");
        for (std::size_t i = 1; i < wavelength_nm.size(); ++i) {
            require(wavelength_nm[i] > wavelength_nm[i - 1], "spectrum: wavelengths must increase strictly");
        }
    }
};

enum class window_kind { rectangular, hann };

struct periodogram_options
{
    window_kind window = window_kind::hann;
    /// Transform length is the next power of two >= pad_factor * samples.
    int pad_factor = 4;
    std::size_t min_samples = 1024;
};

/// |windowed DFT|^2 on the non-negative frequency grid k / (n_fft dt).
struct periodogram
{
    std::vector<double> frequency;
    std::vector<double> power;
    window_kind window = window_kind::hann;
};

inline periodogram compute_periodogram(const std::vector<double>& samples, double dt,
                                       const periodogram_options& opt = {})
{
    require(dt > 0.0, "spectrum_from_timeseries: dt must be > 0");
    require(samples.size() >= opt.min_samples,
            "spectrum_from_timeseries: record shorter than the analysis window (" +
                std::to_string(samples.size()) + " < " + std::to_string(opt.min_samples) + " samples)");
    const std::size_t n = samples.size();
    std::size_t n_fft = 1;
    while (n_fft < n * static_cast<std::size_t>(std::max(1, opt.pad_factor))) {
        n_fft <<= 1;
    }
    std::vector<double> in(n_fft, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double w = 1.0;
        if (opt.window == window_kind::hann) {
            w = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(n - 1));
        }
        in[i] = samples[i] * w;
    }
    std::vector<std::complex<double>> out(n_fft / 2 + 1);
    // the FFTW planner is not thread-safe
    static std::mutex planner_mutex;
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in.data(),
                                    reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex);
        fftw_destroy_plan(plan);
    }

    periodogram p;
    p.window = opt.window;
    p.frequency.resize(out.size());
    p.power.resize(out.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        p.frequency[k] = static_cast<double>(k) / (static_cast<double>(n_fft) * dt);
        p.power[k] = std::norm(out[k] * dt);
    }
    return p;
}

/**
 * Windowed power spectrum of a monitor record from `start_step` on,
 * expressed against vacuum wavelength (nm) in increasing order. The DC bin
 * is dropped.
 */
inline spectrum spectrum_from_timeseries(const monitor_record& rec, std::int64_t start_step = 0,
                                         const periodogram_options& opt = {})
{
    const std::int64_t offset = std::max<std::int64_t>(0, start_step - rec.first_step);
    require(offset <= static_cast<std::int64_t>(rec.samples.size()),
            "spectrum_from_timeseries: start step after the record ends");
    std::vector<double> seg(rec.samples.begin() + offset, rec.samples.end());
    const auto p = compute_periodogram(seg, rec.dt_nm, opt);
    spectrum s;
    s.window = opt.window == window_kind::hann ? "hann" : "rectangular";
    for (std::size_t k = p.frequency.size(); k-- > 1;) {
        s.wavelength_nm.push_back(1.0 / p.frequency[k]);
        s.intensity.push_back(p.power[k]);
    }
    return s;
}

/// Local maxima of a sampled curve, strongest first.
inline std::vector<std::size_t> find_peaks(const std::vector<double>& y, double min_rel_height = 1e-3)
{
    double ymax = 0.0;
    for (double v : y) {
        ymax = std::max(ymax, v);
    }
    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        if (y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] >= min_rel_height * ymax) {
            peaks.push_back(i);
        }
    }
    std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });
    return peaks;
}

/// Full width at half maximum around peak index i, with linear interpolation.
inline double peak_fwhm(const std::vector<double>& x, const std::vector<double>& y, std::size_t i)
{
    const double half = y[i] / 2.0;
    std::size_t l = i;
    while (l > 0 && y[l] > half) {
        --l;
    }
    std::size_t r = i;
    while (r + 1 < y.size() && y[r] > half) {
        ++r;
    }
    require(y[l] <= half && y[r] <= half, "peak_fwhm: peak not resolved inside the range");
    const double xl = x[l] + (half - y[l]) * (x[l + 1] - x[l]) / (y[l + 1] - y[l]);
    const double xr = x[r - 1] + (half - y[r - 1]) * (x[r] - x[r - 1]) / (y[r] - y[r - 1]);
    return std::abs(xr - xl);
}

} // namespace nvcav

#endif
