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

#ifndef NVCAV_HARMINV_HPP
#define NVCAV_HARMINV_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "nvcav/core.hpp"
#include "nvcav/fdtd.hpp"

namespace nvcav {

/// One damped sinusoid a * exp(-i omega t), omega = 2 pi f - i decay.
struct harmonic_mode
{
    double frequency = 0.0; ///< cycles per unit time (1/nm in engine units)
    double decay = 0.0;     ///< -Im(omega), per unit time
    double q = 0.0;         ///< Re(omega) / (-2 Im(omega)); +inf when undamped
    std::complex<double> amplitude;
    double error = 0.0;     ///< consistency estimate from the shifted problem
    bool decay_unresolved = false;
};

struct harminv_options
{
    /// Basis density relative to the Fourier resolution of the signal.
    double density = 1.1;
    int min_basis = 4;
    int max_basis = 300;
    /// Relative singular value cut-off of the overlap matrix.
    double svd_cutoff = 1e-11;
    /// Modes whose error estimate exceeds this are discarded.
    double max_error = 1e-3;
    /// Amplitude floor relative to max |signal|.
    double min_rel_amplitude = 1e-6;
    /// Above this Q the decay is reported as unresolved.
    double q_report_threshold = 1e6;
};

namespace detail {

using cd = std::complex<double>;
using cmat = Eigen::MatrixXcd;

/**
 * Overlap matrices of the filter-diagonalization basis
 *   U(p)_jk = sum_{n,m=0..M} z_j^-n z_k^-m c_{n+m+p},
 * evaluated in O(K M) via the closed-form geometric sums.
 */
inline cmat fdm_matrix(const std::vector<cd>& c, const std::vector<cd>& z, int m_half, int p)
{
    const int K = static_cast<int>(z.size());
    const int M = m_half;
    std::vector<cd> lo(K);   // sum_{n=0..M} c_{n+p} z^-n
    std::vector<cd> hi(K);   // sum_{n=M+1..2M} c_{n+p} z^{M-n+1}
    std::vector<cd> diag(K); // sum_{n=0..2M} (M - |M-n| + 1) c_{n+p} z^-n
    for (int j = 0; j < K; ++j) {
        const cd zinv = 1.0 / z[j];
        cd pw = 1.0;
        cd s_lo = 0.0;
        cd s_d = 0.0;
        for (int n = 0; n <= M; ++n) {
            s_lo += c[n + p] * pw;
            s_d += static_cast<double>(n + 1) * c[n + p] * pw;
            pw *= zinv;
        }
        // pw == z^-(M+1)
        cd s_hi = 0.0;
        cd up = 1.0; // z^{M-n+1} for n = M+1 is z^0
        for (int n = M + 1; n <= 2 * M; ++n) {
            s_hi += c[n + p] * up;
            s_d += static_cast<double>(2 * M - n + 1) * c[n + p] * pw;
            up *= zinv;
            pw *= zinv;
        }
        lo[j] = s_lo;
        hi[j] = s_hi;
        diag[j] = s_d;
    }
    cmat u(K, K);
    for (int j = 0; j < K; ++j) {
        u(j, j) = diag[j];
        const cd zjm = std::pow(z[j], -M);
        for (int k = j + 1; k < K; ++k) {
            const cd zkm = std::pow(z[k], -M);
            const cd v = (z[j] * lo[k] - z[k] * lo[j] + zkm * hi[j] - zjm * hi[k]) / (z[j] - z[k]);
            u(j, k) = v;
            u(k, j) = v;
        }
    }
    return u;
}

} // namespace detail

/**
 * Decompose a uniformly sampled signal into damped sinusoids whose
 * frequencies lie in [f_min, f_max] (filter diagonalization).
 *
 * Returned modes are sorted by frequency. A band without signal above the
 * amplitude floor gives an empty list.
 */
inline std::vector<harmonic_mode> harmonic_inversion(const std::vector<std::complex<double>>& signal,
                                                     double dt, double f_min, double f_max,
                                                     const harminv_options& opt = {})
{
    using detail::cd;
    require(dt > 0.0, "harmonic_inversion: dt must be > 0");
    require(f_max > f_min && f_min >= 0.0, "harmonic_inversion: invalid band");
    require(signal.size() >= 16, "harmonic_inversion: signal too short");
    require(f_max * dt < 0.5, "harmonic_inversion: band above the Nyquist frequency");

    double peak = 0.0;
    for (const auto& v : signal) {
        peak = std::max(peak, std::abs(v));
    }
    if (peak == 0.0) {
        return {};
    }
    // normalise to unit peak for conditioning
    std::vector<cd> c(signal.size());
    for (std::size_t n = 0; n < signal.size(); ++n) {
        c[n] = signal[n] / peak;
    }

    const int n_samples = static_cast<int>(c.size());
    const int M = (n_samples - 3) / 2; // U(2) needs c_{2M+2}
    const double phi_min = 2.0 * pi * f_min * dt;
    const double phi_max = 2.0 * pi * f_max * dt;
    int K = static_cast<int>(std::ceil((phi_max - phi_min) * M / pi * opt.density));
    K = std::clamp(K, opt.min_basis, opt.max_basis);

    std::vector<cd> z(K);
    for (int j = 0; j < K; ++j) {
        const double phi = K == 1 ? 0.5 * (phi_min + phi_max)
                                  : phi_min + (phi_max - phi_min) * j / (K - 1);
        z[j] = std::polar(1.0, -phi);
    }

    const auto u0 = detail::fdm_matrix(c, z, M, 0);
    const auto u1 = detail::fdm_matrix(c, z, M, 1);
    const auto u2 = detail::fdm_matrix(c, z, M, 2);

    // restrict to the well-conditioned subspace of U0
    Eigen::JacobiSVD<detail::cmat> svd(u0, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int r = 0;
    while (r < sv.size() && sv(r) > opt.svd_cutoff * sv(0)) {
        ++r;
    }
    if (r == 0) {
        return {};
    }
    const detail::cmat ur = svd.matrixU().leftCols(r);
    const detail::cmat vr = svd.matrixV().leftCols(r);
    detail::cmat reduced = ur.adjoint() * u1 * vr;
    for (int i = 0; i < r; ++i) {
        reduced.row(i) /= sv(i);
    }
    Eigen::ComplexEigenSolver<detail::cmat> es(reduced);
    if (es.info() != Eigen::Success) {
        return {};
    }

    // projections of the signal on the basis: sum_{n=0..M} c_n z_j^-n
    Eigen::VectorXcd proj(K);
    for (int j = 0; j < K; ++j) {
        const cd zinv = 1.0 / z[j];
        cd pw = 1.0;
        cd s = 0.0;
        for (int n = 0; n <= M; ++n) {
            s += c[n] * pw;
            pw *= zinv;
        }
        proj(j) = s;
    }

    std::vector<harmonic_mode> out;
    for (int k = 0; k < r; ++k) {
        const cd u = es.eigenvalues()(k);
        if (std::abs(u) == 0.0) {
            continue;
        }
        const Eigen::VectorXcd b = vr * es.eigenvectors().col(k);
        const cd norm0 = (b.transpose() * u0 * b)(0, 0);
        if (std::abs(norm0) == 0.0) {
            continue;
        }
        const cd u_sq = (b.transpose() * u2 * b)(0, 0) / norm0;
        const cd amp_root = (b.transpose() * proj)(0, 0);
        const cd amp = amp_root * amp_root / norm0 * peak;

        const cd log_u = std::log(u);
        const double omega_re = -log_u.imag() / dt;
        const double omega_im = log_u.real() / dt;
        harmonic_mode m;
        m.frequency = omega_re / (2.0 * pi);
        m.decay = -omega_im;
        m.amplitude = amp;
        m.error = std::abs(u_sq - u * u) / std::abs(u * u);
        if (m.frequency < f_min || m.frequency > f_max) {
            continue;
        }
        if (!(m.error <= opt.max_error)) {
            continue;
        }
        if (std::abs(amp) < opt.min_rel_amplitude * peak) {
            continue;
        }
        if (m.decay > 0.0) {
            m.q = omega_re / (2.0 * m.decay);
        } else {
            m.q = std::numeric_limits<double>::infinity();
        }
        m.decay_unresolved = m.q > opt.q_report_threshold;
        out.push_back(m);
    }
    std::sort(out.begin(), out.end(),
              [](const harmonic_mode& a, const harmonic_mode& b) { return a.frequency < b.frequency; });
    return out;
}

inline std::vector<harmonic_mode> harmonic_inversion(const std::vector<double>& signal, double dt,
                                                     double f_min, double f_max,
                                                     const harminv_options& opt = {})
{
    std::vector<std::complex<double>> c(signal.begin(), signal.end());
    return harmonic_inversion(c, dt, f_min, f_max, opt);
}

/// Harmonic inversion of a monitor record from `start_step` onwards.
inline std::vector<harmonic_mode> harmonic_inversion(const monitor_record& rec, double f_min,
                                                     double f_max, std::int64_t start_step = 0,
                                                     const harminv_options& opt = {})
{
    const std::int64_t offset = std::max<std::int64_t>(0, start_step - rec.first_step);
    require(offset < static_cast<std::int64_t>(rec.samples.size()),
            "harmonic_inversion: ring-down window starts after the record ends");
    std::vector<double> seg(rec.samples.begin() + offset, rec.samples.end());
    return harmonic_inversion(seg, rec.dt_nm, f_min, f_max, opt);
}

} // namespace nvcav

#endif
