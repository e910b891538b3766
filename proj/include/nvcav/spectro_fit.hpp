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

#ifndef NVCAV_SPECTRO_FIT_HPP
#define NVCAV_SPECTRO_FIT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nvcav/core.hpp"
#include "nvcav/lsq.hpp"
#include "nvcav/spectrum.hpp"

namespace nvcav {

/// q at or beyond this magnitude is evaluated as the Lorentzian limit.
inline constexpr double fano_lorentz_q = 1e6;

/// amplitude (q + e)^2 / ((1 + e^2)(1 + q^2)),  e = 2 (lambda - center) / gamma
inline double fano_lineshape(double lambda, double center, double gamma, double q, double amplitude)
{
    require(gamma > 0.0, "fano_lineshape: gamma must be > 0");
    const double e = 2.0 * (lambda - center) / gamma;
    if (std::abs(q) >= fano_lorentz_q) {
        return amplitude / (1.0 + e * e);
    }
    return amplitude * (q + e) * (q + e) / ((1.0 + e * e) * (1.0 + q * q));
}

inline double gaussian_line(double lambda, double center, double sigma, double amplitude)
{
    const double z = (lambda - center) / sigma;
    return amplitude * std::exp(-0.5 * z * z);
}

/// Linear background offset + slope * (lambda - reference).
struct linear_background
{
    double offset = 0.0;
    double slope = 0.0;
    double reference_nm = 0.0;

    double operator()(double lambda) const { return offset + slope * (lambda - reference_nm); }
};

struct composite_params
{
    linear_background background;
    double zpl_center_nm = 637.0;
    double zpl_sigma_nm = 0.5;
    double zpl_amplitude = 1.0;
    double fano_center_nm = 640.0;
    double fano_gamma_nm = 1.0;
    double fano_q = 2.0;
    double fano_amplitude = 1.0;

    static constexpr int count = 9;
    static constexpr std::array<const char*, count> names = {
        "background_offset", "background_slope_per_nm", "zpl_center_nm",  "zpl_sigma_nm",  "zpl_amplitude",
        "fano_center_nm",    "fano_gamma_nm",          "fano_q",         "fano_amplitude"};

    std::array<double, count> to_array() const
    {
        return {background.offset, background.slope, zpl_center_nm,  zpl_sigma_nm,  zpl_amplitude,
                fano_center_nm,    fano_gamma_nm,    fano_q,         fano_amplitude};
    }

    static composite_params from_array(const std::array<double, count>& v, double reference_nm)
    {
        composite_params p;
        p.background = {v[0], v[1], reference_nm};
        p.zpl_center_nm = v[2];
        p.zpl_sigma_nm = v[3];
        p.zpl_amplitude = v[4];
        p.fano_center_nm = v[5];
        p.fano_gamma_nm = v[6];
        p.fano_q = v[7];
        p.fano_amplitude = v[8];
        return p;
    }

    double zpl(double lambda) const { return gaussian_line(lambda, zpl_center_nm, zpl_sigma_nm, zpl_amplitude); }
    double fano(double lambda) const
    {
        return fano_lineshape(lambda, fano_center_nm, fano_gamma_nm, fano_q, fano_amplitude);
    }
    double operator()(double lambda) const { return background(lambda) + zpl(lambda) + fano(lambda); }
};

struct composite_fit_options
{
    lsq_options solver;
    std::array<bool, composite_params::count> fixed{};
};

struct composite_fit_result
{
    composite_params params;
    std::array<double, composite_params::count> uncertainty{};
    double residual_norm = 0.0;
    double reduced_chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string status;
    std::vector<std::string> warnings;
};

/**
 * Starting point read off the data: background through the end-point
 * averages, peak heights above it at the given centres.
 */
inline composite_params guess_composite(const spectrum& s, double zpl_center_nm, double cavity_center_nm)
{
    s.validate();
    require(s.size() >= 12, "guess_composite: spectrum too short");
    const std::size_t k = std::max<std::size_t>(3, s.size() / 20);
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    for (std::size_t i = 0; i < k; ++i) {
        x0 += s.wavelength_nm[i];
        y0 += s.intensity[i];
        x1 += s.wavelength_nm[s.size() - 1 - i];
        y1 += s.intensity[s.size() - 1 - i];
    }
    x0 /= k, y0 /= k, x1 /= k, y1 /= k;
    composite_params p;
    p.background.reference_nm = 0.5 * (s.wavelength_nm.front() + s.wavelength_nm.back());
    p.background.slope = (y1 - y0) / (x1 - x0);
    p.background.offset = y0 + p.background.slope * (p.background.reference_nm - x0);
    auto height = [&](double c) {
        auto it = std::lower_bound(s.wavelength_nm.begin(), s.wavelength_nm.end(), c);
        const auto i = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
            std::distance(s.wavelength_nm.begin(), it), static_cast<std::ptrdiff_t>(s.size()) - 1));
        return std::max(0.0, s.intensity[i] - p.background(s.wavelength_nm[i]));
    };
    const double step = (s.wavelength_nm.back() - s.wavelength_nm.front()) / static_cast<double>(s.size() - 1);
    p.zpl_center_nm = zpl_center_nm;
    p.zpl_sigma_nm = std::max(0.5, 3.0 * step);
    p.zpl_amplitude = height(zpl_center_nm);
    p.fano_center_nm = cavity_center_nm;
    p.fano_gamma_nm = std::max(1.0, 4.0 * step);
    p.fano_q = 3.0;
    p.fano_amplitude = height(cavity_center_nm);
    return p;
}

/**
 * Linear background + Gaussian ZPL + Fano cavity line by bounded
 * Levenberg-Marquardt. Residuals are weighted by the uncertainty column when
 * present. Widths are kept positive and amplitudes non-negative.
 */
inline composite_fit_result fit_composite_spectrum(const spectrum& s, const composite_params& guess,
                                                   const composite_fit_options& opt = {})
{
    s.validate();
    require(s.size() > composite_params::count, "fit_composite_spectrum: not enough samples");
    const double lo = s.wavelength_nm.front();
    const double hi = s.wavelength_nm.back();
    require(guess.zpl_center_nm >= lo && guess.zpl_center_nm <= hi && guess.fano_center_nm >= lo &&
                guess.fano_center_nm <= hi,
            "fit_composite_spectrum: initial centres must lie within the data range");
    const double ref = guess.background.reference_nm;
    std::vector<double> w(s.size(), 1.0);
    if (!s.uncertainty.empty()) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            require(s.uncertainty[i] > 0.0, "fit_composite_spectrum: uncertainties must be > 0");
            w[i] = 1.0 / s.uncertainty[i];
        }
    }
    lsq_problem prob;
    prob.residuals = [&](const Eigen::VectorXd& v) {
        std::array<double, composite_params::count> a;
        for (int i = 0; i < composite_params::count; ++i) {
            a[static_cast<std::size_t>(i)] = v[i];
        }
        const auto p = composite_params::from_array(a, ref);
        Eigen::VectorXd r(static_cast<Eigen::Index>(s.size()));
        for (std::size_t i = 0; i < s.size(); ++i) {
            r[static_cast<Eigen::Index>(i)] = (s.intensity[i] - p(s.wavelength_nm[i])) * w[i];
        }
        return r;
    };
    const auto g = guess.to_array();
    prob.start = Eigen::Map<const Eigen::VectorXd>(g.data(), composite_params::count);
    prob.fixed.assign(opt.fixed.begin(), opt.fixed.end());
    const double inf = std::numeric_limits<double>::infinity();
    const double span = hi - lo;
    prob.lower = Eigen::VectorXd::Constant(composite_params::count, -inf);
    prob.upper = Eigen::VectorXd::Constant(composite_params::count, inf);
    prob.lower[2] = lo;
    prob.upper[2] = hi;
    prob.lower[3] = 1e-6 * span;
    prob.lower[4] = 0.0;
    prob.lower[5] = lo;
    prob.upper[5] = hi;
    prob.lower[6] = 1e-6 * span;
    prob.lower[8] = 0.0;

    const auto lr = least_squares(prob, opt.solver);
    composite_fit_result out;
    std::array<double, composite_params::count> a;
    for (int i = 0; i < composite_params::count; ++i) {
        a[static_cast<std::size_t>(i)] = lr.params[i];
        out.uncertainty[static_cast<std::size_t>(i)] = lr.uncertainty[i];
    }
    out.params = composite_params::from_array(a, ref);
    out.residual_norm = lr.residual_norm;
    out.reduced_chi2 = lr.reduced_chi2;
    out.iterations = lr.iterations;
    out.converged = lr.converged;
    out.status = lr.status;
    if (!out.converged) {
        out.warnings.push_back("not converged: " + lr.status + "; best-so-far parameters returned");
    }
    if (std::abs(out.params.zpl_center_nm - out.params.fano_center_nm) < out.params.fano_gamma_nm / 10.0) {
        out.warnings.push_back("ambiguous: ZPL and cavity line centres closer than gamma/10");
    }
    return out;
}

struct saturation_point
{
    double power_uw = 0.0;
    double counts = 0.0;
};

inline double saturation_model(double p, double y_inf, double p_sat, double a)
{
    return y_inf * p / (p + p_sat) + a * p;
}

struct saturation_options
{
    bool fix_a_zero = false;
    std::optional<double> fixed_psat_uw;
    lsq_options solver;
};

struct saturation_fit_result
{
    double y_inf = 0.0;
    double p_sat_uw = 0.0;
    double a = 0.0;
    double y_inf_err = 0.0;
    double p_sat_err = 0.0;
    double a_err = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
    /// False when the data do not constrain the knee.
    bool p_sat_identifiable = true;
    bool a_fixed = false;
    bool p_sat_fixed = false;
    std::string status;
};

namespace detail {

// Linear least squares for (y_inf, a) at fixed p_sat; a optional.
inline std::pair<Eigen::Vector2d, double> saturation_linear(const std::vector<saturation_point>& pts, double p_sat,
                                                            bool with_a)
{
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd A(n, with_a ? 2 : 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double p = pts[static_cast<std::size_t>(i)].power_uw;
        A(i, 0) = p / (p + p_sat);
        if (with_a) {
            A(i, 1) = p;
        }
        y[i] = pts[static_cast<std::size_t>(i)].counts;
    }
    Eigen::VectorXd x = A.colPivHouseholderQr().solve(y);
    if (with_a && x[1] < 0.0) {
        return saturation_linear(pts, p_sat, false);
    }
    Eigen::Vector2d out(x[0], with_a ? x[1] : 0.0);
    return {out, (A * x - y).squaredNorm()};
}

} // namespace detail

/**
 * Fit of y = y_inf P/(P + P_sat) + a P. The free-P_sat case scans P_sat on a
 * logarithmic grid with the linear parameters solved exactly, then refines
 * all free parameters jointly.
 */
inline saturation_fit_result fit_saturation(const std::vector<saturation_point>& pts,
                                            const saturation_options& opt = {})
{
    require(pts.size() >= 4, "fit_saturation: at least 4 points are required");
    double p_min = std::numeric_limits<double>::infinity();
    double p_max = 0.0;
    for (const auto& pt : pts) {
        require(pt.power_uw > 0.0 && std::isfinite(pt.counts), "fit_saturation: powers must be > 0");
        p_min = std::min(p_min, pt.power_uw);
        p_max = std::max(p_max, pt.power_uw);
    }
    saturation_fit_result out;
    out.a_fixed = opt.fix_a_zero;
    out.p_sat_fixed = opt.fixed_psat_uw.has_value();

    double p_sat = 0.0;
    if (opt.fixed_psat_uw) {
        require(*opt.fixed_psat_uw > 0.0, "fit_saturation: fixed P_sat must be > 0");
        p_sat = *opt.fixed_psat_uw;
    } else {
        const double lo = std::log(p_min / 100.0);
        const double hi = std::log(p_max * 100.0);
        const int n_scan = 400;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= n_scan; ++i) {
            const double ps = std::exp(lo + (hi - lo) * i / n_scan);
            const double r = detail::saturation_linear(pts, ps, !opt.fix_a_zero).second;
            if (r < best) {
                best = r;
                p_sat = ps;
            }
        }
    }
    const auto lin = detail::saturation_linear(pts, p_sat, !opt.fix_a_zero).first;

    lsq_problem prob;
    prob.residuals = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(pts.size()));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            r[static_cast<Eigen::Index>(i)] = pts[i].counts - saturation_model(pts[i].power_uw, v[0], v[1], v[2]);
        }
        return r;
    };
    prob.start = Eigen::Vector3d(lin[0], p_sat, opt.fix_a_zero ? 0.0 : lin[1]);
    prob.fixed = {false, out.p_sat_fixed, out.a_fixed};
    prob.lower = Eigen::Vector3d(0.0, 1e-9 * p_min, 0.0);
    prob.upper = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    const auto lr = least_squares(prob, opt.solver);

    out.y_inf = lr.params[0];
    out.p_sat_uw = lr.params[1];
    out.a = lr.params[2];
    out.y_inf_err = lr.uncertainty[0];
    out.p_sat_err = lr.uncertainty[1];
    out.a_err = lr.uncertainty[2];
    out.residual_norm = lr.residual_norm;
    out.converged = lr.converged;
    out.status = lr.status;
    if (!out.p_sat_fixed) {
        out.p_sat_identifiable = out.y_inf > 0.0 && out.p_sat_uw < 10.0 * p_max &&
                                 out.p_sat_err < out.p_sat_uw && std::isfinite(out.p_sat_err);
    }
    return out;
}

struct saturation_two_stage_result
{
    saturation_fit_result reference;
    std::vector<saturation_fit_result> others;
};

/// Fit the reference curve with a = 0, then the others at its P_sat.
inline saturation_two_stage_result fit_saturation_two_stage(const std::vector<saturation_point>& reference,
                                                            const std::vector<std::vector<saturation_point>>& others)
{
    saturation_two_stage_result out;
    saturation_options first;
    first.fix_a_zero = true;
    out.reference = fit_saturation(reference, first);
    saturation_options second;
    second.fixed_psat_uw = out.reference.p_sat_uw;
    for (const auto& curve : others) {
        out.others.push_back(fit_saturation(curve, second));
    }
    return out;
}

} // namespace nvcav

#endif // NVCAV_SPECTRO_FIT_HPP
