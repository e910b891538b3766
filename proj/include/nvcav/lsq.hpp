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

#ifndef NVCAV_LSQ_HPP
#define NVCAV_LSQ_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "nvcav/core.hpp"

namespace nvcav {

/// Residual vector r(p); the fit minimises sum r_i^2.
using residual_fn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct lsq_options
{
    double xtol = 1e-8;
    double ftol = 1e-12;
    int max_iterations = 500;
    /// Covariance scaled by the reduced chi-square (unknown noise level).
    bool scale_covariance = true;
    /// Rounds of the bound active-set loop.
    int max_bound_rounds = 4;
};

struct lsq_problem
{
    residual_fn residuals;
    Eigen::VectorXd start;
    std::vector<bool> fixed; ///< empty: all free
    Eigen::VectorXd lower;   ///< empty: unbounded
    Eigen::VectorXd upper;
};

struct lsq_result
{
    Eigen::VectorXd params;
    Eigen::VectorXd uncertainty; ///< zero for fixed parameters
    Eigen::MatrixXd covariance;
    double chi2 = 0.0;
    double reduced_chi2 = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
    int dof = 0;
    bool converged = false;
    std::string status;
};

namespace detail {

struct reduced_functor
{
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const residual_fn* fn = nullptr;
    Eigen::VectorXd full;
    std::vector<int> free_idx;
    int n_values = 0;

    int inputs() const { return static_cast<int>(free_idx.size()); }
    int values() const { return n_values; }

    Eigen::VectorXd expand(const Eigen::VectorXd& x) const
    {
        Eigen::VectorXd p = full;
        for (std::size_t i = 0; i < free_idx.size(); ++i) {
            p[free_idx[i]] = x[static_cast<Eigen::Index>(i)];
        }
        return p;
    }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const
    {
        fvec = (*fn)(expand(x));
        for (Eigen::Index i = 0; i < fvec.size(); ++i) {
            if (!std::isfinite(fvec[i])) {
                fvec[i] = 1e150;
            }
        }
        return 0;
    }
};

inline const char* lm_status_name(int s)
{
    switch (s) {
    case 1: return "relative reduction below ftol";
    case 2: return "relative step below xtol";
    case 3: return "relative step and reduction below tolerance";
    case 4: return "gradient orthogonal to residuals";
    case 5: return "iteration limit reached";
    case 6: return "ftol too small for further reduction";
    case 7: return "xtol too small for further improvement";
    case 8: return "gtol too small for further improvement";
    default: return "improper input";
    }
}

} // namespace detail

/**
 * Levenberg-Marquardt minimisation (MINPACK scheme) with central-difference
 * Jacobians, fixed parameters, and box bounds enforced by an active set:
 * a parameter that ends outside its bounds is clamped, frozen, and the fit
 * repeated. The covariance is (J^T J)^-1 over the free parameters.
 */
inline lsq_result least_squares(const lsq_problem& prob, const lsq_options& opt = {})
{
    const auto n = prob.start.size();
    require(n > 0, "least_squares: no parameters");
    require(prob.fixed.empty() || static_cast<Eigen::Index>(prob.fixed.size()) == n,
            "least_squares: fixed mask has the wrong length");
    const bool bounded = prob.lower.size() == n && prob.upper.size() == n;
    std::vector<bool> frozen = prob.fixed.empty() ? std::vector<bool>(static_cast<std::size_t>(n), false)
                                                  : prob.fixed;
    Eigen::VectorXd p = prob.start;
    if (bounded) {
        p = p.cwiseMax(prob.lower).cwiseMin(prob.upper);
    }
    const Eigen::Index m = prob.residuals(p).size();

    lsq_result res;
    int total_iter = 0;
    int status = 0;
    for (int round = 0; round <= opt.max_bound_rounds; ++round) {
        detail::reduced_functor f;
        f.fn = &prob.residuals;
        f.full = p;
        f.n_values = static_cast<int>(m);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!frozen[static_cast<std::size_t>(i)]) {
                f.free_idx.push_back(static_cast<int>(i));
            }
        }
        require(m >= static_cast<Eigen::Index>(f.free_idx.size()),
                "least_squares: fewer residuals than free parameters");
        if (f.free_idx.empty()) {
            status = 2;
            break;
        }
        Eigen::VectorXd x(static_cast<Eigen::Index>(f.free_idx.size()));
        for (std::size_t i = 0; i < f.free_idx.size(); ++i) {
            x[static_cast<Eigen::Index>(i)] = p[f.free_idx[i]];
        }
        Eigen::NumericalDiff<detail::reduced_functor, Eigen::Central> nd(f);
        Eigen::LevenbergMarquardt<decltype(nd)> lm(nd);
        lm.parameters.xtol = opt.xtol;
        lm.parameters.ftol = opt.ftol;
        lm.parameters.maxfev = std::numeric_limits<int>::max();
        auto st = lm.minimizeInit(x);
        int iter = 0;
        if (st == Eigen::LevenbergMarquardtSpace::NotStarted) {
            st = Eigen::LevenbergMarquardtSpace::Running;
        }
        while (st == Eigen::LevenbergMarquardtSpace::Running) {
            if (iter >= opt.max_iterations) {
                st = Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation;
                break;
            }
            st = lm.minimizeOneStep(x);
            ++iter;
        }
        total_iter += iter;
        status = static_cast<int>(st);
        p = f.expand(x);

        bool changed = false;
        if (bounded) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (p[i] < prob.lower[i] || p[i] > prob.upper[i]) {
                    p[i] = std::clamp(p[i], prob.lower[i], prob.upper[i]);
                    frozen[static_cast<std::size_t>(i)] = true;
                    changed = true;
                }
            }
        }
        if (!changed) {
            break;
        }
    }

    res.params = p;
    res.iterations = total_iter;
    res.status = detail::lm_status_name(status);
    res.converged = status >= 1 && status <= 8 && status != 5;

    const Eigen::VectorXd r = prob.residuals(p);
    res.chi2 = r.squaredNorm();
    res.residual_norm = std::sqrt(res.chi2);

    std::vector<int> orig_free;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (prob.fixed.empty() || !prob.fixed[static_cast<std::size_t>(i)]) {
            orig_free.push_back(static_cast<int>(i));
        }
    }
    res.dof = static_cast<int>(m) - static_cast<int>(orig_free.size());
    res.reduced_chi2 = res.dof > 0 ? res.chi2 / res.dof : 0.0;
    res.covariance = Eigen::MatrixXd::Zero(n, n);
    res.uncertainty = Eigen::VectorXd::Zero(n);
    // Jacobian over all originally free parameters (bound-active ones keep
    // their unconstrained uncertainty)
    if (!orig_free.empty()) {
        Eigen::MatrixXd J(m, static_cast<Eigen::Index>(orig_free.size()));
        for (std::size_t c = 0; c < orig_free.size(); ++c) {
            const int i = orig_free[c];
            const double h = 1e-6 * std::max(std::abs(p[i]), 1e-3);
            Eigen::VectorXd a = p;
            Eigen::VectorXd b = p;
            a[i] += h;
            b[i] -= h;
            J.col(static_cast<Eigen::Index>(c)) = (prob.residuals(a) - prob.residuals(b)) / (2.0 * h);
        }
        const Eigen::MatrixXd jtj = J.transpose() * J;
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
        Eigen::MatrixXd cov = cod.pseudoInverse();
        if (opt.scale_covariance && res.dof > 0) {
            cov *= res.reduced_chi2;
        }
        for (std::size_t a = 0; a < orig_free.size(); ++a) {
            for (std::size_t b = 0; b < orig_free.size(); ++b) {
                res.covariance(orig_free[a], orig_free[b]) =
                    cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
            res.uncertainty[orig_free[a]] = std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(a),
                                                                        static_cast<Eigen::Index>(a))));
        }
    }
    return res;
}

} // namespace nvcav

#endif // NVCAV_LSQ_HPP
