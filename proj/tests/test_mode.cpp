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

#include <gtest/gtest.h>

#include <cmath>

#include "nvcav/mode.hpp"
#include "test_util.hpp"

using namespace nvcav;

namespace {

// Closed PEC box; its lowest Ey-polarised mode is sin(pi x/Lx) sin(pi z/Lz).
constexpr double lx = 600.0;
constexpr double ly = 400.0;
constexpr double lz = 500.0;
constexpr double box_cell = 20.0;

permittivity_grid pec_box()
{
    return testutil::vacuum_grid({static_cast<int>(lx / box_cell), static_cast<int>(ly / box_cell),
                                  static_cast<int>(lz / box_cell)},
                                 box_cell);
}

double box_frequency(int l, int m, int p)
{
    return 0.5 * std::sqrt(std::pow(l / lx, 2) + std::pow(m / ly, 2) + std::pow(p / lz, 2));
}

// Second-order Yee dispersion of the same mode (exact for the discrete box).
double discrete_box_frequency(int l, int m, int p, double cell, double courant)
{
    const double dt = courant * cell;
    double s = 0.0;
    const std::array<double, 3> k{pi * l / lx, pi * m / ly, pi * p / lz};
    for (double ka : k) {
        s += std::pow(std::sin(ka * cell / 2.0) / cell, 2);
    }
    return std::asin(dt * std::sqrt(s)) / (pi * dt);
}

source_spec ey_source(double lam)
{
    source_spec s;
    s.position_nm = {170.0, 210.0, 190.0};
    s.orientation = {0.0, 1.0, 0.0};
    s.wavelength_nm = lam;
    s.bandwidth = 0.3;
    return s;
}

} // namespace

TEST(ModeSearch, FindsAnalyticModeOfPecBox)
{
    const auto g = pec_box();
    mode_search_options opt;
    opt.wavelength_min_nm = 700.0;
    opt.wavelength_max_nm = 850.0;
    opt.sources = {ey_source(768.0)};
    opt.probes_nm = {{230.0, 150.0, 270.0}, {410.0, 250.0, 130.0}};
    opt.ringdown_steps = 3000;
    const auto r = find_resonances(g, boundary_spec::closed_pec(), opt);
    ASSERT_EQ(r.modes.size(), 1u);
    const double f_cont = box_frequency(1, 0, 1);
    const double f_disc = discrete_box_frequency(1, 0, 1, box_cell, 0.5);
    EXPECT_NEAR(r.modes[0].frequency, f_disc, 1e-6 * f_disc);
    EXPECT_LT(std::abs(r.modes[0].frequency - f_cont) / f_cont, 2e-3);
    EXPECT_TRUE(r.modes[0].decay_unresolved || r.modes[0].q > 1e5);
    EXPECT_EQ(r.modes[0].probes, 2);
    EXPECT_EQ(r.records.size(), 4u);
}

TEST(ModeProfile, PecBoxModeVolumeIsQuarterOfBox)
{
    const auto g = pec_box();
    const double f = discrete_box_frequency(1, 0, 1, box_cell, 0.5);
    profile_options po;
    po.source = ey_source(1.0 / f);
    po.ringdown_steps = 3000;
    const auto p = extract_mode_profile(g, f, boundary_spec::closed_pec(), po);
    ASSERT_TRUE(p.normalized);
    const auto v = mode_volume(p, 1.0);
    EXPECT_NEAR(v.nm3 / (lx * ly * lz / 4.0), 1.0, 0.01);
    const auto peak = p.argmax_position();
    EXPECT_NEAR(peak.x, lx / 2.0, box_cell);
    EXPECT_NEAR(peak.z, lz / 2.0, box_cell);
}

TEST(ModeProfile, DegenerateWindowIsRejected)
{
    const auto g = pec_box();
    profile_options po;
    po.other_frequencies = {1.001 / 700.0};
    EXPECT_THROW(extract_mode_profile(g, 1.0 / 700.0, boundary_spec::closed_pec(), po), invalid_input);
}

namespace {

// Gaussian energy density exp(-r^2 / (2 s^2)) in vacuum via Ex only.
mode_profile gaussian_profile(double s, double cell, int half, std::array<bool, 3> mirrored)
{
    vec3 origin{};
    std::array<int, 3> n{};
    for (int a = 0; a < 3; ++a) {
        n[a] = mirrored[a] ? half : 2 * half;
        origin[a] = mirrored[a] ? 0.0 : -half * cell;
    }
    auto p = mode_profile::from_functions(
        cell, n, origin, 1.0 / 600.0, [](vec3) { return 1.0; },
        [s](vec3 r) {
            const double u = std::exp(-dot(r, r) / (4.0 * s * s));
            return cvec3{u, 0.0, 0.0};
        });
    p.mirrored = mirrored;
    p.mirror_kind = {boundary_kind::pmc, boundary_kind::pec, boundary_kind::pec};
    p.normalize();
    return p;
}

} // namespace

TEST(ModeVolume, GaussianMatchesClosedForm)
{
    const double s = 60.0;
    const double expected = std::pow(2.0 * pi, 1.5) * s * s * s;
    const auto full = gaussian_profile(s, 5.0, 80, {false, false, false});
    const auto v = mode_volume(full, 1.0);
    // node averaging lowers the peak by a factor ~ 1 - (cell/2)^2 / (2 s^2)
    EXPECT_NEAR(v.nm3 / expected, 1.0, 5e-3);

    const auto octant = gaussian_profile(s, 5.0, 80, {true, true, true});
    EXPECT_NEAR(mode_volume(octant, 1.0).nm3 / v.nm3, 1.0, 1e-9);

    const double lam = 600.0 / 2.0;
    EXPECT_NEAR(mode_volume(full, 2.0).cubic_wavelengths, v.nm3 / (lam * lam * lam), 1e-12);
}

TEST(ModeVolume, RequiresNormalizedProfile)
{
    auto p = gaussian_profile(60.0, 10.0, 20, {false, false, false});
    p.scale(2.0);
    EXPECT_THROW(mode_volume(p, 1.0), invalid_input);
}

TEST(Localization, GaussianEnergyFractionWithinRadius)
{
    const double s = 60.0;
    const auto p = gaussian_profile(s, 5.0, 80, {false, false, false});
    for (double r : {50.0, 100.0, 150.0}) {
        // in-plane cylinder share of a 3D Gaussian
        const double expected = 1.0 - std::exp(-r * r / (2.0 * s * s));
        EXPECT_NEAR(localization_metric(p, r), expected, 0.01) << r;
    }
    const auto q = gaussian_profile(s, 5.0, 80, {true, true, false});
    EXPECT_NEAR(localization_metric(q, 100.0), localization_metric(p, 100.0), 0.01);
}

TEST(ModeProfile, InterpolationIsExactForLinearFields)
{
    const auto p = mode_profile::from_functions(
        10.0, {10, 10, 10}, {0.0, 0.0, 0.0}, 1.0 / 600.0, [](vec3) { return 2.0; },
        [](vec3 r) { return cvec3{1.0 + r.x + 2.0 * r.y, std::complex<double>(0.0, r.z), 3.0 - r.x}; });
    const vec3 q{33.3, 41.7, 58.2};
    const auto e = p.field_at(q);
    EXPECT_NEAR(e[0].real(), 1.0 + q.x + 2.0 * q.y, 1e-9);
    EXPECT_NEAR(e[1].imag(), q.z, 1e-9);
    EXPECT_NEAR(e[2].real(), 3.0 - q.x, 1e-9);
    EXPECT_NEAR(p.eps_at(q), 2.0, 1e-12);
    EXPECT_THROW(p.field_at({-5.0, 0.0, 0.0}), invalid_input);
}

TEST(ModeProfile, MirrorUnfoldingFollowsWallParity)
{
    // field with definite parity under x -> -x: Ex even, Ey and Ez odd
    auto field = [](vec3 r) {
        return cvec3{std::cos(r.x / 50.0) + 0.01 * r.y, std::sin(r.x / 50.0), r.x * 0.01 * (1.0 + r.z / 100.0)};
    };
    auto p = mode_profile::from_functions(10.0, {20, 10, 10}, {0.0, 0.0, 0.0}, 1.0 / 600.0,
                                          [](vec3) { return 1.0; }, field);
    p.mirrored = {true, false, false};
    p.mirror_kind[0] = boundary_kind::pec; // tangential E odd
    const vec3 q{-57.0, 31.0, 44.0};
    const auto e = p.field_at(q);
    const auto ref = field(q);
    for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(std::abs(e[c] - ref[c]), 0.0, 1e-2) << c;
    }
    p.mirror_kind[0] = boundary_kind::pmc;
    const auto flipped = p.field_at(q);
    EXPECT_NEAR(std::abs(flipped[0] + ref[0]), 0.0, 1e-2);
    EXPECT_NEAR(std::abs(flipped[1] + ref[1]), 0.0, 1e-2);
}
