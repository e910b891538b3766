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

#include <algorithm>
#include <cmath>
#include <set>

#include "nvcav/geometry.hpp"

using namespace nvcav;

namespace {

cavity_design small_design(defect_kind k = defect_kind::s1)
{
    cavity_design d;
    d.lattice.n_rows = 7;
    d.lattice.n_cols = 7;
    d.lattice.min_periods_per_side = 3;
    d.defect.kind = k;
    d.domain.lateral_padding_nm = 100.0;
    d.domain.air_padding_nm = 200.0;
    d.domain.pml_cells = 8;
    return d;
}

} // namespace

TEST(Geometry, HoleCountMatchesRowStructure)
{
    lattice_spec lat;
    // rows -7..7: even rows hold 15 sites, odd rows 14
    const int even_rows = 7;
    const int odd_rows = 8;
    const std::size_t full = even_rows * 15 + odd_rows * 14;
    EXPECT_EQ(hole_positions(lat, {defect_kind::none, 0.0}).size(), full);
    EXPECT_EQ(hole_positions(lat, {defect_kind::s1, 0.0}).size(), full - 1);
    EXPECT_EQ(hole_positions(lat, {defect_kind::l3, 0.0}).size(), full - 3);
}

TEST(Geometry, HolesAreMirrorSymmetric)
{
    lattice_spec lat;
    for (auto kind : {defect_kind::s1, defect_kind::l3}) {
        const auto h = hole_positions(lat, {kind, kind == defect_kind::l3 ? 30.0 : 0.0});
        std::set<std::pair<double, double>> s;
        for (const auto& p : h) {
            s.insert({p.x, p.y});
        }
        for (const auto& p : h) {
            EXPECT_TRUE(s.count({-p.x, p.y})) << p.x << "," << p.y;
            EXPECT_TRUE(s.count({p.x, -p.y})) << p.x << "," << p.y;
        }
    }
}

TEST(Geometry, NearestNeighboursFormTriangularLattice)
{
    lattice_spec lat;
    const auto h = hole_positions(lat, {defect_kind::none, 0.0});
    const auto centre = std::find(h.begin(), h.end(), hole{0.0, 0.0});
    ASSERT_NE(centre, h.end());
    int at_a = 0;
    for (const auto& p : h) {
        const double d = std::hypot(p.x, p.y);
        if (d > 0.0) {
            EXPECT_GE(d, lat.lattice_constant_nm * (1.0 - 1e-12));
        }
        if (std::abs(d - lat.lattice_constant_nm) < 1e-9) {
            ++at_a;
        }
    }
    EXPECT_EQ(at_a, 6);
}

TEST(Geometry, FirstRingOfS1IsSixHolesAtOnePeriod)
{
    lattice_spec lat;
    const auto ring = first_ring_holes(lat, {defect_kind::s1, 0.0});
    ASSERT_EQ(ring.size(), 6u);
    for (const auto& h : ring) {
        EXPECT_NEAR(std::hypot(h.x, h.y), lat.lattice_constant_nm, 1e-9);
    }
    EXPECT_TRUE(first_ring_hole_containing(lat, {}, {200.0, 10.0, 0.0}).has_value());
    EXPECT_FALSE(first_ring_hole_containing(lat, {}, {200.0, 10.0, 100.0}).has_value());
    EXPECT_FALSE(first_ring_hole_containing(lat, {}, {0.0, 0.0, 0.0}).has_value());
    EXPECT_FALSE(first_ring_hole_containing(lat, {}, {400.0, 0.0, 0.0}).has_value());
}

TEST(Geometry, L3SideHoleShiftMovesOnlyTerminatingHoles)
{
    lattice_spec lat;
    const auto base = hole_positions(lat, {defect_kind::l3, 0.0});
    const auto shifted = hole_positions(lat, {defect_kind::l3, 40.0});
    ASSERT_EQ(base.size(), shifted.size());
    int moved = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (!(base[i] == shifted[i])) {
            ++moved;
            EXPECT_EQ(base[i].y, 0.0);
            EXPECT_NEAR(std::abs(shifted[i].x) - std::abs(base[i].x), 40.0, 1e-12);
        }
    }
    EXPECT_EQ(moved, 2);
    EXPECT_THROW(hole_positions(lat, {defect_kind::s1, 10.0}), invalid_input);
}

TEST(Geometry, DielectricVolumeMatchesAnalyticArea)
{
    const auto d = small_design();
    const double cell = 10.0;
    const auto g = build_permittivity(d, cell);
    const auto& lat = d.lattice;
    const double area = g.n[0] * cell * g.n[1] * cell;
    const double holes = static_cast<double>(hole_positions(lat, d.defect).size()) * pi * lat.hole_radius_nm *
                         lat.hole_radius_nm;
    const double expected = (lat.slab_index * lat.slab_index - 1.0) * lat.slab_thickness_nm * (area - holes);
    for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(dielectric_excess(g, c) / expected, 1.0, 2e-3) << "component " << c;
    }
}

TEST(Geometry, MirroredGridIsExactQuadrantOfFullGrid)
{
    const auto d = small_design();
    const double cell = 20.0;
    const auto full = build_permittivity(d, cell);
    const auto quad = build_permittivity(d, cell, {true, true, true});
    std::array<int, 3> off{};
    for (int a = 0; a < 3; ++a) {
        ASSERT_EQ(full.n[a], 2 * quad.n[a]);
        off[a] = quad.n[a];
        EXPECT_EQ(quad.origin_nm[a], 0.0);
        EXPECT_EQ(quad.pml_cells[a][0], 0);
    }
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i <= quad.n[0]; ++i) {
            for (int j = 0; j <= quad.n[1]; ++j) {
                for (int k = 0; k <= quad.n[2]; ++k) {
                    ASSERT_EQ(quad.at(c, i, j, k), full.at(c, i + off[0], j + off[1], k + off[2]));
                }
            }
        }
    }
}

TEST(Geometry, FullGridIsSymmetricUnderReflection)
{
    const auto d = small_design();
    const auto g = build_permittivity(d, 20.0);
    // Ez samples sit on integer x and y nodes, so x -> -x maps i -> n - i
    for (int i = 0; i <= g.n[0]; ++i) {
        for (int j = 0; j <= g.n[1]; ++j) {
            ASSERT_EQ(g.at(2, i, j, 5), g.at(2, g.n[0] - i, j, 5));
            ASSERT_EQ(g.at(2, i, j, 5), g.at(2, i, g.n[1] - j, 5));
        }
    }
}

TEST(Geometry, NanocrystalAddsSphereVolume)
{
    auto d = small_design();
    const double cell = 10.0;
    const auto bare = build_permittivity(d, cell);
    nanocrystal_placement p;
    p.center_nm = {0.0, 0.0, d.lattice.slab_thickness_nm / 2.0 + 60.0};
    p.diameter_nm = 80.0;
    p.index = 2.4;
    const auto with = place_nanocrystal(bare, p);
    const double rad = p.diameter_nm / 2.0;
    const double expected = (p.index * p.index - 1.0) * 4.0 / 3.0 * pi * rad * rad * rad;
    for (int c = 0; c < 3; ++c) {
        const double added = dielectric_excess(with, c) - dielectric_excess(bare, c);
        EXPECT_NEAR(added / expected, 1.0, 0.01) << "component " << c;
    }
    // idempotent
    const auto twice = place_nanocrystal(with, p);
    EXPECT_EQ(twice.eps, with.eps);
    // same as placing through the design
    d.nanocrystal = p;
    EXPECT_EQ(build_permittivity(d, cell).eps, with.eps);
}

TEST(Geometry, NanocrystalInsidePmlIsRejected)
{
    const auto d = small_design();
    const auto g = build_permittivity(d, 20.0);
    nanocrystal_placement p;
    p.center_nm = {0.0, 0.0, g.hi(2) - 30.0};
    EXPECT_THROW(place_nanocrystal(g, p), invalid_input);
}

TEST(Geometry, ValidationRejectsBadDesigns)
{
    auto d = small_design();
    EXPECT_THROW(build_permittivity(d, 25.0), invalid_input); // coarser than a/10
    d.lattice.hole_radius_nm = 100.0;
    EXPECT_THROW(d.validate(), invalid_input);
    d = small_design();
    d.lattice.n_rows = 8;
    EXPECT_THROW(d.validate(), invalid_input);
    d = small_design();
    d.lattice.min_periods_per_side = 7;
    EXPECT_THROW(d.validate(), invalid_input);
    EXPECT_THROW(defect_from_name("H1"), invalid_input);
    EXPECT_EQ(defect_from_name(defect_name(defect_kind::l3)), defect_kind::l3);
}

TEST(Geometry, ExplicitDomainSizeIsHonouredOrRejected)
{
    auto d = small_design();
    d.domain.size_nm = {2000.0, 2000.0, 1200.0};
    const auto g = build_permittivity(d, 20.0);
    EXPECT_EQ(g.n[0], 100);
    EXPECT_EQ(g.n[2], 60);
    d.domain.size_nm = {600.0, 2000.0, 1200.0};
    EXPECT_THROW(build_permittivity(d, 20.0), invalid_input);
}
