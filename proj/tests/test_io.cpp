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

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "nvcav/io.hpp"
#include "nvcav/pipeline.hpp"
#include "test_util.hpp"

using namespace nvcav;
namespace fs = std::filesystem;

namespace {

json s1_config()
{
    return json::parse(testutil::slurp(fs::path(NVCAV_SOURCE_DIR) / "configs" / "s1_default.json"));
}

std::string config_error_path(const json& j)
{
    try {
        run_config_from_json(j, NVCAV_SOURCE_DIR);
    } catch (const config_error& e) {
        return e.path();
    }
    return "<accepted>";
}

std::size_t csv_error_line(const std::string& text)
{
    std::istringstream in(text);
    try {
        read_spectrum_csv(in, "test.csv");
    } catch (const parse_error& e) {
        return e.line();
    }
    return 0;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(NVCAV_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool contains_file(const fs::path& root, const std::string& name)
{
    if (!fs::exists(root)) {
        return false;
    }
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.path().filename() == name) {
            return true;
        }
    }
    return false;
}

} // namespace

TEST(Config, DefaultS1Parses)
{
    const auto c = run_config_from_json(s1_config(), NVCAV_SOURCE_DIR);
    ASSERT_TRUE(c.design.has_value());
    EXPECT_EQ(c.design->lattice.lattice_constant_nm, 200.0);
    EXPECT_EQ(c.cell_nm(), 20.0);
    EXPECT_EQ(c.analyses.size(), 4u);
    EXPECT_TRUE(c.mirrored[0] && c.mirrored[1] && c.mirrored[2]);
    EXPECT_EQ(c.boundary.faces[0][0], boundary_kind::pec);
    EXPECT_EQ(c.boundary.faces[1][0], boundary_kind::pmc);
}

TEST(Config, ClosedFacesAreNotMirrors)
{
    const auto j = json::parse(R"({"vacuum": {"size_nm": [400, 400, 400]},
                                   "boundary": {"faces": {"x": ["pec", "pec"]}}})");
    const auto c = run_config_from_json(j, NVCAV_SOURCE_DIR);
    EXPECT_FALSE(c.mirrored[0]);
    const auto again = run_config_from_json(run_config_to_json(c), NVCAV_SOURCE_DIR);
    EXPECT_FALSE(again.mirrored[0]);
    EXPECT_EQ(again.boundary.faces[0][1], boundary_kind::pec);
}

TEST(Config, ErrorsNameTheField)
{
    auto j = s1_config();
    j["design"]["lattice"]["hole_radius_nm"] = 120;
    EXPECT_EQ(config_error_path(j), "design.lattice");

    j = s1_config();
    j["design"]["lattice"]["hole_radius"] = 60;
    EXPECT_EQ(config_error_path(j), "design.lattice.hole_radius");

    j = s1_config();
    j["resolution_cells_per_period"] = 8;
    EXPECT_EQ(config_error_path(j), "resolution_cells_per_period");

    j = s1_config();
    j["design"]["defect"]["kind"] = "H7";
    EXPECT_EQ(config_error_path(j), "design.defect.kind");

    j = s1_config();
    j["design"]["lattice"]["slab_index"] = "high";
    EXPECT_EQ(config_error_path(j), "design.lattice.slab_index");

    j = s1_config();
    j.erase("design");
    EXPECT_EQ(config_error_path(j), "design");

    j = s1_config();
    j["design_file"] = "elsewhere.json";
    EXPECT_EQ(config_error_path(j), "design_file");
}

TEST(Config, AnalysisChainIsChecked)
{
    auto j = s1_config();
    j["analyses"] = {"modes", "purcell"};
    EXPECT_EQ(config_error_path(j), "analyses");
    j["analyses"] = {"profile"};
    EXPECT_EQ(config_error_path(j), "analyses");
    j["analyses"] = {"modes", "spectra"};
    EXPECT_EQ(config_error_path(j), "analyses");
    j["analyses"] = {"modes", "profile"};
    EXPECT_EQ(config_error_path(j), "<accepted>");
}

TEST(Config, CanonicalFormRoundTrips)
{
    const auto c = run_config_from_json(s1_config(), NVCAV_SOURCE_DIR);
    const auto j = run_config_to_json(c);
    const auto again = run_config_from_json(j, NVCAV_SOURCE_DIR);
    EXPECT_EQ(run_config_to_json(again).dump(), j.dump());
    EXPECT_EQ(run_id(run_config_to_json(c)), run_id(run_config_to_json(again)));
    auto other = s1_config();
    other["seed"] = 99;
    EXPECT_NE(run_id(run_config_to_json(run_config_from_json(other, NVCAV_SOURCE_DIR))), run_id(j));
}

TEST(Csv, ReadsHeaderCommentsAndUncertainty)
{
    std::istringstream in("# measured\nwavelength_nm,counts,uncertainty\n630,10,1\n\n631,12,1.5\n");
    const auto s = read_spectrum_csv(in, "x.csv");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.intensity[1], 12.0);
    EXPECT_EQ(s.uncertainty[1], 1.5);
}

TEST(Csv, ErrorsCarryTheLineNumber)
{
    EXPECT_EQ(csv_error_line("wavelength_nm,counts\n630,1\n631,abc\n"), 3u);
    EXPECT_EQ(csv_error_line("630,1\n631,2\n632\n"), 3u);
    EXPECT_EQ(csv_error_line("# c\n630,1,1\n\n631,2\n"), 4u);
    std::istringstream unsorted("630,1\n629,2\n");
    EXPECT_THROW(read_spectrum_csv(unsorted, "u.csv"), invalid_input);
    std::istringstream empty("# nothing\n");
    EXPECT_THROW(read_spectrum_csv(empty, "e.csv"), parse_error);
}

TEST(Csv, SpectrumAndSaturationRoundTrip)
{
    spectrum s;
    s.wavelength_nm = {630.125, 630.25, 630.375};
    s.intensity = {1.5, -2.25, 1e6 / 3.0};
    std::stringstream io;
    write_spectrum_csv(io, s);
    const auto back = read_spectrum_csv(io, "rt.csv");
    EXPECT_EQ(back.wavelength_nm, s.wavelength_nm);
    EXPECT_NEAR(back.intensity[2], s.intensity[2], 1e-12 * s.intensity[2]);

    const std::vector<std::vector<saturation_point>> curves{{{50, 100}, {100, 180}}, {{50, 60}, {100, 110}}};
    std::stringstream sat;
    write_saturation_csv(sat, curves);
    const auto rt = read_saturation_csv(sat, "sat.csv");
    ASSERT_EQ(rt.size(), 2u);
    EXPECT_EQ(rt[1][1].counts, 110.0);
    std::istringstream ragged("power_uw,a,b\n50,1,2\n100,3\n");
    try {
        read_saturation_csv(ragged, "r.csv");
        FAIL() << "ragged table accepted";
    } catch (const parse_error& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Timestamps, ValidatesEveryLine)
{
    std::istringstream ok("# tags\n10\n20\n20\n35\n");
    EXPECT_EQ(read_timestamps(ok, "t").size(), 4u);
    std::istringstream neg("10\n-5\n");
    try {
        read_timestamps(neg, "t");
        FAIL();
    } catch (const parse_error& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::istringstream unsorted("10\n30\n20\n");
    try {
        read_timestamps(unsorted, "t");
        FAIL();
    } catch (const parse_error& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Binary, GridRoundTripIsExact)
{
    cavity_design d;
    d.lattice.n_rows = 15;
    d.lattice.n_cols = 15;
    const auto g = build_permittivity(d, 20.0, {true, false, true});
    std::stringstream io;
    write_grid_binary(io, g);
    const auto back = read_grid_binary(io);
    EXPECT_EQ(back.n, g.n);
    EXPECT_EQ(back.cell_nm, g.cell_nm);
    EXPECT_EQ(back.origin_nm, g.origin_nm);
    for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(back.eps[c], g.eps[c]);
    }
    std::stringstream bad("NOTAGRID");
    EXPECT_THROW(read_grid_binary(bad), invalid_input);
    std::string cut = io.str();
    cut.resize(cut.size() / 2);
    std::stringstream truncated(cut);
    EXPECT_THROW(read_grid_binary(truncated), invalid_input);
}

TEST(Cli, MalformedInputExitsWithoutReport)
{
    const auto dir = testutil::scratch_dir("cli_malformed");
    testutil::write_text(dir / "bad.csv", "wavelength_nm,counts\n630,1\n631,oops\n");
    EXPECT_EQ(run_cli("fit-spectrum --input " + (dir / "bad.csv").string() + " --out " + (dir / "out").string()), 2);
    EXPECT_FALSE(contains_file(dir / "out", "report.json"));

    testutil::write_text(dir / "bad_sat.csv", "power_uw,counts\n50,1\n100\n");
    EXPECT_EQ(run_cli("fit-saturation --input " + (dir / "bad_sat.csv").string() + " --out " + (dir / "out").string()), 2);
    EXPECT_FALSE(contains_file(dir / "out", "report.json"));

    testutil::write_text(dir / "cfg.json", "{\"vacuum\": {\"size_nm\": [400, 400, 400]}, \"analyses\": [\"purcell\"]}");
    EXPECT_EQ(run_cli("simulate --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string()), 2);
    EXPECT_FALSE(contains_file(dir / "out", "manifest.json"));
}
