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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nvcav/commands.hpp"
#include "nvcav/pipeline.hpp"

namespace {

enum exit_code : int { ok = 0, failed = 1, bad_input = 2, unstable = 3 };

struct common_flags
{
    std::string config;
    std::string out = "out";
    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    std::optional<double> na;
    std::optional<double> resolution;
};

unsigned thread_count(const common_flags& f)
{
    if (f.threads) {
        return std::max(1u, *f.threads);
    }
    return nvcav::threads_from_env(1);
}

nvcav::run_config load_config(const common_flags& f)
{
    if (f.config.empty()) {
        throw nvcav::config_error("--config", "a configuration file is required");
    }
    const auto j = nvcav::read_json_file(f.config);
    const auto base = std::filesystem::path(f.config).parent_path().string();
    auto c = nvcav::run_config_from_json(j, base.empty() ? "." : base);
    if (f.resolution) {
        if (*f.resolution < 10.0) {
            throw nvcav::config_error("--resolution", "must be >= 10 cells per period");
        }
        c.resolution = *f.resolution;
    }
    if (f.na) {
        if (!(*f.na > 0.0 && *f.na <= 1.0)) {
            throw nvcav::config_error("--na", "must be in (0, 1]");
        }
        c.far.na = *f.na;
    }
    if (f.seed) {
        c.seed = *f.seed;
    }
    return c;
}

int report_simulation(const nvcav::simulate_result& r)
{
    std::cout << "run " << r.run_id << " -> " << r.dir.string() << '\n';
    std::cout << r.modes.size() << " resonance(s)\n";
    for (const auto& m : r.modes) {
        std::cout << "  " << m.wavelength_nm << " nm  Q " << (m.decay_unresolved ? std::string("unresolved") : std::to_string(m.q))
                  << (m.volume ? "  V " + std::to_string(m.volume->cubic_wavelengths) + " (lambda/n)^3" : std::string())
                  << '\n';
    }
    if (r.purcell) {
        std::cout << "Purcell factor " << r.purcell->factor << '\n';
    }
    if (r.collection_efficiency) {
        std::cout << "collection efficiency " << *r.collection_efficiency << '\n';
    }
    if (r.detection_ratio) {
        std::cout << "detection ratio " << *r.detection_ratio << '\n';
    }
    for (const auto& m : r.messages) {
        std::cerr << "error: " << m << '\n';
    }
    return r.ok ? ok : failed;
}

int report_fit(const nvcav::command_outcome& o)
{
    std::cout << o.summary << "report " << (o.dir / "report.json").string() << '\n';
    return o.ok ? ok : failed;
}

nvcav::linear_background parse_background(const std::vector<double>& v, const char* flag)
{
    if (v.empty()) {
        return {};
    }
    if (v.size() != 3) {
        throw nvcav::config_error(flag, "expected offset,slope_per_nm,reference_nm");
    }
    return {v[0], v[1], v[2]};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"nvcav: photonic crystal cavity simulation and emitter data analysis"};
    app.set_version_flag("--version", nvcav::version_string);
    app.require_subcommand(1);

    common_flags f;
    auto add_sim_flags = [&](CLI::App* s) {
        s->add_option("--config", f.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        s->add_option("--out", f.out, "output root directory");
        s->add_option("--threads", f.threads, "worker threads (default: NVCAV_THREADS or 1)");
        s->add_option("--seed", f.seed, "random seed");
        s->add_option("--resolution", f.resolution, "grid cells per lattice period");
        s->add_option("--na", f.na, "objective numerical aperture");
    };

    auto* simulate = app.add_subcommand("simulate", "run the analyses listed in the configuration");
    add_sim_flags(simulate);
    auto* modes = app.add_subcommand("modes", "resonances only");
    add_sim_flags(modes);
    auto* purcell = app.add_subcommand("purcell", "resonances, profile and Purcell factor");
    add_sim_flags(purcell);
    auto* farfield = app.add_subcommand("farfield", "resonances, profile and far field");
    add_sim_flags(farfield);
    auto* sweep = app.add_subcommand("sweep", "grid sweep over lattice constant and hole radius");
    add_sim_flags(sweep);

    nvcav::spectrum_fit_request spec_req;
    nvcav::enhancement_request enh_req;
    std::string before, after;
    std::vector<double> band, bg_before, bg_after;
    auto* fit_spec = app.add_subcommand("fit-spectrum", "composite ZPL + Fano fit, or cavity-band enhancement");
    fit_spec->add_option("--input", spec_req.input, "spectrum CSV")->check(CLI::ExistingFile);
    fit_spec->add_option("--zpl-nm", spec_req.zpl_center_nm, "ZPL centre guess");
    fit_spec->add_option("--cavity-nm", spec_req.cavity_center_nm, "cavity line centre guess");
    fit_spec->add_option("--fix", spec_req.fixed, "parameter names held at the guess");
    fit_spec->add_option("--before", before, "spectrum before coupling (enhancement mode)")->check(CLI::ExistingFile);
    fit_spec->add_option("--after", after, "spectrum after coupling (enhancement mode)")->check(CLI::ExistingFile);
    fit_spec->add_option("--band-nm", band, "cavity band lo,hi")->delimiter(',')->expected(2);
    fit_spec->add_option("--detection-ratio", enh_req.detection_ratio, "collection ratio reference/cavity");
    fit_spec->add_option("--bg-before", bg_before, "linear background offset,slope,reference_nm")->delimiter(',');
    fit_spec->add_option("--bg-after", bg_after, "linear background offset,slope,reference_nm")->delimiter(',');
    fit_spec->add_option("--out", f.out, "output root directory");

    nvcav::saturation_request sat_req;
    bool free_fit = false;
    auto* fit_sat = app.add_subcommand("fit-saturation", "saturation fit (first count column is the reference)");
    fit_sat->add_option("--input", sat_req.input, "CSV: power_uw, counts...")->required()->check(CLI::ExistingFile);
    fit_sat->add_flag("--free", free_fit, "fit every curve independently instead of the two-stage protocol");
    fit_sat->add_option("--out", f.out, "output root directory");

    nvcav::g2_request g2_req;
    auto* g2 = app.add_subcommand("g2", "coincidence histogram, background correction and verdict");
    g2->add_option("--a", g2_req.channel_a, "channel A time tags (ps)")->required()->check(CLI::ExistingFile);
    g2->add_option("--b", g2_req.channel_b, "channel B time tags (ps)")->required()->check(CLI::ExistingFile);
    g2->add_option("--bin-ns", g2_req.bin_ns, "bin width");
    g2->add_option("--window-ns", g2_req.window_ns, "half window");
    g2->add_option("--rho", g2_req.rho, "signal-to-total ratio");
    g2->add_option("--total-rate", g2_req.total_rate_per_s, "count rate on the emitter (1/s)");
    g2->add_option("--background-rate", g2_req.background_rate_per_s, "count rate next to the emitter (1/s)");
    g2->add_option("--acquisition-s", g2_req.acquisition_s, "acquisition time (default: tag span)");
    g2->add_option("--out", f.out, "output root directory");

    std::uint64_t gen_seed = 1;
    std::string gen_dir = "data";
    auto* generate = app.add_subcommand("generate", "write the synthetic datasets");
    generate->add_option("--out", gen_dir, "directory to write into");
    generate->add_option("--seed", gen_seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed() || modes->parsed() || purcell->parsed() || farfield->parsed()) {
            auto c = load_config(f);
            std::string cmd = "simulate";
            if (modes->parsed()) {
                c.analyses = {"modes"};
                cmd = "modes";
            } else if (purcell->parsed()) {
                c.analyses = {"modes", "profile", "purcell"};
                cmd = "purcell";
            } else if (farfield->parsed()) {
                c.analyses = {"modes", "profile", "farfield"};
                cmd = "farfield";
            }
            return report_simulation(nvcav::cmd_simulate(c, f.out, thread_count(f), cmd));
        }
        if (sweep->parsed()) {
            const auto c = load_config(f);
            const auto r = nvcav::cmd_sweep(c, f.out, thread_count(f));
            std::cout << "sweep " << r.run_id << " -> " << (r.dir / "sweep.csv").string() << '\n';
            bool all_ok = true;
            for (const auto& row : r.rows) {
                std::cout << "  a " << row.a_nm << "  r " << row.r_nm << "  lambda " << row.wavelength_nm << "  Q "
                          << row.q << "  " << row.status << '\n';
                all_ok = all_ok && row.status == "ok";
            }
            if (r.best) {
                std::cout << "best: a " << r.rows[*r.best].a_nm << ", r " << r.rows[*r.best].r_nm << '\n';
            } else {
                std::cout << "no row within tolerance of the target wavelength\n";
            }
            return all_ok ? ok : failed;
        }
        if (fit_spec->parsed()) {
            if (!before.empty() || !after.empty()) {
                if (before.empty() || after.empty() || band.size() != 2) {
                    throw nvcav::config_error("fit-spectrum", "enhancement mode needs --before, --after and --band-nm");
                }
                enh_req.before = before;
                enh_req.after = after;
                enh_req.band_lo_nm = band[0];
                enh_req.band_hi_nm = band[1];
                enh_req.before_background = parse_background(bg_before, "--bg-before");
                enh_req.after_background = parse_background(bg_after, "--bg-after");
                return report_fit(nvcav::cmd_enhancement(enh_req, f.out));
            }
            if (spec_req.input.empty()) {
                throw nvcav::config_error("fit-spectrum", "--input is required");
            }
            return report_fit(nvcav::cmd_fit_spectrum(spec_req, f.out));
        }
        if (fit_sat->parsed()) {
            sat_req.two_stage = !free_fit;
            return report_fit(nvcav::cmd_fit_saturation(sat_req, f.out));
        }
        if (g2->parsed()) {
            return report_fit(nvcav::cmd_g2(g2_req, f.out));
        }
        if (generate->parsed()) {
            for (const auto& p : nvcav::cmd_generate(gen_dir, gen_seed)) {
                std::cout << p.string() << '\n';
            }
            return ok;
        }
    } catch (const nvcav::instability_error& e) {
        std::cerr << "error: simulation unstable: " << e.what() << '\n';
        return unstable;
    } catch (const nvcav::invalid_input& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bad_input;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failed;
    }
    return failed;
}
