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


// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,3] [--expect-fail 2] [--threads N] [--out DIR]
//
// Criteria listed in --expect-fail are reported but do not fail the run; an
// expected failure that passes does.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "nvcav/commands.hpp"
#include "nvcav/pipeline.hpp"
#include "nvcav/purcell.hpp"
#include "nvcav/spectro_fit.hpp"
#include "nvcav/synthetic.hpp"
#include "oracles.hpp"

using namespace nvcav;
namespace fs = std::filesystem;

namespace {

struct outcome
{
    bool pass = false;
    std::string detail;
};

struct context
{
    unsigned threads = 1;
    fs::path out;
};

std::string num(double v, int digits = 4)
{
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class Fn>
double timed(Fn&& fn)
{
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return seconds_since(t0);
}

json load_config(const std::string& name)
{
    return json::parse(detail::read_file_bytes((fs::path(NVCAV_SOURCE_DIR) / "configs" / name).string()));
}

outcome purcell_anchor(const context&)
{
    double f = 0.0;
    const double t = timed([&] {
        const double lambda = 637.0;
        const double n = 2.4;
        f = purcell_formula(lambda, n, std::pow(lambda / n, 3), 3800.0);
    });
    const double exact = 3.0 * 3800.0 / (4.0 * pi * pi);
    const double rel = std::abs(f - exact) / exact;
    return {rel < 1e-6 && std::abs(f - 288.8) < 0.05 && t < 1.0,
            "F = " + num(f, 7) + ", 3Q/4pi^2 = " + num(exact, 7) + ", rel " + num(rel, 2)};
}

outcome s1_mode_location(const context& ctx)
{
    auto j = load_config("s1_default.json");
    j["analyses"] = {"modes", "profile"};
    const auto c = run_config_from_json(j, NVCAV_SOURCE_DIR);
    simulate_result r;
    const double t = timed([&] { r = cmd_simulate(c, ctx.out / "s1", ctx.threads, "acceptance"); });
    if (!r.dominant || !r.argmax_nm) {
        return {false, "no dominant resonance or profile (" + num(t, 3) + " s)"};
    }
    const auto& a = *r.argmax_nm;
    const bool in_hole = r.argmax_in_first_ring_hole;
    return {in_hole && t < 1800.0,
            "lambda " + num(r.dominant->wavelength_nm, 5) + " nm, Q " + num(r.dominant->q, 4) + ", argmax eps|E|^2 at (" +
                num(a[0], 3) + ", " + num(a[1], 3) + ", " + num(a[2], 3) + ") nm, " +
                (in_hole ? "inside" : "outside") + " a first-ring hole, " + num(t, 3) + " s"};
}

outcome harminv_recovery(const context&)
{
    const double dt = 10.0;
    const double f0 = 1.0 / 637.0;
    std::vector<harmonic_mode> m;
    const double t = timed([&] {
        m = harmonic_inversion(oracles::ringdown({{f0, 3800.0, 1.0, 0.3}}, dt, 8000), dt, 1.0 / 760.0, 1.0 / 560.0);
    });
    if (m.size() != 1) {
        return {false, std::to_string(m.size()) + " modes found"};
    }
    const double ef = std::abs(m[0].frequency - f0) / f0;
    const double eq = std::abs(m[0].q - 3800.0) / 3800.0;
    return {ef < 5e-4 && eq < 0.02 && t < 10.0,
            "f rel err " + num(ef, 2) + ", Q " + num(m[0].q, 6) + " (rel " + num(eq, 2) + "), " + num(t, 3) + " s"};
}

outcome fdtd_correctness(const context&)
{
    std::vector<double> err;
    const double f0 = oracles::layered_cavity_exact();
    const double t_tm = timed([&] {
        for (double cell : {20.0, 10.0, 5.0}) {
            err.push_back(std::abs(oracles::simulated_mode(cell, f0) - f0) / f0);
        }
    });
    const double order = std::min(std::log2(err[0] / err[1]), std::log2(err[1] / err[2]));
    double drift = 0.0;
    const double t_e = timed([&] { drift = oracles::closed_box_energy_drift(10000); });
    double db = 0.0;
    const double t_p = timed([&] { db = oracles::pml_reflection_db(); });
    const bool pass = err[0] < 0.01 && order >= 1.7 && drift < 1e-6 && db < -40.0 && t_tm < 300.0 && t_e < 300.0 &&
                      t_p < 300.0;
    return {pass, "TM err " + num(err[0], 2) + " at 20 nm, order " + num(order, 3) + "; energy drift " + num(drift, 2) +
                      "; PML " + num(db, 3) + " dB; " + num(t_tm, 3) + "/" + num(t_e, 3) + "/" + num(t_p, 3) + " s"};
}

outcome farfield_checks(const context& ctx)
{
    double rms_sim = 0.0;
    double rms_exact = 0.0;
    double book = 0.0;
    double na1 = 0.0;
    const double t = timed([&] {
        const auto r = oracles::simulated_vacuum_dipole(ctx.threads);
        rms_sim = oracles::rms_against(r.simulated, [&](int a, int b) { return r.exact.at(a, b); }, std::asin(0.9));
        auto o = oracles::coarse_options();
        o.taper = 0.8;
        const auto wide = near_to_far(oracles::analytic_slice(oracles::lambda / 4.0, 10.0 * oracles::lambda, 20.0), o);
        rms_exact = oracles::pattern_rms(wide, std::asin(0.9));
        const auto ff =
            near_to_far(oracles::analytic_slice(oracles::lambda / 4.0, 10.0 * oracles::lambda, 20.0), oracles::coarse_options());
        book = std::abs(ff.total_power / oracles::k_grid_flux(ff) - 1.0);
        na1 = collection_efficiency(r.simulated, 1.0);
    });
    return {rms_sim < 0.03 && rms_exact < 0.03 && book < 0.02 && na1 == 1.0 && t < 300.0,
            "pattern RMS " + num(rms_sim, 2) + " (FDTD) / " + num(rms_exact, 2) + " (closed form), bookkeeping " +
                num(book, 2) + ", eta(NA=1) = " + num(na1, 17) + ", " + num(t, 3) + " s"};
}

outcome enhancement_chain(const context&)
{
    double worst = 0.0;
    double inferred = 0.0;
    const double t = timed([&] {
        const synthetic::emission_model m;
        const auto wl = synthetic::linspace(600.0, 780.0, 721);
        const linear_background after_bg{30.0, 0.1, 650.0};
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto p = synthetic::enhancement_pair(m, 630.0, 645.0, 4.0, 0.6, after_bg, wl, 0.005, seed);
            const auto e = enhancement_from_spectra(p.before, m.background, p.after, after_bg, 630.0, 645.0, 6.25);
            worst = std::max(worst, std::abs(e.detected / 4.0 - 1.0));
        }
        inferred = infer_enhancement(4.0, 6.25).inferred;
    });
    return {worst < 0.05 && inferred == 25.0 && t < 10.0,
            "boost 4 recovered within " + num(100.0 * worst, 2) + " %, 4 x 6.25 = " + num(inferred, 17) + ", " +
                num(t, 3) + " s"};
}

outcome composite_fit(const context&)
{
    const auto truth = dataset_truth{}.spectrum;
    const auto want = truth.to_array();
    int ok = 0;
    const double t = timed([&] {
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            const auto s = synthetic::composite_spectrum(truth, synthetic::linspace(620.0, 660.0, 801), 0.01, seed);
            auto guess = guess_composite(s, truth.zpl_center_nm + 0.3, truth.fano_center_nm - 0.4);
            guess.background.reference_nm = truth.background.reference_nm;
            const auto r = fit_composite_spectrum(s, guess);
            const auto got = r.params.to_array();
            bool all = r.converged;
            for (int i = 0; i < composite_params::count; ++i) {
                all = all && std::abs(got[i] - want[i]) <= 0.05 * std::abs(want[i]);
            }
            ok += all ? 1 : 0;
        }
    });
    return {ok >= 95 && t < 60.0, std::to_string(ok) + "/100 seeds within 5 % on all " +
                                      std::to_string(composite_params::count) + " parameters, " + num(t, 3) + " s"};
}

outcome saturation_fit(const context&)
{
    std::vector<double> powers;
    for (double p = 50.0; p <= 4000.0 + 1e-9; p += 50.0) {
        powers.push_back(p);
    }
    saturation_two_stage_result r;
    const double t = timed([&] {
        const auto ref = synthetic::saturation_curve(2.0e5, 770.0, 0.0, powers, 0.02, 1);
        const auto other = synthetic::saturation_curve(1.2e5, 770.0, 0.0, powers, 0.02, 2);
        r = fit_saturation_two_stage(ref, {other});
    });
    const double rel = std::abs(r.reference.p_sat_uw / 770.0 - 1.0);
    const bool staged = r.reference.a_fixed && r.others.size() == 1 && r.others[0].p_sat_fixed &&
                        r.others[0].p_sat_uw == r.reference.p_sat_uw;
    return {rel < 0.10 && staged && t < 10.0, "P_sat " + num(r.reference.p_sat_uw, 5) + " uW (truth 770, rel " +
                                                  num(rel, 2) + "), second curve at fixed P_sat, " + num(t, 3) + " s"};
}

outcome g2_pipeline(const context&)
{
    g2_corrected c;
    std::size_t events = 0;
    int outside = 0;
    const double t = timed([&] {
        synthetic::emitter_stream_spec s;
        s.rho = 0.7;
        s.duration_s = 1.0;
        s.signal_rate_per_s = 3.5e5;
        const auto st = synthetic::emitter_streams(s, 42);
        events = st.a.size() + st.b.size();
        auto h = g2_histogram(st.a, st.b, 1.0, 100.0);
        h.rho = s.rho;
        c = g2_background_correct(h);

        synthetic::rng gen(7);
        const auto a = synthetic::poisson_stream(5e5, 1.0, gen);
        const auto b = synthetic::poisson_stream(5e5, 1.0, gen);
        const auto flat = g2_histogram(a, b, 1.0, 100.0, 1.0);
        const auto g = flat.g2_raw();
        const double sigma = 1.0 / std::sqrt(flat.normalization);
        for (double v : g) {
            outside += std::abs(v - 1.0) >= 3.0 * sigma ? 1 : 0;
        }
    });
    const double upper = c.dip + 1.645 * c.dip_sigma;
    return {upper < 0.5 && outside == 0 && events >= 1000000 && t < 120.0,
            "corrected dip " + num(c.dip, 3) + " +/- " + num(c.dip_sigma, 2) + " (95 % upper " + num(upper, 3) +
                "), raw dip " + num(c.raw_dip, 3) + ", Poisson bins outside 3 sigma: " + std::to_string(outside) + ", " +
                std::to_string(events) + " events, " + num(t, 3) + " s"};
}

std::map<std::string, std::string> tree(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), root).string()] = detail::read_file_bytes(e.path().string());
        }
    }
    return out;
}

outcome determinism(const context& ctx)
{
    const auto c = run_config_from_json(load_config("vacuum.json"), NVCAV_SOURCE_DIR);
    std::vector<std::map<std::string, std::string>> sims;
    std::vector<std::map<std::string, std::string>> fits;
    const auto data = ctx.out / "data";
    cmd_generate(data, 1);
    const double t = timed([&] {
        for (unsigned n : {1u, 2u, 8u}) {
            const auto root = ctx.out / ("det_" + std::to_string(n));
            fs::remove_all(root);
            sims.push_back(tree(cmd_simulate(c, root / "sim", n, "acceptance").dir));
            cmd_fit_spectrum({(data / "spectrum.csv").string(), 637.0, 641.0, {}}, root / "fits");
            cmd_fit_saturation({(data / "saturation.csv").string(), true}, root / "fits");
            g2_request g;
            g.channel_a = (data / "g2_channel_a.txt").string();
            g.channel_b = (data / "g2_channel_b.txt").string();
            g.rho = 0.7;
            cmd_g2(g, root / "fits");
            fits.push_back(tree(root / "fits"));
        }
    });
    std::size_t monitors = 0;
    for (const auto& [name, bytes] : sims[0]) {
        monitors += name.rfind("monitors/", 0) == 0 ? 1 : 0;
    }
    const bool same = sims[0] == sims[1] && sims[0] == sims[2] && fits[0] == fits[1] && fits[0] == fits[2];
    return {same && monitors > 0, std::to_string(sims[0].size()) + " run files (" + std::to_string(monitors) +
                                      " monitor records) and " + std::to_string(fits[0].size()) +
                                      " fit files identical across 1/2/8 workers, " + num(t, 3) + " s"};
}

std::set<int> parse_list(const std::string& s)
{
    std::set<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        out.insert(std::stoi(tok));
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    std::set<int> expect_fail;
    context ctx;
    ctx.out = fs::temp_directory_path() / "nvcav_acceptance";
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        const bool has_value = i + 1 < argc;
        if (a == "--only" && has_value) {
            only = parse_list(argv[++i]);
        } else if (a == "--expect-fail" && has_value) {
            const auto more = parse_list(argv[++i]);
            expect_fail.insert(more.begin(), more.end());
        } else if (a == "--threads" && has_value) {
            ctx.threads = static_cast<unsigned>(std::stoul(argv[++i]));
        } else if (a == "--out" && has_value) {
            ctx.out = argv[++i];
        } else {
            std::cerr << "usage: acceptance [--only LIST] [--expect-fail LIST] [--threads N] [--out DIR]\n";
            return 2;
        }
    }
    fs::create_directories(ctx.out);

    const std::vector<std::pair<std::string, std::function<outcome(const context&)>>> criteria{
        {"Purcell formula anchor", purcell_anchor},
        {"S1 mode maximum in a first-ring air hole", s1_mode_location},
        {"harmonic inversion of a Q = 3800 ring-down", harminv_recovery},
        {"FDTD transfer-matrix, energy and PML checks", fdtd_correctness},
        {"far-field pattern, bookkeeping and NA = 1", farfield_checks},
        {"enhancement chain", enhancement_chain},
        {"composite spectral fit over 100 seeds", composite_fit},
        {"saturation fit and two-stage protocol", saturation_fit},
        {"g2 background correction and verdict", g2_pipeline},
        {"determinism across worker counts", determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) {
            continue;
        }
        outcome o;
        try {
            o = criteria[i].second(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const bool expected = expect_fail.count(id) > 0;
        std::string verdict = o.pass ? "PASS" : "FAIL";
        if (expected) {
            verdict += o.pass ? " (expected failure did not occur)" : " (expected)";
        }
        failures += (o.pass == expected) ? 1 : 0;
        std::printf("criterion %2d %s | %s | %s\n", id, verdict.c_str(), criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
