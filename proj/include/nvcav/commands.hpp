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

#ifndef NVCAV_COMMANDS_HPP
#define NVCAV_COMMANDS_HPP

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nvcav/g2.hpp"
#include "nvcav/io.hpp"
#include "nvcav/pipeline.hpp"
#include "nvcav/purcell.hpp"
#include "nvcav/spectro_fit.hpp"
#include "nvcav/synthetic.hpp"

// Data-file commands: spectral, saturation and g2 fits, and the synthetic
// dataset generator.

namespace nvcav {

struct command_outcome
{
    std::string run_id;
    std::filesystem::path dir;
    json report;
    std::string summary;
    bool ok = true;
};

namespace detail {

inline std::string read_file_bytes(const std::string& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw invalid_input(file + ": cannot open file");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Inputs enter the run id through their content, not their path.
inline json input_digest(const std::vector<std::pair<std::string, std::string>>& named_contents)
{
    json d = json::object();
    for (const auto& [name, data] : named_contents) {
        d[name] = hex64(fnv1a(data));
    }
    return d;
}

inline command_outcome finish_fit(const std::string& command, const json& request, json report, std::string summary,
                                  bool ok, const std::filesystem::path& out_root,
                                  const std::vector<std::pair<std::string, std::function<void(std::ostream&)>>>& extra = {})
{
    command_outcome o;
    o.run_id = run_id(json{{"command", command}, {"request", request}});
    o.dir = out_root / o.run_id;
    std::filesystem::remove_all(o.dir);
    artifact_writer w(o.dir);
    report["ok"] = ok;
    w.write_json("report.json", report);
    w.write("summary.txt", [&](std::ostream& os) { os << summary; });
    for (const auto& [name, fn] : extra) {
        w.write(name, fn);
    }
    w.finish(command, request);
    o.report = std::move(report);
    o.summary = std::move(summary);
    o.ok = ok;
    return o;
}

inline std::string fmt(double v, int prec = 6)
{
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

inline std::string pm(double v, double err, const char* unit = "")
{
    return fmt(v) + " +/- " + fmt(err, 3) + unit;
}

} // namespace detail

struct spectrum_fit_request
{
    std::string input;
    std::optional<double> zpl_center_nm;
    std::optional<double> cavity_center_nm;
    std::vector<std::string> fixed; ///< parameter names held at the guess
};

inline command_outcome cmd_fit_spectrum(const spectrum_fit_request& req, const std::filesystem::path& out_root)
{
    const std::string data = detail::read_file_bytes(req.input);
    std::istringstream in(data);
    const spectrum s = read_spectrum_csv(in, req.input);

    composite_fit_options opt;
    for (const auto& f : req.fixed) {
        const auto it = std::find(composite_params::names.begin(), composite_params::names.end(), f);
        if (it == composite_params::names.end()) {
            throw config_error("fixed", "unknown parameter '" + f + "'");
        }
        opt.fixed[static_cast<std::size_t>(it - composite_params::names.begin())] = true;
    }
    const double zc = req.zpl_center_nm.value_or(637.0);
    const double cc = req.cavity_center_nm.value_or(zc);
    const auto guess = guess_composite(s, zc, cc);
    const auto r = fit_composite_spectrum(s, guess, opt);

    json request = {{"input", detail::input_digest({{"spectrum", data}})},
                    {"zpl_center_nm", zc},
                    {"cavity_center_nm", cc},
                    {"fixed", req.fixed}};
    json report = {{"kind", "composite-spectrum"}, {"points", s.size()}, {"fit", composite_to_json(r)}};

    std::ostringstream sum;
    sum << "composite spectral fit of " << s.size() << " points\n";
    const auto v = r.params.to_array();
    for (int i = 0; i < composite_params::count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        sum << "  " << std::left << std::setw(26) << composite_params::names[k] << detail::pm(v[k], r.uncertainty[k])
            << (opt.fixed[k] ? " (fixed)" : "") << '\n';
    }
    sum << "  " << std::setw(26) << "reduced_chi2" << detail::fmt(r.reduced_chi2) << "\n  " << std::setw(26)
        << "converged"
        << (r.converged ? "yes" : "NO") << " (" << r.status << ")\n";
    for (const auto& wmsg : r.warnings) {
        sum << "  warning: " << wmsg << '\n';
    }
    return detail::finish_fit("fit-spectrum", request, report, sum.str(), r.converged, out_root);
}

struct enhancement_request
{
    std::string before;
    std::string after;
    double band_lo_nm = 0.0;
    double band_hi_nm = 0.0;
    double detection_ratio = 1.0;
    linear_background before_background;
    linear_background after_background;
};

inline command_outcome cmd_enhancement(const enhancement_request& req, const std::filesystem::path& out_root)
{
    const std::string db = detail::read_file_bytes(req.before);
    const std::string da = detail::read_file_bytes(req.after);
    std::istringstream ib(db);
    std::istringstream ia(da);
    const spectrum sb = read_spectrum_csv(ib, req.before);
    const spectrum sa = read_spectrum_csv(ia, req.after);
    const auto e = enhancement_from_spectra(sb, req.before_background, sa, req.after_background, req.band_lo_nm,
                                            req.band_hi_nm, req.detection_ratio);
    auto bg_json = [](const linear_background& b) {
        return json{{"offset", b.offset}, {"slope_per_nm", b.slope}, {"reference_nm", b.reference_nm}};
    };
    json request = {{"input", detail::input_digest({{"before", db}, {"after", da}})},
                    {"band_nm", {req.band_lo_nm, req.band_hi_nm}},
                    {"detection_ratio", req.detection_ratio},
                    {"before_background", bg_json(req.before_background)},
                    {"after_background", bg_json(req.after_background)}};
    json report = {{"kind", "enhancement"},
                   {"detected_enhancement", e.detected},
                   {"detection_ratio", e.detection_ratio},
                   {"inferred_enhancement", e.inferred}};
    std::ostringstream sum;
    sum << "cavity-band enhancement over [" << req.band_lo_nm << ", " << req.band_hi_nm << "] nm\n"
        << "  detected  " << detail::fmt(e.detected) << "\n  ratio     " << detail::fmt(e.detection_ratio)
        << "\n  inferred  " << detail::fmt(e.inferred) << '\n';
    return detail::finish_fit("enhancement", request, report, sum.str(), true, out_root);
}

struct saturation_request
{
    std::string input;
    bool two_stage = true; ///< otherwise every curve gets a free fit
};

inline command_outcome cmd_fit_saturation(const saturation_request& req, const std::filesystem::path& out_root)
{
    const std::string data = detail::read_file_bytes(req.input);
    std::istringstream in(data);
    const auto curves = read_saturation_csv(in, req.input);

    std::vector<saturation_fit_result> fits;
    if (req.two_stage) {
        const auto r = fit_saturation_two_stage(curves.front(),
                                                std::vector<std::vector<saturation_point>>(curves.begin() + 1, curves.end()));
        fits.push_back(r.reference);
        fits.insert(fits.end(), r.others.begin(), r.others.end());
    } else {
        for (const auto& c : curves) {
            fits.push_back(fit_saturation(c));
        }
    }
    bool ok = true;
    json arr = json::array();
    std::ostringstream sum;
    sum << "saturation fit, " << curves.size() << " curve(s), " << (req.two_stage ? "two-stage" : "free") << '\n';
    for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto& f = fits[i];
        ok = ok && f.converged;
        arr.push_back(saturation_to_json(f));
        sum << "  curve " << i << ": y_inf " << detail::pm(f.y_inf, f.y_inf_err) << ", P_sat "
            << (f.p_sat_fixed ? detail::fmt(f.p_sat_uw) + " uW (fixed)" : detail::pm(f.p_sat_uw, f.p_sat_err, " uW"))
            << ", a " << (f.a_fixed ? "0 (fixed)" : detail::pm(f.a, f.a_err)) << (f.converged ? "" : "  NOT CONVERGED")
            << (f.p_sat_identifiable ? "" : "  P_sat not identifiable from this power range") << '\n';
    }
    json request = {{"input", detail::input_digest({{"saturation", data}})}, {"two_stage", req.two_stage}};
    json report = {{"kind", "saturation"}, {"curves", arr}};
    return detail::finish_fit("fit-saturation", request, report, sum.str(), ok, out_root);
}

struct g2_request
{
    std::string channel_a;
    std::string channel_b;
    double bin_ns = 1.0;
    double window_ns = 100.0;
    std::optional<double> rho;
    std::optional<double> total_rate_per_s;
    std::optional<double> background_rate_per_s;
    std::optional<double> acquisition_s;
    g2_verdict_options verdict;
};

inline command_outcome cmd_g2(const g2_request& req, const std::filesystem::path& out_root)
{
    const std::string da = detail::read_file_bytes(req.channel_a);
    const std::string db = detail::read_file_bytes(req.channel_b);
    std::istringstream ia(da);
    std::istringstream ib(db);
    const auto ta = read_timestamps(ia, req.channel_a);
    const auto tb = read_timestamps(ib, req.channel_b);

    double rho = 1.0;
    if (req.rho && (req.total_rate_per_s || req.background_rate_per_s)) {
        throw config_error("rho", "give rho or the two rates, not both");
    }
    if (req.rho) {
        rho = *req.rho;
    } else if (req.total_rate_per_s && req.background_rate_per_s) {
        rho = rho_from_rates(*req.total_rate_per_s, *req.background_rate_per_s);
    } else if (req.total_rate_per_s || req.background_rate_per_s) {
        throw config_error("rates", "both total and background rates are required");
    }
    auto h = g2_histogram(ta, tb, req.bin_ns, req.window_ns, req.acquisition_s);
    h.rho = rho;
    const auto g = g2_background_correct(h, req.verdict);

    json request = {{"input", detail::input_digest({{"channel_a", da}, {"channel_b", db}})},
                    {"bin_ns", req.bin_ns},
                    {"window_ns", req.window_ns},
                    {"rho", rho},
                    {"smooth_bins", req.verdict.smooth_bins},
                    {"search_bins", req.verdict.search_bins},
                    {"z_score", req.verdict.z_score},
                    {"threshold", req.verdict.threshold}};
    if (req.acquisition_s) {
        request["acquisition_s"] = *req.acquisition_s;
    }
    const std::string verdict = g.single_emitter ? "single emitter" : "not single emitter";
    json report = {{"kind", "g2"},
                   {"events", {ta.size(), tb.size()}},
                   {"rates_per_s", {h.rate_a, h.rate_b}},
                   {"acquisition_s", h.acquisition_s},
                   {"rho", rho},
                   {"raw_dip", g.raw_dip},
                   {"corrected_dip", g.dip},
                   {"corrected_dip_sigma", g.dip_sigma},
                   {"dip_tau_ns", g.dip_tau_ns},
                   {"verdict", verdict}};
    std::ostringstream sum;
    sum << "g2 from " << ta.size() << " + " << tb.size() << " events, rho = " << detail::fmt(rho) << '\n'
        << "  raw dip        " << detail::fmt(g.raw_dip) << "\n  corrected dip  " << detail::pm(g.dip, g.dip_sigma)
        << " at " << detail::fmt(g.dip_tau_ns) << " ns\n  verdict        " << verdict << '\n';
    return detail::finish_fit("g2", request, report, sum.str(), true, out_root,
                              {{"g2.csv", [&](std::ostream& os) { write_g2_csv(os, g); }}});
}

/// Truth values of the bundled synthetic datasets.
struct dataset_truth
{
    composite_params spectrum{{200.0, 3.0, 640.0}, 637.2, 0.6, 900.0, 641.0, 1.5, 2.5, 700.0};
    synthetic::emission_model emission;
    double band_lo_nm = 630.0;
    double band_hi_nm = 645.0;
    double boost = 4.0;
    double y_inf = 2.0e5;
    double p_sat_uw = 770.0;
    synthetic::emitter_stream_spec g2{1.0 / 12.0, 12.0, 1.0e6, 0.7, 0.1};
};

/**
 * Writes the synthetic datasets to `dir` (not a run directory): a composite
 * spectrum, an enhancement pair, a two-curve saturation table, and two
 * g2 time-tag channels, plus truth.json with the generating parameters.
 */
inline std::vector<std::filesystem::path> cmd_generate(const std::filesystem::path& dir, std::uint64_t seed,
                                                       const dataset_truth& t = {})
{
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    auto write = [&](const std::string& name, const std::function<void(std::ostream&)>& fn) {
        const auto p = dir / name;
        std::ofstream f(p, std::ios::binary);
        fn(f);
        if (!f) {
            throw std::runtime_error("cannot write " + p.string());
        }
        written.push_back(p);
    };

    const auto wl = synthetic::linspace(620.0, 660.0, 801);
    const auto spec = synthetic::composite_spectrum(t.spectrum, wl, 0.01, seed);
    write("spectrum.csv", [&](std::ostream& os) { write_spectrum_csv(os, spec); });

    const auto wide = synthetic::linspace(600.0, 780.0, 721);
    const auto pair = synthetic::enhancement_pair(t.emission, t.band_lo_nm, t.band_hi_nm, t.boost, 0.6,
                                                  {30.0, 0.1, 650.0}, wide, 0.005, seed + 1);
    write("spectrum_before.csv", [&](std::ostream& os) { write_spectrum_csv(os, pair.before); });
    write("spectrum_after.csv", [&](std::ostream& os) { write_spectrum_csv(os, pair.after); });

    std::vector<double> powers;
    for (double p = 50.0; p <= 4000.0 + 1e-9; p += 50.0) {
        powers.push_back(p);
    }
    const auto ref = synthetic::saturation_curve(t.y_inf, t.p_sat_uw, 0.0, powers, 0.02, seed + 2);
    const auto other = synthetic::saturation_curve(0.6 * t.y_inf, t.p_sat_uw, 0.0, powers, 0.02, seed + 3);
    write("saturation.csv", [&](std::ostream& os) { write_saturation_csv(os, {ref, other}); });

    const auto streams = synthetic::emitter_streams(t.g2, seed + 4);
    write("g2_channel_a.txt", [&](std::ostream& os) { write_timestamps(os, streams.a); });
    write("g2_channel_b.txt", [&](std::ostream& os) { write_timestamps(os, streams.b); });

    json truth = {{"seed", seed},
                  {"spectrum", {{"parameters", t.spectrum.to_array()},
                                {"names", composite_params::names},
                                {"background_reference_nm", t.spectrum.background.reference_nm},
                                {"noise_fraction", 0.01}}},
                  {"enhancement", {{"band_nm", {t.band_lo_nm, t.band_hi_nm}},
                                   {"boost", t.boost},
                                   {"before_background", {t.emission.background.offset, t.emission.background.slope,
                                                          t.emission.background.reference_nm}},
                                   {"after_background", {30.0, 0.1, 650.0}}}},
                  {"saturation", {{"y_inf_counts", {t.y_inf, 0.6 * t.y_inf}},
                                  {"p_sat_uw", t.p_sat_uw},
                                  {"a", 0.0},
                                  {"noise_fraction", 0.02}}},
                  {"g2", {{"excitation_rate_per_ns", t.g2.excitation_rate_per_ns},
                          {"lifetime_ns", t.g2.lifetime_ns},
                          {"signal_rate_per_s", t.g2.signal_rate_per_s},
                          {"rho", t.g2.rho},
                          {"duration_s", t.g2.duration_s},
                          {"background_rate_per_s", streams.background_rate_per_s}}}};
    write("truth.json", [&](std::ostream& os) { os << truth.dump(2) << '\n'; });
    return written;
}

} // namespace nvcav

#endif // NVCAV_COMMANDS_HPP
