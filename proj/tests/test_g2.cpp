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
#include <chrono>
#include <cmath>

#include "nvcav/g2.hpp"
#include "nvcav/synthetic.hpp"

using namespace nvcav;

namespace {

std::vector<std::uint64_t> merge(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b)
{
    std::vector<std::uint64_t> out;
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

} // namespace

TEST(G2, IndependentPoissonStreamsAreFlat)
{
    synthetic::rng gen(7);
    const auto a = synthetic::poisson_stream(5e5, 1.0, gen);
    const auto b = synthetic::poisson_stream(5e5, 1.0, gen);
    const auto h = g2_histogram(a, b, 1.0, 100.0, 1.0);
    ASSERT_EQ(h.counts.size(), 201u);
    const auto g = h.g2_raw();
    double chi2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double sigma = std::sqrt(h.normalization) / h.normalization;
        EXPECT_LT(std::abs(g[i] - 1.0), 3.0 * sigma) << "bin " << h.tau_ns[i];
        chi2 += (g[i] - 1.0) * (g[i] - 1.0) / (sigma * sigma);
    }
    const double dof = static_cast<double>(g.size());
    EXPECT_NEAR(chi2 / dof, 1.0, 4.0 * std::sqrt(2.0 / dof));
}

TEST(G2, BruteForceCoincidenceCount)
{
    synthetic::rng gen(3);
    const auto a = synthetic::poisson_stream(2e6, 1e-3, gen);
    const auto b = synthetic::poisson_stream(2e6, 1e-3, gen);
    const auto h = g2_histogram(a, b, 2.0, 20.0);
    std::vector<std::uint64_t> ref(h.counts.size(), 0);
    const double half = 0.5 * h.bin_ns * 1000.0;
    for (auto ta : a) {
        for (auto tb : b) {
            const double d = static_cast<double>(tb) - static_cast<double>(ta);
            const double k = std::floor((d + half) / (h.bin_ns * 1000.0));
            const auto idx = static_cast<long>(k) + static_cast<long>(h.zero_bin());
            if (idx >= 0 && idx < static_cast<long>(ref.size())) {
                ++ref[static_cast<std::size_t>(idx)];
            }
        }
    }
    EXPECT_EQ(h.counts, ref);
}

TEST(G2, SwappingChannelsMirrorsDelay)
{
    synthetic::emitter_stream_spec s;
    s.duration_s = 0.05;
    const auto st = synthetic::emitter_streams(s, 5);
    // an odd number of picoseconds puts bin edges between integer time tags
    const auto ab = g2_histogram(st.a, st.b, 1.001, 50.0);
    const auto ba = g2_histogram(st.b, st.a, 1.001, 50.0);
    std::vector<std::uint64_t> rev(ba.counts.rbegin(), ba.counts.rend());
    EXPECT_EQ(ab.counts, rev);
}

TEST(G2, CorrectionInvertsBackgroundMixing)
{
    coincidence_histogram h;
    h.bin_ns = 1.0;
    h.normalization = 1e4;
    h.rho = 0.7;
    const double r2 = h.rho * h.rho;
    std::vector<double> truth;
    for (int k = -20; k <= 20; ++k) {
        h.tau_ns.push_back(k);
        truth.push_back(1.0 - std::exp(-std::abs(k) / 6.0));
        h.counts.push_back(static_cast<std::uint64_t>(std::llround((1.0 - r2 + r2 * truth.back()) * h.normalization)));
    }
    const auto c = g2_background_correct(h);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        EXPECT_NEAR(c.corrected[i], truth[i], 1.0 / h.normalization / r2);
    }
    EXPECT_NEAR(rho_from_rates(1000.0, 300.0), 0.7, 1e-12);
}

TEST(G2, SingleEmitterWithBackground)
{
    synthetic::emitter_stream_spec s;
    s.rho = 0.7;
    s.duration_s = 1.0;
    s.signal_rate_per_s = 3.5e5;
    const auto start = std::chrono::steady_clock::now();
    const auto st = synthetic::emitter_streams(s, 42);
    ASSERT_GT(st.a.size() + st.b.size(), 1000000u);
    auto h = g2_histogram(st.a, st.b, 1.0, 100.0);
    h.rho = s.rho;
    const auto c = g2_background_correct(h);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_GT(c.raw_dip, 0.5);
    EXPECT_LT(c.dip + 1.645 * c.dip_sigma, 0.5);
    EXPECT_TRUE(c.single_emitter);
    EXPECT_LT(seconds, 120.0);

    // corrected histogram against the bin-averaged closed form
    double chi2 = 0.0;
    for (std::size_t i = 0; i < c.corrected.size(); ++i) {
        const double m = synthetic::emitter_g2_bin(c.tau_ns[i], h.bin_ns, s.excitation_rate_per_ns, s.lifetime_ns);
        const double d = (c.corrected[i] - m) / c.corrected_sigma[i];
        chi2 += d * d;
    }
    const double dof = static_cast<double>(c.corrected.size());
    EXPECT_NEAR(chi2 / dof, 1.0, 4.0 * std::sqrt(2.0 / dof));
}

TEST(G2, TwoEmittersAreNotSingle)
{
    synthetic::emitter_stream_spec s;
    s.duration_s = 0.5;
    s.signal_rate_per_s = 3e5;
    const auto e1 = synthetic::emitter_streams(s, 1);
    const auto e2 = synthetic::emitter_streams(s, 2);
    const auto h = g2_histogram(merge(e1.a, e2.a), merge(e1.b, e2.b), 1.0, 100.0);
    const auto c = g2_background_correct(h);
    EXPECT_NEAR(c.dip, 0.5, 0.1);
    EXPECT_FALSE(c.single_emitter);
}

TEST(G2, RejectsBadInput)
{
    EXPECT_THROW(g2_histogram({}, {1, 2}, 1.0, 10.0), invalid_input);
    EXPECT_THROW(g2_histogram({3, 1}, {1, 2}, 1.0, 10.0), invalid_input);
    EXPECT_THROW(g2_histogram({1, 2}, {1, 2}, 0.0, 10.0), invalid_input);
    EXPECT_THROW(g2_histogram({1, 2}, {1, 2}, 1.0, 0.5), invalid_input);
    EXPECT_THROW(rho_from_rates(100.0, 150.0), invalid_input);
    auto h = g2_histogram({1000, 2000, 5000}, {1500, 2600, 9000}, 1.0, 10.0);
    h.rho = 0.0;
    EXPECT_THROW(g2_background_correct(h), invalid_input);
}
