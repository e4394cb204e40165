#include <doctest.h>

#include <cmath>

#include "nsb/corral.hpp"
#include "test_support.hpp"

using namespace nsb;
using nsb::testing::reference_corral_step;

namespace {

CorralParams small_params(std::size_t m) {
    CorralParams p;
    p.horizon = 100;
    p.gamma = 0.01;
    p.beta = std::exp(1.0 / std::log(100.0));
    p.eta = 0.05;
    p.num_copies = m;
    p.start_spacing = (100 + m - 1) / m;
    return p;
}

}  // namespace

TEST_CASE("corral parameters") {
    const auto p = corral_params(10000, 1000.0, 4, 2);
    CHECK(p.gamma == 1e-4);
    CHECK(p.beta == doctest::Approx(std::exp(1.0 / std::log(10000.0))).epsilon(1e-15));
    CHECK(p.eta == doctest::Approx(1.0 / 810.0).epsilon(1e-15));
    CHECK(p.num_copies == 13);
    CHECK(p.start_spacing == 770);
    const auto q = corral_params(1000, 1e5, 16, 4);
    CHECK(q.eta == doctest::Approx(std::sqrt(1000.0 / std::log(16.0)) / 4e5).epsilon(1e-14));
    CHECK(q.num_copies == 1);
    CHECK_THROWS_AS(corral_params(1, 10.0, 4, 2), BanditError);
    CHECK_THROWS_AS(corral_params(100, 10.0, 1, 2), BanditError);
}

TEST_CASE("corral losses") {
    CorralMaster master(small_params(6));
    master.set_state(std::vector<double>(6, 1.0 / 6), std::vector<double>(6, 0.05), std::vector<double>(6, 12.0), 4, 40);
    CHECK(master.q()[2] == doctest::Approx(0.25).epsilon(1e-15));
    const auto l = master.losses(2, 0.4);
    CHECK(l[2] == doctest::Approx(2.4).epsilon(1e-14));
    CHECK(l[0] == 0.0);
    CHECK(l[1] == 0.0);
    CHECK(l[3] == 0.0);
    CHECK(l[4] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(l[5] == doctest::Approx(0.6).epsilon(1e-15));
    for (double v : master.losses(1, 1.0)) CHECK(v == 0.0);
    master.set_state(std::vector<double>(6, 1.0 / 6), std::vector<double>(6, 0.05), std::vector<double>(6, 12.0), 6, 40);
    const auto all = master.losses(3, 0.0);
    for (std::size_t i = 0; i < 6; ++i) CHECK((i == 3) == (all[i] != 0.0));
}

TEST_CASE("corral sampling") {
    CorralMaster fresh(small_params(5));
    Rng rng(1);
    for (int i = 0; i < 100; ++i) CHECK(fresh.sample_copy(rng) == 0);

    CorralMaster master(small_params(5));
    master.set_state({0.1, 0.2, 0.3, 0.15, 0.25}, std::vector<double>(5, 0.05), std::vector<double>(5, 10.0), 4, 10);
    const int n = 100000;
    std::vector<double> hits(5, 0.0);
    for (int i = 0; i < n; ++i) hits[master.sample_copy(rng)] += 1.0;
    CHECK(hits[4] == 0.0);
    for (std::size_t i = 0; i < 5; ++i) {
        const double q = master.q()[i];
        CHECK(std::abs(hits[i] / n - q) <= 4.0 * std::sqrt(q * (1.0 - q) / n) + 1e-15);
    }
}

TEST_CASE("corral update") {
    SUBCASE("equal losses and rates form a fixed point") {
        CorralMaster master(small_params(4));
        master.set_state(std::vector<double>(4, 0.25), std::vector<double>(4, 0.05), std::vector<double>(4, 8.0), 4, 50);
        master.update(std::vector<double>(4, 0.7), 0.3);
        CHECK(master.last_solve().lambda == doctest::Approx(0.7).epsilon(1e-9));
        for (double w : master.w()) CHECK(w == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("one step against an independent bisection") {
        Rng rng(5);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t m = 2 + rng() % 7;
            CorralMaster master(small_params(m));
            std::vector<double> w(m), eta(m), rho(m, 2.0 * static_cast<double>(m));
            double s = 0.0;
            for (auto& v : w) s += (v = uniform01(rng) + 0.05);
            for (auto& v : w) v /= s;
            for (auto& v : eta) v = 0.01 + 0.2 * uniform01(rng);
            const std::size_t started = 1 + rng() % m;
            master.set_state(w, eta, rho, started, 0);
            const std::size_t chosen = rng() % started;
            const double reward = uniform01(rng);
            const auto losses = master.losses(chosen, reward);
            const auto want = reference_corral_step(w, eta, losses, reward);
            master.update(losses, reward);
            CHECK(master.last_solve().residual <= 1e-12);
            for (std::size_t i = 0; i < m; ++i) CHECK(master.w()[i] == doctest::Approx(want[i]).epsilon(1e-9));
        }
    }
    SUBCASE("threshold trigger") {
        CorralMaster master(small_params(3));
        const auto p = master.params();
        master.set_state({0.0005, 0.4995, 0.5}, {0.05, 0.05, 0.05}, {6.0, 6.0, 6.0}, 3, 0);
        master.update(std::vector<double>(3, 0.0), 1.0);
        const double wbar0 = master.w_bar()[0];
        CHECK(wbar0 == (1.0 - p.gamma) * master.w()[0] + p.gamma / 3.0);
        CHECK(1.0 / wbar0 > 6.0);
        CHECK(master.rho()[0] == 2.0 / wbar0);
        CHECK(master.eta()[0] == 0.05 * p.beta);
        CHECK(master.doublings()[0] == 1);
        CHECK(master.eta()[1] == 0.05);
        CHECK(master.rho()[1] == 6.0);
    }
    SUBCASE("lambda map is increasing on the bracket") {
        Rng rng(8);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t m = 2 + rng() % 7;
            std::vector<double> w(m), eta(m), c(m);
            double s = 0.0;
            for (auto& v : w) s += (v = uniform01(rng) + 0.01);
            for (auto& v : w) v /= s;
            for (auto& v : eta) v = 0.001 + uniform01(rng);
            for (auto& v : c) v = 20.0 * uniform01(rng);
            double lo = INFINITY, hi = INFINITY;
            for (std::size_t i = 0; i < m; ++i) {
                lo = std::min(lo, c[i]);
                hi = std::min(hi, 1.0 / (w[i] * eta[i]) + c[i]);
            }
            double prev = -INFINITY;
            for (int k = 0; k < 50; ++k) {
                const double lambda = lo + (hi - lo) * k / 50.0;
                double f = 0.0;
                for (std::size_t i = 0; i < m; ++i) f += 1.0 / (1.0 / w[i] + eta[i] * (c[i] - lambda));
                CHECK(f > prev);
                prev = f;
            }
            const auto sol = solve_lambda(w, eta, c);
            CHECK(sol.residual <= kLambdaTolerance);
            CHECK(sol.iterations <= kLambdaIterationCap);
        }
    }
}

TEST_CASE("corral invariants over a long run") {
    const std::size_t horizon = 10000;
    EnvironmentSpec spec;
    spec.horizon = horizon;
    spec.num_contexts = 2;
    spec.num_actions = 2;
    spec.num_segments = 4;
    const Environment env = make_environment(spec);
    const PolicyClass pc = PolicyClass::all_maps(2, 2);
    Corral alg(pc, horizon, CorralConfig{.interval_length = 1000.0});
    const auto& master = alg.master();
    const auto& p = master.params();
    const double md = static_cast<double>(p.num_copies);
    const double max_doublings = std::log(md * static_cast<double>(horizon)) / std::log(p.beta);
    REQUIRE(p.num_copies > 4);
    Rng er(1), ar(2);
    for (std::size_t t = 1; t <= horizon; ++t) {
        const auto [x, r] = env.sample_round(t, er);
        const Decision d = alg.decide(x, ar);
        double ps = 0.0;
        for (double v : d.probs.probs) ps += v;
        REQUIRE(std::abs(ps - 1.0) <= 1e-12);
        alg.observe(RoundRecord{t, x, d.action, d.probs, r[d.action]});

        double sw = 0.0, swb = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < p.num_copies; ++i) {
            REQUIRE(master.w()[i] > 0.0);
            REQUIRE(master.w_bar()[i] >= p.gamma / md * (1.0 - 1e-12));
            REQUIRE(master.rho()[i] >= 2.0 * md);
            REQUIRE(master.eta()[i] ==
                    doctest::Approx(p.eta * std::pow(p.beta, static_cast<double>(master.doublings()[i]))).epsilon(1e-12));
            REQUIRE(static_cast<double>(master.doublings()[i]) <= max_doublings);
            if (i >= master.started()) REQUIRE(master.q()[i] == 0.0);
            sw += master.w()[i];
            swb += master.w_bar()[i];
            sq += master.q()[i];
        }
        REQUIRE(std::abs(sw - 1.0) <= 1e-10);
        REQUIRE(std::abs(swb - 1.0) <= 1e-10);
        REQUIRE(std::abs(sq - 1.0) <= 1e-12);
        REQUIRE(master.last_solve().residual <= 1e-12);
        REQUIRE(master.started() == std::min(p.num_copies, 1 + t / p.start_spacing));
        REQUIRE(alg.num_bases() == master.started());
    }
}

TEST_CASE("corral with fixed-policy copies") {
    const PolicyClass pc = PolicyClass::all_maps(2, 2);
    Corral alg(pc, 500, CorralConfig{.interval_length = 50.0, .base = CorralBaseKind::FixedPolicy});
    Rng rng(3);
    // Only copy 1 is started at first, so the played distribution is its point mass.
    const auto d = alg.decide(1, rng);
    CHECK(d.probs.probs == std::vector<double>{1.0, 0.0});
    CHECK(d.action == 0);
    CHECK(alg.act(1).probs == std::vector<double>{1.0, 0.0});
}
