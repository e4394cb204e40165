#include <doctest.h>

#include <cmath>
#include <map>

#include "nsb/environment.hpp"
#include "test_support.hpp"

using namespace nsb;

namespace {

RoundDistribution dist(std::vector<double> ctx, std::vector<double> means, std::size_t k) {
    return RoundDistribution{std::move(ctx), std::move(means), k};
}


}  // namespace

TEST_CASE("sampling") {
    SUBCASE("deterministic single context") {
        Environment env({dist({1.0}, {0.3, 0.7}, 2)}, {0, 0}, NoiseKind::Deterministic);
        Rng rng(1);
        const auto [x, r] = env.sample_round(1, rng);
        CHECK(x == 0);
        CHECK(r == RewardVector{0.3, 0.7});
    }
    SUBCASE("bernoulli mean zero and mean 0.3") {
        Environment env({dist({1.0}, {0.0, 0.3}, 2)}, std::vector<std::size_t>(1, 0), NoiseKind::Bernoulli);
        Rng rng(2);
        const int n = 100000;
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto [x, r] = env.sample_round(1, rng);
            CHECK(r[0] == 0.0);
            s += r[1];
        }
        CHECK(std::abs(s / n - 0.3) <= 4.0 * std::sqrt(0.3 * 0.7 / n));
    }
    SUBCASE("round out of range") {
        Environment env({dist({1.0}, {0.5}, 1)}, {0, 0, 0}, NoiseKind::Bernoulli);
        Rng rng(3);
        CHECK_THROWS_AS(env.sample_round(4, rng), BanditError);
        CHECK_THROWS_AS(env.sample_round(0, rng), BanditError);
    }
    SUBCASE("same seed, same stream") {
        EnvironmentSpec spec;
        spec.kind = EnvironmentKind::Drifting;
        spec.horizon = 300;
        spec.num_contexts = 3;
        spec.num_actions = 3;
        spec.anchor_spacing = 50;
        const Environment env = make_environment(spec);
        Rng a(77), b(77);
        for (std::size_t t = 1; t <= 300; ++t) CHECK(env.sample_round(t, a) == env.sample_round(t, b));
    }
}

TEST_CASE("expected policy reward and best policy") {
    Environment one({dist({1.0}, {0.9, 0.2}, 2)}, {0}, NoiseKind::Bernoulli);
    const PolicyClass pc1 = PolicyClass::all_maps(1, 2);
    CHECK(one.expected_policy_reward(1, pc1[0]) == 0.9);
    CHECK(one.best_policy_at(1, pc1) == 0);

    Environment two({dist({0.5, 0.5}, {0.2, 0.0, 0.0, 0.8}, 2)}, {0}, NoiseKind::Bernoulli);
    const PolicyClass pc2({Policy({0, 1}, 2)}, 2, 2);
    CHECK(two.expected_policy_reward(1, pc2[0]) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(two.best_policy_at(1, pc2) == 0);

    // Ties go to the lowest index.
    Environment flat({dist({1.0}, {0.5, 0.5}, 2)}, {0}, NoiseKind::Bernoulli);
    CHECK(flat.best_policy_at(1, pc1) == 0);

    // Random environment: against an exhaustive scan and a Monte-Carlo estimate.
    EnvironmentSpec spec;
    spec.kind = EnvironmentKind::Drifting;
    spec.horizon = 20;
    spec.num_contexts = 3;
    spec.num_actions = 3;
    spec.drift_contexts = true;
    spec.anchor_spacing = 7;
    const Environment env = make_environment(spec);
    const PolicyClass pc = PolicyClass::all_maps(3, 3);
    for (std::size_t t = 1; t <= 20; ++t) {
        PolicyIndex best = 0;
        double bv = -1.0;
        for (PolicyIndex i = 0; i < pc.size(); ++i) {
            double v = 0.0;
            for (Context x = 0; x < 3; ++x) v += env.at(t).context_probs[x] * env.at(t).mean(x, pc[i](x));
            if (v > bv) {
                bv = v;
                best = i;
            }
        }
        CHECK(env.best_policy_at(t, pc) == best);
    }
    Rng rng(5);
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto [x, r] = env.sample_round(10, rng);
        const double v = r[pc[5](x)];
        s += v;
        s2 += v * v;
    }
    const double mean = s / n;
    CHECK(std::abs(mean - env.expected_policy_reward(10, pc[5])) <=
          4.0 * std::sqrt((s2 / n - mean * mean) / n));
}

TEST_CASE("measures") {
    const PolicyClass pc = PolicyClass::all_maps(1, 2);
    SUBCASE("constant sequence") {
        Environment env({dist({1.0}, {0.3, 0.6}, 2)}, std::vector<std::size_t>(50, 0), NoiseKind::Bernoulli);
        const auto m = env.measures(pc);
        CHECK(m.segments == 1);
        CHECK(m.delta == 0.0);
        CHECK(m.delta_bar == 0.0);
    }
    SUBCASE("one hard switch between disjoint deterministic laws") {
        std::vector<std::size_t> sched(10, 0);
        for (std::size_t i = 5; i < 10; ++i) sched[i] = 1;
        Environment env({dist({1.0}, {0.5, 0.1}, 2), dist({1.0}, {0.1, 0.5}, 2)}, sched,
                        NoiseKind::Deterministic);
        const auto m = env.measures(pc);
        CHECK(m.segments == 2);
        CHECK(m.delta == doctest::Approx(0.4).epsilon(1e-15));
        CHECK(m.delta_bar == 1.0);
        const auto sub = env.measures(pc, Interval{1, 5});
        CHECK(sub.segments == 1);
        CHECK(sub.delta_bar == 0.0);
    }
    SUBCASE("total variation matches explicit enumeration") {
        Rng rng(12);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t nx = 1 + rng() % 3, k = 1 + rng() % 4;
            auto make = [&] {
                std::vector<double> ctx(nx), means(nx * k);
                double s = 0.0;
                for (auto& c : ctx) s += (c = uniform01(rng) + 0.01);
                for (auto& c : ctx) c /= s;
                for (auto& m : means) m = trial % 3 == 0 ? std::round(uniform01(rng) * 4) / 4 : uniform01(rng);
                return dist(ctx, means, k);
            };
            const auto d1 = make(), d2 = make();
            for (NoiseKind noise : {NoiseKind::Bernoulli, NoiseKind::Deterministic}) {
                Environment env({d1, d2}, {0, 1}, noise);
                CHECK(env.total_variation_step(2) ==
                      doctest::Approx(nsb::testing::tv_by_enumeration(d1, d2, noise == NoiseKind::Bernoulli)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("Delta never exceeds Delta-bar") {
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            EnvironmentSpec spec;
            spec.kind = EnvironmentKind::Drifting;
            spec.horizon = 200;
            spec.num_contexts = 3;
            spec.num_actions = 2 + seed % 3;
            spec.anchor_spacing = 10 + seed;
            spec.drift_contexts = seed % 2 == 0;
            spec.seed = seed;
            spec.noise = seed % 4 == 0 ? NoiseKind::Deterministic : NoiseKind::Bernoulli;
            const Environment env = make_environment(spec);
            const PolicyClass p = PolicyClass::all_maps(3, spec.num_actions);
            const auto m = env.measures(p);
            CHECK(m.segments >= 1);
            CHECK(m.delta <= m.delta_bar + 1e-12);
        }
    }
    SUBCASE("too many arms for Bernoulli enumeration") {
        const std::size_t k = 21;
        Environment env({dist({1.0}, std::vector<double>(k, 0.5), k),
                         dist({1.0}, std::vector<double>(k, 0.4), k)},
                        {0, 1}, NoiseKind::Bernoulli);
        try {
            env.total_variation_step(2);
            FAIL("expected TVEnumerationTooLarge");
        } catch (const BanditError& e) {
            CHECK(e.code() == ErrorCode::TVEnumerationTooLarge);
        }
    }
}

TEST_CASE("generators") {
    SUBCASE("switching: best arm rotates per segment") {
        EnvironmentSpec spec;
        spec.horizon = 100;
        spec.num_contexts = 3;
        spec.num_actions = 3;
        spec.num_segments = 4;
        spec.gap = 0.6;
        const Environment env = make_environment(spec);
        const std::vector<std::size_t> starts{1, 26, 51, 76};
        for (std::size_t s = 0; s < 4; ++s) {
            const auto& d = env.at(starts[s]);
            for (Context x = 0; x < 3; ++x) {
                int high = 0;
                for (Action a = 0; a < 3; ++a) {
                    const double m = d.mean(x, a);
                    CHECK((m == doctest::Approx(0.8) || m == doctest::Approx(0.2)));
                    high += m > 0.5;
                }
                CHECK(high == 1);
            }
            if (s > 0) {
                CHECK_FALSE(env.at(starts[s]) == env.at(starts[s] - 1));
                for (Context x = 0; x < 3; ++x) {
                    Action prev_best = 0, best = 0;
                    for (Action a = 0; a < 3; ++a) {
                        if (env.at(starts[s] - 1).mean(x, a) > 0.5) prev_best = a;
                        if (env.at(starts[s]).mean(x, a) > 0.5) best = a;
                    }
                    CHECK(best == (prev_best + 1) % 3);
                }
            }
        }
        CHECK(env.measures(PolicyClass::all_maps(3, 3)).segments == 4);
    }
    SUBCASE("switching with explicit boundaries") {
        EnvironmentSpec spec;
        spec.horizon = 10;
        spec.segment_starts = {1, 4};
        const Environment env = make_environment(spec);
        CHECK(env.at(3) == env.at(1));
        CHECK_FALSE(env.at(4) == env.at(3));
        spec.segment_starts = {1, 4, 4};
        CHECK_THROWS_AS(make_environment(spec), BanditError);
        spec.segment_starts = {2, 4};
        CHECK_THROWS_AS(make_environment(spec), BanditError);
    }
    SUBCASE("drifting: per-step change bounded by 1/spacing") {
        EnvironmentSpec spec;
        spec.kind = EnvironmentKind::Drifting;
        spec.horizon = 500;
        spec.num_contexts = 2;
        spec.num_actions = 3;
        spec.anchor_spacing = 40;
        const Environment env = make_environment(spec);
        const PolicyClass pc = PolicyClass::all_maps(2, 3);
        for (std::size_t t = 2; t <= 500; ++t) {
            for (std::size_t j = 0; j < 6; ++j) {
                CHECK(std::abs(env.at(t).mean_rewards[j] - env.at(t - 1).mean_rewards[j]) <= 1.0 / 40 + 1e-12);
            }
        }
        CHECK(env.measures(pc).delta <= 499.0 / 40.0 + 1e-9);
    }
    SUBCASE("custom") {
        EnvironmentSpec spec;
        spec.kind = EnvironmentKind::Custom;
        spec.horizon = 6;
        spec.custom_distributions = {dist({1.0}, {0.9, 0.1}, 2), dist({1.0}, {0.1, 0.9}, 2)};
        spec.custom_starts = {1, 3};
        const Environment env = make_environment(spec);
        CHECK(env.at(2).mean(0, 0) == 0.9);
        CHECK(env.at(3).mean(0, 0) == 0.1);
        spec.custom_starts = {1};
        CHECK_THROWS_AS(make_environment(spec), BanditError);
    }
    SUBCASE("invalid distributions") {
        CHECK_THROWS_AS(Environment({dist({0.5, 0.6}, {0.1, 0.1}, 1)}, {0}, NoiseKind::Bernoulli), BanditError);
        CHECK_THROWS_AS(Environment({dist({1.0}, {1.1}, 1)}, {0}, NoiseKind::Bernoulli), BanditError);
    }
}
