#include <doctest.h>

#include <cmath>

#include "nsb/metrics.hpp"
#include "test_support.hpp"

using namespace nsb;
using nsb::testing::random_distribution;

namespace {

// Random piecewise-constant environment with `pieces` distinct laws.
Environment random_env(std::size_t horizon, std::size_t nx, std::size_t k, std::size_t pieces, Rng& rng) {
    std::vector<RoundDistribution> dists;
    for (std::size_t i = 0; i < pieces; ++i) {
        std::vector<double> means(nx * k);
        for (auto& m : means) m = uniform01(rng);
        dists.push_back(RoundDistribution{random_distribution(nx, 0.0, rng).probs, means, k});
    }
    std::vector<std::size_t> sched(horizon);
    std::size_t cur = 0;
    for (auto& s : sched) {
        if (rng() % 4 == 0) cur = rng() % pieces;
        s = cur;
    }
    return Environment(std::move(dists), std::move(sched), NoiseKind::Bernoulli);
}

double marginal(const Environment& env, std::size_t t, const Policy& pi) {
    const auto& d = env.at(t);
    double v = 0.0;
    for (Context x = 0; x < d.num_contexts(); ++x) v += d.context_probs[x] * d.mean(x, pi(x));
    return v;
}

// Fills a ledger with random play.
void random_play(RegretLedger& ledger, const Environment& env, std::size_t k, Rng& rng) {
    for (std::size_t t = 1; t <= env.horizon(); ++t) {
        const auto [x, r] = env.sample_round(t, rng);
        const auto p = random_distribution(k, 0.0, rng);
        ledger.record_round(t, x, p, sample_index(p.probs, rng), r);
    }
}

std::vector<Interval> random_partition(std::size_t horizon, Rng& rng) {
    std::vector<Interval> out;
    std::size_t first = 1;
    while (first <= horizon) {
        const std::size_t last = std::min(horizon, first + rng() % 12);
        out.push_back(Interval{first, last});
        first = last + 1;
    }
    return out;
}

}  // namespace

TEST_CASE("ledger rows") {
    const PolicyClass pc = PolicyClass::all_maps(2, 2);
    SUBCASE("point mass on the best policy's action has zero expected regret") {
        const Environment env({RoundDistribution{{0.5, 0.5}, {0.9, 0.1, 0.3, 0.6}, 2}}, {0, 0}, NoiseKind::Bernoulli);
        RegretLedger ledger(env, pc);
        ledger.record_round(1, 0, ActionDistribution{{1.0, 0.0}}, 0, {1.0, 0.0});
        ledger.record_round(2, 1, ActionDistribution{{0.0, 1.0}}, 1, {0.0, 1.0});
        CHECK(ledger.row(1).best_policy == 2);  // {x0 -> 0, x1 -> 1}
        CHECK(ledger.row(1).expected_regret == 0.0);
        CHECK(ledger.row(2).expected_regret == 0.0);
        CHECK_THROWS_AS(ledger.record_round(4, 0, ActionDistribution{{1.0, 0.0}}, 0, {1.0, 0.0}), BanditError);
    }
    SUBCASE("deterministic rewards: realized equals conditional for point masses") {
        const Environment env({RoundDistribution{{1.0, 0.0}, {0.2, 0.7, 0.0, 0.0}, 2}}, {0}, NoiseKind::Deterministic);
        RegretLedger ledger(env, pc);
        ledger.record_round(1, 0, ActionDistribution{{1.0, 0.0}}, 0, {0.2, 0.7});
        CHECK(ledger.row(1).expected_regret == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(ledger.row(1).realized_regret == ledger.row(1).expected_regret);
    }
    SUBCASE("realized regret averages to the conditional regret") {
        EnvironmentSpec spec;
        spec.horizon = 10000;
        spec.num_segments = 3;
        const Environment env = make_environment(spec);
        RegretLedger ledger(env, pc);
        Rng rng(4);
        random_play(ledger, env, 2, rng);
        double s = 0.0, s2 = 0.0;
        for (const auto& row : ledger.rows()) {
            const double d = row.realized_regret - row.expected_regret;
            s += d;
            s2 += d * d;
        }
        const double n = 10000.0;
        CHECK(std::abs(s / n) <= 4.0 * std::sqrt((s2 / n - (s / n) * (s / n)) / n));
        // Cumulative columns are prefix sums.
        double ce = 0.0, cr = 0.0;
        for (const auto& row : ledger.rows()) {
            ce += row.expected_regret;
            cr += row.realized_regret;
            CHECK(row.cum_expected == doctest::Approx(ce).epsilon(1e-12));
            CHECK(row.cum_realized == doctest::Approx(cr).epsilon(1e-12));
        }
    }
}

TEST_CASE("interval regret") {
    Rng rng(6);
    const PolicyClass pc = PolicyClass::all_maps(3, 2);
    const Environment env = random_env(200, 3, 2, 4, rng);
    RegretLedger ledger(env, pc);
    random_play(ledger, env, 2, rng);

    CHECK(interval_regret(ledger, Interval{5, 4}, pc[0]).expected == 0.0);
    CHECK_THROWS_AS(interval_regret(ledger, Interval{190, 201}, pc[0]), BanditError);

    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t a = 1 + rng() % 200, b = 1 + rng() % 200;
        const Interval iv{std::min(a, b), std::max(a, b)};
        const Policy& pi = pc[rng() % pc.size()];
        double e = 0.0, r = 0.0;
        for (std::size_t t = iv.first; t <= iv.last; ++t) {
            const auto& row = ledger.row(t);
            double alg = 0.0;
            for (Action x = 0; x < 2; ++x) alg += row.probs[x] * env.at(t).mean(row.context, x);
            e += env.at(t).mean(row.context, pi(row.context)) - alg;
            r += row.rewards[pi(row.context)] - row.rewards[row.action];
        }
        const auto got = interval_regret(ledger, iv, pi);
        CHECK(got.expected == doctest::Approx(e).epsilon(1e-12));
        CHECK(got.realized == doctest::Approx(r).epsilon(1e-12));
    }

    // Comparator equal to a deterministic algorithm's own choices.
    RegretLedger own(env, pc);
    Rng r2(1);
    for (std::size_t t = 1; t <= 200; ++t) {
        const auto [x, rw] = env.sample_round(t, r2);
        const Action a = pc[3](x);
        ActionDistribution p{{0.0, 0.0}};
        p.probs[a] = 1.0;
        own.record_round(t, x, p, a, rw);
    }
    CHECK(interval_regret(own, Interval{1, 200}, pc[3]).expected == 0.0);
}

TEST_CASE("fixed comparator never beats the per-round best in marginal form") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const PolicyClass pc = PolicyClass::random(6, 3, 3, rng());
        const Environment env = random_env(60, 3, 3, 3, rng);
        const PolicyIndex fixed = best_fixed_policy(env, pc);
        double dyn = 0.0, fix = 0.0, best_total = -INFINITY;
        for (PolicyIndex i = 0; i < pc.size(); ++i) {
            double s = 0.0;
            for (std::size_t t = 1; t <= 60; ++t) s += marginal(env, t, pc[i]);
            best_total = std::max(best_total, s);
        }
        for (std::size_t t = 1; t <= 60; ++t) {
            double m = -INFINITY;
            for (PolicyIndex i = 0; i < pc.size(); ++i) m = std::max(m, marginal(env, t, pc[i]));
            dyn += m;
            fix += marginal(env, t, pc[fixed]);
        }
        CHECK(fix == doctest::Approx(best_total).epsilon(1e-12));
        CHECK(fix <= dyn + 1e-12);
    }
}

TEST_CASE("dynamic-to-interval reduction") {
    Rng rng(21);
    SUBCASE("random instances against a direct evaluation") {
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t nx = 1 + rng() % 3, k = 2 + rng() % 2;
            const std::size_t horizon = 20 + rng() % 60;
            const PolicyClass pc = PolicyClass::all_maps(nx, k);
            const Environment env = random_env(horizon, nx, k, 1 + rng() % 5, rng);
            RegretLedger ledger(env, pc);
            random_play(ledger, env, k, rng);
            const auto part = random_partition(horizon, rng);

            auto best_at = [&](std::size_t t) {
                PolicyIndex b = 0;
                for (PolicyIndex i = 1; i < pc.size(); ++i) {
                    if (marginal(env, t, pc[i]) > marginal(env, t, pc[b])) b = i;
                }
                return b;
            };
            double lhs = 0.0, rhs = 0.0;
            for (const auto& iv : part) {
                const PolicyIndex anchor = best_at(iv.first);
                double delta = 0.0;
                for (std::size_t t = iv.first; t <= iv.last; ++t) {
                    double alg = 0.0;
                    for (Action a = 0; a < k; ++a) alg += ledger.row(t).probs[a] * env.at(t).mean(ledger.row(t).context, a);
                    lhs += marginal(env, t, pc[best_at(t)]) - alg;
                    rhs += marginal(env, t, pc[anchor]) - alg;
                    if (t > iv.first) {
                        double step = 0.0;
                        for (PolicyIndex i = 0; i < pc.size(); ++i) {
                            step = std::max(step, std::abs(marginal(env, t, pc[i]) - marginal(env, t - 1, pc[i])));
                        }
                        delta += step;
                    }
                }
                rhs += 2.0 * static_cast<double>(iv.last - iv.first + 1) * delta;
                CHECK(env.measures(pc, iv).delta <= env.measures(pc, iv).delta_bar + 1e-12);
            }
            const auto got = check_dynamic_to_interval(ledger, part);
            CHECK(got.lhs == doctest::Approx(lhs).epsilon(1e-9));
            CHECK(got.rhs == doctest::Approx(rhs).epsilon(1e-9));
            CHECK(got.holds);
            CHECK(lhs <= rhs + kReductionSlack);
        }
    }
    SUBCASE("stationary environment: both sides equal") {
        const PolicyClass pc = PolicyClass::all_maps(2, 2);
        const Environment env = random_env(50, 2, 2, 1, rng);
        RegretLedger ledger(env, pc);
        random_play(ledger, env, 2, rng);
        const auto part = random_partition(50, rng);
        const auto got = check_dynamic_to_interval(ledger, part);
        CHECK(got.lhs == doctest::Approx(got.rhs).epsilon(1e-12));
    }
    SUBCASE("singleton intervals") {
        const PolicyClass pc = PolicyClass::all_maps(2, 2);
        const Environment env = random_env(30, 2, 2, 3, rng);
        RegretLedger ledger(env, pc);
        random_play(ledger, env, 2, rng);
        std::vector<Interval> part;
        for (std::size_t t = 1; t <= 30; ++t) part.push_back(Interval{t, t});
        const auto got = check_dynamic_to_interval(ledger, part);
        CHECK(got.lhs == doctest::Approx(got.rhs).epsilon(1e-12));
        CHECK(got.holds);
    }
    SUBCASE("invalid partitions") {
        const PolicyClass pc = PolicyClass::all_maps(2, 2);
        const Environment env = random_env(10, 2, 2, 2, rng);
        RegretLedger ledger(env, pc);
        random_play(ledger, env, 2, rng);
        for (const std::vector<Interval>& bad :
             {std::vector<Interval>{{1, 4}, {6, 10}}, std::vector<Interval>{{1, 4}, {4, 10}},
              std::vector<Interval>{{1, 9}}, std::vector<Interval>{{2, 10}}, std::vector<Interval>{{1, 11}}}) {
            try {
                check_dynamic_to_interval(ledger, bad);
                FAIL("expected InvalidPartition");
            } catch (const BanditError& e) {
                CHECK(e.code() == ErrorCode::InvalidPartition);
            }
        }
    }
}
