#include <doctest.h>

#include <cmath>

#include "nsb/oracle.hpp"
#include "test_support.hpp"

using namespace nsb;
using nsb::testing::brute_regrets;
using nsb::testing::brute_variance;
using nsb::testing::random_records;

namespace {

// Value and first maximizer by a plain double loop.
std::pair<PolicyIndex, double> exhaustive(const std::vector<WeightedExample>& data,
                                          const PolicyClass& pc) {
    PolicyIndex best = 0;
    double best_v = -INFINITY;
    for (PolicyIndex i = 0; i < pc.size(); ++i) {
        double v = 0.0;
        for (const auto& ex : data) v += ex.reward[pc[i](ex.context)];
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    return {best, best_v};
}

std::vector<WeightedExample> random_dataset(std::size_t n, std::size_t nx, std::size_t k, Rng& rng,
                                            bool integer_rewards) {
    std::vector<WeightedExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        WeightedExample ex{static_cast<Context>(rng() % nx), std::vector<double>(k)};
        for (auto& r : ex.reward) {
            r = integer_rewards ? static_cast<double>(rng() % 3) : 2.0 * uniform01(rng) - 1.0;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace

TEST_CASE("amo basics") {
    const PolicyClass pc = PolicyClass::all_maps(2, 2);
    SUBCASE("empty dataset") {
        const auto r = amo(std::vector<WeightedExample>{}, pc);
        CHECK(r.index == 0);
        CHECK(r.value == 0.0);
    }
    SUBCASE("single decisive example") {
        // Only context 1 matters; arm 1 pays. Policies {x0->0,x1->1} = index 2 is the first hit.
        std::vector<WeightedExample> d{{1, {0.0, 1.0}}};
        const auto r = amo(d, pc);
        CHECK(r.index == 2);
        CHECK(r.value == 1.0);
    }
    SUBCASE("counting") {
        ArgmaxOracle oracle(pc);
        std::vector<WeightedExample> d{{0, {1.0, 0.0}}, {1, {0.0, 1.0}}};
        oracle(d);
        oracle(d);
        CHECK(oracle.stats().calls == 2);
        CHECK(oracle.stats().examples_seen == 4);
    }
}

TEST_CASE("amo matches exhaustive search with lowest-index ties") {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t nx = 2 + rng() % 5;
        const std::size_t k = 2 + rng() % 3;
        const double cap = std::pow(static_cast<double>(k), static_cast<double>(nx));
        const std::size_t n = std::min<std::size_t>(1 + rng() % 100, static_cast<std::size_t>(cap));
        const PolicyClass pc = PolicyClass::random(n, nx, k, rng());
        const bool ties = trial % 2 == 0;  // small integer rewards produce many ties
        const auto data = random_dataset(rng() % 30, nx, k, rng, ties);
        const auto [idx, val] = exhaustive(data, pc);
        const auto r = amo(data, pc);
        CHECK(r.index == idx);
        CHECK(r.value == val);

        RewardTable table(nx, k);
        for (const auto& ex : data) {
            for (Action a = 0; a < k; ++a) table(ex.context, a) += ex.reward[a];
        }
        const auto rt = amo(table, pc);
        if (ties) {
            // Integer data sums exactly in any order.
            CHECK(rt.index == idx);
        }
        CHECK(rt.value == doctest::Approx(val).epsilon(1e-12));
    }
}

TEST_CASE("regret test datasets reproduce the exhaustive comparison") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t nx = 2 + rng() % 4, k = 2 + rng() % 3;
        const std::size_t n = std::min<std::size_t>(
            1 + rng() % 50, static_cast<std::size_t>(std::pow(double(k), double(nx))));
        const PolicyClass pc = PolicyClass::random(n, nx, k, rng());
        const auto block = random_records(1 + rng() % 64, nx, k, 0.05, rng);
        const auto recent = random_records(1 + rng() % 64, nx, k, 0.05, rng);
        const double c1 = 0.5 + 4.0 * uniform01(rng);
        const auto reg_b = brute_regrets(block, pc);
        const auto reg_a = brute_regrets(recent, pc);
        double want_ba = -INFINITY, want_ab = -INFINITY, want_v = -INFINITY;
        for (PolicyIndex i = 0; i < pc.size(); ++i) {
            want_ba = std::max(want_ba, reg_b[i] - c1 * reg_a[i]);
            want_ab = std::max(want_ab, reg_a[i] - c1 * reg_b[i]);
            want_v = std::max(want_v, brute_variance(recent, pc[i]) - c1 * brute_variance(block, pc[i]));
        }
        ArgmaxOracle oracle(pc);
        CHECK(evaluate_regret_test(block, recent, c1, RegretTestDirection::BlockMinusRecent, oracle) ==
              doctest::Approx(want_ba).epsilon(1e-9));
        CHECK(evaluate_regret_test(block, recent, c1, RegretTestDirection::RecentMinusBlock, oracle) ==
              doctest::Approx(want_ab).epsilon(1e-9));
        CHECK(evaluate_variance_test(block, recent, c1, oracle) == doctest::Approx(want_v).epsilon(1e-9));
        CHECK(oracle.stats().calls == 7);
    }
}

TEST_CASE("test dataset edge cases") {
    Rng rng(3);
    const PolicyClass pc = PolicyClass::all_maps(2, 2);
    const auto data = random_records(20, 2, 2, 0.1, rng);
    ArgmaxOracle oracle(pc);
    SUBCASE("identical intervals with c = 1") {
        CHECK(std::abs(evaluate_regret_test(data, data, 1.0, RegretTestDirection::BlockMinusRecent,
                                            oracle)) < 1e-12);
        CHECK(std::abs(evaluate_variance_test(data, data, 1.0, oracle)) < 1e-12);
    }
    SUBCASE("single-policy class has zero regrets") {
        const PolicyClass one({Policy({1, 0}, 2)}, 2, 2);
        ArgmaxOracle o1(one);
        CHECK(std::abs(evaluate_regret_test(data, data, 4.0, RegretTestDirection::RecentMinusBlock, o1)) <
              1e-12);
    }
    SUBCASE("uniform probabilities give (1 - c4) K") {
        auto u = data;
        for (auto& r : u) r.probs = ActionDistribution{{0.5, 0.5}};
        CHECK(evaluate_variance_test(u, u, 41.0, oracle) == doctest::Approx((1.0 - 41.0) * 2.0));
    }
    SUBCASE("zero probability and empty intervals") {
        auto bad = data;
        bad[0].probs = ActionDistribution{{1.0, 0.0}};
        try {
            build_variance_test_dataset(bad, data, 1.0, 2);
            FAIL("expected DegenerateWeights");
        } catch (const BanditError& e) {
            CHECK(e.code() == ErrorCode::DegenerateWeights);
        }
        try {
            build_regret_test_dataset({}, data, 1.0, RegretTestDirection::BlockMinusRecent, 2);
            FAIL("expected EmptyInterval");
        } catch (const BanditError& e) {
            CHECK(e.code() == ErrorCode::EmptyInterval);
        }
    }
}
