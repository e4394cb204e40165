#pragma once

// Argmax oracle (AMO) over a finite policy class.
//
// Given a weighted dataset S of (x, r) pairs with r in R^K, the oracle
// returns a policy maximizing sum_{(x,r) in S} r(pi(x)). The search is
// exhaustive; ties go to the lowest policy index so repeated calls on the
// same data agree.
//
// Every policy-class maximization performed by an algorithm goes through an
// ArgmaxOracle instance, whose OracleStats are the basis for oracle-call
// accounting.

#include <cstdint>
#include <span>
#include <vector>

#include "nsb/reward_table.hpp"
#include "nsb/types.hpp"

namespace nsb {

struct WeightedExample {
    Context context = 0;
    std::vector<double> reward;  // length K, any sign
};

struct AmoResult {
    PolicyIndex index = 0;
    double value = 0.0;
};

struct OracleStats {
    std::uint64_t calls = 0;
    std::uint64_t examples_seen = 0;
};

/// Pure exhaustive maximization; empty dataset gives (0, 0).
AmoResult amo(std::span<const WeightedExample> dataset, const PolicyClass& policies);
AmoResult amo(const RewardTable& table, const PolicyClass& policies);

/// Stateful handle that counts invocations. Not thread-safe; one per algorithm.
class ArgmaxOracle {
public:
    explicit ArgmaxOracle(const PolicyClass& policies) : policies_(&policies) {}

    AmoResult operator()(std::span<const WeightedExample> dataset);
    AmoResult operator()(const RewardTable& table);

    const OracleStats& stats() const { return stats_; }
    const PolicyClass& policies() const { return *policies_; }

private:
    const PolicyClass* policies_;
    OracleStats stats_;
};

/// Which of the two empirical-regret comparisons to build.
enum class RegretTestDirection {
    BlockMinusRecent,  // max_pi { Reg_B(pi) - c1 Reg_A(pi) }
    RecentMinusBlock,  // max_pi { Reg_A(pi) - c1 Reg_B(pi) }
};

/// Dataset S such that
///   amo(S).value + max R_hat_first - c1 max R_hat_second
/// equals max_pi { Reg_first(pi) - c1 Reg_second(pi) }, where (first, second)
/// is (B, A) or (A, B) depending on the direction. Both intervals non-empty.
std::vector<WeightedExample> build_regret_test_dataset(std::span<const RoundRecord> block,
                                                       std::span<const RoundRecord> recent,
                                                       double c1, RegretTestDirection direction,
                                                       std::size_t num_actions);

/// Dataset whose amo value is max_pi { V_hat_A(pi) - c4 V_hat_B(pi) } with
/// V_hat computed from the per-round smoothed probabilities in each record.
/// Throws DegenerateWeights on a zero probability.
std::vector<WeightedExample> build_variance_test_dataset(std::span<const RoundRecord> block,
                                                         std::span<const RoundRecord> recent,
                                                         double c4, std::size_t num_actions);

/// Full evaluation of the regret comparison: three oracle calls (both interval
/// maxima, then the combined dataset).
double evaluate_regret_test(std::span<const RoundRecord> block,
                            std::span<const RoundRecord> recent, double c1,
                            RegretTestDirection direction, ArgmaxOracle& oracle);

/// Full evaluation of the variance comparison: one oracle call.
double evaluate_variance_test(std::span<const RoundRecord> block,
                              std::span<const RoundRecord> recent, double c4,
                              ArgmaxOracle& oracle);

}  // namespace nsb
