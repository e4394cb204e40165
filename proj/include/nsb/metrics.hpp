#pragma once

// Regret accounting against the per-round best policy pi*_t and against
// fixed comparators.
//
// Expected regret of round t is taken conditionally on the realized context:
//
//     g_t = mean_t(x_t, pi*_t(x_t)) - sum_a p_t(a) mean_t(x_t, a)
//
// and realized regret is r_t(pi*_t(x_t)) - r_t(a_t).

#include <span>
#include <unordered_map>
#include <vector>

#include "nsb/environment.hpp"
#include "nsb/types.hpp"

namespace nsb {

struct LedgerRow {
    std::size_t t = 0;
    Context context = 0;
    Action action = 0;
    ActionDistribution probs;
    RewardVector rewards;       // full reward vector r_t (only r_t(a_t) was shown to the learner)
    PolicyIndex best_policy = 0;
    double algorithm_mean = 0.0;  // sum_a p_t(a) mean_t(x_t, a)
    double expected_regret = 0.0;
    double realized_regret = 0.0;
    double cum_expected = 0.0;
    double cum_realized = 0.0;
};

class RegretLedger {
public:
    RegretLedger(const Environment& env, const PolicyClass& policies);

    /// Appends round t (must be the next round).
    void record_round(std::size_t t, Context x, const ActionDistribution& p, Action a,
                      const RewardVector& rewards);

    std::size_t size() const { return rows_.size(); }
    const std::vector<LedgerRow>& rows() const { return rows_; }
    const LedgerRow& row(std::size_t t) const { return rows_.at(t - 1); }
    double cum_expected() const { return rows_.empty() ? 0.0 : rows_.back().cum_expected; }
    double cum_realized() const { return rows_.empty() ? 0.0 : rows_.back().cum_realized; }

    /// pi*_t, cached per distinct distribution.
    PolicyIndex best_policy_at(std::size_t t);

    const Environment& environment() const { return *env_; }
    const PolicyClass& policies() const { return *policies_; }

private:
    const Environment* env_;
    const PolicyClass* policies_;
    std::vector<LedgerRow> rows_;
    std::unordered_map<const RoundDistribution*, PolicyIndex> best_cache_;
};

struct IntervalRegret {
    double expected = 0.0;
    double realized = 0.0;
};

/// sum over t in I of (comparator minus algorithm). Throws RoundOutOfRange
/// when I is not inside the recorded rounds; an empty I gives 0.
IntervalRegret interval_regret(const RegretLedger& ledger, Interval range, const Policy& comparator);

/// Best fixed policy on the sum of marginal expected rewards over [1, T].
PolicyIndex best_fixed_policy(const Environment& env, const PolicyClass& policies);

/// Expected regret against a single fixed policy over all recorded rounds.
double fixed_comparator_regret(const RegretLedger& ledger, const Policy& comparator);

struct ReductionCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

inline constexpr double kReductionSlack = 1e-9;

/// Dynamic-to-interval reduction on a partition of [1, T]:
///
///   sum_t [R_t(pi*_t) - A_t]
///     <= sum_i sum_{t in I_i} [R_t(pi*_{s_i}) - A_t] + 2 sum_i |I_i| Delta_{I_i}
///
/// with s_i the first round of I_i and A_t the algorithm's conditional mean
/// reward (it appears on both sides). Throws InvalidPartition.
ReductionCheck check_dynamic_to_interval(RegretLedger& ledger, std::span<const Interval> partition);

/// Throws InvalidPartition unless the intervals tile [1, T] in order.
void validate_partition(std::span<const Interval> partition, std::size_t horizon);

}  // namespace nsb
