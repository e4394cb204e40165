#include "nsb/metrics.hpp"

#include <cmath>

namespace nsb {

RegretLedger::RegretLedger(const Environment& env, const PolicyClass& policies)
    : env_(&env), policies_(&policies) {
    rows_.reserve(env.horizon());
}

PolicyIndex RegretLedger::best_policy_at(std::size_t t) {
    const RoundDistribution* d = &env_->at(t);
    auto it = best_cache_.find(d);
    if (it != best_cache_.end()) return it->second;
    const PolicyIndex best = env_->best_policy_at(t, *policies_);
    best_cache_.emplace(d, best);
    return best;
}

void RegretLedger::record_round(std::size_t t, Context x, const ActionDistribution& p, Action a,
                                const RewardVector& rewards) {
    if (t != rows_.size() + 1) {
        throw BanditError(ErrorCode::RoundOutOfRange, "ledger rounds must be appended in order");
    }
    const RoundDistribution& d = env_->at(t);
    LedgerRow row;
    row.t = t;
    row.context = x;
    row.action = a;
    row.probs = p;
    row.rewards = rewards;
    row.best_policy = best_policy_at(t);
    const Action star = (*policies_)[row.best_policy](x);
    for (Action b = 0; b < p.size(); ++b) row.algorithm_mean += p[b] * d.mean(x, b);
    row.expected_regret = d.mean(x, star) - row.algorithm_mean;
    row.realized_regret = rewards[star] - rewards[a];
    const double prev_e = rows_.empty() ? 0.0 : rows_.back().cum_expected;
    const double prev_r = rows_.empty() ? 0.0 : rows_.back().cum_realized;
    row.cum_expected = prev_e + row.expected_regret;
    row.cum_realized = prev_r + row.realized_regret;
    rows_.push_back(std::move(row));
}

IntervalRegret interval_regret(const RegretLedger& ledger, Interval range, const Policy& comparator) {
    IntervalRegret out;
    if (range.empty()) return out;
    if (range.first < 1 || range.last > ledger.size()) {
        throw BanditError(ErrorCode::RoundOutOfRange, "interval outside the recorded rounds");
    }
    const Environment& env = ledger.environment();
    for (std::size_t t = range.first; t <= range.last; ++t) {
        const LedgerRow& row = ledger.row(t);
        const Action c = comparator(row.context);
        out.expected += env.at(t).mean(row.context, c) - row.algorithm_mean;
        out.realized += row.rewards[c] - row.rewards[row.action];
    }
    return out;
}

PolicyIndex best_fixed_policy(const Environment& env, const PolicyClass& policies) {
    PolicyIndex best = 0;
    double best_value = -INFINITY;
    for (PolicyIndex i = 0; i < policies.size(); ++i) {
        double v = 0.0;
        for (std::size_t t = 1; t <= env.horizon(); ++t) v += env.expected_policy_reward(t, policies[i]);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    return best;
}

double fixed_comparator_regret(const RegretLedger& ledger, const Policy& comparator) {
    return interval_regret(ledger, Interval{1, ledger.size()}, comparator).expected;
}

void validate_partition(std::span<const Interval> partition, std::size_t horizon) {
    std::size_t next = 1;
    for (const Interval& iv : partition) {
        if (iv.empty() || iv.first != next) {
            throw BanditError(ErrorCode::InvalidPartition,
                              "partition intervals must be non-empty, ordered and contiguous");
        }
        next = iv.last + 1;
    }
    if (next != horizon + 1) {
        throw BanditError(ErrorCode::InvalidPartition, "partition must cover [1, T] exactly");
    }
}

ReductionCheck check_dynamic_to_interval(RegretLedger& ledger, std::span<const Interval> partition) {
    const Environment& env = ledger.environment();
    const PolicyClass& policies = ledger.policies();
    validate_partition(partition, ledger.size());
    if (ledger.size() != env.horizon()) {
        throw BanditError(ErrorCode::InvalidPartition, "ledger must cover the whole horizon");
    }
    ReductionCheck out;
    for (const Interval& iv : partition) {
        const Policy& anchor = policies[ledger.best_policy_at(iv.first)];
        for (std::size_t t = iv.first; t <= iv.last; ++t) {
            const double a = ledger.row(t).algorithm_mean;
            out.lhs += env.expected_policy_reward(t, policies[ledger.best_policy_at(t)]) - a;
            out.rhs += env.expected_policy_reward(t, anchor) - a;
        }
        out.rhs += 2.0 * static_cast<double>(iv.length()) * env.measures(policies, iv).delta;
    }
    out.holds = out.lhs <= out.rhs + kReductionSlack;
    return out;
}

}  // namespace nsb
