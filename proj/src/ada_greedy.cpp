#include "nsb/ada_greedy.hpp"

#include <algorithm>
#include <cmath>

namespace nsb {

AdaGreedy::AdaGreedy(const PolicyClass& policies, std::size_t horizon, AdaGreedyConfig config)
    : policies_(&policies), horizon_(horizon), config_(config), oracle_(policies),
      log_(policies.num_contexts(), policies.num_actions()) {
    if (!(config_.delta > 0.0 && config_.delta < 1.0)) {
        throw BanditError(ErrorCode::ConfigError, "delta must lie in (0, 1)");
    }
    if (!(config_.interval_length >= 1.0)) {
        throw BanditError(ErrorCode::ConfigError, "L must be >= 1");
    }
    if (!(config_.threshold_scale > 0.0 && config_.threshold_scale <= 1.0)) {
        throw BanditError(ErrorCode::ConfigError, "threshold_scale must lie in (0, 1]");
    }
    if (!(config_.variation >= 0.0)) {
        throw BanditError(ErrorCode::ConfigError, "variation must be >= 0");
    }
    const double k = static_cast<double>(policies.num_actions());
    const double n = static_cast<double>(policies.size());
    mu_ = std::min(1.0 / k, std::pow(config_.interval_length, -1.0 / 3.0) *
                                std::sqrt(std::log(n / config_.delta) / k));
    start_epoch(0);
}

void AdaGreedy::start_epoch(std::size_t after_round) {
    epoch_start_ = after_round;
    block_ = 1;
    leader_ = 0;  // arbitrary for the first block
    log_.clear();
}

ActionDistribution AdaGreedy::act(Context x) {
    const std::size_t k = policies_->num_actions();
    ActionDistribution p{std::vector<double>(k, mu_)};
    p.probs[(*policies_)[leader_](x)] += 1.0 - static_cast<double>(k) * mu_;
    return p;
}

bool AdaGreedy::nonstat_test() {
    if (block_ <= 1) {
        throw BanditError(ErrorCode::InvalidArgument, "suffix test requires block index > 1");
    }
    const std::size_t n = round_ - epoch_start_;
    const std::size_t block_len = (std::size_t{1} << (block_ - 1)) - 1;
    const std::size_t num_policies = policies_->size();
    const double s = config_.threshold_scale;
    const double beta_b =
        s * freedman_threshold_beta(block_len, mu_, horizon_, num_policies, config_.delta);
    const Policy& leader = (*policies_)[leader_];

    for (std::size_t len = 1; len <= n; len *= 2) {
        const RewardTable table = log_.reward_sums(Interval{n - len + 1, n});
        const double inv = 1.0 / static_cast<double>(len);
        const double best = oracle_(table).value * inv;
        const double beta_a =
            s * freedman_threshold_beta(len, mu_, horizon_, num_policies, config_.delta);
        if (best > table.value(leader) * inv + 2.0 * (beta_a + beta_b + 2.0 * config_.variation)) {
            return true;
        }
    }
    return false;
}

RestartDecision AdaGreedy::observe(const RoundRecord& rec) {
    if (rec.t != round_ + 1) {
        throw BanditError(ErrorCode::RoundOutOfRange, "records must arrive in round order");
    }
    const std::uint64_t calls_before = oracle_.stats().calls;
    log_.append(rec);
    round_ = rec.t;

    RestartDecision decision = RestartDecision::None;
    if (static_cast<double>(round_) >=
        static_cast<double>(epoch_start_) + config_.interval_length) {
        decision = RestartDecision::Forced;
    } else if (block_ > 1 && nonstat_test()) {
        decision = RestartDecision::TestTriggered;
    }

    if (decision != RestartDecision::None) {
        ++restarts_;
        if (decision == RestartDecision::TestTriggered) ++test_restarts_;
        start_epoch(round_);
    } else if (round_ - epoch_start_ == (std::size_t{1} << block_) - 1) {
        // Entering block j+1: its leader is fit on everything seen this epoch.
        ++block_;
        leader_ = oracle_(log_.reward_sums(Interval{1, log_.size()})).index;
    }
    last_round_calls_ = oracle_.stats().calls - calls_before;
    return decision;
}

}  // namespace nsb
