#include "nsb/ada_iltcb.hpp"

#include <algorithm>
#include <cmath>

namespace nsb {

double ada_iltcb_mu(double interval_length, std::size_t horizon, std::size_t num_policies,
                    std::size_t num_actions, double delta) {
    const double k = static_cast<double>(num_actions);
    const double t = static_cast<double>(horizon);
    const double n = static_cast<double>(num_policies);
    const double log_term = std::log(8.0 * t * t * n * n / delta) * std::log(interval_length);
    return std::min(1.0 / (2.0 * k), std::sqrt(log_term / k) / std::sqrt(interval_length));
}

AdaIltcb::AdaIltcb(const PolicyClass& policies, std::size_t horizon, AdaIltcbConfig config)
    : policies_(&policies), horizon_(horizon), config_(config), oracle_(policies),
      log_(policies.num_contexts(), policies.num_actions(), /*track_inverse_probs=*/true) {
    if (!(config_.delta > 0.0 && config_.delta < 1.0)) {
        throw BanditError(ErrorCode::ConfigError, "delta must lie in (0, 1)");
    }
    if (!(config_.interval_length >= 2.0)) {
        throw BanditError(ErrorCode::ConfigError, "Ada-ILTCB requires L >= 2 (ln L > 0)");
    }
    if (!(config_.threshold_scale > 0.0 && config_.threshold_scale <= 1.0)) {
        throw BanditError(ErrorCode::ConfigError, "threshold_scale must lie in (0, 1]");
    }
    if (!(config_.variation >= 0.0)) {
        throw BanditError(ErrorCode::ConfigError, "variation must be >= 0");
    }
    mu_ = ada_iltcb_mu(config_.interval_length, horizon, policies.size(), policies.num_actions(),
                       config_.delta);
    start_epoch(0);
}

void AdaIltcb::start_epoch(std::size_t after_round) {
    epoch_start_ = after_round;
    block_ = 1;
    log_.clear();
    epoch_calls_start_ = oracle_.stats().calls;
    op_calls_per_epoch_.push_back(0);
    calls_per_epoch_.push_back(0);
    refit();
}

void AdaIltcb::refit() {
    const std::size_t block_len = (std::size_t{1} << (block_ - 1)) - 1;
    OpProblem problem;
    if (block_len == 0) {
        problem.reward_sums = RewardTable(policies_->num_contexts(), policies_->num_actions());
        problem.context_counts.assign(policies_->num_contexts(), 0.0);
        problem.mu = mu_;
    } else {
        const Interval b{1, block_len};
        problem.reward_sums = log_.reward_sums(b);
        problem.context_counts = log_.context_counts(b);
        problem.length = block_len;
        problem.mu = mu_;
        problem.source = Interval{epoch_start_ + 1, epoch_start_ + block_len};
    }
    solution_ = solve_op(problem, oracle_, OpConfig{config_.op_iteration_cap, kOpRegretConstant});
    op_calls_per_epoch_.back() += solution_.oracle_calls;
    block_max_valid_ = false;

    const std::size_t nx = policies_->num_contexts();
    const std::size_t k = policies_->num_actions();
    const double kd = static_cast<double>(k);
    smoothed_.assign(nx * k, mu_);
    for (PolicyIndex i = 0; i < policies_->size(); ++i) {
        const double w = solution_.q[i];
        if (w == 0.0) continue;
        for (Context x = 0; x < nx; ++x) smoothed_[x * k + (*policies_)[i](x)] += (1.0 - kd * mu_) * w;
    }
}

ActionDistribution AdaIltcb::act(Context x) {
    const std::size_t k = policies_->num_actions();
    return ActionDistribution{std::vector<double>(smoothed_.begin() + static_cast<std::ptrdiff_t>(x * k),
                                                  smoothed_.begin() + static_cast<std::ptrdiff_t>((x + 1) * k))};
}

IltcbTestStatistics AdaIltcb::test_statistics(std::size_t len) {
    const std::size_t n = round_ - epoch_start_;
    if (len < 1 || len + 1 > n) {
        throw BanditError(ErrorCode::InvalidArgument, "suffix length must satisfy 1 <= l <= t - T_i - 1");
    }
    const auto& c = config_.constants;
    const double s = config_.threshold_scale;
    const double kd = static_cast<double>(policies_->num_actions());
    const double l = static_cast<double>(len);
    const double big_l = config_.interval_length;
    const std::size_t block_len = (std::size_t{1} << (block_ - 1)) - 1;
    const double b = static_cast<double>(block_len);

    IltcbTestStatistics out;
    out.regret_threshold = s * (c.c2 * big_l * kd * mu_ / l + c.c3 * config_.variation);
    out.variance_threshold = s * (c.c5 * big_l * kd / l + c.c6 * config_.variation / mu_);

    const Interval recent{n - len, n - 1};
    const RewardTable reward_a = log_.reward_sums(recent);
    const RewardTable inverse_a = log_.inverse_prob_sums(recent);
    const double max_a = oracle_(reward_a).value / l;

    if (block_len == 0) {
        // Empty block: Reg_B == 0 and V_B == 2K by convention.
        out.regret_block_minus_recent = 0.0;
        out.regret_recent_minus_block = oracle_(reward_a.scaled(-1.0 / l)).value + max_a;
        out.variance = oracle_(inverse_a.scaled(1.0 / l)).value - c.c4 * 2.0 * kd;
        return out;
    }

    const Interval block{1, block_len};
    const RewardTable reward_b = log_.reward_sums(block);
    if (!block_max_valid_) {
        block_max_reward_ = oracle_(reward_b).value / b;
        block_max_valid_ = true;
    }
    const double max_b = block_max_reward_;

    RewardTable line14 = reward_b.scaled(-1.0 / b);
    line14.add_scaled(reward_a, c.c1 / l);
    out.regret_block_minus_recent = oracle_(line14).value + max_b - c.c1 * max_a;

    RewardTable line15 = reward_a.scaled(-1.0 / l);
    line15.add_scaled(reward_b, c.c1 / b);
    out.regret_recent_minus_block = oracle_(line15).value + max_a - c.c1 * max_b;

    RewardTable line16 = inverse_a.scaled(1.0 / l);
    line16.add_scaled(log_.inverse_prob_sums(block), -c.c4 / b);
    out.variance = oracle_(line16).value;
    return out;
}

bool AdaIltcb::nonstat_test() {
    const std::size_t n = round_ - epoch_start_;
    for (std::size_t len = 1; len + 1 <= n; len *= 2) {
        // Evaluate lazily so a firing line short-circuits the rest, as in the
        // sequential if-chain.
        const auto st = test_statistics(len);
        if (st.regret_block_minus_recent > st.regret_threshold) {
            last_fired_line_ = 14;
            return true;
        }
        if (st.regret_recent_minus_block > st.regret_threshold) {
            last_fired_line_ = 15;
            return true;
        }
        if (st.variance > st.variance_threshold) {
            last_fired_line_ = 16;
            return true;
        }
    }
    return false;
}

RestartDecision AdaIltcb::observe(const RoundRecord& rec) {
    if (rec.t != round_ + 1) {
        throw BanditError(ErrorCode::RoundOutOfRange, "records must arrive in round order");
    }
    log_.append(rec);
    round_ = rec.t;

    RestartDecision decision = RestartDecision::None;
    if (static_cast<double>(round_) >=
        static_cast<double>(epoch_start_) + config_.interval_length) {
        decision = RestartDecision::Forced;
    } else if (nonstat_test()) {
        decision = RestartDecision::TestTriggered;
    }

    if (decision != RestartDecision::None) {
        calls_per_epoch_.back() = oracle_.stats().calls - epoch_calls_start_;
        ++restarts_;
        if (decision == RestartDecision::TestTriggered) ++test_restarts_;
        start_epoch(round_);
    } else if (round_ - epoch_start_ == (std::size_t{1} << block_) - 1) {
        ++block_;
        refit();
    }
    calls_per_epoch_.back() = oracle_.stats().calls - epoch_calls_start_;
    return decision;
}

}  // namespace nsb
