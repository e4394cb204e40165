#include "nsb/ada_bingreedy.hpp"

#include <algorithm>
#include <cmath>

namespace nsb {

BinLayout bin_layout(std::size_t block_length) {
    auto len = static_cast<std::size_t>(
        std::ceil(std::pow(static_cast<double>(block_length), kBinLengthExponent)));
    // Guard against pow rounding just above an exact square.
    while (len > 1 && (len - 1) * (len - 1) >= block_length) --len;
    while (len * len < block_length) ++len;
    return BinLayout{len, (block_length + len - 1) / len};
}

AdaBinGreedy::AdaBinGreedy(const PolicyClass& policies, std::size_t horizon,
                           AdaBinGreedyConfig config)
    : policies_(&policies), horizon_(horizon), config_(config), oracle_(policies),
      log_(policies.num_contexts(), policies.num_actions()), rng_(config.seed) {
    if (!(config_.delta > 0.0 && config_.delta < 1.0)) {
        throw BanditError(ErrorCode::ConfigError, "delta must lie in (0, 1)");
    }
    if (!(config_.threshold_scale > 0.0 && config_.threshold_scale <= 1.0)) {
        throw BanditError(ErrorCode::ConfigError, "threshold_scale must lie in (0, 1]");
    }
    const double k = static_cast<double>(policies.num_actions());
    log_term_ = std::sqrt(std::log(static_cast<double>(policies.size()) / config_.delta) / k);
    start_epoch(0);
}

double AdaBinGreedy::mu_at(std::size_t offset) const {
    const double k = static_cast<double>(policies_->num_actions());
    return std::min(1.0 / k, std::pow(static_cast<double>(offset), -1.0 / 3.0) * log_term_);
}

void AdaBinGreedy::start_epoch(std::size_t after_round) {
    epoch_start_ = after_round;
    block_ = 0;
    leader_ = 0;
    log_.clear();
    enter_offset(1);
}

// Positions the block/bin state on the round at epoch offset `offset`,
// drawing the kind of a freshly entered bin.
void AdaBinGreedy::enter_offset(std::size_t offset) {
    const std::size_t block_first = block_ == 0 ? 0 : std::size_t{1} << (block_ - 1);
    const bool new_block = block_ == 0 || offset >= 2 * block_first;
    if (new_block) {
        ++block_;
        if (block_ > 1) leader_ = oracle_(log_.reward_sums(Interval{1, log_.size()})).index;
    } else if (offset <= bin_offsets_.last) {
        return;
    }
    const std::size_t first = std::size_t{1} << (block_ - 1);
    const std::size_t h = first;
    const BinLayout layout = bin_layout(h);
    const std::size_t within = offset - first;
    bin_ = within / layout.bin_length + 1;
    const std::size_t bin_first = first + (bin_ - 1) * layout.bin_length;
    bin_offsets_ = Interval{bin_first, std::min(bin_first + layout.bin_length, first + h) - 1};
    const double p = std::pow(static_cast<double>(bin_), -kExplorationExponent);
    bin_kind_ = uniform01(rng_) < p ? BinKind::Exploration : BinKind::Exploitation;
    bin_history_.push_back(BinDraw{block_, bin_, bin_kind_});
}

ActionDistribution AdaBinGreedy::act(Context x) {
    const std::size_t k = policies_->num_actions();
    const double kd = static_cast<double>(k);
    if (bin_kind_ == BinKind::Exploration) return ActionDistribution{std::vector<double>(k, 1.0 / kd)};
    const double mu = mu_at(round_ - epoch_start_ + 1);
    ActionDistribution p{std::vector<double>(k, mu)};
    p.probs[(*policies_)[leader_](x)] += 1.0 - kd * mu;
    return p;
}

bool AdaBinGreedy::nonstat_test() {
    if (block_ <= 1 || bin_kind_ != BinKind::Exploration) {
        throw BanditError(ErrorCode::InvalidArgument,
                          "bin test requires block index > 1 and an exploration bin");
    }
    const std::size_t n = round_ - epoch_start_;
    const std::size_t block_len = (std::size_t{1} << (block_ - 1)) - 1;
    const std::size_t num_policies = policies_->size();
    const std::size_t k = policies_->num_actions();
    const double s = config_.threshold_scale;
    const double beta_b = s * freedman_threshold_beta(block_len, mu_at(block_len), horizon_,
                                                      num_policies, config_.delta);
    const Policy& leader = (*policies_)[leader_];

    for (std::size_t len = 1; len <= n && n - len + 1 >= bin_offsets_.first; len *= 2) {
        const RewardTable table = log_.reward_sums(Interval{n - len + 1, n});
        const double inv = 1.0 / static_cast<double>(len);
        const double best = oracle_(table).value * inv;
        const double alpha_a =
            s * freedman_threshold_alpha(len, horizon_, num_policies, k, config_.delta);
        if (best > table.value(leader) * inv + 2.0 * (alpha_a + beta_b)) return true;
    }
    return false;
}

RestartDecision AdaBinGreedy::observe(const RoundRecord& rec) {
    if (rec.t != round_ + 1) {
        throw BanditError(ErrorCode::RoundOutOfRange, "records must arrive in round order");
    }
    log_.append(rec);
    round_ = rec.t;
    if (block_ > 1 && bin_kind_ == BinKind::Exploration && nonstat_test()) {
        ++restarts_;
        start_epoch(round_);
        return RestartDecision::TestTriggered;
    }
    enter_offset(round_ - epoch_start_ + 1);
    return RestartDecision::None;
}

}  // namespace nsb
