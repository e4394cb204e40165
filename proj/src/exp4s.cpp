#include "nsb/exp4s.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nsb {

const char* to_string(RestartDecision d) {
    switch (d) {
        case RestartDecision::None: return "none";
        case RestartDecision::Forced: return "forced";
        case RestartDecision::TestTriggered: return "test-triggered";
    }
    return "unknown";
}

Action sample_action(const ActionDistribution& p, Rng& rng) { return sample_index(p.probs, rng); }

Exp4s::Exp4s(const PolicyClass& policies, Exp4sConfig config)
    : policies_(&policies), weights_(PolicyWeights::uniform(policies.size())) {
    const double l = config.interval_length;
    if (!(l >= 2.0)) {
        throw BanditError(ErrorCode::ConfigError, "Exp4.S requires L >= 2 (N mu = 1/L must be < 1)");
    }
    const double n = static_cast<double>(policies.size());
    const double k = static_cast<double>(policies.num_actions());
    eta_ = std::sqrt(std::log(n * l) / (l * k));
    mu_ = 1.0 / (n * l);
}

ActionDistribution Exp4s::act(Context x) {
    ActionDistribution p{std::vector<double>(policies_->num_actions(), 0.0)};
    for (PolicyIndex i = 0; i < policies_->size(); ++i) p.probs[(*policies_)[i](x)] += weights_[i];
    return p;
}

RestartDecision Exp4s::observe(const RoundRecord& rec) {
    const double loss_estimate = (1.0 - rec.observed_reward) / rec.probs[rec.action];
    std::vector<double> losses(policies_->size(), 0.0);
    for (PolicyIndex i = 0; i < policies_->size(); ++i) {
        if ((*policies_)[i](rec.context) == rec.action) losses[i] = loss_estimate;
    }
    update_with_losses(losses);
    return RestartDecision::None;
}

void Exp4s::update_with_losses(std::span<const double> policy_losses) {
    const std::size_t n = weights_.size();
    if (policy_losses.size() != n) {
        throw BanditError(ErrorCode::InvalidArgument, "loss vector must have N entries");
    }
    // Log-space step with max subtraction; weights never reach zero because
    // of the mixing floor, so the logs are finite.
    std::vector<double> logw(n);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        logw[i] = std::log(weights_[i]) - eta_ * policy_losses[i];
        top = std::max(top, logw[i]);
    }
    double total = 0.0;
    for (auto& lw : logw) {
        lw = std::exp(lw - top);
        total += lw;
    }
    const double keep = 1.0 - static_cast<double>(n) * mu_;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        weights_.weights[i] = keep * (logw[i] / total) + mu_;
        sum += weights_.weights[i];
    }
    for (auto& w : weights_.weights) w /= sum;
    ++round_;
}

}  // namespace nsb
