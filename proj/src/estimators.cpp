#include "nsb/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "nsb/oracle.hpp"

namespace nsb {

namespace {

void require_non_empty(std::span<const RoundRecord> history) {
    if (history.empty()) throw BanditError(ErrorCode::EmptyInterval, "interval has no rounds");
}

}  // namespace

double iw_estimate(const RoundRecord& rec, Action a) {
    if (a != rec.action) return 0.0;
    return rec.observed_reward / rec.probs[rec.action];
}

double empirical_avg_reward(std::span<const RoundRecord> history, const Policy& pi) {
    require_non_empty(history);
    double sum = 0.0;
    for (const auto& rec : history) sum += iw_estimate(rec, pi(rec.context));
    return sum / static_cast<double>(history.size());
}

double empirical_regret(std::span<const RoundRecord> history, const Policy& pi,
                        const PolicyClass& policies, ArgmaxOracle& oracle) {
    require_non_empty(history);
    std::vector<WeightedExample> data;
    data.reserve(history.size());
    const double inv_len = 1.0 / static_cast<double>(history.size());
    for (const auto& rec : history) {
        std::vector<double> r(policies.num_actions(), 0.0);
        r[rec.action] = iw_estimate(rec, rec.action) * inv_len;
        data.push_back({rec.context, std::move(r)});
    }
    const auto best = oracle(data);
    // Evaluate both sides through the same summation order so an empirical
    // maximizer gets exactly zero.
    double own = 0.0;
    for (const auto& ex : data) own += ex.reward[pi(ex.context)];
    return std::max(0.0, best.value - own);
}

ActionDistribution project(const PolicyWeights& q, Context x, const PolicyClass& policies) {
    ActionDistribution out{std::vector<double>(policies.num_actions(), 0.0)};
    for (PolicyIndex i = 0; i < policies.size(); ++i) {
        if (q[i] != 0.0) out.probs[policies[i](x)] += q[i];
    }
    return out;
}

ActionDistribution smooth_projection(const PolicyWeights& q, Context x,
                                     const PolicyClass& policies, double mu) {
    const double k = static_cast<double>(policies.num_actions());
    if (mu < 0.0 || mu > 1.0 / k + kProbTolerance) {
        throw BanditError(ErrorCode::MuTooLarge, "mu must lie in [0, 1/K]");
    }
    ActionDistribution out = project(q, x, policies);
    for (double& p : out.probs) p = mu + (1.0 - k * mu) * p;
    return out;
}

double empirical_variance(std::span<const RoundRecord> history, const PolicyWeights& q,
                          const Policy& pi, const PolicyClass& policies, double mu) {
    require_non_empty(history);
    if (!(mu > 0.0)) throw BanditError(ErrorCode::InvalidArgument, "mu must be positive");
    double sum = 0.0;
    for (const auto& rec : history) {
        const auto smoothed = smooth_projection(q, rec.context, policies, mu);
        sum += 1.0 / smoothed[pi(rec.context)];
    }
    return sum / static_cast<double>(history.size());
}

double empirical_variance(std::span<const RoundRecord> history, const Policy& pi) {
    require_non_empty(history);
    double sum = 0.0;
    for (const auto& rec : history) {
        const double p = rec.probs[pi(rec.context)];
        if (!(p > 0.0)) throw BanditError(ErrorCode::DegenerateWeights, "zero probability");
        sum += 1.0 / p;
    }
    return sum / static_cast<double>(history.size());
}

double confidence_log(std::size_t horizon, std::size_t num_policies, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw BanditError(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
    }
    const double t = static_cast<double>(horizon);
    return std::log(4.0 * t * t * static_cast<double>(num_policies) / delta);
}

double freedman_threshold_beta(std::size_t interval_len, double mu, std::size_t horizon,
                               std::size_t num_policies, double delta) {
    if (interval_len == 0) return 0.0;
    if (!(mu > 0.0)) throw BanditError(ErrorCode::InvalidArgument, "mu must be positive");
    const double ratio = confidence_log(horizon, num_policies, delta) /
                         (mu * static_cast<double>(interval_len));
    return 2.0 * std::sqrt(ratio) + ratio;
}

double freedman_threshold_alpha(std::size_t interval_len, std::size_t horizon,
                                std::size_t num_policies, std::size_t num_actions, double delta) {
    return freedman_threshold_beta(interval_len, 1.0 / static_cast<double>(num_actions), horizon,
                                   num_policies, delta);
}

// ---------------------------------------------------------------------------

EpochLog::EpochLog(std::size_t num_contexts, std::size_t num_actions, bool track_inverse_probs)
    : num_contexts_(num_contexts), num_actions_(num_actions), track_inverse_(track_inverse_probs) {
    clear();
}

void EpochLog::clear() {
    records_.clear();
    series_.assign(num_contexts_, ContextSeries{});
    for (auto& s : series_) {
        s.reward_prefix.assign(num_actions_, 0.0);
        if (track_inverse_) s.inverse_prefix.assign(num_actions_, 0.0);
    }
}

void EpochLog::append(const RoundRecord& rec) {
    if (rec.context >= num_contexts_ || rec.action >= num_actions_ ||
        rec.probs.size() != num_actions_) {
        throw BanditError(ErrorCode::InvalidArgument, "record does not match log dimensions");
    }
    if (!(rec.probs[rec.action] > 0.0)) {
        throw BanditError(ErrorCode::DegenerateWeights, "played action has zero probability");
    }
    records_.push_back(rec);
    auto& s = series_[rec.context];
    s.offsets.push_back(records_.size());

    const std::size_t base = s.reward_prefix.size() - num_actions_;
    for (Action a = 0; a < num_actions_; ++a) {
        s.reward_prefix.push_back(s.reward_prefix[base + a] + iw_estimate(rec, a));
    }
    if (track_inverse_) {
        for (Action a = 0; a < num_actions_; ++a) {
            const double p = rec.probs[a];
            if (!(p > 0.0)) {
                throw BanditError(ErrorCode::DegenerateWeights, "zero smoothed probability");
            }
            s.inverse_prefix.push_back(s.inverse_prefix[base + a] + 1.0 / p);
        }
    }
}

std::span<const RoundRecord> EpochLog::records(Interval offsets) const {
    if (offsets.empty()) return {};
    if (offsets.first < 1 || offsets.last > records_.size()) {
        throw BanditError(ErrorCode::RoundOutOfRange, "interval outside epoch log");
    }
    return std::span<const RoundRecord>(records_).subspan(offsets.first - 1, offsets.length());
}

std::pair<std::size_t, std::size_t> EpochLog::range_in(const ContextSeries& s,
                                                       Interval offsets) const {
    auto lo = std::lower_bound(s.offsets.begin(), s.offsets.end(), offsets.first);
    auto hi = std::upper_bound(s.offsets.begin(), s.offsets.end(), offsets.last);
    return {static_cast<std::size_t>(lo - s.offsets.begin()),
            static_cast<std::size_t>(hi - s.offsets.begin())};
}

RewardTable EpochLog::sums(Interval offsets, bool inverse) const {
    RewardTable out(num_contexts_, num_actions_);
    if (offsets.empty()) return out;
    if (offsets.first < 1 || offsets.last > records_.size()) {
        throw BanditError(ErrorCode::RoundOutOfRange, "interval outside epoch log");
    }
    for (Context x = 0; x < num_contexts_; ++x) {
        const auto& s = series_[x];
        const auto [lo, hi] = range_in(s, offsets);
        if (lo == hi) continue;
        const auto& prefix = inverse ? s.inverse_prefix : s.reward_prefix;
        for (Action a = 0; a < num_actions_; ++a) {
            out(x, a) = prefix[hi * num_actions_ + a] - prefix[lo * num_actions_ + a];
        }
    }
    out.example_count = offsets.length();
    return out;
}

RewardTable EpochLog::reward_sums(Interval offsets) const { return sums(offsets, false); }

RewardTable EpochLog::inverse_prob_sums(Interval offsets) const {
    if (!track_inverse_) {
        throw BanditError(ErrorCode::InvalidArgument, "inverse probabilities not tracked");
    }
    return sums(offsets, true);
}

std::vector<double> EpochLog::context_counts(Interval offsets) const {
    std::vector<double> out(num_contexts_, 0.0);
    if (offsets.empty()) return out;
    for (Context x = 0; x < num_contexts_; ++x) {
        const auto [lo, hi] = range_in(series_[x], offsets);
        out[x] = static_cast<double>(hi - lo);
    }
    return out;
}

}  // namespace nsb
