#pragma once

// Importance-weighted estimation and interval statistics.
//
// For a round record (x_t, p_t, a_t, r_t(a_t)) the importance-weighted
// reward estimate of action a is
//
//     r_hat_t(a) = r_t(a_t) / p_t(a_t) * 1{a == a_t},
//
// which is unbiased for r_t(a) whenever p_t(a) > 0. Interval averages
// R_hat_I(pi), empirical regrets Reg_hat_I(pi) and the variance proxy
// V_hat_I(Q, pi) are all built from it. Thresholds beta_I / alpha_I are the
// Freedman-style deviation widths used by the restart tests.

#include <span>
#include <vector>

#include "nsb/reward_table.hpp"
#include "nsb/types.hpp"

namespace nsb {

class ArgmaxOracle;

double iw_estimate(const RoundRecord& rec, Action a);

/// Mean of iw_estimate(rec, pi(x)) over the history. Throws EmptyInterval.
double empirical_avg_reward(std::span<const RoundRecord> history, const Policy& pi);

/// max_{pi'} R_hat(pi') - R_hat(pi), with the max taken through the oracle.
double empirical_regret(std::span<const RoundRecord> history, const Policy& pi,
                        const PolicyClass& policies, ArgmaxOracle& oracle);

/// Q(.|x): mass of the policies that pick each action at x.
ActionDistribution project(const PolicyWeights& q, Context x, const PolicyClass& policies);

/// Q^mu(.|x) = mu * 1 + (1 - K mu) Q(.|x). Throws MuTooLarge if mu > 1/K.
ActionDistribution smooth_projection(const PolicyWeights& q, Context x,
                                     const PolicyClass& policies, double mu);

/// V_hat with a single Q: mean over the history of 1 / Q^mu(pi(x_t) | x_t).
double empirical_variance(std::span<const RoundRecord> history, const PolicyWeights& q,
                          const Policy& pi, const PolicyClass& policies, double mu);

/// V_hat with the per-round distributions stored in each record:
/// mean of 1 / p_t(pi(x_t)).
double empirical_variance(std::span<const RoundRecord> history, const Policy& pi);

/// Shared log term ln(4 T^2 N / delta).
double confidence_log(std::size_t horizon, std::size_t num_policies, double delta);

/// beta_I = 2 sqrt(c / (mu |I|)) + c / (mu |I|), c = ln(4 T^2 N / delta).
/// An empty interval gives 0.
double freedman_threshold_beta(std::size_t interval_len, double mu, std::size_t horizon,
                               std::size_t num_policies, double delta);

/// alpha_I = 2 sqrt(K c / |I|) + K c / |I|; equals beta with mu = 1/K.
double freedman_threshold_alpha(std::size_t interval_len, std::size_t horizon,
                                std::size_t num_policies, std::size_t num_actions, double delta);

/// Round history of one epoch with per-context prefix sums, so interval
/// aggregates cost O(|X| K log n) instead of a rescan.
///
/// Offsets are 1-based positions inside the epoch (offset n is the n-th
/// record appended since the last clear()).
class EpochLog {
public:
    EpochLog(std::size_t num_contexts, std::size_t num_actions, bool track_inverse_probs = false);

    void append(const RoundRecord& rec);
    void clear();

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const RoundRecord& at(std::size_t offset) const { return records_.at(offset - 1); }
    std::span<const RoundRecord> records() const { return records_; }
    std::span<const RoundRecord> records(Interval offsets) const;

    /// Table of sum_{n in I, x_n = x} r_hat_n(a).
    RewardTable reward_sums(Interval offsets) const;

    /// Table of sum_{n in I, x_n = x} 1 / p_n(a). Requires track_inverse_probs.
    RewardTable inverse_prob_sums(Interval offsets) const;

    /// Number of rounds in I with each context.
    std::vector<double> context_counts(Interval offsets) const;

private:
    struct ContextSeries {
        std::vector<std::size_t> offsets;       // increasing
        std::vector<double> reward_prefix;      // (count + 1) * K
        std::vector<double> inverse_prefix;     // (count + 1) * K when tracked
    };

    std::pair<std::size_t, std::size_t> range_in(const ContextSeries& s, Interval offsets) const;
    RewardTable sums(Interval offsets, bool inverse) const;

    std::size_t num_contexts_;
    std::size_t num_actions_;
    bool track_inverse_;
    std::vector<RoundRecord> records_;
    std::vector<ContextSeries> series_;
};

}  // namespace nsb
