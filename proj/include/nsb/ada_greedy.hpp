#pragma once

// Ada-Greedy: epoch/block epsilon-greedy over the argmax oracle with a
// restart test on dyadic suffixes.
//
// An epoch starting after round T_i is split into blocks j = 1, 2, ... where
// block j covers rounds T_i + 2^{j-1} .. T_i + 2^j - 1. The leader of block j
// is the empirical best policy on B(i,j) = [T_i+1, T_i+2^{j-1}-1] (policy 0
// for j = 1). Each round plays
//
//     p_t(a) = mu + (1 - K mu) 1{a = leader(x_t)},
//     mu = min{1/K, L^{-1/3} sqrt(ln(N/delta)/K)},
//
// and the epoch restarts when t >= T_i + L, or when j > 1 and some suffix
// A = [t-l+1, t], l = 1, 2, 4, ..., has
//
//     R_hat_A(pi_hat_A) > R_hat_A(leader) + 2 (beta_A + beta_B + 2 v).
//
// beta is scaled by `threshold_scale`; scale 1 reproduces the thresholds
// exactly.

#include <cstdint>
#include <vector>

#include "nsb/estimators.hpp"
#include "nsb/learner.hpp"
#include "nsb/oracle.hpp"

namespace nsb {

struct AdaGreedyConfig {
    double interval_length = 1000.0;  // L
    double variation = 0.0;           // v
    double delta = 0.05;
    double threshold_scale = 1.0;
};

class AdaGreedy final : public Learner {
public:
    AdaGreedy(const PolicyClass& policies, std::size_t horizon, AdaGreedyConfig config);

    std::string_view name() const override { return "ada-greedy"; }

    ActionDistribution act(Context x) override;
    RestartDecision observe(const RoundRecord& rec) override;

    /// Runs the suffix test for the current round (the last observed one).
    /// Requires block index > 1.
    bool nonstat_test();

    std::uint64_t oracle_calls() const override { return oracle_.stats().calls; }
    std::size_t restarts() const override { return restarts_; }
    std::size_t test_restarts() const { return test_restarts_; }

    double mu() const { return mu_; }
    std::size_t epoch_start() const { return epoch_start_; }
    std::size_t block() const { return block_; }
    PolicyIndex leader() const { return leader_; }
    std::size_t round() const { return round_; }
    const EpochLog& epoch_log() const { return log_; }
    /// Oracle calls made while processing the most recent observe().
    std::uint64_t last_round_calls() const { return last_round_calls_; }

private:
    void start_epoch(std::size_t after_round);

    const PolicyClass* policies_;
    std::size_t horizon_;
    AdaGreedyConfig config_;
    double mu_;
    ArgmaxOracle oracle_;
    EpochLog log_;

    std::size_t round_ = 0;        // last observed t
    std::size_t epoch_start_ = 0;  // T_i
    std::size_t block_ = 1;        // j
    PolicyIndex leader_ = 0;
    std::size_t restarts_ = 0;
    std::size_t test_restarts_ = 0;
    std::uint64_t last_round_calls_ = 0;
};

}  // namespace nsb
