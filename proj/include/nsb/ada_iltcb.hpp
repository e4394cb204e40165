#pragma once

// Ada-ILTCB: the feasibility-program learner with restart tests on
// empirical regrets and on the variance proxy.
//
// Blocks follow the same doubling schedule as Ada-Greedy. At the start of
// block j the learner solves the feasibility program on B(i,j) =
// [T_i+1, T_i+2^{j-1}-1] and then plays p_t = Q^mu(.|x_t). After every round
// t it tests, for l = 1, 2, 4, ... <= t - T_i - 1 and A = [t-l, t-1]:
//
//   max_pi {Reg_B(pi) - C1 Reg_A(pi)}      > C2 L K mu / l + C3 v
//   max_pi {Reg_A(pi) - C1 Reg_B(pi)}      > C2 L K mu / l + C3 v
//   max_pi {V_A(pi)   - C4 V_B(pi)}        > C5 L K / l   + C6 v / mu
//
// each with a single oracle call (the interval maxima of R_hat are computed
// alongside). V uses the smoothed probabilities actually played in each
// round. `threshold_scale` multiplies the three right-hand sides.

#include <cstdint>
#include <vector>

#include "nsb/estimators.hpp"
#include "nsb/learner.hpp"
#include "nsb/op_solver.hpp"
#include "nsb/oracle.hpp"

namespace nsb {

struct AdaIltcbConstants {
    double c1 = 4.0;
    double c2 = 1e6;
    double c3 = 1.1e3;
    double c4 = 41.0;
    double c5 = 1200.0;
    double c6 = 6.4;
};

struct AdaIltcbConfig {
    double interval_length = 1000.0;  // L >= 2
    double variation = 0.0;           // v
    double delta = 0.05;
    double threshold_scale = 1.0;
    std::size_t op_iteration_cap = 0;  // 0 means ceil(50 / mu)
    AdaIltcbConstants constants;
};

/// Left-hand sides of the three test lines for one suffix length.
struct IltcbTestStatistics {
    double regret_block_minus_recent = 0.0;
    double regret_recent_minus_block = 0.0;
    double variance = 0.0;
    double regret_threshold = 0.0;
    double variance_threshold = 0.0;
};

class AdaIltcb final : public Learner {
public:
    AdaIltcb(const PolicyClass& policies, std::size_t horizon, AdaIltcbConfig config);

    std::string_view name() const override { return "ada-iltcb"; }

    ActionDistribution act(Context x) override;
    RestartDecision observe(const RoundRecord& rec) override;

    /// The restart test for the last observed round.
    bool nonstat_test();

    /// Evaluates the three lines for suffix length `len` (1 <= len <= t-T_i-1).
    IltcbTestStatistics test_statistics(std::size_t len);

    std::uint64_t oracle_calls() const override { return oracle_.stats().calls; }
    std::size_t restarts() const override { return restarts_; }
    std::size_t test_restarts() const { return test_restarts_; }

    double mu() const { return mu_; }
    std::size_t epoch_start() const { return epoch_start_; }
    std::size_t block() const { return block_; }
    std::size_t round() const { return round_; }
    const OpSolution& solution() const { return solution_; }
    const EpochLog& epoch_log() const { return log_; }

    /// Oracle calls spent solving the program, one entry per epoch so far
    /// (the last entry is the running epoch).
    const std::vector<std::uint64_t>& op_calls_per_epoch() const { return op_calls_per_epoch_; }
    /// All oracle calls (program + tests), one entry per epoch.
    const std::vector<std::uint64_t>& calls_per_epoch() const { return calls_per_epoch_; }
    /// Which line fired on the most recent test-triggered restart (14, 15 or 16), else 0.
    int last_fired_line() const { return last_fired_line_; }

private:
    void start_epoch(std::size_t after_round);
    void refit();

    const PolicyClass* policies_;
    std::size_t horizon_;
    AdaIltcbConfig config_;
    double mu_;
    ArgmaxOracle oracle_;
    EpochLog log_;
    OpSolution solution_;
    std::vector<double> smoothed_;  // Q^mu(a|x) for the current solution

    std::size_t round_ = 0;
    std::size_t epoch_start_ = 0;
    std::size_t block_ = 1;
    bool block_max_valid_ = false;
    double block_max_reward_ = 0.0;
    std::size_t restarts_ = 0;
    std::size_t test_restarts_ = 0;
    int last_fired_line_ = 0;
    std::uint64_t epoch_calls_start_ = 0;
    std::vector<std::uint64_t> op_calls_per_epoch_;
    std::vector<std::uint64_t> calls_per_epoch_;
};

/// mu = min{1/(2K), L^{-1/2} sqrt(ln(8 T^2 N^2 / delta) ln(L) / K)}.
double ada_iltcb_mu(double interval_length, std::size_t horizon, std::size_t num_policies,
                    std::size_t num_actions, double delta);

}  // namespace nsb
