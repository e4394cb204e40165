#pragma once

// Corral master over M staggered copies of a base learner.
//
// Log-barrier OMD on the copy simplex with per-copy learning rates:
//
//   1/w_{t+1}(i) = 1/w_t(i) + eta_t(i) (l_t(i) + z_t(i) - lambda)
//   z_t(i)       = 6 eta_t(i) w_t(i) (l_t(i) - (1 - r_t))^2
//
// where lambda normalizes w_{t+1}. The played distribution q_t is the mixed
// weight w_bar = (1-gamma) w + gamma/M renormalized over started copies.
// Copy i starts after round (i-1) ceil(T/M); copies that have not started
// receive the raw loss 1 - r_t as a virtual loss.
//
//   gamma = 1/T, beta = e^{1/ln T}, eta = min{1/810, sqrt(T/ln N)/(L K)},
//   M = ceil(T eta), rho_1 = 2M.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "nsb/exp4s.hpp"
#include "nsb/learner.hpp"
#include "nsb/rng.hpp"

namespace nsb {

struct CorralParams {
    std::size_t horizon = 0;  // T >= 2
    double gamma = 0.0;
    double beta = 0.0;
    double eta = 0.0;
    std::size_t num_copies = 0;  // M
    std::size_t start_spacing = 0;  // ceil(T/M)
};

CorralParams corral_params(std::size_t horizon, double interval_length, std::size_t num_policies,
                           std::size_t num_actions);

/// Result of the normalization solve.
struct LambdaSolution {
    double lambda = 0.0;
    double residual = 0.0;  // |sum_i w_{t+1}(i) - 1| before the final renormalization
    std::size_t iterations = 0;
};

inline constexpr double kLambdaTolerance = 1e-12;
inline constexpr std::size_t kLambdaIterationCap = 200;

/// Solves sum_i 1 / (1/w_i + eta_i (c_i - lambda)) = 1 by bisection on the
/// bracket [min_i c_i, min_i (1/(w_i eta_i) + c_i)). `adjusted` holds
/// c_i = l_i + z_i. Throws NormalizationFailure when the cap is reached
/// without meeting the tolerance.
LambdaSolution solve_lambda(std::span<const double> w, std::span<const double> eta,
                            std::span<const double> adjusted);

/// The master's state and update, independent of any base learner.
class CorralMaster {
public:
    explicit CorralMaster(const CorralParams& params);

    const CorralParams& params() const { return params_; }
    std::size_t started() const { return started_; }  // m
    std::size_t round() const { return round_; }
    const std::vector<double>& w() const { return w_; }
    const std::vector<double>& w_bar() const { return w_bar_; }
    const std::vector<double>& q() const { return q_; }
    const std::vector<double>& eta() const { return eta_; }
    const std::vector<double>& rho() const { return rho_; }
    const std::vector<std::size_t>& doublings() const { return doublings_; }
    const LambdaSolution& last_solve() const { return last_solve_; }

    std::size_t sample_copy(Rng& rng) const;

    /// Length-M loss vector for chosen copy `chosen` and reward r.
    std::vector<double> losses(std::size_t chosen, double reward) const;

    /// One full step: OMD update, mixing, threshold doubling, staggered start,
    /// and the new q.
    void update(std::span<const double> losses, double reward);

    /// Overwrites the state (for hand-set test states). q is recomputed.
    void set_state(std::vector<double> w, std::vector<double> eta, std::vector<double> rho,
                   std::size_t started, std::size_t round);

private:
    void refresh_q();

    CorralParams params_;
    std::vector<double> w_, w_bar_, q_, eta_, rho_;
    std::vector<std::size_t> doublings_;
    std::size_t started_ = 1;
    std::size_t round_ = 0;
    LambdaSolution last_solve_;
};

/// Contract for copies driven by the master.
class BaseLearner {
public:
    virtual ~BaseLearner() = default;
    /// The copy's own action distribution at x.
    virtual ActionDistribution distribution(Context x) = 0;
    /// Suggested action for x (drawn from distribution(x)).
    virtual Action suggest(Context x, Rng& rng) = 0;
    /// Loss estimate for the current round; called once per round after suggest.
    virtual void feed(double loss) = 0;
};

/// Exp4.S copy. A fed loss l is turned into the action loss estimate
/// l / p(a) on the copy's own suggested action.
class Exp4sBase final : public BaseLearner {
public:
    Exp4sBase(const PolicyClass& policies, Exp4sConfig config);
    ActionDistribution distribution(Context x) override;
    Action suggest(Context x, Rng& rng) override;
    void feed(double loss) override;
    const Exp4s& learner() const { return exp4s_; }

private:
    const PolicyClass* policies_;
    Exp4s exp4s_;
    Context context_ = 0;
    Action action_ = 0;
    double prob_ = 1.0;
};

/// Always suggests one fixed policy; ignores feedback.
class FixedPolicyBase final : public BaseLearner {
public:
    explicit FixedPolicyBase(Policy policy, std::size_t num_actions)
        : policy_(std::move(policy)), num_actions_(num_actions) {}
    ActionDistribution distribution(Context x) override;
    Action suggest(Context x, Rng&) override { return policy_(x); }
    void feed(double) override {}

private:
    Policy policy_;
    std::size_t num_actions_;
};

enum class CorralBaseKind { Exp4s, FixedPolicy };

struct CorralConfig {
    double interval_length = 1000.0;  // L
    CorralBaseKind base = CorralBaseKind::Exp4s;
    double base_interval_length = 0.0;  // Exp4.S copies; 0 means L
};

/// Learner wrapper: gathers suggestions from started copies, reports
/// p(a) = sum_i q(i) 1{suggestion_i = a}, and plays the sampled copy.
class Corral final : public Learner {
public:
    Corral(const PolicyClass& policies, std::size_t horizon, CorralConfig config);

    std::string_view name() const override { return "corral"; }

    /// Marginal over the copies' own distributions.
    ActionDistribution act(Context x) override;
    Decision decide(Context x, Rng& rng) override;
    RestartDecision observe(const RoundRecord& rec) override;

    const CorralMaster& master() const { return master_; }
    std::size_t num_bases() const { return bases_.size(); }

private:
    std::unique_ptr<BaseLearner> make_base(std::size_t index) const;

    const PolicyClass* policies_;
    CorralConfig config_;
    CorralMaster master_;
    std::vector<std::unique_ptr<BaseLearner>> bases_;
    std::vector<Action> suggestions_;
    std::size_t chosen_ = 0;
    bool pending_ = false;
};

}  // namespace nsb
