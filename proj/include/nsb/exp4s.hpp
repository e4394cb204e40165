#pragma once

// Exp4.S: exponential weights over the policy class with loss estimates and
// uniform mixing over policies, tuned for intervals of length L:
//
//   eta = sqrt(ln(N L) / (L K)),   mu = 1 / (N L)
//   P~_{t+1}(pi) ∝ P_t(pi) exp(-eta c_hat_t(pi(x_t)))
//   P_{t+1}(pi)  = (1 - N mu) P~_{t+1}(pi) + mu
//
// with c_hat_t(a) = (1 - r_t(a)) / p_t(a) 1{a = a_t}. O(N) per round and no
// oracle use; this is the inefficient baseline.

#include <span>
#include <vector>

#include "nsb/learner.hpp"
#include "nsb/types.hpp"

namespace nsb {

struct Exp4sConfig {
    double interval_length = 2.0;  // L >= 2
};

class Exp4s final : public Learner {
public:
    Exp4s(const PolicyClass& policies, Exp4sConfig config);

    std::string_view name() const override { return "exp4s"; }

    /// p_t(a) = sum of P_t over the policies choosing a at x.
    ActionDistribution act(Context x) override;

    RestartDecision observe(const RoundRecord& rec) override;

    /// Exponential-weights step with an arbitrary per-policy loss vector,
    /// followed by the uniform mixing step.
    void update_with_losses(std::span<const double> policy_losses);

    const PolicyWeights& weights() const { return weights_; }
    double eta() const { return eta_; }
    double mu() const { return mu_; }
    std::size_t round() const { return round_; }

private:
    const PolicyClass* policies_;
    double eta_;
    double mu_;
    PolicyWeights weights_;
    std::size_t round_ = 0;
};

}  // namespace nsb
