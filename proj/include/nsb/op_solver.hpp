#pragma once

// Feasibility program used by Ada-ILTCB. Given the rounds of an interval I
// and a floor mu, find Q in the policy simplex with
//
//   sum_pi Q(pi) Reg_hat_I(pi)           <= 2 B K mu                 (low regret)
//   for all pi: V_hat_I(Q, pi)            <= 2K + Reg_hat_I(pi)/(B mu) (low variance)
//
// where V_hat_I(Q, pi) = mean_{t in I} 1 / Q^mu(pi(x_t) | x_t) and B = 5e5.
//
// The solver is the coordinate-descent loop of the ILOVETOCONBANDITS family:
// rescale Q until the regret constraint has slack, ask the oracle for the
// policy with the most violated variance constraint, move weight onto it,
// and stop when no violation remains. Leftover mass goes to the empirical
// best policy. Every returned solution is re-checked exhaustively.

#include <cstdint>
#include <span>
#include <vector>

#include "nsb/oracle.hpp"
#include "nsb/reward_table.hpp"
#include "nsb/types.hpp"

namespace nsb {

inline constexpr double kOpRegretConstant = 5e5;

/// Sufficient statistics of the interval the program is fit on.
struct OpProblem {
    RewardTable reward_sums;            // sum of r_hat_t(a) over t in I with x_t = x
    std::vector<double> context_counts; // rounds in I per context
    std::size_t length = 0;             // |I|
    double mu = 0.0;
    Interval source;                    // interval the data came from (bookkeeping)
};

OpProblem make_op_problem(std::span<const RoundRecord> rounds, std::size_t num_contexts,
                          std::size_t num_actions, double mu);

struct OpConfig {
    std::size_t iteration_cap = 0;  // 0 means ceil(50 / mu)
    double regret_constant = kOpRegretConstant;
};

struct OpSolution {
    PolicyWeights q;
    std::size_t support_size = 0;
    double mu = 0.0;
    Interval source;
    std::uint64_t oracle_calls = 0;
    std::size_t iterations = 0;
};

struct OpCheck {
    double regret_lhs = 0.0;       // sum_pi Q(pi) Reg_hat(pi)
    double regret_rhs = 0.0;       // 2 B K mu
    double max_variance_excess = 0.0;  // max_pi V_hat - (2K + Reg_hat/(B mu))
    bool feasible = false;
};

/// Solves the program. An empty interval yields the point mass on policy 0.
/// Throws OpNonConvergence if the iteration cap is hit or the final check fails.
OpSolution solve_op(const OpProblem& problem, ArgmaxOracle& oracle, OpConfig config = {});

/// Exhaustive check of both constraints (no oracle accounting).
OpCheck check_op(const OpProblem& problem, const PolicyWeights& q, const PolicyClass& policies,
                 double regret_constant = kOpRegretConstant, double tolerance = 1e-9);

}  // namespace nsb
