#include "nsb/op_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nsb/estimators.hpp"

namespace nsb {

OpProblem make_op_problem(std::span<const RoundRecord> rounds, std::size_t num_contexts,
                          std::size_t num_actions, double mu) {
    OpProblem p;
    p.reward_sums = RewardTable(num_contexts, num_actions);
    p.context_counts.assign(num_contexts, 0.0);
    for (const auto& rec : rounds) {
        p.reward_sums(rec.context, rec.action) += iw_estimate(rec, rec.action);
        p.context_counts[rec.context] += 1.0;
    }
    p.reward_sums.example_count = rounds.size();
    p.length = rounds.size();
    p.mu = mu;
    if (!rounds.empty()) p.source = Interval{rounds.front().t, rounds.back().t};
    return p;
}

namespace {

// Q^mu(a|x) from the (sub-)distribution's projection.
struct SmoothedProjection {
    std::size_t num_actions;
    double mu;
    double keep;  // 1 - K mu
    std::vector<double> projected;  // Q(a|x), row-major

    double smoothed(Context x, Action a) const { return mu + keep * projected[x * num_actions + a]; }
};

double variance_of(const SmoothedProjection& sp, const Policy& pi,
                   const std::vector<double>& context_weight) {
    double v = 0.0;
    for (Context x = 0; x < context_weight.size(); ++x) {
        if (context_weight[x] != 0.0) v += context_weight[x] / sp.smoothed(x, pi(x));
    }
    return v;
}

double second_moment_of(const SmoothedProjection& sp, const Policy& pi,
                        const std::vector<double>& context_weight) {
    double s = 0.0;
    for (Context x = 0; x < context_weight.size(); ++x) {
        if (context_weight[x] == 0.0) continue;
        const double p = sp.smoothed(x, pi(x));
        s += context_weight[x] / (p * p);
    }
    return s;
}

}  // namespace

OpSolution solve_op(const OpProblem& problem, ArgmaxOracle& oracle, OpConfig config) {
    const PolicyClass& policies = oracle.policies();
    const std::size_t n = policies.size();
    const std::size_t nx = policies.num_contexts();
    const std::size_t k = policies.num_actions();
    const double kd = static_cast<double>(k);
    const double mu = problem.mu;
    if (!(mu > 0.0 && mu <= 1.0 / kd + kProbTolerance)) {
        throw BanditError(ErrorCode::MuTooLarge, "OP floor must lie in (0, 1/K]");
    }

    OpSolution sol;
    sol.mu = mu;
    sol.source = problem.source;
    if (problem.length == 0) {
        sol.q = PolicyWeights::point_mass(n, 0);
        sol.support_size = 1;
        return sol;
    }

    const std::uint64_t calls_before = oracle.stats().calls;
    const double len = static_cast<double>(problem.length);
    const double big_b = config.regret_constant;
    const std::size_t cap =
        config.iteration_cap > 0 ? config.iteration_cap : static_cast<std::size_t>(std::ceil(50.0 / mu));

    // Empirical best and per-policy regret bonus b(pi) = Reg_hat(pi) / (B mu).
    const AmoResult best = oracle(problem.reward_sums);
    const double best_reward = best.value / len;
    auto bonus = [&](PolicyIndex i) {
        return std::max(0.0, best_reward - problem.reward_sums.value(policies[i]) / len) /
               (big_b * mu);
    };

    std::vector<double> context_weight(nx);
    for (Context x = 0; x < nx; ++x) context_weight[x] = problem.context_counts[x] / len;

    std::vector<double> q(n, 0.0);
    std::vector<PolicyIndex> support;
    SmoothedProjection sp{k, mu, 1.0 - kd * mu, std::vector<double>(nx * k, 0.0)};

    bool converged = false;
    std::size_t iter = 0;
    double last_violation = 0.0;
    for (; iter < cap; ++iter) {
        double mass = 0.0;
        for (PolicyIndex i : support) mass += q[i] * (2.0 * kd + bonus(i));
        if (mass > 2.0 * kd) {
            const double c = 2.0 * kd / mass;
            for (PolicyIndex i : support) q[i] *= c;
            for (auto& v : sp.projected) v *= c;
        }

        // argmax_pi V_hat(Q, pi) - b(pi) through one oracle call.
        RewardTable data(nx, k);
        for (Context x = 0; x < nx; ++x) {
            for (Action a = 0; a < k; ++a) {
                data(x, a) = context_weight[x] / sp.smoothed(x, a) +
                             problem.reward_sums(x, a) / (len * big_b * mu);
            }
        }
        data.example_count = problem.length;
        const PolicyIndex cand = oracle(data).index;
        const Policy& pi = policies[cand];
        const double v = variance_of(sp, pi, context_weight);
        const double violation = v - (2.0 * kd + bonus(cand));
        last_violation = violation;
        if (violation <= 0.0) {
            converged = true;
            break;
        }
        const double s = second_moment_of(sp, pi, context_weight);
        const double step = (v + violation) / (2.0 * (1.0 - kd * mu) * s);
        if (q[cand] == 0.0) support.push_back(cand);
        q[cand] += step;
        for (Context x = 0; x < nx; ++x) sp.projected[x * k + pi(x)] += step;
    }
    sol.iterations = iter;
    sol.oracle_calls = oracle.stats().calls - calls_before;
    if (!converged) {
        std::ostringstream msg;
        msg << "no feasible point after " << iter << " iterations (mu=" << mu
            << ", |I|=" << problem.length << ", last violation=" << last_violation << ")";
        throw BanditError(ErrorCode::OpNonConvergence, msg.str());
    }

    double total = 0.0;
    for (double w : q) total += w;
    q[best.index] += std::max(0.0, 1.0 - total);
    sol.q = PolicyWeights{std::move(q)};
    sol.support_size = static_cast<std::size_t>(
        std::count_if(sol.q.weights.begin(), sol.q.weights.end(), [](double w) { return w > 0.0; }));

    const OpCheck check = check_op(problem, sol.q, policies, big_b);
    if (!check.feasible) {
        std::ostringstream msg;
        msg << "post-solve check failed (regret " << check.regret_lhs << " vs " << check.regret_rhs
            << ", variance excess " << check.max_variance_excess << ")";
        throw BanditError(ErrorCode::OpNonConvergence, msg.str());
    }
    return sol;
}

OpCheck check_op(const OpProblem& problem, const PolicyWeights& q, const PolicyClass& policies,
                 double regret_constant, double tolerance) {
    const std::size_t nx = policies.num_contexts();
    const std::size_t k = policies.num_actions();
    const double kd = static_cast<double>(k);
    const double mu = problem.mu;
    OpCheck out;
    out.regret_rhs = 2.0 * regret_constant * kd * mu;
    if (problem.length == 0) {
        out.feasible = q.is_valid();
        return out;
    }
    const double len = static_cast<double>(problem.length);

    std::vector<double> rewards(policies.size());
    double best = -std::numeric_limits<double>::infinity();
    for (PolicyIndex i = 0; i < policies.size(); ++i) {
        rewards[i] = problem.reward_sums.value(policies[i]) / len;
        best = std::max(best, rewards[i]);
    }

    std::vector<double> smoothed(nx * k, mu);
    for (PolicyIndex i = 0; i < policies.size(); ++i) {
        if (q[i] == 0.0) continue;
        for (Context x = 0; x < nx; ++x) smoothed[x * k + policies[i](x)] += (1.0 - kd * mu) * q[i];
    }

    out.max_variance_excess = -std::numeric_limits<double>::infinity();
    for (PolicyIndex i = 0; i < policies.size(); ++i) {
        const double regret = best - rewards[i];
        out.regret_lhs += q[i] * regret;
        double v = 0.0;
        for (Context x = 0; x < nx; ++x) {
            if (problem.context_counts[x] != 0.0) {
                v += problem.context_counts[x] / len / smoothed[x * k + policies[i](x)];
            }
        }
        out.max_variance_excess =
            std::max(out.max_variance_excess, v - (2.0 * kd + regret / (regret_constant * mu)));
    }
    out.feasible = q.is_valid() && out.regret_lhs <= out.regret_rhs + tolerance &&
                   out.max_variance_excess <= tolerance;
    return out;
}

}  // namespace nsb
