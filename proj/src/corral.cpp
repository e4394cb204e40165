#include "nsb/corral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace nsb {

CorralParams corral_params(std::size_t horizon, double interval_length, std::size_t num_policies,
                           std::size_t num_actions) {
    if (horizon < 2) throw BanditError(ErrorCode::ConfigError, "Corral requires T >= 2");
    if (num_policies < 2) throw BanditError(ErrorCode::ConfigError, "Corral requires N >= 2");
    if (!(interval_length > 0.0)) throw BanditError(ErrorCode::ConfigError, "L must be > 0");
    const double t = static_cast<double>(horizon);
    CorralParams p;
    p.horizon = horizon;
    p.gamma = 1.0 / t;
    p.beta = std::exp(1.0 / std::log(t));
    p.eta = std::min(1.0 / 810.0, std::sqrt(t / std::log(static_cast<double>(num_policies))) /
                                      (interval_length * static_cast<double>(num_actions)));
    p.num_copies = static_cast<std::size_t>(std::ceil(t * p.eta));
    p.num_copies = std::max<std::size_t>(p.num_copies, 1);
    p.start_spacing = (horizon + p.num_copies - 1) / p.num_copies;
    return p;
}

namespace {

double simplex_sum(std::span<const double> w, std::span<const double> eta,
                   std::span<const double> c, double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += 1.0 / (1.0 / w[i] + eta[i] * (c[i] - lambda));
    return s;
}

}  // namespace

LambdaSolution solve_lambda(std::span<const double> w, std::span<const double> eta,
                            std::span<const double> adjusted) {
    const std::size_t m = w.size();
    if (m == 0 || eta.size() != m || adjusted.size() != m) {
        throw BanditError(ErrorCode::InvalidArgument, "solve_lambda: mismatched lengths");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        lo = std::min(lo, adjusted[i]);
        hi = std::min(hi, 1.0 / (w[i] * eta[i]) + adjusted[i]);
    }

    LambdaSolution out;
    out.lambda = lo;
    out.residual = std::abs(simplex_sum(w, eta, adjusted, lo) - 1.0);
    while (out.residual > kLambdaTolerance && out.iterations < kLambdaIterationCap) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        ++out.iterations;
        const double f = simplex_sum(w, eta, adjusted, mid);
        const double r = std::abs(f - 1.0);
        if (r < out.residual) {
            out.residual = r;
            out.lambda = mid;
        }
        if (f > 1.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if (out.residual > kLambdaTolerance) {
        std::ostringstream msg;
        msg << "lambda bisection stalled: residual " << out.residual << " after " << out.iterations
            << " iterations, bracket [" << lo << ", " << hi << "]";
        throw BanditError(ErrorCode::NormalizationFailure, msg.str());
    }
    return out;
}

CorralMaster::CorralMaster(const CorralParams& params) : params_(params) {
    const std::size_t m = params_.num_copies;
    const double md = static_cast<double>(m);
    w_.assign(m, 1.0 / md);
    w_bar_.assign(m, 1.0 / md);
    eta_.assign(m, params_.eta);
    rho_.assign(m, 2.0 * md);
    doublings_.assign(m, 0);
    q_.assign(m, 0.0);
    q_[0] = 1.0;
}

std::size_t CorralMaster::sample_copy(Rng& rng) const { return sample_index(q_, rng); }

std::vector<double> CorralMaster::losses(std::size_t chosen, double reward) const {
    const double cost = 1.0 - reward;
    std::vector<double> out(params_.num_copies, 0.0);
    out[chosen] = cost / q_[chosen];
    for (std::size_t i = started_; i < out.size(); ++i) out[i] = cost;
    return out;
}

void CorralMaster::update(std::span<const double> losses, double reward) {
    const std::size_t m = params_.num_copies;
    const double md = static_cast<double>(m);
    const double cost = 1.0 - reward;
    std::vector<double> adjusted(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double d = losses[i] - cost;
        adjusted[i] = losses[i] + 6.0 * eta_[i] * w_[i] * d * d;
    }
    last_solve_ = solve_lambda(w_, eta_, adjusted);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        w_[i] = 1.0 / (1.0 / w_[i] + eta_[i] * (adjusted[i] - last_solve_.lambda));
        total += w_[i];
    }
    for (auto& v : w_) v /= total;

    for (std::size_t i = 0; i < m; ++i) {
        w_bar_[i] = (1.0 - params_.gamma) * w_[i] + params_.gamma / md;
        if (1.0 / w_bar_[i] > rho_[i]) {
            rho_[i] = 2.0 / w_bar_[i];
            eta_[i] *= params_.beta;
            ++doublings_[i];
        }
    }
    ++round_;
    if (round_ % params_.start_spacing == 0 && started_ < m) ++started_;
    refresh_q();
}

void CorralMaster::refresh_q() {
    double total = 0.0;
    for (std::size_t i = 0; i < started_; ++i) total += w_bar_[i];
    for (std::size_t i = 0; i < q_.size(); ++i) q_[i] = i < started_ ? w_bar_[i] / total : 0.0;
}

void CorralMaster::set_state(std::vector<double> w, std::vector<double> eta,
                             std::vector<double> rho, std::size_t started, std::size_t round) {
    const std::size_t m = params_.num_copies;
    if (w.size() != m || eta.size() != m || rho.size() != m || started < 1 || started > m) {
        throw BanditError(ErrorCode::InvalidArgument, "set_state: inconsistent state");
    }
    w_ = std::move(w);
    eta_ = std::move(eta);
    rho_ = std::move(rho);
    started_ = started;
    round_ = round;
    for (std::size_t i = 0; i < m; ++i) {
        w_bar_[i] = (1.0 - params_.gamma) * w_[i] + params_.gamma / static_cast<double>(m);
    }
    refresh_q();
}

Exp4sBase::Exp4sBase(const PolicyClass& policies, Exp4sConfig config)
    : policies_(&policies), exp4s_(policies, config) {}

ActionDistribution Exp4sBase::distribution(Context x) { return exp4s_.act(x); }

Action Exp4sBase::suggest(Context x, Rng& rng) {
    const ActionDistribution p = exp4s_.act(x);
    context_ = x;
    action_ = sample_action(p, rng);
    prob_ = p[action_];
    return action_;
}

void Exp4sBase::feed(double loss) {
    std::vector<double> policy_losses(policies_->size(), 0.0);
    if (loss != 0.0) {
        const double estimate = loss / prob_;
        for (PolicyIndex i = 0; i < policies_->size(); ++i) {
            if ((*policies_)[i](context_) == action_) policy_losses[i] = estimate;
        }
    }
    exp4s_.update_with_losses(policy_losses);
}

ActionDistribution FixedPolicyBase::distribution(Context x) {
    ActionDistribution p{std::vector<double>(num_actions_, 0.0)};
    p.probs[policy_(x)] = 1.0;
    return p;
}

Corral::Corral(const PolicyClass& policies, std::size_t horizon, CorralConfig config)
    : policies_(&policies), config_(config),
      master_(corral_params(horizon, config.interval_length, policies.size(),
                            policies.num_actions())) {
    if (config_.base == CorralBaseKind::Exp4s) {
        const double l = config_.base_interval_length > 0.0 ? config_.base_interval_length
                                                            : config_.interval_length;
        if (!(l >= 2.0)) {
            throw BanditError(ErrorCode::ConfigError, "Exp4.S base copies require L >= 2");
        }
    }
    bases_.push_back(make_base(0));
}

std::unique_ptr<BaseLearner> Corral::make_base(std::size_t index) const {
    if (config_.base == CorralBaseKind::FixedPolicy) {
        return std::make_unique<FixedPolicyBase>((*policies_)[index % policies_->size()],
                                                 policies_->num_actions());
    }
    const double l = config_.base_interval_length > 0.0 ? config_.base_interval_length
                                                        : config_.interval_length;
    return std::make_unique<Exp4sBase>(*policies_, Exp4sConfig{l});
}

ActionDistribution Corral::act(Context x) {
    const auto& q = master_.q();
    ActionDistribution out{std::vector<double>(policies_->num_actions(), 0.0)};
    for (std::size_t i = 0; i < bases_.size(); ++i) {
        if (q[i] == 0.0) continue;
        const ActionDistribution p = bases_[i]->distribution(x);
        for (Action a = 0; a < out.size(); ++a) out.probs[a] += q[i] * p[a];
    }
    return out;
}

Decision Corral::decide(Context x, Rng& rng) {
    const auto& q = master_.q();
    suggestions_.resize(bases_.size());
    Decision d{ActionDistribution{std::vector<double>(policies_->num_actions(), 0.0)}, 0};
    for (std::size_t i = 0; i < bases_.size(); ++i) {
        suggestions_[i] = bases_[i]->suggest(x, rng);
        d.probs.probs[suggestions_[i]] += q[i];
    }
    chosen_ = master_.sample_copy(rng);
    d.action = suggestions_[chosen_];
    pending_ = true;
    return d;
}

RestartDecision Corral::observe(const RoundRecord& rec) {
    if (!pending_) {
        throw BanditError(ErrorCode::InvalidArgument, "Corral::observe without a preceding decide");
    }
    pending_ = false;
    const std::vector<double> losses = master_.losses(chosen_, rec.observed_reward);
    for (std::size_t i = 0; i < bases_.size(); ++i) bases_[i]->feed(losses[i]);
    master_.update(losses, rec.observed_reward);
    while (bases_.size() < master_.started()) bases_.push_back(make_base(bases_.size()));
    return RestartDecision::None;
}

}  // namespace nsb
