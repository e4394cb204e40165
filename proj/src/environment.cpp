#include "nsb/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nsb {

namespace {

void validate(const RoundDistribution& d, std::size_t num_contexts, std::size_t num_actions) {
    if (d.context_probs.size() != num_contexts || d.num_actions != num_actions ||
        d.mean_rewards.size() != num_contexts * num_actions) {
        throw BanditError(ErrorCode::InvalidArgument, "distribution dimensions disagree");
    }
    double sum = 0.0;
    for (double p : d.context_probs) {
        if (!(p >= 0.0)) throw BanditError(ErrorCode::InvalidArgument, "negative context prob");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTolerance) {
        throw BanditError(ErrorCode::InvalidArgument, "context probabilities must sum to 1");
    }
    for (double m : d.mean_rewards) {
        if (!(m >= 0.0 && m <= 1.0)) {
            throw BanditError(ErrorCode::InvalidArgument, "mean rewards must lie in [0,1]");
        }
    }
}

// Probability of the reward outcome `bits` (bit a set = arm a paid 1) under
// independent Bernoulli arms with the given means.
double outcome_prob(const RoundDistribution& d, Context x, std::uint32_t bits) {
    double p = 1.0;
    for (Action a = 0; a < d.num_actions; ++a) {
        const double m = d.mean(x, a);
        p *= (bits >> a) & 1U ? m : 1.0 - m;
    }
    return p;
}

std::vector<double> uniform_probs(std::size_t n) {
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

std::vector<double> random_simplex(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    double sum = 0.0;
    for (auto& x : v) {
        x = -std::log(1.0 - uniform01(rng));  // Exp(1) -> Dirichlet(1,...,1)
        sum += x;
    }
    for (auto& x : v) x /= sum;
    return v;
}

}  // namespace

const char* to_string(EnvironmentKind kind) {
    switch (kind) {
        case EnvironmentKind::Switching: return "switching";
        case EnvironmentKind::Drifting: return "drifting";
        case EnvironmentKind::Custom: return "custom";
    }
    return "unknown";
}

const char* to_string(NoiseKind kind) {
    return kind == NoiseKind::Bernoulli ? "bernoulli" : "deterministic";
}

Environment::Environment(std::vector<RoundDistribution> distributions,
                         std::vector<std::size_t> schedule, NoiseKind noise)
    : distributions_(std::move(distributions)), schedule_(std::move(schedule)), noise_(noise) {
    if (distributions_.empty() || schedule_.empty()) {
        throw BanditError(ErrorCode::InvalidArgument, "environment needs T >= 1 and a distribution");
    }
    num_contexts_ = distributions_.front().num_contexts();
    num_actions_ = distributions_.front().num_actions;
    if (num_contexts_ == 0 || num_actions_ == 0) {
        throw BanditError(ErrorCode::InvalidArgument, "empty context or action set");
    }
    for (const auto& d : distributions_) validate(d, num_contexts_, num_actions_);
    for (std::size_t idx : schedule_) {
        if (idx >= distributions_.size()) {
            throw BanditError(ErrorCode::InvalidArgument, "schedule references unknown distribution");
        }
    }
}

const RoundDistribution& Environment::at(std::size_t t) const {
    if (t < 1 || t > schedule_.size()) {
        throw BanditError(ErrorCode::RoundOutOfRange, "round " + std::to_string(t) + " outside [1, T]");
    }
    return distributions_[schedule_[t - 1]];
}

std::pair<Context, RewardVector> Environment::sample_round(std::size_t t, Rng& rng) const {
    const auto& d = at(t);
    const Context x = sample_index(d.context_probs, rng);
    RewardVector r(num_actions_);
    for (Action a = 0; a < num_actions_; ++a) {
        const double m = d.mean(x, a);
        r[a] = noise_ == NoiseKind::Deterministic ? m : (bernoulli(m, rng) ? 1.0 : 0.0);
    }
    return {x, std::move(r)};
}

double Environment::expected_policy_reward(std::size_t t, const Policy& pi) const {
    const auto& d = at(t);
    double v = 0.0;
    for (Context x = 0; x < num_contexts_; ++x) v += d.context_probs[x] * d.mean(x, pi(x));
    return v;
}

PolicyIndex Environment::best_policy_at(std::size_t t, const PolicyClass& policies) const {
    PolicyIndex best = 0;
    double best_value = expected_policy_reward(t, policies[0]);
    for (PolicyIndex i = 1; i < policies.size(); ++i) {
        const double v = expected_policy_reward(t, policies[i]);
        if (v > best_value) {
            best = i;
            best_value = v;
        }
    }
    return best;
}

double Environment::total_variation_step(std::size_t t) const {
    const auto& cur = at(t);
    const auto& prev = at(t - 1);
    if (cur == prev) return 0.0;
    double l1 = 0.0;
    if (noise_ == NoiseKind::Deterministic) {
        for (Context x = 0; x < num_contexts_; ++x) {
            bool same = true;
            for (Action a = 0; a < num_actions_; ++a) same &= cur.mean(x, a) == prev.mean(x, a);
            const double pc = cur.context_probs[x];
            const double pp = prev.context_probs[x];
            l1 += same ? std::abs(pc - pp) : pc + pp;
        }
    } else {
        if (num_actions_ > kMaxEnumeratedActions) {
            throw BanditError(ErrorCode::TVEnumerationTooLarge,
                              "K=" + std::to_string(num_actions_) + " exceeds enumeration limit");
        }
        const std::uint32_t outcomes = 1U << num_actions_;
        for (Context x = 0; x < num_contexts_; ++x) {
            const double pc = cur.context_probs[x];
            const double pp = prev.context_probs[x];
            for (std::uint32_t bits = 0; bits < outcomes; ++bits) {
                l1 += std::abs(pc * outcome_prob(cur, x, bits) - pp * outcome_prob(prev, x, bits));
            }
        }
    }
    return 0.5 * l1;
}

NonstationarityMeasures Environment::measures(const PolicyClass& policies,
                                              std::optional<Interval> range) const {
    const Interval r = range.value_or(Interval{1, horizon()});
    if (r.empty() || r.first < 1 || r.last > horizon()) {
        throw BanditError(ErrorCode::RoundOutOfRange, "measure interval outside [1, T]");
    }
    NonstationarityMeasures m;
    std::vector<double> prev_rewards(policies.size());
    for (PolicyIndex i = 0; i < policies.size(); ++i) {
        prev_rewards[i] = expected_policy_reward(r.first, policies[i]);
    }
    std::vector<double> rewards(policies.size());
    for (std::size_t t = r.first + 1; t <= r.last; ++t) {
        if (at(t) == at(t - 1)) continue;
        ++m.segments;
        double step = 0.0;
        for (PolicyIndex i = 0; i < policies.size(); ++i) {
            rewards[i] = expected_policy_reward(t, policies[i]);
            step = std::max(step, std::abs(rewards[i] - prev_rewards[i]));
        }
        m.delta += step;
        m.delta_bar += total_variation_step(t);
        prev_rewards.swap(rewards);
    }
    return m;
}

// ---------------------------------------------------------------------------

namespace {

Environment make_switching(const EnvironmentSpec& spec) {
    const std::size_t nx = spec.num_contexts;
    const std::size_t k = spec.num_actions;
    std::vector<std::size_t> starts = spec.segment_starts;
    if (starts.empty()) {
        if (spec.num_segments == 0 || spec.num_segments > spec.horizon) {
            throw BanditError(ErrorCode::InvalidArgument, "need 1 <= segments <= T");
        }
        for (std::size_t s = 0; s < spec.num_segments; ++s) {
            starts.push_back(1 + s * spec.horizon / spec.num_segments);
        }
    }
    if (starts.front() != 1) {
        throw BanditError(ErrorCode::InvalidArgument, "first segment must start at round 1");
    }
    for (std::size_t s = 1; s < starts.size(); ++s) {
        if (starts[s] <= starts[s - 1] || starts[s] > spec.horizon) {
            throw BanditError(ErrorCode::InvalidArgument,
                              "segment boundaries must be strictly increasing within [1, T]");
        }
    }
    if (!(spec.gap >= 0.0 && spec.gap <= 1.0)) {
        throw BanditError(ErrorCode::InvalidArgument, "gap must lie in [0,1]");
    }
    Rng rng(spec.seed);
    std::vector<Action> base(nx);
    for (auto& a : base) a = static_cast<Action>(uniform01(rng) * static_cast<double>(k)) % k;
    const auto probs = spec.context_probs.empty() ? uniform_probs(nx) : spec.context_probs;

    std::vector<RoundDistribution> dists;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        RoundDistribution d{probs, std::vector<double>(nx * k, 0.5 - spec.gap / 2.0), k};
        for (Context x = 0; x < nx; ++x) d.mean_rewards[x * k + (base[x] + s) % k] = 0.5 + spec.gap / 2.0;
        dists.push_back(std::move(d));
    }
    std::vector<std::size_t> schedule(spec.horizon);
    std::size_t seg = 0;
    for (std::size_t t = 1; t <= spec.horizon; ++t) {
        while (seg + 1 < starts.size() && t >= starts[seg + 1]) ++seg;
        schedule[t - 1] = seg;
    }
    return Environment(std::move(dists), std::move(schedule), spec.noise);
}

Environment make_drifting(const EnvironmentSpec& spec) {
    const std::size_t nx = spec.num_contexts;
    const std::size_t k = spec.num_actions;
    if (spec.anchor_spacing == 0) {
        throw BanditError(ErrorCode::InvalidArgument, "anchor spacing must be positive");
    }
    Rng rng(spec.seed);
    const std::size_t num_anchors = (spec.horizon - 1) / spec.anchor_spacing + 2;
    std::vector<std::vector<double>> means(num_anchors, std::vector<double>(nx * k));
    std::vector<std::vector<double>> ctx(num_anchors);
    const auto fixed_probs = spec.context_probs.empty() ? uniform_probs(nx) : spec.context_probs;
    for (std::size_t i = 0; i < num_anchors; ++i) {
        for (auto& m : means[i]) m = uniform01(rng);
        ctx[i] = spec.drift_contexts ? random_simplex(nx, rng) : fixed_probs;
    }
    std::vector<RoundDistribution> dists;
    dists.reserve(spec.horizon);
    std::vector<std::size_t> schedule(spec.horizon);
    for (std::size_t t = 1; t <= spec.horizon; ++t) {
        const std::size_t i = (t - 1) / spec.anchor_spacing;
        const double w = static_cast<double>((t - 1) % spec.anchor_spacing) /
                         static_cast<double>(spec.anchor_spacing);
        RoundDistribution d{std::vector<double>(nx), std::vector<double>(nx * k), k};
        for (std::size_t j = 0; j < nx * k; ++j) {
            d.mean_rewards[j] = std::clamp((1.0 - w) * means[i][j] + w * means[i + 1][j], 0.0, 1.0);
        }
        double sum = 0.0;
        for (Context x = 0; x < nx; ++x) {
            d.context_probs[x] = (1.0 - w) * ctx[i][x] + w * ctx[i + 1][x];
            sum += d.context_probs[x];
        }
        for (auto& p : d.context_probs) p /= sum;
        dists.push_back(std::move(d));
        schedule[t - 1] = t - 1;
    }
    return Environment(std::move(dists), std::move(schedule), spec.noise);
}

Environment make_custom(const EnvironmentSpec& spec) {
    const auto& starts = spec.custom_starts;
    if (spec.custom_distributions.empty() || starts.size() != spec.custom_distributions.size()) {
        throw BanditError(ErrorCode::InvalidArgument, "custom environment needs one start per distribution");
    }
    if (starts.front() != 1) {
        throw BanditError(ErrorCode::InvalidArgument, "first segment must start at round 1");
    }
    for (std::size_t s = 1; s < starts.size(); ++s) {
        if (starts[s] <= starts[s - 1] || starts[s] > spec.horizon) {
            throw BanditError(ErrorCode::InvalidArgument,
                              "segment boundaries must be strictly increasing within [1, T]");
        }
    }
    std::vector<std::size_t> schedule(spec.horizon);
    std::size_t seg = 0;
    for (std::size_t t = 1; t <= spec.horizon; ++t) {
        while (seg + 1 < starts.size() && t >= starts[seg + 1]) ++seg;
        schedule[t - 1] = seg;
    }
    return Environment(spec.custom_distributions, std::move(schedule), spec.noise);
}

}  // namespace

Environment make_environment(const EnvironmentSpec& spec) {
    if (spec.horizon == 0) throw BanditError(ErrorCode::InvalidArgument, "T must be >= 1");
    if (spec.kind != EnvironmentKind::Custom) {
        if (spec.num_contexts == 0 || spec.num_actions == 0) {
            throw BanditError(ErrorCode::InvalidArgument, "need |X| >= 1 and K >= 1");
        }
        if (!spec.context_probs.empty() && spec.context_probs.size() != spec.num_contexts) {
            throw BanditError(ErrorCode::InvalidArgument, "context_probs must have |X| entries");
        }
    }
    switch (spec.kind) {
        case EnvironmentKind::Switching: return make_switching(spec);
        case EnvironmentKind::Drifting: return make_drifting(spec);
        case EnvironmentKind::Custom: return make_custom(spec);
    }
    throw BanditError(ErrorCode::InvalidArgument, "unknown environment kind");
}

}  // namespace nsb
