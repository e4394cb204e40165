#pragma once

// Oblivious non-stationary environments over a finite context universe.
//
// The full sequence D_1..D_T is fixed at construction. Each D_t is a context
// marginal plus a |X| x K matrix of mean rewards; rewards are drawn
// independently per arm given the context (Bernoulli or deterministic), so
// expected rewards, the per-round best policy and the total variation
// between consecutive distributions are all exactly computable.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nsb/rng.hpp"
#include "nsb/types.hpp"

namespace nsb {

enum class NoiseKind { Bernoulli, Deterministic };

struct RoundDistribution {
    std::vector<double> context_probs;  // length |X|, simplex
    std::vector<double> mean_rewards;   // row-major |X| x K, entries in [0,1]
    std::size_t num_actions = 0;

    std::size_t num_contexts() const { return context_probs.size(); }
    double mean(Context x, Action a) const { return mean_rewards[x * num_actions + a]; }

    friend bool operator==(const RoundDistribution&, const RoundDistribution&) = default;
};

struct NonstationarityMeasures {
    std::size_t segments = 1;  // S
    double delta = 0.0;        // reward variation
    double delta_bar = 0.0;    // total variation
};

class Environment {
public:
    /// `distributions` are the distinct D's; `schedule[t-1]` indexes the one used at round t.
    Environment(std::vector<RoundDistribution> distributions, std::vector<std::size_t> schedule,
                NoiseKind noise);

    std::size_t horizon() const { return schedule_.size(); }
    std::size_t num_contexts() const { return num_contexts_; }
    std::size_t num_actions() const { return num_actions_; }
    NoiseKind noise() const { return noise_; }

    const RoundDistribution& at(std::size_t t) const;

    std::pair<Context, RewardVector> sample_round(std::size_t t, Rng& rng) const;

    /// R_t(pi) = sum_x P_t(x) mean_t(x, pi(x)).
    double expected_policy_reward(std::size_t t, const Policy& pi) const;

    /// argmax_pi R_t(pi), lowest index on ties.
    PolicyIndex best_policy_at(std::size_t t, const PolicyClass& policies) const;

    /// Total variation between the distributions at rounds t-1 and t over the
    /// joint (context, reward-vector) support.
    double total_variation_step(std::size_t t) const;

    /// S, Delta and Delta-bar over `range` (whole horizon by default).
    NonstationarityMeasures measures(const PolicyClass& policies,
                                     std::optional<Interval> range = std::nullopt) const;

    /// Largest K for which Bernoulli total variation is enumerated exactly.
    static constexpr std::size_t kMaxEnumeratedActions = 20;

private:
    std::vector<RoundDistribution> distributions_;
    std::vector<std::size_t> schedule_;
    NoiseKind noise_;
    std::size_t num_contexts_ = 0;
    std::size_t num_actions_ = 0;
};

enum class EnvironmentKind { Switching, Drifting, Custom };

/// Declarative environment description, round-trippable through the harness config.
struct EnvironmentSpec {
    EnvironmentKind kind = EnvironmentKind::Switching;
    std::size_t horizon = 1000;
    std::size_t num_contexts = 2;
    std::size_t num_actions = 2;
    NoiseKind noise = NoiseKind::Bernoulli;
    std::uint64_t seed = 1;

    // Switching: either explicit segment starts (1-based, first must be 1) or
    // `num_segments` equally spaced segments. In segment s the best arm at
    // context x is (base(x) + s) mod K with mean 0.5 + gap/2; every other arm
    // has mean 0.5 - gap/2.
    std::size_t num_segments = 1;
    std::vector<std::size_t> segment_starts;
    double gap = 0.5;

    // Drifting: mean matrices drawn uniformly in [0,1] at anchors spaced
    // `anchor_spacing` rounds apart, linearly interpolated in between. The
    // per-step change of any mean is at most 1 / anchor_spacing.
    std::size_t anchor_spacing = 100;
    bool drift_contexts = false;

    // Custom: explicit distributions with their start rounds.
    std::vector<RoundDistribution> custom_distributions;
    std::vector<std::size_t> custom_starts;

    // Context marginal for switching/drifting; empty means uniform.
    std::vector<double> context_probs;
};

Environment make_environment(const EnvironmentSpec& spec);

const char* to_string(EnvironmentKind kind);
const char* to_string(NoiseKind kind);

}  // namespace nsb
