#pragma once

#include <cstdint>
#include <string_view>

#include "nsb/rng.hpp"
#include "nsb/types.hpp"

namespace nsb {

enum class RestartDecision { None, Forced, TestTriggered };

const char* to_string(RestartDecision d);

struct Decision {
    ActionDistribution probs;
    Action action = 0;
};

Action sample_action(const ActionDistribution& p, Rng& rng);

/// Round-by-round interface the harness drives: decide(x_t), then
/// observe(record of round t).
class Learner {
public:
    virtual ~Learner() = default;

    virtual std::string_view name() const = 0;

    virtual ActionDistribution act(Context x) = 0;

    /// Distribution plus sampled action. The default samples from act(x).
    virtual Decision decide(Context x, Rng& rng) {
        Decision d{act(x), 0};
        d.action = sample_action(d.probs, rng);
        return d;
    }

    virtual RestartDecision observe(const RoundRecord& rec) = 0;

    virtual std::uint64_t oracle_calls() const { return 0; }
    virtual std::size_t restarts() const { return 0; }
};

/// Plays the uniform distribution every round; the regret reference point.
class UniformLearner final : public Learner {
public:
    explicit UniformLearner(std::size_t num_actions) : num_actions_(num_actions) {}

    std::string_view name() const override { return "uniform-baseline"; }
    ActionDistribution act(Context) override {
        return ActionDistribution{
            std::vector<double>(num_actions_, 1.0 / static_cast<double>(num_actions_))};
    }
    RestartDecision observe(const RoundRecord&) override { return RestartDecision::None; }

private:
    std::size_t num_actions_;
};

}  // namespace nsb
