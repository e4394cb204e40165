#pragma once

// Shared domain types for non-stationary contextual bandits.
//
// Contexts are indices into a finite universe {0, ..., |X|-1}; actions are
// indices into {0, ..., K-1}. Round indices are 1-based throughout, matching
// the usual t = 1..T convention in the regret definitions.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsb {

using Context = std::size_t;
using Action = std::size_t;
using PolicyIndex = std::size_t;

/// Absolute tolerance used for every probability/simplex comparison.
inline constexpr double kProbTolerance = 1e-12;

enum class ErrorCode {
    EmptyInterval,
    MuTooLarge,
    DegenerateWeights,
    InvalidArgument,
    RoundOutOfRange,
    TVEnumerationTooLarge,
    OpNonConvergence,
    NormalizationFailure,
    InvalidPartition,
    ConfigError,
};

const char* to_string(ErrorCode code);

class BanditError : public std::runtime_error {
public:
    BanditError(ErrorCode code, const std::string& what);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// A deterministic map from contexts to actions, stored as a lookup table.
class Policy {
public:
    Policy() = default;
    Policy(std::vector<Action> table, std::size_t num_actions);

    Action operator()(Context x) const { return table_[x]; }
    std::size_t num_contexts() const { return table_.size(); }
    const std::vector<Action>& table() const { return table_; }

    friend bool operator==(const Policy&, const Policy&) = default;

private:
    std::vector<Action> table_;
};

/// Finite, ordered comparator class. Policies are pairwise distinct.
class PolicyClass {
public:
    PolicyClass(std::vector<Policy> policies, std::size_t num_contexts, std::size_t num_actions);

    /// Every map X -> [K]; only sensible for tiny universes (K^|X| policies).
    static PolicyClass all_maps(std::size_t num_contexts, std::size_t num_actions);

    /// `n` distinct random policies drawn from a seeded stream.
    static PolicyClass random(std::size_t n, std::size_t num_contexts, std::size_t num_actions,
                              std::uint64_t seed);

    std::size_t size() const { return policies_.size(); }
    std::size_t num_contexts() const { return num_contexts_; }
    std::size_t num_actions() const { return num_actions_; }
    const Policy& operator[](PolicyIndex i) const { return policies_[i]; }
    const std::vector<Policy>& policies() const { return policies_; }

private:
    std::vector<Policy> policies_;
    std::size_t num_contexts_;
    std::size_t num_actions_;
};

/// Probability vector over the K actions.
struct ActionDistribution {
    std::vector<double> probs;

    std::size_t size() const { return probs.size(); }
    double operator[](Action a) const { return probs[a]; }

    /// True when entries are non-negative and sum to 1 within kProbTolerance.
    bool is_valid() const;
};

using RewardVector = std::vector<double>;

/// One round of bandit feedback: (x_t, p_t, a_t, r_t(a_t)).
struct RoundRecord {
    std::size_t t = 0;
    Context context = 0;
    Action action = 0;
    ActionDistribution probs;
    double observed_reward = 0.0;
};

/// Distribution over the policy class (dense, length N).
struct PolicyWeights {
    std::vector<double> weights;

    static PolicyWeights uniform(std::size_t n);
    static PolicyWeights point_mass(std::size_t n, PolicyIndex i);

    std::size_t size() const { return weights.size(); }
    double operator[](PolicyIndex i) const { return weights[i]; }
    bool is_valid() const;
};

/// Closed interval [first, last] of 1-based round indices; empty when last < first.
struct Interval {
    std::size_t first = 1;
    std::size_t last = 0;

    std::size_t length() const { return last >= first ? last - first + 1 : 0; }
    bool empty() const { return last < first; }
    bool contains(std::size_t t) const { return t >= first && t <= last; }
    bool contains(const Interval& other) const {
        return other.empty() || (other.first >= first && other.last <= last);
    }
};

}  // namespace nsb
