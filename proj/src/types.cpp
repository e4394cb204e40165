#include "nsb/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "nsb/rng.hpp"

namespace nsb {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyInterval: return "EmptyInterval";
        case ErrorCode::MuTooLarge: return "MuTooLarge";
        case ErrorCode::DegenerateWeights: return "DegenerateWeights";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::RoundOutOfRange: return "RoundOutOfRange";
        case ErrorCode::TVEnumerationTooLarge: return "TVEnumerationTooLarge";
        case ErrorCode::OpNonConvergence: return "OpNonConvergence";
        case ErrorCode::NormalizationFailure: return "NormalizationFailure";
        case ErrorCode::InvalidPartition: return "InvalidPartition";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

BanditError::BanditError(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

Policy::Policy(std::vector<Action> table, std::size_t num_actions) : table_(std::move(table)) {
    for (Action a : table_) {
        if (a >= num_actions) {
            throw BanditError(ErrorCode::InvalidArgument, "policy action out of range");
        }
    }
}

PolicyClass::PolicyClass(std::vector<Policy> policies, std::size_t num_contexts,
                         std::size_t num_actions)
    : policies_(std::move(policies)), num_contexts_(num_contexts), num_actions_(num_actions) {
    if (policies_.empty()) {
        throw BanditError(ErrorCode::InvalidArgument, "policy class must be non-empty");
    }
    std::set<std::vector<Action>> seen;
    for (const auto& p : policies_) {
        if (p.num_contexts() != num_contexts_) {
            throw BanditError(ErrorCode::InvalidArgument, "policy table size != |X|");
        }
        for (Action a : p.table()) {
            if (a >= num_actions_) {
                throw BanditError(ErrorCode::InvalidArgument, "policy action out of range");
            }
        }
        if (!seen.insert(p.table()).second) {
            throw BanditError(ErrorCode::InvalidArgument, "policies must be pairwise distinct");
        }
    }
}

PolicyClass PolicyClass::all_maps(std::size_t num_contexts, std::size_t num_actions) {
    double count = std::pow(static_cast<double>(num_actions), static_cast<double>(num_contexts));
    if (count > 1e6) {
        throw BanditError(ErrorCode::InvalidArgument, "K^|X| too large for an exhaustive class");
    }
    std::vector<Policy> out;
    std::vector<Action> table(num_contexts, 0);
    for (;;) {
        out.emplace_back(table, num_actions);
        // Odometer increment, context 0 is the least significant digit.
        std::size_t x = 0;
        while (x < num_contexts && ++table[x] == num_actions) {
            table[x] = 0;
            ++x;
        }
        if (x == num_contexts) break;
    }
    return PolicyClass(std::move(out), num_contexts, num_actions);
}

PolicyClass PolicyClass::random(std::size_t n, std::size_t num_contexts, std::size_t num_actions,
                                std::uint64_t seed) {
    double capacity = std::pow(static_cast<double>(num_actions), static_cast<double>(num_contexts));
    if (static_cast<double>(n) > capacity) {
        throw BanditError(ErrorCode::InvalidArgument, "more policies requested than distinct maps");
    }
    Rng rng(seed);
    std::uniform_int_distribution<Action> pick(0, num_actions - 1);
    std::set<std::vector<Action>> seen;
    std::vector<Policy> out;
    out.reserve(n);
    while (out.size() < n) {
        std::vector<Action> table(num_contexts);
        for (auto& a : table) a = pick(rng);
        if (seen.insert(table).second) out.emplace_back(std::move(table), num_actions);
    }
    return PolicyClass(std::move(out), num_contexts, num_actions);
}

bool ActionDistribution::is_valid() const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) return false;
        sum += p;
    }
    return std::abs(sum - 1.0) <= kProbTolerance;
}

PolicyWeights PolicyWeights::uniform(std::size_t n) {
    return PolicyWeights{std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

PolicyWeights PolicyWeights::point_mass(std::size_t n, PolicyIndex i) {
    PolicyWeights w{std::vector<double>(n, 0.0)};
    w.weights.at(i) = 1.0;
    return w;
}

bool PolicyWeights::is_valid() const {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) return false;
        sum += w;
    }
    return std::abs(sum - 1.0) <= kProbTolerance;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
    // FNV-1a over the tag, then mixed with base and index.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix64(mix64(base) ^ mix64(h) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

double uniform01(Rng& rng) {
    // 53 random mantissa bits; portable across standard libraries.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t sample_index(std::span<const double> weights, Rng& rng) {
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        acc += weights[i];
        last_positive = i;
        if (u < acc) return i;
    }
    return last_positive;
}

bool bernoulli(double p, Rng& rng) { return uniform01(rng) < p; }

}  // namespace nsb
