#pragma once

// Ada-BinGreedy: the parameter-free variant of Ada-Greedy.
//
// Block j of an epoch has H = 2^{j-1} rounds split into bins of length
// ceil(sqrt(H)) (the last one truncated). Bin b is an exploration bin with
// probability 1/sqrt(b) and plays uniformly; otherwise it plays
//
//     mu_t + (1 - K mu_t) 1{a = leader(x_t)},
//     mu_t = min{1/K, (t - T_i)^{-1/3} sqrt(ln(N/delta)/K)}.
//
// In exploration bins of blocks j > 1 the suffixes A = [t-l+1, t] that stay
// inside the bin are compared against the leader:
//
//     R_hat_A(pi_hat_A) > R_hat_A(leader) + 2 (alpha_A + beta_B),
//
// with beta_B taken at mu_B = min over B of mu_t. A firing test restarts the
// epoch at T_{i+1} = t. There is no interval-length parameter.

#include <cstdint>
#include <vector>

#include "nsb/estimators.hpp"
#include "nsb/learner.hpp"
#include "nsb/oracle.hpp"
#include "nsb/rng.hpp"

namespace nsb {

inline constexpr double kBinLengthExponent = 0.5;    // bin length H^{1/2}
inline constexpr double kExplorationExponent = 0.5;  // Pr[exploration bin b] = b^{-1/2}

struct AdaBinGreedyConfig {
    double delta = 0.05;
    double threshold_scale = 1.0;
    std::uint64_t seed = 0;  // stream for the bin-kind draws
};

enum class BinKind { Exploration, Exploitation };

/// Bin layout of a block of length H.
struct BinLayout {
    std::size_t bin_length;
    std::size_t num_bins;
};
BinLayout bin_layout(std::size_t block_length);

class AdaBinGreedy final : public Learner {
public:
    AdaBinGreedy(const PolicyClass& policies, std::size_t horizon, AdaBinGreedyConfig config);

    std::string_view name() const override { return "ada-bingreedy"; }

    ActionDistribution act(Context x) override;
    RestartDecision observe(const RoundRecord& rec) override;

    /// Test for the last observed round. Requires j > 1 and an exploration bin.
    bool nonstat_test();

    std::uint64_t oracle_calls() const override { return oracle_.stats().calls; }
    std::size_t restarts() const override { return restarts_; }

    /// mu_t for a round at 1-based epoch offset n.
    double mu_at(std::size_t offset) const;

    std::size_t epoch_start() const { return epoch_start_; }
    std::size_t block() const { return block_; }
    std::size_t bin() const { return bin_; }
    BinKind bin_kind() const { return bin_kind_; }
    /// Epoch offsets [first, last] of the bin the next round falls in.
    Interval bin_offsets() const { return bin_offsets_; }
    PolicyIndex leader() const { return leader_; }
    std::size_t round() const { return round_; }
    const EpochLog& epoch_log() const { return log_; }

    /// Kinds of every bin entered so far, with their (block, bin) index.
    struct BinDraw {
        std::size_t block;
        std::size_t bin;
        BinKind kind;
    };
    const std::vector<BinDraw>& bin_history() const { return bin_history_; }

private:
    void start_epoch(std::size_t after_round);
    void enter_offset(std::size_t offset);

    const PolicyClass* policies_;
    std::size_t horizon_;
    AdaBinGreedyConfig config_;
    ArgmaxOracle oracle_;
    EpochLog log_;
    Rng rng_;
    double log_term_;  // sqrt(ln(N/delta)/K)

    std::size_t round_ = 0;
    std::size_t epoch_start_ = 0;
    std::size_t block_ = 1;
    std::size_t bin_ = 1;
    BinKind bin_kind_ = BinKind::Exploration;
    Interval bin_offsets_{1, 1};
    PolicyIndex leader_ = 0;
    std::size_t restarts_ = 0;
    std::vector<BinDraw> bin_history_;
};

}  // namespace nsb
