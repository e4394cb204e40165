#pragma once

#include <cstddef>
#include <vector>

#include "nsb/types.hpp"

namespace nsb {

/// Aggregated weighted dataset: entry (x, a) holds the summed reward that a
/// policy collects by playing a on every example with context x. Summing a
/// multiset of (x, r) pairs this way loses nothing the argmax oracle needs,
/// since a policy's value is sum_x table(x, pi(x)).
class RewardTable {
public:
    RewardTable() = default;
    RewardTable(std::size_t num_contexts, std::size_t num_actions)
        : num_contexts_(num_contexts), num_actions_(num_actions),
          cells_(num_contexts * num_actions, 0.0) {}

    std::size_t num_contexts() const { return num_contexts_; }
    std::size_t num_actions() const { return num_actions_; }

    double& operator()(Context x, Action a) { return cells_[x * num_actions_ + a]; }
    double operator()(Context x, Action a) const { return cells_[x * num_actions_ + a]; }

    /// Number of raw examples folded into this table (for oracle accounting).
    std::size_t example_count = 0;

    double value(const Policy& pi) const {
        double v = 0.0;
        for (Context x = 0; x < num_contexts_; ++x) v += (*this)(x, pi(x));
        return v;
    }

    /// this += scale * other
    RewardTable& add_scaled(const RewardTable& other, double scale) {
        for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += scale * other.cells_[i];
        example_count += other.example_count;
        return *this;
    }

    RewardTable scaled(double scale) const {
        RewardTable out(num_contexts_, num_actions_);
        out.add_scaled(*this, scale);
        return out;
    }

private:
    std::size_t num_contexts_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> cells_;
};

}  // namespace nsb
