#include "nsb/oracle.hpp"

#include "nsb/estimators.hpp"

namespace nsb {

AmoResult amo(std::span<const WeightedExample> dataset, const PolicyClass& policies) {
    AmoResult best;
    for (PolicyIndex i = 0; i < policies.size(); ++i) {
        const Policy& pi = policies[i];
        double v = 0.0;
        for (const auto& ex : dataset) v += ex.reward[pi(ex.context)];
        if (i == 0 || v > best.value) best = {i, v};
    }
    return best;
}

AmoResult amo(const RewardTable& table, const PolicyClass& policies) {
    AmoResult best;
    for (PolicyIndex i = 0; i < policies.size(); ++i) {
        const double v = table.value(policies[i]);
        if (i == 0 || v > best.value) best = {i, v};
    }
    return best;
}

AmoResult ArgmaxOracle::operator()(std::span<const WeightedExample> dataset) {
    ++stats_.calls;
    stats_.examples_seen += dataset.size();
    return amo(dataset, *policies_);
}

AmoResult ArgmaxOracle::operator()(const RewardTable& table) {
    ++stats_.calls;
    stats_.examples_seen += table.example_count;
    return amo(table, *policies_);
}

namespace {

void require_non_empty(std::span<const RoundRecord> block, std::span<const RoundRecord> recent) {
    if (block.empty() || recent.empty()) {
        throw BanditError(ErrorCode::EmptyInterval, "test intervals must be non-empty");
    }
}

void append_iw(std::vector<WeightedExample>& out, std::span<const RoundRecord> rounds,
               double scale, std::size_t num_actions) {
    for (const auto& rec : rounds) {
        std::vector<double> r(num_actions, 0.0);
        r[rec.action] = scale * iw_estimate(rec, rec.action);
        out.push_back({rec.context, std::move(r)});
    }
}

void append_inverse(std::vector<WeightedExample>& out, std::span<const RoundRecord> rounds,
                    double scale, std::size_t num_actions) {
    for (const auto& rec : rounds) {
        std::vector<double> r(num_actions, 0.0);
        for (Action a = 0; a < num_actions; ++a) {
            const double p = rec.probs[a];
            if (!(p > 0.0)) {
                throw BanditError(ErrorCode::DegenerateWeights, "zero smoothed probability");
            }
            r[a] = scale / p;
        }
        out.push_back({rec.context, std::move(r)});
    }
}

double interval_max(std::span<const RoundRecord> rounds, ArgmaxOracle& oracle) {
    const std::size_t k = oracle.policies().num_actions();
    std::vector<WeightedExample> data;
    append_iw(data, rounds, 1.0 / static_cast<double>(rounds.size()), k);
    return oracle(data).value;
}

}  // namespace

std::vector<WeightedExample> build_regret_test_dataset(std::span<const RoundRecord> block,
                                                       std::span<const RoundRecord> recent,
                                                       double c1, RegretTestDirection direction,
                                                       std::size_t num_actions) {
    require_non_empty(block, recent);
    if (!(c1 > 0.0)) throw BanditError(ErrorCode::InvalidArgument, "c1 must be positive");
    const auto first = direction == RegretTestDirection::BlockMinusRecent ? block : recent;
    const auto second = direction == RegretTestDirection::BlockMinusRecent ? recent : block;
    std::vector<WeightedExample> out;
    out.reserve(first.size() + second.size());
    append_iw(out, first, -1.0 / static_cast<double>(first.size()), num_actions);
    append_iw(out, second, c1 / static_cast<double>(second.size()), num_actions);
    return out;
}

std::vector<WeightedExample> build_variance_test_dataset(std::span<const RoundRecord> block,
                                                         std::span<const RoundRecord> recent,
                                                         double c4, std::size_t num_actions) {
    require_non_empty(block, recent);
    std::vector<WeightedExample> out;
    out.reserve(block.size() + recent.size());
    append_inverse(out, recent, 1.0 / static_cast<double>(recent.size()), num_actions);
    append_inverse(out, block, -c4 / static_cast<double>(block.size()), num_actions);
    return out;
}

double evaluate_regret_test(std::span<const RoundRecord> block,
                            std::span<const RoundRecord> recent, double c1,
                            RegretTestDirection direction, ArgmaxOracle& oracle) {
    const auto data = build_regret_test_dataset(block, recent, c1, direction,
                                                oracle.policies().num_actions());
    const bool block_first = direction == RegretTestDirection::BlockMinusRecent;
    const double max_first = interval_max(block_first ? block : recent, oracle);
    const double max_second = interval_max(block_first ? recent : block, oracle);
    return oracle(data).value + max_first - c1 * max_second;
}

double evaluate_variance_test(std::span<const RoundRecord> block,
                              std::span<const RoundRecord> recent, double c4,
                              ArgmaxOracle& oracle) {
    const auto data =
        build_variance_test_dataset(block, recent, c4, oracle.policies().num_actions());
    return oracle(data).value;
}

}  // namespace nsb
