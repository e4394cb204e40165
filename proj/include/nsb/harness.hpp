#pragma once

// Experiment harness: config parsing, tuning presets, learner construction,
// seeded replicates, CSV output.
//
// Config grammar (one file, line oriented):
//
//   # comment                      ; also a comment
//   [experiment]                   section header
//   horizon = 40000                key = value
//   [algorithm.exp4s-tuned]        one section per algorithm instance; the
//   type = exp4s                   suffix is its label (type defaults to it)
//
// Lists are comma separated. Sections and keys are documented in README.md.
// Overrides of the form `section.key=value` replace or add single keys.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsb/environment.hpp"
#include "nsb/learner.hpp"
#include "nsb/metrics.hpp"
#include "nsb/types.hpp"

namespace nsb {

/// Config error with the line (0 when unknown) and field it refers to.
class ConfigError : public BanditError {
public:
    ConfigError(std::size_t line, std::string field, const std::string& message);
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

struct ConfigValue {
    std::string text;
    std::size_t line = 0;  // 0 for command-line overrides
};

/// Raw section -> key -> value map, in file order of sections.
struct RawConfig {
    std::vector<std::string> section_order;
    std::map<std::string, std::map<std::string, ConfigValue>> sections;
    std::map<std::string, std::size_t> section_lines;

    static RawConfig parse(const std::string& text);
    static RawConfig load(const std::filesystem::path& path);

    /// Applies `section.key=value`; the key is the part after the last dot.
    void apply_override(const std::string& assignment);
};

inline const std::vector<std::string>& registered_algorithms() {
    static const std::vector<std::string> names{"exp4s",         "ada-greedy", "ada-iltcb",
                                                "ada-bingreedy", "corral",     "uniform-baseline"};
    return names;
}

enum class PolicyClassKind { AllMaps, Random };

struct PolicySpec {
    PolicyClassKind kind = PolicyClassKind::AllMaps;
    std::size_t count = 0;
    std::uint64_t seed = 1;
};

struct AlgorithmSpec {
    std::string label;  // CSV `algo` column and seed tag
    std::string type;   // one of registered_algorithms()
    std::optional<std::string> preset;
    std::map<std::string, ConfigValue> params;
    std::size_t line = 0;
};

struct ExperimentConfig {
    std::size_t horizon = 1000;
    std::size_t replicates = 1;
    std::uint64_t seed = 1;
    std::filesystem::path out = "results";
    double threshold_scale = 1.0;
    EnvironmentSpec environment;
    PolicySpec policies;
    std::vector<AlgorithmSpec> algorithms;

    static ExperimentConfig from_raw(const RawConfig& raw);
};

/// Tuned (L, v) for a known non-stationarity measure.
struct PresetValues {
    double interval_length = 0.0;
    std::optional<double> variation;
};

/// cor1: L = T/S. cor3: L = min{(T/Delta)^{3/4}, T}, v = L^{-1/3}.
/// cor4: L = min{(T/Delta_bar)^{2/3}, T}, v = L^{-1/2}. A zero measure gives L = T.
/// Throws ConfigError for an unknown name.
PresetValues tuning_preset(const std::string& name, std::size_t horizon,
                           const NonstationarityMeasures& measures);

PolicyClass make_policy_class(const PolicySpec& spec, std::size_t num_contexts,
                              std::size_t num_actions);

/// Builds a learner for one replicate; `seed` feeds any internal randomness.
std::unique_ptr<Learner> make_learner(const AlgorithmSpec& spec, const ExperimentConfig& config,
                                      const PolicyClass& policies,
                                      const NonstationarityMeasures& measures, std::uint64_t seed);

inline constexpr const char* kCsvHeader =
    "t,algo,replicate,expected_regret,realized_regret,cum_expected,cum_realized,restarts,"
    "oracle_calls";
inline constexpr const char* kSummaryHeader =
    "algo,replicate,cum_expected,cum_realized,restarts,oracle_calls,wall_seconds";

/// Floats with 17 significant digits.
std::string format_double(double v);

struct ReplicateResult {
    std::string label;
    std::size_t replicate = 0;
    std::string csv;  // full per-round CSV including header
    double cum_expected = 0.0;
    double cum_realized = 0.0;
    std::size_t restarts = 0;
    std::size_t test_restarts = 0;
    std::uint64_t oracle_calls = 0;
    double wall_seconds = 0.0;
    std::vector<std::size_t> restart_rounds;       // every restart
    std::vector<std::size_t> test_restart_rounds;  // test-triggered only
};

/// Shared, read-only state for all replicates of one experiment.
struct ExperimentContext {
    Environment environment;
    PolicyClass policies;
    NonstationarityMeasures measures;

    static ExperimentContext build(const ExperimentConfig& config);
};

/// Runs one (algorithm, replicate) pair. The environment stream is seeded by
/// (seed, "environment", r), the learner's by (seed, label, r).
ReplicateResult run_replicate(const ExperimentConfig& config, const ExperimentContext& ctx,
                              const AlgorithmSpec& algo, std::size_t replicate,
                              RegretLedger* ledger_out = nullptr);

struct ExperimentSummary {
    std::vector<ReplicateResult> results;  // algorithm-major, replicate-minor
};

/// Runs every pair on up to `threads` workers; NONSTAT_BANDIT_THREADS, when
/// set, overrides `threads`. Writes CSVs when `write_files`.
ExperimentSummary run_experiment(const ExperimentConfig& config, std::size_t threads,
                                 bool write_files = true);

/// Worker count after applying the NONSTAT_BANDIT_THREADS override.
std::size_t resolve_threads(std::size_t requested);

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string csv_file_name(const std::string& label, std::size_t replicate);

}  // namespace nsb
