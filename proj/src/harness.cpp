#include "nsb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "nsb/ada_bingreedy.hpp"
#include "nsb/ada_greedy.hpp"
#include "nsb/ada_iltcb.hpp"
#include "nsb/corral.hpp"
#include "nsb/exp4s.hpp"
#include "nsb/rng.hpp"

namespace nsb {

namespace {

std::string config_message(std::size_t line, const std::string& field, const std::string& msg) {
    std::ostringstream out;
    out << "config error";
    if (line > 0) out << " at line " << line;
    if (!field.empty()) out << " (" << field << ")";
    out << ": " << msg;
    return out.str();
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::string strip_comment(const std::string& line) {
    const auto pos = line.find_first_of("#;");
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool valid_label(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    });
}

// Typed accessors over one section, all reporting line and field on failure.
class Section {
public:
    Section(std::string name, const std::map<std::string, ConfigValue>* values)
        : name_(std::move(name)), values_(values) {}

    bool has(const std::string& key) const { return values_ && values_->count(key) > 0; }

    const ConfigValue& raw(const std::string& key) const { return values_->at(key); }

    std::string field(const std::string& key) const { return name_ + "." + key; }

    std::string str(const std::string& key, const std::string& fallback) const {
        return has(key) ? raw(key).text : fallback;
    }

    std::uint64_t uint(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        return parse_uint(raw(key), field(key));
    }

    double real(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        return parse_real(raw(key).text, raw(key).line, field(key));
    }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string& t = raw(key).text;
        if (t == "true" || t == "1" || t == "yes") return true;
        if (t == "false" || t == "0" || t == "no") return false;
        throw ConfigError(raw(key).line, field(key), "expected a boolean, got '" + t + "'");
    }

    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        if (!has(key)) return out;
        for (const auto& item : split(raw(key).text, ", \t")) {
            out.push_back(parse_real(item, raw(key).line, field(key)));
        }
        return out;
    }

    std::vector<std::size_t> uints(const std::string& key) const {
        std::vector<std::size_t> out;
        if (!has(key)) return out;
        for (const auto& item : split(raw(key).text, ", \t")) {
            out.push_back(parse_uint(ConfigValue{item, raw(key).line}, field(key)));
        }
        return out;
    }

    /// `|`-separated groups of numbers.
    std::vector<std::vector<double>> groups(const std::string& key) const {
        std::vector<std::vector<double>> out;
        if (!has(key)) return out;
        for (const auto& group : split(raw(key).text, "|")) {
            std::vector<double> g;
            for (const auto& item : split(group, ", \t")) {
                g.push_back(parse_real(item, raw(key).line, field(key)));
            }
            out.push_back(std::move(g));
        }
        return out;
    }

    void reject_unknown(const std::set<std::string>& allowed) const {
        if (!values_) return;
        for (const auto& [key, value] : *values_) {
            if (!allowed.count(key)) throw ConfigError(value.line, field(key), "unknown key");
        }
    }

    static std::vector<std::string> split(const std::string& text, const char* seps) {
        std::vector<std::string> out;
        std::size_t pos = 0;
        while (pos < text.size()) {
            const auto next = text.find_first_of(seps, pos);
            const std::string item = trim(std::string_view(text).substr(
                pos, next == std::string::npos ? std::string::npos : next - pos));
            if (!item.empty()) out.push_back(item);
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        return out;
    }

    static std::uint64_t parse_uint(const ConfigValue& v, const std::string& field) {
        std::uint64_t out = 0;
        const char* end = v.text.data() + v.text.size();
        const auto res = std::from_chars(v.text.data(), end, out);
        if (res.ec != std::errc() || res.ptr != end) {
            throw ConfigError(v.line, field, "expected a non-negative integer, got '" + v.text + "'");
        }
        return out;
    }

    static double parse_real(const std::string& text, std::size_t line, const std::string& field) {
        double out = 0.0;
        const char* end = text.data() + text.size();
        const auto res = std::from_chars(text.data(), end, out);
        if (res.ec != std::errc() || res.ptr != end || !std::isfinite(out)) {
            throw ConfigError(line, field, "expected a number, got '" + text + "'");
        }
        return out;
    }

private:
    std::string name_;
    const std::map<std::string, ConfigValue>* values_;
};

Section section_of(const RawConfig& raw, const std::string& name) {
    auto it = raw.sections.find(name);
    return Section(name, it == raw.sections.end() ? nullptr : &it->second);
}

EnvironmentSpec parse_environment(const Section& s, std::size_t horizon) {
    s.reject_unknown({"kind", "contexts", "actions", "noise", "seed", "segments", "segment_starts",
                      "gap", "anchor_spacing", "drift_contexts", "context_probs", "custom_means",
                      "custom_contexts", "custom_starts"});
    EnvironmentSpec e;
    e.horizon = horizon;
    const std::string kind = s.str("kind", "switching");
    if (kind == "switching") {
        e.kind = EnvironmentKind::Switching;
    } else if (kind == "drifting") {
        e.kind = EnvironmentKind::Drifting;
    } else if (kind == "custom") {
        e.kind = EnvironmentKind::Custom;
    } else {
        throw ConfigError(s.raw("kind").line, s.field("kind"), "unknown environment kind '" + kind + "'");
    }
    e.num_contexts = s.uint("contexts", e.num_contexts);
    e.num_actions = s.uint("actions", e.num_actions);
    const std::string noise = s.str("noise", "bernoulli");
    if (noise == "bernoulli") {
        e.noise = NoiseKind::Bernoulli;
    } else if (noise == "deterministic") {
        e.noise = NoiseKind::Deterministic;
    } else {
        throw ConfigError(s.raw("noise").line, s.field("noise"), "unknown noise '" + noise + "'");
    }
    e.seed = s.uint("seed", e.seed);
    e.num_segments = s.uint("segments", e.num_segments);
    e.segment_starts = s.uints("segment_starts");
    e.gap = s.real("gap", e.gap);
    e.anchor_spacing = s.uint("anchor_spacing", e.anchor_spacing);
    e.drift_contexts = s.boolean("drift_contexts", e.drift_contexts);
    e.context_probs = s.reals("context_probs");
    if (e.num_contexts == 0 || e.num_actions == 0) {
        throw ConfigError(s.has("contexts") ? s.raw("contexts").line : 0, s.field("contexts"),
                          "contexts and actions must be >= 1");
    }

    if (e.kind == EnvironmentKind::Custom) {
        const auto means = s.groups("custom_means");
        const auto contexts = s.groups("custom_contexts");
        e.custom_starts = s.uints("custom_starts");
        if (means.empty() || means.size() != e.custom_starts.size()) {
            throw ConfigError(s.has("custom_means") ? s.raw("custom_means").line : 0,
                              s.field("custom_means"),
                              "custom environments need one mean matrix per entry of custom_starts");
        }
        if (!contexts.empty() && contexts.size() != means.size()) {
            throw ConfigError(s.raw("custom_contexts").line, s.field("custom_contexts"),
                              "custom_contexts must have one group per distribution");
        }
        for (std::size_t i = 0; i < means.size(); ++i) {
            RoundDistribution d;
            d.num_actions = e.num_actions;
            d.mean_rewards = means[i];
            if (!contexts.empty()) {
                d.context_probs = contexts[i];
            } else if (!e.context_probs.empty()) {
                d.context_probs = e.context_probs;
            } else {
                d.context_probs.assign(e.num_contexts, 1.0 / static_cast<double>(e.num_contexts));
            }
            e.custom_distributions.push_back(std::move(d));
        }
    }
    return e;
}

const std::map<std::string, std::set<std::string>>& algorithm_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"exp4s", {"interval_length"}},
        {"ada-greedy", {"interval_length", "variation", "delta", "threshold_scale"}},
        {"ada-iltcb",
         {"interval_length", "variation", "delta", "threshold_scale", "op_iteration_cap", "c1", "c2",
          "c3", "c4", "c5", "c6"}},
        {"ada-bingreedy", {"delta", "threshold_scale"}},
        {"corral", {"interval_length", "base", "base_interval_length"}},
        {"uniform-baseline", {}},
    };
    return keys;
}

}  // namespace

ConfigError::ConfigError(std::size_t line, std::string field, const std::string& message)
    : BanditError(ErrorCode::ConfigError, config_message(line, field, message)), line_(line),
      field_(std::move(field)) {}

RawConfig RawConfig::parse(const std::string& text) {
    RawConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string current;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') throw ConfigError(number, "", "unterminated section header");
            current = trim(std::string_view(body).substr(1, body.size() - 2));
            if (current.empty()) throw ConfigError(number, "", "empty section name");
            if (cfg.sections.count(current)) {
                throw ConfigError(number, current, "section appears twice");
            }
            cfg.sections[current];
            cfg.section_order.push_back(current);
            cfg.section_lines[current] = number;
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(number, "", "expected 'key = value'");
        if (current.empty()) throw ConfigError(number, "", "key outside of any section");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw ConfigError(number, current, "empty key");
        auto& sec = cfg.sections[current];
        if (sec.count(key)) throw ConfigError(number, current + "." + key, "key appears twice");
        sec[key] = ConfigValue{value, number};
    }
    return cfg;
}

RawConfig RawConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "", "cannot read config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void RawConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError(0, assignment, "override must look like section.key=value");
    }
    const std::string path = trim(std::string_view(assignment).substr(0, eq));
    const auto dot = path.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
        throw ConfigError(0, path, "override must look like section.key=value");
    }
    const std::string section = path.substr(0, dot);
    if (!sections.count(section)) section_order.push_back(section);
    sections[section][path.substr(dot + 1)] =
        ConfigValue{trim(std::string_view(assignment).substr(eq + 1)), 0};
}

ExperimentConfig ExperimentConfig::from_raw(const RawConfig& raw) {
    for (const auto& name : raw.section_order) {
        if (name != "experiment" && name != "environment" && name != "policies" &&
            name.rfind("algorithm.", 0) != 0) {
            const auto it = raw.section_lines.find(name);
            throw ConfigError(it == raw.section_lines.end() ? 0 : it->second, name, "unknown section");
        }
    }

    ExperimentConfig cfg;
    const Section exp = section_of(raw, "experiment");
    exp.reject_unknown({"horizon", "replicates", "seed", "out", "threshold_scale"});
    cfg.horizon = exp.uint("horizon", cfg.horizon);
    cfg.replicates = exp.uint("replicates", cfg.replicates);
    cfg.seed = exp.uint("seed", cfg.seed);
    cfg.out = exp.str("out", cfg.out.string());
    cfg.threshold_scale = exp.real("threshold_scale", cfg.threshold_scale);
    if (cfg.horizon < 1) {
        throw ConfigError(exp.raw("horizon").line, exp.field("horizon"), "horizon must be >= 1");
    }
    if (cfg.replicates < 1) {
        throw ConfigError(exp.raw("replicates").line, exp.field("replicates"), "replicates must be >= 1");
    }
    if (!(cfg.threshold_scale > 0.0 && cfg.threshold_scale <= 1.0)) {
        throw ConfigError(exp.has("threshold_scale") ? exp.raw("threshold_scale").line : 0,
                          exp.field("threshold_scale"), "threshold_scale must lie in (0, 1]");
    }

    cfg.environment = parse_environment(section_of(raw, "environment"), cfg.horizon);

    const Section pol = section_of(raw, "policies");
    pol.reject_unknown({"kind", "count", "seed"});
    const std::string kind = pol.str("kind", "all");
    if (kind == "all") {
        cfg.policies.kind = PolicyClassKind::AllMaps;
    } else if (kind == "random") {
        cfg.policies.kind = PolicyClassKind::Random;
        if (!pol.has("count")) throw ConfigError(0, pol.field("count"), "random policies need a count");
    } else {
        throw ConfigError(pol.raw("kind").line, pol.field("kind"), "unknown policy class '" + kind + "'");
    }
    cfg.policies.count = pol.uint("count", 0);
    cfg.policies.seed = pol.uint("seed", cfg.policies.seed);

    const auto& keys = algorithm_keys();
    for (const auto& name : raw.section_order) {
        if (name.rfind("algorithm.", 0) != 0) continue;
        AlgorithmSpec a;
        a.label = name.substr(std::string("algorithm.").size());
        const auto line_it = raw.section_lines.find(name);
        a.line = line_it == raw.section_lines.end() ? 0 : line_it->second;
        if (!valid_label(a.label)) {
            throw ConfigError(a.line, name, "algorithm labels may use letters, digits, '-', '_', '.'");
        }
        a.params = raw.sections.at(name);
        std::size_t type_line = a.line;
        if (auto it = a.params.find("type"); it != a.params.end()) {
            a.type = it->second.text;
            type_line = it->second.line;
            a.params.erase(it);
        } else {
            a.type = a.label;
        }
        if (!keys.count(a.type)) {
            throw ConfigError(type_line, name + ".type", "unknown algorithm '" + a.type + "'");
        }
        if (auto it = a.params.find("preset"); it != a.params.end()) {
            a.preset = it->second.text;
            if (*a.preset != "cor1" && *a.preset != "cor3" && *a.preset != "cor4") {
                throw ConfigError(it->second.line, name + ".preset", "unknown preset '" + *a.preset + "'");
            }
            a.params.erase(it);
        }
        for (const auto& [key, value] : a.params) {
            if (!keys.at(a.type).count(key)) {
                throw ConfigError(value.line, name + "." + key, "unknown key for " + a.type);
            }
        }
        cfg.algorithms.push_back(std::move(a));
    }
    if (cfg.algorithms.empty()) throw ConfigError(0, "algorithm", "no [algorithm.*] section");
    return cfg;
}

PresetValues tuning_preset(const std::string& name, std::size_t horizon,
                           const NonstationarityMeasures& measures) {
    const double t = static_cast<double>(horizon);
    PresetValues p;
    if (name == "cor1") {
        p.interval_length = t / static_cast<double>(std::max<std::size_t>(measures.segments, 1));
    } else if (name == "cor3") {
        p.interval_length = measures.delta > 0.0 ? std::min(std::pow(t / measures.delta, 0.75), t) : t;
        p.variation = std::pow(p.interval_length, -1.0 / 3.0);
    } else if (name == "cor4") {
        p.interval_length =
            measures.delta_bar > 0.0 ? std::min(std::pow(t / measures.delta_bar, 2.0 / 3.0), t) : t;
        p.variation = std::pow(p.interval_length, -0.5);
    } else {
        throw ConfigError(0, "preset", "unknown preset '" + name + "'");
    }
    return p;
}

PolicyClass make_policy_class(const PolicySpec& spec, std::size_t num_contexts,
                              std::size_t num_actions) {
    if (spec.kind == PolicyClassKind::AllMaps) return PolicyClass::all_maps(num_contexts, num_actions);
    return PolicyClass::random(spec.count, num_contexts, num_actions, spec.seed);
}

std::unique_ptr<Learner> make_learner(const AlgorithmSpec& spec, const ExperimentConfig& config,
                                      const PolicyClass& policies,
                                      const NonstationarityMeasures& measures, std::uint64_t seed) {
    const Section s("algorithm." + spec.label, &spec.params);
    std::optional<PresetValues> preset;
    if (spec.preset) preset = tuning_preset(*spec.preset, config.horizon, measures);
    const double l_default = preset ? preset->interval_length : static_cast<double>(config.horizon);
    const double v_default = preset && preset->variation ? *preset->variation : 0.0;
    const double scale = s.real("threshold_scale", config.threshold_scale);
    const std::size_t t = config.horizon;

    try {
        if (spec.type == "exp4s") {
            return std::make_unique<Exp4s>(policies, Exp4sConfig{s.real("interval_length", l_default)});
        }
        if (spec.type == "ada-greedy") {
            AdaGreedyConfig c;
            c.interval_length = s.real("interval_length", l_default);
            c.variation = s.real("variation", v_default);
            c.delta = s.real("delta", c.delta);
            c.threshold_scale = scale;
            return std::make_unique<AdaGreedy>(policies, t, c);
        }
        if (spec.type == "ada-iltcb") {
            AdaIltcbConfig c;
            c.interval_length = s.real("interval_length", l_default);
            c.variation = s.real("variation", v_default);
            c.delta = s.real("delta", c.delta);
            c.threshold_scale = scale;
            c.op_iteration_cap = s.uint("op_iteration_cap", 0);
            c.constants.c1 = s.real("c1", c.constants.c1);
            c.constants.c2 = s.real("c2", c.constants.c2);
            c.constants.c3 = s.real("c3", c.constants.c3);
            c.constants.c4 = s.real("c4", c.constants.c4);
            c.constants.c5 = s.real("c5", c.constants.c5);
            c.constants.c6 = s.real("c6", c.constants.c6);
            return std::make_unique<AdaIltcb>(policies, t, c);
        }
        if (spec.type == "ada-bingreedy") {
            AdaBinGreedyConfig c;
            c.delta = s.real("delta", c.delta);
            c.threshold_scale = scale;
            c.seed = mix64(seed);
            return std::make_unique<AdaBinGreedy>(policies, t, c);
        }
        if (spec.type == "corral") {
            CorralConfig c;
            c.interval_length = s.real("interval_length", l_default);
            c.base_interval_length = s.real("base_interval_length", 0.0);
            const std::string base = s.str("base", "exp4s");
            if (base == "exp4s") {
                c.base = CorralBaseKind::Exp4s;
            } else if (base == "fixed-policy") {
                c.base = CorralBaseKind::FixedPolicy;
            } else {
                throw ConfigError(s.raw("base").line, s.field("base"), "unknown base learner '" + base + "'");
            }
            return std::make_unique<Corral>(policies, t, c);
        }
        if (spec.type == "uniform-baseline") return std::make_unique<UniformLearner>(policies.num_actions());
    } catch (const ConfigError&) {
        throw;
    } catch (const BanditError& e) {
        if (e.code() == ErrorCode::ConfigError) throw ConfigError(spec.line, "algorithm." + spec.label, e.what());
        throw;
    }
    throw ConfigError(spec.line, "algorithm." + spec.label, "unknown algorithm '" + spec.type + "'");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ExperimentContext ExperimentContext::build(const ExperimentConfig& config) {
    Environment env = [&] {
        try {
            return make_environment(config.environment);
        } catch (const BanditError& e) {
            throw ConfigError(0, "environment", e.what());
        }
    }();
    PolicyClass policies = [&] {
        try {
            return make_policy_class(config.policies, config.environment.num_contexts,
                                     config.environment.num_actions);
        } catch (const BanditError& e) {
            throw ConfigError(0, "policies", e.what());
        }
    }();
    NonstationarityMeasures measures = env.measures(policies);
    return ExperimentContext{std::move(env), std::move(policies), measures};
}

std::string csv_file_name(const std::string& label, std::size_t replicate) {
    return label + "_r" + std::to_string(replicate) + ".csv";
}

ReplicateResult run_replicate(const ExperimentConfig& config, const ExperimentContext& ctx,
                              const AlgorithmSpec& algo, std::size_t replicate,
                              RegretLedger* ledger_out) {
    const auto start = std::chrono::steady_clock::now();
    Rng env_rng(derive_seed(config.seed, "environment", replicate));
    Rng algo_rng(derive_seed(config.seed, algo.label, replicate));
    auto learner = make_learner(algo, config, ctx.policies, ctx.measures, algo_rng());

    RegretLedger local(ctx.environment, ctx.policies);
    RegretLedger& ledger = ledger_out ? *ledger_out : local;

    ReplicateResult res;
    res.label = algo.label;
    res.replicate = replicate;
    std::string& csv = res.csv;
    csv.reserve(96 * (config.horizon + 1));
    csv += kCsvHeader;
    csv += '\n';
    const std::string prefix = "," + algo.label + "," + std::to_string(replicate) + ",";

    for (std::size_t t = 1; t <= config.horizon; ++t) {
        const auto [x, rewards] = ctx.environment.sample_round(t, env_rng);
        Decision d = learner->decide(x, algo_rng);
        const double r = rewards[d.action];
        ledger.record_round(t, x, d.probs, d.action, rewards);
        const RestartDecision rd =
            learner->observe(RoundRecord{t, x, d.action, std::move(d.probs), r});
        if (rd != RestartDecision::None) {
            res.restart_rounds.push_back(t);
            if (rd == RestartDecision::TestTriggered) {
                ++res.test_restarts;
                res.test_restart_rounds.push_back(t);
            }
        }
        const LedgerRow& row = ledger.rows().back();
        csv += std::to_string(t);
        csv += prefix;
        csv += format_double(row.expected_regret);
        csv += ',';
        csv += format_double(row.realized_regret);
        csv += ',';
        csv += format_double(row.cum_expected);
        csv += ',';
        csv += format_double(row.cum_realized);
        csv += ',';
        csv += std::to_string(learner->restarts());
        csv += ',';
        csv += std::to_string(learner->oracle_calls());
        csv += '\n';
    }
    res.cum_expected = ledger.cum_expected();
    res.cum_realized = ledger.cum_realized();
    res.restarts = learner->restarts();
    res.oracle_calls = learner->oracle_calls();
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

std::size_t resolve_threads(std::size_t requested) {
    if (const char* env = std::getenv("NONSTAT_BANDIT_THREADS")) {
        std::size_t v = 0;
        const char* end = env + std::char_traits<char>::length(env);
        const auto res = std::from_chars(env, end, v);
        if (res.ec == std::errc() && res.ptr == end && v > 0) return v;
        throw ConfigError(0, "NONSTAT_BANDIT_THREADS", "expected a positive integer");
    }
    return std::max<std::size_t>(requested, 1);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw BanditError(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw BanditError(ErrorCode::InvalidArgument, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

ExperimentSummary run_experiment(const ExperimentConfig& config, std::size_t threads,
                                 bool write_files) {
    const ExperimentContext ctx = ExperimentContext::build(config);
    // Fail on bad algorithm parameters before any work starts.
    for (const auto& a : config.algorithms) make_learner(a, config, ctx.policies, ctx.measures, 0);
    if (write_files) std::filesystem::create_directories(config.out);

    const std::size_t jobs = config.algorithms.size() * config.replicates;
    ExperimentSummary summary;
    summary.results.resize(jobs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto worker = [&] {
        for (;;) {
            const std::size_t job = next.fetch_add(1);
            if (job >= jobs) return;
            try {
                const auto& algo = config.algorithms[job / config.replicates];
                ReplicateResult res = run_replicate(config, ctx, algo, job % config.replicates);
                if (write_files) {
                    write_file_atomic(config.out / csv_file_name(res.label, res.replicate), res.csv);
                    res.csv.clear();
                    res.csv.shrink_to_fit();
                }
                summary.results[job] = std::move(res);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next.store(jobs);
                return;
            }
        }
    };

    const std::size_t n = std::min(resolve_threads(threads), std::max<std::size_t>(jobs, 1));
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    if (write_files) {
        std::string out = kSummaryHeader;
        out += '\n';
        for (const auto& r : summary.results) {
            out += r.label + "," + std::to_string(r.replicate) + "," + format_double(r.cum_expected) +
                   "," + format_double(r.cum_realized) + "," + std::to_string(r.restarts) + "," +
                   std::to_string(r.oracle_calls) + "," + format_double(r.wall_seconds) + "\n";
        }
        write_file_atomic(config.out / "summary.csv", out);
    }
    return summary;
}

}  // namespace nsb
