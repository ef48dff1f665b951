#pragma once

#include "emergence/model.hpp"
#include "emergence/noise.hpp"
#include "emergence/systems.hpp"
#include "emergence/theory.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace emergence {

using Json = nlohmann::ordered_json;

/// Desk-scale defaults used when a config leaves a field out.
inline constexpr Index kDefaultAgents = 10;
inline constexpr Index kDefaultDim = 3;
inline constexpr std::uint64_t kDefaultTrials = 1000;
inline constexpr double kDefaultHorizonFactor = 4.0;

/// Initial state either listed explicitly or drawn uniformly from boxes.
struct InitialSpec {
    enum class Kind { RandomBox, Explicit };
    Kind kind = Kind::RandomBox;
    std::uint64_t seed = 1;
    double x_box = 1.0;
    double y_box = 0.1;
    Matrix x;
    Matrix y;
};

/// How a noise spec is clipped: not at all, at the theorem tolerance of the
/// scenario (H0, H1 or H2), or at a fixed factor.
struct ClipSpec {
    enum class Mode { None, Tolerance, Factor };
    Mode mode = Mode::None;
    double factor = 0.0;
};

struct NoiseConfig {
    NoiseSpec law;
    ClipSpec clip;
};

struct HorizonSpec {
    double factor = kDefaultHorizonFactor;
    std::optional<std::uint64_t> steps;  // discrete override
    std::optional<double> time;          // continuous override
    double dt = 0.01;
};

/// Parsed scenario file. Every field has a default; see README for the schema.
struct ScenarioConfig {
    SystemVariant variant = SystemVariant::DiscreteI;
    std::string preset;
    Index k = kDefaultAgents;
    Index d = kDefaultDim;
    Index d_x = kDefaultDim;
    InnerProduct inner = InnerProduct::Pairwise;
    InitialSpec initial;
    SystemParams params;
    NoiseConfig noise_x;
    NoiseConfig noise_y;
    double refresh = 0.01;
    double ou_rate = 0.0;
    double amplitude = 1.0;
    std::uint64_t path_bound_paths = 10'000;
    /// Absolute targets; the *_rel fields scale ||x(0)||, ||y(0)|| instead.
    Targets targets;
    std::optional<double> mu_rel;
    std::optional<double> nu_rel;
    std::optional<Theorem> theorem;
    HorizonSpec horizon;
    Integrator integrator = Integrator::Euler;
    std::uint64_t trials = kDefaultTrials;
    std::uint64_t seed = 42;
    unsigned threads = 1;
    /// Fields that fell back to the desk-scale defaults.
    std::vector<std::string> defaulted;
    /// The document the config was parsed from.
    Json source;
};

/// Parses and validates a scenario. Throws Error(Configuration) whose message
/// starts with the offending field path; unknown keys are rejected.
ScenarioConfig parse_config(const Json& doc);
ScenarioConfig parse_config_text(const std::string& text);

/// A config wired into concrete operators, noises and constants.
struct Scenario {
    ScenarioConfig config;
    SystemParams params;
    SystemState initial;
    Targets targets;
    EmergenceConstants constants;
    /// Operator hypotheses at the initial state.
    HypothesisReport operator_report;
    bool certified = false;
    NoiseSpec noise_x;
    NoiseSpec noise_y;
    PathNoiseSpec path_x;
    PathNoiseSpec path_y;
    BoundReport bound;
    RunOptions run;

    /// Operator hypotheses and theorem hypotheses both hold.
    bool applicable() const { return certified && bound.applicable; }
};

Scenario build_scenario(const ScenarioConfig& config);

struct TrialResult {
    std::uint64_t index = 0;
    std::uint64_t seed = 0;
    EmergenceTimes times;
    bool reached_x = false;
    bool reached_y = false;
    /// The theorem's event (emergence within its bound) occurred.
    bool event = false;
    /// Every noise draw up to the bound stayed within the clipping event.
    bool within_clipping_event = false;
    bool envelopes_checked = false;
    std::uint64_t envelope_violations = 0;
    double final_norm_x = 0.0;
    double final_norm_y = 0.0;
    /// Steps at which J exceeded its declared growth bound.
    std::uint64_t j_violations = 0;
    bool blew_up = false;
    std::string diagnostic;
};

/// Runs trial `index` to the scenario horizon. Deterministic per
/// (master seed, index). When `trace` is given it receives the full trace.
TrialResult run_trial(const Scenario& scenario, std::uint64_t index, Trace* trace = nullptr);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for `successes` out of `n` at normal quantile z.
Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z = 1.959963984540054);

enum class Verdict { Respected, Violated, Inapplicable };

std::string to_string(Verdict v);

struct MonteCarloSummary {
    std::uint64_t n = 0;
    std::uint64_t successes = 0;
    double empirical = 0.0;
    Interval wilson;
    double bound = 0.0;
    BoundReport bound_report;
    Verdict verdict = Verdict::Inapplicable;
    std::uint64_t clipping_event_count = 0;
    std::uint64_t envelope_violations = 0;
    std::uint64_t blow_ups = 0;
    std::uint64_t j_violations = 0;
};

/// N independent trials compared against the theorem lower bound. Trials may
/// run on several threads; the reduction is in index order.
MonteCarloSummary monte_carlo(const Scenario& scenario, std::uint64_t n, unsigned threads = 1);

/// Cartesian product of `grid` (dotted config path -> list of values) over
/// `base`, one Monte Carlo summary per point, as CSV.
std::string sweep(const Json& base, const Json& grid, std::optional<std::uint64_t> n = std::nullopt);

Json to_json(const EmergenceConstants& k);
Json to_json(const HypothesisReport& report);
Json to_json(const BoundReport& bound);
Json to_json(const TrialResult& trial);
Json to_json(const TrajectoryReport& report);
Json to_json(const MonteCarloSummary& summary, const Scenario& scenario);

/// Constants plus the scenario context (certification, bound, defaults).
Json constants_document(const Scenario& scenario);
/// Operator and theorem hypotheses with their slacks.
Json check_document(const Scenario& scenario);

}  // namespace emergence
