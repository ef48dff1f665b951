#pragma once

#include "emergence/model.hpp"
#include "emergence/operators.hpp"
#include "emergence/systems.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace emergence {

/// Q(delta) = max(1, 1/delta).
double q_of_delta(double delta);

/// Unique positive zero of M(z) = z^s - c1 z^q - c2 for s > q > 0 and
/// c1, c2 > 0. Safeguarded Newton on the bracket [0, positive_root_bound].
double positive_root(double s, double q, double c1, double c2);

/// max{(2 c1)^(1/(s-q)), (2 c2)^(1/s)}, an upper bound of the zero.
double positive_root_bound(double s, double q, double c1, double c2);

/// Which of the three exponent regimes the parameters fall in.
/// Discrete type I compares beta + gamma with 1, continuous 2 beta + gamma.
enum class Regime { Sub, Critical, Super };

std::string to_string(Regime r);

struct Targets {
    std::optional<double> mu;
    std::optional<double> nu;
};

/// Initial-state constants of one system. Fields that do not apply to the
/// variant stay NaN; time bounds that do not apply are empty.
struct EmergenceConstants {
    static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    SystemVariant variant = SystemVariant::DiscreteI;
    double norm_x0 = nan;
    double norm_y0 = nan;

    // type I
    Regime regime = Regime::Sub;
    bool case_holds = false;  // the regime's extra condition
    double q = nan;           // Q(delta), discrete only
    double a = nan;
    double b = nan;
    double alpha = nan;  // continuous only
    double u0 = nan;     // bound on 1 + ||x|| (discrete) or 1 + ||x||^2 (continuous)
    double b0 = nan;     // U0 - 1
    double b1 = nan;     // continuous only
    double tol0 = nan;   // noise tolerance H0
    double h_max = nan;  // discrete admissible step

    // type II
    double tol1 = nan;
    double tol2 = nan;

    std::optional<double> t0;
    std::optional<double> t1;
    std::optional<double> t2;
    std::optional<double> t3;

    /// Why a target or hypothesis makes a time bound inapplicable.
    std::vector<std::string> notes;
    /// Theorem hypotheses evaluated at the initial state.
    HypothesisReport hypotheses;

    bool applicable() const { return hypotheses.all_pass(); }
};

EmergenceConstants constants_ID(const SystemState& initial, const SystemParams& params, const Targets& targets);
EmergenceConstants constants_IID(const SystemState& initial, const SystemParams& params, const Targets& targets);
EmergenceConstants constants_IC(const SystemState& initial, const SystemParams& params, const Targets& targets);
EmergenceConstants constants_IIC(const SystemState& initial, const SystemParams& params, const Targets& targets);

/// Dispatches on params.variant.
EmergenceConstants compute_constants(const SystemState& initial, const SystemParams& params, const Targets& targets);

struct CaseCheck {
    Regime regime = Regime::Sub;
    HypothesisReport report;
    bool pass() const { return report.all_pass(); }
};

/// Regime of beta + gamma and the matching hypothesis of the discrete type-I
/// theorem, including the step-size condition.
CaseCheck check_hypotheses_thm1(const SystemState& initial, const SystemParams& params);

/// Same for the continuous type-I theorem (no step condition).
CaseCheck check_hypotheses_thm3(const SystemState& initial, const SystemParams& params);

enum class Theorem {
    DiscreteI,        // nu-emergence within T0 iterations
    DiscreteIJoint,   // plus the position Cauchy tail, within T0 v T1
    DiscreteII,       // both emergences within T2 v T3 iterations
    ContinuousI,      // nu-emergence before T0
    ContinuousIJoint, // plus the position Cauchy tail, before T0 v T1
    ContinuousII,     // either emergence before T2 v T3
    Corollary,        // type-II continuous with one noise identically zero
};

std::string to_string(Theorem t);

/// Theorem whose probability statement matches a variant.
Theorem default_theorem(SystemVariant v);

/// Norm CDFs of the noises that enter a bound.
struct NoiseCdfs {
    std::function<double(double)> f;    // type I discrete: F
    std::function<double(double)> f1;   // type II discrete: F1 (noise on x)
    std::function<double(double)> f2;   // type II discrete: F2 (noise on y)
    std::function<double(double, double)> path;   // type I continuous: F(x, T)
    std::function<double(double, double)> path1;  // type II continuous
    std::function<double(double, double)> path2;
    bool noise_x_zero = false;
    bool noise_y_zero = false;
};

struct BoundReport {
    Theorem theorem = Theorem::DiscreteI;
    bool applicable = false;
    double probability = 0.0;
    /// Iteration count (discrete, rounded up) or time (continuous).
    double horizon = 0.0;
    /// The real-valued time bound before rounding.
    double raw_horizon = 0.0;
    /// Noise norm thresholds of the clipping event, e.g. H0 * nu.
    double threshold_x = 0.0;
    double threshold_y = 0.0;
    std::vector<std::string> notes;
};

/// Lower bound on the probability of the theorem's event. Type-II
/// continuous bounds switch to the corollary when one noise is zero.
BoundReport probability_bound(Theorem theorem, const EmergenceConstants& constants, const NoiseCdfs& cdfs,
                              const Targets& targets);

/// Rounds a real iteration bound up to an integer.
std::uint64_t iterations_for(double t);

struct EnvelopeCheck {
    EnvelopeCheck() = default;
    explicit EnvelopeCheck(std::string n) : name(std::move(n)) {}

    std::string name;
    std::uint64_t evaluated = 0;
    std::uint64_t violations = 0;
    std::optional<std::uint64_t> first_violation_step;
    double worst_slack = std::numeric_limits<double>::infinity();

    void observe(std::uint64_t step, double lhs, double rhs);
};

struct TrajectoryReport {
    bool skipped = false;
    std::string notice;
    std::vector<EnvelopeCheck> checks;

    bool all_hold() const;
    const EnvelopeCheck* find(const std::string& name) const;
};

/// Checks every proposition inequality that applies to the trace's variant
/// at every recorded step. The trace must come from noise clipped at (or
/// below) the relevant tolerance, or from zero noise; otherwise the checks
/// are skipped with a notice.
TrajectoryReport verify_trajectory(const Trace& trace, const EmergenceConstants& constants,
                                   const SystemParams& params, const Targets& targets = {});

}  // namespace emergence
