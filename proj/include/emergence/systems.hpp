#pragma once

#include "emergence/model.hpp"
#include "emergence/noise.hpp"
#include "emergence/quotient.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace emergence {

/// State of any of the four systems. Both features are kept as canonical
/// quotient representatives.
struct SystemState {
    QuotientVector x;
    QuotientVector y;
    /// Common iteration counter (the type-II discrete clocks share it).
    std::uint64_t step = 0;
    double time = 0.0;
    /// Agent mean of the unprojected y, carried unchanged as side data.
    Eigen::RowVectorXd y_mean;
};

struct JEvaluation {
    QuotientVector value;
    double norm = 0.0;
    double bound = 0.0;
    bool within_bound = true;
};

/// Evaluates J(x, y) and its declared growth bound (discrete or continuous form).
JEvaluation j_operator(const QuotientVector& x, const QuotientVector& y, const JOperator& j, bool continuous,
                       InnerProduct inner = InnerProduct::Pairwise);

struct Stepped {
    SystemState state;
    bool j_within_bound = true;
};

/// x <- x + h J(x, y);  y <- (I - h L_x) y + h H.
Stepped step_ID(const SystemState& state, const SystemParams& params, const QuotientVector& noise);

/// x <- S1(y) x + h1 H1;  y <- S2(x) y + h2 H2, both from the pre-step state.
Stepped step_IID(const SystemState& state, const SystemParams& params, const QuotientVector& noise_x,
                 const QuotientVector& noise_y);

struct TraceRow {
    std::uint64_t step = 0;
    double time = 0.0;
    double time_y = 0.0;  // type-II discrete: physical time on the y clock
    double norm_x = 0.0;
    double norm_y = 0.0;
    /// Coercivity of the coupling acting on y (phi_x or xi_x) and, for the
    /// type-II systems, of the coupling acting on x (eta_y).
    double coercivity_y = 0.0;
    double coercivity_x = 0.0;
    /// Noise applied in the step leaving this row (0 on the last row).
    double noise_norm_x = 0.0;
    double noise_norm_y = 0.0;
    bool clipped = false;
};

struct Trace {
    SystemVariant variant = SystemVariant::DiscreteI;
    InnerProduct inner = InnerProduct::Pairwise;
    std::vector<TraceRow> rows;
    /// Positions at every row when RunOptions::store_states is set.
    std::vector<QuotientVector> xs;
    /// Clip factors of the noise laws that produced the trace, if any.
    std::optional<double> clip_x;
    std::optional<double> clip_y;
    std::uint64_t j_violations = 0;
    bool blew_up = false;
    std::string diagnostic;

    bool produced_under_clipping() const;
    void write_csv(std::ostream& out) const;
};

enum class Integrator { Euler, RK4 };

struct RunOptions {
    /// Discrete: iterations. Continuous: derived from max_time / dt.
    std::uint64_t max_steps = 1000;
    double dt = 0.01;
    double max_time = 10.0;
    Integrator integrator = Integrator::Euler;
    bool store_states = false;
    /// Stop as soon as every requested target has been reached.
    std::optional<double> mu;
    std::optional<double> nu;
    bool stop_at_emergence = false;
    /// Type-II continuous: stop when either target is reached.
    bool stop_at_first = false;
};

Trace simulate_ID(const SystemState& initial, const SystemParams& params, const NoiseSpec& noise,
                  const SeedStream& stream, const RunOptions& options);

Trace simulate_IID(const SystemState& initial, const SystemParams& params, const NoiseSpec& noise_x,
                   const NoiseSpec& noise_y, const SeedStream& stream_x, const SeedStream& stream_y,
                   const RunOptions& options);

Trace integrate_IC(const SystemState& initial, const SystemParams& params, const PathNoiseSpec& noise,
                   const SeedStream& stream, const RunOptions& options);

Trace integrate_IIC(const SystemState& initial, const SystemParams& params, const PathNoiseSpec& noise_x,
                    const PathNoiseSpec& noise_y, const SeedStream& stream_x, const SeedStream& stream_y,
                    const RunOptions& options);

struct EmergenceTimes {
    std::optional<std::uint64_t> step_x;
    std::optional<std::uint64_t> step_y;
    std::optional<double> time_x;
    std::optional<double> time_y;
};

/// First row with ||x|| <= mu and first row with ||y|| <= nu.
EmergenceTimes detect_emergence(const Trace& trace, std::optional<double> mu, std::optional<double> nu);

/// Norm above which a run counts as blown up.
inline constexpr double kBlowUpNorm = 1e12;

}  // namespace emergence
