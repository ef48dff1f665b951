#include "emergence/systems.hpp"

#include "emergence/error.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace emergence {

namespace {

void require_shapes(const SystemState& s) {
    if (s.x.agents() < 2 || s.y.agents() < 2) domain_error("system state: need at least two agents");
    if (s.x.agents() != s.y.agents()) domain_error("system state: x and y disagree on the agent count");
}

void require_finite_state(const Matrix& x, const Matrix& y, const char* who) {
    if (!x.allFinite() || !y.allFinite()) {
        throw Error(ErrorKind::Numerical, std::string(who) + ": non-finite state");
    }
}

CouplingMatrix coupling_laplacian(const QuotientVector& positions, const KernelSpec& kernel) {
    return laplacian(adjacency(positions.values(), kernel));
}

double fiedler(const QuotientVector& positions, const KernelSpec& kernel) {
    return coercivity(coupling_laplacian(positions, kernel)).value;
}

bool blown_up(double nx, double ny) {
    return !std::isfinite(nx) || !std::isfinite(ny) || nx > kBlowUpNorm || ny > kBlowUpNorm;
}

struct TargetWatch {
    std::optional<double> mu;
    std::optional<double> nu;
    bool reached_x = false;
    bool reached_y = false;

    void observe(double nx, double ny) {
        if (mu && nx <= *mu) reached_x = true;
        if (nu && ny <= *nu) reached_y = true;
    }
    bool all_reached() const {
        if (!mu && !nu) return false;
        return (!mu || reached_x) && (!nu || reached_y);
    }
    bool any_reached() const { return reached_x || reached_y; }
};

bool should_stop(const TargetWatch& watch, const RunOptions& options) {
    if (!options.stop_at_emergence) return false;
    return options.stop_at_first ? watch.any_reached() : watch.all_reached();
}

std::uint64_t continuous_steps(const RunOptions& options) {
    if (!(options.dt > 0.0)) domain_error("integrate: dt must be positive");
    if (!(options.max_time >= 0.0)) domain_error("integrate: T must be >= 0");
    return static_cast<std::uint64_t>(std::llround(std::ceil(options.max_time / options.dt - 1e-9)));
}

void write_number(std::ostream& out, double v) {
    out << std::setprecision(17) << v;
}

// Zero noise satisfies every clipping requirement.
std::optional<double> clip_of(const NoiseSpec& n) {
    if (n.is_zero()) return 0.0;
    return n.clip_factor;
}

std::optional<double> clip_of(const PathNoiseSpec& n) {
    if (n.is_zero()) return 0.0;
    return n.base.clip_factor;
}

}  // namespace

JEvaluation j_operator(const QuotientVector& x, const QuotientVector& y, const JOperator& j, bool continuous,
                       InnerProduct inner) {
    JEvaluation out;
    switch (j.kind) {
    case JOperator::Kind::IdentityInY:
    case JOperator::Kind::Scaled:
        if (x.agents() != y.agents() || x.dim() != y.dim()) {
            domain_error("j_operator: identity-in-y needs x and y of the same shape");
        }
        out.value = project_to_quotient(j.factor * y.values());
        break;
    case JOperator::Kind::Custom:
        if (!j.custom) domain_error("j_operator: custom operator is empty");
        out.value = project_to_quotient(j.custom(x, y));
        if (out.value.agents() != x.agents() || out.value.dim() != x.dim()) {
            domain_error("j_operator: custom operator returned the wrong shape");
        }
        break;
    }
    const double nx = quotient_norm(x, inner);
    const double ny = quotient_norm(y, inner);
    out.norm = quotient_norm(out.value, inner);
    out.bound = continuous ? j.C * std::pow(1.0 + nx * nx, 0.5 * j.gamma) * std::pow(ny, j.delta)
                           : j.C * std::pow(1.0 + nx, j.gamma) * std::pow(ny, j.delta);
    out.within_bound = out.norm <= out.bound * (1.0 + 1e-12) + 1e-300;
    return out;
}

Stepped step_ID(const SystemState& state, const SystemParams& params, const QuotientVector& noise) {
    require_shapes(state);
    const auto& p = params.single;
    const double h = p.step;
    const JEvaluation j = j_operator(state.x, state.y, p.j, false, params.inner);
    const CouplingMatrix s = s_operator(coupling_laplacian(state.x, p.kernel), h);

    Matrix x = state.x.values() + h * j.value.values();
    Matrix y = s.m * state.y.values() + h * noise.values();
    require_finite_state(x, y, "step_ID");

    Stepped out;
    out.state.x = project_to_quotient(x);
    out.state.y = project_to_quotient(y);
    out.state.step = state.step + 1;
    out.state.time = state.time + h;
    out.state.y_mean = state.y_mean;
    out.j_within_bound = j.within_bound;
    return out;
}

Stepped step_IID(const SystemState& state, const SystemParams& params, const QuotientVector& noise_x,
                 const QuotientVector& noise_y) {
    require_shapes(state);
    const auto& p = params.coupled;
    const CouplingMatrix s1 = s_operator(coupling_laplacian(state.y, p.kernel_y), p.step1);
    const CouplingMatrix s2 = s_operator(coupling_laplacian(state.x, p.kernel_x), p.step2);

    Matrix x = s1.m * state.x.values() + p.step1 * noise_x.values();
    Matrix y = s2.m * state.y.values() + p.step2 * noise_y.values();
    require_finite_state(x, y, "step_IID");

    Stepped out;
    out.state.x = project_to_quotient(x);
    out.state.y = project_to_quotient(y);
    out.state.step = state.step + 1;
    out.state.time = state.time + p.step1;
    out.state.y_mean = state.y_mean;
    return out;
}

bool Trace::produced_under_clipping() const {
    if (is_coupled(variant)) return clip_x.has_value() && clip_y.has_value();
    return clip_y.has_value();
}

void Trace::write_csv(std::ostream& out) const {
    const bool coupled = is_coupled(variant);
    if (coupled) {
        out << "t,time,";
        if (variant == SystemVariant::DiscreteII) out << "time_y,";
        out << "norm_x,norm_y,xi,eta,noise_norm_x,noise_norm_y,clipped_flag\n";
    } else {
        out << "t,time,norm_x,norm_y,phi,noise_norm,clipped_flag\n";
    }
    for (const auto& r : rows) {
        out << r.step << ',';
        write_number(out, r.time);
        out << ',';
        if (variant == SystemVariant::DiscreteII) {
            write_number(out, r.time_y);
            out << ',';
        }
        write_number(out, r.norm_x);
        out << ',';
        write_number(out, r.norm_y);
        out << ',';
        write_number(out, r.coercivity_y);
        out << ',';
        if (coupled) {
            write_number(out, r.coercivity_x);
            out << ',';
            write_number(out, r.noise_norm_x);
            out << ',';
        }
        write_number(out, r.noise_norm_y);
        out << ',' << (r.clipped ? 1 : 0) << '\n';
    }
}

Trace simulate_ID(const SystemState& initial, const SystemParams& params, const NoiseSpec& noise,
                  const SeedStream& stream, const RunOptions& options) {
    if (params.variant != SystemVariant::DiscreteI) domain_error("simulate_ID: params are not I(D)");
    params.validate();
    noise.validate();
    require_shapes(initial);

    Trace trace;
    trace.variant = params.variant;
    trace.inner = params.inner;
    trace.clip_y = clip_of(noise);
    const Index k = initial.y.agents();
    const Index d = initial.y.dim();

    SystemState state = initial;
    TargetWatch watch{options.mu, options.nu};
    for (std::uint64_t n = 0;; ++n) {
        TraceRow row;
        row.step = state.step;
        row.time = state.time;
        row.norm_x = quotient_norm(state.x, params.inner);
        row.norm_y = quotient_norm(state.y, params.inner);
        row.coercivity_y = fiedler(state.x, params.single.kernel);
        if (options.store_states) trace.xs.push_back(state.x);
        watch.observe(row.norm_x, row.norm_y);
        if (blown_up(row.norm_x, row.norm_y)) {
            trace.rows.push_back(row);
            trace.blew_up = true;
            trace.diagnostic = "norm exceeded 1e12 at step " + std::to_string(state.step);
            break;
        }
        if (n == options.max_steps || should_stop(watch, options)) {
            trace.rows.push_back(row);
            break;
        }
        const NoiseDraw draw = sample(noise, stream, state.step, k, d, params.inner, row.norm_y);
        row.noise_norm_y = draw.norm;
        row.clipped = draw.clipped;
        trace.rows.push_back(row);
        try {
            Stepped next = step_ID(state, params, draw.value);
            if (!next.j_within_bound) ++trace.j_violations;
            state = std::move(next.state);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Numerical) throw;
            trace.blew_up = true;
            trace.diagnostic = e.what();
            break;
        }
    }
    return trace;
}

Trace simulate_IID(const SystemState& initial, const SystemParams& params, const NoiseSpec& noise_x,
                   const NoiseSpec& noise_y, const SeedStream& stream_x, const SeedStream& stream_y,
                   const RunOptions& options) {
    if (params.variant != SystemVariant::DiscreteII) domain_error("simulate_IID: params are not II(D)");
    params.validate();
    noise_x.validate();
    noise_y.validate();
    require_shapes(initial);

    Trace trace;
    trace.variant = params.variant;
    trace.inner = params.inner;
    trace.clip_x = clip_of(noise_x);
    trace.clip_y = clip_of(noise_y);
    const auto& p = params.coupled;

    SystemState state = initial;
    TargetWatch watch{options.mu, options.nu};
    for (std::uint64_t n = 0;; ++n) {
        TraceRow row;
        row.step = state.step;
        row.time = static_cast<double>(state.step) * p.step1;
        row.time_y = static_cast<double>(state.step) * p.step2;
        row.norm_x = quotient_norm(state.x, params.inner);
        row.norm_y = quotient_norm(state.y, params.inner);
        row.coercivity_y = fiedler(state.x, p.kernel_x);
        row.coercivity_x = fiedler(state.y, p.kernel_y);
        if (options.store_states) trace.xs.push_back(state.x);
        watch.observe(row.norm_x, row.norm_y);
        if (blown_up(row.norm_x, row.norm_y)) {
            trace.rows.push_back(row);
            trace.blew_up = true;
            trace.diagnostic = "norm exceeded 1e12 at step " + std::to_string(state.step);
            break;
        }
        if (n == options.max_steps || should_stop(watch, options)) {
            trace.rows.push_back(row);
            break;
        }
        const NoiseDraw hx = sample(noise_x, stream_x, state.step, state.x.agents(), state.x.dim(),
                                    params.inner, row.norm_x);
        const NoiseDraw hy = sample(noise_y, stream_y, state.step, state.y.agents(), state.y.dim(),
                                    params.inner, row.norm_y);
        row.noise_norm_x = hx.norm;
        row.noise_norm_y = hy.norm;
        row.clipped = hx.clipped || hy.clipped;
        trace.rows.push_back(row);
        try {
            state = step_IID(state, params, hx.value, hy.value).state;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Numerical) throw;
            trace.blew_up = true;
            trace.diagnostic = e.what();
            break;
        }
    }
    return trace;
}

Trace integrate_IC(const SystemState& initial, const SystemParams& params, const PathNoiseSpec& noise,
                   const SeedStream& stream, const RunOptions& options) {
    if (params.variant != SystemVariant::ContinuousI) domain_error("integrate_IC: params are not I(C)");
    params.validate();
    noise.validate();
    require_shapes(initial);
    if (options.integrator == Integrator::RK4 && !noise.is_zero()) {
        domain_error("integrate_IC: RK4 is only offered for the noiseless vector field");
    }

    const auto& p = params.single;
    const double dt = options.dt;
    const std::uint64_t steps = continuous_steps(options);

    Trace trace;
    trace.variant = params.variant;
    trace.inner = params.inner;
    trace.clip_y = clip_of(noise);
    PathNoise path(noise, stream, initial.y.agents(), initial.y.dim(), params.inner, dt);

    auto field = [&](const Matrix& x, const Matrix& y, Matrix& dx, Matrix& dy) {
        const QuotientVector qx = project_to_quotient(x);
        const QuotientVector qy = project_to_quotient(y);
        const JEvaluation j = j_operator(qx, qy, p.j, true, params.inner);
        if (!j.within_bound) ++trace.j_violations;
        dx = j.value.values();
        dy = -coupling_laplacian(qx, p.kernel).m * y;
    };

    SystemState state = initial;
    TargetWatch watch{options.mu, options.nu};
    for (std::uint64_t n = 0;; ++n) {
        TraceRow row;
        row.step = n;
        row.time = state.time;
        row.norm_x = quotient_norm(state.x, params.inner);
        row.norm_y = quotient_norm(state.y, params.inner);
        row.coercivity_y = fiedler(state.x, p.kernel);
        if (options.store_states) trace.xs.push_back(state.x);
        watch.observe(row.norm_x, row.norm_y);
        if (blown_up(row.norm_x, row.norm_y)) {
            trace.rows.push_back(row);
            trace.blew_up = true;
            trace.diagnostic = "norm exceeded 1e12 at t=" + std::to_string(state.time);
            break;
        }
        if (n == steps || should_stop(watch, options)) {
            trace.rows.push_back(row);
            break;
        }
        const NoiseDraw h = path.at_step(n, row.norm_y);
        row.noise_norm_y = h.norm;
        row.clipped = h.clipped;
        trace.rows.push_back(row);

        const Matrix& x = state.x.values();
        const Matrix& y = state.y.values();
        Matrix nx, ny;
        if (options.integrator == Integrator::RK4) {
            Matrix k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
            field(x, y, k1x, k1y);
            field(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, k2x, k2y);
            field(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, k3x, k3y);
            field(x + dt * k3x, y + dt * k3y, k4x, k4y);
            nx = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            ny = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        } else {
            Matrix dx, dy;
            field(x, y, dx, dy);
            nx = x + dt * dx;
            ny = y + dt * (dy + h.value.values());
        }
        if (!nx.allFinite() || !ny.allFinite()) {
            trace.blew_up = true;
            trace.diagnostic = "non-finite state at t=" + std::to_string(state.time + dt);
            break;
        }
        state.x = project_to_quotient(nx);
        state.y = project_to_quotient(ny);
        state.step = n + 1;
        state.time = static_cast<double>(n + 1) * dt;
    }
    return trace;
}

Trace integrate_IIC(const SystemState& initial, const SystemParams& params, const PathNoiseSpec& noise_x,
                    const PathNoiseSpec& noise_y, const SeedStream& stream_x, const SeedStream& stream_y,
                    const RunOptions& options) {
    if (params.variant != SystemVariant::ContinuousII) domain_error("integrate_IIC: params are not II(C)");
    params.validate();
    noise_x.validate();
    noise_y.validate();
    require_shapes(initial);
    if (options.integrator == Integrator::RK4 && !(noise_x.is_zero() && noise_y.is_zero())) {
        domain_error("integrate_IIC: RK4 is only offered for the noiseless vector field");
    }

    const auto& p = params.coupled;
    const double dt = options.dt;
    const std::uint64_t steps = continuous_steps(options);

    Trace trace;
    trace.variant = params.variant;
    trace.inner = params.inner;
    trace.clip_x = clip_of(noise_x);
    trace.clip_y = clip_of(noise_y);
    PathNoise path_x(noise_x, stream_x, initial.x.agents(), initial.x.dim(), params.inner, dt);
    PathNoise path_y(noise_y, stream_y, initial.y.agents(), initial.y.dim(), params.inner, dt);

    auto field = [&](const Matrix& x, const Matrix& y, Matrix& dx, Matrix& dy) {
        const QuotientVector qx = project_to_quotient(x);
        const QuotientVector qy = project_to_quotient(y);
        dx = -coupling_laplacian(qy, p.kernel_y).m * x;
        dy = -coupling_laplacian(qx, p.kernel_x).m * y;
    };

    SystemState state = initial;
    TargetWatch watch{options.mu, options.nu};
    for (std::uint64_t n = 0;; ++n) {
        TraceRow row;
        row.step = n;
        row.time = state.time;
        row.norm_x = quotient_norm(state.x, params.inner);
        row.norm_y = quotient_norm(state.y, params.inner);
        row.coercivity_y = fiedler(state.x, p.kernel_x);
        row.coercivity_x = fiedler(state.y, p.kernel_y);
        if (options.store_states) trace.xs.push_back(state.x);
        watch.observe(row.norm_x, row.norm_y);
        if (blown_up(row.norm_x, row.norm_y)) {
            trace.rows.push_back(row);
            trace.blew_up = true;
            trace.diagnostic = "norm exceeded 1e12 at t=" + std::to_string(state.time);
            break;
        }
        if (n == steps || should_stop(watch, options)) {
            trace.rows.push_back(row);
            break;
        }
        const NoiseDraw hx = path_x.at_step(n, row.norm_x);
        const NoiseDraw hy = path_y.at_step(n, row.norm_y);
        row.noise_norm_x = hx.norm;
        row.noise_norm_y = hy.norm;
        row.clipped = hx.clipped || hy.clipped;
        trace.rows.push_back(row);

        const Matrix& x = state.x.values();
        const Matrix& y = state.y.values();
        Matrix nx, ny;
        if (options.integrator == Integrator::RK4) {
            Matrix k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
            field(x, y, k1x, k1y);
            field(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, k2x, k2y);
            field(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, k3x, k3y);
            field(x + dt * k3x, y + dt * k3y, k4x, k4y);
            nx = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            ny = y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        } else {
            Matrix dx, dy;
            field(x, y, dx, dy);
            nx = x + dt * (dx + hx.value.values());
            ny = y + dt * (dy + hy.value.values());
        }
        if (!nx.allFinite() || !ny.allFinite()) {
            trace.blew_up = true;
            trace.diagnostic = "non-finite state at t=" + std::to_string(state.time + dt);
            break;
        }
        state.x = project_to_quotient(nx);
        state.y = project_to_quotient(ny);
        state.step = n + 1;
        state.time = static_cast<double>(n + 1) * dt;
    }
    return trace;
}

EmergenceTimes detect_emergence(const Trace& trace, std::optional<double> mu, std::optional<double> nu) {
    if ((mu && !(*mu > 0.0)) || (nu && !(*nu > 0.0))) domain_error("detect_emergence: targets must be positive");
    EmergenceTimes out;
    for (const auto& r : trace.rows) {
        if (mu && !out.step_x && r.norm_x <= *mu) {
            out.step_x = r.step;
            out.time_x = r.time;
        }
        if (nu && !out.step_y && r.norm_y <= *nu) {
            out.step_y = r.step;
            out.time_y = trace.variant == SystemVariant::DiscreteII ? r.time_y : r.time;
        }
    }
    return out;
}

}  // namespace emergence
