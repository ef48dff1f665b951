#include "emergence/theory.hpp"

#include "emergence/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace emergence {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRegimeTol = 1e-12;

Regime regime_of(double exponent_sum) {
    if (std::abs(exponent_sum - 1.0) <= kRegimeTol) return Regime::Critical;
    return exponent_sum < 1.0 ? Regime::Sub : Regime::Super;
}

struct Norms {
    double x;
    double y;
};

Norms initial_norms(const SystemState& initial, const SystemParams& params) {
    params.validate();
    if (initial.x.agents() < 2 || initial.y.agents() < 2) domain_error("constants: need at least two agents");
    return {quotient_norm(initial.x, params.inner), quotient_norm(initial.y, params.inner)};
}

void require_targets(const Targets& targets) {
    if (targets.mu && !(*targets.mu > 0.0)) domain_error("target mu must be positive");
    if (targets.nu && !(*targets.nu > 0.0)) domain_error("target nu must be positive");
}

// ln(start / target) when target <= start, else empty with a note.
std::optional<double> log_ratio(double start, std::optional<double> target, const char* what,
                                std::vector<std::string>& notes) {
    if (!target) return std::nullopt;
    if (*target > start) {
        notes.push_back(std::string(what) + " exceeds its cap; time bound inapplicable");
        return std::nullopt;
    }
    return std::log(start / *target);
}

}  // namespace

double q_of_delta(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) domain_error("Q(delta): delta must be positive");
    return std::max(1.0, 1.0 / delta);
}

double positive_root_bound(double s, double q, double c1, double c2) {
    return std::max(std::pow(2.0 * c1, 1.0 / (s - q)), std::pow(2.0 * c2, 1.0 / s));
}

double positive_root(double s, double q, double c1, double c2) {
    for (double v : {s, q, c1, c2}) {
        if (!std::isfinite(v)) domain_error("positive_root: non-finite argument");
    }
    if (!(q > 0.0) || !(s > q)) domain_error("positive_root: need s > q > 0");
    if (!(c1 > 0.0) || !(c2 > 0.0)) domain_error("positive_root: need c1, c2 > 0");

    auto m = [&](double z) { return std::pow(z, s) - c1 * std::pow(z, q) - c2; };
    auto dm = [&](double z) { return s * std::pow(z, s - 1.0) - c1 * q * std::pow(z, q - 1.0); };

    const double bound = positive_root_bound(s, q, c1, c2);
    double lo = 0.0;
    double hi = bound;
    // M(bound) >= 0 analytically; widen if rounding says otherwise.
    while (m(hi) < 0.0) hi *= 1.0 + 1e-12;

    double z = hi;
    for (int iter = 0; iter < 400; ++iter) {
        const double mz = m(z);
        if (mz == 0.0) return z;
        if (mz < 0.0) {
            lo = z;
        } else {
            hi = z;
        }
        const double slope = dm(z);
        double next = slope > 0.0 ? z - mz / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - z) <= 4.0 * std::numeric_limits<double>::epsilon() * z || hi - lo <= 0.0) {
            z = next;
            break;
        }
        z = next;
    }
    if (z > bound * (1.0 + 1e-12)) {
        throw Error(ErrorKind::Numerical, "positive_root: zero exceeds its analytic bound");
    }
    return z;
}

std::string to_string(Regime r) {
    switch (r) {
    case Regime::Sub: return "(i)";
    case Regime::Critical: return "(ii)";
    case Regime::Super: return "(iii)";
    }
    return "?";
}

CaseCheck check_hypotheses_thm1(const SystemState& initial, const SystemParams& params) {
    if (params.variant != SystemVariant::DiscreteI) domain_error("type-I discrete hypotheses need an I(D) system");
    const Norms n = initial_norms(initial, params);
    const auto& p = params.single;
    const double G = p.gain, beta = p.beta, gamma = p.j.gamma, delta = p.j.delta, C = p.j.C, h = p.step;
    const double Q = q_of_delta(delta);
    const double a = 2.0 * C / G * Q * std::pow(n.y, delta);
    const double b = 1.0 + n.x;
    const double s = beta + gamma;

    CaseCheck out;
    out.regime = regime_of(s);
    double u0 = kInf;
    switch (out.regime) {
    case Regime::Sub:
        out.report.add("case (i): beta + gamma < 1", "<", s, 1.0);
        u0 = std::max(std::pow(2.0 * a, 1.0 / (1.0 - s)), 2.0 * b);
        break;
    case Regime::Critical:
        out.report.add("case (ii): ||y(0)|| < (G/(2CQ))^(1/delta)", "<", n.y, std::pow(G / (2.0 * C * Q), 1.0 / delta));
        if (a < 1.0) u0 = b / (1.0 - a);
        break;
    case Regime::Super: {
        const double lhs = std::pow(1.0 / (a * s), 1.0 / (s - 1.0)) * (s - 1.0) / s;
        const double rhs = b + h * std::pow(s / (s - 1.0) * b, gamma) * a * G / (2.0 * Q);
        // stated as lhs > rhs
        out.report.add("case (iii): b + h((s/(s-1))b)^gamma aG/(2Q) < (1/(as))^(1/(s-1))(s-1)/s", "<", rhs, lhs);
        u0 = s * b / (s - 1.0);
        break;
    }
    }
    const double tol0 = std::pow(2.0, -beta - 1.0) * G / std::pow(u0, beta);
    const double second = beta > 0.0 ? std::pow(G / (2.0 * tol0), (1.0 - gamma) / beta) /
                                           (std::pow(2.0, 1.0 - gamma) * C * std::pow(n.y, delta))
                                     : kInf;
    out.report.add("step: h < 1/G", "<", h, 1.0 / G);
    out.report.add("step: h < h_max", "<", h, std::min(1.0 / G, second));
    return out;
}

EmergenceConstants constants_ID(const SystemState& initial, const SystemParams& params, const Targets& targets) {
    if (params.variant != SystemVariant::DiscreteI) domain_error("constants_ID: params are not I(D)");
    require_targets(targets);
    const Norms n = initial_norms(initial, params);
    if (!(n.y > 0.0)) domain_error("constants_ID: ||y(0)|| must be positive");
    const auto& p = params.single;
    const double G = p.gain, beta = p.beta, gamma = p.j.gamma, delta = p.j.delta, C = p.j.C, h = p.step;

    EmergenceConstants k;
    k.variant = params.variant;
    k.norm_x0 = n.x;
    k.norm_y0 = n.y;
    k.q = q_of_delta(delta);
    k.a = 2.0 * C / G * k.q * std::pow(n.y, delta);
    k.b = 1.0 + n.x;
    const double s = beta + gamma;
    k.regime = regime_of(s);
    switch (k.regime) {
    case Regime::Sub:
        k.u0 = std::max(std::pow(2.0 * k.a, 1.0 / (1.0 - s)), 2.0 * k.b);
        break;
    case Regime::Critical:
        k.u0 = k.a < 1.0 ? k.b / (1.0 - k.a) : kInf;
        break;
    case Regime::Super:
        k.u0 = s * k.b / (s - 1.0);
        break;
    }
    k.b0 = k.u0 - 1.0;
    k.tol0 = std::pow(2.0, -beta - 1.0) * G / std::pow(k.u0, beta);
    const double second = beta > 0.0 ? std::pow(G / (2.0 * k.tol0), (1.0 - gamma) / beta) /
                                           (std::pow(2.0, 1.0 - gamma) * C * std::pow(n.y, delta))
                                     : kInf;
    k.h_max = std::min(1.0 / G, second);

    // U0 > 1 gives H0 < G/2 for beta > 0; beta = 0 gives equality
    if (std::isfinite(k.u0) && (beta > 0.0 ? !(k.tol0 < 0.5 * G) : !(k.tol0 <= 0.5 * G))) {
        throw Error(ErrorKind::Numerical, "constants_ID: H0 exceeds G/2 although U0 > 1");
    }

    const CaseCheck check = check_hypotheses_thm1(initial, params);
    k.case_holds = check.report.checks.front().pass;
    k.hypotheses = check.report;

    if (std::isfinite(k.u0)) {
        const double rate = 2.0 * std::pow(k.u0, beta) / (h * G);
        if (auto l = log_ratio(n.y, targets.nu, "nu > ||y(0)||:", k.notes)) k.t0 = rate * *l;
        const double cap = k.a * std::pow(k.u0, beta + gamma);
        if (auto l = log_ratio(cap, targets.mu, "mu > a U0^(beta+gamma):", k.notes)) k.t1 = rate / delta * *l;
    } else {
        k.notes.push_back("U0 is infinite (a >= 1 in case (ii)); no time bounds");
    }
    return k;
}

EmergenceConstants constants_IID(const SystemState& initial, const SystemParams& params, const Targets& targets) {
    if (params.variant != SystemVariant::DiscreteII) domain_error("constants_IID: params are not II(D)");
    require_targets(targets);
    const Norms n = initial_norms(initial, params);
    const auto& p = params.coupled;

    EmergenceConstants k;
    k.variant = params.variant;
    k.norm_x0 = n.x;
    k.norm_y0 = n.y;
    k.tol1 = p.gain1 / (2.0 * std::pow(1.0 + n.y, p.beta1));
    k.tol2 = p.gain2 / (2.0 * std::pow(1.0 + n.x, p.beta2));
    k.hypotheses.add("step: h1 < 1/G1", "<", p.step1, 1.0 / p.gain1);
    k.hypotheses.add("step: h2 < 1/G2", "<", p.step2, 1.0 / p.gain2);
    if (auto l = log_ratio(n.x, targets.mu, "mu > ||x(0)||:", k.notes)) k.t2 = *l / (p.step1 * k.tol1);
    if (auto l = log_ratio(n.y, targets.nu, "nu > ||y(0)||:", k.notes)) k.t3 = *l / (p.step2 * k.tol2);
    return k;
}

CaseCheck check_hypotheses_thm3(const SystemState& initial, const SystemParams& params) {
    if (params.variant != SystemVariant::ContinuousI) domain_error("type-I continuous hypotheses need an I(C) system");
    const Norms n = initial_norms(initial, params);
    const auto& p = params.single;
    const double K = p.gain, beta = p.beta, gamma = p.j.gamma, delta = p.j.delta, C = p.j.C;
    const double e = 2.0 / (1.0 - gamma);
    const double a = std::pow(2.0, (1.0 + gamma + 2.0 * beta) / (1.0 - gamma)) * std::pow((1.0 - gamma) * C, e) *
                     std::pow(n.y, 2.0 * delta / (1.0 - gamma)) / std::pow(delta * K, e);
    const double b = std::pow(2.0, (1.0 + gamma) / (1.0 - gamma)) * (1.0 + n.x * n.x);
    const double alpha = 2.0 * beta / (1.0 - gamma);

    CaseCheck out;
    out.regime = regime_of(2.0 * beta + gamma);
    switch (out.regime) {
    case Regime::Sub:
        out.report.add("case (i): 2 beta + gamma < 1", "<", 2.0 * beta + gamma, 1.0);
        break;
    case Regime::Critical: {
        const double cap = std::pow(delta * K * delta * K /
                                        (std::pow(2.0, 1.0 + gamma + 2.0 * beta) * std::pow((1.0 - gamma) * C, 2.0)),
                                    1.0 / (2.0 * delta));
        out.report.add("case (ii): ||y(0)|| < ((dK)^2/(2^(1+g+2b)((1-g)C)^2))^(1/(2d))", "<", n.y, cap);
        break;
    }
    case Regime::Super: {
        const double lhs = std::pow(1.0 / (a * alpha), 1.0 / (alpha - 1.0)) * (alpha - 1.0) / alpha;
        out.report.add("case (iii): b < (1/(a alpha))^(1/(alpha-1)) (alpha-1)/alpha", "<", b, lhs);
        break;
    }
    }
    return out;
}

EmergenceConstants constants_IC(const SystemState& initial, const SystemParams& params, const Targets& targets) {
    if (params.variant != SystemVariant::ContinuousI) domain_error("constants_IC: params are not I(C)");
    require_targets(targets);
    const Norms n = initial_norms(initial, params);
    if (!(n.y > 0.0)) domain_error("constants_IC: ||y(0)|| must be positive");
    const auto& p = params.single;
    const double K = p.gain, beta = p.beta, gamma = p.j.gamma, delta = p.j.delta, C = p.j.C;
    const double e = 2.0 / (1.0 - gamma);

    EmergenceConstants k;
    k.variant = params.variant;
    k.norm_x0 = n.x;
    k.norm_y0 = n.y;
    k.a = std::pow(2.0, (1.0 + gamma + 2.0 * beta) / (1.0 - gamma)) * std::pow((1.0 - gamma) * C, e) *
          std::pow(n.y, 2.0 * delta / (1.0 - gamma)) / std::pow(delta * K, e);
    k.b = std::pow(2.0, (1.0 + gamma) / (1.0 - gamma)) * (1.0 + n.x * n.x);
    k.alpha = 2.0 * beta / (1.0 - gamma);
    k.regime = regime_of(2.0 * beta + gamma);
    switch (k.regime) {
    case Regime::Sub:
        k.u0 = std::max(std::pow(2.0 * k.a, (1.0 - gamma) / (1.0 - gamma - 2.0 * beta)), 2.0 * k.b);
        break;
    case Regime::Critical:
        k.u0 = k.a < 1.0 ? k.b / (1.0 - k.a) : kInf;
        break;
    case Regime::Super:
        k.u0 = std::pow(1.0 / (k.a * k.alpha), 1.0 / (k.alpha - 1.0));
        break;
    }
    k.b0 = k.u0 - 1.0;
    k.b1 = 2.0 * C * std::pow(n.y, delta) * std::pow(k.b0, 0.5 * gamma + beta) / (delta * K);
    // The published tolerance is written with G; K is the continuous gain.
    k.tol0 = std::pow(2.0, -beta - 1.0) * K / std::pow(k.u0, beta);

    const CaseCheck check = check_hypotheses_thm3(initial, params);
    k.case_holds = check.pass();
    k.hypotheses = check.report;

    if (std::isfinite(k.u0)) {
        const double rate = 2.0 * std::pow(k.b0, beta) / K;
        if (auto l = log_ratio(n.y, targets.nu, "nu > ||y(0)||:", k.notes)) k.t0 = rate * *l;
        if (auto l = log_ratio(k.b1, targets.mu, "mu > B1:", k.notes)) k.t1 = rate / delta * *l;
    } else {
        k.notes.push_back("U0 is infinite (a >= 1 in case (ii)); no time bounds");
    }
    return k;
}

EmergenceConstants constants_IIC(const SystemState& initial, const SystemParams& params, const Targets& targets) {
    if (params.variant != SystemVariant::ContinuousII) domain_error("constants_IIC: params are not II(C)");
    require_targets(targets);
    const Norms n = initial_norms(initial, params);
    const auto& p = params.coupled;

    EmergenceConstants k;
    k.variant = params.variant;
    k.norm_x0 = n.x;
    k.norm_y0 = n.y;
    const double scale_x = std::pow(1.0 + n.y * n.y, p.beta2);  // slows the x decay
    const double scale_y = std::pow(1.0 + n.x * n.x, p.beta1);
    k.tol1 = p.gain2 / (2.0 * scale_x);
    k.tol2 = p.gain1 / (2.0 * scale_y);
    if (auto l = log_ratio(n.x, targets.mu, "mu > ||x(0)||:", k.notes)) k.t2 = 2.0 * scale_x / p.gain2 * *l;
    if (auto l = log_ratio(n.y, targets.nu, "nu > ||y(0)||:", k.notes)) k.t3 = 2.0 * scale_y / p.gain1 * *l;
    return k;
}

EmergenceConstants compute_constants(const SystemState& initial, const SystemParams& params, const Targets& targets) {
    switch (params.variant) {
    case SystemVariant::DiscreteI: return constants_ID(initial, params, targets);
    case SystemVariant::DiscreteII: return constants_IID(initial, params, targets);
    case SystemVariant::ContinuousI: return constants_IC(initial, params, targets);
    case SystemVariant::ContinuousII: return constants_IIC(initial, params, targets);
    }
    domain_error("compute_constants: unknown variant");
}

std::string to_string(Theorem t) {
    switch (t) {
    case Theorem::DiscreteI: return "discrete-I";
    case Theorem::DiscreteIJoint: return "discrete-I-joint";
    case Theorem::DiscreteII: return "discrete-II";
    case Theorem::ContinuousI: return "continuous-I";
    case Theorem::ContinuousIJoint: return "continuous-I-joint";
    case Theorem::ContinuousII: return "continuous-II";
    case Theorem::Corollary: return "single-noise";
    }
    return "?";
}

Theorem default_theorem(SystemVariant v) {
    switch (v) {
    case SystemVariant::DiscreteI: return Theorem::DiscreteI;
    case SystemVariant::DiscreteII: return Theorem::DiscreteII;
    case SystemVariant::ContinuousI: return Theorem::ContinuousI;
    case SystemVariant::ContinuousII: return Theorem::ContinuousII;
    }
    return Theorem::DiscreteI;
}

std::uint64_t iterations_for(double t) {
    if (!(t > 0.0)) return 0;
    return static_cast<std::uint64_t>(std::ceil(t - 1e-9 * std::max(1.0, t)));
}

BoundReport probability_bound(Theorem theorem, const EmergenceConstants& k, const NoiseCdfs& cdfs,
                              const Targets& targets) {
    require_targets(targets);
    if (theorem == Theorem::ContinuousII && (cdfs.noise_x_zero || cdfs.noise_y_zero)) {
        theorem = Theorem::Corollary;
    }
    BoundReport r;
    r.theorem = theorem;
    r.notes = k.notes;
    auto inapplicable = [&](const std::string& why) {
        r.applicable = false;
        r.probability = 0.0;
        r.notes.push_back(why);
        return r;
    };
    if (!k.applicable()) return inapplicable("theorem hypotheses do not hold at the initial state");

    auto need = [](const std::function<double(double)>& f) -> const std::function<double(double)>& {
        if (!f) domain_error("probability_bound: missing noise CDF");
        return f;
    };
    auto need_path = [](const std::function<double(double, double)>& f)
        -> const std::function<double(double, double)>& {
        if (!f) domain_error("probability_bound: missing path bound");
        return f;
    };

    switch (theorem) {
    case Theorem::DiscreteI:
    case Theorem::DiscreteIJoint: {
        if (k.variant != SystemVariant::DiscreteI) domain_error("probability_bound: theorem needs an I(D) system");
        if (!k.t0 || !targets.nu) return inapplicable("T0 unavailable");
        double t = *k.t0;
        if (theorem == Theorem::DiscreteIJoint) {
            if (!k.t1 || !targets.mu) return inapplicable("T1 unavailable");
            t = std::max(t, *k.t1);
        }
        const auto n = iterations_for(t);
        r.raw_horizon = t;
        r.horizon = static_cast<double>(n);
        r.threshold_y = k.tol0 * *targets.nu;
        r.probability = std::pow(need(cdfs.f)(r.threshold_y), static_cast<double>(n));
        break;
    }
    case Theorem::DiscreteII: {
        if (k.variant != SystemVariant::DiscreteII) domain_error("probability_bound: theorem needs a II(D) system");
        if (!k.t2 || !k.t3 || !targets.mu || !targets.nu) return inapplicable("T2 or T3 unavailable");
        const double t = std::max(*k.t2, *k.t3);
        const auto n = iterations_for(t);
        r.raw_horizon = t;
        r.horizon = static_cast<double>(n);
        r.threshold_x = k.tol1 * *targets.mu;
        r.threshold_y = k.tol2 * *targets.nu;
        r.probability = std::pow(need(cdfs.f1)(r.threshold_x) * need(cdfs.f2)(r.threshold_y), static_cast<double>(n));
        break;
    }
    case Theorem::ContinuousI:
    case Theorem::ContinuousIJoint: {
        if (k.variant != SystemVariant::ContinuousI) domain_error("probability_bound: theorem needs an I(C) system");
        if (!k.t0 || !targets.nu) return inapplicable("T0 unavailable");
        double t = *k.t0;
        if (theorem == Theorem::ContinuousIJoint) {
            if (!k.t1 || !targets.mu) return inapplicable("T1 unavailable");
            t = std::max(t, *k.t1);
        }
        r.raw_horizon = t;
        r.horizon = t;
        r.threshold_y = k.tol0 * *targets.nu;
        r.probability = need_path(cdfs.path)(r.threshold_y, t);
        break;
    }
    case Theorem::ContinuousII:
    case Theorem::Corollary: {
        if (k.variant != SystemVariant::ContinuousII) domain_error("probability_bound: theorem needs a II(C) system");
        if (!k.t2 || !k.t3 || !targets.mu || !targets.nu) return inapplicable("T2 or T3 unavailable");
        const double t = std::max(*k.t2, *k.t3);
        r.raw_horizon = t;
        r.horizon = t;
        r.threshold_x = k.tol1 * *targets.mu;
        r.threshold_y = k.tol2 * *targets.nu;
        if (theorem == Theorem::ContinuousII) {
            r.probability = need_path(cdfs.path1)(r.threshold_x, t) * need_path(cdfs.path2)(r.threshold_y, t);
        } else if (cdfs.noise_x_zero && cdfs.noise_y_zero) {
            r.probability = 1.0;
        } else if (cdfs.noise_x_zero) {
            r.probability = need_path(cdfs.path2)(r.threshold_y, *k.t3);
        } else if (cdfs.noise_y_zero) {
            r.probability = need_path(cdfs.path1)(r.threshold_x, *k.t2);
        } else {
            return inapplicable("the corollary needs one noise to vanish identically");
        }
        break;
    }
    }
    r.applicable = true;
    r.probability = std::clamp(r.probability, 0.0, 1.0);
    return r;
}

void EnvelopeCheck::observe(std::uint64_t step, double lhs, double rhs) {
    ++evaluated;
    const double slack = rhs - lhs;
    worst_slack = std::min(worst_slack, slack);
    const double tol = 1e-9 * std::max(std::abs(lhs), std::abs(rhs)) + 1e-300;
    if (lhs > rhs + tol) {
        ++violations;
        if (!first_violation_step) first_violation_step = step;
    }
}

bool TrajectoryReport::all_hold() const {
    return !skipped && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.violations == 0; });
}

const EnvelopeCheck* TrajectoryReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

namespace {

bool clip_within(std::optional<double> clip, double tolerance) {
    return clip && *clip <= tolerance * (1.0 + 1e-12);
}

// All pairs i < j with both rows at or after `from` must stay within mu.
EnvelopeCheck cauchy_tail(const Trace& trace, double from, double mu, bool by_time, InnerProduct inner) {
    EnvelopeCheck c;
    c.name = "position Cauchy tail";
    const auto& rows = trace.rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double at = by_time ? rows[i].time : static_cast<double>(rows[i].step);
        if (at + 1e-12 < from) continue;
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            const Matrix diff = trace.xs[j].values() - trace.xs[i].values();
            c.observe(rows[j].step, quotient_norm(project_to_quotient(diff), inner), mu);
        }
    }
    return c;
}

}  // namespace

TrajectoryReport verify_trajectory(const Trace& trace, const EmergenceConstants& k, const SystemParams& params,
                                   const Targets& targets) {
    TrajectoryReport out;
    if (trace.variant != k.variant || params.variant != k.variant) {
        domain_error("verify_trajectory: trace, constants and params disagree on the system");
    }
    if (trace.rows.empty()) {
        out.skipped = true;
        out.notice = "empty trace";
        return out;
    }
    const bool stored = trace.xs.size() == trace.rows.size();
    const auto& rows = trace.rows;
    const auto& r0 = rows.front();

    switch (k.variant) {
    case SystemVariant::DiscreteI: {
        if (!clip_within(trace.clip_y, k.tol0)) {
            out.skipped = true;
            out.notice = "trace not produced with noise clipped at ||H|| <= H0 ||y||; checks skipped";
            return out;
        }
        const auto& p = params.single;
        const double h = p.step, G = p.gain, beta = p.beta;
        const double rate = 1.0 - h * G / (2.0 * std::pow(k.u0, beta));
        EnvelopeCheck factor{"one-step factor"};
        EnvelopeCheck envelope{"geometric envelope"};
        EnvelopeCheck position{"position bound B0"};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto t = rows[i].step - r0.step;
            envelope.observe(rows[i].step, rows[i].norm_y, r0.norm_y * std::pow(rate, static_cast<double>(t)));
            position.observe(rows[i].step, rows[i].norm_x, k.b0);
            if (i == 0) continue;
            const auto& prev = rows[i - 1];
            const double f = 1.0 - h * G / std::pow(1.0 + prev.norm_x, beta) + h * k.tol0;
            factor.observe(rows[i].step, rows[i].norm_y, f * prev.norm_y);
        }
        out.checks = {factor, envelope, position};
        if (stored) {
            const double cap = k.a * std::pow(k.u0, beta + p.j.gamma);
            EnvelopeCheck limit{"limit point bound (final state as limit)"};
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const Matrix diff = trace.xs[i].values() - trace.xs.back().values();
                const auto t = static_cast<double>(rows[i].step - r0.step);
                limit.observe(rows[i].step, quotient_norm(project_to_quotient(diff), trace.inner),
                              cap * std::pow(rate, p.j.delta * t));
            }
            out.checks.push_back(limit);
            if (targets.mu && k.t0 && k.t1) {
                const double from = static_cast<double>(iterations_for(std::max(*k.t0, *k.t1)));
                out.checks.push_back(cauchy_tail(trace, from, *targets.mu, false, trace.inner));
            }
        }
        break;
    }
    case SystemVariant::DiscreteII: {
        if (!clip_within(trace.clip_x, k.tol1) || !clip_within(trace.clip_y, k.tol2)) {
            out.skipped = true;
            out.notice = "trace not produced with both noises clipped at H1 ||x||, H2 ||y||; checks skipped";
            return out;
        }
        const auto& p = params.coupled;
        EnvelopeCheck factor_x{"one-step factor x"};
        EnvelopeCheck factor_y{"one-step factor y"};
        EnvelopeCheck env_x{"geometric envelope x"};
        EnvelopeCheck env_y{"geometric envelope y"};
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto t = static_cast<double>(rows[i].step - r0.step);
            env_x.observe(rows[i].step, rows[i].norm_x, r0.norm_x * std::pow(1.0 - p.step1 * k.tol1, t));
            env_y.observe(rows[i].step, rows[i].norm_y, r0.norm_y * std::pow(1.0 - p.step2 * k.tol2, t));
            if (i == 0) continue;
            const auto& prev = rows[i - 1];
            const double fx = 1.0 - p.step1 * p.gain1 / std::pow(1.0 + prev.norm_y, p.beta1) + p.step1 * k.tol1;
            const double fy = 1.0 - p.step2 * p.gain2 / std::pow(1.0 + prev.norm_x, p.beta2) + p.step2 * k.tol2;
            factor_x.observe(rows[i].step, rows[i].norm_x, fx * prev.norm_x);
            factor_y.observe(rows[i].step, rows[i].norm_y, fy * prev.norm_y);
        }
        out.checks = {factor_x, factor_y, env_x, env_y};
        break;
    }
    case SystemVariant::ContinuousI: {
        if (!clip_within(trace.clip_y, k.tol0)) {
            out.skipped = true;
            out.notice = "trace not produced with noise clipped at ||H|| <= H0 ||y||; checks skipped";
            return out;
        }
        const auto& p = params.single;
        const double K = p.gain, beta = p.beta, gamma = p.j.gamma, delta = p.j.delta, C = p.j.C;
        const double lambda0 = r0.norm_y * r0.norm_y;
        const double gamma0 = r0.norm_x * r0.norm_x;
        EnvelopeCheck coercive{"coercive decay"};
        EnvelopeCheck state{"state bound with running coercivity"};
        EnvelopeCheck position{"position bound B0"};
        EnvelopeCheck decay{"uniform decay envelope"};
        double theta = kInf;
        for (const auto& r : rows) {
            theta = std::min(theta, r.coercivity_y);
            const double t = r.time - r0.time;
            const double lambda = r.norm_y * r.norm_y;
            const double gam = r.norm_x * r.norm_x;
            coercive.observe(r.step, lambda, lambda0 * std::exp(-2.0 * t * (theta - k.tol0)));
            if (theta > k.tol0) {
                const double e = 2.0 / (1.0 - gamma);
                const double bound =
                    std::pow(2.0, (1.0 + gamma) / (1.0 - gamma)) *
                        ((1.0 + gamma0) + std::pow((1.0 - gamma) * C, e) * std::pow(lambda0, delta / (1.0 - gamma)) /
                                              std::pow(delta * (theta - k.tol0), e)) -
                    1.0;
                state.observe(r.step, gam, bound);
            }
            position.observe(r.step, gam, k.b0);
            decay.observe(r.step, lambda, lambda0 * std::exp(-K * t / std::pow(k.b0, beta)));
        }
        out.checks = {coercive, state, position, decay};
        if (stored && targets.mu && k.t0 && k.t1) {
            out.checks.push_back(cauchy_tail(trace, std::max(*k.t0, *k.t1), *targets.mu, true, trace.inner));
        }
        break;
    }
    case SystemVariant::ContinuousII: {
        if (!clip_within(trace.clip_x, k.tol1) || !clip_within(trace.clip_y, k.tol2)) {
            out.skipped = true;
            out.notice = "trace not produced with both noises clipped at H1 ||x||, H2 ||y||; checks skipped";
            return out;
        }
        const double lx0 = r0.norm_x * r0.norm_x;
        const double ly0 = r0.norm_y * r0.norm_y;
        EnvelopeCheck integral_x{"integrated coercive decay x"};
        EnvelopeCheck integral_y{"integrated coercive decay y"};
        EnvelopeCheck uniform_x{"uniform decay x"};
        EnvelopeCheck uniform_y{"uniform decay y"};
        double ix = 0.0;
        double iy = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            if (i > 0) {
                const double dt = r.time - rows[i - 1].time;
                ix += (rows[i - 1].coercivity_x - k.tol1) * dt;
                iy += (rows[i - 1].coercivity_y - k.tol2) * dt;
            }
            const double t = r.time - r0.time;
            integral_x.observe(r.step, r.norm_x * r.norm_x, lx0 * std::exp(-2.0 * ix));
            integral_y.observe(r.step, r.norm_y * r.norm_y, ly0 * std::exp(-2.0 * iy));
            uniform_x.observe(r.step, r.norm_x * r.norm_x, lx0 * std::exp(-2.0 * t * k.tol1));
            uniform_y.observe(r.step, r.norm_y * r.norm_y, ly0 * std::exp(-2.0 * t * k.tol2));
        }
        out.checks = {integral_x, integral_y, uniform_x, uniform_y};
        break;
    }
    }
    return out;
}

}  // namespace emergence
