#include "emergence/harness.hpp"

#include "emergence/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace emergence {

namespace {

// Typed, path-aware access to one JSON object of the config.
class Reader {
public:
    Reader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& what) const { config_error(path_ + ": " + what); }
    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        config_error(path_ + "." + key + ": " + what);
    }

    void allow(const std::set<std::string>& keys) const {
        for (const auto& [key, value] : node_.items()) {
            if (!keys.count(key)) fail(key, "unknown key");
        }
    }

    bool has(const std::string& key) const { return node_.contains(key); }
    const Json& at(const std::string& key) const { return node_.at(key); }
    std::string path(const std::string& key) const { return path_ + "." + key; }

    std::optional<double> number(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        const Json& v = node_.at(key);
        if (!v.is_number()) fail(key, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(key, "must be finite");
        return x;
    }

    double number(const std::string& key, double fallback) const { return number(key).value_or(fallback); }

    std::optional<double> positive(const std::string& key) const {
        auto v = number(key);
        if (v && !(*v > 0.0)) fail(key, "must be positive");
        return v;
    }

    std::optional<double> nonnegative(const std::string& key) const {
        auto v = number(key);
        if (v && !(*v >= 0.0)) fail(key, "must be >= 0");
        return v;
    }

    std::optional<std::uint64_t> count(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        const Json& v = node_.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(key, "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    std::optional<std::string> string(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        const Json& v = node_.at(key);
        if (!v.is_string()) fail(key, "expected a string");
        return v.get<std::string>();
    }

private:
    const Json& node_;
    std::string path_;
};

KernelSpec parse_kernel(const Reader& r, KernelSpec fallback) {
    r.allow({"kind", "scale", "beta", "table"});
    KernelSpec k = fallback;
    if (auto kind = r.string("kind")) {
        if (*kind == "rational") {
            k.kind = KernelKind::Rational;
        } else if (*kind == "rational_squared") {
            k.kind = KernelKind::RationalSquared;
        } else if (*kind == "table") {
            k.kind = KernelKind::Table;
        } else {
            r.fail("kind", "unknown kernel kind '" + *kind + "'");
        }
    }
    if (auto v = r.positive("scale")) k.scale = *v;
    if (auto v = r.nonnegative("beta")) k.beta = *v;
    if (r.has("table")) {
        const Json& t = r.at("table");
        if (!t.is_array()) r.fail("table", "expected a list of [distance, value] pairs");
        k.table.clear();
        for (const auto& knot : t) {
            if (!knot.is_array() || knot.size() != 2 || !knot[0].is_number() || !knot[1].is_number()) {
                r.fail("table", "expected a list of [distance, value] pairs");
            }
            k.table.emplace_back(knot[0].get<double>(), knot[1].get<double>());
        }
    }
    if (k.kind == KernelKind::Table && k.table.empty()) r.fail("table", "a table kernel needs knots");
    try {
        k.validate();
    } catch (const Error& e) {
        r.fail(e.what());
    }
    return k;
}

NoiseConfig parse_noise(const Reader& r, NoiseConfig fallback) {
    r.allow({"kind", "radius", "sigma", "clip"});
    NoiseConfig n = fallback;
    if (auto kind = r.string("kind")) {
        try {
            n.law.kind = noise_kind_from_string(*kind);
        } catch (const Error&) {
            r.fail("kind", "unknown noise kind '" + *kind + "'");
        }
    }
    if (auto v = r.nonnegative("radius")) n.law.radius = *v;
    if (auto v = r.positive("sigma")) n.law.sigma = *v;
    if (r.has("clip")) {
        const Json& c = r.at("clip");
        if (c.is_string() && c.get<std::string>() == "tolerance") {
            n.clip = {ClipSpec::Mode::Tolerance, 0.0};
        } else if (c.is_string() && c.get<std::string>() == "none") {
            n.clip = {};
        } else if (c.is_number() && c.get<double>() >= 0.0 && std::isfinite(c.get<double>())) {
            n.clip = {ClipSpec::Mode::Factor, c.get<double>()};
        } else {
            r.fail("clip", "expected \"tolerance\", \"none\" or a factor >= 0");
        }
    }
    try {
        n.law.unclipped().validate();
    } catch (const Error& e) {
        r.fail(e.what());
    }
    return n;
}

Matrix parse_matrix(const Reader& r, const std::string& key, Index rows, Index cols) {
    const Json& m = r.at(key);
    if (!m.is_array() || static_cast<Index>(m.size()) != rows) {
        r.fail(key, "expected " + std::to_string(rows) + " rows");
    }
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const Json& row = m[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            r.fail(key, "row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
        }
        for (Index j = 0; j < cols; ++j) {
            const Json& v = row[static_cast<std::size_t>(j)];
            if (!v.is_number() || !std::isfinite(v.get<double>())) r.fail(key, "entries must be finite numbers");
            out(i, j) = v.get<double>();
        }
    }
    return out;
}

std::optional<Theorem> theorem_from_string(const std::string& s) {
    for (Theorem t : {Theorem::DiscreteI, Theorem::DiscreteIJoint, Theorem::DiscreteII, Theorem::ContinuousI,
                      Theorem::ContinuousIJoint, Theorem::ContinuousII, Theorem::Corollary}) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

bool theorem_matches(Theorem t, SystemVariant v) {
    switch (t) {
    case Theorem::DiscreteI:
    case Theorem::DiscreteIJoint: return v == SystemVariant::DiscreteI;
    case Theorem::DiscreteII: return v == SystemVariant::DiscreteII;
    case Theorem::ContinuousI:
    case Theorem::ContinuousIJoint: return v == SystemVariant::ContinuousI;
    case Theorem::ContinuousII:
    case Theorem::Corollary: return v == SystemVariant::ContinuousII;
    }
    return false;
}

// Per-agent gain: the scale of a rational kernel (its decay lives in beta),
// the smallest value of a table kernel.
double kernel_floor(const KernelSpec& k) {
    if (k.kind == KernelKind::Table) return k.table.back().second;
    return k.scale;
}

}  // namespace

ScenarioConfig parse_config(const Json& doc) {
    ScenarioConfig c;
    c.source = doc;
    const Reader r(doc, "config");

    const std::string preset = r.string("preset").value_or("");
    if (!preset.empty() && preset != "flocking" && preset != "flocking-2d" && preset != "language") {
        r.fail("preset", "unknown preset '" + preset + "'");
    }
    c.preset = preset;
    c.variant = preset == "language" ? SystemVariant::DiscreteII : SystemVariant::DiscreteI;
    if (auto v = r.string("variant")) {
        try {
            c.variant = variant_from_string(*v);
        } catch (const Error&) {
            r.fail("variant", "unknown variant '" + *v + "' (expected I(D), II(D), I(C) or II(C))");
        }
    }
    const bool coupled = is_coupled(c.variant);
    const bool continuous = is_continuous(c.variant);
    if (preset == "language" && !coupled) r.fail("preset", "the language preset needs a type-II variant");
    if (preset.rfind("flocking", 0) == 0 && coupled) r.fail("preset", "the flocking presets need a type-I variant");

    std::set<std::string> keys{"variant", "preset", "k", "d", "inner_product", "initial", "params", "targets",
                               "theorem", "horizon", "trials", "seed", "threads"};
    if (coupled) {
        keys.insert({"d_x", "kernel_x", "kernel_y", "noise", "noise_x", "noise_y"});
    } else {
        keys.insert({"kernel", "noise"});
    }
    if (continuous) keys.insert({"path", "integrator"});
    r.allow(keys);

    if (auto k = r.count("k")) {
        c.k = static_cast<Index>(*k);
    } else {
        c.defaulted.push_back("k");
    }
    if (c.k < 2) r.fail("k", "need at least two agents");
    if (auto d = r.count("d")) {
        c.d = static_cast<Index>(*d);
    } else {
        c.d = preset == "flocking-2d" ? 2 : kDefaultDim;
        if (preset != "flocking-2d") c.defaulted.push_back("d");
    }
    if (c.d < 1) r.fail("d", "must be >= 1");
    c.d_x = c.d;
    if (auto d = r.count("d_x")) c.d_x = static_cast<Index>(*d);
    if (c.d_x < 1) r.fail("d_x", "must be >= 1");

    if (auto ip = r.string("inner_product")) {
        if (*ip == "pairwise") {
            c.inner = InnerProduct::Pairwise;
        } else if (*ip == "euclidean") {
            c.inner = InnerProduct::Euclidean;
        } else {
            r.fail("inner_product", "expected \"pairwise\" or \"euclidean\"");
        }
    }

    if (r.has("initial")) {
        const Reader ir(r.at("initial"), r.path("initial"));
        ir.allow({"kind", "seed", "x_box", "y_box", "x", "y"});
        const std::string kind = ir.string("kind").value_or("random_box");
        if (kind == "random_box") {
            c.initial.kind = InitialSpec::Kind::RandomBox;
            if (ir.has("x") || ir.has("y")) ir.fail("explicit coordinates need kind \"explicit\"");
            c.initial.seed = ir.count("seed").value_or(c.initial.seed);
            c.initial.x_box = ir.nonnegative("x_box").value_or(c.initial.x_box);
            c.initial.y_box = ir.nonnegative("y_box").value_or(c.initial.y_box);
        } else if (kind == "explicit") {
            c.initial.kind = InitialSpec::Kind::Explicit;
            if (!ir.has("x") || !ir.has("y")) ir.fail("explicit initial state needs both x and y");
            c.initial.x = parse_matrix(ir, "x", c.k, c.d_x);
            c.initial.y = parse_matrix(ir, "y", c.k, c.d);
        } else {
            ir.fail("kind", "expected \"random_box\" or \"explicit\"");
        }
    }

    const KernelSpec default_kernel = continuous ? KernelSpec::rational_squared(0.1, coupled ? 0.0 : 0.25)
                                                 : KernelSpec::rational(0.1, coupled ? 0.0 : 0.25);
    SystemParams& p = c.params;
    p.variant = c.variant;
    p.inner = c.inner;

    const Json empty = Json::object();
    const Reader pr(r.has("params") ? r.at("params") : empty, r.path("params"));
    if (coupled) {
        pr.allow({"gain1", "gain2", "beta1", "beta2", "step1", "step2"});
        auto& cp = p.coupled;
        cp.kernel_x = r.has("kernel_x") ? parse_kernel(Reader(r.at("kernel_x"), r.path("kernel_x")), default_kernel)
                                        : default_kernel;
        cp.kernel_y = r.has("kernel_y") ? parse_kernel(Reader(r.at("kernel_y"), r.path("kernel_y")), default_kernel)
                                        : default_kernel;
        // Discrete: gain1 bounds the x contraction, coupled through y.
        // Continuous: gain1 bounds the coercivity of the x-weighted coupling.
        const KernelSpec& k1 = continuous ? cp.kernel_x : cp.kernel_y;
        const KernelSpec& k2 = continuous ? cp.kernel_y : cp.kernel_x;
        const double kd = static_cast<double>(c.k);
        cp.gain1 = pr.positive("gain1").value_or(kd * kernel_floor(k1));
        cp.gain2 = pr.positive("gain2").value_or(kd * kernel_floor(k2));
        cp.beta1 = pr.nonnegative("beta1").value_or(k1.kind == KernelKind::Table ? 0.0 : k1.beta);
        cp.beta2 = pr.nonnegative("beta2").value_or(k2.kind == KernelKind::Table ? 0.0 : k2.beta);
        cp.step1 = pr.positive("step1").value_or(0.5 / cp.gain1);
        cp.step2 = pr.positive("step2").value_or(0.5 / cp.gain2);
    } else {
        pr.allow({"gain", "beta", "step", "C", "gamma", "delta", "j_factor"});
        auto& sp = p.single;
        sp.kernel = r.has("kernel") ? parse_kernel(Reader(r.at("kernel"), r.path("kernel")), default_kernel)
                                    : default_kernel;
        sp.gain = pr.positive("gain").value_or(static_cast<double>(c.k) * kernel_floor(sp.kernel));
        sp.beta = pr.nonnegative("beta").value_or(sp.kernel.kind == KernelKind::Table ? 0.0 : sp.kernel.beta);
        sp.step = pr.positive("step").value_or(0.5 / sp.gain);
        const double factor = pr.number("j_factor", 1.0);
        const double C = pr.positive("C").value_or(std::abs(factor));
        const double gamma = pr.nonnegative("gamma").value_or(0.0);
        const double delta = pr.positive("delta").value_or(1.0);
        if (factor == 1.0 && !pr.has("C") && !pr.has("gamma") && !pr.has("delta")) {
            sp.j = JOperator::identity();
        } else {
            sp.j = JOperator::scaled(factor, C, gamma, delta);
        }
    }
    try {
        p.validate();
    } catch (const Error& e) {
        pr.fail(e.what());
    }

    if (coupled) {
        NoiseConfig shared;
        if (r.has("noise")) shared = parse_noise(Reader(r.at("noise"), r.path("noise")), shared);
        c.noise_x = r.has("noise_x") ? parse_noise(Reader(r.at("noise_x"), r.path("noise_x")), shared) : shared;
        c.noise_y = r.has("noise_y") ? parse_noise(Reader(r.at("noise_y"), r.path("noise_y")), shared) : shared;
    } else if (r.has("noise")) {
        c.noise_y = parse_noise(Reader(r.at("noise"), r.path("noise")), {});
    }

    if (r.has("path")) {
        const Reader pa(r.at("path"), r.path("path"));
        pa.allow({"refresh", "ou_rate", "amplitude", "bound_paths"});
        c.refresh = pa.positive("refresh").value_or(c.refresh);
        c.ou_rate = pa.nonnegative("ou_rate").value_or(c.ou_rate);
        c.amplitude = pa.nonnegative("amplitude").value_or(c.amplitude);
        c.path_bound_paths = pa.count("bound_paths").value_or(c.path_bound_paths);
        if (c.path_bound_paths == 0) pa.fail("bound_paths", "must be >= 1");
        if (c.ou_rate > 0.0) {
            for (const NoiseConfig* n : {&c.noise_x, &c.noise_y}) {
                if (n->law.kind != NoiseKind::Gaussian && !n->law.is_zero()) {
                    pa.fail("ou_rate", "the OU process needs Gaussian noise");
                }
            }
        }
    }

    if (r.has("targets")) {
        const Reader tr(r.at("targets"), r.path("targets"));
        tr.allow({"mu", "nu", "mu_rel", "nu_rel"});
        c.targets.mu = tr.positive("mu");
        c.targets.nu = tr.positive("nu");
        c.mu_rel = tr.positive("mu_rel");
        c.nu_rel = tr.positive("nu_rel");
        if (c.targets.mu && c.mu_rel) tr.fail("give mu or mu_rel, not both");
        if (c.targets.nu && c.nu_rel) tr.fail("give nu or nu_rel, not both");
    }
    if (!c.targets.nu && !c.nu_rel) {
        c.nu_rel = 0.01;
        c.defaulted.push_back("targets.nu_rel");
    }
    if (coupled && !c.targets.mu && !c.mu_rel) {
        c.mu_rel = 0.01;
        c.defaulted.push_back("targets.mu_rel");
    }

    if (auto t = r.string("theorem")) {
        auto th = theorem_from_string(*t);
        if (!th) r.fail("theorem", "unknown theorem '" + *t + "'");
        if (!theorem_matches(*th, c.variant)) r.fail("theorem", "'" + *t + "' does not apply to " + to_string(c.variant));
        c.theorem = th;
    }

    if (r.has("horizon")) {
        const Reader hr(r.at("horizon"), r.path("horizon"));
        hr.allow({"factor", "steps", "time", "dt"});
        if (auto f = hr.positive("factor")) {
            c.horizon.factor = *f;
        } else {
            c.defaulted.push_back("horizon.factor");
        }
        c.horizon.steps = hr.count("steps");
        c.horizon.time = hr.positive("time");
        c.horizon.dt = hr.positive("dt").value_or(c.horizon.dt);
        if (c.horizon.steps && continuous) hr.fail("steps", "continuous systems take horizon.time");
        if (c.horizon.time && !continuous) hr.fail("time", "discrete systems take horizon.steps");
    } else {
        c.defaulted.push_back("horizon.factor");
    }

    if (auto in = r.string("integrator")) {
        if (*in == "euler") {
            c.integrator = Integrator::Euler;
        } else if (*in == "rk4") {
            c.integrator = Integrator::RK4;
            if (!c.noise_x.law.is_zero() || !c.noise_y.law.is_zero()) {
                r.fail("integrator", "rk4 is only available without noise");
            }
        } else {
            r.fail("integrator", "expected \"euler\" or \"rk4\"");
        }
    }

    if (auto n = r.count("trials")) {
        c.trials = *n;
    } else {
        c.defaulted.push_back("trials");
    }
    if (c.trials < 1) r.fail("trials", "must be >= 1");
    c.seed = r.count("seed").value_or(c.seed);
    if (auto t = r.count("threads")) {
        if (*t < 1 || *t > 1024) r.fail("threads", "must be between 1 and 1024");
        c.threads = static_cast<unsigned>(*t);
    }
    return c;
}

ScenarioConfig parse_config_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        config_error(std::string("config: not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

namespace {

SystemState initial_state(const ScenarioConfig& c) {
    Matrix x;
    Matrix y;
    if (c.initial.kind == InitialSpec::Kind::Explicit) {
        x = c.initial.x;
        y = c.initial.y;
    } else {
        std::mt19937_64 engine(SeedStream(c.initial.seed).engine_seed(0));
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        x.resize(c.k, c.d_x);
        y.resize(c.k, c.d);
        for (Index i = 0; i < c.k; ++i) {
            for (Index j = 0; j < c.d_x; ++j) x(i, j) = c.initial.x_box * unit(engine);
            for (Index j = 0; j < c.d; ++j) y(i, j) = c.initial.y_box * unit(engine);
        }
    }
    SystemState s;
    s.x = project_to_quotient(x);
    s.y = project_to_quotient(y);
    s.y_mean = y.colwise().mean();
    return s;
}

NoiseSpec resolve_clip(const NoiseConfig& n, double tolerance, const char* which) {
    switch (n.clip.mode) {
    case ClipSpec::Mode::None: return n.law.unclipped();
    case ClipSpec::Mode::Factor: return n.law.clipped(n.clip.factor);
    case ClipSpec::Mode::Tolerance:
        if (!std::isfinite(tolerance) || !(tolerance >= 0.0)) {
            config_error(std::string("config.") + which + ".clip: the noise tolerance is not available");
        }
        return n.law.clipped(tolerance);
    }
    return n.law;
}

NoiseCdfs noise_cdfs(const Scenario& s) {
    const Index m_x = intrinsic_dim(s.config.k, s.config.d_x);
    const Index m_y = intrinsic_dim(s.config.k, s.config.d);
    PathBoundOptions opts;
    opts.paths = s.config.path_bound_paths;
    opts.seed = SeedStream(s.config.seed).derive(0xB0B0).seed();

    NoiseCdfs cdfs;
    const NoiseSpec nx = s.noise_x.unclipped();
    const NoiseSpec ny = s.noise_y.unclipped();
    cdfs.f = [ny, m_y](double x) { return norm_cdf(ny, m_y, x); };
    cdfs.f1 = [nx, m_x](double x) { return norm_cdf(nx, m_x, x); };
    cdfs.f2 = cdfs.f;
    PathNoiseSpec px = s.path_x;
    PathNoiseSpec py = s.path_y;
    px.base = nx;
    py.base = ny;
    cdfs.path = [py, m_y, opts](double x, double T) { return path_bound(py, m_y, x, T, opts); };
    cdfs.path1 = [px, m_x, opts](double x, double T) { return path_bound(px, m_x, x, T, opts); };
    cdfs.path2 = cdfs.path;
    const bool continuous = is_continuous(s.config.variant);
    cdfs.noise_x_zero = continuous ? s.path_x.is_zero() : s.noise_x.is_zero();
    cdfs.noise_y_zero = continuous ? s.path_y.is_zero() : s.noise_y.is_zero();
    return cdfs;
}

}  // namespace

Scenario build_scenario(const ScenarioConfig& config) {
    Scenario s;
    s.config = config;
    s.params = config.params;
    s.initial = initial_state(config);
    const double nx0 = quotient_norm(s.initial.x, config.inner);
    const double ny0 = quotient_norm(s.initial.y, config.inner);

    s.targets = config.targets;
    if (config.mu_rel) s.targets.mu = *config.mu_rel * nx0;
    if (config.nu_rel) s.targets.nu = *config.nu_rel * ny0;
    if (s.targets.mu && !(*s.targets.mu > 0.0)) config_error("config.targets.mu_rel: ||x(0)|| is zero");
    if (s.targets.nu && !(*s.targets.nu > 0.0)) config_error("config.targets.nu_rel: ||y(0)|| is zero");

    s.operator_report = verify_operator_hypotheses(s.initial.x, s.initial.y, s.params);
    if (!is_coupled(config.variant)) {
        const auto j = j_operator(s.initial.x, s.initial.y, s.params.single.j, is_continuous(config.variant),
                                  config.inner);
        s.operator_report.add("J growth bound at the initial state", "<=", j.norm, j.bound);
    }
    s.certified = s.operator_report.all_pass();
    try {
        s.constants = compute_constants(s.initial, s.params, s.targets);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Domain) throw;
        config_error(std::string("config.initial: ") + e.what());
    }

    const bool coupled = is_coupled(config.variant);
    if (coupled) {
        s.noise_x = resolve_clip(config.noise_x, s.constants.tol1, "noise_x");
        s.noise_y = resolve_clip(config.noise_y, s.constants.tol2, "noise_y");
    } else {
        s.noise_y = resolve_clip(config.noise_y, s.constants.tol0, "noise");
    }
    for (auto [spec, path] : {std::pair{&s.noise_x, &s.path_x}, std::pair{&s.noise_y, &s.path_y}}) {
        path->base = *spec;
        path->refresh = config.refresh;
        path->ou_rate = config.ou_rate;
        path->amplitude = config.amplitude;
    }

    const Theorem theorem = config.theorem.value_or(default_theorem(config.variant));
    s.bound = probability_bound(theorem, s.constants, noise_cdfs(s), s.targets);

    RunOptions& run = s.run;
    run.mu = s.targets.mu;
    run.nu = s.targets.nu;
    run.integrator = config.integrator;
    run.store_states = theorem == Theorem::DiscreteIJoint || theorem == Theorem::ContinuousIJoint;
    const double h = s.bound.applicable ? s.bound.horizon : std::numeric_limits<double>::quiet_NaN();
    if (is_continuous(config.variant)) {
        run.dt = config.horizon.dt;
        if (config.horizon.time) {
            run.max_time = *config.horizon.time;
        } else if (std::isfinite(h)) {
            run.max_time = config.horizon.factor * std::max(h, run.dt);
        } else {
            run.max_time = 10.0;
        }
    } else if (config.horizon.steps) {
        run.max_steps = *config.horizon.steps;
    } else if (std::isfinite(h)) {
        run.max_steps = static_cast<std::uint64_t>(std::ceil(config.horizon.factor * std::max(h, 1.0)));
    } else {
        run.max_steps = 1000;
    }
    return s;
}

namespace {

constexpr double kTimeSlack = 1e-9;

bool cauchy_tail_holds(const Trace& trace, double from, double mu, bool by_time) {
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        const double at = by_time ? trace.rows[i].time : static_cast<double>(trace.rows[i].step);
        if (at + kTimeSlack < from) continue;
        for (std::size_t j = i + 1; j < trace.rows.size(); ++j) {
            const Matrix diff = trace.xs[j].values() - trace.xs[i].values();
            if (quotient_norm(project_to_quotient(diff), trace.inner) > mu) return false;
        }
    }
    return true;
}

bool within(std::optional<std::uint64_t> step, double horizon) {
    return step && static_cast<double>(*step) <= horizon;
}

bool within(std::optional<double> time, double horizon) {
    return time && *time <= horizon + kTimeSlack * std::max(1.0, horizon);
}

bool theorem_event(const Scenario& s, const Trace& trace, const EmergenceTimes& e) {
    const BoundReport& b = s.bound;
    if (!b.applicable) return false;
    const auto& k = s.constants;
    switch (b.theorem) {
    case Theorem::DiscreteI: return within(e.step_y, b.horizon);
    case Theorem::DiscreteIJoint:
        return within(e.step_y, b.horizon) && cauchy_tail_holds(trace, b.horizon, *s.targets.mu, false);
    case Theorem::DiscreteII: return within(e.step_x, b.horizon) && within(e.step_y, b.horizon);
    case Theorem::ContinuousI: return within(e.time_y, b.horizon);
    case Theorem::ContinuousIJoint:
        return within(e.time_y, b.horizon) && cauchy_tail_holds(trace, b.horizon, *s.targets.mu, true);
    case Theorem::ContinuousII: return within(e.time_x, b.horizon) || within(e.time_y, b.horizon);
    case Theorem::Corollary: return within(e.time_x, *k.t2) && within(e.time_y, *k.t3);
    }
    return false;
}

// All noise values applied before the bound stayed below the event thresholds.
bool clipping_event(const Scenario& s, const Trace& trace) {
    const BoundReport& b = s.bound;
    if (!b.applicable) return false;
    const bool continuous = is_continuous(s.config.variant);
    const bool coupled = is_coupled(s.config.variant);
    for (const auto& r : trace.rows) {
        const double at = continuous ? r.time : static_cast<double>(r.step);
        if (at + (continuous ? kTimeSlack : 0.5) >= b.horizon) break;
        if (r.noise_norm_y > b.threshold_y) return false;
        if (coupled && r.noise_norm_x > b.threshold_x) return false;
    }
    return true;
}

}  // namespace

TrialResult run_trial(const Scenario& s, std::uint64_t index, Trace* trace_out) {
    const SeedStream trial = SeedStream(s.config.seed).derive(index);
    const SeedStream sx = trial.derive(1);
    const SeedStream sy = trial.derive(2);

    Trace trace;
    switch (s.config.variant) {
    case SystemVariant::DiscreteI: trace = simulate_ID(s.initial, s.params, s.noise_y, sy, s.run); break;
    case SystemVariant::DiscreteII:
        trace = simulate_IID(s.initial, s.params, s.noise_x, s.noise_y, sx, sy, s.run);
        break;
    case SystemVariant::ContinuousI: trace = integrate_IC(s.initial, s.params, s.path_y, sy, s.run); break;
    case SystemVariant::ContinuousII:
        trace = integrate_IIC(s.initial, s.params, s.path_x, s.path_y, sx, sy, s.run);
        break;
    }

    TrialResult t;
    t.index = index;
    t.seed = trial.seed();
    t.times = detect_emergence(trace, s.targets.mu, s.targets.nu);
    t.reached_x = t.times.step_x.has_value();
    t.reached_y = t.times.step_y.has_value();
    t.blew_up = trace.blew_up;
    t.j_violations = trace.j_violations;
    t.diagnostic = trace.diagnostic;
    if (!trace.rows.empty()) {
        t.final_norm_x = trace.rows.back().norm_x;
        t.final_norm_y = trace.rows.back().norm_y;
    }
    t.event = !trace.blew_up && theorem_event(s, trace, t.times);
    t.within_clipping_event = clipping_event(s, trace);
    const TrajectoryReport report = verify_trajectory(trace, s.constants, s.params, s.targets);
    t.envelopes_checked = !report.skipped;
    for (const auto& c : report.checks) t.envelope_violations += c.violations;
    if (trace_out) *trace_out = std::move(trace);
    return t;
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z) {
    if (n == 0) domain_error("wilson_interval: n must be positive");
    if (successes > n) domain_error("wilson_interval: more successes than trials");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
    // the limits are exactly 0 and 1 at the extremes; rounding must not move them
    const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = successes == n ? 1.0 : std::min(1.0, centre + half);
    return {lo, hi};
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Respected: return "respected";
    case Verdict::Violated: return "violated";
    case Verdict::Inapplicable: return "inapplicable";
    }
    return "?";
}

MonteCarloSummary monte_carlo(const Scenario& s, std::uint64_t n, unsigned threads) {
    if (n < 1) domain_error("monte_carlo: N must be >= 1");
    std::vector<TrialResult> results(n);
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::uint64_t>(n, 1024))));

    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::uint64_t i = next++; i < n; i = next++) {
            try {
                results[i] = run_trial(s, i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    MonteCarloSummary m;
    m.n = n;
    for (const auto& r : results) {
        m.successes += r.event ? 1 : 0;
        m.clipping_event_count += r.within_clipping_event ? 1 : 0;
        m.envelope_violations += r.envelope_violations;
        m.blow_ups += r.blew_up ? 1 : 0;
        m.j_violations += r.j_violations;
    }
    m.empirical = static_cast<double>(m.successes) / static_cast<double>(n);
    m.wilson = wilson_interval(m.successes, n);
    m.bound_report = s.bound;
    m.bound = s.bound.probability;
    if (!s.applicable()) {
        m.verdict = Verdict::Inapplicable;
    } else if (m.j_violations > 0) {
        // J left its declared growth bound along some run
        m.verdict = Verdict::Inapplicable;
    } else if (m.bound > m.wilson.hi) {
        m.verdict = Verdict::Violated;
    } else {
        m.verdict = Verdict::Respected;
    }
    return m;
}

namespace {

Json number(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

Json number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

template <typename T>
Json optional_int(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

Json metadata(const ScenarioConfig& c) {
    Json m;
    m["defaulted"] = c.defaulted;
    m["note"] = "defaulted fields use desk-scale artifact choices (k=10, d=3, N=1000, horizon 4x the time bound)";
    return m;
}

Json scenario_header(const Scenario& s) {
    Json j;
    j["variant"] = to_string(s.config.variant);
    if (!s.config.preset.empty()) j["preset"] = s.config.preset;
    j["k"] = s.config.k;
    j["d"] = s.config.d;
    if (is_coupled(s.config.variant)) j["d_x"] = s.config.d_x;
    j["inner_product"] = s.config.inner == InnerProduct::Pairwise ? "pairwise" : "euclidean";
    j["mu"] = number(s.targets.mu);
    j["nu"] = number(s.targets.nu);
    return j;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string csv_number(double v) {
    if (std::isnan(v)) return "";
    return Json(v).dump();
}

void set_path(Json& doc, const std::string& dotted, const Json& value) {
    Json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) config_error("grid: malformed parameter path '" + dotted + "'");
        if (!node->is_object()) config_error("grid: '" + dotted + "' runs through a non-object");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key)) (*node)[key] = Json::object();
        node = &(*node)[key];
        start = dot + 1;
    }
}

}  // namespace

Json to_json(const HypothesisReport& report) {
    Json out = Json::array();
    for (const auto& c : report.checks) {
        Json j;
        j["name"] = c.name;
        j["relation"] = c.relation;
        j["lhs"] = number(c.lhs);
        j["rhs"] = number(c.rhs);
        j["slack"] = number(c.slack());
        j["pass"] = c.pass;
        out.push_back(std::move(j));
    }
    return out;
}

Json to_json(const EmergenceConstants& k) {
    Json j;
    j["variant"] = to_string(k.variant);
    j["norm_x0"] = number(k.norm_x0);
    j["norm_y0"] = number(k.norm_y0);
    if (!is_coupled(k.variant)) {
        j["regime"] = to_string(k.regime);
        j["case_holds"] = k.case_holds;
        if (!is_continuous(k.variant)) j["Q"] = number(k.q);
        j["a"] = number(k.a);
        j["b"] = number(k.b);
        if (is_continuous(k.variant)) j["alpha"] = number(k.alpha);
        j["U0"] = number(k.u0);
        j["B0"] = number(k.b0);
        if (is_continuous(k.variant)) j["B1"] = number(k.b1);
        j["H0"] = number(k.tol0);
        if (!is_continuous(k.variant)) j["h_max"] = number(k.h_max);
        j["T0"] = number(k.t0);
        j["T1"] = number(k.t1);
        if (is_continuous(k.variant)) {
            j["formula_notes"] = {
                "H0 = 2^(-beta-1) K / U0^beta: the published display writes G, which the continuous "
                "system does not define",
                "T0 and T1 use B0^beta as published, where the discrete analogue uses U0^beta",
            };
        }
    } else {
        j["H1"] = number(k.tol1);
        j["H2"] = number(k.tol2);
        j["T2"] = number(k.t2);
        j["T3"] = number(k.t3);
    }
    j["hypotheses"] = to_json(k.hypotheses);
    j["applicable"] = k.applicable();
    j["notes"] = k.notes;
    return j;
}

Json to_json(const BoundReport& b) {
    Json j;
    j["theorem"] = to_string(b.theorem);
    j["applicable"] = b.applicable;
    j["probability"] = number(b.probability);
    j["horizon"] = number(b.horizon);
    j["time_bound"] = number(b.raw_horizon);
    j["threshold_x"] = number(b.threshold_x);
    j["threshold_y"] = number(b.threshold_y);
    j["notes"] = b.notes;
    return j;
}

Json to_json(const TrialResult& t) {
    Json j;
    j["index"] = t.index;
    j["seed"] = t.seed;
    j["emergence_step_x"] = optional_int(t.times.step_x);
    j["emergence_step_y"] = optional_int(t.times.step_y);
    j["emergence_time_x"] = number(t.times.time_x);
    j["emergence_time_y"] = number(t.times.time_y);
    j["reached_x"] = t.reached_x;
    j["reached_y"] = t.reached_y;
    j["event"] = t.event;
    j["within_clipping_event"] = t.within_clipping_event;
    j["envelopes_checked"] = t.envelopes_checked;
    j["envelope_violations"] = t.envelope_violations;
    j["final_norm_x"] = number(t.final_norm_x);
    j["final_norm_y"] = number(t.final_norm_y);
    j["j_violations"] = t.j_violations;
    j["blew_up"] = t.blew_up;
    if (!t.diagnostic.empty()) j["diagnostic"] = t.diagnostic;
    return j;
}

Json to_json(const TrajectoryReport& r) {
    Json j;
    j["skipped"] = r.skipped;
    if (!r.notice.empty()) j["notice"] = r.notice;
    Json checks = Json::array();
    for (const auto& c : r.checks) {
        Json e;
        e["name"] = c.name;
        e["evaluated"] = c.evaluated;
        e["violations"] = c.violations;
        e["first_violation_step"] = optional_int(c.first_violation_step);
        e["worst_slack"] = number(c.worst_slack);
        checks.push_back(std::move(e));
    }
    j["checks"] = std::move(checks);
    j["all_hold"] = r.all_hold();
    return j;
}

Json to_json(const MonteCarloSummary& m, const Scenario& s) {
    Json j = scenario_header(s);
    j["theorem"] = to_string(m.bound_report.theorem);
    j["seed"] = s.config.seed;
    j["n"] = m.n;
    j["successes"] = m.successes;
    j["empirical"] = number(m.empirical);
    j["wilson_lo"] = number(m.wilson.lo);
    j["wilson_hi"] = number(m.wilson.hi);
    j["bound"] = number(m.bound);
    j["horizon"] = number(m.bound_report.horizon);
    j["time_bound"] = number(m.bound_report.raw_horizon);
    j["verdict"] = to_string(m.verdict);
    j["certified"] = s.certified;
    j["applicable"] = s.applicable();
    j["clipping_event_count"] = m.clipping_event_count;
    j["envelope_violations"] = m.envelope_violations;
    j["blow_ups"] = m.blow_ups;
    j["j_violations"] = m.j_violations;
    j["notes"] = m.bound_report.notes;
    j["metadata"] = metadata(s.config);
    return j;
}

Json constants_document(const Scenario& s) {
    Json j = scenario_header(s);
    j["constants"] = to_json(s.constants);
    j["certified"] = s.certified;
    j["bound"] = to_json(s.bound);
    j["metadata"] = metadata(s.config);
    return j;
}

Json check_document(const Scenario& s) {
    Json j = scenario_header(s);
    j["certified"] = s.certified;
    j["operator_hypotheses"] = to_json(s.operator_report);
    j["theorem_hypotheses"] = to_json(s.constants.hypotheses);
    j["applicable"] = s.applicable();
    j["notes"] = s.bound.notes;
    return j;
}

std::string sweep(const Json& base, const Json& grid, std::optional<std::uint64_t> n) {
    if (!grid.is_object()) config_error("grid: expected an object of parameter path -> list of values");
    std::vector<std::string> keys;
    std::vector<const Json*> values;
    for (const auto& [key, list] : grid.items()) {
        if (!list.is_array()) config_error("grid." + key + ": expected a list of values");
        keys.push_back(key);
        values.push_back(&list);
    }

    std::ostringstream out;
    for (const auto& key : keys) out << csv_cell(key) << ',';
    out << "n,empirical,wilson_lo,wilson_hi,bound,time_bound,verdict,error\n";
    if (keys.empty()) return out.str();
    for (const Json* v : values) {
        if (v->empty()) return out.str();
    }

    std::vector<std::size_t> at(keys.size(), 0);
    while (true) {
        Json doc = base;
        for (std::size_t i = 0; i < keys.size(); ++i) {
            const Json& v = (*values[i])[at[i]];
            out << csv_cell(v.is_string() ? v.get<std::string>() : v.dump()) << ',';
            set_path(doc, keys[i], v);
        }
        try {
            const ScenarioConfig config = parse_config(doc);
            const Scenario s = build_scenario(config);
            const MonteCarloSummary m = monte_carlo(s, n.value_or(config.trials), config.threads);
            out << m.n << ',' << csv_number(m.empirical) << ',' << csv_number(m.wilson.lo) << ','
                << csv_number(m.wilson.hi) << ',' << csv_number(m.bound) << ','
                << (s.bound.applicable ? csv_number(s.bound.raw_horizon) : "") << ',' << to_string(m.verdict)
                << ",\n";
        } catch (const Error& e) {
            out << ",,,,,,," << csv_cell(e.what()) << '\n';
        }
        // odometer, last key fastest
        std::size_t i = keys.size();
        while (i > 0) {
            --i;
            if (++at[i] < values[i]->size()) break;
            at[i] = 0;
            if (i == 0) return out.str();
        }
    }
}

}  // namespace emergence
