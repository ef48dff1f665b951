#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emergence/error.hpp"
#include "emergence/theory.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace emergence;

namespace {

QuotientVector q1(std::initializer_list<double> v) {
    Matrix m(static_cast<Index>(v.size()), 1);
    Index i = 0;
    for (double e : v) m(i++, 0) = e;
    return project_to_quotient(m);
}

// ||y|| = 2 |e| for the pair (e, -e) under the pairwise inner product
QuotientVector pair_with_norm(double n) { return q1({0.5 * n, -0.5 * n}); }

SystemState state_of(QuotientVector x, QuotientVector y) {
    SystemState s;
    s.x = std::move(x);
    s.y = std::move(y);
    s.y_mean = Eigen::RowVectorXd::Zero(s.y.dim());
    return s;
}

SystemParams single(SystemVariant v, double gain, double beta, double gamma, double delta, double C, double h) {
    SystemParams p;
    p.variant = v;
    p.single.gain = gain;
    p.single.beta = beta;
    p.single.step = h;
    p.single.j = JOperator::scaled(1.0, C, gamma, delta);
    p.single.kernel = v == SystemVariant::DiscreteI ? KernelSpec::rational(gain / 2, beta)
                                                    : KernelSpec::rational_squared(gain / 2, beta);
    return p;
}

SystemParams coupled(SystemVariant v, double g1, double g2, double b1, double b2, double h1, double h2) {
    SystemParams p;
    p.variant = v;
    p.coupled.gain1 = g1;
    p.coupled.gain2 = g2;
    p.coupled.beta1 = b1;
    p.coupled.beta2 = b2;
    p.coupled.step1 = h1;
    p.coupled.step2 = h2;
    p.coupled.kernel_x = KernelSpec::rational(0.5 * g2, 0.0);
    p.coupled.kernel_y = KernelSpec::rational(0.5 * g1, 0.0);
    return p;
}

double M(double z, double s, double q, double c1, double c2) { return std::pow(z, s) - c1 * std::pow(z, q) - c2; }

}  // namespace

TEST_CASE("Q(delta)") {
    CHECK(q_of_delta(2.0) == 1.0);
    CHECK(q_of_delta(1.0) == 1.0);
    CHECK(q_of_delta(0.25) == 4.0);
    CHECK_THROWS_AS(q_of_delta(0.0), Error);
    CHECK_THROWS_AS(q_of_delta(-1.0), Error);
}

TEST_CASE("positive root examples") {
    CHECK(positive_root(2, 1, 1, 2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(positive_root(2, 1, 3, 4) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(positive_root_bound(2, 1, 3, 4) == doctest::Approx(6.0));
    const double z = positive_root(1.5, 0.5, 1, 1);
    const double oracle_z = oracle::bisect([](double v) { return M(v, 1.5, 0.5, 1, 1); }, 0.0, 2.0);
    CHECK(std::abs(z - oracle_z) <= 1e-10);
    CHECK_THROWS_AS(positive_root(1, 2, 1, 1), Error);
    CHECK_THROWS_AS(positive_root(2, 1, 0, 1), Error);
}

TEST_CASE("positive root against bisection on random instances") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.05, 4.0);
    std::uniform_real_distribution<double> c(0.01, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const double q = u(rng);
        const double s = q + u(rng);
        const double c1 = c(rng);
        const double c2 = c(rng);
        const double z = positive_root(s, q, c1, c2);
        const double bound = positive_root_bound(s, q, c1, c2);
        const double expect = oracle::bisect([&](double v) { return M(v, s, q, c1, c2); }, 0.0, bound + 1.0, 1e-15);
        CHECK(std::abs(z - expect) <= 1e-10 * std::max(1.0, expect));
        CHECK(z <= bound);
        CHECK(std::abs(M(z, s, q, c1, c2)) <= 1e-10 * std::max(1.0, c2) * std::max(1.0, std::pow(z, s)));
    }
}

TEST_CASE("I(D) constants worked example") {
    const auto p = single(SystemVariant::DiscreteI, 1, 0.5, 0, 1, 1, 0.1);
    const auto s = state_of(QuotientVector::zero(2, 1), pair_with_norm(0.5));
    Targets t;
    t.nu = 0.05;
    const auto k = constants_ID(s, p, t);
    CHECK(k.norm_y0 == doctest::Approx(0.5));
    CHECK(k.q == 1.0);
    CHECK(k.a == doctest::Approx(1.0));
    CHECK(k.b == doctest::Approx(1.0));
    CHECK(k.u0 == doctest::Approx(4.0));
    CHECK(k.b0 == doctest::Approx(3.0));
    CHECK(k.tol0 == doctest::Approx(1.0 / (4.0 * std::sqrt(2.0))));
    CHECK(k.tol0 == doctest::Approx(0.17678).epsilon(1e-4));
    CHECK(k.h_max == doctest::Approx(1.0));
    REQUIRE(k.t0);
    CHECK(*k.t0 == doctest::Approx(40.0 * std::log(10.0)));
    CHECK(*k.t0 == doctest::Approx(92.103).epsilon(1e-4));
    CHECK(k.regime == Regime::Sub);
    CHECK(k.applicable());
}

TEST_CASE("I(D) critical case and zero horizons") {
    // beta + gamma = 1 with a = 0.8 < 1
    auto p = single(SystemVariant::DiscreteI, 1, 1, 0, 1, 1, 0.1);
    const auto s = state_of(QuotientVector::zero(2, 1), pair_with_norm(0.4));
    auto k = constants_ID(s, p, {});
    CHECK(k.regime == Regime::Critical);
    CHECK(k.a == doctest::Approx(0.8));
    CHECK(k.u0 == doctest::Approx(k.b / (1 - k.a)));
    CHECK(k.u0 == doctest::Approx(5.0));

    Targets t;
    t.mu = k.a * std::pow(k.u0, 1.0);
    t.nu = k.norm_y0;
    k = constants_ID(s, p, t);
    REQUIRE(k.t1);
    CHECK(*k.t1 == 0.0);
    REQUIRE(k.t0);
    CHECK(*k.t0 == 0.0);

    t.nu = 2 * k.norm_y0;
    k = constants_ID(s, p, t);
    CHECK_FALSE(k.t0);
    CHECK_FALSE(k.notes.empty());

    CHECK_THROWS_AS(constants_ID(state_of(QuotientVector::zero(2, 1), QuotientVector::zero(2, 1)), p, {}), Error);
}

TEST_CASE("discrete type-I case checks") {
    auto p = single(SystemVariant::DiscreteI, 1, 0.25, 0.25, 1, 1, 0.1);
    auto c = check_hypotheses_thm1(state_of(QuotientVector::zero(2, 1), pair_with_norm(0.3)), p);
    CHECK(c.regime == Regime::Sub);
    CHECK(c.pass());
    CHECK(c.report.checks.size() == 3);  // case, h < 1/G, h < h_max

    p = single(SystemVariant::DiscreteI, 1, 1, 0, 1, 1, 0.1);
    c = check_hypotheses_thm1(state_of(QuotientVector::zero(2, 1), pair_with_norm(0.4)), p);
    CHECK(c.regime == Regime::Critical);
    CHECK(c.report.checks.front().pass);
    CHECK(c.report.checks.front().rhs == doctest::Approx(0.5));
    c = check_hypotheses_thm1(state_of(QuotientVector::zero(2, 1), pair_with_norm(0.6)), p);
    CHECK_FALSE(c.report.checks.front().pass);
    CHECK_FALSE(c.pass());

    p = single(SystemVariant::DiscreteI, 1, 1.5, 0, 1, 1, 0.1);
    c = check_hypotheses_thm1(state_of(QuotientVector::zero(2, 1), pair_with_norm(0.01)), p);
    CHECK(c.regime == Regime::Super);

    // a step at 1/G fails the step condition
    p = single(SystemVariant::DiscreteI, 1, 0.25, 0, 1, 1, 1.0);
    CHECK_FALSE(check_hypotheses_thm1(state_of(QuotientVector::zero(2, 1), pair_with_norm(0.3)), p).pass());
}

TEST_CASE("U0 solves the auxiliary inequality and H0 < G/2") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (int i = 0; i < 500; ++i) {
        const double gamma = 0.9 * u(rng);
        const double beta = (1.0 - gamma) * 0.95 * u(rng);
        const double delta = 0.2 + 2 * u(rng);
        const double C = 0.1 + 3 * u(rng);
        const double G = 0.1 + 3 * u(rng);
        const auto p = single(SystemVariant::DiscreteI, G, beta, gamma, delta, C, 0.5 / G);
        Matrix x(3, 1);
        x << 2 * u(rng), -u(rng), 0.0;
        const auto s = state_of(project_to_quotient(x), q1({u(rng), -u(rng), 0.3}));
        const auto k = constants_ID(s, p, {});
        REQUIRE(k.regime == Regime::Sub);
        CHECK(k.u0 - k.a * std::pow(k.u0, beta + gamma) - k.b >= -1e-9 * k.u0);
        if (beta > 0) {
            CHECK(k.tol0 < G / 2);
        } else {
            CHECK(k.tol0 == doctest::Approx(G / 2));
        }
        CHECK(k.u0 > 1.0);
        ++checked;
    }
    CHECK(checked == 500);
}

TEST_CASE("II(D) constants") {
    const auto p = coupled(SystemVariant::DiscreteII, 1, 1, 0, 0, 0.1, 0.1);
    const auto s = state_of(pair_with_norm(1.0), pair_with_norm(0.5));
    Targets t;
    t.mu = 0.1;
    t.nu = 0.5;
    const auto k = constants_IID(s, p, t);
    CHECK(k.tol1 == doctest::Approx(0.5));
    REQUIRE(k.t2);
    CHECK(*k.t2 == doctest::Approx(20.0 * std::log(10.0)));
    CHECK(*k.t2 == doctest::Approx(46.052).epsilon(1e-4));
    CHECK(*k.t3 == 0.0);
    CHECK(k.applicable());

    t.mu = 1.0;
    CHECK(*constants_IID(s, p, t).t2 == 0.0);

    // larger beta1 at a large ||y(0)|| shrinks H1 and stretches T2
    t.mu = 0.1;
    const auto far = state_of(pair_with_norm(1.0), pair_with_norm(5.0));
    double prev_tol = 1e300;
    double prev_t2 = 0.0;
    for (double b1 : {0.0, 0.5, 1.0, 2.0}) {
        const auto kk = constants_IID(far, coupled(SystemVariant::DiscreteII, 1, 1, b1, 0, 0.1, 0.1), t);
        CHECK(kk.tol1 < prev_tol);
        CHECK(*kk.t2 > prev_t2);
        prev_tol = kk.tol1;
        prev_t2 = *kk.t2;
    }

    CHECK_FALSE(constants_IID(s, coupled(SystemVariant::DiscreteII, 1, 1, 0, 0, 1.5, 0.1), t).applicable());
}

TEST_CASE("I(C) constants worked example") {
    const auto p = single(SystemVariant::ContinuousI, 1, 0, 0, 1, 1, 0.1);
    const auto s = state_of(QuotientVector::zero(2, 1), pair_with_norm(0.5));
    Targets t;
    t.nu = 0.05;
    auto k = constants_IC(s, p, t);
    CHECK(k.a == doctest::Approx(0.5));
    CHECK(k.b == doctest::Approx(2.0));
    CHECK(k.alpha == 0.0);
    CHECK(k.u0 == doctest::Approx(4.0));
    CHECK(k.b0 == doctest::Approx(3.0));
    CHECK(k.b1 == doctest::Approx(1.0));
    REQUIRE(k.t0);
    CHECK(*k.t0 == doctest::Approx(2.0 * std::log(10.0)));
    CHECK(*k.t0 == doctest::Approx(4.605).epsilon(1e-3));

    t.mu = k.b1;
    k = constants_IC(s, p, t);
    REQUIRE(k.t1);
    CHECK(*k.t1 == 0.0);
}

TEST_CASE("continuous type-I case checks") {
    // 2 beta + gamma = 1: cap is ((dK)^2 / (2^2 C^2))^(1/2) = 0.5 for d = K = C = 1
    auto p = single(SystemVariant::ContinuousI, 1, 0.5, 0, 1, 1, 0.1);
    auto c = check_hypotheses_thm3(state_of(QuotientVector::zero(2, 1), pair_with_norm(0.4)), p);
    CHECK(c.regime == Regime::Critical);
    CHECK(c.report.checks.front().rhs == doctest::Approx(0.5));
    CHECK(c.pass());
    CHECK_FALSE(check_hypotheses_thm3(state_of(QuotientVector::zero(2, 1), pair_with_norm(0.6)), p).pass());

    // case (iii) compares b against the displayed expression in a and alpha
    p = single(SystemVariant::ContinuousI, 1, 1, 0, 1, 1, 0.1);
    const auto s = state_of(QuotientVector::zero(2, 1), pair_with_norm(0.01));
    c = check_hypotheses_thm3(s, p);
    CHECK(c.regime == Regime::Super);
    const double a = 2 * 2 * 2 * 1e-4;  // 2^(1+2) ||y||^2
    const double alpha = 2.0;
    const double rhs = std::pow(1 / (a * alpha), 1 / (alpha - 1)) * (alpha - 1) / alpha;
    CHECK(c.report.checks.front().rhs == doctest::Approx(rhs));
    CHECK(c.report.checks.front().lhs == doctest::Approx(2.0));
    CHECK(c.pass());
}

TEST_CASE("II(C) constants") {
    const auto p = coupled(SystemVariant::ContinuousII, 1, 1, 0, 0, 0.1, 0.1);
    const auto s = state_of(pair_with_norm(1.0), pair_with_norm(0.5));
    Targets t;
    t.mu = 0.1;
    t.nu = 0.5;
    const auto k = constants_IIC(s, p, t);
    CHECK(k.tol1 == doctest::Approx(0.5));
    CHECK(*k.t2 == doctest::Approx(2.0 * std::log(10.0)));
    CHECK(*k.t3 == 0.0);
    CHECK(*k.t2 == doctest::Approx(std::log(10.0) / k.tol1));

    const auto q = coupled(SystemVariant::ContinuousII, 0.7, 1.3, 0.4, 1.1, 0.1, 0.1);
    const auto s2 = state_of(pair_with_norm(2.0), pair_with_norm(1.5));
    const auto k2 = constants_IIC(s2, q, t);
    CHECK(*k2.t2 == doctest::Approx(std::log(2.0 / 0.1) / k2.tol1));
    CHECK(*k2.t3 == doctest::Approx(std::log(1.5 / 0.5) / k2.tol2));
}

TEST_CASE("discrete and continuous T0 agree at matched parameters") {
    // beta = 0 also puts H0 exactly at G/2
    // with beta = gamma = 0 both decay at half the gain: T0(D) h = T0(C)
    const auto s = state_of(QuotientVector::zero(2, 1), pair_with_norm(0.5));
    Targets t;
    t.nu = 0.01;
    for (double gain : {0.3, 1.0, 2.5}) {
        const double h = 0.5 / gain;
        const auto d = constants_ID(s, single(SystemVariant::DiscreteI, gain, 0, 0, 1, 1, h), t);
        const auto c = constants_IC(s, single(SystemVariant::ContinuousI, gain, 0, 0, 1, 1, h), t);
        CHECK(*d.t0 * h == doctest::Approx(*c.t0));
    }
}

TEST_CASE("probability bound examples") {
    const auto p = single(SystemVariant::DiscreteI, 1, 0.5, 0, 1, 1, 0.1);
    const auto s = state_of(QuotientVector::zero(2, 1), pair_with_norm(0.5));
    Targets t;
    t.nu = 0.05;
    const auto k = constants_ID(s, p, t);

    NoiseCdfs one;
    one.f = [](double) { return 1.0; };
    auto r = probability_bound(Theorem::DiscreteI, k, one, t);
    CHECK(r.applicable);
    CHECK(r.probability == 1.0);
    CHECK(r.horizon == 93.0);
    CHECK(r.threshold_y == doctest::Approx(k.tol0 * 0.05));

    EmergenceConstants fake = k;
    fake.t0 = 99.3;
    NoiseCdfs f99;
    f99.f = [](double) { return 0.99; };
    r = probability_bound(Theorem::DiscreteI, fake, f99, t);
    CHECK(r.horizon == 100.0);
    CHECK(r.probability == doctest::Approx(std::pow(0.99, 100)));
    CHECK(r.probability == doctest::Approx(0.36603).epsilon(1e-4));

    fake.t0 = 100.0;
    CHECK(probability_bound(Theorem::DiscreteI, fake, f99, t).horizon == 100.0);

    const auto pc = coupled(SystemVariant::DiscreteII, 1, 1, 0, 0, 0.1, 0.1);
    Targets tc;
    tc.mu = 0.1;
    tc.nu = 0.1;
    const auto kc = constants_IID(state_of(pair_with_norm(1.0), pair_with_norm(0.5)), pc, tc);
    NoiseCdfs both;
    both.f1 = [](double) { return 1.0; };
    both.f2 = [](double) { return 1.0; };
    r = probability_bound(Theorem::DiscreteII, kc, both, tc);
    CHECK(r.probability == 1.0);
    CHECK(r.horizon == static_cast<double>(iterations_for(std::max(*kc.t2, *kc.t3))));

    // hypotheses failing at the initial state make the bound inapplicable
    auto bad = constants_IID(state_of(pair_with_norm(1.0), pair_with_norm(0.5)),
                             coupled(SystemVariant::DiscreteII, 1, 1, 0, 0, 2.0, 0.1), tc);
    r = probability_bound(Theorem::DiscreteII, bad, both, tc);
    CHECK_FALSE(r.applicable);
    CHECK(r.probability == 0.0);
}

TEST_CASE("probability bound is monotone in targets and horizon") {
    const auto p = single(SystemVariant::DiscreteI, 1, 0.5, 0, 1, 1, 0.1);
    const auto s = state_of(QuotientVector::zero(2, 1), pair_with_norm(0.5));
    NoiseCdfs cdfs;
    cdfs.f = [](double x) { return std::min(1.0, std::pow(x / 0.01, 3.0)); };
    double prev = 0.0;
    for (double nu = 0.01; nu < 0.5; nu += 0.01) {
        Targets t;
        t.nu = nu;
        const auto r = probability_bound(Theorem::DiscreteI, constants_ID(s, p, t), cdfs, t);
        CHECK(r.probability >= prev);
        prev = r.probability;
    }

    PathNoiseSpec path;
    path.base = NoiseSpec::ball(0.02);
    path.refresh = 0.05;
    const auto pc = single(SystemVariant::ContinuousI, 1, 0, 0, 1, 1, 0.1);
    NoiseCdfs pcdfs;
    pcdfs.path = [&](double x, double T) { return path_bound(path, 1, x, T); };
    prev = 0.0;
    for (double nu = 0.02; nu < 0.5; nu += 0.02) {
        Targets t;
        t.nu = nu;
        const auto k = constants_IC(s, pc, t);
        const auto r = probability_bound(Theorem::ContinuousI, k, pcdfs, t);
        CHECK(r.probability >= prev);
        prev = r.probability;
        CHECK(pcdfs.path(r.threshold_y, 2 * r.horizon) <= r.probability);
    }
}

TEST_CASE("type-II continuous switches to the corollary when a noise vanishes") {
    const auto p = coupled(SystemVariant::ContinuousII, 1, 1, 0, 0, 0.1, 0.1);
    Targets t;
    t.mu = 0.1;
    t.nu = 0.05;
    const auto k = constants_IIC(state_of(pair_with_norm(1.0), pair_with_norm(0.5)), p, t);
    NoiseCdfs c;
    c.path1 = [](double, double T) { return std::exp(-T); };
    c.path2 = [](double, double T) { return std::exp(-2 * T); };
    auto r = probability_bound(Theorem::ContinuousII, k, c, t);
    CHECK(r.theorem == Theorem::ContinuousII);
    const double T = std::max(*k.t2, *k.t3);
    CHECK(r.probability == doctest::Approx(std::exp(-3 * T)));

    c.noise_x_zero = true;
    r = probability_bound(Theorem::ContinuousII, k, c, t);
    CHECK(r.theorem == Theorem::Corollary);
    CHECK(r.probability == doctest::Approx(std::exp(-2 * *k.t3)));

    c.noise_x_zero = false;
    c.noise_y_zero = true;
    r = probability_bound(Theorem::ContinuousII, k, c, t);
    CHECK(r.probability == doctest::Approx(std::exp(-*k.t2)));

    c.noise_x_zero = true;
    CHECK(probability_bound(Theorem::ContinuousII, k, c, t).probability == 1.0);
}

TEST_CASE("iteration rounding") {
    CHECK(iterations_for(0.0) == 0);
    CHECK(iterations_for(92.1) == 93);
    CHECK(iterations_for(100.0) == 100);
    CHECK(iterations_for(100.0 + 1e-12) == 100);
}

TEST_CASE("zero-noise flocking run satisfies every envelope") {
    auto p = single(SystemVariant::DiscreteI, 1.0, 0.25, 0, 1, 1, 0.1);
    p.single.kernel = KernelSpec::rational(0.2, 0.25);  // k K = 1 = G
    p.single.j = JOperator::identity();
    Matrix x(5, 2);
    x << 0.1, 0.0, -0.2, 0.1, 0.05, -0.1, 0.0, 0.2, 0.05, -0.2;
    Matrix y(5, 2);
    y << 0.02, 0.01, -0.03, 0.0, 0.01, -0.02, 0.0, 0.03, 0.0, -0.02;
    const auto s = state_of(project_to_quotient(x), project_to_quotient(y));
    Targets t;
    t.nu = 1e-3;
    const auto k0 = constants_ID(s, p, t);
    t.mu = 0.5 * k0.a * std::pow(k0.u0, 0.25);
    const auto k = constants_ID(s, p, t);
    REQUIRE(k.applicable());
    RunOptions o;
    o.max_steps = iterations_for(std::max(*k.t0, *k.t1)) + 50;
    o.store_states = true;
    const auto tr = simulate_ID(s, p, NoiseSpec::zero(), SeedStream(1), o);
    const auto report = verify_trajectory(tr, k, p, t);
    CHECK_FALSE(report.skipped);
    CHECK(report.checks.size() == 5);
    for (const auto& c : report.checks) {
        INFO(c.name);
        CHECK(c.evaluated > 0);
        CHECK(c.violations == 0);
    }
    CHECK(report.all_hold());
}

TEST_CASE("growing y is flagged at the first bad step") {
    const auto p = single(SystemVariant::DiscreteI, 1, 0.5, 0, 1, 1, 0.1);
    const auto s = state_of(QuotientVector::zero(2, 1), pair_with_norm(0.5));
    const auto k = constants_ID(s, p, {});
    Trace tr;
    tr.variant = SystemVariant::DiscreteI;
    tr.clip_y = 0.0;
    for (std::uint64_t i = 0; i < 10; ++i) {
        TraceRow r;
        r.step = i;
        r.norm_y = i < 4 ? 0.5 * std::pow(0.9, i) : 0.5 * std::pow(0.9, 3) * std::pow(1.1, i - 3);
        tr.rows.push_back(r);
    }
    const auto report = verify_trajectory(tr, k, p);
    const auto* factor = report.find("one-step factor");
    REQUIRE(factor);
    CHECK(factor->violations > 0);
    CHECK(*factor->first_violation_step == 4);
    CHECK_FALSE(report.all_hold());

    tr.clip_y = 10 * k.tol0;
    const auto skipped = verify_trajectory(tr, k, p);
    CHECK(skipped.skipped);
    CHECK_FALSE(skipped.notice.empty());
}

TEST_CASE("constant coupling with clipped noise keeps the coercive decay envelope") {
    // k = 2 with the unit kernel: coercivity 2 everywhere
    auto p = single(SystemVariant::ContinuousI, 2.0, 0, 0, 1, 1, 0.1);
    p.single.kernel = KernelSpec::rational_squared(1.0, 0.0);
    p.single.j = JOperator::scaled(0.0, 1.0, 0.0, 1.0);
    const auto s = state_of(QuotientVector::zero(2, 1), pair_with_norm(0.5));
    Targets t;
    t.nu = 0.01;
    const auto k = constants_IC(s, p, t);
    PathNoiseSpec noise;
    noise.base = NoiseSpec::gaussian(1.0).clipped(k.tol0);
    noise.refresh = 0.01;
    RunOptions o;
    o.dt = 0.001;
    o.max_time = 3.0;
    const auto tr = integrate_IC(s, p, noise, SeedStream(4), o);
    const auto report = verify_trajectory(tr, k, p, t);
    REQUIRE_FALSE(report.skipped);
    const auto* coercive = report.find("coercive decay");
    REQUIRE(coercive);
    CHECK(coercive->violations == 0);
    CHECK(coercive->worst_slack >= 0.0);
}
