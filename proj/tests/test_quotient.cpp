#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emergence/error.hpp"
#include "emergence/quotient.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace emergence;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
    Matrix m(static_cast<Index>(r.size()), static_cast<Index>(r.begin()->size()));
    Index i = 0;
    for (const auto& row : r) {
        Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

oracle::Grid grid(const Matrix& m) {
    oracle::Grid g{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), {}};
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) g.v.push_back(m(i, j));
    }
    return g;
}

}  // namespace

TEST_CASE("projection subtracts the agent mean") {
    auto q = project_to_quotient(rows({{3}, {1}}));
    CHECK(q.values()(0, 0) == doctest::Approx(1.0));
    CHECK(q.values()(1, 0) == doctest::Approx(-1.0));

    q = project_to_quotient(rows({{2.5}, {2.5}, {2.5}}));
    CHECK(q.values().cwiseAbs().maxCoeff() == 0.0);

    q = project_to_quotient(rows({{1, 0}, {0, 2}}));
    CHECK(q.values()(0, 0) == doctest::Approx(0.5));
    CHECK(q.values()(0, 1) == doctest::Approx(-1.0));
    CHECK(q.values()(1, 0) == doctest::Approx(-0.5));
    CHECK(q.values()(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("projection is idempotent and ignores a common shift") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 50; ++trial) {
        Matrix v(5, 3);
        for (Index i = 0; i < v.size(); ++i) v.data()[i] = n01(rng);
        const auto once = project_to_quotient(v);
        const auto twice = project_to_quotient(once.values());
        CHECK((once.values() - twice.values()).cwiseAbs().maxCoeff() < 1e-15);

        Matrix shifted = v;
        shifted.rowwise() += Eigen::RowVector3d(4.0, -7.0, 0.25);
        CHECK(quotient_norm(project_to_quotient(shifted)) == doctest::Approx(quotient_norm(once)).epsilon(1e-12));
        CHECK(QuotientVector::is_centered(once.values()));
    }
}

TEST_CASE("non-finite input is a domain error") {
    Matrix v = rows({{1}, {std::numeric_limits<double>::quiet_NaN()}});
    CHECK_THROWS_AS(project_to_quotient(v), Error);
    try {
        project_to_quotient(v);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Domain);
    }
    CHECK_THROWS_AS(AgentConfiguration(rows({{std::numeric_limits<double>::infinity()}})), Error);
    CHECK_THROWS_AS(AgentConfiguration(Matrix(0, 2)), Error);
}

TEST_CASE("from_centered rejects representatives that are not centred") {
    CHECK_NOTHROW(QuotientVector::from_centered(rows({{1}, {-1}})));
    CHECK_THROWS_AS(QuotientVector::from_centered(rows({{1}, {0}})), Error);
}

TEST_CASE("inner product examples") {
    const auto u = project_to_quotient(rows({{1}, {-1}}));
    CHECK(quotient_inner(u, u) == doctest::Approx(4.0));
    CHECK(quotient_inner(u, QuotientVector::zero(2, 1)) == 0.0);
    const auto w = project_to_quotient(rows({{1}, {0}, {-1}}));
    CHECK(quotient_inner(w, w) == doctest::Approx(6.0));
    CHECK_THROWS_AS(quotient_inner(u, w), Error);
}

TEST_CASE("norm examples") {
    const auto u = project_to_quotient(rows({{1}, {-1}}));
    CHECK(quotient_norm(u) == doctest::Approx(2.0));
    CHECK(quotient_norm(QuotientVector::zero(4, 2)) == 0.0);
    CHECK(quotient_norm(project_to_quotient(3.0 * u.values())) == doctest::Approx(6.0));
    // the Euclidean option drops the factor k
    CHECK(quotient_norm(u, InnerProduct::Euclidean) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("double sum equals k times the centred sum") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> kd(1, 8);
    std::uniform_int_distribution<int> dd(1, 3);
    std::normal_distribution<double> n01(0.0, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const Index k = kd(rng);
        const Index d = dd(rng);
        Matrix a(k, d);
        Matrix b(k, d);
        for (Index i = 0; i < a.size(); ++i) a.data()[i] = n01(rng);
        for (Index i = 0; i < b.size(); ++i) b.data()[i] = n01(rng);
        const double expect = oracle::pairwise_inner(grid(a), grid(b));
        const double got = quotient_inner(project_to_quotient(a), project_to_quotient(b));
        const double scale = std::max(1.0, std::abs(expect));
        CHECK(std::abs(got - expect) <= 1e-10 * scale);
    }
}

TEST_CASE("norm is symmetric, homogeneous and subadditive") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 200; ++trial) {
        Matrix a(6, 2);
        Matrix b(6, 2);
        for (Index i = 0; i < a.size(); ++i) a.data()[i] = n01(rng);
        for (Index i = 0; i < b.size(); ++i) b.data()[i] = n01(rng);
        const auto qa = project_to_quotient(a);
        const auto qb = project_to_quotient(b);
        CHECK(quotient_inner(qa, qb) == doctest::Approx(quotient_inner(qb, qa)));
        CHECK(quotient_norm(project_to_quotient(-2.5 * a)) == doctest::Approx(2.5 * quotient_norm(qa)));
        CHECK(quotient_norm(project_to_quotient(a + b)) <= quotient_norm(qa) + quotient_norm(qb) + 1e-12);
        CHECK(quotient_inner(qa, qa) > 0.0);
    }
}

TEST_CASE("complement basis is orthonormal and orthogonal to the diagonal") {
    for (Index k : {2, 3, 7}) {
        const Matrix b = complement_basis(k);
        CHECK(b.rows() == k);
        CHECK(b.cols() == k - 1);
        CHECK((b.transpose() * b - Matrix::Identity(k - 1, k - 1)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((b.transpose() * Vector::Ones(k)).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("intrinsic embedding is an isometry for both inner products") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n01;
    for (auto kind : {InnerProduct::Pairwise, InnerProduct::Euclidean}) {
        const Index k = 5;
        const Index d = 3;
        std::vector<double> z(static_cast<std::size_t>(intrinsic_dim(k, d)));
        for (auto& v : z) v = n01(rng);
        double e = 0.0;
        for (double v : z) e += v * v;
        const auto q = embed_intrinsic(z, k, d, kind);
        CHECK(QuotientVector::is_centered(q.values()));
        CHECK(quotient_norm(q, kind) == doctest::Approx(std::sqrt(e)).epsilon(1e-12));
    }
    CHECK(intrinsic_dim(10, 3) == 27);
}
