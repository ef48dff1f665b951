#pragma once

#include "emergence/quotient.hpp"

#include <string>
#include <utility>
#include <vector>

namespace emergence {

enum class KernelKind {
    Rational,         // scale / (1 + r)^beta, the discrete flocking kernel
    RationalSquared,  // scale / (1 + r^2)^beta, matches the continuous coercivity form
    Table,            // piecewise-linear, bounded and non-increasing
};

/// Interaction weight as a function of the distance between two agents.
struct KernelSpec {
    KernelKind kind = KernelKind::Rational;
    double scale = 1.0;
    double beta = 0.0;
    /// (distance, value) knots for KernelKind::Table, distances increasing.
    std::vector<std::pair<double, double>> table;

    static KernelSpec rational(double scale, double beta) {
        return {KernelKind::Rational, scale, beta, {}};
    }
    static KernelSpec rational_squared(double scale, double beta) {
        return {KernelKind::RationalSquared, scale, beta, {}};
    }

    /// Throws a domain error unless the kernel is nonnegative and non-increasing.
    void validate() const;
    double operator()(double distance) const;
    /// Largest value the kernel takes (its value at distance 0).
    double sup() const { return (*this)(0.0); }
};

/// Dense k x k coupling matrix (adjacency, Laplacian or I - hL).
struct CouplingMatrix {
    Matrix m;
    bool symmetric = true;

    static CouplingMatrix from_matrix(Matrix m);
    Index size() const noexcept { return m.rows(); }
};

/// a_ij = kernel(|x_i - x_j|), zero diagonal.
CouplingMatrix adjacency(const Matrix& positions, const KernelSpec& kernel);

/// L = D - A with D = diag(row sums). Rejects negative weights.
CouplingMatrix laplacian(const CouplingMatrix& adjacency);

/// I - hL.
CouplingMatrix s_operator(const CouplingMatrix& laplacian, double h);

/// Applies a k x k matrix blockwise to a quotient representative and
/// re-centres the result.
QuotientVector apply_blockwise(const CouplingMatrix& op, const QuotientVector& v);

/// sup_{y in quotient, y != 0} ||S y|| / ||y||.
///
/// Computed as the largest singular value of S restricted to the
/// complement of (1,...,1). Both supported inner products give the same
/// value because each scales numerator and denominator by the same factor.
double operator_norm_on_quotient(const CouplingMatrix& s);

struct Coercivity {
    double value = 0.0;
    /// Set when the input was not symmetric and its symmetric part was used.
    bool symmetrized = false;
};

/// min_{y in quotient, y != 0} <L y, y> / ||y||^2 (the Fiedler value of a
/// graph Laplacian).
Coercivity coercivity(const CouplingMatrix& laplacian);

/// One evaluated inequality `lhs <relation> rhs`.
struct HypothesisCheck {
    std::string name;
    std::string relation;  // "<=", ">=" or "<"
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;

    /// Signed distance to failure; nonnegative iff the check passes.
    double slack() const { return relation == ">=" ? lhs - rhs : rhs - lhs; }
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;

    bool all_pass() const;
    void add(std::string name, std::string relation, double lhs, double rhs);
};

}  // namespace emergence
