#pragma once

#include <Eigen/Dense>

#include <span>

namespace emergence {

/// Row i holds agent i, column j holds coordinate j.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Inner product fixed on the quotient Y^k / diagonal.
///
/// `Pairwise` is (1/2) sum_{i,j} <u_i - u_j, v_i - v_j>, which equals
/// k * sum_i <u_i - mean(u), v_i - mean(v)>. `Euclidean` is the plain
/// Frobenius product of the centered representatives.
enum class InnerProduct { Pairwise, Euclidean };

/// k agents in d-dimensional space. Values are finite, k >= 1, d >= 1.
class AgentConfiguration {
public:
    explicit AgentConfiguration(Matrix values);

    Index agents() const noexcept { return values_.rows(); }
    Index dim() const noexcept { return values_.cols(); }
    const Matrix& values() const noexcept { return values_; }

private:
    Matrix values_;
};

/// Canonical (mean-centred) representative of a class in Y^k / diagonal.
class QuotientVector {
public:
    QuotientVector() = default;

    static QuotientVector zero(Index k, Index d);

    /// Adopts values whose column means already vanish (checked to
    /// 1e-12 * k * max|value|).
    static QuotientVector from_centered(Matrix values);

    Index agents() const noexcept { return values_.rows(); }
    Index dim() const noexcept { return values_.cols(); }
    const Matrix& values() const noexcept { return values_; }

    /// True when every column mean is zero within the tolerance above.
    static bool is_centered(const Matrix& values);

private:
    explicit QuotientVector(Matrix values) : values_(std::move(values)) {}
    friend QuotientVector project_to_quotient(const Matrix& values);

    Matrix values_;
};

/// Subtracts the agent mean from every row. Rejects non-finite input.
QuotientVector project_to_quotient(const Matrix& values);
QuotientVector project_to_quotient(const AgentConfiguration& config);

double quotient_inner(const QuotientVector& u, const QuotientVector& v,
                      InnerProduct kind = InnerProduct::Pairwise);

double quotient_norm(const QuotientVector& v, InnerProduct kind = InnerProduct::Pairwise);

/// Orthonormal (Euclidean) basis of the complement of (1,...,1) in R^k,
/// returned as a k x (k-1) matrix of Helmert columns.
Matrix complement_basis(Index k);

/// Isometry from R^{(k-1)d} onto the quotient: the returned representative
/// has quotient norm equal to the Euclidean norm of `coords`.
QuotientVector embed_intrinsic(std::span<const double> coords, Index k, Index d,
                               InnerProduct kind = InnerProduct::Pairwise);

/// Dimension of the quotient, (k-1)d.
inline Index intrinsic_dim(Index k, Index d) { return (k - 1) * d; }

}  // namespace emergence
