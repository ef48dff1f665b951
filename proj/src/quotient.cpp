#include "emergence/quotient.hpp"

#include "emergence/error.hpp"

#include <cmath>
#include <string>

namespace emergence {

namespace {

void require_finite(const Matrix& values, const char* what) {
    if (!values.allFinite()) {
        domain_error(std::string(what) + ": non-finite coordinate");
    }
}

void require_same_shape(const QuotientVector& u, const QuotientVector& v) {
    if (u.agents() != v.agents() || u.dim() != v.dim()) {
        domain_error("quotient_inner: shape mismatch (" + std::to_string(u.agents()) + "x" +
                     std::to_string(u.dim()) + " vs " + std::to_string(v.agents()) + "x" +
                     std::to_string(v.dim()) + ")");
    }
}

}  // namespace

AgentConfiguration::AgentConfiguration(Matrix values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
        domain_error("AgentConfiguration: need k >= 1 and d >= 1");
    }
    require_finite(values_, "AgentConfiguration");
}

QuotientVector QuotientVector::zero(Index k, Index d) {
    if (k < 1 || d < 1) {
        domain_error("QuotientVector: need k >= 1 and d >= 1");
    }
    return QuotientVector(Matrix::Zero(k, d));
}

bool QuotientVector::is_centered(const Matrix& values) {
    if (values.size() == 0) return true;
    const double scale = values.cwiseAbs().maxCoeff();
    const double tol = 1e-12 * static_cast<double>(values.rows()) * std::max(scale, 1e-300);
    const Eigen::RowVectorXd sums = values.colwise().sum();
    return (sums.array().abs() <= tol).all() || scale == 0.0;
}

QuotientVector QuotientVector::from_centered(Matrix values) {
    if (values.rows() < 1 || values.cols() < 1) {
        domain_error("QuotientVector: need k >= 1 and d >= 1");
    }
    require_finite(values, "QuotientVector");
    if (!is_centered(values)) {
        domain_error("QuotientVector: column means do not vanish");
    }
    return QuotientVector(std::move(values));
}

QuotientVector project_to_quotient(const Matrix& values) {
    if (values.rows() < 1 || values.cols() < 1) {
        domain_error("project_to_quotient: need k >= 1 and d >= 1");
    }
    require_finite(values, "project_to_quotient");
    const Eigen::RowVectorXd mean = values.colwise().mean();
    return QuotientVector(values.rowwise() - mean);
}

QuotientVector project_to_quotient(const AgentConfiguration& config) {
    return project_to_quotient(config.values());
}

double quotient_inner(const QuotientVector& u, const QuotientVector& v, InnerProduct kind) {
    require_same_shape(u, v);
    const double centered = u.values().cwiseProduct(v.values()).sum();
    if (kind == InnerProduct::Pairwise) {
        return static_cast<double>(u.agents()) * centered;
    }
    return centered;
}

double quotient_norm(const QuotientVector& v, InnerProduct kind) {
    return std::sqrt(std::max(0.0, quotient_inner(v, v, kind)));
}

Matrix complement_basis(Index k) {
    if (k < 1) domain_error("complement_basis: k must be positive");
    Matrix basis = Matrix::Zero(k, k - 1);
    // Helmert column j: j ones, then -j, normalised.
    for (Index j = 1; j < k; ++j) {
        const double norm = std::sqrt(static_cast<double>(j * (j + 1)));
        for (Index i = 0; i < j; ++i) basis(i, j - 1) = 1.0 / norm;
        basis(j, j - 1) = -static_cast<double>(j) / norm;
    }
    return basis;
}

QuotientVector embed_intrinsic(std::span<const double> coords, Index k, Index d, InnerProduct kind) {
    if (k < 2 || d < 1) domain_error("embed_intrinsic: need k >= 2 and d >= 1");
    if (static_cast<Index>(coords.size()) != intrinsic_dim(k, d)) {
        domain_error("embed_intrinsic: expected " + std::to_string(intrinsic_dim(k, d)) +
                     " coordinates, got " + std::to_string(coords.size()));
    }
    const Eigen::Map<const Matrix> z(coords.data(), k - 1, d);
    Matrix values = complement_basis(k) * z;
    if (kind == InnerProduct::Pairwise) {
        values /= std::sqrt(static_cast<double>(k));
    }
    return project_to_quotient(values);
}

}  // namespace emergence
