#include "emergence/operators.hpp"

#include "emergence/error.hpp"
#include "emergence/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace emergence {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kCheckTol = 1e-12;

bool is_symmetric(const Matrix& m) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol * scale;
}

void require_square(const CouplingMatrix& c, const char* what) {
    if (c.m.rows() != c.m.cols() || c.m.rows() < 1) {
        domain_error(std::string(what) + ": matrix must be square and nonempty");
    }
    if (!c.m.allFinite()) domain_error(std::string(what) + ": non-finite entry");
}

Matrix restrict_to_complement(const Matrix& m) {
    const Matrix basis = complement_basis(m.rows());
    return basis.transpose() * m * basis;
}

}  // namespace

void KernelSpec::validate() const {
    switch (kind) {
    case KernelKind::Rational:
    case KernelKind::RationalSquared:
        if (!(scale > 0.0) || !std::isfinite(scale)) domain_error("kernel: scale must be positive");
        if (!(beta >= 0.0) || !std::isfinite(beta)) domain_error("kernel: beta must be >= 0");
        return;
    case KernelKind::Table:
        if (table.empty()) domain_error("kernel table: no knots");
        for (std::size_t i = 0; i < table.size(); ++i) {
            const auto [r, w] = table[i];
            if (!std::isfinite(r) || !std::isfinite(w) || r < 0.0 || w < 0.0) {
                domain_error("kernel table: knots must be finite and nonnegative");
            }
            if (i > 0 && !(r > table[i - 1].first)) {
                domain_error("kernel table: distances must increase strictly");
            }
            if (i > 0 && w > table[i - 1].second) {
                domain_error("kernel table: values must be non-increasing");
            }
        }
        return;
    }
}

double KernelSpec::operator()(double distance) const {
    switch (kind) {
    case KernelKind::Rational:
        return scale / std::pow(1.0 + distance, beta);
    case KernelKind::RationalSquared:
        return scale / std::pow(1.0 + distance * distance, beta);
    case KernelKind::Table: {
        if (distance <= table.front().first) return table.front().second;
        if (distance >= table.back().first) return table.back().second;
        const auto hi = std::upper_bound(table.begin(), table.end(), distance,
                                         [](double r, const auto& knot) { return r < knot.first; });
        const auto lo = hi - 1;
        const double w = (distance - lo->first) / (hi->first - lo->first);
        return (1.0 - w) * lo->second + w * hi->second;
    }
    }
    return 0.0;
}

CouplingMatrix CouplingMatrix::from_matrix(Matrix m) {
    CouplingMatrix c{std::move(m), true};
    require_square(c, "CouplingMatrix");
    c.symmetric = is_symmetric(c.m);
    return c;
}

CouplingMatrix adjacency(const Matrix& positions, const KernelSpec& kernel) {
    kernel.validate();
    const Index k = positions.rows();
    if (k < 1) domain_error("adjacency: no agents");
    Matrix a = Matrix::Zero(k, k);
    for (Index i = 0; i < k; ++i) {
        for (Index j = i + 1; j < k; ++j) {
            const double w = kernel((positions.row(i) - positions.row(j)).norm());
            a(i, j) = w;
            a(j, i) = w;
        }
    }
    return {std::move(a), true};
}

CouplingMatrix laplacian(const CouplingMatrix& adjacency) {
    require_square(adjacency, "laplacian");
    if ((adjacency.m.array() < 0.0).any()) domain_error("laplacian: negative adjacency weight");
    Matrix l = -adjacency.m;
    l.diagonal().setZero();
    const Vector degree = adjacency.m.rowwise().sum() - adjacency.m.diagonal();
    l.diagonal() = degree;
    return {std::move(l), adjacency.symmetric && is_symmetric(adjacency.m)};
}

CouplingMatrix s_operator(const CouplingMatrix& laplacian, double h) {
    require_square(laplacian, "s_operator");
    if (!(h >= 0.0) || !std::isfinite(h)) domain_error("s_operator: step must be finite and >= 0");
    Matrix s = Matrix::Identity(laplacian.size(), laplacian.size()) - h * laplacian.m;
    return {std::move(s), laplacian.symmetric};
}

QuotientVector apply_blockwise(const CouplingMatrix& op, const QuotientVector& v) {
    if (op.size() != v.agents()) domain_error("apply_blockwise: size mismatch");
    return project_to_quotient(op.m * v.values());
}

double operator_norm_on_quotient(const CouplingMatrix& s) {
    require_square(s, "operator_norm_on_quotient");
    if (s.size() < 2) domain_error("operator_norm_on_quotient: quotient is trivial for k < 2");
    const Matrix r = restrict_to_complement(s.m);
    if (s.symmetric) {
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(r, Eigen::EigenvaluesOnly);
        return eig.eigenvalues().cwiseAbs().maxCoeff();
    }
    const Eigen::JacobiSVD<Matrix> svd(r);
    return svd.singularValues()(0);
}

Coercivity coercivity(const CouplingMatrix& laplacian) {
    require_square(laplacian, "coercivity");
    if (laplacian.size() < 2) domain_error("coercivity: quotient is trivial for k < 2");
    Coercivity out;
    Matrix r = restrict_to_complement(laplacian.m);
    if (!laplacian.symmetric || !is_symmetric(laplacian.m)) {
        out.symmetrized = true;
        r = 0.5 * (r + r.transpose()).eval();
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(r, Eigen::EigenvaluesOnly);
    out.value = eig.eigenvalues().minCoeff();
    return out;
}

bool HypothesisReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

void HypothesisReport::add(std::string name, std::string relation, double lhs, double rhs) {
    HypothesisCheck c{std::move(name), std::move(relation), lhs, rhs, false};
    const double tol = kCheckTol * std::max({1.0, std::abs(lhs), std::abs(rhs)});
    if (c.relation == "<=") {
        c.pass = lhs <= rhs + tol;
    } else if (c.relation == ">=") {
        c.pass = lhs + tol >= rhs;
    } else if (c.relation == "<") {
        c.pass = lhs < rhs;
    } else {
        domain_error("HypothesisReport: unknown relation " + c.relation);
    }
    checks.push_back(std::move(c));
}

// ---------------------------------------------------------------------------
// model.hpp

std::string to_string(SystemVariant v) {
    switch (v) {
    case SystemVariant::DiscreteI: return "I(D)";
    case SystemVariant::DiscreteII: return "II(D)";
    case SystemVariant::ContinuousI: return "I(C)";
    case SystemVariant::ContinuousII: return "II(C)";
    }
    return "?";
}

SystemVariant variant_from_string(const std::string& s) {
    if (s == "I(D)" || s == "ID") return SystemVariant::DiscreteI;
    if (s == "II(D)" || s == "IID") return SystemVariant::DiscreteII;
    if (s == "I(C)" || s == "IC") return SystemVariant::ContinuousI;
    if (s == "II(C)" || s == "IIC") return SystemVariant::ContinuousII;
    config_error("unknown system variant '" + s + "'");
}

void SystemParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) domain_error(std::string(name) + " must be positive");
    };
    auto nonneg = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v)) domain_error(std::string(name) + " must be >= 0");
    };
    if (is_coupled(variant)) {
        positive(coupled.gain1, "gain1");
        positive(coupled.gain2, "gain2");
        nonneg(coupled.beta1, "beta1");
        nonneg(coupled.beta2, "beta2");
        if (variant == SystemVariant::DiscreteII) {
            positive(coupled.step1, "step1");
            positive(coupled.step2, "step2");
        }
        coupled.kernel_x.validate();
        coupled.kernel_y.validate();
        return;
    }
    positive(single.j.C, "C");
    positive(single.j.delta, "delta");
    if (!(single.j.gamma >= 0.0 && single.j.gamma < 1.0)) domain_error("gamma must lie in [0, 1)");
    positive(single.gain, "gain");
    nonneg(single.beta, "beta");
    if (variant == SystemVariant::DiscreteI) positive(single.step, "step");
    single.kernel.validate();
}

HypothesisReport verify_operator_hypotheses(const QuotientVector& x, const QuotientVector& y,
                                            const SystemParams& params) {
    params.validate();
    HypothesisReport report;
    const double nx = quotient_norm(x, params.inner);
    const double ny = quotient_norm(y, params.inner);

    switch (params.variant) {
    case SystemVariant::DiscreteI: {
        const auto& p = params.single;
        const auto s = s_operator(laplacian(adjacency(x.values(), p.kernel)), p.step);
        report.add("contraction ||S(x)|| <= 1 - hG/(1+||x||)^beta", "<=",
                   operator_norm_on_quotient(s), 1.0 - p.step * p.gain / std::pow(1.0 + nx, p.beta));
        break;
    }
    case SystemVariant::DiscreteII: {
        const auto& p = params.coupled;
        const auto s1 = s_operator(laplacian(adjacency(y.values(), p.kernel_y)), p.step1);
        const auto s2 = s_operator(laplacian(adjacency(x.values(), p.kernel_x)), p.step2);
        report.add("contraction ||S1(y)|| <= 1 - h1 G1/(1+||y||)^beta1", "<=",
                   operator_norm_on_quotient(s1), 1.0 - p.step1 * p.gain1 / std::pow(1.0 + ny, p.beta1));
        report.add("contraction ||S2(x)|| <= 1 - h2 G2/(1+||x||)^beta2", "<=",
                   operator_norm_on_quotient(s2), 1.0 - p.step2 * p.gain2 / std::pow(1.0 + nx, p.beta2));
        break;
    }
    case SystemVariant::ContinuousI: {
        const auto& p = params.single;
        const auto l = laplacian(adjacency(x.values(), p.kernel));
        report.add("L_x annihilates the diagonal", "<=", l.m.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10);
        report.add("coercivity phi_x >= K/(1+||x||^2)^beta", ">=", coercivity(l).value,
                   p.gain / std::pow(1.0 + nx * nx, p.beta));
        break;
    }
    case SystemVariant::ContinuousII: {
        const auto& p = params.coupled;
        const auto l2 = laplacian(adjacency(x.values(), p.kernel_x));
        const auto l1 = laplacian(adjacency(y.values(), p.kernel_y));
        report.add("L_2x annihilates the diagonal", "<=", l2.m.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10);
        report.add("L_1y annihilates the diagonal", "<=", l1.m.rowwise().sum().cwiseAbs().maxCoeff(), 1e-10);
        report.add("coercivity xi_x >= K1/(1+||x||^2)^beta1", ">=", coercivity(l2).value,
                   p.gain1 / std::pow(1.0 + nx * nx, p.beta1));
        report.add("coercivity eta_y >= K2/(1+||y||^2)^beta2", ">=", coercivity(l1).value,
                   p.gain2 / std::pow(1.0 + ny * ny, p.beta2));
        break;
    }
    }
    return report;
}

}  // namespace emergence
