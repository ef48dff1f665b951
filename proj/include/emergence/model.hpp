#pragma once

#include "emergence/operators.hpp"
#include "emergence/quotient.hpp"

#include <functional>
#include <string>

namespace emergence {

enum class SystemVariant { DiscreteI, DiscreteII, ContinuousI, ContinuousII };

std::string to_string(SystemVariant v);
SystemVariant variant_from_string(const std::string& s);

inline bool is_continuous(SystemVariant v) {
    return v == SystemVariant::ContinuousI || v == SystemVariant::ContinuousII;
}
inline bool is_coupled(SystemVariant v) {
    return v == SystemVariant::DiscreteII || v == SystemVariant::ContinuousII;
}

/// Position update operator J(x, y) of the type-I systems, together with the
/// growth constants it is declared to satisfy:
///   discrete    ||J(x,y)|| <= C (1 + ||x||)^gamma ||y||^delta
///   continuous  ||J(x,y)|| <= C (1 + ||x||^2)^(gamma/2) ||y||^delta
struct JOperator {
    enum class Kind { IdentityInY, Scaled, Custom };

    Kind kind = Kind::IdentityInY;
    double factor = 1.0;
    std::function<Matrix(const QuotientVector&, const QuotientVector&)> custom;

    double C = 1.0;
    double gamma = 0.0;
    double delta = 1.0;

    static JOperator identity() { return {}; }
    static JOperator scaled(double factor, double C, double gamma, double delta) {
        JOperator j;
        j.kind = Kind::Scaled;
        j.factor = factor;
        j.C = C;
        j.gamma = gamma;
        j.delta = delta;
        return j;
    }
};

/// Parameters of a type-I system (one coupled feature y driving positions x).
struct SingleParams {
    JOperator j;
    /// G in the discrete contraction bound, K in the continuous coercivity bound.
    double gain = 1.0;
    double beta = 0.0;
    /// Discrete time step h. Unused by the continuous system.
    double step = 0.1;
    KernelSpec kernel;
};

/// Parameters of a type-II system.
///
/// `kernel_x` weights agents by position distance and couples the y
/// equation; `kernel_y` weights by y distance and couples the x equation.
///
/// Discrete:   ||I - h1 L(kernel_y; y)|| <= 1 - h1 gain1 / (1+||y||)^beta1
///             ||I - h2 L(kernel_x; x)|| <= 1 - h2 gain2 / (1+||x||)^beta2
/// Continuous: coercivity(L(kernel_x; x)) >= gain1 / (1+||x||^2)^beta1
///             coercivity(L(kernel_y; y)) >= gain2 / (1+||y||^2)^beta2
/// The index swap between the two cases follows the published constants.
struct CoupledParams {
    double gain1 = 1.0;
    double gain2 = 1.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double step1 = 0.1;
    double step2 = 0.1;
    KernelSpec kernel_x;
    KernelSpec kernel_y;
};

struct SystemParams {
    SystemVariant variant = SystemVariant::DiscreteI;
    InnerProduct inner = InnerProduct::Pairwise;
    SingleParams single;
    CoupledParams coupled;

    /// Range checks (positivity, 0 <= gamma < 1, ...). Throws a domain error.
    void validate() const;
};

/// Evaluates the operator hypotheses of the tagged system at (x, y):
/// contraction bounds for the discrete systems and coercivity bounds
/// (plus L_x (y,...,y) = 0) for the continuous ones.
HypothesisReport verify_operator_hypotheses(const QuotientVector& x, const QuotientVector& y,
                                            const SystemParams& params);

}  // namespace emergence
