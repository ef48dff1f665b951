#pragma once

// Reference computations for the tests. Nothing here uses Eigen or Boost so
// the library is never checked against itself.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

// Row-major k x d array.
struct Grid {
    std::size_t k = 0;
    std::size_t d = 0;
    std::vector<double> v;

    double operator()(std::size_t i, std::size_t j) const { return v[i * d + j]; }
};

// (1/2) sum_{i,j} <u_i - u_j, v_i - v_j>, straight from the definition.
inline double pairwise_inner(const Grid& u, const Grid& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.k; ++i) {
        for (std::size_t j = 0; j < u.k; ++j) {
            for (std::size_t c = 0; c < u.d; ++c) s += (u(i, c) - u(j, c)) * (w(i, c) - w(j, c));
        }
    }
    return 0.5 * s;
}

// Eigenvalues of a symmetric n x n matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
    auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        }
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(at(p, q)) < 1e-300) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t r = 0; r < n; ++r) {
                    const double arp = at(r, p);
                    const double arq = at(r, q);
                    at(r, p) = c * arp - s * arq;
                    at(r, q) = s * arp + c * arq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double apr = at(p, r);
                    const double aqr = at(q, r);
                    at(p, r) = c * apr - s * aqr;
                    at(q, r) = s * apr + c * aqr;
                }
            }
        }
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i * n + i];
    std::sort(out.begin(), out.end());
    return out;
}

// Eigenvalues of a symmetric L with L 1 = 0 restricted to the complement of
// the ones vector: shift the ones direction far away and drop it.
inline std::vector<double> complement_spectrum(std::vector<double> l, std::size_t n) {
    const double shift = 1e6;
    for (auto& e : l) e += shift / static_cast<double>(n);
    auto ev = jacobi_eigenvalues(std::move(l), n);
    ev.pop_back();
    return ev;
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-14) {
    double flo = f(lo);
    if (flo * f(hi) > 0.0) throw std::invalid_argument("bisect: no sign change");
    for (int i = 0; i < 2000 && hi - lo > tol * std::max(1.0, std::abs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm <= 0.0) == (flo <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// P(chi_m <= x) by composite Simpson quadrature of the chi density.
inline double chi_cdf(int m, double x, int panels = 20000) {
    if (x <= 0.0) return 0.0;
    const double norm = std::pow(2.0, 0.5 * m - 1.0) * std::tgamma(0.5 * m);
    auto density = [&](double r) { return std::pow(r, m - 1) * std::exp(-0.5 * r * r) / norm; };
    const double h = x / panels;
    double s = density(0.0) + density(x);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * density(i * h);
    return s * h / 3.0;
}

inline double binomial_cdf(std::uint64_t s, std::uint64_t n, double p) {
    if (p <= 0.0) return 1.0;
    if (p >= 1.0) return s >= n ? 1.0 : 0.0;
    double total = 0.0;
    for (std::uint64_t i = 0; i <= s; ++i) {
        const double logpmf = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                              i * std::log(p) + (n - i) * std::log1p(-p);
        total += std::exp(logpmf);
    }
    return std::min(1.0, total);
}

struct Interval {
    double lo;
    double hi;
};

// Exact two-sided Clopper-Pearson interval by bisection on binomial tails.
inline Interval clopper_pearson(std::uint64_t s, std::uint64_t n, double alpha = 0.05) {
    Interval out{0.0, 1.0};
    if (s > 0) {
        // P(X >= s | p) = alpha / 2
        out.lo = bisect([&](double p) { return (1.0 - binomial_cdf(s - 1, n, p)) - alpha / 2; }, 0.0, 1.0, 1e-13);
    }
    if (s < n) {
        out.hi = bisect([&](double p) { return binomial_cdf(s, n, p) - alpha / 2; }, 0.0, 1.0, 1e-13);
    }
    return out;
}

// sup |F_n - F| for a sorted sample.
inline double ks_distance(const std::vector<double>& sorted, const std::function<double(double)>& cdf) {
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, std::abs((i + 1) / n - f), std::abs(f - i / n)});
    }
    return d;
}

}  // namespace oracle
