#pragma once

// Domain types for planar-slice switched systems
//
//     x' = f(x, y; u),   y' = g(x, y; u),   u = sign(y)
//
// with x in R^k and a scalar switching coordinate y. The one-sided fields
// are f(x, y; +-1), g(x, y; +-1).

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nslab {

using Vec = std::vector<double>;

/// Thrown when f or g produce a non-finite value.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(std::string component, const std::string& what)
        : std::runtime_error(what), component_(std::move(component)) {}
    const std::string& component() const noexcept { return component_; }

private:
    std::string component_;
};

/// Upper bound on |u| - 1 for states of the embedded system.
inline constexpr double kDeltaOne = 0.25;

/// The pair (f, g) parameterized by the switching variable u.
///
/// `rate_x` writes f(x, y, u) into its last argument (length k);
/// `rate_y` returns g(x, y, u). Both must be pure and reentrant.
struct SwitchedSystem {
    using RateX = std::function<void(std::span<const double>, double, double, std::span<double>)>;
    using RateY = std::function<double(std::span<const double>, double, double)>;

    RateX rate_x;
    RateY rate_y;
    std::size_t dim = 1;
    double bound = 1.0;  // M: |x|_inf <= M is the domain of interest
    std::string name;

    /// Convenience for k = 1 systems given as scalar lambdas.
    static SwitchedSystem scalar(std::function<double(double, double, double)> fx,
                                 std::function<double(double, double, double)> gy,
                                 double bound, std::string name = {});

    double g(std::span<const double> x, double y, double u) const { return rate_y(x, y, u); }
    void f(std::span<const double> x, double y, double u, std::span<double> out) const {
        rate_x(x, y, u, out);
    }
    Vec f(std::span<const double> x, double y, double u) const;
};

struct PlanarRate {
    Vec dx;
    double dy = 0.0;
};

/// (f(x,y,u), g(x,y,u)) with finiteness checks on arguments and results.
PlanarRate eval_planar(const SwitchedSystem& sys, std::span<const double> x, double y, double u);

struct TransversalityReport {
    bool ok = true;
    double worst_g_plus = -1e300;    // max over samples of g(x,0,+1); must be < 0
    double worst_g_minus = 1e300;    // min over samples of g(x,0,-1); must be > 0
    double worst_dg_du = -1e300;     // max over samples and u in [-1,1] of dg/du; must be < 0
    std::size_t failures = 0;
};

/// Verifies g(x,0,+1) < 0 < g(x,0,-1) and dg/du(x,0,u) < 0 for u in [-1,1]
/// on every sample. dg/du uses a central difference with step 1e-6 and must
/// be below -1e-8 to count as strictly negative.
TransversalityReport check_transversality(const SwitchedSystem& sys,
                                          std::span<const Vec> x_samples);

/// Uniform samples of [-M, M]^k (n per axis for k = 1, a Kronecker lattice otherwise).
std::vector<Vec> sample_domain(const SwitchedSystem& sys, std::size_t n);

double max_norm(std::span<const double> v);

/// Smooth transition function: sign(w) outside [-1, 1], strictly increasing inside.
class Sigmoid {
public:
    using Fn = std::function<double(double)>;
    Sigmoid(Fn value, Fn derivative, Fn inverse)
        : value_(std::move(value)), derivative_(std::move(derivative)), inverse_(std::move(inverse)) {}

    double operator()(double w) const { return value_(w); }
    double value(double w) const { return value_(w); }
    double derivative(double w) const { return derivative_(w); }
    /// Inverse on the open core; throws std::domain_error for |u| >= 1.
    double inverse(double u) const { return inverse_(u); }

private:
    Fn value_;
    Fn derivative_;
    Fn inverse_;
};

/// phi(w) = (3w - w^3)/2 on [-1, 1], sign(w) outside. C^1, odd.
Sigmoid sigmoid_cubic();

/// Non-allocating evaluation of the cubic sigmoid, used on hot paths.
inline double cubic_value(double w) noexcept {
    if (w >= 1.0) return 1.0;
    if (w <= -1.0) return -1.0;
    return 0.5 * w * (3.0 - w * w);
}
inline double cubic_derivative(double w) noexcept {
    if (w >= 1.0 || w <= -1.0) return 0.0;
    return 1.5 * (1.0 - w * w);
}

}  // namespace nslab
