#pragma once

// Error functionals, convergence-order fits, the isochrone of the relay
// planes and the slow curve of the embedding.

#include <optional>
#include <string>
#include <vector>

#include "nslab/integrator.hpp"
#include "nslab/model.hpp"
#include "nslab/regularizers.hpp"
#include "nslab/resolvers.hpp"
#include "nslab/trajectory.hpp"

namespace nslab {

using Reference = std::function<Vec(double)>;

/// max over n uniform samples of [t_a, t_b] of |x(t) - reference(t)|_inf.
double sup_error(const Trajectory& run, const Reference& reference, double t_a, double t_b,
                 std::size_t n = 1000);
/// Same, comparing the x parts of two trajectories.
double sup_error(const Trajectory& a, const Trajectory& b, double t_a, double t_b,
                 std::size_t n = 1000);

enum class Coupling {
    Hysteresis,
    Smoothing,
    EpsilonAlphaSquared,  // embedding with alpha > 0, eps = alpha^2
    KappaConstant,        // embedding with eps = |kappa| alpha, sign(alpha) = sign(kappa)
};

enum class Correction { None, LogFactor };  // LogFactor divides errors by |log(alpha/2)|

std::string_view to_string(Coupling c);

struct PowerFit {
    double order = 0.0;
    double constant = 0.0;
    double r_squared = 0.0;
};

/// Least squares of log(err) against log(alpha). Needs at least 2 points.
PowerFit fit_power_law(std::span<const double> alphas, std::span<const double> errors,
                       Correction correction = Correction::None);

struct ConvergenceSetup {
    Coupling coupling = Coupling::Hysteresis;
    Vec x0;
    double T = 1.0;
    std::vector<double> alphas;  // strictly decreasing, positive
    double kappa = 0.1;          // KappaConstant only; signed
    Correction correction = Correction::None;
    unsigned threads = 1;
    IntegratorOptions run_opts{};
    IntegratorOptions reference_opts{1e-10, 1e-13};
    std::optional<SlidingKind> reference;  // default: Filippov for relay-like runs, Utkin otherwise
};

struct ConvergenceReport {
    Method method = Method::Hysteresis;
    Coupling coupling = Coupling::Hysteresis;
    SlidingKind reference = SlidingKind::Filippov;
    Correction correction = Correction::None;
    std::vector<double> alphas;        // magnitudes, as given
    std::vector<double> errors;        // sup errors over [0, T]; NaN where a run failed
    std::vector<double> epsilons;      // 0 for relay and smoothing
    std::vector<double> y_excursions;  // max |y| after the transient window
    PowerFit fit;
    bool flagged = false;
    std::vector<std::string> failures;
};

/// Transient window length excluded from averages and excursion bounds.
double transient_window(double alpha, double eps);

ConvergenceReport convergence_study(const SwitchedSystem& sys, const ConvergenceSetup& setup);

/// One regularized run as used by convergence_study for a single alpha magnitude.
RegularizationRun regularized_run(const SwitchedSystem& sys, Coupling coupling, const Vec& x0,
                                  double T, double alpha, double kappa,
                                  const IntegratorOptions& opts);

struct IsochronePoint {
    Vec x;
    double y_p = 0.0;
    double residual = 0.0;  // |T- - T+| at y_p
    bool flagged = false;
};

/// For each grid x, the y in (-alpha, alpha) from which the u = -1 flow
/// reaches y = +alpha in the same time as the u = +1 flow reaches y = -alpha.
std::vector<IsochronePoint> isochrone(const SwitchedSystem& sys, double alpha,
                                      const std::vector<Vec>& x_grid, double tol,
                                      const IntegratorOptions& opts);

/// alpha (g+ + g-)/(g+ - g-) at (x, 0).
double isochrone_leading_order(const SwitchedSystem& sys, std::span<const double> x, double alpha);

struct SlowCurvePoint {
    Vec x;
    double u = 0.0;
    double y = 0.0;
    bool flagged = false;
};

/// Middle branch of the critical set: u = U(x), y = eps phi^-1(u) - alpha u.
std::vector<SlowCurvePoint> slow_curve_Q(const SwitchedSystem& sys, double alpha, double eps,
                                         const std::vector<Vec>& x_grid,
                                         const Sigmoid& sigmoid = sigmoid_cubic());

}  // namespace nslab
