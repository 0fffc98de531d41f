#pragma once

// Regularized executions of the switched system: hysteretic relay, smoothed
// switch u = phi(y/alpha), and the slow-fast embedding
//
//     eps u' = phi((y + alpha u)/eps) - u.

#include <optional>
#include <string>
#include <vector>

#include "nslab/integrator.hpp"
#include "nslab/model.hpp"
#include "nslab/trajectory.hpp"

namespace nslab {

enum class Method { Hysteresis, Smoothing, Embedding };

std::string_view to_string(Method m);

struct RegularizationParams {
    double alpha = 0.0;
    double epsilon = 0.0;  // 0 when unused
    double kappa = 0.0;    // epsilon / alpha
    double delta0 = 0.0;
};

struct CycleRecord {
    std::size_t index = 0;
    double t_start = 0.0;
    Vec x_start;
    double T_minus = 0.0;
    double T_plus = 0.0;
    Vec delta_x;
};

enum class RunStop {
    Completed,
    DomainExit,     // |x| reached M
    NonAttracting,  // a relay phase moves away from its switching plane
    NoReturn,       // no return to the section within the time cap
};

std::string_view to_string(RunStop s);

struct RegularizationRun {
    Method method = Method::Hysteresis;
    RegularizationParams params;
    Trajectory trajectory;
    std::vector<CycleRecord> cycles;
    RunStop stop = RunStop::Completed;
    double stop_time = 0.0;

    bool flagged() const { return stop != RunStop::Completed; }
};

/// Relay with overlap: u = mode0 initially, switching up at y = +alpha and
/// down at y = -alpha. Starting on the plane that the current mode switches
/// at flips the mode immediately.
RegularizationRun run_hysteresis(const SwitchedSystem& sys, const Vec& x0, double y0, int mode0,
                                 double alpha, double T, const IntegratorOptions& opts);

/// Planar flow with u = phi(y/alpha).
RegularizationRun run_smoothed(const SwitchedSystem& sys, const Vec& x0, double y0, double alpha,
                               const Sigmoid& sigmoid, double T, const IntegratorOptions& opts);

/// Three-dimensional embedding with the cubic sigmoid. Saturated stretches
/// (|y + alpha u| > eps) use the exact relaxation of u; the sigmoid core is
/// stepped with h <= eps/4. For alpha > 0 one cycle is recorded per
/// downward crossing of y = 0 with u > 0.
RegularizationRun run_embedded(const SwitchedSystem& sys, const Vec& x0, double y0, double u0,
                               double alpha, double eps, double T, const IntegratorOptions& opts);

struct CycleAsymptotics {
    std::vector<double> residuals;  // |T-_i - 2 alpha / g(x_i, 0, -1)|
    double max_residual = 0.0;
};

CycleAsymptotics measure_cycle_asymptotics(const RegularizationRun& run, const SwitchedSystem& sys);

/// max(|f|, |g|) over [-M, M]^k x [-1, 1] x [-1 - 1/4, 1 + 1/4] on a sample grid.
double field_bound(const SwitchedSystem& sys);

struct SectionCrossing {
    int section = 0;  // 1..8
    double t = 0.0;
    Vec state;        // (x, y, u)
};

struct PoincareResult {
    bool returned = false;
    RunStop stop = RunStop::Completed;
    double T1 = 0.0;
    Vec x_return;
    Vec delta_x;
    Vec state_return;  // (x, y, u)
    std::vector<SectionCrossing> trace;
    Trajectory trajectory;
};

/// Flows the embedding from (x0, y = 0, u0) until the next downward crossing
/// of y = 0 with |u - 1| <= max(delta0, 1e-9). The intermediate sections are
/// recorded in the order met. `t_cap` <= 0 picks a cap from the one-sided
/// speeds.
PoincareResult poincare_return(const SwitchedSystem& sys, double alpha, double eps, double delta0,
                               const Vec& x0, double u0, const IntegratorOptions& opts,
                               double t_cap = 0.0);

}  // namespace nslab
