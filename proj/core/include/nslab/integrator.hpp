#pragma once

// Explicit time stepping with dense output and event location.
//
// integrate_with_events is the single engine behind integrate_adaptive and
// integrate_to_event: a Dormand-Prince 5(4) pair with PI step control, and
// event roots bracketed between accepted steps and refined by bisection on
// the step's continuous extension (a fresh RK step of the trial length).

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nslab/model.hpp"
#include "nslab/trajectory.hpp"

namespace nslab {

/// ds/dt = field(t, s); writes into the last argument.
using Field = std::function<void(double, std::span<const double>, std::span<double>)>;
/// Scalar event function of (t, s).
using EventFn = std::function<double(double, std::span<const double>)>;
using EventGuard = std::function<bool(double, std::span<const double>)>;

struct IntegratorOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double h_init = 0.0;  // <= 0 selects the initial step automatically
    double h_min = 1e-14;
    double h_max = std::numeric_limits<double>::infinity();
    double event_tol = 1e-14;  // time bracket at which event bisection stops
    std::size_t max_steps = 20'000'000;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t, Vec state)
        : std::runtime_error(what), t_(t), state_(std::move(state)) {}
    double time() const noexcept { return t_; }
    const Vec& state() const noexcept { return state_; }

private:
    double t_;
    Vec state_;
};

/// The step size fell below h_min while the error estimate kept failing.
class StiffnessError : public IntegrationError {
public:
    using IntegrationError::IntegrationError;
};

/// Classical fourth-order Runge-Kutta with n_steps steps of size h.
Trajectory rk4_fixed(const Field& field, double t0, Vec s0, double h, std::size_t n_steps);

/// Adaptive integration over [t0, T]. T == t0 returns a single-node trajectory.
Trajectory integrate_adaptive(const Field& field, double t0, Vec s0, double T,
                              const IntegratorOptions& opts,
                              std::optional<StateLayout> layout = std::nullopt);

struct EventSpec {
    EventFn fn;
    int direction = 0;      // +1: rising crossings only, -1: falling only, 0: both
    bool terminal = true;
    EventGuard guard;       // optional; a located crossing failing the guard is ignored
    int departure = 0;      // sign assumed when fn(t0, s0) == 0 exactly; 0 refuses
};

struct EventHit {
    std::size_t event = 0;
    double t = 0.0;
    Vec state;
};

struct EventRun {
    Trajectory trajectory;
    std::vector<EventHit> hits;  // time ordered; a terminal hit, if any, is last
    bool terminated = false;     // a terminal event stopped the run before t_end
};

/// Integrates until t_end or the first accepted terminal event. Non-terminal
/// events are located and recorded without interrupting the run.
EventRun integrate_with_events(const Field& field, double t0, Vec s0, double t_end,
                               std::span<const EventSpec> events,
                               const IntegratorOptions& opts,
                               std::optional<StateLayout> layout = std::nullopt);

struct EventOutcome {
    bool found = false;  // false: no sign change before T_max (not an error)
    double t = 0.0;
    Vec state;
    Trajectory trajectory;
};

/// First sign change of event(s) along the flow from (t0, s0). If event(s0)
/// is exactly zero a departure direction (+1/-1: the sign the event takes just
/// after leaving) must be supplied, otherwise std::invalid_argument is thrown.
EventOutcome integrate_to_event(const Field& field, double t0, Vec s0,
                                const std::function<double(std::span<const double>)>& event,
                                double T_max, const IntegratorOptions& opts,
                                std::optional<int> departure = std::nullopt);

/// Exact solution of eps * u' = target - u after a time dt.
double relaxation_substep(double u0, double target, double eps, double dt);

}  // namespace nslab
