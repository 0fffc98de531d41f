#pragma once

// Sliding dynamics on y = 0: Filippov's convex combination and Utkin's
// equivalent control.

#include <stdexcept>
#include <string>

#include "nslab/integrator.hpp"
#include "nslab/model.hpp"
#include "nslab/trajectory.hpp"

namespace nslab {

enum class SlidingKind { Filippov, Utkin };

std::string_view to_string(SlidingKind kind);

/// g(x,0,-1) and g(x,0,+1) too close to define a convex combination.
class DegenerateCrossingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// g(x,0,-1) and g(x,0,+1) do not bracket a root.
class BracketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// lambda = g-/(g- - g+) at (x, 0).
double filippov_lambda(const SwitchedSystem& sys, std::span<const double> x);
Vec filippov_field(const SwitchedSystem& sys, std::span<const double> x);

/// Root of g(x, 0, .) on [-1, 1] by bisection, |g| <= 1e-12 at the result.
double utkin_control(const SwitchedSystem& sys, std::span<const double> x);
Vec utkin_field(const SwitchedSystem& sys, std::span<const double> x);

/// Filippov lambda or Utkin control, whichever `kind` selects.
double sliding_auxiliary(const SwitchedSystem& sys, SlidingKind kind, std::span<const double> x);

enum class SlideStop { Completed, DomainExit, SlidingExit };

struct SlideResult {
    Trajectory trajectory;
    SlideStop stop = SlideStop::Completed;
    double stop_time = 0.0;
};

/// Integrates the sliding ODE from x0 over [0, T]. Stops early if |x| reaches
/// M or the auxiliary leaves its admissible interval.
SlideResult slide(const SwitchedSystem& sys, SlidingKind kind, const Vec& x0, double T,
                  const IntegratorOptions& opts);

}  // namespace nslab
