#include "nslab/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nslab {

namespace {

constexpr double kEventResidual = 1e-12;

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double c) { return std::isfinite(c); });
}

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

// Dormand-Prince 5(4) tableau.
namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp

class DormandPrince {
public:
    DormandPrince(const Field& field, std::size_t n)
        : field_(field), k2_(n), k3_(n), k4_(n), k5_(n), k6_(n), tmp_(n) {}

    // One step of size h from (t, s) with k1 = field(t, s). Writes the
    // fifth-order result into out, field(t + h, out) into k7, and returns the
    // scaled max-norm error estimate.
    double step(double t, std::span<const double> s, std::span<const double> k1, double h,
                std::span<double> out, std::span<double> k7, double rtol, double atol) {
        using namespace dp;
        const std::size_t n = s.size();
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = s[i] + h * a21 * k1[i];
        field_(t + c2 * h, tmp_, k2_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = s[i] + h * (a31 * k1[i] + a32 * k2_[i]);
        field_(t + c3 * h, tmp_, k3_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = s[i] + h * (a41 * k1[i] + a42 * k2_[i] + a43 * k3_[i]);
        field_(t + c4 * h, tmp_, k4_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = s[i] + h * (a51 * k1[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        field_(t + c5 * h, tmp_, k5_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = s[i] + h * (a61 * k1[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] +
                                  a65 * k5_[i]);
        field_(t + h, tmp_, k6_);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = s[i] + h * (a71 * k1[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] +
                                 a76 * k6_[i]);
        field_(t + h, out, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] +
                                  e6 * k6_[i] + e7 * k7[i]);
            const double scale = atol + rtol * std::max(std::abs(s[i]), std::abs(out[i]));
            const double r = std::abs(e) / scale;
            if (!(r <= err)) err = r;  // propagates NaN
        }
        return err;
    }

private:
    const Field& field_;
    Vec k2_, k3_, k4_, k5_, k6_, tmp_;
};

double initial_step(const Field& field, double t0, std::span<const double> s0,
                    std::span<const double> f0, double span, const IntegratorOptions& opts) {
    // Hairer, Norsett & Wanner, algorithm for the starting step.
    const std::size_t n = s0.size();
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = opts.atol + opts.rtol * std::abs(s0[i]);
        d0 = std::max(d0, std::abs(s0[i]) / sc);
        d1 = std::max(d1, std::abs(f0[i]) / sc);
    }
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, span, opts.h_max});
    Vec s1(n), f1(n);
    for (std::size_t i = 0; i < n; ++i) s1[i] = s0[i] + h0 * f0[i];
    field(t0 + h0, s1, f1);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = opts.atol + opts.rtol * std::abs(s0[i]);
        d2 = std::max(d2, std::abs(f1[i] - f0[i]) / sc);
    }
    d2 /= h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    return std::min({100.0 * h0, h1, span, opts.h_max});
}

}  // namespace

void IntegratorOptions::validate() const {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw std::invalid_argument("tolerances must be positive");
    if (!(h_min > 0.0) || !(h_min <= h_max)) throw std::invalid_argument("need 0 < h_min <= h_max");
    if (!(event_tol > 0.0)) throw std::invalid_argument("event_tol must be positive");
    if (max_steps == 0) throw std::invalid_argument("max_steps must be positive");
}

double relaxation_substep(double u0, double target, double eps, double dt) {
    if (dt == 0.0) return u0;
    return target + (u0 - target) * std::exp(-dt / eps);
}

Trajectory rk4_fixed(const Field& field, double t0, Vec s0, double h, std::size_t n_steps) {
    if (!(h > 0.0)) throw std::invalid_argument("rk4_fixed: h must be positive");
    const std::size_t n = s0.size();
    Trajectory traj(StateLayout::plain(n));
    Vec k1(n), k2(n), k3(n), k4(n), tmp(n), next(n);
    field(t0, s0, k1);
    traj.start(t0, s0);
    Vec s = std::move(s0);
    double t = t0;
    for (std::size_t step = 0; step < n_steps; ++step) {
        for (std::size_t i = 0; i < n; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
        field(t + 0.5 * h, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
        field(t + 0.5 * h, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = s[i] + h * k3[i];
        field(t + h, tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            next[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        const double t1 = t0 + static_cast<double>(step + 1) * h;
        if (!all_finite(next)) {
            std::ostringstream os;
            os << "rk4_fixed: non-finite state at step " << step + 1 << " (t=" << t1 << ")";
            throw IntegrationError(os.str(), t, s);
        }
        Vec d1(n);
        field(t1, next, d1);
        traj.append_segment(t1, next, k1, d1);
        s = next;
        k1 = d1;
        t = t1;
    }
    return traj;
}

EventRun integrate_with_events(const Field& field, double t0, Vec s0, double t_end,
                               std::span<const EventSpec> events,
                               const IntegratorOptions& opts,
                               std::optional<StateLayout> layout) {
    opts.validate();
    if (t_end < t0) throw std::invalid_argument("integrate: end time precedes start time");
    const std::size_t n = s0.size();
    if (!all_finite(s0)) throw IntegrationError("integrate: non-finite initial state", t0, s0);

    EventRun run;
    run.trajectory = Trajectory(layout.value_or(StateLayout::plain(n)));
    run.trajectory.start(t0, s0);

    // Current sign per event; 0 means undetermined (non-terminal event starting on zero).
    std::vector<int> signs(events.size(), 0);
    for (std::size_t e = 0; e < events.size(); ++e) {
        const int s = sign_of(events[e].fn(t0, s0));
        if (s != 0) {
            signs[e] = s;
        } else if (events[e].departure != 0) {
            signs[e] = events[e].departure > 0 ? 1 : -1;
        } else if (events[e].terminal) {
            throw std::invalid_argument(
                "integrate: event is zero at the initial state and no departure direction was given");
        }
    }
    if (t_end == t0) return run;

    DormandPrince stepper(field, n);
    Vec s = std::move(s0);
    Vec k1(n), k7(n), next(n), trial(n), trial_k(n);
    field(t0, s, k1);
    if (!all_finite(k1)) throw IntegrationError("integrate: non-finite field at initial state", t0, s);

    const double span = t_end - t0;
    double h = opts.h_init > 0.0 ? std::min({opts.h_init, opts.h_max, span})
                                 : initial_step(field, t0, s, k1, span, opts);
    double t = t0;
    double facold = 1e-4;
    std::size_t steps = 0;
    bool last_rejected = false;

    constexpr double kSafe = 0.9, kBeta = 0.04, kExpo1 = 0.2 - kBeta * 0.75;
    constexpr double kFacMaxShrink = 5.0, kFacMaxGrow = 0.1;  // h/fac with fac in [0.1, 5]

    while (t < t_end) {
        if (++steps > opts.max_steps) {
            throw IntegrationError("integrate: maximum number of steps exceeded", t, s);
        }
        bool final_step = false;
        if (t + h >= t_end) {
            h = t_end - t;
            final_step = true;
        }
        const double err = stepper.step(t, s, k1, h, next, k7, opts.rtol, opts.atol);
        if (!(err <= 1.0)) {
            // Reject; NaN error estimates shrink by the maximum factor.
            const double fac11 = std::isfinite(err) ? std::pow(err, kExpo1) : kFacMaxShrink * kSafe;
            h /= std::min(kFacMaxShrink, fac11 / kSafe);
            last_rejected = true;
            if (h < opts.h_min) {
                std::ostringstream os;
                os << "integrate: step size below h_min at t=" << t
                   << (std::isfinite(err) ? " (error test failing)" : " (non-finite state)");
                if (std::isfinite(err)) throw StiffnessError(os.str(), t, s);
                throw IntegrationError(os.str(), t, s);
            }
            continue;
        }

        const double t_new = final_step ? t_end : t + h;

        // Event bookkeeping over the accepted step [t, t_new].
        struct Crossing {
            std::size_t event;
            double tau;
        };
        std::vector<Crossing> crossings;
        std::vector<int> new_signs(signs);
        for (std::size_t e = 0; e < events.size(); ++e) {
            const double v = events[e].fn(t_new, next);
            const int ns = sign_of(v);
            if (signs[e] == 0) {
                new_signs[e] = ns;
                continue;
            }
            if (ns == signs[e]) continue;
            new_signs[e] = ns != 0 ? ns : -signs[e];
            const bool rising = signs[e] < 0;
            if (events[e].direction > 0 && !rising) continue;
            if (events[e].direction < 0 && rising) continue;
            crossings.push_back({e, 0.0});
        }

        auto state_at = [&](double tau, std::span<double> out) {
            if (tau == h) {
                std::copy(next.begin(), next.end(), out.begin());
                return;
            }
            stepper.step(t, s, k1, tau, out, trial_k, opts.rtol, opts.atol);
        };

        for (Crossing& c : crossings) {
            const EventSpec& ev = events[c.event];
            const int before = signs[c.event];
            double lo = 0.0, hi = h;
            double v_hi = ev.fn(t_new, next);
            for (int it = 0; it < 400; ++it) {
                if (std::abs(v_hi) <= kEventResidual || hi - lo <= opts.event_tol) break;
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                state_at(mid, trial);
                const double vm = ev.fn(t + mid, trial);
                if (sign_of(vm) == before) {
                    lo = mid;
                } else {
                    hi = mid;
                    v_hi = vm;
                }
            }
            c.tau = hi;
        }
        std::sort(crossings.begin(), crossings.end(),
                  [](const Crossing& a, const Crossing& b) { return a.tau < b.tau; });

        bool stop = false;
        for (const Crossing& c : crossings) {
            const EventSpec& ev = events[c.event];
            const double t_hit = c.tau == h ? t_new : t + c.tau;
            Vec hit_state(n);
            state_at(c.tau, hit_state);
            if (ev.guard && !ev.guard(t_hit, hit_state)) continue;
            run.hits.push_back({c.event, t_hit, hit_state});
            if (ev.terminal) {
                if (c.tau < h) {
                    Vec d1(n);
                    field(t_hit, hit_state, d1);
                    if (t_hit > t) run.trajectory.append_segment(t_hit, hit_state, k1, d1);
                    s = hit_state;
                    k1 = d1;
                } else {
                    run.trajectory.append_segment(t_new, next, k1, k7);
                    s = next;
                    k1 = k7;
                }
                t = t_hit;
                stop = true;
                break;
            }
        }
        if (stop) {
            run.terminated = true;
            return run;
        }

        if (!all_finite(next)) throw IntegrationError("integrate: non-finite state", t, s);
        run.trajectory.append_segment(t_new, next, k1, k7);
        signs = std::move(new_signs);
        t = t_new;
        std::swap(s, next);
        std::swap(k1, k7);

        // PI step-size update.
        const double fac11 = std::pow(std::max(err, 1e-16), kExpo1);
        double fac = fac11 / std::pow(facold, kBeta);
        fac = std::clamp(fac / kSafe, kFacMaxGrow, kFacMaxShrink);
        double h_new = h / fac;
        if (last_rejected) h_new = std::min(h_new, h);
        facold = std::max(err, 1e-4);
        last_rejected = false;
        h = std::min(h_new, opts.h_max);
    }
    return run;
}

Trajectory integrate_adaptive(const Field& field, double t0, Vec s0, double T,
                              const IntegratorOptions& opts, std::optional<StateLayout> layout) {
    return integrate_with_events(field, t0, std::move(s0), T, {}, opts, layout).trajectory;
}

EventOutcome integrate_to_event(const Field& field, double t0, Vec s0,
                                const std::function<double(std::span<const double>)>& event,
                                double T_max, const IntegratorOptions& opts,
                                std::optional<int> departure) {
    EventSpec spec;
    spec.fn = [&event](double, std::span<const double> s) { return event(s); };
    spec.terminal = true;
    spec.departure = departure.value_or(0);
    EventRun run = integrate_with_events(field, t0, std::move(s0), T_max,
                                         std::span<const EventSpec>(&spec, 1), opts);
    EventOutcome out;
    out.found = run.terminated;
    out.t = run.trajectory.back_time();
    out.state = run.trajectory.back_state();
    out.trajectory = std::move(run.trajectory);
    return out;
}

}  // namespace nslab
