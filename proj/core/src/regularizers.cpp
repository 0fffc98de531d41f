#include "nslab/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nslab {

namespace {

void check_start(const SwitchedSystem& sys, const Vec& x0, double T, const char* who) {
    if (x0.size() != sys.dim) throw std::invalid_argument(std::string(who) + ": x0 has wrong dimension");
    if (!(max_norm(x0) < sys.bound)) throw std::invalid_argument(std::string(who) + ": |x0| must be below M");
    if (!(T >= 0.0)) throw std::invalid_argument(std::string(who) + ": T must be non-negative");
}

EventSpec domain_event(const SwitchedSystem& sys) {
    EventSpec ev;
    const std::size_t k = sys.dim;
    const double M = sys.bound;
    ev.fn = [k, M](double, std::span<const double> s) { return M - max_norm(s.first(k)); };
    ev.direction = -1;
    return ev;
}

Vec concat(const Vec& x, std::initializer_list<double> tail) {
    Vec s(x);
    s.insert(s.end(), tail);
    return s;
}

// Scalar monitor on the full (x, y, u) state of the embedding.
struct Monitor {
    std::function<double(std::span<const double>)> fn;
    int direction = 0;
    std::function<bool(std::span<const double>)> guard;
    int tag = 0;
    bool terminal = false;
    int departure = 0;
};

struct MonitorHit {
    int tag = 0;
    double t = 0.0;
    Vec state;
};

struct EmbeddedOutcome {
    Trajectory trajectory;
    std::vector<MonitorHit> hits;
    RunStop stop = RunStop::Completed;
    bool terminal_hit = false;
};

EmbeddedOutcome execute_embedded(const SwitchedSystem& sys, const Vec& x0, double y0, double u0,
                                 double alpha, double eps, double T, const IntegratorOptions& opts,
                                 const std::vector<Monitor>& monitors) {
    const std::size_t k = sys.dim;
    const StateLayout layout = StateLayout::embedded(k);
    EmbeddedOutcome out;
    out.trajectory = Trajectory(layout);

    Vec s = concat(x0, {y0, u0});
    auto phase_of = [&](std::span<const double> st) {
        const double w = st[k] + alpha * st[k + 1];
        if (w > eps) return 1;
        if (w < -eps) return -1;
        if (std::abs(w) < eps) return 0;
        // On the core boundary the field is continuous; follow its direction.
        const double u = st[k + 1];
        const double wdot = sys.g(st.first(k), st[k], u) + alpha * (cubic_value(w / eps) - u) / eps;
        const int side = w > 0.0 ? 1 : -1;
        return side * wdot > 0.0 ? side : 0;
    };
    out.trajectory.start(0.0, s, phase_of(s), u0);

    IntegratorOptions core_opts = opts;
    core_opts.h_max = std::min(opts.h_max, eps / 4.0);

    double t = 0.0;
    int stalls = 0;
    while (t < T) {
        const int sigma = phase_of(s);
        std::vector<EventSpec> events;
        std::size_t first_monitor = 0;
        EventRun run;

        if (sigma != 0) {
            const double t_s = t;
            const double u_s = s[k + 1];
            auto u_at = [t_s, u_s, sigma, eps](double tt) {
                return relaxation_substep(u_s, static_cast<double>(sigma), eps, tt - t_s);
            };
            Field field = [&sys, k, u_at](double tt, std::span<const double> st, std::span<double> d) {
                const double u = u_at(tt);
                sys.rate_x(st.first(k), st[k], u, d.first(k));
                d[k] = sys.g(st.first(k), st[k], u);
            };
            EventSpec boundary;
            boundary.fn = [u_at, sigma, alpha, eps, k](double tt, std::span<const double> st) {
                return sigma * (st[k] + alpha * u_at(tt)) - eps;
            };
            boundary.direction = -1;
            boundary.departure = 1;
            events.push_back(boundary);
            events.push_back(domain_event(sys));
            first_monitor = events.size();
            for (const Monitor& m : monitors) {
                EventSpec ev;
                ev.fn = [u_at, k, buf = Vec(k + 2), fn = m.fn](double tt, std::span<const double> st) mutable {
                    std::copy(st.begin(), st.end(), buf.begin());
                    buf[k + 1] = u_at(tt);
                    return fn(buf);
                };
                if (m.guard) {
                    ev.guard = [u_at, k, buf = Vec(k + 2), g = m.guard](double tt, std::span<const double> st) mutable {
                        std::copy(st.begin(), st.end(), buf.begin());
                        buf[k + 1] = u_at(tt);
                        return g(buf);
                    };
                }
                ev.direction = m.direction;
                ev.terminal = m.terminal;
                ev.departure = m.departure;
                events.push_back(std::move(ev));
            }
            Vec s2(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k + 1));
            EventRun planar = integrate_with_events(field, t, std::move(s2), T, events, opts,
                                                    StateLayout::planar(k));
            // Lift to (x, y, u) with the closed-form u.
            const Trajectory& p = planar.trajectory;
            Trajectory lifted(layout);
            auto lift = [&](std::size_t i) {
                Vec st = p.states()[i];
                st.push_back(u_at(p.times()[i]));
                return st;
            };
            auto lift_slope = [&](const Vec& d, double tt) {
                Vec r = d;
                r.push_back((sigma - u_at(tt)) / eps);
                return r;
            };
            lifted.start(p.times()[0], lift(0));
            for (std::size_t i = 1; i < p.size(); ++i) {
                lifted.append_segment(p.times()[i], lift(i),
                                      lift_slope(p.segment_start_slope(i - 1), p.times()[i - 1]),
                                      lift_slope(p.segment_end_slope(i - 1), p.times()[i]));
            }
            run.trajectory = std::move(lifted);
            run.terminated = planar.terminated;
            run.hits = std::move(planar.hits);
            for (EventHit& h : run.hits) h.state.push_back(u_at(h.t));
        } else {
            Field field = [&sys, k, alpha, eps](double, std::span<const double> st, std::span<double> d) {
                const double y = st[k];
                const double u = st[k + 1];
                sys.rate_x(st.first(k), y, u, d.first(k));
                d[k] = sys.g(st.first(k), y, u);
                d[k + 1] = (cubic_value((y + alpha * u) / eps) - u) / eps;
            };
            EventSpec up;
            up.fn = [k, alpha, eps](double, std::span<const double> st) {
                return st[k] + alpha * st[k + 1] - eps;
            };
            up.direction = 1;
            up.departure = -1;
            EventSpec down;
            down.fn = [k, alpha, eps](double, std::span<const double> st) {
                return st[k] + alpha * st[k + 1] + eps;
            };
            down.direction = -1;
            down.departure = 1;
            events = {up, down, domain_event(sys)};
            first_monitor = events.size();
            for (const Monitor& m : monitors) {
                EventSpec ev;
                ev.fn = [fn = m.fn](double, std::span<const double> st) { return fn(st); };
                if (m.guard) ev.guard = [g = m.guard](double, std::span<const double> st) { return g(st); };
                ev.direction = m.direction;
                ev.terminal = m.terminal;
                ev.departure = m.departure;
                events.push_back(std::move(ev));
            }
            run = integrate_with_events(field, t, s, T, events, core_opts, layout);
        }

        for (std::size_t i = 0; i < run.trajectory.size(); ++i) {
            run.trajectory.annotate(i, sigma, run.trajectory.states()[i][k + 1]);
        }
        out.trajectory.splice(run.trajectory);
        for (const EventHit& h : run.hits) {
            if (h.event >= first_monitor) {
                const Monitor& m = monitors[h.event - first_monitor];
                out.hits.push_back({m.tag, h.t, h.state});
                out.trajectory.add_event({h.t, EventKind::SectionCrossing, m.tag});
            }
        }

        const double t_new = out.trajectory.back_time();
        if (t_new <= t) {
            if (++stalls > 1000) {
                throw IntegrationError("run_embedded: phase switching without progress", t, s);
            }
        } else {
            stalls = 0;
        }
        t = t_new;
        s = out.trajectory.back_state();
        if (!run.terminated) break;

        const EventHit& last = run.hits.back();
        if (last.event >= first_monitor) {
            out.terminal_hit = true;
            break;
        }
        const std::size_t domain_index = sigma != 0 ? 1 : 2;
        if (last.event == domain_index) {
            out.stop = RunStop::DomainExit;
            break;
        }
        if (sigma == 0) {
            out.trajectory.add_event({t, last.event == 0 ? EventKind::SwitchUp : EventKind::SwitchDown, 0});
        }
        const int next = phase_of(s);
        out.trajectory.annotate(out.trajectory.size() - 1, next, s[k + 1]);
    }
    return out;
}

}  // namespace

std::string_view to_string(Method m) {
    switch (m) {
        case Method::Hysteresis: return "hysteresis";
        case Method::Smoothing: return "smoothing";
        case Method::Embedding: return "embedding";
    }
    return "unknown";
}

std::string_view to_string(RunStop s) {
    switch (s) {
        case RunStop::Completed: return "completed";
        case RunStop::DomainExit: return "domain-exit";
        case RunStop::NonAttracting: return "non-attracting";
        case RunStop::NoReturn: return "no-return";
    }
    return "unknown";
}

RegularizationRun run_hysteresis(const SwitchedSystem& sys, const Vec& x0, double y0, int mode0,
                                 double alpha, double T, const IntegratorOptions& opts) {
    check_start(sys, x0, T, "run_hysteresis");
    if (!(alpha > 0.0)) throw std::invalid_argument("run_hysteresis: alpha must be positive");
    if (mode0 != 1 && mode0 != -1) throw std::invalid_argument("run_hysteresis: mode0 must be -1 or +1");
    if (!std::isfinite(y0)) throw std::invalid_argument("run_hysteresis: y0 must be finite");
    if (mode0 == 1 && y0 < -alpha) throw std::invalid_argument("run_hysteresis: mode +1 requires y0 >= -alpha");
    if (mode0 == -1 && y0 > alpha) throw std::invalid_argument("run_hysteresis: mode -1 requires y0 <= alpha");

    const std::size_t k = sys.dim;
    RegularizationRun res;
    res.method = Method::Hysteresis;
    res.params.alpha = alpha;
    res.trajectory = Trajectory(StateLayout::planar(k));

    Vec s = concat(x0, {y0});
    int mode = mode0;
    res.trajectory.start(0.0, s, mode, mode);
    if (mode == 1 && y0 == -alpha) {
        mode = -1;
        res.trajectory.add_event({0.0, EventKind::SwitchDown, 0});
    } else if (mode == -1 && y0 == alpha) {
        mode = 1;
        res.trajectory.add_event({0.0, EventKind::SwitchUp, 0});
    }
    res.trajectory.annotate(0, mode, mode);

    std::optional<CycleRecord> open;
    double t_up = 0.0;
    bool have_up = false;
    if (mode == -1 && y0 == -alpha) open = CycleRecord{0, 0.0, x0, 0.0, 0.0, {}};

    double t = 0.0;
    while (t < T) {
        const double u = mode;
        Field field = [&sys, k, u](double, std::span<const double> st, std::span<double> d) {
            sys.rate_x(st.first(k), st[k], u, d.first(k));
            d[k] = sys.g(st.first(k), st[k], u);
        };
        EventSpec plane;
        const double level = mode < 0 ? alpha : -alpha;
        plane.fn = [k, level](double, std::span<const double> st) { return st[k] - level; };
        plane.direction = mode < 0 ? 1 : -1;
        const EventSpec events[] = {plane, domain_event(sys)};

        EventRun run = integrate_with_events(field, t, s, T, events, opts, StateLayout::planar(k));
        for (std::size_t i = 0; i < run.trajectory.size(); ++i) run.trajectory.annotate(i, mode, mode);
        res.trajectory.splice(run.trajectory);
        t = res.trajectory.back_time();
        s = res.trajectory.back_state();

        if (!run.terminated) {
            const double dy = sys.g(std::span<const double>(s).first(k), s[k], u);
            if (mode * dy >= 0.0) res.stop = RunStop::NonAttracting;
            break;
        }
        if (run.hits.back().event == 1) {
            res.stop = RunStop::DomainExit;
            break;
        }
        const Vec x(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(k));
        if (mode < 0) {
            mode = 1;
            res.trajectory.add_event({t, EventKind::SwitchUp, 0});
            if (open) open->T_minus = t - open->t_start;
            t_up = t;
            have_up = open.has_value();
        } else {
            mode = -1;
            res.trajectory.add_event({t, EventKind::SwitchDown, 0});
            if (open && have_up) {
                open->T_plus = t - t_up;
                open->delta_x.resize(k);
                for (std::size_t i = 0; i < k; ++i) open->delta_x[i] = x[i] - open->x_start[i];
                open->index = res.cycles.size();
                res.cycles.push_back(*open);
            }
            open = CycleRecord{0, t, x, 0.0, 0.0, {}};
            have_up = false;
        }
        res.trajectory.annotate(res.trajectory.size() - 1, mode, mode);
    }
    res.stop_time = t;
    return res;
}

RegularizationRun run_smoothed(const SwitchedSystem& sys, const Vec& x0, double y0, double alpha,
                               const Sigmoid& sigmoid, double T, const IntegratorOptions& opts) {
    check_start(sys, x0, T, "run_smoothed");
    if (!(alpha > 0.0)) throw std::invalid_argument("run_smoothed: alpha must be positive");
    if (!(std::abs(y0) <= alpha)) throw std::invalid_argument("run_smoothed: |y0| must not exceed alpha");

    const std::size_t k = sys.dim;
    Field field = [&sys, &sigmoid, k, alpha](double, std::span<const double> st, std::span<double> d) {
        const double u = sigmoid(st[k] / alpha);
        sys.rate_x(st.first(k), st[k], u, d.first(k));
        d[k] = sys.g(st.first(k), st[k], u);
    };
    const EventSpec events[] = {domain_event(sys)};
    EventRun run = integrate_with_events(field, 0.0, concat(x0, {y0}), T, events, opts,
                                         StateLayout::planar(k));
    RegularizationRun res;
    res.method = Method::Smoothing;
    res.params.alpha = alpha;
    for (std::size_t i = 0; i < run.trajectory.size(); ++i) {
        run.trajectory.annotate(i, 0, sigmoid(run.trajectory.states()[i][k] / alpha));
    }
    res.trajectory = std::move(run.trajectory);
    res.stop_time = res.trajectory.back_time();
    if (run.terminated) res.stop = RunStop::DomainExit;
    return res;
}

RegularizationRun run_embedded(const SwitchedSystem& sys, const Vec& x0, double y0, double u0,
                               double alpha, double eps, double T, const IntegratorOptions& opts) {
    check_start(sys, x0, T, "run_embedded");
    if (!(alpha != 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("run_embedded: alpha must be non-zero");
    if (!(eps > 0.0)) throw std::invalid_argument("run_embedded: eps must be positive");
    if (!(std::abs(u0) <= 1.0 + kDeltaOne)) throw std::invalid_argument("run_embedded: |u0| must not exceed 1 + 1/4");
    if (!std::isfinite(y0)) throw std::invalid_argument("run_embedded: y0 must be finite");
    const double kappa = eps / alpha;
    if (alpha > 0.0 && !(kappa < 0.25)) throw std::invalid_argument("run_embedded: need eps/alpha < 1/4 for alpha > 0");

    const std::size_t k = sys.dim;
    std::vector<Monitor> monitors;
    if (alpha > 0.0) {
        Monitor sigma0;
        sigma0.fn = [k](std::span<const double> st) { return st[k]; };
        sigma0.direction = -1;
        sigma0.guard = [k](std::span<const double> st) { return st[k + 1] > 0.0; };
        sigma0.tag = 0;
        sigma0.departure = -1;
        Monitor down;
        down.fn = [k](std::span<const double> st) { return st[k + 1]; };
        down.direction = -1;
        down.tag = 1;
        Monitor up = down;
        up.direction = 1;
        up.tag = 2;
        monitors = {sigma0, down, up};
    }

    EmbeddedOutcome o = execute_embedded(sys, x0, y0, u0, alpha, eps, T, opts, monitors);

    RegularizationRun res;
    res.method = Method::Embedding;
    res.params = {alpha, eps, kappa, 0.0};
    res.stop = o.stop;
    res.stop_time = o.trajectory.back_time();

    std::optional<MonitorHit> start;
    double t_down = -1.0, t_up = -1.0;  // negative: not seen in the open cycle
    for (const MonitorHit& h : o.hits) {
        if (h.tag == 1 && start) t_down = h.t;
        if (h.tag == 2 && start && t_down >= 0.0) t_up = h.t;
        if (h.tag != 0) continue;
        if (start && t_down >= 0.0 && t_up >= 0.0) {
            CycleRecord c;
            c.index = res.cycles.size();
            c.t_start = start->t;
            c.x_start.assign(start->state.begin(), start->state.begin() + static_cast<std::ptrdiff_t>(k));
            c.T_minus = t_up - t_down;
            c.T_plus = (h.t - start->t) - c.T_minus;
            c.delta_x.resize(k);
            for (std::size_t i = 0; i < k; ++i) c.delta_x[i] = h.state[i] - start->state[i];
            res.cycles.push_back(std::move(c));
        }
        start = h;
        t_down = t_up = -1.0;
    }
    res.trajectory = std::move(o.trajectory);
    // Cycle-bookkeeping crossings are internal; keep only switching events.
    std::erase_if(res.trajectory.events(),
                  [](const TrajectoryEvent& e) { return e.kind == EventKind::SectionCrossing; });
    return res;
}

CycleAsymptotics measure_cycle_asymptotics(const RegularizationRun& run, const SwitchedSystem& sys) {
    CycleAsymptotics out;
    const double alpha = run.params.alpha;
    for (const CycleRecord& c : run.cycles) {
        const double gm = sys.g(c.x_start, 0.0, -1.0);
        const double r = std::abs(c.T_minus - 2.0 * alpha / gm);
        out.residuals.push_back(r);
        out.max_residual = std::max(out.max_residual, r);
    }
    return out;
}

double field_bound(const SwitchedSystem& sys) {
    constexpr int kY = 9;
    constexpr int kU = 21;
    const double u_max = 1.0 + kDeltaOne;
    double c = 0.0;
    Vec fx(sys.dim);
    for (const Vec& x : sample_domain(sys, sys.dim == 1 ? 41 : 400)) {
        for (int iy = 0; iy < kY; ++iy) {
            const double y = -1.0 + 2.0 * iy / (kY - 1);
            for (int iu = 0; iu < kU; ++iu) {
                const double u = -u_max + 2.0 * u_max * iu / (kU - 1);
                sys.rate_x(x, y, u, fx);
                c = std::max({c, max_norm(fx), std::abs(sys.g(x, y, u))});
            }
        }
    }
    return c;
}

PoincareResult poincare_return(const SwitchedSystem& sys, double alpha, double eps, double delta0,
                               const Vec& x0, double u0, const IntegratorOptions& opts,
                               double t_cap) {
    if (!(alpha > 0.0)) throw std::invalid_argument("poincare_return: alpha must be positive");
    if (!(delta0 >= 0.0)) throw std::invalid_argument("poincare_return: delta0 must be non-negative");
    const double width = std::max(delta0, 1e-9);
    if (!(std::abs(u0 - 1.0) <= width)) {
        throw std::invalid_argument("poincare_return: start must lie on the section (|u0 - 1| <= delta0)");
    }
    check_start(sys, x0, 0.0, "poincare_return");

    const std::size_t k = sys.dim;
    const double kappa = eps / alpha;
    const double C = field_bound(sys);
    const double d = std::max(delta0, 1e-9);
    const double shift = C * kappa * std::log(d / (2.0 - d - 2.0 * kappa));  // negative

    if (t_cap <= 0.0) {
        const double gp = std::abs(sys.g(x0, 0.0, 1.0));
        const double gm = std::abs(sys.g(x0, 0.0, -1.0));
        t_cap = 20.0 * (2.0 * alpha / std::max(gp, 1e-6) + 2.0 * alpha / std::max(gm, 1e-6));
    }

    auto v_minus = [k, alpha](double level) {
        return [k, alpha, level](std::span<const double> st) { return st[k] / alpha - level; };
    };
    auto u_minus = [k](double level) {
        return [k, level](std::span<const double> st) { return st[k + 1] - level; };
    };
    auto near_plus = [k, width](std::span<const double> st) { return std::abs(st[k + 1] - 1.0) <= width; };
    auto near_minus = [k, width](std::span<const double> st) { return std::abs(st[k + 1] + 1.0) <= width; };
    auto below = [k](std::span<const double> st) { return st[k] < 0.0; };
    auto above = [k](std::span<const double> st) { return st[k] > 0.0; };

    std::vector<Monitor> mons;
    auto add = [&](int tag, std::function<double(std::span<const double>)> fn, int dir,
                   std::function<bool(std::span<const double>)> guard) {
        Monitor m;
        m.fn = std::move(fn);
        m.direction = dir;
        m.guard = std::move(guard);
        m.tag = tag;
        mons.push_back(std::move(m));
    };
    add(0, v_minus(0.0), -1, near_plus);
    mons.back().terminal = true;
    mons.back().departure = -1;
    add(1, v_minus(-1.0 + delta0 + kappa), -1, near_plus);
    add(2, u_minus(1.0 - delta0 - 2.0 * kappa), -1, below);
    add(3, u_minus(-1.0 + delta0), -1, below);
    add(4, v_minus(-1.0 + delta0 + kappa - shift), 1, near_minus);
    add(5, v_minus(1.0 - delta0 - kappa), 1, near_minus);
    add(6, u_minus(-1.0 + delta0 + 2.0 * kappa), 1, above);
    add(7, u_minus(1.0 - delta0), 1, above);
    add(8, v_minus(1.0 - delta0 - kappa + shift), -1, near_plus);

    EmbeddedOutcome o = execute_embedded(sys, x0, 0.0, u0, alpha, eps, t_cap, opts, mons);

    PoincareResult res;
    res.stop = o.stop;
    for (const MonitorHit& h : o.hits) {
        if (h.tag != 0) res.trace.push_back({h.tag, h.t, h.state});
    }
    if (o.terminal_hit) {
        const MonitorHit& h = o.hits.back();
        res.returned = true;
        res.T1 = h.t;
        res.state_return = h.state;
        res.x_return.assign(h.state.begin(), h.state.begin() + static_cast<std::ptrdiff_t>(k));
        res.delta_x.resize(k);
        for (std::size_t i = 0; i < k; ++i) res.delta_x[i] = res.x_return[i] - x0[i];
    } else if (res.stop == RunStop::Completed) {
        res.stop = RunStop::NoReturn;
    }
    res.trajectory = std::move(o.trajectory);
    return res;
}

}  // namespace nslab
