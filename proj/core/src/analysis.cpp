#include "nslab/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace nslab {

double sup_error(const Trajectory& run, const Reference& reference, double t_a, double t_b,
                 std::size_t n) {
    if (!(t_b >= t_a)) throw std::invalid_argument("sup_error: empty window");
    if (n < 2) n = 2;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = t_a + (t_b - t_a) * static_cast<double>(i) / static_cast<double>(n - 1);
        const Vec x = run.eval_x(t);
        const Vec r = reference(t);
        for (std::size_t c = 0; c < x.size(); ++c) worst = std::max(worst, std::abs(x[c] - r[c]));
    }
    return worst;
}

double sup_error(const Trajectory& a, const Trajectory& b, double t_a, double t_b, std::size_t n) {
    return sup_error(a, [&b](double t) { return b.eval_x(t); }, t_a, t_b, n);
}

std::string_view to_string(Coupling c) {
    switch (c) {
        case Coupling::Hysteresis: return "hysteresis";
        case Coupling::Smoothing: return "smoothing";
        case Coupling::EpsilonAlphaSquared: return "eps=alpha^2";
        case Coupling::KappaConstant: return "kappa-const";
    }
    return "unknown";
}

PowerFit fit_power_law(std::span<const double> alphas, std::span<const double> errors,
                       Correction correction) {
    if (alphas.size() != errors.size()) throw std::invalid_argument("fit_power_law: size mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        double e = errors[i];
        if (!(e > 0.0) || !std::isfinite(e) || !(alphas[i] > 0.0)) continue;
        if (correction == Correction::LogFactor) e /= std::abs(std::log(alphas[i] / 2.0));
        lx.push_back(std::log(alphas[i]));
        ly.push_back(std::log(e));
    }
    const std::size_t n = lx.size();
    PowerFit fit;
    if (n < 2) {
        fit.order = fit.constant = fit.r_squared = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    fit.order = sxy / sxx;
    fit.constant = std::exp(my - fit.order * mx);
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

double transient_window(double alpha, double eps) {
    return std::max(10.0 * eps, 10.0 * std::abs(alpha));
}

RegularizationRun regularized_run(const SwitchedSystem& sys, Coupling coupling, const Vec& x0,
                                  double T, double alpha, double kappa,
                                  const IntegratorOptions& opts) {
    switch (coupling) {
        case Coupling::Hysteresis:
            return run_hysteresis(sys, x0, -alpha, -1, alpha, T, opts);
        case Coupling::Smoothing: {
            const Sigmoid phi = sigmoid_cubic();
            return run_smoothed(sys, x0, 0.0, alpha, phi, T, opts);
        }
        case Coupling::EpsilonAlphaSquared:
            return run_embedded(sys, x0, 0.0, 1.0, alpha, alpha * alpha, T, opts);
        case Coupling::KappaConstant: {
            const double a = kappa < 0.0 ? -alpha : alpha;
            return run_embedded(sys, x0, 0.0, 1.0, a, std::abs(kappa) * alpha, T, opts);
        }
    }
    throw std::invalid_argument("regularized_run: unknown coupling");
}

ConvergenceReport convergence_study(const SwitchedSystem& sys, const ConvergenceSetup& setup) {
    if (setup.alphas.size() < 4) throw std::invalid_argument("convergence_study: at least 4 alphas are required");
    for (std::size_t i = 0; i < setup.alphas.size(); ++i) {
        if (!(setup.alphas[i] > 0.0)) throw std::invalid_argument("convergence_study: alphas must be positive");
        if (i > 0 && !(setup.alphas[i] < setup.alphas[i - 1])) {
            throw std::invalid_argument("convergence_study: alphas must be strictly decreasing");
        }
    }
    if (!(setup.T > 0.0)) throw std::invalid_argument("convergence_study: T must be positive");
    if (setup.coupling == Coupling::KappaConstant && !(setup.kappa != 0.0)) {
        throw std::invalid_argument("convergence_study: kappa must be non-zero");
    }

    ConvergenceReport rep;
    rep.coupling = setup.coupling;
    rep.correction = setup.correction;
    rep.alphas = setup.alphas;
    switch (setup.coupling) {
        case Coupling::Hysteresis:
            rep.method = Method::Hysteresis;
            rep.reference = SlidingKind::Filippov;
            break;
        case Coupling::Smoothing:
            rep.method = Method::Smoothing;
            rep.reference = SlidingKind::Utkin;
            break;
        case Coupling::EpsilonAlphaSquared:
            rep.method = Method::Embedding;
            rep.reference = SlidingKind::Filippov;
            break;
        case Coupling::KappaConstant:
            rep.method = Method::Embedding;
            rep.reference = setup.kappa < 0.0 ? SlidingKind::Utkin : SlidingKind::Filippov;
            break;
    }
    if (setup.reference) rep.reference = *setup.reference;

    const SlideResult ref = slide(sys, rep.reference, setup.x0, setup.T, setup.reference_opts);
    const double t_ref = ref.stop_time;

    const std::size_t n = setup.alphas.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.errors.assign(n, nan);
    rep.epsilons.assign(n, 0.0);
    rep.y_excursions.assign(n, nan);
    std::vector<std::string> failure(n);

    auto work = [&](std::size_t i) {
        const double a = setup.alphas[i];
        double eps = 0.0;
        if (setup.coupling == Coupling::EpsilonAlphaSquared) eps = a * a;
        if (setup.coupling == Coupling::KappaConstant) eps = std::abs(setup.kappa) * a;
        rep.epsilons[i] = eps;
        try {
            const RegularizationRun run =
                regularized_run(sys, setup.coupling, setup.x0, setup.T, a, setup.kappa, setup.run_opts);
            const double t_end = std::min(t_ref, run.stop_time);
            if (run.flagged()) {
                std::ostringstream os;
                os << "alpha=" << a << ": run stopped (" << to_string(run.stop) << ") at t=" << run.stop_time;
                failure[i] = os.str();
            }
            rep.errors[i] = sup_error(run.trajectory, ref.trajectory, 0.0, t_end);
            const Trajectory& tr = run.trajectory;
            const std::size_t yi = tr.layout().y_index();
            const double tw = transient_window(a, eps);
            double ymax = 0.0;
            for (std::size_t j = 0; j < tr.size(); ++j) {
                if (tr.times()[j] >= tw) ymax = std::max(ymax, std::abs(tr.states()[j][yi]));
            }
            for (int j = 0; j <= 1000 && tw < t_end; ++j) {
                const double t = tw + (t_end - tw) * j / 1000.0;
                ymax = std::max(ymax, std::abs(tr.eval(t)[yi]));
            }
            rep.y_excursions[i] = ymax;
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "alpha=" << a << ": " << e.what();
            failure[i] = os.str();
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(setup.threads, static_cast<unsigned>(n)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) work(i);
            });
        }
        for (std::thread& th : pool) th.join();
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (!failure[i].empty()) rep.failures.push_back(failure[i]);
    }
    if (ref.stop != SlideStop::Completed) {
        rep.failures.push_back("reference slide stopped early at t=" + std::to_string(t_ref));
    }
    rep.flagged = !rep.failures.empty();
    rep.fit = fit_power_law(rep.alphas, rep.errors, rep.correction);
    return rep;
}

namespace {

// Time for the frozen-u flow from (x, y) to reach y = level; nullopt if not
// reached within t_max.
std::optional<double> time_to_level(const SwitchedSystem& sys, std::span<const double> x, double y,
                                    double u, double level, double t_max,
                                    const IntegratorOptions& opts) {
    const std::size_t k = sys.dim;
    Field field = [&sys, k, u](double, std::span<const double> s, std::span<double> d) {
        sys.rate_x(s.first(k), s[k], u, d.first(k));
        d[k] = sys.g(s.first(k), s[k], u);
    };
    Vec s0(x.begin(), x.end());
    s0.push_back(y);
    const EventOutcome o = integrate_to_event(
        field, 0.0, std::move(s0), [k, level](std::span<const double> s) { return s[k] - level; },
        t_max, opts);
    if (!o.found) return std::nullopt;
    return o.t;
}

}  // namespace

double isochrone_leading_order(const SwitchedSystem& sys, std::span<const double> x, double alpha) {
    const double gp = sys.g(x, 0.0, 1.0);
    const double gm = sys.g(x, 0.0, -1.0);
    return alpha * (gp + gm) / (gp - gm);
}

std::vector<IsochronePoint> isochrone(const SwitchedSystem& sys, double alpha,
                                      const std::vector<Vec>& x_grid, double tol,
                                      const IntegratorOptions& opts) {
    if (!(alpha > 0.0)) throw std::invalid_argument("isochrone: alpha must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("isochrone: tol must be positive");
    std::vector<IsochronePoint> out;
    for (const Vec& x : x_grid) {
        IsochronePoint p;
        p.x = x;
        const double gp = sys.g(x, 0.0, 1.0);
        const double gm = sys.g(x, 0.0, -1.0);
        if (!(gp < 0.0) || !(gm > 0.0)) {
            p.flagged = true;
            p.y_p = std::numeric_limits<double>::quiet_NaN();
            out.push_back(std::move(p));
            continue;
        }
        const double t_max = 100.0 * 2.0 * alpha / std::min(-gp, gm) + 1.0;
        // D(y) = T-(y) - T+(y): positive near y = -alpha, negative near +alpha.
        auto D = [&](double y) -> std::optional<double> {
            const auto tm = time_to_level(sys, x, y, -1.0, alpha, t_max, opts);
            const auto tp = time_to_level(sys, x, y, 1.0, -alpha, t_max, opts);
            if (!tm || !tp) return std::nullopt;
            return *tm - *tp;
        };
        double lo = -alpha, hi = alpha;
        double y = 0.0, d = 0.0;
        bool ok = true, collapsed = false;
        for (int it = 0; it < 200; ++it) {
            y = 0.5 * (lo + hi);
            const auto dv = D(y);
            if (!dv) {
                ok = false;
                break;
            }
            d = *dv;
            if (std::abs(d) <= tol) break;
            // Bracket down to adjacent doubles: what is left of d is hit-time noise.
            if (y == lo || y == hi) {
                collapsed = true;
                break;
            }
            if (d > 0.0) lo = y;
            else hi = y;
        }
        p.y_p = y;
        p.residual = std::abs(d);
        p.flagged = !ok || (p.residual > tol && !collapsed);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<SlowCurvePoint> slow_curve_Q(const SwitchedSystem& sys, double alpha, double eps,
                                         const std::vector<Vec>& x_grid, const Sigmoid& sigmoid) {
    if (!(eps >= 0.0)) throw std::invalid_argument("slow_curve_Q: eps must be non-negative");
    std::vector<SlowCurvePoint> out;
    for (const Vec& x : x_grid) {
        SlowCurvePoint p;
        p.x = x;
        try {
            p.u = utkin_control(sys, x);
        } catch (const BracketError&) {
            p.flagged = true;
            p.u = p.y = std::numeric_limits<double>::quiet_NaN();
            out.push_back(std::move(p));
            continue;
        }
        if (!(std::abs(p.u) < 1.0)) {
            p.flagged = true;
            p.y = std::numeric_limits<double>::quiet_NaN();
        } else {
            p.y = (eps > 0.0 ? eps * sigmoid.inverse(p.u) : 0.0) - alpha * p.u;
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace nslab
