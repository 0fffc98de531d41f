#include "nslab/resolvers.hpp"

#include <cmath>
#include <sstream>

namespace nslab {

namespace {

constexpr double kDegenerate = 1e-14;

struct OneSided {
    double g_plus;
    double g_minus;
};

OneSided one_sided(const SwitchedSystem& sys, std::span<const double> x) {
    return {sys.g(x, 0.0, 1.0), sys.g(x, 0.0, -1.0)};
}

// Bisection for g(x,0,u) = 0 between a and b (g(a) > 0 > g(b) or the reverse).
double bisect_root(const SwitchedSystem& sys, std::span<const double> x, double a, double b) {
    double ga = sys.g(x, 0.0, a);
    double gb = sys.g(x, 0.0, b);
    if (ga == 0.0) return a;
    if (gb == 0.0) return b;
    if ((ga > 0.0) == (gb > 0.0)) {
        std::ostringstream os;
        os << "utkin_control: g(x,0,u) has the same sign at u=" << a << " and u=" << b;
        throw BracketError(os.str());
    }
    double mid = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (a + b);
        const double gm = sys.g(x, 0.0, mid);
        if (gm == 0.0 || mid == a || mid == b) break;
        if ((gm > 0.0) == (ga > 0.0)) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    return mid;
}

}  // namespace

std::string_view to_string(SlidingKind kind) {
    return kind == SlidingKind::Filippov ? "filippov" : "utkin";
}

double filippov_lambda(const SwitchedSystem& sys, std::span<const double> x) {
    const auto [gp, gm] = one_sided(sys, x);
    const double den = gm - gp;
    if (!(std::abs(den) >= kDegenerate)) {
        throw DegenerateCrossingError("filippov_lambda: g(x,0,-1) - g(x,0,+1) vanishes");
    }
    return gm / den;
}

Vec filippov_field(const SwitchedSystem& sys, std::span<const double> x) {
    const auto [gp, gm] = one_sided(sys, x);
    const double den = gm - gp;
    if (!(std::abs(den) >= kDegenerate)) {
        throw DegenerateCrossingError("filippov_field: g(x,0,-1) - g(x,0,+1) vanishes");
    }
    const Vec fp = sys.f(x, 0.0, 1.0);
    const Vec fm = sys.f(x, 0.0, -1.0);
    Vec out(fp.size());
    for (std::size_t i = 0; i < fp.size(); ++i) out[i] = (fp[i] * gm - fm[i] * gp) / den;
    return out;
}

double utkin_control(const SwitchedSystem& sys, std::span<const double> x) {
    return bisect_root(sys, x, -1.0, 1.0);
}

Vec utkin_field(const SwitchedSystem& sys, std::span<const double> x) {
    return sys.f(x, 0.0, utkin_control(sys, x));
}

double sliding_auxiliary(const SwitchedSystem& sys, SlidingKind kind, std::span<const double> x) {
    return kind == SlidingKind::Filippov ? filippov_lambda(sys, x) : utkin_control(sys, x);
}

SlideResult slide(const SwitchedSystem& sys, SlidingKind kind, const Vec& x0, double T,
                  const IntegratorOptions& opts) {
    if (x0.size() != sys.dim) throw std::invalid_argument("slide: x0 has wrong dimension");
    if (!(max_norm(x0) < sys.bound)) throw std::invalid_argument("slide: |x0| must be below M");

    // Outside the admissible region the field is continued so the integrator
    // can step across the exit; the exit itself is a terminal event.
    Field field = [&sys, kind](double, std::span<const double> x, std::span<double> out) {
        if (kind == SlidingKind::Filippov) {
            const Vec r = filippov_field(sys, x);
            std::copy(r.begin(), r.end(), out.begin());
            return;
        }
        const double gp = sys.g(x, 0.0, 1.0);
        const double gm = sys.g(x, 0.0, -1.0);
        double u;
        if ((gp > 0.0) == (gm > 0.0)) u = std::abs(gp) < std::abs(gm) ? 1.0 : -1.0;
        else u = utkin_control(sys, x);
        sys.f(x, 0.0, u, out);
    };

    const double M = sys.bound;
    EventSpec domain;
    domain.fn = [M](double, std::span<const double> x) { return M - max_norm(x); };
    domain.direction = -1;

    // Both lambda in [0,1] and U in [-1,1] amount to g+ <= 0 <= g-.
    EventSpec exit;
    exit.fn = [&sys](double, std::span<const double> x) {
        return std::min(-sys.g(x, 0.0, 1.0), sys.g(x, 0.0, -1.0));
    };
    exit.direction = -1;
    exit.departure = 1;

    const EventSpec events[] = {domain, exit};
    EventRun run = integrate_with_events(field, 0.0, x0, T, events, opts,
                                         StateLayout::plain(sys.dim));
    SlideResult res;
    res.stop_time = run.trajectory.back_time();
    if (run.terminated) {
        res.stop = run.hits.back().event == 0 ? SlideStop::DomainExit : SlideStop::SlidingExit;
    }
    res.trajectory = std::move(run.trajectory);
    return res;
}

}  // namespace nslab
