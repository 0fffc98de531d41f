#include "nslab/regions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nslab/integrator.hpp"
#include "nslab/regularizers.hpp"

namespace nslab {

namespace {

double lerp(double a, double b, double s) { return a + (b - a) * s; }

// Additive recurrence with the generalized golden ratio of dimension d.
std::vector<double> lattice_steps(std::size_t d) {
    double phi = 2.0;
    for (int it = 0; it < 100; ++it) phi = std::pow(1.0 + phi, 1.0 / static_cast<double>(d + 1));
    std::vector<double> a(d);
    for (std::size_t j = 0; j < d; ++j) a[j] = std::pow(1.0 / phi, static_cast<double>(j + 1));
    return a;
}

Vec lattice_point(const std::vector<double>& steps, std::size_t i) {
    Vec q(steps.size());
    for (std::size_t j = 0; j < steps.size(); ++j) {
        q[j] = std::fmod(0.5 + static_cast<double>(i + 1) * steps[j], 1.0);
    }
    return q;
}

Vec x_of(const SwitchedSystem& sys, std::span<const double> q) {
    Vec x(sys.dim);
    for (std::size_t j = 0; j < sys.dim; ++j) x[j] = lerp(-sys.bound, sys.bound, q[j]);
    return x;
}

Vec make_point(const Vec& x, double v, double u) {
    Vec p(x);
    p.push_back(v);
    p.push_back(u);
    return p;
}

Vec make_normal(std::size_t k, double nv, double nu) {
    Vec n(k + 2, 0.0);
    n[k] = nv;
    n[k + 1] = nu;
    return n;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Root in u of phi((v - u)/|kappa|) - u + shift, which is strictly decreasing in u.
double solve_surface(double v, double akappa, double shift) {
    double lo = -3.0, hi = 3.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cubic_value((v - mid) / akappa) - mid + shift > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Annulus field with phi frozen at phi_fix (saturated side).
Field saturated_annulus_field(const SwitchedSystem& sys, double alpha, double eps, double phi_fix) {
    const std::size_t k = sys.dim;
    return [sys, k, alpha, eps, phi_fix](double, std::span<const double> p, std::span<double> d) {
        const double y = alpha * p[k];
        const double u = p[k + 1];
        sys.rate_x(p.first(k), y, u, d.first(k));
        d[k] = sys.g(p.first(k), y, u) / alpha;
        d[k + 1] = (phi_fix - u) / eps;
    };
}

}  // namespace

std::string_view to_string(RegionKind k) { return k == RegionKind::Annulus ? "annulus" : "block"; }

Vec region_field(const SwitchedSystem& sys, const RegionSpec& spec, std::span<const double> p) {
    const std::size_t k = sys.dim;
    Vec d(k + 2);
    const double u = p[k + 1];
    if (spec.kind == RegionKind::Annulus) {
        const double y = spec.alpha * p[k];
        sys.rate_x(p.first(k), y, u, std::span<double>(d).first(k));
        d[k] = sys.g(p.first(k), y, u) / spec.alpha;
        d[k + 1] = (cubic_value((p[k] + u) / spec.kappa) - u) / spec.epsilon;
    } else {
        const double a = std::abs(spec.alpha);
        const double ak = std::abs(spec.kappa);
        const double y = a * p[k];
        sys.rate_x(p.first(k), y, u, std::span<double>(d).first(k));
        for (std::size_t i = 0; i < k; ++i) d[i] *= a;
        d[k] = sys.g(p.first(k), y, u);
        d[k + 1] = (cubic_value((p[k] - u) / ak) - u) / ak;
    }
    return d;
}

RegionSpec make_annulus(const SwitchedSystem& sys, double alpha, double kappa, double delta0) {
    if (!(alpha > 0.0)) throw std::invalid_argument("make_annulus: alpha must be positive");
    if (!(kappa > 0.0 && kappa < 0.25)) throw std::invalid_argument("make_annulus: kappa must lie in (0, 1/4)");
    if (!(delta0 > 0.0 && delta0 < 1.0)) throw std::invalid_argument("make_annulus: delta0 must lie in (0, 1)");

    RegionSpec spec;
    spec.kind = RegionKind::Annulus;
    spec.alpha = alpha;
    spec.kappa = kappa;
    spec.epsilon = kappa * alpha;
    spec.delta0 = delta0;
    spec.C = field_bound(sys);
    spec.K = 2.0 * spec.C + 1.0;

    const std::size_t k = sys.dim;
    const double d0 = delta0, K = spec.K, eps = spec.epsilon;
    {
        const double h = -spec.C * kappa * std::log(delta0 / 2.0);
        if (!(h < 1.0)) {
            std::ostringstream os;
            os << "-C kappa log(delta0/2) = " << h << " is not below 1";
            spec.notes.push_back(os.str());
        }
    }

    const double Tf = eps * std::log((2.0 - d0 - 2.0 * kappa) / d0);
    IntegratorOptions fopts;
    fopts.rtol = 1e-12;
    fopts.atol = 1e-14;
    const Field sat_minus = saturated_annulus_field(sys, alpha, eps, -1.0);
    const Field sat_plus = saturated_annulus_field(sys, alpha, eps, 1.0);
    auto flow = [fopts](const Field& f, Vec p, double t) {
        if (t <= 0.0) return p;
        return integrate_adaptive(f, 0.0, std::move(p), t, fopts).back_state();
    };
    // Starting points of the two flow faces.
    auto start3 = [sys, d0, kappa](std::span<const double> q) {
        return make_point(x_of(sys, q), -1.0 + d0 + kappa, 1.0 - d0 - 2.0 * kappa);
    };
    auto start6 = [sys, d0, kappa](std::span<const double> q) {
        return make_point(x_of(sys, q), 1.0 - d0 - kappa, -1.0 + d0 + 2.0 * kappa);
    };
    // Copy what the closures need; the spec outlives this frame.
    auto v3 = [=](std::span<const double> q) {
        return flow(sat_minus, make_point(x_of(sys, q), -1.0 + d0 + kappa, 1.0 - d0 - 2.0 * kappa), Tf)[k];
    };
    auto v6 = [=](std::span<const double> q) {
        return flow(sat_plus, make_point(x_of(sys, q), 1.0 - d0 - kappa, -1.0 + d0 + 2.0 * kappa), Tf)[k];
    };

    auto face = [&](std::string name, auto point, Vec normal) {
        RegionFace f;
        f.name = std::move(name);
        f.point = point;
        f.normal = [normal](std::span<const double>) { return normal; };
        spec.faces.push_back(std::move(f));
    };

    // Exterior border.
    face("r1", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), lerp(-1 - d0 - kappa, 1 + d0 + kappa + K * kappa, q[k]), 1 + d0);
    }, make_normal(k, 0, 1));
    face("r2", [=](std::span<const double> q) -> std::optional<Vec> {
        const double u = lerp(-1 + d0, 1 + d0, q[k]);
        return make_point(x_of(sys, q), -1 - d0 - kappa + K * kappa * (u - 1 - d0) / 2, u);
    }, make_normal(k, -1, K * kappa / 2));
    face("r3", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), -1 - d0 - kappa - K * kappa, lerp(-1 - d0, -1 + d0, q[k]));
    }, make_normal(k, -1, 0));
    face("r4", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), lerp(-1 - d0 - kappa - K * kappa, 1 + d0 + kappa, q[k]), -1 - d0);
    }, make_normal(k, 0, -1));
    face("r5", [=](std::span<const double> q) -> std::optional<Vec> {
        const double u = lerp(-1 - d0, 1 - d0, q[k]);
        return make_point(x_of(sys, q), 1 + d0 + kappa + K * kappa * (u + 1 + d0) / 2, u);
    }, make_normal(k, 1, -K * kappa / 2));
    face("r6", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), 1 + d0 + kappa + K * kappa, lerp(1 - d0, 1 + d0, q[k]));
    }, make_normal(k, 1, 0));

    // Interior border; the normals point out of the annulus, into the hole.
    face("rbar1", [=](std::span<const double> q) -> std::optional<Vec> {
        const double lo = -1 + d0 + kappa;
        const double hi = v6(q);
        if (hi < lo) return std::nullopt;
        return make_point(x_of(sys, q), lerp(lo, hi, q[k]), 1 - d0);
    }, make_normal(k, 0, -1));
    face("rbar2", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), -1 + d0 + kappa, lerp(1 - d0 - 2 * kappa, 1 - d0, q[k]));
    }, make_normal(k, 1, 0));
    face("rbar4", [=](std::span<const double> q) -> std::optional<Vec> {
        const double lo = v3(q);
        const double hi = 1 - d0 - kappa;
        if (hi < lo) return std::nullopt;
        return make_point(x_of(sys, q), lerp(lo, hi, q[k]), -1 + d0);
    }, make_normal(k, 0, 1));
    face("rbar5", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), 1 - d0 - kappa, lerp(-1 + d0, -1 + d0 + 2 * kappa, q[k]));
    }, make_normal(k, -1, 0));

    // Flow faces: the saturated flow from the corner of rbar2 (resp. rbar5)
    // over the time needed for u to reach -1 + delta0 (resp. 1 - delta0).
    auto flow_face = [&](std::string name, Field f, auto start, double phi_fix) {
        RegionFace face;
        face.name = std::move(name);
        face.flow_surface = true;
        face.point = [=](std::span<const double> q) -> std::optional<Vec> {
            return flow(f, start(q), q[k] * Tf);
        };
        face.normal = [k](std::span<const double>) { return Vec(k + 2, 0.0); };
        face.invariance_residual = [=](std::span<const double> q) {
            const Vec p0 = start(q);
            const Vec p = flow(f, p0, q[k] * Tf);
            const Vec a = flow(f, p, (1.0 - q[k]) * Tf);
            const Vec b = flow(f, p0, Tf);
            double r = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
            // The frozen phi must agree with the true one along the surface.
            r = std::max(r, std::abs(cubic_value((p[k] + p[k + 1]) / kappa) - phi_fix));
            return r;
        };
        spec.faces.push_back(std::move(face));
    };
    flow_face("rbar3", sat_minus, start3, -1.0);
    flow_face("rbar6", sat_plus, start6, 1.0);

    return spec;
}

SignMargins sign_margins(const SwitchedSystem& sys, double alpha, double v_bound) {
    const double a = std::abs(alpha);
    const double umax = 2.0 * sys.bound;
    constexpr int kU = 401;
    constexpr int kV = 11;
    const std::vector<Vec> xs = sample_domain(sys, sys.dim == 1 ? 21 : 200);

    // max g over u in [lo, umax] and min g over u in [-umax, -lo].
    auto margins = [&](double lo) {
        double gmax = -1e300, gmin = 1e300;
        auto visit = [&](double u_up) {
            for (const Vec& x : xs) {
                for (int iv = 0; iv < kV; ++iv) {
                    const double y = a * lerp(-v_bound, v_bound, static_cast<double>(iv) / (kV - 1));
                    gmax = std::max(gmax, sys.g(x, y, u_up));
                    gmin = std::min(gmin, sys.g(x, y, -u_up));
                }
            }
        };
        visit(lo);
        for (int i = 0; i < kU; ++i) {
            const double u = lerp(-umax, umax, static_cast<double>(i) / (kU - 1));
            if (u > lo) visit(u);
        }
        return std::pair{gmax, gmin};
    };
    auto admissible = [&](double u) {
        const auto [gmax, gmin] = margins(u);
        return gmax < 0.0 && gmin > 0.0;
    };

    SignMargins out;
    if (!admissible(1.0 - 1e-9)) return out;
    double lo = 0.0, hi = 1.0 - 1e-9;
    if (admissible(lo)) hi = lo;
    for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (admissible(mid)) hi = mid;
        else lo = mid;
    }
    out.u_star = 0.5 * (hi + 1.0);
    const auto [gmax, gmin] = margins(out.u_star);
    out.G = std::min(-gmax, gmin);
    out.ok = out.G > 0.0;
    return out;
}

RegionSpec make_block(const SwitchedSystem& sys, double alpha, std::optional<double> kappa,
                      std::optional<double> delta, double v_bound) {
    if (!(alpha < 0.0)) throw std::invalid_argument("make_block: alpha must be negative");
    RegionSpec spec;
    spec.kind = RegionKind::Block;
    spec.alpha = alpha;
    spec.v_bound = v_bound > 0.0 ? v_bound : std::max(sys.bound, 2.0);

    const SignMargins sm = sign_margins(sys, alpha, spec.v_bound);
    if (!sm.ok) throw std::invalid_argument("make_block: g has no sign margins on the sampled compact");
    spec.u_star = sm.u_star;
    spec.G = sm.G;
    spec.sigma = sm.G + 2.0;
    const double ak = kappa ? std::abs(*kappa) : (1.0 - sm.u_star) / (4.0 * spec.sigma);
    if (!(ak > 0.0)) throw std::invalid_argument("make_block: kappa must be non-zero");
    spec.kappa = -ak;
    spec.epsilon = ak * std::abs(alpha);
    spec.delta = delta ? *delta : ak / 2.0;
    spec.C = field_bound(sys);

    const double d = spec.delta, s = spec.sigma, V = spec.v_bound;
    if (!(d > 0.0 && d <= ak && ak <= (1.0 - sm.u_star) / (2.0 * s))) {
        std::ostringstream os;
        os << "need 0 < delta <= |kappa| <= (1 - u*)/(2 sigma); have delta=" << d << ", |kappa|=" << ak
           << ", bound=" << (1.0 - sm.u_star) / (2.0 * s);
        spec.notes.push_back(os.str());
    }
    const double u_delta = solve_surface(1.0 - d, ak, -ak);
    const std::size_t k = sys.dim;

    auto face = [&](std::string name, auto point, auto normal) {
        RegionFace f;
        f.name = std::move(name);
        f.point = point;
        f.normal = normal;
        spec.faces.push_back(std::move(f));
    };
    auto constant = [k](double nv, double nu) {
        const Vec n = make_normal(k, nv, nu);
        return [n](std::span<const double>) { return n; };
    };

    face("B1", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), lerp(-V, -1 + d, q[k]), -1 + d - s * ak);
    }, constant(0, -1));
    face("B2", [=](std::span<const double> q) -> std::optional<Vec> {
        const double v = lerp(-1 + d, 1 - d, q[k]);
        return make_point(x_of(sys, q), v, v - s * ak);
    }, constant(1, -1));
    face("B3", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), 1 - d, lerp(1 - d - s * ak, u_delta, q[k]));
    }, constant(1, 0));
    face("B4", [=](std::span<const double> q) -> std::optional<Vec> {
        const double v = lerp(1 - d, V, q[k]);
        return make_point(x_of(sys, q), v, solve_surface(v, ak, -ak));
    }, [k, ak](std::span<const double> p) {
        const double dp = cubic_derivative((p[k] - p[k + 1]) / ak) / ak;
        return make_normal(k, dp, -dp - 1.0);
    });
    face("B5", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), V, lerp(1 - ak, 1 - d + s * ak, q[k]));
    }, constant(1, 0));
    face("B6", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), lerp(1 - d, V, q[k]), 1 - d + s * ak);
    }, constant(0, 1));
    face("B7", [=](std::span<const double> q) -> std::optional<Vec> {
        const double v = lerp(-1 + d, 1 - d, q[k]);
        return make_point(x_of(sys, q), v, v + s * ak);
    }, constant(-1, 1));
    face("B8", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), -1 + d, lerp(-u_delta, -1 + d + s * ak, q[k]));
    }, constant(-1, 0));
    // Mirror image of B4: phi - u + |kappa| = 0.
    face("B9", [=](std::span<const double> q) -> std::optional<Vec> {
        const double v = lerp(-V, -1 + d, q[k]);
        return make_point(x_of(sys, q), v, solve_surface(v, ak, ak));
    }, [k, ak](std::span<const double> p) {
        const double dp = cubic_derivative((p[k] - p[k + 1]) / ak) / ak;
        return make_normal(k, -dp, dp + 1.0);
    });
    face("B10", [=](std::span<const double> q) -> std::optional<Vec> {
        return make_point(x_of(sys, q), -V, lerp(-1 + d - s * ak, -1 + ak, q[k]));
    }, constant(-1, 0));
    return spec;
}

void flip_face(RegionSpec& spec, std::string_view name) {
    for (RegionFace& f : spec.faces) {
        if (f.name != name) continue;
        if (f.flow_surface) throw std::invalid_argument("flip_face: flow faces have no normal");
        f.normal = [inner = f.normal](std::span<const double> p) {
            Vec n = inner(p);
            for (double& c : n) c = -c;
            return n;
        };
        return;
    }
    throw std::invalid_argument("flip_face: no face named " + std::string(name));
}

RegionCheck region_check(const SwitchedSystem& sys, const RegionSpec& spec, std::size_t n_samples) {
    RegionCheck out;
    const std::vector<double> steps = lattice_steps(sys.dim + 1);
    for (const RegionFace& face : spec.faces) {
        std::size_t evaluated = 0;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const Vec q = lattice_point(steps, i);
            const std::optional<Vec> p = face.point(q);
            if (!p) continue;
            ++evaluated;
            if (face.flow_surface) {
                const double r = face.invariance_residual(q);
                if (!(r <= kInvarianceTol)) out.violations.push_back({face.name, *p, r});
                continue;
            }
            const Vec F = region_field(sys, spec, *p);
            const double rate = dot(face.normal(*p), F);
            if (!(rate < 0.0)) out.violations.push_back({face.name, *p, rate});
        }
        out.per_face.push_back(evaluated);
        out.samples += evaluated;
    }
    return out;
}

}  // namespace nslab
