#include "nslab/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nslab {

SwitchedSystem SwitchedSystem::scalar(std::function<double(double, double, double)> fx,
                                      std::function<double(double, double, double)> gy,
                                      double bound, std::string name) {
    SwitchedSystem sys;
    sys.dim = 1;
    sys.bound = bound;
    sys.name = std::move(name);
    sys.rate_x = [fx = std::move(fx)](std::span<const double> x, double y, double u,
                                      std::span<double> out) { out[0] = fx(x[0], y, u); };
    sys.rate_y = [gy = std::move(gy)](std::span<const double> x, double y, double u) {
        return gy(x[0], y, u);
    };
    return sys;
}

Vec SwitchedSystem::f(std::span<const double> x, double y, double u) const {
    Vec out(dim);
    rate_x(x, y, u, out);
    return out;
}

double max_norm(std::span<const double> v) {
    double m = 0.0;
    for (double c : v) m = std::max(m, std::abs(c));
    return m;
}

PlanarRate eval_planar(const SwitchedSystem& sys, std::span<const double> x, double y, double u) {
    if (x.size() != sys.dim) throw std::invalid_argument("eval_planar: x has wrong dimension");
    for (double c : x) {
        if (!std::isfinite(c)) throw EvaluationError("x", "eval_planar: non-finite x argument");
    }
    if (!std::isfinite(y)) throw EvaluationError("y", "eval_planar: non-finite y argument");
    if (!std::isfinite(u)) throw EvaluationError("u", "eval_planar: non-finite u argument");

    PlanarRate r;
    r.dx.assign(sys.dim, 0.0);
    sys.rate_x(x, y, u, r.dx);
    for (std::size_t i = 0; i < r.dx.size(); ++i) {
        if (!std::isfinite(r.dx[i])) {
            std::ostringstream os;
            os << "f[" << i << "]";
            throw EvaluationError(os.str(), "eval_planar: non-finite value of " + os.str());
        }
    }
    r.dy = sys.rate_y(x, y, u);
    if (!std::isfinite(r.dy)) throw EvaluationError("g", "eval_planar: non-finite value of g");
    return r;
}

TransversalityReport check_transversality(const SwitchedSystem& sys,
                                          std::span<const Vec> x_samples) {
    constexpr double kStep = 1e-6;
    constexpr double kStrict = 1e-8;
    constexpr int kUGrid = 20;

    TransversalityReport rep;
    for (const Vec& x : x_samples) {
        bool sample_ok = true;
        const double gp = sys.g(x, 0.0, 1.0);
        const double gm = sys.g(x, 0.0, -1.0);
        rep.worst_g_plus = std::max(rep.worst_g_plus, gp);
        rep.worst_g_minus = std::min(rep.worst_g_minus, gm);
        if (!(gp < 0.0) || !(gm > 0.0)) sample_ok = false;

        for (int i = 0; i <= kUGrid; ++i) {
            const double u = -1.0 + 2.0 * i / kUGrid;
            const double d = (sys.g(x, 0.0, u + kStep) - sys.g(x, 0.0, u - kStep)) / (2.0 * kStep);
            rep.worst_dg_du = std::max(rep.worst_dg_du, d);
            if (!(d < -kStrict)) sample_ok = false;
        }
        if (!sample_ok) ++rep.failures;
    }
    rep.ok = rep.failures == 0;
    return rep;
}

std::vector<Vec> sample_domain(const SwitchedSystem& sys, std::size_t n) {
    std::vector<Vec> out;
    const double M = sys.bound;
    if (n == 0) return out;
    if (sys.dim == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            const double s = n == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n - 1);
            out.push_back({-M + 2.0 * M * s});
        }
        return out;
    }
    // Kronecker sequence with irrational steps sqrt(p) mod 1.
    static constexpr double kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    for (std::size_t i = 0; i < n; ++i) {
        Vec x(sys.dim);
        for (std::size_t d = 0; d < sys.dim; ++d) {
            const double step = std::sqrt(kPrimes[d % 12]) + static_cast<double>(d / 12);
            double frac = std::fmod(0.5 + static_cast<double>(i) * step, 1.0);
            x[d] = -M + 2.0 * M * frac;
        }
        out.push_back(std::move(x));
    }
    return out;
}

Sigmoid sigmoid_cubic() {
    auto value = [](double w) { return cubic_value(w); };
    auto derivative = [](double w) { return cubic_derivative(w); };
    auto inverse = [](double u) {
        if (!(std::abs(u) < 1.0)) throw std::domain_error("sigmoid inverse: |u| must be < 1");
        double lo = -1.0;
        double hi = 1.0;
        for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (cubic_value(mid) < u) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    return Sigmoid(value, derivative, inverse);
}

}  // namespace nslab
