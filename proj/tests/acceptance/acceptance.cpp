// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "expr_corpus.hpp"
#include "json.hpp"
#include "nslab/analysis.hpp"
#include "nslab/cli/commands.hpp"
#include "nslab/cli/expr.hpp"
#include "nslab/regions.hpp"
#include "nslab/regularizers.hpp"
#include "nslab/resolvers.hpp"
#include "nslab/systems.hpp"
#include "support.hpp"

using namespace nslab;

namespace {

// Pinned tolerances and budgets.
constexpr double kVelocityTol = 1e-10;
constexpr double kC1Seconds = 1.0;
constexpr double kOrderLo = 0.85, kOrderHi = 1.15;
constexpr double kMinRSquared = 0.98;
constexpr double kC2Seconds = 10.0, kC3Seconds = 10.0, kC4Seconds = 300.0, kC5Seconds = 60.0;
constexpr double kC4MaxSpread = 2.0;
constexpr double kC5ExcursionFactor = 2.0;
constexpr double kC6RatioLo = 3.0, kC6RatioHi = 5.0;
constexpr double kC7Factor = 10.0;
constexpr double kIsochroneExactTol = 1e-9;
constexpr double kC8HalvingMin = 3.5;
constexpr double kC8ScaleSpread = 2.0;
constexpr std::size_t kRegionSamples = 100;
constexpr double kEquivalenceTol = 1e-9;
constexpr double kResidualTol = 1e-12;
constexpr double kConfinementSlack = 1e-10;

const std::string kScenario = std::string(NSLAB_SCENARIO_DIR) + "/utkin_filippov.toml";

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<double> ladder(double a0, int n) {
    std::vector<double> out;
    for (int j = 0; j < n; ++j) out.push_back(a0 * std::pow(2.0, -j));
    return out;
}

bool in_order_range(double p) { return p >= kOrderLo && p <= kOrderHi; }

Outcome c1() {
    const auto out = std::filesystem::temp_directory_path() / "nslab_acceptance_compare.json";
    std::ostringstream so, se;
    const int code = cli::run_cli({"compare", "--scenario", kScenario, "--format", "json", "--out", out.string()}, so, se);
    if (code != 0) return {false, "compare exited with " + std::to_string(code) + ": " + se.str()};
    std::ifstream in(out);
    const auto j = nlohmann::json::parse(in);
    const double vf = j["filippov"]["xdot"][0].get<double>();
    const double vu = j["utkin"]["xdot"][0].get<double>();
    const bool ok = std::abs(vf + 0.2) <= kVelocityTol && std::abs(vu - 0.175) <= kVelocityTol;
    return {ok, "filippov " + fmt("%.15g", vf) + ", utkin " + fmt("%.15g", vu)};
}

ConvergenceSetup base_setup(Coupling c, std::vector<double> alphas) {
    ConvergenceSetup s;
    s.coupling = c;
    s.x0 = {0.0};
    s.T = 1.0;
    s.alphas = std::move(alphas);
    s.threads = 4;
    return s;
}

std::string errors_text(const ConvergenceReport& r) {
    std::string s;
    for (double e : r.errors) s += (s.empty() ? "" : " ") + fmt("%.3e", e);
    return s;
}

Outcome c2() {
    const auto r = convergence_study(exutkin(), base_setup(Coupling::Hysteresis, ladder(0.1, 5)));
    const bool ok = !r.flagged && in_order_range(r.fit.order) && r.fit.r_squared >= kMinRSquared;
    return {ok, "order " + fmt("%.4f", r.fit.order) + ", R^2 " + fmt("%.5f", r.fit.r_squared) + ", errors " +
                    errors_text(r)};
}

Outcome c3() {
    const auto r = convergence_study(exutkin(), base_setup(Coupling::Smoothing, ladder(0.1, 5)));
    const bool ok = !r.flagged && in_order_range(r.fit.order);
    return {ok, "order " + fmt("%.4f", r.fit.order) + ", R^2 " + fmt("%.5f", r.fit.r_squared) + ", vs " +
                    std::string(to_string(r.reference))};
}

Outcome c4() {
    auto setup = base_setup(Coupling::EpsilonAlphaSquared, ladder(0.05, 4));
    setup.correction = Correction::LogFactor;
    const auto r = convergence_study(exutkin(), setup);
    double lo = 1e300, hi = 0.0;
    for (std::size_t i = 0; i < r.alphas.size(); ++i) {
        const double q = r.errors[i] / (r.alphas[i] * std::abs(std::log(r.alphas[i] / 2)));
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    const double spread = hi / lo;
    const bool ok = !r.flagged && spread < kC4MaxSpread && in_order_range(r.fit.order);
    return {ok, "err/(a|log(a/2)|) spread " + fmt("%.3f", spread) + " (< 2 required), log-corrected order " +
                    fmt("%.4f", r.fit.order) + ", errors " + errors_text(r)};
}

Outcome c5() {
    auto setup = base_setup(Coupling::KappaConstant, ladder(0.05, 4));
    setup.kappa = -0.1;
    const auto r = convergence_study(exutkin(), setup);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.alphas.size(); ++i) worst = std::max(worst, r.y_excursions[i] / r.alphas[i]);
    const bool ok = !r.flagged && in_order_range(r.fit.order) && worst <= kC5ExcursionFactor;
    return {ok, "order " + fmt("%.4f", r.fit.order) + ", vs " + std::string(to_string(r.reference)) +
                    ", max|y|/|alpha| after transient " + fmt("%.3f", worst)};
}

Outcome c6() {
    const auto sys = SwitchedSystem::scalar([](double, double, double u) { return 0.3 + u * u * u; },
                                            [](double, double y, double u) { return -0.5 - u + 0.1 * y; }, 1.0);
    std::vector<double> res;
    for (double a : {0.02, 0.01, 0.005}) {
        const auto run = run_hysteresis(sys, {0.0}, -a, -1, a, 0.5, IntegratorOptions{});
        res.push_back(measure_cycle_asymptotics(run, sys).max_residual);
    }
    const double r1 = res[0] / res[1], r2 = res[1] / res[2];
    const bool ok = r1 >= kC6RatioLo && r1 <= kC6RatioHi && r2 >= kC6RatioLo && r2 <= kC6RatioHi;
    return {ok, "residuals " + fmt("%.3e", res[0]) + " " + fmt("%.3e", res[1]) + " " + fmt("%.3e", res[2]) +
                    ", halving ratios " + fmt("%.3f", r1) + " " + fmt("%.3f", r2) + " (need [3, 5])"};
}

Outcome c7() {
    bool ok = true;
    std::string detail;
    for (double a : {1e-2, 1e-3}) {
        const auto r = poincare_return(exutkin(), a, a * a, a * a, {0.0}, 1.0, IntegratorOptions{});
        const double tol = kC7Factor * a * a * std::abs(std::log(a));
        const double dT = r.returned ? std::abs(r.T1 - 16 * a / 3) : INFINITY;
        const double dX = r.returned ? std::abs(r.delta_x[0] + 16 * a / 15) : INFINITY;
        ok = ok && r.returned && dT <= tol && dX <= tol;
        detail += (detail.empty() ? "" : "; ") + std::string("alpha ") + fmt("%g", a) + ": |dT1| " + fmt("%.2e", dT) +
                  ", |dx| " + fmt("%.2e", dX) + ", tol " + fmt("%.2e", tol);
    }
    return {ok, detail};
}

Outcome c8() {
    std::vector<Vec> grid;
    for (int i = -5; i <= 5; ++i) grid.push_back({0.1 * i});
    const IntegratorOptions fine{1e-11, 1e-14};

    double worst_exact = 0.0;
    for (double a : {1e-2, 1e-3}) {
        for (const auto& p : isochrone(exutkin(), a, grid, 1e-13, fine)) {
            worst_exact = std::max(worst_exact, std::abs(p.y_p - a / 2));
        }
    }
    const bool part1 = worst_exact <= kIsochroneExactTol;

    // Linear in u, x-dependent g: f = 0.3 + u, g = -0.2 + 0.3 x - u.
    const auto lin = affine_in_u([](double, double) { return 0.3; }, [](double, double) { return 1.0; },
                                 [](double x, double) { return -0.2 + 0.3 * x; }, [](double, double) { return -1.0; },
                                 1.0, "linear");
    std::vector<double> lead_dev, q_dev, q_scale;
    const double alphas[] = {0.02, 0.01, 0.005};
    const double epss[] = {0.002, 0.001, 0.0005};
    for (int i = 0; i < 3; ++i) {
        const auto iso = isochrone(lin, alphas[i], grid, 1e-14, fine);
        const auto q = slow_curve_Q(lin, alphas[i], epss[i], grid);
        double dl = 0.0, dq = 0.0;
        for (std::size_t k = 0; k < iso.size(); ++k) {
            dl = std::max(dl, std::abs(iso[k].y_p - isochrone_leading_order(lin, iso[k].x, alphas[i])));
            dq = std::max(dq, std::abs(iso[k].y_p - q[k].y));
        }
        lead_dev.push_back(dl);
        q_dev.push_back(dq);
        q_scale.push_back(dq / (alphas[i] * alphas[i] + epss[i]));
    }
    const double h1 = lead_dev[0] / lead_dev[1], h2 = lead_dev[1] / lead_dev[2];
    const bool part2 = h1 >= kC8HalvingMin && h2 >= kC8HalvingMin;
    const double smin = std::min({q_scale[0], q_scale[1], q_scale[2]});
    const double smax = std::max({q_scale[0], q_scale[1], q_scale[2]});
    const bool part3 = smax / smin <= kC8ScaleSpread && q_dev[2] < q_dev[1] && q_dev[1] < q_dev[0];
    return {part1 && part2 && part3,
            "exutkin max|y_p - a/2| " + fmt("%.1e", worst_exact) + "; leading-order halving " + fmt("%.2f", h1) + " " +
                fmt("%.2f", h2) + "; isochrone vs Q dev/(a^2+eps) " + fmt("%.3f", q_scale[0]) + " " +
                fmt("%.3f", q_scale[1]) + " " + fmt("%.3f", q_scale[2])};
}

Outcome c9() {
    const RegionSpec A = make_annulus(exutkin(), 1e-2, 1e-1, 1e-3);
    const RegionSpec B = make_block(exutkin(), -1e-2);
    const RegionCheck ca = region_check(exutkin(), A, kRegionSamples);
    const RegionCheck cb = region_check(exutkin(), B, kRegionSamples);
    bool enough = true;
    for (auto n : ca.per_face) enough = enough && n >= kRegionSamples;
    for (auto n : cb.per_face) enough = enough && n >= kRegionSamples;
    const bool ok = enough && ca.violations.empty() && cb.violations.empty();
    return {ok, "annulus " + std::to_string(ca.violations.size()) + " violations / " + std::to_string(ca.samples) +
                    " samples, block " + std::to_string(cb.violations.size()) + " / " + std::to_string(cb.samples) +
                    " (u* " + fmt("%.3f", B.u_star) + ", G " + fmt("%.3f", B.G) + ", kappa " +
                    fmt("%.4f", B.kappa) + ")"};
}

Outcome c10() {
    std::mt19937_64 rng(1729);
    double worst_eq = 0.0, worst_fres = 0.0, worst_ures = 0.0;
    bool membership = true;
    for (int trial = 0; trial < 50; ++trial) {
        const SwitchedSystem sys = test::make_affine(test::random_affine(rng));
        const auto xs = sample_domain(sys, 21);
        if (!check_transversality(sys, xs).ok) return {false, "generator produced a non-transversal system"};
        for (const auto& x : xs) {
            const double lam = filippov_lambda(sys, x), u = utkin_control(sys, x);
            membership = membership && lam >= 0.0 && lam <= 1.0 && u >= -1.0 && u <= 1.0;
            worst_eq = std::max(worst_eq, std::abs(filippov_field(sys, x)[0] - utkin_field(sys, x)[0]));
            worst_fres = std::max(worst_fres, std::abs(lam * sys.g(x, 0.0, 1.0) + (1 - lam) * sys.g(x, 0.0, -1.0)));
            worst_ures = std::max(worst_ures, std::abs(sys.g(x, 0.0, u)));
        }
    }

    std::mt19937_64 rng2(4242);
    std::uniform_real_distribution<double> X(-0.3, 0.3);
    double worst_conf = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        const SwitchedSystem sys = test::make_affine(test::random_affine(rng2));
        for (double a : {0.05, 0.01}) {
            const auto run = run_hysteresis(sys, {X(rng2)}, 0.5 * a * X(rng2) / 0.3, trial % 2 ? 1 : -1, a, 0.5,
                                            IntegratorOptions{});
            if (run.trajectory.events().empty()) continue;
            const double t_hit = run.trajectory.events().front().time;
            const auto& tr = run.trajectory;
            for (std::size_t i = 0; i < tr.size(); ++i) {
                if (tr.times()[i] >= t_hit) worst_conf = std::max(worst_conf, std::abs(tr.states()[i][1]) - a);
            }
        }
    }

    test::ExprGenerator gen(31337);
    const auto vars = cli::system_variables(1);
    int round_trip_fail = 0;
    for (int i = 0; i < 200; ++i) {
        const cli::Expr a = cli::parse_expr(gen.expr(4), vars);
        const cli::Expr b = cli::parse_expr(cli::print_expr(a), vars);
        round_trip_fail += !cli::same_tree(a.root(), b.root());
    }

    const bool ok = worst_eq < kEquivalenceTol && worst_fres <= kResidualTol && worst_ures <= kResidualTol &&
                    membership && worst_conf <= kConfinementSlack && round_trip_fail == 0;
    return {ok, "|f_F - f_U| " + fmt("%.1e", worst_eq) + ", residuals " + fmt("%.1e", worst_fres) + "/" +
                    fmt("%.1e", worst_ures) + ", membership " + (membership ? "ok" : "broken") +
                    ", confinement excess " + fmt("%.1e", std::max(worst_conf, 0.0)) + ", round-trip failures " +
                    std::to_string(round_trip_fail) + "/200"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* title;
        double budget;  // seconds; 0 = none
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "compare: Filippov -0.2, Utkin 0.175", kC1Seconds, c1},
        {2, "hysteresis -> Filippov, order ~1", kC2Seconds, c2},
        {3, "smoothing -> Utkin, order ~1", kC3Seconds, c3},
        {4, "embedding eps = alpha^2, log-corrected order ~1", kC4Seconds, c4},
        {5, "embedding alpha < 0 -> Utkin, bounded y", kC5Seconds, c5},
        {6, "cycle law residual drops 3-5x per halving", 0.0, c6},
        {7, "return map time 16a/3 and drift -16a/15", 0.0, c7},
        {8, "isochrone exact, O(a^2) and vs slow curve", 0.0, c8},
        {9, "annulus and block regions: no violations", 0.0, c9},
        {10, "property suites", 0.0, c10},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget > 0.0 && secs >= c.budget) {
            o.pass = false;
            o.detail += "; over time budget " + fmt("%g", c.budget) + " s";
        }
        failed += !o.pass;
        std::printf("%s  C%-2d %s | %s | %.2f s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
