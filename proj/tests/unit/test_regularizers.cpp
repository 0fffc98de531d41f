#include <cmath>
#include <random>

#include "doctest.h"
#include "nslab/regularizers.hpp"
#include "nslab/systems.hpp"
#include "support.hpp"

using namespace nslab;

namespace {

double mean_rate(const Trajectory& tr, double a, double b) { return (tr.eval(b)[0] - tr.eval(a)[0]) / (b - a); }

SwitchedSystem y_dependent() {
    return SwitchedSystem::scalar([](double, double, double u) { return 0.3 + u * u * u; },
                                  [](double, double y, double u) { return -0.5 - u + 0.1 * y; }, 1.0);
}

SwitchedSystem x_dependent() {
    return SwitchedSystem::scalar([](double, double, double u) { return 0.3 + u * u * u; },
                                  [](double x, double, double u) { return -0.5 - u + 0.2 * x; }, 1.0);
}

}  // namespace

TEST_CASE("hysteresis first cycle on exutkin") {
    const double alpha = 0.01;
    const auto run = run_hysteresis(exutkin(), {0.0}, -alpha, -1, alpha, 0.2, IntegratorOptions{});
    REQUIRE(run.cycles.size() >= 2);
    const CycleRecord& c = run.cycles.front();
    // Constant one-sided speeds: T- = 2 alpha / 0.5, T+ = 2 alpha / 1.5.
    const double Tm = 2 * alpha / 0.5, Tp = 2 * alpha / 1.5;
    CHECK(c.t_start == 0.0);
    CHECK(c.T_minus == doctest::Approx(Tm).epsilon(1e-9));
    CHECK(c.T_plus == doctest::Approx(Tp).epsilon(1e-9));
    CHECK(c.delta_x[0] == doctest::Approx(-0.7 * Tm + 1.3 * Tp).epsilon(1e-9));
    CHECK(std::abs(c.delta_x[0] / (c.T_minus + c.T_plus) + 0.2) <= 1e-6);
    CHECK_FALSE(run.flagged());
}

TEST_CASE("hysteresis start on the switching plane") {
    const double alpha = 0.01;
    const auto a = run_hysteresis(exutkin(), {0.0}, -alpha, 1, alpha, 0.1, IntegratorOptions{});
    REQUIRE_FALSE(a.trajectory.events().empty());
    CHECK(a.trajectory.events().front().time == 0.0);
    CHECK(a.trajectory.events().front().kind == EventKind::SwitchDown);
    CHECK(a.trajectory.modes().front() == -1);
    const auto b = run_hysteresis(exutkin(), {0.0}, -alpha, -1, alpha, 0.1, IntegratorOptions{});
    REQUIRE(a.cycles.size() == b.cycles.size());
    CHECK(a.cycles[0].T_minus == doctest::Approx(b.cycles[0].T_minus).epsilon(1e-12));
    CHECK(a.trajectory.back_state()[0] == doctest::Approx(b.trajectory.back_state()[0]).epsilon(1e-12));
}

TEST_CASE("hysteresis rejects bad input") {
    const IntegratorOptions o;
    CHECK_THROWS_AS(run_hysteresis(exutkin(), {0.0}, -0.02, 1, 0.01, 1.0, o), std::invalid_argument);
    CHECK_THROWS_AS(run_hysteresis(exutkin(), {0.0}, 0.02, -1, 0.01, 1.0, o), std::invalid_argument);
    CHECK_THROWS_AS(run_hysteresis(exutkin(), {0.0}, 0.0, -1, 0.0, 1.0, o), std::invalid_argument);
    CHECK_THROWS_AS(run_hysteresis(exutkin(), {0.0}, 0.0, 0, 0.01, 1.0, o), std::invalid_argument);
}

TEST_CASE("hysteresis domain exit is flagged") {
    const auto run = run_hysteresis(exutkin(0.05), {0.0}, -0.01, -1, 0.01, 5.0, IntegratorOptions{});
    CHECK(run.stop == RunStop::DomainExit);
    CHECK(run.flagged());
}

TEST_CASE("property: hysteresis confinement") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> X(-0.3, 0.3);
    IntegratorOptions o;
    for (int trial = 0; trial < 25; ++trial) {
        const SwitchedSystem sys = test::make_affine(test::random_affine(rng));
        for (double alpha : {0.05, 0.01}) {
            const int mode = trial % 2 ? 1 : -1;
            const double y0 = 0.5 * alpha * (X(rng) / 0.3);
            const auto run = run_hysteresis(sys, {X(rng)}, y0, mode, alpha, 0.5, o);
            const auto& ev = run.trajectory.events();
            if (ev.empty()) continue;
            const double t_hit = ev.front().time;
            const auto& tr = run.trajectory;
            for (std::size_t i = 0; i < tr.size(); ++i) {
                if (tr.times()[i] >= t_hit) CHECK(std::abs(tr.states()[i][1]) <= alpha + 1e-10);
            }
            for (double t = t_hit; t <= tr.back_time(); t += 1e-3) {
                CHECK(std::abs(tr.eval(t)[1]) <= alpha + 1e-8);
            }
        }
    }
}

TEST_CASE("smoothing on exutkin") {
    const double alpha = 0.01;
    const auto run = run_smoothed(exutkin(), {0.0}, 0.0, alpha, sigmoid_cubic(), 1.0, IntegratorOptions{});
    const double y_star = alpha * sigmoid_cubic().inverse(-0.5);
    CHECK(y_star == doctest::Approx(alpha * -0.347296).epsilon(1e-5));
    for (double t = 0.2; t <= 1.0; t += 0.05) CHECK(std::abs(run.trajectory.eval(t)[1] - y_star) <= 1e-6);
    CHECK(std::abs(mean_rate(run.trajectory, 0.5, 1.0) - 0.175) <= 1e-3);
    CHECK_THROWS_AS(run_smoothed(exutkin(), {0.0}, 0.02, alpha, sigmoid_cubic(), 1.0, IntegratorOptions{}),
                    std::invalid_argument);
}

TEST_CASE("smoothing started on the critical set stays there") {
    const double alpha = 0.05;
    const double y0 = alpha * sigmoid_cubic().inverse(-0.5);
    const auto run = run_smoothed(exutkin(), {0.1}, y0, alpha, sigmoid_cubic(), 1.0, IntegratorOptions{});
    // y0 itself comes from a numerical inverse, so allow a few ulps of g times T.
    for (const auto& s : run.trajectory.states()) CHECK(std::abs(s[1] - y0) <= 1e-10);
}

TEST_CASE("embedding on exutkin") {
    IntegratorOptions o;
    SUBCASE("alpha > 0 follows Filippov") {
        const auto run = run_embedded(exutkin(), {0.0}, 0.0, 1.0, 0.1, 0.01, 2.0, o);
        REQUIRE(run.cycles.size() >= 2);
        // Whole cycles only: a cycle here lasts about half a time unit.
        double dx = 0.0, dt = 0.0;
        for (const auto& c : run.cycles) {
            if (c.delta_x.empty()) continue;
            dx += c.delta_x[0];
            dt += c.T_minus + c.T_plus;
        }
        CHECK(std::abs(dx / dt + 0.2) <= 0.05);
        for (const auto& s : run.trajectory.states()) CHECK(std::abs(s[2]) <= 1.0 + kDeltaOne);
    }
    SUBCASE("alpha < 0 follows Utkin") {
        const auto run = run_embedded(exutkin(), {0.0}, 0.0, 1.0, -0.1, 0.01, 2.0, o);
        CHECK(std::abs(mean_rate(run.trajectory, 1.0, 2.0) - 0.175) <= 0.02);
        for (double t = 0.0; t <= 2.0; t += 1e-3) CHECK(std::abs(run.trajectory.eval(t)[1]) <= 2.0 * 0.1);
        for (const auto& s : run.trajectory.states()) CHECK(std::abs(s[2]) <= 1.0 + kDeltaOne);
    }
    SUBCASE("rest state with u saturated") {
        const auto still = SwitchedSystem::scalar([](double, double, double) { return 0.0; },
                                                  [](double, double, double) { return 0.0; }, 1.0);
        const auto run = run_embedded(still, {0.0}, 0.05, 1.0, 0.1, 0.01, 1.0, o);
        for (const auto& s : run.trajectory.states()) CHECK(s[2] == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(run_embedded(exutkin(), {0.0}, 0.0, 1.5, 0.1, 0.01, 1.0, o), std::invalid_argument);
        CHECK_THROWS_AS(run_embedded(exutkin(), {0.0}, 0.0, 1.0, 0.1, 0.05, 1.0, o), std::invalid_argument);
    }
}

TEST_CASE("cycle asymptotics") {
    IntegratorOptions o;
    SUBCASE("exact for constant one-sided fields") {
        const auto run = run_hysteresis(exutkin(), {0.0}, -0.02, -1, 0.02, 1.0, o);
        const auto a = measure_cycle_asymptotics(run, exutkin());
        REQUIRE(a.residuals.size() >= 5);
        CHECK(a.max_residual <= 1e-9);
    }
    SUBCASE("y-dependent variant matches the closed form") {
        // Down phase: y' = 0.5 + 0.1 y from -alpha to alpha, so T- = 20 atanh(alpha/5).
        for (double alpha : {0.02, 0.01, 0.005}) {
            const auto run = run_hysteresis(y_dependent(), {0.0}, -alpha, -1, alpha, 0.5, o);
            const auto a = measure_cycle_asymptotics(run, y_dependent());
            REQUIRE_FALSE(a.residuals.empty());
            const double exact = 20.0 * std::atanh(alpha / 5.0) - 4.0 * alpha;
            for (double r : a.residuals) CHECK(std::abs(r - exact) <= 1e-10);
        }
    }
    SUBCASE("x-dependent speeds give a second-order residual") {
        double prev = 0.0;
        for (double alpha : {0.02, 0.01, 0.005}) {
            const auto run = run_hysteresis(x_dependent(), {0.0}, -alpha, -1, alpha, 0.5, o);
            const double r = measure_cycle_asymptotics(run, x_dependent()).max_residual;
            if (prev > 0.0) {
                CHECK(prev / r >= 3.0);
                CHECK(prev / r <= 5.0);
            }
            prev = r;
        }
    }
    SUBCASE("T- halves with alpha") {
        const auto a = run_hysteresis(x_dependent(), {0.0}, -0.02, -1, 0.02, 0.3, o);
        const auto b = run_hysteresis(x_dependent(), {0.0}, -0.01, -1, 0.01, 0.3, o);
        CHECK(b.cycles[0].T_minus / a.cycles[0].T_minus == doctest::Approx(0.5).epsilon(0.02));
    }
}

TEST_CASE("poincare return on exutkin") {
    IntegratorOptions o;
    for (double alpha : {1e-2, 1e-3}) {
        CAPTURE(alpha);
        const double eps = alpha * alpha;
        const auto r = poincare_return(exutkin(), alpha, eps, alpha * alpha, {0.0}, 1.0, o);
        REQUIRE(r.returned);
        const double tol = 10 * alpha * alpha * std::abs(std::log(alpha));
        CHECK(std::abs(r.T1 - 16 * alpha / 3) <= tol);
        CHECK(std::abs(r.delta_x[0] + 16 * alpha / 15) <= tol);
        REQUIRE(r.trace.size() == 8);
        for (int i = 0; i < 8; ++i) CHECK(r.trace[static_cast<std::size_t>(i)].section == i + 1);
        for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].t >= r.trace[i - 1].t);
    }
    SUBCASE("zero delta0 still returns") {
        const auto r = poincare_return(exutkin(), 1e-2, 1e-4, 0.0, {0.0}, 1.0, o);
        CHECK(r.returned);
    }
}

TEST_CASE("field bound") {
    CHECK(field_bound(exutkin()) == doctest::Approx(0.3 + std::pow(1.25, 3)).epsilon(1e-12));
}
