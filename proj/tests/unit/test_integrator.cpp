#include <cmath>
#include <vector>

#include "doctest.h"
#include "nslab/integrator.hpp"
#include "nslab/systems.hpp"

using namespace nslab;

namespace {

const Field kGrowth = [](double, std::span<const double> s, std::span<double> d) { d[0] = s[0]; };

}  // namespace

TEST_CASE("rk4_fixed on the exponential") {
    const Trajectory tr = rk4_fixed(kGrowth, 0.0, {1.0}, 0.01, 100);
    CHECK(tr.back_time() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(tr.back_state()[0] - std::exp(1.0)) < 1e-8);

    const Field still = [](double, std::span<const double>, std::span<double> d) { d[0] = 0.0; };
    const Trajectory c = rk4_fixed(still, 0.0, {0.37}, 0.1, 10);
    for (const auto& s : c.states()) CHECK(s[0] == 0.37);
}

TEST_CASE("rk4_fixed has order four") {
    std::vector<double> hs, errs;
    for (int j = 0; j < 5; ++j) {
        const std::size_t n = 10u << j;
        const double h = 1.0 / static_cast<double>(n);
        const Trajectory tr = rk4_fixed(kGrowth, 0.0, {1.0}, h, n);
        hs.push_back(std::log(h));
        errs.push_back(std::log(std::abs(tr.back_state()[0] - std::exp(1.0))));
    }
    double mh = 0, me = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        mh += hs[i] / hs.size();
        me += errs[i] / hs.size();
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        sxy += (hs[i] - mh) * (errs[i] - me);
        sxx += (hs[i] - mh) * (hs[i] - mh);
    }
    const double slope = sxy / sxx;
    CHECK(slope >= 3.8);
    CHECK(slope <= 4.2);
    // Halving h: about 16x.
    const double ratio = std::exp(errs[1] - errs[2]);
    CHECK(ratio == doctest::Approx(16.0).epsilon(0.05));
}

TEST_CASE("integrate_adaptive accuracy") {
    IntegratorOptions o;
    o.rtol = 1e-10;
    o.atol = 1e-13;
    const Trajectory tr = integrate_adaptive(kGrowth, 0.0, {1.0}, 1.0, o);
    CHECK(std::abs(tr.back_state()[0] - std::exp(1.0)) <= 1e-8);
    CHECK(tr.back_time() == 1.0);

    SUBCASE("stiff decay") {
        const double eps = 1e-6;
        const Field decay = [eps](double, std::span<const double> s, std::span<double> d) { d[0] = -s[0] / eps; };
        IntegratorOptions so;
        so.rtol = 1e-8;
        so.atol = 1e-12;
        const Trajectory st = integrate_adaptive(decay, 0.0, {1.0}, 1e-5, so);
        for (double t : {1e-7, 1e-6, 3e-6, 1e-5}) {
            CHECK(std::abs(st.eval(t)[0] - std::exp(-t / eps)) <= 1e-6);
        }
    }
    SUBCASE("zero-length interval") {
        const Trajectory z = integrate_adaptive(kGrowth, 0.5, {2.0}, 0.5, o);
        CHECK(z.size() == 1);
        CHECK(z.back_state()[0] == 2.0);
    }
}

TEST_CASE("dense output is exact at accepted nodes") {
    IntegratorOptions o;
    const Field osc = [](double, std::span<const double> s, std::span<double> d) {
        d[0] = s[1];
        d[1] = -s[0];
    };
    const Trajectory tr = integrate_adaptive(osc, 0.0, {1.0, 0.0}, 10.0, o);
    REQUIRE(tr.size() > 10);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const Vec v = tr.eval(tr.times()[i]);
        CHECK(std::abs(v[0] - tr.states()[i][0]) <= 1e-12);
        CHECK(std::abs(v[1] - tr.states()[i][1]) <= 1e-12);
    }
    // Between nodes the interpolant tracks cos t.
    for (double t = 0.05; t < 10.0; t += 0.37) CHECK(std::abs(tr.eval(t)[0] - std::cos(t)) < 1e-6);
}

TEST_CASE("integrate_to_event") {
    IntegratorOptions o;
    const Field down = [](double, std::span<const double>, std::span<double> d) { d[0] = -1.0; };
    auto ev = integrate_to_event(down, 0.0, {1.0}, [](std::span<const double> s) { return s[0]; }, 5.0, o);
    REQUIRE(ev.found);
    CHECK(ev.t == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ev.state[0]) <= 1e-12);

    SUBCASE("exutkin down phase reaches the upper plane after 4 alpha") {
        const SwitchedSystem s = exutkin();
        const double alpha = 0.01;
        const Field f = [&s](double, std::span<const double> z, std::span<double> d) {
            const auto p = eval_planar(s, z.subspan(0, 1), z[1], -1.0);
            d[0] = p.dx[0];
            d[1] = p.dy;
        };
        auto hit = integrate_to_event(f, 0.0, {0.0, -alpha},
                                      [alpha](std::span<const double> z) { return z[1] - alpha; }, 1.0, o);
        REQUIRE(hit.found);
        CHECK(hit.t == doctest::Approx(0.04).epsilon(1e-10));
        CHECK(hit.state[0] == doctest::Approx(-0.7 * 0.04).epsilon(1e-10));
    }
    SUBCASE("no crossing before T_max") {
        const Field up = [](double, std::span<const double>, std::span<double> d) { d[0] = 1.0; };
        auto none = integrate_to_event(up, 0.0, {0.0}, [](std::span<const double> z) { return z[0] - 2.0; }, 1.0, o);
        CHECK_FALSE(none.found);
        CHECK(none.trajectory.back_time() == doctest::Approx(1.0));
    }
    SUBCASE("starting on the surface needs a departure sign") {
        auto zero = [](std::span<const double> z) { return z[0] - 1.0; };
        CHECK_THROWS_AS(integrate_to_event(down, 0.0, {1.0}, zero, 1.0, o), std::invalid_argument);
        CHECK_FALSE(integrate_to_event(down, 0.0, {1.0}, zero, 1.0, o, -1).found);
    }
}

TEST_CASE("event residuals stay within tolerance") {
    IntegratorOptions o;
    const Field osc = [](double, std::span<const double> s, std::span<double> d) {
        d[0] = s[1];
        d[1] = -s[0];
    };
    EventSpec e;
    e.fn = [](double, std::span<const double> s) { return s[0]; };
    e.terminal = false;
    const std::vector<EventSpec> evs{e};
    const EventRun run = integrate_with_events(osc, 0.0, {1.0, 0.0}, 20.0, evs, o);
    CHECK(run.hits.size() == 6);
    for (const auto& h : run.hits) {
        const double k = std::round((h.t - M_PI / 2) / M_PI);
        CHECK(h.t == doctest::Approx(M_PI / 2 + k * M_PI).epsilon(1e-9));
        CHECK(std::abs(h.state[0]) <= 1e-12);
    }
}

TEST_CASE("relaxation_substep") {
    CHECK(relaxation_substep(0.0, 1.0, 0.1, 0.1) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
    CHECK(relaxation_substep(0.3, -1.0, 0.1, 0.0) == 0.3);
    for (double dt : {0.0, 1e-3, 1.0, 1e3}) CHECK(relaxation_substep(1.0, 1.0, 1e-4, dt) == 1.0);
}

TEST_CASE("relaxation_substep agrees with adaptive integration") {
    for (double eps : {1e-2, 1e-4, 1e-6}) {
        for (double target : {-1.0, 1.0}) {
            CAPTURE(eps);
            CAPTURE(target);
            const Field f = [eps, target](double, std::span<const double> s, std::span<double> d) {
                d[0] = (target - s[0]) / eps;
            };
            IntegratorOptions o;
            o.rtol = 1e-9;
            o.atol = 1e-12;
            const double T = 5.0 * eps;
            const Trajectory tr = integrate_adaptive(f, 0.0, {0.2}, T, o);
            for (std::size_t i = 0; i < tr.size(); ++i) {
                const double exact = relaxation_substep(0.2, target, eps, tr.times()[i]);
                CHECK(std::abs(tr.states()[i][0] - exact) <= 1e-7);
            }
        }
    }
}

TEST_CASE("options validation") {
    IntegratorOptions o;
    CHECK_NOTHROW(o.validate());
    o.rtol = -1.0;
    CHECK_THROWS_AS(o.validate(), std::invalid_argument);
}
