#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "confrac/dissipative.hpp"

using namespace confrac;

namespace {

FunctionHandle quadratic_well() {
    return FunctionHandle([](double x) { return 0.5 * x * x; }, [](double x) { return x; });
}

FunctionHandle flat_potential() {
    return FunctionHandle([](double) { return 0.0; }, [](double) { return 0.0; });
}

// Damped oscillator m=1, gamma=1/2, U=x^2/2, released from x=1 at rest.
double damped_reference(double t) {
    const double w = std::sqrt(15.0) / 4.0;
    return std::exp(-0.25 * t) * (std::cos(w * t) + 0.25 / w * std::sin(w * t));
}

}  // namespace

TEST_CASE("window limit recovers the damped oscillator", "[dissipative]") {
    const DissipativeSystem sys(1.0, 0.5, quadratic_well(), 1.0, 0.0);
    const LimitSchedule schedule({0.2, 0.1, 0.05, 0.025});
    const DissipativeResult res = simulate_with_limit(sys, 5.0, schedule);

    for (std::size_t i = 0; i < res.reference.size(); ++i)
        CHECK(res.reference.ys[i] == Catch::Approx(damped_reference(res.reference.xs[i])).margin(1e-8));

    REQUIRE(res.per_width.size() == 4);
    const auto& d = res.report.sup_distances;
    REQUIRE(d.size() == 4);
    for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i] < d[i - 1]);
    CHECK(res.report.extrapolated_sup_distance <= 1e-3);
    for (std::size_t i = 0; i < res.limit_trajectory.size(); ++i)
        CHECK(res.limit_trajectory.ys[i] ==
              Catch::Approx(damped_reference(res.limit_trajectory.xs[i])).margin(1e-3));
}

TEST_CASE("zero friction collapses every width onto the conservative motion", "[dissipative]") {
    const DissipativeSystem sys(1.0, 0.0, quadratic_well(), 1.0, 0.0);
    const LimitSchedule schedule({0.2, 0.1, 0.05, 0.025});
    const DissipativeResult res = simulate_with_limit(sys, 5.0, schedule);
    for (const GridFunction& traj : res.per_width)
        for (std::size_t i = 0; i < traj.size(); ++i)
            CHECK(traj.ys[i] == Catch::Approx(std::cos(traj.xs[i])).margin(1e-6));
}

TEST_CASE("pure friction relaxes exponentially", "[dissipative]") {
    const DissipativeSystem sys(1.0, 1.0, flat_potential(), 0.0, 1.0);
    const LimitSchedule schedule({0.2, 0.1, 0.05, 0.025});
    const DissipativeResult res = simulate_with_limit(sys, 3.0, schedule);
    for (std::size_t i = 0; i < res.reference.size(); ++i)
        CHECK(res.reference.ys[i] ==
              Catch::Approx(1.0 - std::exp(-res.reference.xs[i])).margin(1e-8));
    const auto& d = res.report.sup_distances;
    for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i] < d[i - 1]);
    CHECK(res.report.extrapolated_sup_distance <= 1e-4);
}

TEST_CASE("window dynamics satisfy the modified equation of motion", "[dissipative]") {
    const DissipativeSystem sys(1.0, 0.5, quadratic_well(), 1.0, 0.0);
    // One window covering [0, 1]: x'' = (F(x) - gamma x') / (m + gamma t).
    const auto ts = chebyshev_grid(0.0, 1.0, 201);
    std::vector<double> xs(ts.size());
    std::vector<double> state = {sys.x0, sys.v0};
    auto rhs = [&](double t, std::span<const double> u, std::span<double> du) {
        du[0] = u[1];
        du[1] = (sys.force(u[0]) - sys.gamma * u[1]) / (sys.m + sys.gamma * t);
    };
    ode_integrate_path(rhs, state, ts, [&](std::size_t i, const std::vector<double>& u) { xs[i] = u[0]; });
    const GridFunction traj(ts, xs, Order(dissipative_order), Anchor::left_from(0.0));
    CHECK(max_abs(equation_of_motion_residual(sys, 0.0, traj)) <= 1e-5);
}

TEST_CASE("friction integrand carries the stated partials", "[dissipative]") {
    const DissipativeSystem sys(1.0, 0.5, quadratic_well(), 1.0, 0.0);
    const MixedLagrangian L = friction_lagrangian(sys, 0.0);
    const double t = 0.3, x = 1.5, xp = 2.0, v = 1.0;
    CHECK(L(t, x, xp, v) == Catch::Approx(1.125).margin(1e-14));
    CHECK(L.dx(t, x, xp, v) == 0.0);
    CHECK(L.dy(t, x, xp, v) == Catch::Approx(-1.5).margin(1e-14));
    CHECK(L.dyp(t, x, xp, v) == Catch::Approx(2.0).margin(1e-14));
    CHECK(L.dv(t, x, xp, v) == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("canonical quantities of the dissipative action", "[dissipative]") {
    const DissipativeSystem sys(1.0, 1.0, quadratic_well(), 1.0, 0.0);
    CHECK(canonical_energy(sys, 0.0, 0.2, 1.5, 1.0, 1.0) == Catch::Approx(2.125).margin(1e-14));
    const DissipativeSystem sys2(1.0, 0.5, quadratic_well(), 1.0, 0.0);
    const CanonicalMomenta mom = canonical_momenta(sys2, 1.0, 1.0);
    CHECK(mom.p1 == Catch::Approx(1.0).margin(1e-14));
    CHECK(mom.p_half == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("dissipative inputs are validated", "[dissipative][errors]") {
    CHECK_THROWS_AS(DissipativeSystem(0.0, 0.5, quadratic_well(), 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(DissipativeSystem(1.0, -0.1, quadratic_well(), 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(DissipativeSystem(1.0, 0.5, FunctionHandle([](double x) { return 0.5 * x * x; }),
                                      1.0, 0.0),
                    MissingDerivative);
    CHECK_THROWS_AS(LimitSchedule({}), DomainError);
    CHECK_THROWS_AS(LimitSchedule({0.1, 0.1}), DomainError);
    CHECK_THROWS_AS(LimitSchedule({0.2, -0.1}), DomainError);

    const DissipativeSystem sys(1.0, 0.5, quadratic_well(), 1.0, 0.0);
    CHECK_THROWS_AS(simulate_with_limit(sys, 0.0, LimitSchedule({0.1})), DomainError);
    CHECK_THROWS_AS(simulate_with_limit(sys, 5.0, LimitSchedule({0.1}), 1), DomainError);
}
