#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "confrac/variational.hpp"

using namespace confrac;

namespace {

// L(x, y, v) = v^2 with closed-form partials.
Lagrangian kinetic() {
    return Lagrangian([](double, double, double v) { return v * v; },
                      [](double, double, double) { return 0.0; },
                      [](double, double, double) { return 0.0; },
                      [](double, double, double v) { return 2.0 * v; });
}

double sup_distance_to(const GridFunction& y, double (*ref)(double)) {
    double worst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        worst = std::max(worst, std::abs(y.ys[i] - ref(y.xs[i])));
    // Also probe between nodes through the interpolant.
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        const double mid = 0.5 * (y.xs[i] + y.xs[i + 1]);
        worst = std::max(worst, std::abs(grid_interp(y, mid) - ref(mid)));
    }
    return worst;
}

}  // namespace

TEST_CASE("quadratic action under order one-half extremizes to the square root",
          "[variational]") {
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(0.5), 0.0, 1.0);
    const Extremal ext = solve_extremal(p);
    REQUIRE(ext.certified());
    CHECK(ext.el_residual_max <= 1e-5);
    CHECK(sup_distance_to(ext.y, [](double x) { return std::sqrt(x); }) <= 1e-4);
    CHECK(ext.report.boundary_error <= 1e-8);
    // The alpha-slope at the anchor is the constant v = 1/2 of the closed form.
    CHECK(ext.report.shooting_parameter == Catch::Approx(0.5).margin(1e-6));
    // Action of the closed form: v = 1/2, integral of v^2 against the
    // alpha-measure on [0,1] is 1/4 * 2 = 1/2.
    CHECK(action_value(p, ext.y) == Catch::Approx(0.5).margin(1e-8));
}

TEST_CASE("euler-lagrange residual vanishes only on extremals", "[variational]") {
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(0.5), 0.0, 1.0);
    const auto xs = chebyshev_grid(0.0, 1.0, 129);
    std::vector<double> exact(xs.size()), wrong(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        exact[i] = std::sqrt(xs[i]);
        wrong[i] = xs[i];  // straight line: right boundary values, wrong profile
    }
    const Anchor anchor = Anchor::left_from(0.0);
    CHECK(max_abs(el_residual(p, GridFunction(xs, exact, p.order, anchor))) <= 1e-6);
    CHECK(max_abs(el_residual(p, GridFunction(xs, wrong, p.order, anchor))) > 1e-2);
}

TEST_CASE("dubois-reymond condition holds along the extremal", "[variational]") {
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(0.5), 0.0, 1.0);
    const Extremal ext = solve_extremal(p);
    CHECK(max_abs(interior(dubois_reymond_residual(p, ext.y))) <= 1e-5);

    // Autonomous integrand: L - v dL/dv stays constant (here -v^2 = -1/4).
    const GridFunction v = grid_alpha_deriv(ext.y);
    const GridFunction yin = interior(ext.y);
    const GridFunction vin = interior(v);
    double drift_max = 0.0;
    const double c0 = -0.25;
    for (std::size_t i = 0; i < yin.size(); ++i) {
        const double energy =
            p.L(yin.xs[i], yin.ys[i], vin.ys[i]) - vin.ys[i] * p.L.dv(yin.xs[i], yin.ys[i], vin.ys[i]);
        drift_max = std::max(drift_max, std::abs(energy - c0));
    }
    CHECK(drift_max <= 1e-5);
}

TEST_CASE("momentum grid tracks dL/dv", "[variational]") {
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(0.5), 0.0, 1.0);
    const Extremal ext = solve_extremal(p);
    const Momentum mom = momentum_of(p, ext.y);
    for (std::size_t i = 0; i < mom.p.size(); ++i)
        CHECK(mom.p.ys[i] == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("canonical system residuals certify the hamiltonian form", "[variational]") {
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(0.5), 0.0, 1.0);
    const Extremal ext = solve_extremal(p);
    const Momentum mom = momentum_of(p, ext.y);
    const HamiltonianField H = HamiltonianField::from_lagrangian(p.L);
    const HamiltonianResiduals res = hamiltonian_system_residual(p, ext.y, mom, H);
    CHECK(max_abs(res.state) <= 1e-6);
    CHECK(max_abs(res.costate) <= 1e-6);
    CHECK(max_abs(res.energy) <= 1e-5);

    // A momentum grid violating p = dL/dv is rejected.
    std::vector<double> off(mom.p.ys);
    for (double& q : off) q *= 1.2;
    CHECK_THROWS_AS(hamiltonian_system_residual(p, ext.y, Momentum{with_values(mom.p, off)}, H),
                    InconsistentMomentum);
}

TEST_CASE("action evaluation rejects trajectories missing the boundary data",
          "[variational][errors]") {
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(0.5), 0.0, 1.0);
    const auto xs = chebyshev_grid(0.0, 1.0, 33);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = std::sqrt(xs[i]) + 0.1;
    CHECK_THROWS_AS(action_value(p, GridFunction(xs, ys, p.order, Anchor::left_from(0.0))),
                    BoundaryMismatch);
    // Grid spanning the wrong interval.
    const auto xs2 = chebyshev_grid(0.0, 2.0, 33);
    std::vector<double> ys2(xs2.size(), 0.0);
    ys2.back() = 1.0;
    CHECK_THROWS_AS(el_residual(p, GridFunction(xs2, ys2, p.order, Anchor::left_from(0.0))),
                    BoundaryMismatch);
}

TEST_CASE("problem construction validates its interval", "[variational][errors]") {
    CHECK_THROWS_AS(VariationalProblem(kinetic(), 1.0, 0.0, Order(0.5), 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(VariationalProblem(kinetic(), 0.0, 1.0, Order(0.5), 0.0,
                                       std::numeric_limits<double>::quiet_NaN()),
                    DomainError);
}

TEST_CASE("degenerate momentum maps are detected", "[variational][errors]") {
    // L linear in v cannot be inverted for the slope.
    Lagrangian linear([](double, double, double v) { return v; },
                      [](double, double, double) { return 0.0; },
                      [](double, double, double) { return 0.0; },
                      [](double, double, double) { return 1.0; });
    const VariationalProblem p(linear, 0.0, 1.0, Order(0.5), 0.0, 1.0);
    CHECK_THROWS_AS(solve_extremal(p), SingularLagrangian);
}

TEST_CASE("classical harmonic extremal at order one", "[variational][classical]") {
    // L = v^2 - y^2 has extremals y'' = -y; with y(0)=0, y(1)=sin 1 the
    // solution is sin x.
    Lagrangian L([](double, double y, double v) { return v * v - y * y; },
                 [](double, double, double) { return 0.0; },
                 [](double, double y, double) { return -2.0 * y; },
                 [](double, double, double v) { return 2.0 * v; });
    const VariationalProblem p(L, 0.0, 1.0, Order(1.0), 0.0, std::sin(1.0));
    const Extremal ext = solve_extremal(p);
    REQUIRE(ext.certified());
    CHECK(sup_distance_to(ext.y, [](double x) { return std::sin(x); }) <= 1e-6);
    CHECK(max_abs(interior(dubois_reymond_residual(p, ext.y))) <= 1e-6);
    // Conserved energy -(v^2 + y^2) = -1 for this normalization.
    const GridFunction v = grid_alpha_deriv(ext.y);
    for (std::size_t i = 0; i < ext.y.size(); ++i) {
        const double e = p.L(ext.y.xs[i], ext.y.ys[i], v.ys[i]) -
                         v.ys[i] * p.L.dv(ext.y.xs[i], ext.y.ys[i], v.ys[i]);
        CHECK(e == Catch::Approx(-1.0).margin(1e-6));
    }
}

TEST_CASE("generalized residual reduces to the classical equation without slope coupling",
          "[variational]") {
    // Mixed integrand depending only on (y, y'): m/2 y'^2 - y^2/2 gives y'' = -y.
    MixedLagrangian L([](double, double y, double yp, double) { return 0.5 * yp * yp - 0.5 * y * y; },
                      [](double, double, double, double) { return 0.0; },
                      [](double, double y, double, double) { return -y; },
                      [](double, double, double yp, double) { return yp; },
                      [](double, double, double, double) { return 0.0; });
    const MixedVariationalProblem p(L, 0.0, 2.0, Order(0.5), 1.0, std::cos(2.0));
    const auto xs = chebyshev_grid(0.0, 2.0, 201);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = std::cos(xs[i]);
    const GridFunction traj(xs, ys, Order(0.5), Anchor::left_from(0.0));
    CHECK(max_abs(generalized_el_residual(p, traj)) <= 1e-5);
}

TEST_CASE("lagrangian partials fall back to difference quotients", "[variational]") {
    Lagrangian L([](double x, double y, double v) { return x * y + v * v * y; });
    const double x = 0.4, y = 0.8, v = 1.2;
    CHECK(L.dx(x, y, v) == Catch::Approx(y).margin(1e-7));
    CHECK(L.dy(x, y, v) == Catch::Approx(x + v * v).margin(1e-7));
    CHECK(L.dv(x, y, v) == Catch::Approx(2.0 * v * y).margin(1e-7));
    // A wrong claimed partial is caught at first use.
    Lagrangian lying([](double, double, double v) { return v * v; }, nullptr, nullptr,
                     [](double, double, double) { return 3.0; });
    CHECK_THROWS_AS(lying.dv(0.1, 0.2, 0.7), HypothesisViolated);
}
