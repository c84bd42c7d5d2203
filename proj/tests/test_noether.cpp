#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "confrac/noether.hpp"

using namespace confrac;

namespace {

Lagrangian kinetic() {
    return Lagrangian([](double, double, double v) { return v * v; },
                      [](double, double, double) { return 0.0; },
                      [](double, double, double) { return 0.0; },
                      [](double, double, double v) { return 2.0 * v; });
}

// Vertical family xi = x^alpha / (2 alpha), gauge Lambda = y, which leaves the
// quadratic action invariant up to the gauge term at every order.
TransformationFamily vertical_gauge_family(double al) {
    TransformationFamily T([](double, double) { return 0.0; },
                           [al](double x, double) { return std::pow(x, al) / (2.0 * al); },
                           [](double, double y) { return y; });
    T.with_tau_partials([](double, double) { return 0.0; }, [](double, double) { return 0.0; });
    T.with_xi_partials([al](double x, double) { return 0.5 * std::pow(x, al - 1.0); },
                       [](double, double) { return 0.0; });
    T.with_gauge_partials([](double, double) { return 0.0; }, [](double, double) { return 1.0; });
    return T;
}

}  // namespace

TEST_CASE("vertical gauge family is invariant to first order", "[noether]") {
    const double al = 0.5;
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(al), 0.3, 1.0);
    const Extremal ext = solve_extremal(p);
    REQUIRE(ext.certified());
    CHECK(ext.report.shooting_parameter == Catch::Approx(0.35).margin(1e-6));

    const TransformationFamily T = vertical_gauge_family(al);
    const InvarianceReport rep = invariance_report(p, T, ext.y);
    CHECK(rep.residual_max <= 1e-12);

    // Finite-parameter defect is exactly eps^2/4 pointwise, eps^2/2 integrated.
    REQUIRE(rep.defects.size() == 3);
    for (std::size_t i = 0; i < rep.defects.size(); ++i) {
        const double eps = rep.epsilon_sequence[i];
        CHECK(rep.defects[i] == Catch::Approx(0.5 * eps * eps).epsilon(0.02));
    }
    // First-order slopes defect/eps decay linearly: one decade in eps buys a
    // factor ten, comfortably above the five required.
    for (std::size_t i = 1; i < rep.first_order_slopes.size(); ++i)
        CHECK(rep.first_order_slopes[i - 1] / rep.first_order_slopes[i] >= 5.0);
}

TEST_CASE("gauge momentum is conserved along the extremal", "[noether]") {
    const double al = 0.5;
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(al), 0.3, 1.0);
    const Extremal ext = solve_extremal(p);
    const TransformationFamily T = vertical_gauge_family(al);

    const ConservedQuantity C = conserved_quantity_gauge(p, T);
    CHECK(drift(C, ext.y) <= 1e-5);
    // The conserved value is minus the left boundary datum.
    const GridFunction yin = interior(ext.y);
    const GridFunction vin = interior(grid_alpha_deriv(ext.y));
    CHECK(C.value(yin.xs[0], yin.ys[0], vin.ys[0]) == Catch::Approx(-0.3).margin(1e-6));
}

TEST_CASE("noether balance holds along certified extremals", "[noether]") {
    const double al = 0.5;
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(al), 0.3, 1.0);
    const Extremal ext = solve_extremal(p);
    const TransformationFamily T = vertical_gauge_family(al);
    CHECK(max_abs(noether_balance_residual(p, T, ext)) <= 1e-4);

    // The identity family satisfies the balance identically, not just small.
    const TransformationFamily identity;
    CHECK(max_abs(noether_balance_residual(p, identity, ext)) <= 1e-12);
    CHECK(invariance_defect(p, identity, ext.y, 1e-3) <= 1e-12);
}

TEST_CASE("force-compensated quantity absorbs the balance right-hand side", "[noether]") {
    const double al = 0.5;
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(al), 0.3, 1.0);
    const Extremal ext = solve_extremal(p);
    const TransformationFamily T = vertical_gauge_family(al);

    // d^alpha (0.7 x) = 0.7 sqrt(x) matches the right-hand side along the
    // extremal, so C = L_v xi sqrt(x) - 0.7 x is exactly conserved (at zero).
    const ConservedQuantity C = conserved_quantity_with_force(
        p, T, [](double x, double, double) { return 0.7 * x; }, ext);
    CHECK(drift(C, ext.y) <= 1e-6);

    CHECK_THROWS_AS(conserved_quantity_with_force(
                        p, T, [](double, double, double) { return 0.0; }, ext),
                    ForceEquationViolated);
}

TEST_CASE("horizontal components are rejected by the gauge form", "[noether][errors]") {
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(0.5), 0.3, 1.0);
    TransformationFamily shifted([](double, double) { return 1.0; }, [](double, double) { return 0.0; });
    CHECK_THROWS_AS(conserved_quantity_gauge(p, shifted), HypothesisViolated);
}

TEST_CASE("balance demands a live extremal certificate", "[noether][errors]") {
    const double al = 0.5;
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(al), 0.3, 1.0);
    const Extremal ext = solve_extremal(p);
    const TransformationFamily T = vertical_gauge_family(al);

    Extremal uncertified = ext;
    uncertified.el_residual_max = 1.0;
    CHECK_FALSE(uncertified.certified());
    CHECK_THROWS_AS(noether_balance_residual(p, T, uncertified), NotAnExtremal);

    // A stale certificate: the grid was bent after solving.
    Extremal bent = ext;
    std::vector<double> ys = ext.y.ys;
    for (std::size_t i = 1; i + 1 < ys.size(); ++i)
        ys[i] += 1e-3 * std::sin(3.0 * ext.y.xs[i]);
    bent.y = with_values(ext.y, std::move(ys));
    CHECK_THROWS_AS(noether_balance_residual(p, T, bent), NotAnExtremal);
}

TEST_CASE("defect and report inputs are validated", "[noether][errors]") {
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(0.5), 0.3, 1.0);
    const Extremal ext = solve_extremal(p);
    const TransformationFamily T = vertical_gauge_family(0.5);
    CHECK_THROWS_AS(invariance_report(p, T, ext.y, {}), DomainError);
    CHECK_THROWS_AS(invariance_report(p, T, ext.y, {1e-2, 1e-2}), DomainError);
    CHECK_THROWS_AS(invariance_report(p, T, ext.y, {-1e-3}), DomainError);

    // A leftward shift pushes probe points past the anchor.
    TransformationFamily leftward([](double, double) { return -1.0; }, [](double, double) { return 0.0; });
    CHECK_THROWS_AS(invariance_defect(p, leftward, ext.y, 0.5), DomainError);
}

TEST_CASE("classical time translation conserves the energy", "[noether][classical]") {
    const VariationalProblem p(kinetic(), 0.0, 1.0, Order(1.0), 0.0, 1.0);
    const Extremal ext = solve_extremal(p);
    REQUIRE(ext.certified());

    TransformationFamily shift([](double, double) { return 1.0; }, [](double, double) { return 0.0; });
    shift.with_tau_partials([](double, double) { return 0.0; }, [](double, double) { return 0.0; });
    shift.with_xi_partials([](double, double) { return 0.0; }, [](double, double) { return 0.0; });
    // Stencil differentiation of the solver grid leaves ~1e-8 noise in v.
    CHECK(max_abs(noether_balance_residual(p, shift, ext)) <= 1e-7);

    const ConservedQuantity C = conserved_quantity_with_force(
        p, shift, [](double, double, double) { return 0.0; }, ext);
    CHECK(drift(C, ext.y) <= 1e-8);
    // The energy L - v L_v = -v^2 = -1 along the unit-speed line.
    const GridFunction yin = interior(ext.y);
    const GridFunction vin = interior(grid_alpha_deriv(ext.y));
    CHECK(C.value(yin.xs[0], yin.ys[0], vin.ys[0]) == Catch::Approx(-1.0).margin(1e-8));

    // The spec-signature overload solves the extremal internally.
    const ConservedQuantity C2 = conserved_quantity_with_force(
        p, shift, [](double, double, double) { return 0.0; });
    CHECK(drift(C2, ext.y) <= 1e-8);
}
