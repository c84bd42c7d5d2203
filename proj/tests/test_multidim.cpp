#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "confrac/multidim.hpp"

using namespace confrac;

namespace {

// Bivariate polynomial of degree <= 2 in each variable, with exact partials.
struct Poly22 {
    std::array<double, 9> c{};  // coefficient of x1^i x2^j at index 3i + j

    double value(double x1, double x2) const {
        double s = 0.0;
        for (int i = 0; i <= 2; ++i)
            for (int j = 0; j <= 2; ++j)
                s += c[std::size_t(3 * i + j)] * std::pow(x1, i) * std::pow(x2, j);
        return s;
    }
    double d1(double x1, double x2) const {
        double s = 0.0;
        for (int i = 1; i <= 2; ++i)
            for (int j = 0; j <= 2; ++j)
                s += c[std::size_t(3 * i + j)] * i * std::pow(x1, i - 1) * std::pow(x2, j);
        return s;
    }
    double d2(double x1, double x2) const {
        double s = 0.0;
        for (int i = 0; i <= 2; ++i)
            for (int j = 1; j <= 2; ++j)
                s += c[std::size_t(3 * i + j)] * j * std::pow(x1, i) * std::pow(x2, j - 1);
        return s;
    }
    Field2D field() const {
        return Field2D([p = *this](double x1, double x2) { return p.value(x1, x2); },
                       [p = *this](double x1, double x2) { return p.d1(x1, x2); },
                       [p = *this](double x1, double x2) { return p.d2(x1, x2); });
    }
};

Poly22 random_poly(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    Poly22 p;
    for (double& v : p.c) v = coeff(rng);
    return p;
}

Lagrangian2D dirichlet_lagrangian() {
    Lagrangian2D L(1, [](double, double, std::span<const double>, std::span<const double> v) {
        return v[0] * v[0] + v[1] * v[1];
    });
    L.with_x_partials(
        [](double, double, std::span<const double>, std::span<const double>) { return 0.0; },
        [](double, double, std::span<const double>, std::span<const double>) { return 0.0; });
    L.with_y_partials(
        {[](double, double, std::span<const double>, std::span<const double>) { return 0.0; }});
    L.with_v_partials(
        {[](double, double, std::span<const double>, std::span<const double> v) { return 2.0 * v[0]; },
         [](double, double, std::span<const double>, std::span<const double> v) { return 2.0 * v[1]; }});
    return L;
}

}  // namespace

TEST_CASE("green identity closes on a random polynomial corpus", "[multidim]") {
    const Rectangle R(0.0, 1.0, 0.0, 1.0);
    std::mt19937_64 rng(42);
    for (int pair = 0; pair < 10; ++pair) {
        const Field2D f = random_poly(rng).field();
        const Field2D g = random_poly(rng).field();
        for (double al : {0.25, 0.5, 0.75, 1.0})
            CHECK(green_residual(f, g, R, Order(al)) <= 1e-6);
    }
}

TEST_CASE("green identity is exactly zero on constants", "[multidim]") {
    const Rectangle R(0.0, 1.0, 0.0, 1.0);
    auto zero = [](double, double) { return 0.0; };
    const Field2D f([](double, double) { return 3.0; }, zero, zero);
    const Field2D g([](double, double) { return -7.0; }, zero, zero);
    CHECK(green_residual(f, g, R, Order(0.5)) <= 1e-10);
}

TEST_CASE("power field solves the two-dimensional dirichlet equations", "[multidim]") {
    const Rectangle R(0.0, 1.0, 0.0, 1.0);
    const Lagrangian2D L = dirichlet_lagrangian();
    for (double al : {0.25, 0.5, 0.75, 1.0}) {
        const Field2D y([al](double x1, double) { return std::pow(x1, al); },
                        [al](double x1, double) { return al * std::pow(x1, al - 1.0); },
                        [](double, double) { return 0.0; });
        const El2dResidual res = el2d_residual(L, {y}, R, Order(al));
        CHECK(res.max_abs <= 1e-6);
    }
}

TEST_CASE("two-dimensional integration by parts with a vanishing test field", "[multidim]") {
    const Rectangle R(0.0, 1.0, 0.0, 1.0);
    std::mt19937_64 rng(43);
    const Field2D F = random_poly(rng).field();
    const Field2D G = random_poly(rng).field();
    const Field2D h(
        [](double x1, double x2) { return x1 * (1.0 - x1) * x2 * (1.0 - x2); },
        [](double x1, double x2) { return (1.0 - 2.0 * x1) * x2 * (1.0 - x2); },
        [](double x1, double x2) { return x1 * (1.0 - x1) * (1.0 - 2.0 * x2); });
    for (double al : {0.5, 1.0}) CHECK(parts2d_residual(F, G, h, R, Order(al)) <= 1e-6);

    const Field2D ones([](double, double) { return 1.0; });
    CHECK_THROWS_AS(parts2d_residual(F, G, ones, R, Order(0.5)), BoundaryConditionViolated);
}

TEST_CASE("double integral closes against product measures", "[multidim]") {
    const Rectangle R(0.0, 1.0, 0.0, 1.0);
    CHECK(double_integral([](double, double) { return 1.0; }, R, Order(0.5)) ==
          Catch::Approx(4.0).margin(1e-8));
    CHECK(double_integral([](double x1, double x2) { return x1 * x2; }, R, Order(1.0)) ==
          Catch::Approx(0.25).margin(1e-10));
}

TEST_CASE("axis partials use the matching anchor", "[multidim]") {
    const Field2D f([](double x1, double x2) { return x1 * x1 * x2; },
                    [](double x1, double x2) { return 2.0 * x1 * x2; },
                    [](double x1, double) { return x1 * x1; });
    CHECK(partial_alpha(f, 1, Order(0.5), 0.0, 1.0, 1.0) == Catch::Approx(2.0).margin(1e-12));
    CHECK(partial_alpha(f, 2, Order(0.5), 0.0, 1.0, 1.0) == Catch::Approx(1.0).margin(1e-12));
    CHECK_THROWS_AS(partial_alpha(f, 3, Order(0.5), 0.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(f.slice(0, 1.0), DomainError);
}

TEST_CASE("constant shifts leave gradient lagrangians invariant", "[multidim]") {
    const Rectangle R(0.0, 1.0, 0.0, 1.0);
    const Lagrangian2D L = dirichlet_lagrangian();
    const Field2D y([](double x1, double x2) { return std::pow(x1, 0.7) + std::pow(x2, 0.9); });
    const TransformationFamily2D shift(
        nullptr, nullptr,
        {[](double, double, std::span<const double>) { return 1.0; }});
    CHECK(invariance2d_residual(L, shift, {y}, R, Order(0.5)) <= 1e-10);
}

TEST_CASE("vertical gauge family is invariant on the plane", "[multidim]") {
    // L = v1^2 with xi = x1^alpha/(2 alpha) and gauge Lambda = y is invariant
    // for fields independent of x2 (the gauge rate then equals L_v1 xi-rate).
    const double al = 0.5;
    const Rectangle R(0.0, 1.0, 0.0, 1.0);
    Lagrangian2D L(1, [](double, double, std::span<const double>, std::span<const double> v) {
        return v[0] * v[0];
    });
    L.with_x_partials(
        [](double, double, std::span<const double>, std::span<const double>) { return 0.0; },
        [](double, double, std::span<const double>, std::span<const double>) { return 0.0; });
    L.with_y_partials(
        {[](double, double, std::span<const double>, std::span<const double>) { return 0.0; }});
    L.with_v_partials(
        {[](double, double, std::span<const double>, std::span<const double> v) { return 2.0 * v[0]; },
         [](double, double, std::span<const double>, std::span<const double>) { return 0.0; }});
    const Field2D y([](double x1, double) { return std::pow(x1, 0.7); });
    const TransformationFamily2D T(
        nullptr, nullptr,
        {[al](double x1, double, std::span<const double>) { return std::pow(x1, al) / (2.0 * al); }},
        [](double, double, std::span<const double> yv) { return yv[0]; });
    CHECK(invariance2d_residual(L, T, {y}, R, Order(al)) <= 1e-6);
}

TEST_CASE("plane geometry and field-count inputs are validated", "[multidim][errors]") {
    CHECK_THROWS_AS(Rectangle(1.0, 0.0, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(Rectangle(0.0, 1.0, 2.0, 2.0), DomainError);
    CHECK_THROWS_AS(Lagrangian2D(0, nullptr), DomainError);
    CHECK_THROWS_AS(TransformationFamily2D(nullptr, nullptr, {}), DomainError);

    const Rectangle R(0.0, 1.0, 0.0, 1.0);
    const Lagrangian2D L = dirichlet_lagrangian();
    const Field2D y([](double x1, double) { return x1; });
    CHECK_THROWS_AS(el2d_residual(L, {y, y}, R, Order(0.5)), DimensionMismatch);

    std::vector<double> one(1, 0.0), two(2, 0.0);
    CHECK_THROWS_AS(L(0.5, 0.5, one, one), DimensionMismatch);
}
