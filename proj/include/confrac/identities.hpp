#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "confrac/calculus.hpp"
#include "confrac/errors.hpp"
#include "confrac/function_handle.hpp"

namespace confrac {

// Residual of the inverse property: the alpha-derivative of the alpha-integral
// of f returns f.  Reports the max over the probe points xs (all > a).
inline double inverse_residual(const FunctionHandle& f, Order order, double a,
                               std::span<const double> xs, const QuadratureSettings& settings = {}) {
    FunctionHandle primitive([&f, order, a, settings](double t) {
        return left_integral(f, order, a, t, settings);
    });
    double worst = 0.0;
    for (double x : xs) {
        if (x <= a) throw DomainError("inverse_residual: probe points must lie right of the anchor");
        worst = std::max(worst, std::abs(left_deriv(primitive, order, a, x) - f(x)));
    }
    return worst;
}

// Residual of the fundamental theorem: the alpha-integral of the
// alpha-derivative of f recovers f(x) - f(a).  Requires f to come with a
// first derivative so that the integrand is the closed-form derivative.
inline double fundamental_theorem_residual(const FunctionHandle& f, Order order, double a, double x,
                                           const QuadratureSettings& settings = {}) {
    if (!f.has_deriv1())
        throw MissingDerivative("fundamental_theorem_residual: f must supply deriv1");
    FunctionHandle derivative([&f, order, a](double u) { return left_deriv(f, order, a, u); });
    const double integral = left_integral(derivative, order, a, x, settings);
    return std::abs(integral - (f(x) - f(a)));
}

// The three integration-by-parts pairings on [a, b]: both factors
// differentiated from the left, both from the right, or mixed (left-derivative
// of g against a left measure versus right-derivative of f against a right
// measure).
enum class PartsVariant { left_left, right_right, left_right };

inline double parts_residual(const FunctionHandle& f, const FunctionHandle& g, Order order, double a,
                             double b, PartsVariant variant, const QuadratureSettings& settings = {}) {
    if (!(a < b)) throw DomainError("parts_residual: need a < b");
    const double boundary = f(b) * g(b) - f(a) * g(a);
    auto left_int = [&](auto&& integrand) {
        return left_integral(FunctionHandle(integrand), order, a, b, settings);
    };
    auto right_int = [&](auto&& integrand) {
        return right_integral(FunctionHandle(integrand), order, b, a, settings);
    };
    switch (variant) {
        case PartsVariant::left_left: {
            const double t1 = left_int([&](double u) { return f(u) * left_deriv(g, order, a, u); });
            const double t2 = left_int([&](double u) { return g(u) * left_deriv(f, order, a, u); });
            return std::abs(t1 - (boundary - t2));
        }
        case PartsVariant::right_right: {
            const double t1 = right_int([&](double u) { return f(u) * right_deriv(g, order, b, u); });
            const double t2 = right_int([&](double u) { return g(u) * right_deriv(f, order, b, u); });
            return std::abs(t1 - (-boundary - t2));
        }
        case PartsVariant::left_right: {
            const double t1 = left_int([&](double u) { return f(u) * left_deriv(g, order, a, u); });
            const double t2 = right_int([&](double u) { return g(u) * right_deriv(f, order, b, u); });
            return std::abs(t1 - (boundary + t2));
        }
    }
    throw DomainError("parts_residual: unknown variant");
}

// Composition cases for the chain rule, named by where the inner function's
// value sits relative to the anchor of the outer derivative.
enum class ChainCase {
    left_above,   // left anchor a, g(x) >= a: outer uses a left derivative at a
    right_below,  // right anchor b, g(x) <= b: outer uses a right derivative at b
    left_below,   // left anchor a, g(x) < a: outer uses a right derivative terminating at a
    right_above,  // right anchor b, g(x) > b: outer uses a left derivative starting from b
};

// Residual of the chain rule for f(g(x)) at a single point.  The left/right
// anchor of the composite's derivative must match the case.
inline double chain_rule_residual(const FunctionHandle& f, const FunctionHandle& g, Order order,
                                  const Anchor& anchor, double x, ChainCase chain_case) {
    const double al = order.alpha();
    const bool left = anchor.side == AnchorSide::left_from;
    const bool case_is_left = chain_case == ChainCase::left_above || chain_case == ChainCase::left_below;
    if (left != case_is_left)
        throw HypothesisViolated("chain_rule_residual: anchor side does not match composition case");
    const double c = anchor.point;
    const double gx = g(x);

    std::function<double(double)> composite_d1;
    if (f.has_deriv1() && g.has_deriv1())
        composite_d1 = [&f, &g](double t) { return f.deriv1(g(t)) * g.deriv1(t); };
    FunctionHandle composite([&f, &g](double t) { return f(g(t)); }, composite_d1);

    double lhs, rhs;
    switch (chain_case) {
        case ChainCase::left_above:
            if (gx < c || (al < 1.0 && gx == c))
                throw HypothesisViolated("chain_rule_residual: need g(x) > a (>= a when alpha = 1)");
            lhs = left_deriv(composite, order, c, x);
            rhs = left_deriv(f, order, c, gx) * left_deriv(g, order, c, x) * std::pow(gx - c, al - 1.0);
            break;
        case ChainCase::right_below:
            if (gx > c || (al < 1.0 && gx == c))
                throw HypothesisViolated("chain_rule_residual: need g(x) < b (<= b when alpha = 1)");
            lhs = right_deriv(composite, order, c, x);
            rhs = -right_deriv(f, order, c, gx) * right_deriv(g, order, c, x) * std::pow(c - gx, al - 1.0);
            break;
        case ChainCase::left_below:
            if (!(gx < c)) throw HypothesisViolated("chain_rule_residual: need g(x) < a");
            lhs = left_deriv(composite, order, c, x);
            rhs = -right_deriv(f, order, c, gx) * left_deriv(g, order, c, x) * std::pow(c - gx, al - 1.0);
            break;
        case ChainCase::right_above:
            if (!(gx > c)) throw HypothesisViolated("chain_rule_residual: need g(x) > b");
            lhs = right_deriv(composite, order, c, x);
            rhs = left_deriv(f, order, c, gx) * right_deriv(g, order, c, x) * std::pow(gx - c, al - 1.0);
            break;
        default:
            throw DomainError("chain_rule_residual: unknown case");
    }
    return std::abs(lhs - rhs);
}

// Residual of the multivariate chain rule: the alpha-derivative of
// F(y_1(x), ..., y_N(x)) equals the sum of partials of F times the
// alpha-derivatives of the components.
inline double multivar_chain_residual(const MultiFunctionHandle& F,
                                      std::span<const FunctionHandle> ys, Order order, double a,
                                      double x) {
    if (ys.size() != F.arity())
        throw DimensionMismatch("multivar_chain_residual: component count must match arity of F");
    const std::size_t n = ys.size();

    bool all_d1 = true;
    for (const auto& y : ys) all_d1 = all_d1 && y.has_deriv1();
    std::function<double(double)> composite_d1;
    if (all_d1) {
        composite_d1 = [&F, ys](double t) {
            std::vector<double> args(ys.size());
            for (std::size_t k = 0; k < ys.size(); ++k) args[k] = ys[k](t);
            double sum = 0.0;
            for (std::size_t k = 0; k < ys.size(); ++k) sum += F.partial(k, args) * ys[k].deriv1(t);
            return sum;
        };
    }
    FunctionHandle composite(
        [&F, ys](double t) {
            std::vector<double> args(ys.size());
            for (std::size_t k = 0; k < ys.size(); ++k) args[k] = ys[k](t);
            return F(args);
        },
        composite_d1);

    const double lhs = left_deriv(composite, order, a, x);
    std::vector<double> args(n);
    for (std::size_t k = 0; k < n; ++k) args[k] = ys[k](x);
    double rhs = 0.0;
    for (std::size_t k = 0; k < n; ++k) rhs += F.partial(k, args) * left_deriv(ys[k], order, a, x);
    return std::abs(lhs - rhs);
}

}  // namespace confrac
