#pragma once

#include <array>
#include <cmath>
#include <string>

#include "confrac/errors.hpp"
#include "confrac/function_handle.hpp"
#include "confrac/numerics.hpp"
#include "confrac/quadrature.hpp"

namespace confrac {

// Fractional order, restricted to 0 < alpha <= 1.
class Order {
  public:
    explicit Order(double alpha) : alpha_(alpha) {
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw DomainError("Order: alpha must satisfy 0 < alpha <= 1, got " + std::to_string(alpha));
    }
    double alpha() const { return alpha_; }
    bool is_classical() const { return alpha_ == 1.0; }

  private:
    double alpha_;
};

enum class AnchorSide { left_from, right_at };

// Base point of the fractional operators: derivatives "start from" a left
// anchor a on [a, inf) or "terminate at" a right anchor b on (-inf, b].
struct Anchor {
    AnchorSide side;
    double point;

    static Anchor left_from(double a) { return {AnchorSide::left_from, a}; }
    static Anchor right_at(double b) { return {AnchorSide::right_at, b}; }

    bool admits(double x) const { return side == AnchorSide::left_from ? x >= point : x <= point; }
    // Distance from the anchor, nonnegative on the admissible half-line.
    double offset(double x) const { return side == AnchorSide::left_from ? x - point : point - x; }
};

inline bool operator==(const Anchor& l, const Anchor& r) { return l.side == r.side && l.point == r.point; }

namespace detail {

inline void check_divergence(std::span<const double> vals, const char* what) {
    bool growing = true;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        if (!std::isfinite(vals[i])) throw NonFinite(std::string(what) + ": non-finite in anchor limit");
        if (!(std::abs(vals[i + 1]) > 2.0 * std::abs(vals[i]))) growing = false;
    }
    if (!std::isfinite(vals.back())) throw NonFinite(std::string(what) + ": non-finite in anchor limit");
    if (growing && std::abs(vals.back()) > 4.0 * std::abs(vals.front()))
        throw NonFinite(std::string(what) + ": anchor limit diverges");
}

// One-sided limit at the anchor: sample g(anchor +/- delta_k) on the schedule
// delta_k = 10^-k * max(1, |anchor|), k = 2..6, and extrapolate to delta = 0.
template <class G>
double anchor_limit(G&& g, double anchor, int direction, const char* what) {
    const double scale = std::max(1.0, std::abs(anchor));
    std::array<double, 5> deltas{}, vals{};
    double d = 1e-2 * scale;
    for (int k = 0; k < 5; ++k, d *= 0.1) {
        deltas[k] = d;
        vals[k] = g(anchor + direction * d);
    }
    check_divergence(vals, what);
    return neville_at_zero(deltas, vals);
}

}  // namespace detail

// Left derivative of order alpha anchored at a, evaluated at x >= a.
// Differentiable inputs use the closed form (x-a)^(1-alpha) f'(x); otherwise a
// difference quotient of the defining limit with step eps = cbrt(machine
// epsilon)*max(1,|x|).  At x = a the value is the right limit of interior
// values, extrapolated from a shrinking delta-sequence.
inline double left_deriv(const FunctionHandle& f, Order order, double a, double x) {
    if (x < a) throw DomainError("left_deriv: x must satisfy x >= a");
    const double al = order.alpha();
    if (x == a) {
        if (al == 1.0 && f.has_deriv1()) return f.deriv1(x);
        return detail::anchor_limit([&](double t) { return left_deriv(f, order, a, t); }, a, +1,
                                    "left_deriv");
    }
    const double w = std::pow(x - a, 1.0 - al);
    if (f.has_deriv1()) {
        const double d = w * f.deriv1(x);
        require_finite(d, "left_deriv");
        return d;
    }
    const double eps = fd_step(x);
    double q;
    if (x - eps * w >= a)
        q = (f(x + eps * w) - f(x - eps * w)) / (2.0 * eps);
    else
        q = (f(x + eps * w) - f(x)) / eps;
    if (!std::isfinite(q) || std::abs(q) > 1e100)
        throw NonFinite("left_deriv: difference quotient diverges");
    return q;
}

// Right derivative of order alpha terminating at b, evaluated at x <= b.
// Closed form -(b-x)^(1-alpha) f'(x) when a derivative is supplied.  At x = b
// the value is the left limit of interior values.
inline double right_deriv(const FunctionHandle& f, Order order, double b, double x) {
    if (x > b) throw DomainError("right_deriv: x must satisfy x <= b");
    const double al = order.alpha();
    if (x == b) {
        if (al == 1.0 && f.has_deriv1()) return -f.deriv1(x);
        return detail::anchor_limit([&](double t) { return right_deriv(f, order, b, t); }, b, -1,
                                    "right_deriv");
    }
    const double w = std::pow(b - x, 1.0 - al);
    if (f.has_deriv1()) {
        const double d = -w * f.deriv1(x);
        require_finite(d, "right_deriv");
        return d;
    }
    const double eps = fd_step(x);
    double q;
    if (x + eps * w <= b)
        q = -(f(x + eps * w) - f(x - eps * w)) / (2.0 * eps);
    else
        q = -(f(x) - f(x - eps * w)) / eps;
    if (!std::isfinite(q) || std::abs(q) > 1e100)
        throw NonFinite("right_deriv: difference quotient diverges");
    return q;
}

// Dispatch on an anchor.
inline double alpha_deriv(const FunctionHandle& f, Order order, const Anchor& anchor, double x) {
    return anchor.side == AnchorSide::left_from ? left_deriv(f, order, anchor.point, x)
                                                : right_deriv(f, order, anchor.point, x);
}

// Left integral of order alpha: integral of f(u) (u-a)^(alpha-1) du over
// [a, x].  The substitution t = (u-a)^alpha removes the endpoint singularity
// exactly, leaving a smooth integrand for the adaptive rule.
inline double left_integral(const FunctionHandle& f, Order order, double a, double x,
                            const QuadratureSettings& settings = {}) {
    if (x < a) throw DomainError("left_integral: x must satisfy x >= a");
    if (x == a) return 0.0;
    const double al = order.alpha();
    const double inv_al = 1.0 / al;
    return integrate_adaptive([&](double t) { return f(a + std::pow(t, inv_al)) * inv_al; }, 0.0,
                              std::pow(x - a, al), settings);
}

// Right integral of order alpha: integral of f(u) (b-u)^(alpha-1) du over
// [x, b], via the substitution t = (b-u)^alpha.
inline double right_integral(const FunctionHandle& f, Order order, double b, double x,
                             const QuadratureSettings& settings = {}) {
    if (x > b) throw DomainError("right_integral: x must satisfy x <= b");
    if (x == b) return 0.0;
    const double al = order.alpha();
    const double inv_al = 1.0 / al;
    return integrate_adaptive([&](double t) { return f(b - std::pow(t, inv_al)) * inv_al; }, 0.0,
                              std::pow(b - x, al), settings);
}

}  // namespace confrac
