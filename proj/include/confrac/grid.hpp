#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "confrac/calculus.hpp"
#include "confrac/errors.hpp"

namespace confrac {

// A sampled function on a strictly increasing grid, tagged with the order and
// anchor its fractional operators refer to.
struct GridFunction {
    std::vector<double> xs;
    std::vector<double> ys;
    Order order;
    Anchor anchor;

    GridFunction(std::vector<double> xs_, std::vector<double> ys_, Order order_, Anchor anchor_)
        : xs(std::move(xs_)), ys(std::move(ys_)), order(order_), anchor(anchor_) {
        if (xs.size() != ys.size()) throw DimensionMismatch("GridFunction: xs and ys sizes differ");
        if (xs.size() < 2) throw DomainError("GridFunction: need at least two nodes");
        for (std::size_t i = 0; i + 1 < xs.size(); ++i)
            if (!(xs[i] < xs[i + 1])) throw DomainError("GridFunction: xs must be strictly increasing");
        for (double x : xs)
            if (!anchor.admits(x))
                throw DomainError("GridFunction: node outside the anchor's admissible half-line");
    }

    std::size_t size() const { return xs.size(); }
};

// Same abscissae and metadata, new ordinates.
inline GridFunction with_values(const GridFunction& g, std::vector<double> ys) {
    return GridFunction(g.xs, std::move(ys), g.order, g.anchor);
}

// Drops a node coinciding with the anchor point (where residual formulas with
// 1/(x-a) factors are singular); no-op if none does.
inline GridFunction interior(const GridFunction& g) {
    std::size_t lo = 0, hi = g.size();
    if (g.anchor.side == AnchorSide::left_from && g.xs.front() == g.anchor.point) lo = 1;
    if (g.anchor.side == AnchorSide::right_at && g.xs.back() == g.anchor.point) hi -= 1;
    if (lo == 0 && hi == g.size()) return g;
    return GridFunction(std::vector<double>(g.xs.begin() + lo, g.xs.begin() + hi),
                        std::vector<double>(g.ys.begin() + lo, g.ys.begin() + hi), g.order, g.anchor);
}

inline double max_abs(const GridFunction& g) {
    double m = 0.0;
    for (double y : g.ys) m = std::max(m, std::abs(y));
    return m;
}

// Chebyshev-spaced nodes on [a, b] including both endpoints; clustering near
// the ends resolves the anchor region where fractional profiles are steep.
inline std::vector<double> chebyshev_grid(double a, double b, std::size_t n) {
    if (n < 2) throw DomainError("chebyshev_grid: need at least two nodes");
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i)
        xs[i] = a + 0.5 * (b - a) * (1.0 - std::cos(std::numbers::pi * double(i) / double(n - 1)));
    xs.front() = a;
    xs.back() = b;
    return xs;
}

namespace detail {

inline constexpr std::size_t stencil_width = 5;

// Finite-difference weights on arbitrary nodes (Fornberg's recursion).
// Returns rows for derivative orders 0..m at the point z, row-major.
inline std::vector<double> fd_weights(double z, std::span<const double> x, int m) {
    const std::size_t n = x.size();
    std::vector<double> w((m + 1) * n, 0.0);
    double c1 = 1.0;
    double c4 = x[0] - z;
    w[0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const int mn = std::min<int>(static_cast<int>(i), m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    w[k * n + i] = c1 * (k * w[(k - 1) * n + i - 1] - c5 * w[k * n + i - 1]) / c2;
                w[i] = -c1 * c5 * w[i - 1] / c2;
            }
            for (int k = mn; k >= 1; --k) w[k * n + j] = (c4 * w[k * n + j] - k * w[(k - 1) * n + j]) / c3;
            w[j] = c4 * w[j] / c3;
        }
        c1 = c2;
    }
    return w;
}

inline std::size_t window_start(std::size_t i, std::size_t n, std::size_t width) {
    if (n <= width) return 0;
    const std::size_t half = width / 2;
    if (i <= half) return 0;
    return std::min(i - half, n - width);
}

// Transformed abscissa in which the alpha-derivative is alpha * d/ds: the
// offset from the anchor raised to alpha.  Local polynomial fits in s are
// exact on the extremal family y = c0 + c1 (x-a)^alpha / alpha.
inline std::vector<double> s_coords(const GridFunction& g) {
    std::vector<double> s(g.size());
    const double al = g.order.alpha();
    for (std::size_t i = 0; i < g.size(); ++i) s[i] = std::pow(g.anchor.offset(g.xs[i]), al);
    return s;
}

// Newton divided-difference coefficients over nodes t.
inline std::vector<double> newton_coeffs(std::span<const double> t, std::span<const double> v) {
    std::vector<double> c(v.begin(), v.end());
    const std::size_t n = t.size();
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t i = n - 1; i >= level; --i) c[i] = (c[i] - c[i - 1]) / (t[i] - t[i - level]);
    return c;
}

// Evaluates the Newton-form polynomial and its first derivative at z.
inline std::pair<double, double> newton_eval(std::span<const double> t, std::span<const double> c,
                                             double z) {
    const std::size_t n = t.size();
    double p = c[n - 1], dp = 0.0;
    for (std::size_t j = n - 1; j-- > 0;) {
        dp = p + (z - t[j]) * dp;
        p = c[j] + (z - t[j]) * p;
    }
    return {p, dp};
}

inline std::size_t locate_window(const GridFunction& g, double x) {
    const double pad = 1e-9 * (1.0 + std::abs(g.xs.front()) + std::abs(g.xs.back()));
    if (x < g.xs.front() - pad || x > g.xs.back() + pad)
        throw DomainError("GridFunction: evaluation point outside the grid span");
    auto it = std::lower_bound(g.xs.begin(), g.xs.end(), x);
    std::size_t i = (it == g.xs.end()) ? g.size() - 1 : static_cast<std::size_t>(it - g.xs.begin());
    return window_start(i, g.size(), stencil_width);
}

}  // namespace detail

// Nodewise classical derivative dy/dx from 5-point local polynomial fits.
inline GridFunction grid_deriv(const GridFunction& g) {
    const std::size_t n = g.size();
    const std::size_t width = std::min(detail::stencil_width, n);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = detail::window_start(i, n, width);
        std::span<const double> window(g.xs.data() + start, width);
        const auto w = detail::fd_weights(g.xs[i], window, 1);
        double d = 0.0;
        for (std::size_t j = 0; j < width; ++j) d += w[width + j] * g.ys[start + j];
        out[i] = d;
    }
    return with_values(g, std::move(out));
}

// Nodewise classical second derivative.
inline GridFunction grid_deriv2(const GridFunction& g) {
    const std::size_t n = g.size();
    const std::size_t width = std::min(detail::stencil_width, n);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = detail::window_start(i, n, width);
        std::span<const double> window(g.xs.data() + start, width);
        const auto w = detail::fd_weights(g.xs[i], window, 2);
        double d = 0.0;
        for (std::size_t j = 0; j < width; ++j) d += w[2 * width + j] * g.ys[start + j];
        out[i] = d;
    }
    return with_values(g, std::move(out));
}

// Nodewise alpha-derivative along the grid's own anchor: local polynomial fits
// in the transformed abscissa s = offset^alpha, scaled by alpha.
inline GridFunction grid_alpha_deriv(const GridFunction& g) {
    const std::size_t n = g.size();
    const std::size_t width = std::min(detail::stencil_width, n);
    const auto s = detail::s_coords(g);
    const double al = g.order.alpha();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = detail::window_start(i, n, width);
        std::span<const double> window(s.data() + start, width);
        const auto w = detail::fd_weights(s[i], window, 1);
        double d = 0.0;
        for (std::size_t j = 0; j < width; ++j) d += w[width + j] * g.ys[start + j];
        out[i] = al * d;
    }
    return with_values(g, std::move(out));
}

// Interpolated value at x from the surrounding 5-node window, fitted in the
// transformed abscissa.
inline double grid_interp(const GridFunction& g, double x) {
    const std::size_t width = std::min(detail::stencil_width, g.size());
    const std::size_t start = detail::locate_window(g, x);
    const auto s = detail::s_coords(g);
    std::span<const double> t(s.data() + start, width);
    std::span<const double> v(g.ys.data() + start, width);
    const auto c = detail::newton_coeffs(t, v);
    return detail::newton_eval(t, c, std::pow(g.anchor.offset(x), g.order.alpha())).first;
}

// Interpolated alpha-derivative at x (alpha times the s-slope of the local fit).
inline double grid_interp_alpha_deriv(const GridFunction& g, double x) {
    const std::size_t width = std::min(detail::stencil_width, g.size());
    const std::size_t start = detail::locate_window(g, x);
    const auto s = detail::s_coords(g);
    std::span<const double> t(s.data() + start, width);
    std::span<const double> v(g.ys.data() + start, width);
    const auto c = detail::newton_coeffs(t, v);
    const double slope = detail::newton_eval(t, c, std::pow(g.anchor.offset(x), g.order.alpha())).second;
    return g.order.alpha() * slope;
}

}  // namespace confrac
