#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "confrac/errors.hpp"

namespace confrac {

inline constexpr double machine_eps = std::numeric_limits<double>::epsilon();

// Step size for difference quotients: cbrt(eps)*max(1,|x|) balances rounding
// against truncation for central differences.
inline double fd_step(double x) {
    static const double base = std::cbrt(machine_eps);
    return base * std::max(1.0, std::abs(x));
}

template <class F>
double central_diff(F&& f, double x) {
    const double h = fd_step(x);
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// First derivative honoring a domain edge.  Near the edge the central step
// shrinks with the remaining gap, which keeps probes inside the domain and
// matches the scale on which edge-singular functions vary; at the edge itself
// a second-order one-sided quotient is used.
template <class F>
double central_diff_bounded(F&& f, double x, double xmin) {
    const double h = fd_step(x);
    if (x - h >= xmin) return (f(x + h) - f(x - h)) / (2.0 * h);
    const double gap = x - xmin;
    if (gap > 0.0) {
        const double hr = std::cbrt(machine_eps) * gap;
        return (f(x + hr) - f(x - hr)) / (2.0 * hr);
    }
    return (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h);
}

template <class F>
double central_diff2(F&& f, double x) {
    // Second derivative wants a larger step: eps^(1/4).
    const double h = std::sqrt(std::sqrt(machine_eps)) * std::max(1.0, std::abs(x));
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// Checks a claimed derivative value against a central difference.  Accepts
// when the mismatch is within rel_tol, or within the difference quotient's own
// convergence noise (estimated by comparing steps h and 2h), so that claims at
// points where the quotient itself is inaccurate are not rejected spuriously.
template <class F>
bool derivative_claim_ok(F&& f, double x, double claimed, double rel_tol = 1e-5) {
    const double h = fd_step(x);
    const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    const double d2 = (f(x + 2.0 * h) - f(x - 2.0 * h)) / (4.0 * h);
    if (!std::isfinite(d1) || !std::isfinite(d2)) return true;  // quotient unusable here
    const double err = std::abs(claimed - d1);
    return err <= rel_tol * std::max(1.0, std::abs(claimed)) || err <= 4.0 * std::abs(d1 - d2);
}

// Neville polynomial extrapolation of (h_i, v_i) samples to h = 0.
inline double neville_at_zero(std::span<const double> hs, std::span<const double> vals) {
    const std::size_t n = hs.size();
    if (n == 0 || n != vals.size()) throw DimensionMismatch("neville_at_zero: need matching nonempty samples");
    std::vector<double> p(vals.begin(), vals.end());
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t i = 0; i + level < n; ++i)
            p[i] = (hs[i + level] * p[i] - hs[i] * p[i + 1]) / (hs[i + level] - hs[i]);
    return p[0];
}

// Safeguarded scalar root solve of f(w) = 0 near `guess`: secant steps with
// bracket tracking, falling back to bisection when the secant step leaves the
// bracket or stalls.  Returns the root; reports failure via the supplied
// exception thrower so callers can pick the error type.
template <class F, class OnFail>
double solve_scalar(F&& f, double guess, double tol, int max_iter, OnFail&& on_fail) {
    double w0 = guess;
    double f0 = f(w0);
    if (std::abs(f0) <= tol) return w0;
    double step = 0.1 * std::max(1.0, std::abs(w0));
    double w1 = w0 + step;
    double f1 = f(w1);

    // Track a sign-changing bracket once one appears.
    double lo = 0.0, hi = 0.0, flo = 0.0;
    bool have_bracket = false;
    auto update_bracket = [&](double wa, double fa, double wb, double fb) {
        if (std::isfinite(fa) && std::isfinite(fb) && fa * fb < 0.0) {
            lo = wa;
            hi = wb;
            flo = fa;
            have_bracket = true;
        }
    };
    update_bracket(w0, f0, w1, f1);

    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(f1) <= tol) return w1;
        double w2;
        if (std::isfinite(f1) && std::isfinite(f0) && f1 != f0) {
            w2 = w1 - f1 * (w1 - w0) / (f1 - f0);
        } else {
            w2 = have_bracket ? 0.5 * (lo + hi) : w1 + (it + 2) * step;
        }
        if (have_bracket) {
            const double a = std::min(lo, hi), b = std::max(lo, hi);
            if (!(w2 > a && w2 < b) || !std::isfinite(w2)) w2 = 0.5 * (lo + hi);
        } else if (!std::isfinite(w2) || std::abs(w2 - w1) > 1e6 * std::max(1.0, std::abs(w1))) {
            // Secant shooting far afield without a bracket: widen the scan.
            w2 = w1 + ((it % 2 == 0) ? 1.0 : -1.0) * (it + 2) * step;
        }
        const double f2 = f(w2);
        update_bracket(w1, f1, w2, f2);
        if (have_bracket) {
            if (flo * f2 < 0.0)
                hi = w2;
            else {
                lo = w2;
                flo = f2;
            }
        }
        w0 = w1;
        f0 = f1;
        w1 = w2;
        f1 = f2;
        if (have_bracket && std::abs(hi - lo) <= tol * std::max(1.0, std::abs(hi))) return 0.5 * (lo + hi);
    }
    if (std::abs(f1) <= 1e3 * tol) return w1;  // close enough to report
    on_fail();
    return w1;  // unreachable when on_fail throws
}

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NonFinite(std::string(what) + ": non-finite value encountered");
}

}  // namespace confrac
