#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "confrac/errors.hpp"
#include "confrac/numerics.hpp"

namespace confrac {

struct OdeSettings {
    double abs_tol = 1e-11;
    double rel_tol = 1e-11;
    long max_steps = 5'000'000;
};

namespace detail {

// Dormand-Prince 5(4) embedded pair.
struct Dopri5 {
    static constexpr double c[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double a[7][6] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
    };
    static constexpr double b5[7] = {35.0 / 384,     0.0,        500.0 / 1113, 125.0 / 192,
                                     -2187.0 / 6784, 11.0 / 84,  0.0};
    static constexpr double b4[7] = {5179.0 / 57600,    0.0,          7571.0 / 16695, 393.0 / 640,
                                     -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
};

}  // namespace detail

// Adaptive Dormand-Prince integration of y' = rhs(t, y) from t0 to t1 > t0,
// advancing `y` in place.  rhs signature: void(double t, span<const double> y,
// span<double> dydt).
template <class RHS>
void ode_integrate(RHS&& rhs, std::vector<double>& y, double t0, double t1,
                   const OdeSettings& settings = {}) {
    using tab = detail::Dopri5;
    if (t1 == t0) return;
    if (t1 < t0) throw DomainError("ode_integrate: integration must move forward");
    const std::size_t dim = y.size();
    std::vector<double> k[7];
    for (auto& stage : k) stage.assign(dim, 0.0);
    std::vector<double> ytmp(dim), y5(dim), y4(dim);

    double t = t0;
    double h = (t1 - t0) / 100.0;
    long steps = 0;
    while (t < t1) {
        if (t1 - t <= 4.0 * machine_eps * std::max({std::abs(t), std::abs(t1), 1.0}))
            break;  // remaining span is below time resolution
        if (++steps > settings.max_steps)
            throw NoConvergence("ode_integrate: step limit exceeded");
        h = std::min(h, t1 - t);
        if (!(h > 0.0) || t + h == t) throw NoConvergence("ode_integrate: step size underflow");

        rhs(t, std::span<const double>(y), std::span<double>(k[0]));
        for (int s = 1; s < 7; ++s) {
            for (std::size_t i = 0; i < dim; ++i) {
                double acc = y[i];
                for (int j = 0; j < s; ++j) acc += h * tab::a[s][j] * k[j][i];
                ytmp[i] = acc;
            }
            rhs(t + tab::c[s] * h, std::span<const double>(ytmp), std::span<double>(k[s]));
        }
        double err = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < dim; ++i) {
            double v5 = y[i], v4 = y[i];
            for (int s = 0; s < 7; ++s) {
                v5 += h * tab::b5[s] * k[s][i];
                v4 += h * tab::b4[s] * k[s][i];
            }
            y5[i] = v5;
            y4[i] = v4;
            finite = finite && std::isfinite(v5);
            const double scale = settings.abs_tol + settings.rel_tol * std::max(std::abs(y[i]), std::abs(v5));
            const double e = (v5 - v4) / scale;
            err += e * e;
        }
        if (!finite) throw NonFinite("ode_integrate: state became non-finite");
        err = std::sqrt(err / double(dim));
        if (err <= 1.0) {
            t += h;
            y = y5;
        }
        const double factor = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
    }
}

// Integrates through the increasing sample times ts, invoking
// on_sample(index, y) at each of them (including ts[0] with the initial state).
template <class RHS, class Obs>
void ode_integrate_path(RHS&& rhs, std::vector<double>& y, std::span<const double> ts, Obs&& on_sample,
                        const OdeSettings& settings = {}) {
    if (ts.empty()) return;
    on_sample(std::size_t{0}, y);
    for (std::size_t i = 1; i < ts.size(); ++i) {
        ode_integrate(rhs, y, ts[i - 1], ts[i], settings);
        on_sample(i, y);
    }
}

}  // namespace confrac
