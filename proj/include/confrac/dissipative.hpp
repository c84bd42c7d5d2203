#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "confrac/errors.hpp"
#include "confrac/function_handle.hpp"
#include "confrac/grid.hpp"
#include "confrac/ode.hpp"
#include "confrac/variational.hpp"

namespace confrac {

// Point particle of mass m in potential U with linear friction coefficient
// gamma, started from (x0, v0).  The associated action principle fixes the
// fractional order at one half.
struct DissipativeSystem {
    double m;
    double gamma;
    FunctionHandle U;
    double x0;
    double v0;

    DissipativeSystem(double m_, double gamma_, FunctionHandle U_, double x0_, double v0_)
        : m(m_), gamma(gamma_), U(std::move(U_)), x0(x0_), v0(v0_) {
        if (!(m > 0.0)) throw DomainError("DissipativeSystem: mass must be positive");
        if (!(gamma >= 0.0)) throw DomainError("DissipativeSystem: gamma must be nonnegative");
        if (!U.has_deriv1()) throw MissingDerivative("DissipativeSystem: potential must supply deriv1");
    }

    double force(double x) const { return -U.deriv1(x); }
};

inline constexpr double dissipative_order = 0.5;

// Mixed integrand of the dissipative action anchored at a:
//   L(t, x, x', v) = m/2 x'^2 - U(x) + gamma/2 v^2,
// where v is the order-1/2 derivative of the path starting from a.
inline MixedLagrangian friction_lagrangian(const DissipativeSystem& sys, double /*a*/) {
    const double m = sys.m, gamma = sys.gamma;
    FunctionHandle U = sys.U;
    return MixedLagrangian(
        [m, gamma, U](double, double x, double xp, double v) {
            return 0.5 * m * xp * xp - U(x) + 0.5 * gamma * v * v;
        },
        [](double, double, double, double) { return 0.0; },
        [U](double, double x, double, double) { return -U.deriv1(x); },
        [m](double, double, double xp, double) { return m * xp; },
        [gamma](double, double, double, double v) { return gamma * v; });
}

// Pointwise residual of the equation of motion the action yields on a window
// anchored at a:  m x'' + gamma x' + gamma (t - a) x'' - F(x) = 0.
inline GridFunction equation_of_motion_residual(const DissipativeSystem& sys, double a,
                                                const GridFunction& traj) {
    const GridFunction xp = grid_deriv(traj);
    const GridFunction xpp = grid_deriv2(traj);
    std::vector<double> r(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.xs[i];
        r[i] = sys.m * xpp.ys[i] + sys.gamma * xp.ys[i] + sys.gamma * (t - a) * xpp.ys[i] -
               sys.force(traj.ys[i]);
    }
    return with_values(traj, std::move(r));
}

// Schedule of window widths for the anchor-refresh limit; widths must be
// positive and strictly decreasing.
struct LimitSchedule {
    std::vector<double> widths;
    bool extrapolate = true;

    explicit LimitSchedule(std::vector<double> widths_, bool extrapolate_ = true)
        : widths(std::move(widths_)), extrapolate(extrapolate_) {
        if (widths.empty()) throw DomainError("LimitSchedule: need at least one width");
        for (std::size_t i = 0; i < widths.size(); ++i) {
            if (!(widths[i] > 0.0)) throw DomainError("LimitSchedule: widths must be positive");
            if (i > 0 && !(widths[i] < widths[i - 1]))
                throw DomainError("LimitSchedule: widths must be strictly decreasing");
        }
    }
};

struct ConvergenceReport {
    std::vector<double> widths;
    std::vector<double> sup_distances;        // sup |x_width - x_reference| per width
    double extrapolated_sup_distance = 0.0;   // distance of the zero-width extrapolation
};

struct DissipativeResult {
    GridFunction reference;                // solution of m x'' + gamma x' = F
    GridFunction limit_trajectory;         // zero-width extrapolation (or finest width)
    std::vector<GridFunction> per_width;
    ConvergenceReport report;
};

namespace detail {

// Windowed dynamics: within a window starting at t = aw the action's equation
// of motion reads x'' = (F(x) - gamma x') / (m + gamma (t - aw)).
template <class Sys>
void integrate_windowed(const Sys& sys, double width, std::span<const double> ts,
                        std::vector<double>& out, const OdeSettings& ode) {
    std::vector<double> state = {sys.x0, sys.v0};
    out.assign(ts.size(), 0.0);
    out[0] = sys.x0;
    for (std::size_t i = 1; i < ts.size(); ++i) {
        double t = ts[i - 1];
        const double target = ts[i];
        while (t < target) {
            const std::size_t k = static_cast<std::size_t>(std::floor(t / width + 1e-9));
            const double aw = double(k) * width;
            const double stop = std::min(target, aw + width);
            auto rhs = [&](double tt, std::span<const double> u, std::span<double> du) {
                du[0] = u[1];
                du[1] = (sys.force(u[0]) - sys.gamma * u[1]) / (sys.m + sys.gamma * (tt - aw));
            };
            ode_integrate(rhs, state, t, stop, ode);
            t = stop;
        }
        out[i] = state[0];
    }
}

}  // namespace detail

// Integrates the windowed action dynamics for each width in the schedule,
// compares against the frictional reference m x'' + gamma x' = F(x), and
// extrapolates the family to zero width.  Distances must shrink as the widths
// do (up to a noise floor), otherwise the limit is reported as not converging.
inline DissipativeResult simulate_with_limit(const DissipativeSystem& sys, double horizon,
                                             const LimitSchedule& schedule, std::size_t n_out = 201,
                                             const OdeSettings& ode = {}) {
    if (!(horizon > 0.0)) throw DomainError("simulate_with_limit: horizon must be positive");
    if (n_out < 2) throw DomainError("simulate_with_limit: need at least two output nodes");
    std::vector<double> ts(n_out);
    for (std::size_t i = 0; i < n_out; ++i) ts[i] = horizon * double(i) / double(n_out - 1);

    std::vector<double> ref(n_out);
    {
        std::vector<double> state = {sys.x0, sys.v0};
        auto rhs = [&](double, std::span<const double> u, std::span<double> du) {
            du[0] = u[1];
            du[1] = (sys.force(u[0]) - sys.gamma * u[1]) / sys.m;
        };
        ode_integrate_path(rhs, state, ts, [&](std::size_t i, const std::vector<double>& u) { ref[i] = u[0]; },
                           ode);
    }

    const Order half(dissipative_order);
    const Anchor anchor = Anchor::left_from(0.0);
    DissipativeResult result{GridFunction(ts, ref, half, anchor),
                             GridFunction(ts, ref, half, anchor),
                             {},
                             {}};
    result.report.widths = schedule.widths;

    std::vector<std::vector<double>> samples;
    double ref_scale = 0.0;
    for (double v : ref) ref_scale = std::max(ref_scale, std::abs(v));
    const double noise_floor = 1e-7 * (1.0 + ref_scale);

    for (double width : schedule.widths) {
        std::vector<double> xw;
        detail::integrate_windowed(sys, width, ts, xw, ode);
        double dist = 0.0;
        for (std::size_t i = 0; i < n_out; ++i) dist = std::max(dist, std::abs(xw[i] - ref[i]));
        result.report.sup_distances.push_back(dist);
        result.per_width.emplace_back(ts, xw, half, anchor);
        samples.push_back(std::move(xw));
    }

    const auto& d = result.report.sup_distances;
    for (std::size_t i = 1; i < d.size(); ++i)
        if (d[i] >= d[i - 1] && d[i] > noise_floor)
            throw NoConvergence("simulate_with_limit: sup distance failed to decrease with the width");

    std::vector<double> limit(n_out);
    if (schedule.extrapolate && schedule.widths.size() >= 2) {
        std::vector<double> vals(schedule.widths.size());
        for (std::size_t i = 0; i < n_out; ++i) {
            for (std::size_t k = 0; k < schedule.widths.size(); ++k) vals[k] = samples[k][i];
            limit[i] = neville_at_zero(schedule.widths, vals);
        }
    } else {
        limit = samples.back();
    }
    double edist = 0.0;
    for (std::size_t i = 0; i < n_out; ++i) edist = std::max(edist, std::abs(limit[i] - ref[i]));
    result.report.extrapolated_sup_distance = edist;
    result.limit_trajectory = GridFunction(ts, std::move(limit), half, anchor);
    return result;
}

// Canonical energy of the dissipative action at a state sample:
//   H = m/2 x'^2 + U(x) + gamma/2 v^2, with v the order-1/2 derivative.
inline double canonical_energy(const DissipativeSystem& sys, double /*a*/, double /*t*/, double x,
                               double xprime, double v_half) {
    return 0.5 * sys.m * xprime * xprime + sys.U(x) + 0.5 * sys.gamma * v_half * v_half;
}

struct CanonicalMomenta {
    double p1;      // conjugate to the classical slope: m x'
    double p_half;  // conjugate to the order-1/2 slope: gamma v
};

inline CanonicalMomenta canonical_momenta(const DissipativeSystem& sys, double xprime, double v_half) {
    return CanonicalMomenta{sys.m * xprime, sys.gamma * v_half};
}

}  // namespace confrac
