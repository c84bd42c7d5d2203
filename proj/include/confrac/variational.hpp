#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "confrac/calculus.hpp"
#include "confrac/errors.hpp"
#include "confrac/grid.hpp"
#include "confrac/numerics.hpp"
#include "confrac/ode.hpp"
#include "confrac/quadrature.hpp"

namespace confrac {

namespace detail {

// One-time lazy check of a supplied partial against a difference quotient in
// the given slot, at the first point where the partial is used.
template <class Slice>
void check_partial_once(const std::shared_ptr<std::atomic<bool>>& flag, Slice&& slice, double at,
                        double claimed, const char* what) {
    if (flag && !flag->exchange(true)) {
        if (!derivative_claim_ok(slice, at, claimed))
            throw HypothesisViolated(std::string(what) + ": supplied partial disagrees with difference quotient");
    }
}

}  // namespace detail

// Integrand L(x, y, v) of a fractional variational problem, where v stands for
// the alpha-derivative of y.  Partials are optional; missing ones fall back to
// central differences, supplied ones are spot-checked once on first use.
class Lagrangian {
  public:
    using Fn3 = std::function<double(double, double, double)>;

    Lagrangian() = default;
    explicit Lagrangian(Fn3 value, Fn3 dx = nullptr, Fn3 dy = nullptr, Fn3 dv = nullptr)
        : value_(std::move(value)), dx_(std::move(dx)), dy_(std::move(dy)), dv_(std::move(dv)) {
        for (auto& f : checked_) f = std::make_shared<std::atomic<bool>>(false);
    }

    double operator()(double x, double y, double v) const { return value_(x, y, v); }

    double dx(double x, double y, double v) const {
        if (!dx_) return central_diff([&](double t) { return value_(t, y, v); }, x);
        const double d = dx_(x, y, v);
        detail::check_partial_once(checked_[0], [&](double t) { return value_(t, y, v); }, x, d, "Lagrangian.dx");
        return d;
    }
    double dy(double x, double y, double v) const {
        if (!dy_) return central_diff([&](double t) { return value_(x, t, v); }, y);
        const double d = dy_(x, y, v);
        detail::check_partial_once(checked_[1], [&](double t) { return value_(x, t, v); }, y, d, "Lagrangian.dy");
        return d;
    }
    double dv(double x, double y, double v) const {
        if (!dv_) return central_diff([&](double t) { return value_(x, y, t); }, v);
        const double d = dv_(x, y, v);
        detail::check_partial_once(checked_[2], [&](double t) { return value_(x, y, t); }, v, d, "Lagrangian.dv");
        return d;
    }

  private:
    Fn3 value_, dx_, dy_, dv_;
    std::shared_ptr<std::atomic<bool>> checked_[3];
};

// Integrand L(x, y, y', v) depending on both the classical slope y' and the
// alpha-derivative v, as in the dissipative action principle.
class MixedLagrangian {
  public:
    using Fn4 = std::function<double(double, double, double, double)>;

    MixedLagrangian() = default;
    explicit MixedLagrangian(Fn4 value, Fn4 dx = nullptr, Fn4 dy = nullptr, Fn4 dyp = nullptr,
                             Fn4 dv = nullptr)
        : value_(std::move(value)),
          dx_(std::move(dx)),
          dy_(std::move(dy)),
          dyp_(std::move(dyp)),
          dv_(std::move(dv)) {
        for (auto& f : checked_) f = std::make_shared<std::atomic<bool>>(false);
    }

    double operator()(double x, double y, double yp, double v) const { return value_(x, y, yp, v); }

    double dx(double x, double y, double yp, double v) const {
        if (!dx_) return central_diff([&](double t) { return value_(t, y, yp, v); }, x);
        const double d = dx_(x, y, yp, v);
        detail::check_partial_once(checked_[0], [&](double t) { return value_(t, y, yp, v); }, x, d,
                                   "MixedLagrangian.dx");
        return d;
    }
    double dy(double x, double y, double yp, double v) const {
        if (!dy_) return central_diff([&](double t) { return value_(x, t, yp, v); }, y);
        const double d = dy_(x, y, yp, v);
        detail::check_partial_once(checked_[1], [&](double t) { return value_(x, t, yp, v); }, y, d,
                                   "MixedLagrangian.dy");
        return d;
    }
    double dyp(double x, double y, double yp, double v) const {
        if (!dyp_) return central_diff([&](double t) { return value_(x, y, t, v); }, yp);
        const double d = dyp_(x, y, yp, v);
        detail::check_partial_once(checked_[2], [&](double t) { return value_(x, y, t, v); }, yp, d,
                                   "MixedLagrangian.dyp");
        return d;
    }
    double dv(double x, double y, double yp, double v) const {
        if (!dv_) return central_diff([&](double t) { return value_(x, y, yp, t); }, v);
        const double d = dv_(x, y, yp, v);
        detail::check_partial_once(checked_[3], [&](double t) { return value_(x, y, yp, t); }, v, d,
                                   "MixedLagrangian.dv");
        return d;
    }

  private:
    Fn4 value_, dx_, dy_, dyp_, dv_;
    std::shared_ptr<std::atomic<bool>> checked_[4];
};

// Fixed-endpoint problem: extremize the integral of L(x, y, v) against the
// alpha-measure on [a, b] with y(a) = ya, y(b) = yb.
struct VariationalProblem {
    Lagrangian L;
    double a;
    double b;
    Order order;
    double ya;
    double yb;

    VariationalProblem(Lagrangian L_, double a_, double b_, Order order_, double ya_, double yb_)
        : L(std::move(L_)), a(a_), b(b_), order(order_), ya(ya_), yb(yb_) {
        if (!(a < b)) throw DomainError("VariationalProblem: need a < b");
        if (!std::isfinite(ya) || !std::isfinite(yb))
            throw DomainError("VariationalProblem: boundary values must be finite");
    }
};

struct MixedVariationalProblem {
    MixedLagrangian L;
    double a;
    double b;
    Order order;
    double ya;
    double yb;

    MixedVariationalProblem(MixedLagrangian L_, double a_, double b_, Order order_, double ya_, double yb_)
        : L(std::move(L_)), a(a_), b(b_), order(order_), ya(ya_), yb(yb_) {
        if (!(a < b)) throw DomainError("MixedVariationalProblem: need a < b");
    }
};

struct SolverSettings {
    double boundary_tol = 1e-8;    // |y(b) - yb| target for the shooting solve
    double residual_tol = 1e-5;    // certificate bound on the equation residual
    int max_shoot_iters = 60;
    std::size_t grid_size = 129;
    std::size_t max_grid_size = 2049;
    double delta_factor = 1e-6;    // shooting starts at a + delta_factor*(b-a)
    OdeSettings ode{};
    QuadratureSettings quad{};
};

struct SolverReport {
    int iterations = 0;
    double shooting_parameter = 0.0;  // initial alpha-slope at the anchor
    double boundary_error = 0.0;
    std::size_t grid_size = 0;
};

// A candidate extremal with its pointwise equation-residual certificate.
struct Extremal {
    GridFunction y;
    double el_residual_max;
    double certificate_tol;
    SolverReport report;

    bool certified() const { return std::isfinite(el_residual_max) && el_residual_max <= certificate_tol; }
};

struct Momentum {
    GridFunction p;
};

namespace detail {

inline void check_grid_matches_problem(const GridFunction& y, double a, double b, Order order) {
    const double pad = 1e-9 * (1.0 + std::abs(a) + std::abs(b));
    if (std::abs(y.xs.front() - a) > pad || std::abs(y.xs.back() - b) > pad)
        throw BoundaryMismatch("grid does not span the problem interval");
    if (y.order.alpha() != order.alpha())
        throw DomainError("grid order differs from problem order");
    if (!(y.anchor.side == AnchorSide::left_from && y.anchor.point == a))
        throw DomainError("grid anchor differs from problem anchor");
}

}  // namespace detail

// Value of the action functional along a trajectory grid: the integral of
// L(x, y, v) against the alpha-measure, evaluated with the desingularizing
// substitution t = (x-a)^alpha.
inline double action_value(const VariationalProblem& p, const GridFunction& y,
                           const QuadratureSettings& settings = {}) {
    detail::check_grid_matches_problem(y, p.a, p.b, p.order);
    const double btol = 1e-6;
    if (std::abs(y.ys.front() - p.ya) > btol * (1.0 + std::abs(p.ya)) ||
        std::abs(y.ys.back() - p.yb) > btol * (1.0 + std::abs(p.yb)))
        throw BoundaryMismatch("trajectory does not meet the boundary values");
    const double al = p.order.alpha();
    const double inv_al = 1.0 / al;
    return integrate_adaptive(
        [&](double t) {
            const double x = p.a + std::pow(t, inv_al);
            return p.L(x, grid_interp(y, x), grid_interp_alpha_deriv(y, x)) * inv_al;
        },
        0.0, std::pow(p.b - p.a, al), settings);
}

// Pointwise residual of the fractional Euler-Lagrange equation
// dL/dy - d^alpha/dx^alpha (dL/dv) = 0 along the grid.
inline GridFunction el_residual(const VariationalProblem& p, const GridFunction& y) {
    detail::check_grid_matches_problem(y, p.a, p.b, p.order);
    const GridFunction v = grid_alpha_deriv(y);
    std::vector<double> lv(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) lv[i] = p.L.dv(y.xs[i], y.ys[i], v.ys[i]);
    const GridFunction dlv = grid_alpha_deriv(with_values(y, std::move(lv)));
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        r[i] = p.L.dy(y.xs[i], y.ys[i], v.ys[i]) - dlv.ys[i];
    return with_values(y, std::move(r));
}

// Pointwise residual of the generalized Euler-Lagrange equation for mixed
// integrands L(x, y, y', v):
//   dL/dy - d/dx(dL/dy') - (x-a)^(alpha-1) d^alpha/dx^alpha[(x-a)^(1-alpha) dL/dv] = 0.
// Evaluated on interior nodes; the (x-a)^(alpha-1) factor is singular at the
// anchor itself.
inline GridFunction generalized_el_residual(const MixedVariationalProblem& p, const GridFunction& y) {
    detail::check_grid_matches_problem(y, p.a, p.b, p.order);
    const double al = p.order.alpha();
    const GridFunction yp = grid_deriv(y);
    const GridFunction v = grid_alpha_deriv(y);
    std::vector<double> bvals(y.size()), avals(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = y.xs[i];
        bvals[i] = p.L.dyp(x, y.ys[i], yp.ys[i], v.ys[i]);
        avals[i] = std::pow(x - p.a, 1.0 - al) * p.L.dv(x, y.ys[i], yp.ys[i], v.ys[i]);
    }
    const GridFunction db = grid_deriv(with_values(y, std::move(bvals)));
    const GridFunction da = grid_alpha_deriv(with_values(y, std::move(avals)));
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = y.xs[i];
        r[i] = p.L.dy(x, y.ys[i], yp.ys[i], v.ys[i]) - db.ys[i] -
               std::pow(x - p.a, al - 1.0) * da.ys[i];
    }
    return interior(with_values(y, std::move(r)));
}

namespace detail {

// Recovers the slope v from the momentum relation dL/dv = P by a safeguarded
// scalar solve; detects integrands whose momentum map is degenerate in v.
class SlopeFromMomentum {
  public:
    SlopeFromMomentum(const Lagrangian& L, double tol) : L_(&L), tol_(tol) {}

    double operator()(double x, double y, double P, double guess) const {
        auto f = [&](double w) { return L_->dv(x, y, w) - P; };
        const double slope = central_diff([&](double w) { return L_->dv(x, y, w); }, guess);
        if (!std::isfinite(slope) || std::abs(slope) < 1e-12 * (1.0 + std::abs(P)))
            throw SingularLagrangian("solve_extremal: dL/dv is degenerate in v, cannot invert momentum");
        return solve_scalar(f, guess, tol_, 80, [] {
            throw NoConvergence("solve_extremal: momentum inversion did not converge");
        });
    }

  private:
    const Lagrangian* L_;
    double tol_;
};

}  // namespace detail

// Solves the fixed-endpoint problem by shooting on the initial alpha-slope.
// The Euler-Lagrange system is integrated in the transformed variable
// s = (x-a)^alpha, in which it is regular, using the momentum form
// (y, P = dL/dv); the start sits at a + delta with the trajectory seeded by
// its leading-order profile y = ya + w s / alpha.  The returned extremal
// carries the max Euler-Lagrange residual over its grid as a certificate,
// re-solved on refined grids until it meets residual_tol.
inline Extremal solve_extremal(const VariationalProblem& p, const SolverSettings& settings = {}) {
    const double al = p.order.alpha();
    const double a = p.a, b = p.b;
    const double S = std::pow(b - a, al);
    const double delta = settings.delta_factor * (b - a);
    const double s0 = std::pow(delta, al);
    const double inv_al = 1.0 / al;
    detail::SlopeFromMomentum slope_solver(p.L, 1e-12);

    int evals = 0;
    double w_cache = 0.0;
    auto rhs = [&](double sv, std::span<const double> u, std::span<double> du) {
        const double x = a + std::pow(sv, inv_al);
        const double w = slope_solver(x, u[0], u[1], w_cache);
        w_cache = w;
        du[0] = w * inv_al;
        du[1] = p.L.dy(x, u[0], w) * inv_al;
    };

    auto shoot = [&](double w0) {
        ++evals;
        w_cache = w0;
        std::vector<double> u = {p.ya + w0 * s0 * inv_al, p.L.dv(a + delta, p.ya + w0 * s0 * inv_al, w0)};
        ode_integrate(rhs, u, s0, S, settings.ode);
        return u[0] - p.yb;
    };

    const double w_guess = (p.yb - p.ya) * al / S;
    const double w_star = solve_scalar(shoot, w_guess, settings.boundary_tol, settings.max_shoot_iters, [] {
        throw NoConvergence("solve_extremal: shooting iteration did not meet the boundary tolerance");
    });
    const double miss = std::abs(shoot(w_star));

    Extremal best{GridFunction({0.0, 1.0}, {0.0, 0.0}, p.order, Anchor::left_from(0.0)), 0.0, 0.0, {}};
    for (std::size_t n = settings.grid_size;; n = 2 * n - 1) {
        const auto xs = chebyshev_grid(a, b, n);
        std::vector<double> ys(n);
        ys[0] = p.ya;
        w_cache = w_star;
        std::vector<double> u = {p.ya + w_star * s0 * inv_al,
                                 p.L.dv(a + delta, p.ya + w_star * s0 * inv_al, w_star)};
        double s_prev = s0;
        for (std::size_t i = 1; i < n; ++i) {
            const double si = std::pow(xs[i] - a, al);
            if (si <= s0) {
                ys[i] = p.ya + w_star * si * inv_al;  // inside the seeded layer
                continue;
            }
            ode_integrate(rhs, u, s_prev, si, settings.ode);
            s_prev = si;
            ys[i] = u[0];
        }
        GridFunction traj(xs, std::move(ys), p.order, Anchor::left_from(a));
        const double rmax = max_abs(el_residual(p, traj));
        best = Extremal{std::move(traj), rmax, settings.residual_tol,
                        SolverReport{evals, w_star, miss, n}};
        if (rmax <= settings.residual_tol) return best;
        if (2 * n - 1 > settings.max_grid_size) break;
    }
    throw ToleranceNotMet("solve_extremal: equation residual " + std::to_string(best.el_residual_max) +
                          " above certificate tolerance after grid refinement");
}

// Pointwise residual of the DuBois-Reymond condition
//   d^alpha/dx^alpha [ L - v dL/dv ] = (x-a)^(1-alpha) dL/dx.
inline GridFunction dubois_reymond_residual(const VariationalProblem& p, const GridFunction& y) {
    detail::check_grid_matches_problem(y, p.a, p.b, p.order);
    const double al = p.order.alpha();
    const GridFunction v = grid_alpha_deriv(y);
    std::vector<double> evals(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = y.xs[i];
        evals[i] = p.L(x, y.ys[i], v.ys[i]) - p.L.dv(x, y.ys[i], v.ys[i]) * v.ys[i];
    }
    const GridFunction de = grid_alpha_deriv(with_values(y, std::move(evals)));
    std::vector<double> r(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = y.xs[i];
        r[i] = de.ys[i] - p.L.dx(x, y.ys[i], v.ys[i]) * std::pow(x - p.a, 1.0 - al);
    }
    return with_values(y, std::move(r));
}

// Momentum p = dL/dv along a trajectory grid.
inline Momentum momentum_of(const VariationalProblem& p, const GridFunction& y) {
    detail::check_grid_matches_problem(y, p.a, p.b, p.order);
    const GridFunction v = grid_alpha_deriv(y);
    std::vector<double> vals(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) vals[i] = p.L.dv(y.xs[i], y.ys[i], v.ys[i]);
    return Momentum{with_values(y, std::move(vals))};
}

// Hamiltonian H(x, y, v, psi) with optional partials (central-difference
// fallback).  The canonical construction from a Lagrangian is H = -L + psi v.
class HamiltonianField {
  public:
    using Fn4 = std::function<double(double, double, double, double)>;

    HamiltonianField() = default;
    explicit HamiltonianField(Fn4 value, Fn4 dx = nullptr, Fn4 dy = nullptr, Fn4 dv = nullptr,
                              Fn4 dpsi = nullptr)
        : value_(std::move(value)),
          dx_(std::move(dx)),
          dy_(std::move(dy)),
          dv_(std::move(dv)),
          dpsi_(std::move(dpsi)) {}

    static HamiltonianField from_lagrangian(const Lagrangian& L) {
        return HamiltonianField(
            [L](double x, double y, double v, double psi) { return -L(x, y, v) + psi * v; },
            [L](double x, double y, double v, double) { return -L.dx(x, y, v); },
            [L](double x, double y, double v, double) { return -L.dy(x, y, v); },
            [L](double x, double y, double v, double psi) { return -L.dv(x, y, v) + psi; },
            [](double, double, double v, double) { return v; });
    }

    double operator()(double x, double y, double v, double psi) const { return value_(x, y, v, psi); }
    double dx(double x, double y, double v, double psi) const {
        return dx_ ? dx_(x, y, v, psi) : central_diff([&](double t) { return value_(t, y, v, psi); }, x);
    }
    double dy(double x, double y, double v, double psi) const {
        return dy_ ? dy_(x, y, v, psi) : central_diff([&](double t) { return value_(x, t, v, psi); }, y);
    }
    double dv(double x, double y, double v, double psi) const {
        return dv_ ? dv_(x, y, v, psi) : central_diff([&](double t) { return value_(x, y, t, psi); }, v);
    }
    double dpsi(double x, double y, double v, double psi) const {
        return dpsi_ ? dpsi_(x, y, v, psi)
                     : central_diff([&](double t) { return value_(x, y, v, t); }, psi);
    }

  private:
    Fn4 value_, dx_, dy_, dv_, dpsi_;
};

struct HamiltonianResiduals {
    GridFunction state;    // y^(alpha) - dH/dpsi
    GridFunction costate;  // p^(alpha) + dH/dy
    GridFunction energy;   // d^alpha H - (x-a)^(1-alpha) dH/dx
};

// Residuals of the canonical system along (y, p), plus the Hamiltonian drift
// identity.  The momentum grid must satisfy p = dL/dv of the underlying
// problem; a violation is reported as InconsistentMomentum.
inline HamiltonianResiduals hamiltonian_system_residual(const VariationalProblem& prob,
                                                        const GridFunction& y, const Momentum& mom,
                                                        const HamiltonianField& H) {
    detail::check_grid_matches_problem(y, prob.a, prob.b, prob.order);
    if (mom.p.xs != y.xs) throw DimensionMismatch("hamiltonian_system_residual: grids differ");
    const double al = prob.order.alpha();
    const GridFunction v = grid_alpha_deriv(y);
    const GridFunction dp = grid_alpha_deriv(mom.p);
    const std::size_t n = y.size();
    std::vector<double> r1(n), r2(n), hvals(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = y.xs[i], yi = y.ys[i], vi = v.ys[i], pi = mom.p.ys[i];
        const double lv = prob.L.dv(x, yi, vi);
        if (std::abs(pi - lv) > 1e-4 * (1.0 + std::abs(pi)))
            throw InconsistentMomentum("hamiltonian_system_residual: momentum grid violates p = dL/dv");
        r1[i] = vi - H.dpsi(x, yi, vi, pi);
        r2[i] = dp.ys[i] + H.dy(x, yi, vi, pi);
        hvals[i] = H(x, yi, vi, pi);
    }
    const GridFunction dh = grid_alpha_deriv(with_values(y, std::move(hvals)));
    std::vector<double> r3(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = y.xs[i];
        r3[i] = dh.ys[i] -
                H.dx(x, y.ys[i], v.ys[i], mom.p.ys[i]) * std::pow(x - prob.a, 1.0 - al);
    }
    return HamiltonianResiduals{with_values(y, std::move(r1)), with_values(y, std::move(r2)),
                                with_values(y, std::move(r3))};
}

}  // namespace confrac
