#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "confrac/errors.hpp"
#include "confrac/grid.hpp"
#include "confrac/numerics.hpp"
#include "confrac/ode.hpp"
#include "confrac/quadrature.hpp"
#include "confrac/variational.hpp"

namespace confrac {

struct TerminalCondition {
    enum class Kind { fixed_state, free_state };
    Kind kind;
    double yb;  // meaningful for fixed_state only

    static TerminalCondition fixed(double yb) { return {Kind::fixed_state, yb}; }
    static TerminalCondition unconstrained() { return {Kind::free_state, 0.0}; }
};

// Fractional optimal control problem: minimize the alpha-measure integral of
// L(x, y, v) subject to y^(alpha) = phi(x, y, v), y(a) = ya, and either a
// fixed terminal state or a free one (transversality p(b) = 0).
struct ControlProblem {
    Lagrangian L;    // running cost, slots (x, y, v)
    Lagrangian phi;  // controlled dynamics, same slots
    double a;
    double b;
    Order order;
    double ya;
    TerminalCondition terminal;

    ControlProblem(Lagrangian L_, Lagrangian phi_, double a_, double b_, Order order_, double ya_,
                   TerminalCondition terminal_)
        : L(std::move(L_)),
          phi(std::move(phi_)),
          a(a_),
          b(b_),
          order(order_),
          ya(ya_),
          terminal(terminal_) {
        if (!(a < b)) throw DomainError("ControlProblem: need a < b");
        if (!std::isfinite(ya)) throw DomainError("ControlProblem: initial state must be finite");
    }
};

// Control Hamiltonian H = -L + p phi on slots (x, y, v, p).
inline HamiltonianField oc_hamiltonian(const ControlProblem& cp) {
    const Lagrangian L = cp.L, phi = cp.phi;
    return HamiltonianField(
        [L, phi](double x, double y, double v, double p) { return -L(x, y, v) + p * phi(x, y, v); },
        [L, phi](double x, double y, double v, double p) { return -L.dx(x, y, v) + p * phi.dx(x, y, v); },
        [L, phi](double x, double y, double v, double p) { return -L.dy(x, y, v) + p * phi.dy(x, y, v); },
        [L, phi](double x, double y, double v, double p) { return -L.dv(x, y, v) + p * phi.dv(x, y, v); },
        [phi](double x, double y, double v, double) { return phi(x, y, v); });
}

// Candidate Pontryagin triple (state, control, costate) on a shared grid, with
// max residual certificates for the three optimality relations.
struct PontryaginTriple {
    GridFunction y;
    GridFunction v;
    GridFunction p;
    double state_residual_max;
    double costate_residual_max;
    double stationarity_residual_max;
    double certificate_tol;
    SolverReport report;

    bool certified() const {
        return std::isfinite(state_residual_max) && state_residual_max <= certificate_tol &&
               costate_residual_max <= certificate_tol && stationarity_residual_max <= certificate_tol;
    }
};

struct OptimalityResiduals {
    GridFunction state;         // y^(alpha) - phi(x, y, v)
    GridFunction costate;       // p^(alpha) - (L_y - p phi_y)
    GridFunction stationarity;  // L_v - p phi_v
};

// Pointwise residuals of the optimality system along a candidate triple.
inline OptimalityResiduals optimality_residuals(const ControlProblem& cp, const GridFunction& y,
                                                const GridFunction& v, const GridFunction& p) {
    if (y.xs != v.xs || y.xs != p.xs)
        throw DimensionMismatch("optimality_residuals: triple must share one grid");
    detail::check_grid_matches_problem(y, cp.a, cp.b, cp.order);
    const GridFunction dy = grid_alpha_deriv(y);
    const GridFunction dp = grid_alpha_deriv(p);
    const std::size_t n = y.size();
    std::vector<double> r1(n), r2(n), r3(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = y.xs[i], yi = y.ys[i], vi = v.ys[i], pi = p.ys[i];
        r1[i] = dy.ys[i] - cp.phi(x, yi, vi);
        r2[i] = dp.ys[i] - (cp.L.dy(x, yi, vi) - pi * cp.phi.dy(x, yi, vi));
        r3[i] = cp.L.dv(x, yi, vi) - pi * cp.phi.dv(x, yi, vi);
    }
    return OptimalityResiduals{with_values(y, std::move(r1)), with_values(y, std::move(r2)),
                               with_values(y, std::move(r3))};
}

namespace detail {

// Control recovered from the stationarity condition H_v(x, y, v, p) = 0.
class ControlFromStationarity {
  public:
    ControlFromStationarity(const HamiltonianField& H, double tol) : H_(&H), tol_(tol) {}

    double operator()(double x, double y, double p, double guess) const {
        auto f = [&](double v) { return H_->dv(x, y, v, p); };
        const double slope = central_diff(f, guess);
        if (!std::isfinite(slope) || std::abs(slope) < 1e-10)
            throw StationarityUnsolvable(
                "solve_pontryagin: H_v is degenerate in the control at the current point");
        return solve_scalar(f, guess, tol_, 80, [] {
            throw StationarityUnsolvable("solve_pontryagin: stationarity root-find did not converge");
        });
    }

  private:
    const HamiltonianField* H_;
    double tol_;
};

}  // namespace detail

// Solves the optimality system by shooting on the initial costate.  The
// canonical equations are integrated in the transformed variable
// s = (x-a)^alpha (in which they are regular), with the control eliminated
// pointwise through the stationarity condition.  Fixed terminal states shoot
// for y(b) = yb, free ones for the transversality condition p(b) = 0.
inline PontryaginTriple solve_pontryagin(const ControlProblem& cp, const SolverSettings& settings = {}) {
    const double al = cp.order.alpha();
    const double a = cp.a, b = cp.b;
    const double S = std::pow(b - a, al);
    const double delta = settings.delta_factor * (b - a);
    const double s0 = std::pow(delta, al);
    const double inv_al = 1.0 / al;
    const HamiltonianField H = oc_hamiltonian(cp);
    detail::ControlFromStationarity control(H, 1e-12);

    double v_cache = 0.0;
    auto rhs = [&](double sv, std::span<const double> u, std::span<double> du) {
        const double x = a + std::pow(sv, inv_al);
        const double v = control(x, u[0], u[1], v_cache);
        v_cache = v;
        du[0] = cp.phi(x, u[0], v) * inv_al;
        du[1] = (cp.L.dy(x, u[0], v) - u[1] * cp.phi.dy(x, u[0], v)) * inv_al;
    };

    const bool fixed = cp.terminal.kind == TerminalCondition::Kind::fixed_state;
    const double v_seed = fixed ? (cp.terminal.yb - cp.ya) * al / S : 0.0;
    const double xa = a + delta;
    // Both canonical variables move linearly in s across the anchor window, at
    // the rates of the transformed equations; starting from (ya, p0) instead
    // would put an O(s0) kink at the anchor that survives grid refinement.
    auto anchor_rates = [&](double p0, double v0) {
        const double sy = cp.phi(xa, cp.ya, v0) * inv_al;
        const double sp = (cp.L.dy(xa, cp.ya, v0) - p0 * cp.phi.dy(xa, cp.ya, v0)) * inv_al;
        return std::pair<double, double>{sy, sp};
    };
    int evals = 0;
    auto shoot = [&](double p0) {
        ++evals;
        const double v0 = control(xa, cp.ya, p0, v_seed);
        v_cache = v0;
        const auto [sy, sp] = anchor_rates(p0, v0);
        std::vector<double> u = {cp.ya + sy * s0, p0 + sp * s0};
        ode_integrate(rhs, u, s0, S, settings.ode);
        return fixed ? u[0] - cp.terminal.yb : u[1];
    };

    double p_guess = 0.0;
    if (fixed) {
        const double denom = cp.phi.dv(a + delta, cp.ya, v_seed);
        if (std::abs(denom) > 1e-8) p_guess = cp.L.dv(a + delta, cp.ya, v_seed) / denom;
    }
    const double p_star = solve_scalar(shoot, p_guess, settings.boundary_tol, settings.max_shoot_iters, [] {
        throw NoConvergence("solve_pontryagin: shooting iteration did not meet the boundary tolerance");
    });
    const double miss = std::abs(shoot(p_star));

    for (std::size_t n = settings.grid_size;; n = 2 * n - 1) {
        const auto xs = chebyshev_grid(a, b, n);
        std::vector<double> ys(n), vs(n), ps(n);
        const double v0 = control(xa, cp.ya, p_star, v_seed);
        const auto [sy, sp] = anchor_rates(p_star, v0);
        v_cache = v0;
        std::vector<double> u = {cp.ya + sy * s0, p_star + sp * s0};
        double s_prev = s0;
        ys[0] = cp.ya;
        ps[0] = p_star;
        vs[0] = v0;
        for (std::size_t i = 1; i < n; ++i) {
            const double si = std::pow(xs[i] - a, al);
            if (si > s0) {
                ode_integrate(rhs, u, s_prev, si, settings.ode);
                s_prev = si;
                ys[i] = u[0];
                ps[i] = u[1];
                vs[i] = control(xs[i], u[0], u[1], v_cache);
            } else {
                ys[i] = cp.ya + sy * si;
                ps[i] = p_star + sp * si;
                vs[i] = control(xs[i], ys[i], ps[i], v_cache);
            }
        }
        GridFunction y(xs, std::move(ys), cp.order, Anchor::left_from(a));
        GridFunction v(xs, std::move(vs), cp.order, Anchor::left_from(a));
        GridFunction p(xs, std::move(ps), cp.order, Anchor::left_from(a));
        const OptimalityResiduals res = optimality_residuals(cp, y, v, p);
        PontryaginTriple triple{std::move(y),
                                std::move(v),
                                std::move(p),
                                max_abs(res.state),
                                max_abs(res.costate),
                                max_abs(res.stationarity),
                                settings.residual_tol,
                                SolverReport{evals, p_star, miss, n}};
        if (triple.certified()) return triple;
        if (2 * n - 1 > settings.max_grid_size)
            throw ToleranceNotMet("solve_pontryagin: optimality residuals above certificate tolerance "
                                  "after grid refinement");
    }
}

// One-parameter family acting on all four slots of the augmented problem,
// with generators evaluated along (x, y, v, p) and a gauge Lambda(x, y).
class OCTransformationFamily {
  public:
    using Fn4 = std::function<double(double, double, double, double)>;
    using Fn2 = std::function<double(double, double)>;

    OCTransformationFamily() = default;
    OCTransformationFamily(Fn4 tau, Fn4 xi, Fn4 sigma, Fn4 pi, Fn2 gauge = nullptr)
        : tau_(std::move(tau)),
          xi_(std::move(xi)),
          sigma_(std::move(sigma)),
          pi_(std::move(pi)),
          gauge_(std::move(gauge)) {}

    double tau(double x, double y, double v, double p) const { return tau_ ? tau_(x, y, v, p) : 0.0; }
    double xi(double x, double y, double v, double p) const { return xi_ ? xi_(x, y, v, p) : 0.0; }
    double sigma(double x, double y, double v, double p) const {
        return sigma_ ? sigma_(x, y, v, p) : 0.0;
    }
    double pi(double x, double y, double v, double p) const { return pi_ ? pi_(x, y, v, p) : 0.0; }
    bool has_gauge() const { return static_cast<bool>(gauge_); }
    double gauge(double x, double y) const { return gauge_ ? gauge_(x, y) : 0.0; }

    // Partial of a generator in one slot (0: x, 1: y, 2: v, 3: p), by central
    // differences; the x slot honors a lower domain edge so generators defined
    // only right of the anchor never get probed left of it.
    double partial(const Fn4& g, int slot, double x, double y, double v, double p,
                   double xmin = -std::numeric_limits<double>::infinity()) const {
        if (!g) return 0.0;
        double args[4] = {x, y, v, p};
        auto slice = [&](double t) {
            double moved[4] = {args[0], args[1], args[2], args[3]};
            moved[slot] = t;
            return g(moved[0], moved[1], moved[2], moved[3]);
        };
        if (slot == 0) return central_diff_bounded(slice, x, xmin);
        return central_diff(slice, args[slot]);
    }

    const Fn4& tau_fn() const { return tau_; }
    const Fn4& xi_fn() const { return xi_; }
    const Fn4& sigma_fn() const { return sigma_; }
    const Fn4& pi_fn() const { return pi_; }

    double gauge_dx(double x, double y,
                    double xmin = -std::numeric_limits<double>::infinity()) const {
        return gauge_ ? central_diff_bounded([&](double t) { return gauge_(t, y); }, x, xmin) : 0.0;
    }
    double gauge_dy(double x, double y) const {
        return gauge_ ? central_diff([&](double t) { return gauge_(x, t); }, y) : 0.0;
    }

  private:
    Fn4 tau_, xi_, sigma_, pi_;
    Fn2 gauge_;
};

namespace detail {

struct OCSample {
    double x, y, v, p;
    double dy, dv, dp;  // alpha-rates of the three grids at x
};

inline OCSample oc_sample(const PontryaginTriple& tr, double x) {
    return OCSample{x,
                    grid_interp(tr.y, x),
                    grid_interp(tr.v, x),
                    grid_interp(tr.p, x),
                    grid_interp_alpha_deriv(tr.y, x),
                    grid_interp_alpha_deriv(tr.v, x),
                    grid_interp_alpha_deriv(tr.p, x)};
}

// Alpha-rate of a generator g(x, y(x), v(x), p(x)) along the triple.
inline double oc_alpha_rate(const OCTransformationFamily& T, const OCTransformationFamily::Fn4& g,
                            const OCSample& s, double a, double al) {
    if (!g) return 0.0;
    return T.partial(g, 0, s.x, s.y, s.v, s.p, a) * std::pow(s.x - a, 1.0 - al) +
           T.partial(g, 1, s.x, s.y, s.v, s.p) * s.dy + T.partial(g, 2, s.x, s.y, s.v, s.p) * s.dv +
           T.partial(g, 3, s.x, s.y, s.v, s.p) * s.dp;
}

}  // namespace detail

// Finite-parameter invariance defect of the augmented functional
// integral of (-H + p y^(alpha)) d^alpha x under the four-slot family.
inline double oc_invariance_defect(const ControlProblem& cp, const OCTransformationFamily& T,
                                   const PontryaginTriple& tr, double eps,
                                   const QuadratureSettings& settings = {}) {
    detail::check_grid_matches_problem(tr.y, cp.a, cp.b, cp.order);
    const double al = cp.order.alpha();
    const double a = cp.a;
    const HamiltonianField H = oc_hamiltonian(cp);
    auto defect = [&](double x) {
        const auto s = detail::oc_sample(tr, x);
        const double tau = T.tau(s.x, s.y, s.v, s.p);
        const double tau_rate = detail::oc_alpha_rate(T, T.tau_fn(), s, a, al);
        const double xi_rate = detail::oc_alpha_rate(T, T.xi_fn(), s, a, al);
        const double gauge_rate =
            T.has_gauge() ? T.gauge_dx(s.x, s.y, a) * std::pow(s.x - a, 1.0 - al) + T.gauge_dy(s.x, s.y) * s.dy
                          : 0.0;
        const double xbar = x + eps * tau;
        if (xbar < a)
            throw DomainError("oc_invariance_defect: transformation maps a point left of the anchor");
        const double ybar = s.y + eps * T.xi(s.x, s.y, s.v, s.p);
        const double vbar = s.v + eps * T.sigma(s.x, s.y, s.v, s.p);
        const double pbar = s.p + eps * T.pi(s.x, s.y, s.v, s.p);
        const double w = std::pow(x - a, 1.0 - al);
        const double slope_bar =
            (s.dy + eps * xi_rate) / (std::pow(xbar - a, al - 1.0) * (w + eps * tau_rate));
        const double jac = 1.0 + eps * tau_rate / w;
        const double base = -H(x, s.y, s.v, s.p) + s.p * s.dy;
        return (-H(xbar, ybar, vbar, pbar) + pbar * slope_bar) * jac - base - eps * gauge_rate;
    };
    const double inv_al = 1.0 / al;
    return integrate_adaptive(
        [&](double t) { return std::abs(defect(a + std::pow(t, inv_al))) * inv_al; }, 0.0,
        std::pow(cp.b - cp.a, al), settings);
}

// Pointwise residual of the optimal control Noether identity along a
// certified Pontryagin triple:
//   d^alpha (p xi) - tau (H_x + (alpha-1) p y^(alpha)/(x-a))
//   - H tau^(alpha)/(x-a)^(1-alpha) = d^alpha Lambda,
// on interior nodes.
inline GridFunction oc_noether_residual(const ControlProblem& cp, const OCTransformationFamily& T,
                                        const PontryaginTriple& tr) {
    if (!tr.certified())
        throw NotCertified("oc_noether_residual: triple carries no valid optimality certificate");
    detail::check_grid_matches_problem(tr.y, cp.a, cp.b, cp.order);
    const double al = cp.order.alpha();
    const double a = cp.a;
    const HamiltonianField H = oc_hamiltonian(cp);
    const GridFunction dy = grid_alpha_deriv(tr.y);
    const GridFunction dv = grid_alpha_deriv(tr.v);
    const GridFunction dp = grid_alpha_deriv(tr.p);
    const std::size_t n = tr.y.size();
    std::vector<double> qvals(n);
    for (std::size_t i = 0; i < n; ++i)
        qvals[i] = tr.p.ys[i] * T.xi(tr.y.xs[i], tr.y.ys[i], tr.v.ys[i], tr.p.ys[i]);
    const GridFunction dq = interior(grid_alpha_deriv(with_values(tr.y, std::move(qvals))));

    const GridFunction yin = interior(tr.y);
    std::vector<double> r(yin.size());
    const std::size_t off = n - yin.size();  // nodes dropped at the anchor
    for (std::size_t i = 0; i < yin.size(); ++i) {
        const std::size_t j = i + off;
        detail::OCSample s{tr.y.xs[j],  tr.y.ys[j],  tr.v.ys[j], tr.p.ys[j],
                           dy.ys[j],    dv.ys[j],    dp.ys[j]};
        const double tau = T.tau(s.x, s.y, s.v, s.p);
        const double tau_rate = detail::oc_alpha_rate(T, T.tau_fn(), s, a, al);
        const double gauge_rate =
            T.has_gauge() ? T.gauge_dx(s.x, s.y, a) * std::pow(s.x - a, 1.0 - al) + T.gauge_dy(s.x, s.y) * s.dy
                          : 0.0;
        const double hx = H.dx(s.x, s.y, s.v, s.p);
        const double hval = H(s.x, s.y, s.v, s.p);
        r[i] = dq.ys[i] - tau * (hx + (al - 1.0) * s.p * s.dy / (s.x - a)) -
               hval * tau_rate / std::pow(s.x - a, 1.0 - al) - gauge_rate;
    }
    return with_values(yin, std::move(r));
}

}  // namespace confrac
