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
#include "confrac/quadrature.hpp"
#include "confrac/variational.hpp"

namespace confrac {

// One-parameter family of point transformations
//   x -> x + eps tau(x, y),  y -> y + eps xi(x, y),
// with an optional gauge term Lambda(x, y).  Partials fall back to central
// differences when not supplied.
class TransformationFamily {
  public:
    using Fn2 = std::function<double(double, double)>;

    TransformationFamily() = default;
    TransformationFamily(Fn2 tau, Fn2 xi, Fn2 gauge = nullptr)
        : tau_(std::move(tau)), xi_(std::move(xi)), gauge_(std::move(gauge)) {}

    TransformationFamily& with_tau_partials(Fn2 dx, Fn2 dy) {
        tau_dx_ = std::move(dx);
        tau_dy_ = std::move(dy);
        return *this;
    }
    TransformationFamily& with_xi_partials(Fn2 dx, Fn2 dy) {
        xi_dx_ = std::move(dx);
        xi_dy_ = std::move(dy);
        return *this;
    }
    TransformationFamily& with_gauge_partials(Fn2 dx, Fn2 dy) {
        gauge_dx_ = std::move(dx);
        gauge_dy_ = std::move(dy);
        return *this;
    }

    double tau(double x, double y) const { return tau_ ? tau_(x, y) : 0.0; }
    double xi(double x, double y) const { return xi_ ? xi_(x, y) : 0.0; }
    bool has_gauge() const { return static_cast<bool>(gauge_); }
    double gauge(double x, double y) const { return gauge_ ? gauge_(x, y) : 0.0; }

    // The x-partials accept the domain's lower edge so difference quotients of
    // generators defined only on [xmin, inf) never step outside it.
    double tau_dx(double x, double y, double xmin = -infinity()) const {
        return pdx(tau_, tau_dx_, x, y, xmin);
    }
    double tau_dy(double x, double y) const { return pdy(tau_, tau_dy_, x, y); }
    double xi_dx(double x, double y, double xmin = -infinity()) const {
        return pdx(xi_, xi_dx_, x, y, xmin);
    }
    double xi_dy(double x, double y) const { return pdy(xi_, xi_dy_, x, y); }
    double gauge_dx(double x, double y, double xmin = -infinity()) const {
        return gauge_ ? pdx(gauge_, gauge_dx_, x, y, xmin) : 0.0;
    }
    double gauge_dy(double x, double y) const { return gauge_ ? pdy(gauge_, gauge_dy_, x, y) : 0.0; }

  private:
    static double infinity() { return std::numeric_limits<double>::infinity(); }
    static double pdx(const Fn2& f, const Fn2& d, double x, double y, double xmin) {
        if (d) return d(x, y);
        if (!f) return 0.0;
        return central_diff_bounded([&](double t) { return f(t, y); }, x, xmin);
    }
    static double pdy(const Fn2& f, const Fn2& d, double x, double y) {
        if (d) return d(x, y);
        if (!f) return 0.0;
        return central_diff([&](double t) { return f(x, t); }, y);
    }

    Fn2 tau_, xi_, gauge_;
    Fn2 tau_dx_, tau_dy_, xi_dx_, xi_dy_, gauge_dx_, gauge_dy_;
};

namespace detail {

// Alpha-rate of a generator g(x, y(x)) along a trajectory sample, by the
// multivariate chain rule: g_x (x-a)^(1-alpha) + g_y y^(alpha).
inline double alpha_rate(double gdx, double gdy, double x, double v, double a, double al) {
    return gdx * std::pow(x - a, 1.0 - al) + gdy * v;
}

struct TrajectoryPoint {
    double x, y, v;
};

// Interpolated sample of a trajectory grid at x.
inline TrajectoryPoint sample(const GridFunction& y, double x) {
    return TrajectoryPoint{x, grid_interp(y, x), grid_interp_alpha_deriv(y, x)};
}

inline void require_certified(const VariationalProblem& p, const Extremal& ext) {
    if (!ext.certified())
        throw NotAnExtremal("noether: trajectory carries no valid extremal certificate");
    // Guard against a stale certificate (grid mutated after solving).
    const double fresh = max_abs(el_residual(p, ext.y));
    if (fresh > std::max(1.5 * ext.el_residual_max, ext.certificate_tol))
        throw NotAnExtremal("noether: extremal certificate is stale");
}

}  // namespace detail

// Invariance defect at finite parameter eps: the alpha-measure integral over
// [a, b] of the absolute mismatch between the transformed and original
// integrands (including the gauge rate).  Vanishes to first order in eps
// exactly when the functional is invariant up to the gauge term.
inline double invariance_defect(const VariationalProblem& p, const TransformationFamily& T,
                                const GridFunction& y, double eps,
                                const QuadratureSettings& settings = {}) {
    detail::check_grid_matches_problem(y, p.a, p.b, p.order);
    const double al = p.order.alpha();
    const double a = p.a;
    auto defect = [&](double x) {
        const auto pt = detail::sample(y, x);
        const double tau = T.tau(x, pt.y), xi = T.xi(x, pt.y);
        const double tau_rate = detail::alpha_rate(T.tau_dx(x, pt.y, a), T.tau_dy(x, pt.y), x, pt.v, a, al);
        const double xi_rate = detail::alpha_rate(T.xi_dx(x, pt.y, a), T.xi_dy(x, pt.y), x, pt.v, a, al);
        const double gauge_rate =
            T.has_gauge() ? detail::alpha_rate(T.gauge_dx(x, pt.y, a), T.gauge_dy(x, pt.y), x, pt.v, a, al)
                          : 0.0;
        const double xbar = x + eps * tau;
        if (xbar < a) throw DomainError("invariance_defect: transformation maps a point left of the anchor");
        const double w = std::pow(x - a, 1.0 - al);
        const double vbar = (pt.v + eps * xi_rate) / (std::pow(xbar - a, al - 1.0) * (w + eps * tau_rate));
        const double jac = 1.0 + eps * tau_rate / w;
        return p.L(xbar, pt.y + eps * xi, vbar) * jac - p.L(x, pt.y, pt.v) - eps * gauge_rate;
    };
    const double inv_al = 1.0 / al;
    return integrate_adaptive(
        [&](double t) { return std::abs(defect(a + std::pow(t, inv_al))) * inv_al; }, 0.0,
        std::pow(p.b - p.a, al), settings);
}

// Pointwise residual of the first-order (necessary) invariance condition
//   L_x tau + L_y xi
//   + L_v [ xi^(alpha) - v ((alpha-1) tau/(x-a) + tau^(alpha)/(x-a)^(1-alpha)) ]
//   + L tau^(alpha)/(x-a)^(1-alpha) = d^alpha Lambda,
// on interior nodes (the tau terms are singular at the anchor itself).
inline GridFunction invariance_condition_residual(const VariationalProblem& p,
                                                  const TransformationFamily& T,
                                                  const GridFunction& y) {
    detail::check_grid_matches_problem(y, p.a, p.b, p.order);
    const double al = p.order.alpha();
    const double a = p.a;
    const GridFunction yin = interior(y);
    const GridFunction vin = interior(grid_alpha_deriv(y));
    std::vector<double> r(yin.size());
    for (std::size_t i = 0; i < yin.size(); ++i) {
        const double x = yin.xs[i], yi = yin.ys[i], vi = vin.ys[i];
        const double tau = T.tau(x, yi), xi = T.xi(x, yi);
        const double tau_rate = detail::alpha_rate(T.tau_dx(x, yi, a), T.tau_dy(x, yi), x, vi, a, al);
        const double xi_rate = detail::alpha_rate(T.xi_dx(x, yi, a), T.xi_dy(x, yi), x, vi, a, al);
        const double gauge_rate =
            T.has_gauge() ? detail::alpha_rate(T.gauge_dx(x, yi, a), T.gauge_dy(x, yi), x, vi, a, al) : 0.0;
        const double w = std::pow(x - a, 1.0 - al);
        r[i] = p.L.dx(x, yi, vi) * tau + p.L.dy(x, yi, vi) * xi +
               p.L.dv(x, yi, vi) * (xi_rate - vi * ((al - 1.0) * tau / (x - a) + tau_rate / w)) +
               p.L(x, yi, vi) * tau_rate / w - gauge_rate;
    }
    return with_values(yin, std::move(r));
}

struct InvarianceReport {
    double residual_max = 0.0;                // max of the first-order condition residual
    std::vector<double> epsilon_sequence;
    std::vector<double> defects;              // invariance defect at each epsilon
    std::vector<double> first_order_slopes;   // defect / epsilon
};

// Certifies invariance numerically: the first-order condition residual along
// the trajectory plus finite-parameter defects over a shrinking epsilon
// sequence.  For an invariant functional the slopes defect/epsilon decay
// linearly in epsilon.
inline InvarianceReport invariance_report(const VariationalProblem& p, const TransformationFamily& T,
                                          const GridFunction& y,
                                          std::vector<double> epsilon_sequence = {1e-2, 1e-3, 1e-4},
                                          const QuadratureSettings& settings = {}) {
    if (epsilon_sequence.empty())
        throw DomainError("invariance_report: epsilon sequence must be nonempty");
    for (std::size_t i = 0; i < epsilon_sequence.size(); ++i) {
        if (!(epsilon_sequence[i] > 0.0))
            throw DomainError("invariance_report: epsilon values must be positive");
        if (i > 0 && !(epsilon_sequence[i] < epsilon_sequence[i - 1]))
            throw DomainError("invariance_report: epsilon sequence must be strictly decreasing");
    }
    InvarianceReport report;
    report.residual_max = max_abs(invariance_condition_residual(p, T, y));
    report.epsilon_sequence = std::move(epsilon_sequence);
    for (double eps : report.epsilon_sequence) {
        const double d = invariance_defect(p, T, y, eps, settings);
        report.defects.push_back(d);
        report.first_order_slopes.push_back(d / eps);
    }
    return report;
}

// Pointwise residual of the Noether balance identity along a certified
// extremal:
//   d^alpha [ (L - v L_v) tau + L_v xi (x-a)^(1-alpha) ]
//   = (1-alpha) L_v [ xi (x-a)^(1-2 alpha) - v tau/(x-a)^alpha ]
//     + d^alpha Lambda (x-a)^(1-alpha).
inline GridFunction noether_balance_residual(const VariationalProblem& p,
                                             const TransformationFamily& T, const Extremal& ext) {
    detail::require_certified(p, ext);
    const GridFunction& y = ext.y;
    const double al = p.order.alpha();
    const double a = p.a;
    const GridFunction v = grid_alpha_deriv(y);
    std::vector<double> bvals(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double x = y.xs[i], yi = y.ys[i], vi = v.ys[i];
        const double lv = p.L.dv(x, yi, vi);
        bvals[i] = (p.L(x, yi, vi) - lv * vi) * T.tau(x, yi) +
                   lv * T.xi(x, yi) * std::pow(x - a, 1.0 - al);
    }
    const GridFunction db = grid_alpha_deriv(with_values(y, std::move(bvals)));
    const GridFunction yin = interior(y);
    const GridFunction vin = interior(v);
    const GridFunction dbin = interior(db);
    std::vector<double> r(yin.size());
    for (std::size_t i = 0; i < yin.size(); ++i) {
        const double x = yin.xs[i], yi = yin.ys[i], vi = vin.ys[i];
        const double lv = p.L.dv(x, yi, vi);
        const double gauge_rate =
            T.has_gauge() ? detail::alpha_rate(T.gauge_dx(x, yi, a), T.gauge_dy(x, yi), x, vi, a, al) : 0.0;
        const double rhs = (1.0 - al) * lv *
                               (T.xi(x, yi) * std::pow(x - a, 1.0 - 2.0 * al) -
                                vi * T.tau(x, yi) / std::pow(x - a, al)) +
                           gauge_rate * std::pow(x - a, 1.0 - al);
        r[i] = dbin.ys[i] - rhs;
    }
    return with_values(yin, std::move(r));
}

// A scalar function of (x, y, v) that stays constant along extremals.
struct ConservedQuantity {
    std::function<double(double, double, double)> value;
    std::string description;
};

// Conserved quantity from the balance identity under an external force f:
//   C = (L - v L_v) tau + L_v xi (x-a)^(1-alpha) - f,
// valid when d^alpha f matches the balance right-hand side along the extremal;
// the match is verified on the supplied certified extremal.
inline ConservedQuantity conserved_quantity_with_force(
    const VariationalProblem& p, const TransformationFamily& T,
    std::function<double(double, double, double)> f, const Extremal& ext, double force_tol = 1e-4) {
    detail::require_certified(p, ext);
    const GridFunction& y = ext.y;
    const double al = p.order.alpha();
    const double a = p.a;
    const GridFunction v = grid_alpha_deriv(y);
    std::vector<double> fvals(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) fvals[i] = f(y.xs[i], y.ys[i], v.ys[i]);
    const GridFunction df = interior(grid_alpha_deriv(with_values(y, std::move(fvals))));
    const GridFunction yin = interior(y);
    const GridFunction vin = interior(v);
    double worst = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < yin.size(); ++i) {
        const double x = yin.xs[i], yi = yin.ys[i], vi = vin.ys[i];
        const double lv = p.L.dv(x, yi, vi);
        const double gauge_rate =
            T.has_gauge() ? detail::alpha_rate(T.gauge_dx(x, yi, a), T.gauge_dy(x, yi), x, vi, a, al) : 0.0;
        const double rhs = (1.0 - al) * lv *
                               (T.xi(x, yi) * std::pow(x - a, 1.0 - 2.0 * al) -
                                vi * T.tau(x, yi) / std::pow(x - a, al)) +
                           gauge_rate * std::pow(x - a, 1.0 - al);
        worst = std::max(worst, std::abs(df.ys[i] - rhs));
        scale = std::max(scale, std::abs(rhs));
    }
    if (worst > force_tol * scale)
        throw ForceEquationViolated(
            "conserved_quantity_with_force: d^alpha f does not match the balance right-hand side");
    const Lagrangian L = p.L;
    const double alc = al, ac = a;
    return ConservedQuantity{
        [L, T, f, alc, ac](double x, double yv, double vv) {
            const double lv = L.dv(x, yv, vv);
            return (L(x, yv, vv) - lv * vv) * T.tau(x, yv) +
                   lv * T.xi(x, yv) * std::pow(x - ac, 1.0 - alc) - f(x, yv, vv);
        },
        "force-compensated momentum-energy combination"};
}

// Spec-signature convenience: solves the extremal of p internally first.
inline ConservedQuantity conserved_quantity_with_force(
    const VariationalProblem& p, const TransformationFamily& T,
    std::function<double(double, double, double)> f, double force_tol = 1e-4) {
    const Extremal ext = solve_extremal(p);
    return conserved_quantity_with_force(p, T, std::move(f), ext, force_tol);
}

// Conserved quantity for pure vertical transformations (tau = 0):
//   C = L_v xi - Lambda.
inline ConservedQuantity conserved_quantity_gauge(const VariationalProblem& p,
                                                  const TransformationFamily& T) {
    // Spot-check that the family really has no horizontal component.
    for (int i = 0; i <= 6; ++i) {
        const double x = p.a + (p.b - p.a) * double(i) / 6.0;
        for (double yv : {-1.0, 0.0, 0.7}) {
            if (std::abs(T.tau(x, yv)) > 1e-12)
                throw HypothesisViolated("conserved_quantity_gauge: requires tau = 0");
        }
    }
    const Lagrangian L = p.L;
    return ConservedQuantity{
        [L, T](double x, double yv, double vv) {
            return L.dv(x, yv, vv) * T.xi(x, yv) - T.gauge(x, yv);
        },
        "vertical-symmetry momentum minus gauge"};
}

// Relative drift of a conserved quantity along a trajectory grid: the max
// deviation from its value at the first interior node, normalized.
inline double drift(const ConservedQuantity& C, const GridFunction& y) {
    const GridFunction yin = interior(y);
    const GridFunction vin = interior(grid_alpha_deriv(y));
    const double c0 = C.value(yin.xs[0], yin.ys[0], vin.ys[0]);
    double worst = 0.0;
    for (std::size_t i = 1; i < yin.size(); ++i) {
        const double ci = C.value(yin.xs[i], yin.ys[i], vin.ys[i]);
        worst = std::max(worst, std::abs(ci - c0));
    }
    return worst / (1.0 + std::abs(c0));
}

}  // namespace confrac
