#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "confrac/calculus.hpp"
#include "confrac/errors.hpp"
#include "confrac/function_handle.hpp"
#include "confrac/numerics.hpp"
#include "confrac/quadrature.hpp"

namespace confrac {

// Scalar field on the plane with optional first partials (checked against
// difference quotients on first use, like FunctionHandle).
class Field2D {
  public:
    using Fn2 = std::function<double(double, double)>;

    Field2D() = default;
    explicit Field2D(Fn2 value, Fn2 d1 = nullptr, Fn2 d2 = nullptr)
        : value_(std::move(value)), d1_(std::move(d1)), d2_(std::move(d2)) {}

    double operator()(double x1, double x2) const { return value_(x1, x2); }
    bool has_d1() const { return static_cast<bool>(d1_); }
    bool has_d2() const { return static_cast<bool>(d2_); }
    double d1(double x1, double x2) const { return d1_(x1, x2); }
    double d2(double x1, double x2) const { return d2_(x1, x2); }

    // One-variable slice along the given axis (1 or 2) at the other
    // coordinate fixed; carries the matching partial when available.
    FunctionHandle slice(int axis, double other) const {
        if (axis == 1) {
            std::function<double(double)> d;
            if (d1_) d = [f = *this, other](double t) { return f.d1(t, other); };
            return FunctionHandle([f = *this, other](double t) { return f(t, other); }, std::move(d));
        }
        if (axis == 2) {
            std::function<double(double)> d;
            if (d2_) d = [f = *this, other](double t) { return f.d2(other, t); };
            return FunctionHandle([f = *this, other](double t) { return f(other, t); }, std::move(d));
        }
        throw DomainError("Field2D: axis must be 1 or 2");
    }

  private:
    Fn2 value_, d1_, d2_;
};

struct Rectangle {
    double a, b;  // x1 range
    double c, d;  // x2 range

    Rectangle(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {
        if (!(a < b) || !(c < d)) throw DomainError("Rectangle: need a < b and c < d");
    }
};

// Conformable partial derivative of f along one axis, anchored at the given
// point (left anchor).
inline double partial_alpha(const Field2D& f, int axis, Order order, double anchor_point, double x1,
                            double x2) {
    if (axis == 1) return left_deriv(f.slice(1, x2), order, anchor_point, x1);
    if (axis == 2) return left_deriv(f.slice(2, x1), order, anchor_point, x2);
    throw DomainError("partial_alpha: axis must be 1 or 2");
}

// Double integral against the product alpha-measure
// (x1-a)^(alpha-1)(x2-c)^(alpha-1) dx1 dx2 over the rectangle, iterated with
// the desingularizing substitution on each axis.  The inner integral runs on
// a tighter tolerance so the outer error estimate stays meaningful.
template <class F>
double double_integral(F&& f, const Rectangle& R, Order order, const QuadratureSettings& settings = {}) {
    const double al = order.alpha();
    const double inv_al = 1.0 / al;
    QuadratureSettings inner = settings;
    inner.abs_tol = std::max(settings.abs_tol * 1e-2, 5e-14);
    inner.rel_tol = std::max(settings.rel_tol * 1e-2, 1e-12);
    return integrate_adaptive(
        [&](double t1) {
            const double x1 = R.a + std::pow(t1, inv_al);
            const double row = integrate_adaptive(
                [&](double t2) { return f(x1, R.c + std::pow(t2, inv_al)) * inv_al; }, 0.0,
                std::pow(R.d - R.c, al), inner);
            return row * inv_al;
        },
        0.0, std::pow(R.b - R.a, al), settings);
}

// Residual of the conformable Green identity on a rectangle:
//   int_a^b (f(x1,c) - f(x1,d)) d^alpha_a x1 + int_c^d (g(b,x2) - g(a,x2)) d^alpha_c x2
//   = int_R (partial^alpha_1 g - partial^alpha_2 f) dmu.
inline double green_residual(const Field2D& f, const Field2D& g, const Rectangle& R, Order order,
                             const QuadratureSettings& settings = {}) {
    const double edge1 = left_integral(
        FunctionHandle([&](double x1) { return f(x1, R.c) - f(x1, R.d); }), order, R.a, R.b, settings);
    const double edge2 = left_integral(
        FunctionHandle([&](double x2) { return g(R.b, x2) - g(R.a, x2); }), order, R.c, R.d, settings);
    const double area = double_integral(
        [&](double x1, double x2) {
            return partial_alpha(g, 1, order, R.a, x1, x2) - partial_alpha(f, 2, order, R.c, x1, x2);
        },
        R, order, settings);
    return std::abs(edge1 + edge2 - area);
}

namespace detail {

inline std::vector<double> edge_probes(double lo, double hi, std::size_t n) {
    std::vector<double> ps(n);
    for (std::size_t i = 0; i < n; ++i)
        ps[i] = lo + 0.5 * (hi - lo) * (1.0 - std::cos(std::numbers::pi * double(i) / double(n - 1)));
    return ps;
}

}  // namespace detail

// Residual of the two-dimensional integration-by-parts identity for a test
// field h vanishing on the rectangle boundary:
//   int_R (G d^alpha_1 h - F d^alpha_2 h) dmu = -int_R (d^alpha_1 G - d^alpha_2 F) h dmu.
inline double parts2d_residual(const Field2D& F, const Field2D& G, const Field2D& h,
                               const Rectangle& R, Order order,
                               const QuadratureSettings& settings = {}) {
    double hscale = 1.0;
    for (double x1 : detail::edge_probes(R.a, R.b, 5))
        for (double x2 : detail::edge_probes(R.c, R.d, 5)) hscale = std::max(hscale, std::abs(h(x1, x2)));
    const auto p1 = detail::edge_probes(R.a, R.b, 17);
    const auto p2 = detail::edge_probes(R.c, R.d, 17);
    for (double x1 : p1)
        for (double x2 : {R.c, R.d})
            if (std::abs(h(x1, x2)) > 1e-10 * hscale)
                throw BoundaryConditionViolated("parts2d_residual: h must vanish on the boundary");
    for (double x2 : p2)
        for (double x1 : {R.a, R.b})
            if (std::abs(h(x1, x2)) > 1e-10 * hscale)
                throw BoundaryConditionViolated("parts2d_residual: h must vanish on the boundary");

    const double lhs = double_integral(
        [&](double x1, double x2) {
            return G(x1, x2) * partial_alpha(h, 1, order, R.a, x1, x2) -
                   F(x1, x2) * partial_alpha(h, 2, order, R.c, x1, x2);
        },
        R, order, settings);
    const double rhs = double_integral(
        [&](double x1, double x2) {
            return (partial_alpha(G, 1, order, R.a, x1, x2) - partial_alpha(F, 2, order, R.c, x1, x2)) *
                   h(x1, x2);
        },
        R, order, settings);
    return std::abs(lhs + rhs);
}

// Field Lagrangian L(x1, x2, y_1..y_m, v_11, v_12, ..., v_m1, v_m2), where
// v_ki is the conformable partial of y_k along axis i.  Partials of L are
// optional (difference-quotient fallback); v-partials are indexed k*2 + (i-1).
class Lagrangian2D {
  public:
    using Eval = std::function<double(double, double, std::span<const double>, std::span<const double>)>;

    Lagrangian2D() = default;
    Lagrangian2D(std::size_t m, Eval value) : m_(m), value_(std::move(value)) {
        if (m_ == 0) throw DomainError("Lagrangian2D: need at least one field");
    }

    Lagrangian2D& with_x_partials(Eval dx1, Eval dx2) {
        dx1_ = std::move(dx1);
        dx2_ = std::move(dx2);
        return *this;
    }
    Lagrangian2D& with_y_partials(std::vector<Eval> dy) {
        if (dy.size() != m_) throw DimensionMismatch("Lagrangian2D: need one y-partial per field");
        dy_ = std::move(dy);
        return *this;
    }
    Lagrangian2D& with_v_partials(std::vector<Eval> dv) {
        if (dv.size() != 2 * m_) throw DimensionMismatch("Lagrangian2D: need 2m v-partials");
        dv_ = std::move(dv);
        return *this;
    }

    std::size_t fields() const { return m_; }

    double operator()(double x1, double x2, std::span<const double> y, std::span<const double> v) const {
        check(y, v);
        return value_(x1, x2, y, v);
    }
    double dx1(double x1, double x2, std::span<const double> y, std::span<const double> v) const {
        check(y, v);
        if (dx1_) return dx1_(x1, x2, y, v);
        return central_diff([&](double t) { return value_(t, x2, y, v); }, x1);
    }
    double dx2(double x1, double x2, std::span<const double> y, std::span<const double> v) const {
        check(y, v);
        if (dx2_) return dx2_(x1, x2, y, v);
        return central_diff([&](double t) { return value_(x1, t, y, v); }, x2);
    }
    double dy(std::size_t k, double x1, double x2, std::span<const double> y,
              std::span<const double> v) const {
        check(y, v);
        if (k >= m_) throw DimensionMismatch("Lagrangian2D: field index out of range");
        if (!dy_.empty()) return dy_[k](x1, x2, y, v);
        std::vector<double> probe(y.begin(), y.end());
        return central_diff(
            [&](double t) {
                probe[k] = t;
                return value_(x1, x2, probe, v);
            },
            y[k]);
    }
    double dv(std::size_t k, int axis, double x1, double x2, std::span<const double> y,
              std::span<const double> v) const {
        check(y, v);
        if (k >= m_ || (axis != 1 && axis != 2))
            throw DimensionMismatch("Lagrangian2D: slope index out of range");
        const std::size_t idx = 2 * k + std::size_t(axis - 1);
        if (!dv_.empty()) return dv_[idx](x1, x2, y, v);
        std::vector<double> probe(v.begin(), v.end());
        return central_diff(
            [&](double t) {
                probe[idx] = t;
                return value_(x1, x2, y, probe);
            },
            v[idx]);
    }

  private:
    void check(std::span<const double> y, std::span<const double> v) const {
        if (y.size() != m_ || v.size() != 2 * m_)
            throw DimensionMismatch("Lagrangian2D: slot spans have the wrong length");
    }

    std::size_t m_ = 0;
    Eval value_;
    Eval dx1_, dx2_;
    std::vector<Eval> dy_;
    std::vector<Eval> dv_;
};

namespace detail {

// Interior probe lattice clustered toward the anchored (low) edges.
inline std::vector<double> clustered_interior(double lo, double hi, std::size_t n) {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = 0.5 * std::numbers::pi * double(i + 1) / double(n + 1);
        xs[i] = lo + (hi - lo) * (1.0 - std::cos(theta));
    }
    return xs;
}

struct Slots2D {
    std::vector<double> y;
    std::vector<double> v;
};

inline Slots2D eval_slots(std::span<const Field2D> ys, Order order, const Rectangle& R, double x1,
                          double x2) {
    Slots2D s;
    s.y.resize(ys.size());
    s.v.resize(2 * ys.size());
    for (std::size_t k = 0; k < ys.size(); ++k) {
        s.y[k] = ys[k](x1, x2);
        s.v[2 * k] = partial_alpha(ys[k], 1, order, R.a, x1, x2);
        s.v[2 * k + 1] = partial_alpha(ys[k], 2, order, R.c, x1, x2);
    }
    return s;
}

}  // namespace detail

struct El2dResidual {
    std::vector<std::function<double(double, double)>> components;  // one per field
    double max_abs = 0.0;                                           // over the probe lattice
};

// Residual field of the two-dimensional Euler-Lagrange system
//   L_{y_k} - d^alpha_1 (L_{v_k1}) - d^alpha_2 (L_{v_k2}) = 0,
// with the outer conformable partials taken by difference quotients of the
// momentum fields.  max_abs is taken over a 33x33 interior lattice clustered
// toward the anchored edges.
inline El2dResidual el2d_residual(const Lagrangian2D& L, std::vector<Field2D> ys, const Rectangle& R,
                                  Order order, std::size_t lattice = 33) {
    if (ys.size() != L.fields()) throw DimensionMismatch("el2d_residual: field count mismatch");
    El2dResidual out;
    auto fields = std::make_shared<std::vector<Field2D>>(std::move(ys));
    for (std::size_t k = 0; k < L.fields(); ++k) {
        auto component = [L, fields, R, order, k](double x1, double x2) {
            Field2D w1([L, fields, R, order, k](double u1, double u2) {
                const auto s = detail::eval_slots(*fields, order, R, u1, u2);
                return L.dv(k, 1, u1, u2, s.y, s.v);
            });
            Field2D w2([L, fields, R, order, k](double u1, double u2) {
                const auto s = detail::eval_slots(*fields, order, R, u1, u2);
                return L.dv(k, 2, u1, u2, s.y, s.v);
            });
            const auto s = detail::eval_slots(*fields, order, R, x1, x2);
            return L.dy(k, x1, x2, s.y, s.v) - partial_alpha(w1, 1, order, R.a, x1, x2) -
                   partial_alpha(w2, 2, order, R.c, x1, x2);
        };
        out.components.push_back(component);
    }
    const auto g1 = detail::clustered_interior(R.a, R.b, lattice);
    const auto g2 = detail::clustered_interior(R.c, R.d, lattice);
    for (const auto& component : out.components)
        for (double x1 : g1)
            for (double x2 : g2) out.max_abs = std::max(out.max_abs, std::abs(component(x1, x2)));
    return out;
}

// Two-parameter-slot family on the plane: x_i -> x_i + eps tau_i(x, y),
// y_k -> y_k + eps xi_k(x, y), with an optional gauge Lambda(x, y).
class TransformationFamily2D {
  public:
    using FnG = std::function<double(double, double, std::span<const double>)>;

    TransformationFamily2D() = default;
    TransformationFamily2D(FnG tau1, FnG tau2, std::vector<FnG> xi, FnG gauge = nullptr)
        : tau1_(std::move(tau1)), tau2_(std::move(tau2)), xi_(std::move(xi)), gauge_(std::move(gauge)) {
        if (xi_.empty()) throw DomainError("TransformationFamily2D: need one xi per field");
    }

    std::size_t fields() const { return xi_.size(); }
    double tau(int i, double x1, double x2, std::span<const double> y) const {
        const FnG& g = (i == 1) ? tau1_ : tau2_;
        return g ? g(x1, x2, y) : 0.0;
    }
    double xi(std::size_t k, double x1, double x2, std::span<const double> y) const {
        return xi_[k] ? xi_[k](x1, x2, y) : 0.0;
    }
    bool has_gauge() const { return static_cast<bool>(gauge_); }
    double gauge(double x1, double x2, std::span<const double> y) const {
        return gauge_ ? gauge_(x1, x2, y) : 0.0;
    }

    const FnG& tau_fn(int i) const { return i == 1 ? tau1_ : tau2_; }
    const FnG& xi_fn(std::size_t k) const { return xi_[k]; }
    const FnG& gauge_fn() const { return gauge_; }

  private:
    FnG tau1_, tau2_;
    std::vector<FnG> xi_;
    FnG gauge_;
};

namespace detail {

// Composite of a generator with the fields, as a plain plane field; its
// conformable partials are then taken by difference quotients.
inline Field2D compose_generator(const TransformationFamily2D::FnG& g,
                                 const std::shared_ptr<std::vector<Field2D>>& fields) {
    return Field2D([g, fields](double x1, double x2) {
        std::vector<double> y(fields->size());
        for (std::size_t k = 0; k < fields->size(); ++k) y[k] = (*fields)[k](x1, x2);
        return g(x1, x2, y);
    });
}

}  // namespace detail

// Max residual of the two-dimensional first-order invariance condition over
// the interior probe lattice.  The gauge rate is the divergence-style sum of
// the two conformable partials of the composed gauge term.
inline double invariance2d_residual(const Lagrangian2D& L, const TransformationFamily2D& T,
                                    std::vector<Field2D> ys, const Rectangle& R, Order order,
                                    std::size_t lattice = 33) {
    if (ys.size() != L.fields() || T.fields() != L.fields())
        throw DimensionMismatch("invariance2d_residual: field count mismatch");
    const double al = order.alpha();
    auto fields = std::make_shared<std::vector<Field2D>>(std::move(ys));
    const double anchors[2] = {R.a, R.c};

    std::vector<Field2D> tau_comp;
    for (int i = 1; i <= 2; ++i)
        tau_comp.push_back(T.tau_fn(i) ? detail::compose_generator(T.tau_fn(i), fields) : Field2D());
    std::vector<Field2D> xi_comp;
    for (std::size_t k = 0; k < T.fields(); ++k)
        xi_comp.push_back(T.xi_fn(k) ? detail::compose_generator(T.xi_fn(k), fields) : Field2D());
    Field2D gauge_comp = T.has_gauge() ? detail::compose_generator(T.gauge_fn(), fields) : Field2D();

    const auto g1 = detail::clustered_interior(R.a, R.b, lattice);
    const auto g2 = detail::clustered_interior(R.c, R.d, lattice);
    double worst = 0.0;
    for (double x1 : g1) {
        for (double x2 : g2) {
            const auto s = detail::eval_slots(*fields, order, R, x1, x2);
            double r = 0.0;
            double det_rate = 0.0;
            const double xcoord[2] = {x1, x2};
            double tau_val[2], tau_rate[2];
            for (int i = 0; i < 2; ++i) {
                tau_val[i] = T.tau(i + 1, x1, x2, s.y);
                tau_rate[i] = T.tau_fn(i + 1)
                                  ? partial_alpha(tau_comp[i], i + 1, order, anchors[i], x1, x2)
                                  : 0.0;
                det_rate += tau_rate[i] / std::pow(xcoord[i] - anchors[i], 1.0 - al);
            }
            r += L.dx1(x1, x2, s.y, s.v) * tau_val[0] + L.dx2(x1, x2, s.y, s.v) * tau_val[1];
            for (std::size_t k = 0; k < L.fields(); ++k) {
                r += L.dy(k, x1, x2, s.y, s.v) * T.xi(k, x1, x2, s.y);
                for (int i = 0; i < 2; ++i) {
                    const double xi_rate =
                        T.xi_fn(k) ? partial_alpha(xi_comp[k], i + 1, order, anchors[i], x1, x2) : 0.0;
                    const double vki = s.v[2 * k + std::size_t(i)];
                    r += L.dv(k, i + 1, x1, x2, s.y, s.v) *
                         (xi_rate - vki * ((al - 1.0) * tau_val[i] / (xcoord[i] - anchors[i]) +
                                           tau_rate[i] / std::pow(xcoord[i] - anchors[i], 1.0 - al)));
                }
            }
            r += L(x1, x2, s.y, s.v) * det_rate;
            if (T.has_gauge())
                r -= partial_alpha(gauge_comp, 1, order, R.a, x1, x2) +
                     partial_alpha(gauge_comp, 2, order, R.c, x1, x2);
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

}  // namespace confrac
