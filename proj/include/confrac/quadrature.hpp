#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "confrac/errors.hpp"

namespace confrac {

struct QuadratureSettings {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_subdivisions = 2000;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
            throw DomainError("QuadratureSettings: tolerances must be positive");
        if (max_subdivisions < 1)
            throw DomainError("QuadratureSettings: max_subdivisions must be at least 1");
    }
};

namespace detail {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1] (positive half; the rule
// is symmetric).  Odd-indexed abscissae are the embedded Gauss points.
inline constexpr double gk_nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000,
};
inline constexpr double k15_weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
};
inline constexpr double g7_weights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
};

template <class F>
void gauss_kronrod_15(F&& f, double a, double b, double& value, double& error) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double gauss = 0.0, kronrod = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = h * gk_nodes[i];
        const double fv = (i == 7) ? f(c) : f(c - dx) + f(c + dx);
        kronrod += k15_weights[i] * fv;
        if (i % 2 == 1) gauss += g7_weights[i / 2] * fv;
    }
    value = kronrod * h;
    if (!std::isfinite(value)) throw NonFinite("integrate_adaptive: integrand is not finite");
    const double diff = std::abs(kronrod - gauss) * std::abs(h);
    // QUADPACK-style sharpened error estimate.
    error = (diff > 0.0) ? std::min(diff, std::pow(200.0 * diff, 1.5)) : 0.0;
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod quadrature: repeatedly bisects the segment
// with the largest error estimate until the summed estimate meets the
// tolerance, or throws ToleranceNotMet once max_subdivisions segments exist.
template <class F>
double integrate_adaptive(F&& f, double a, double b, const QuadratureSettings& settings = {}) {
    settings.validate();
    if (a == b) return 0.0;
    if (a > b) return -integrate_adaptive(f, b, a, settings);

    struct Segment {
        double a, b, value, error;
    };
    std::vector<Segment> segs;
    segs.reserve(64);
    Segment s{a, b, 0.0, 0.0};
    detail::gauss_kronrod_15(f, a, b, s.value, s.error);
    segs.push_back(s);
    double total = s.value, total_err = s.error;

    while (total_err > std::max(settings.abs_tol, settings.rel_tol * std::abs(total))) {
        if (static_cast<int>(segs.size()) >= settings.max_subdivisions)
            throw ToleranceNotMet("integrate_adaptive: error estimate " + std::to_string(total_err) +
                                  " above tolerance after max subdivisions");
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].error > segs[worst].error) worst = i;
        const Segment old = segs[worst];
        const double mid = 0.5 * (old.a + old.b);
        if (mid <= old.a || mid >= old.b)
            throw ToleranceNotMet("integrate_adaptive: segment underflow before reaching tolerance");
        Segment left{old.a, mid, 0.0, 0.0}, right{mid, old.b, 0.0, 0.0};
        detail::gauss_kronrod_15(f, left.a, left.b, left.value, left.error);
        detail::gauss_kronrod_15(f, right.a, right.b, right.value, right.error);
        segs[worst] = left;
        segs.push_back(right);
        total = total_err = 0.0;
        for (const auto& seg : segs) {
            total += seg.value;
            total_err += seg.error;
        }
    }
    return total;
}

}  // namespace confrac
