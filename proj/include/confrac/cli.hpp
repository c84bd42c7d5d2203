#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "confrac/calculus.hpp"
#include "confrac/dissipative.hpp"
#include "confrac/errors.hpp"
#include "confrac/expression.hpp"
#include "confrac/multidim.hpp"
#include "confrac/noether.hpp"
#include "confrac/optimal_control.hpp"
#include "confrac/variational.hpp"

namespace confrac::cli {

using nlohmann::json;

struct ProblemSpec {
    std::string kind;
    json params;
};

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct ResultDocument {
    std::string kind;
    json spec;
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<Table> tables;
};

inline const std::vector<std::string>& known_kinds() {
    static const std::vector<std::string> kinds = {
        "deriv",   "integrate",        "extremal",    "dubois",     "noether-check",
        "control", "dissipative-demo", "green-check", "el2d-check",
    };
    return kinds;
}

// ---------------------------------------------------------------------------
// JSON access helpers (spec-category failures).

namespace detail {

inline json parse_json_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Recover line/column from the byte offset for the error message.
        int line = 1, col = 1;
        const std::size_t stop = std::min(text.size(), e.byte > 0 ? std::size_t(e.byte - 1) : 0);
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(std::string("problem file is not valid JSON: ") + e.what(), line, col);
    }
}

inline const json& require_field(const json& j, const std::string& key) {
    auto it = j.find(key);
    if (it == j.end()) throw MissingField("missing required field '" + key + "'");
    return *it;
}

inline double require_number(const json& j, const std::string& key) {
    const json& f = require_field(j, key);
    if (!f.is_number()) throw InvalidValue("field '" + key + "' must be a number");
    return f.get<double>();
}

inline double get_number(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw InvalidValue("field '" + key + "' must be a number");
    return j[key].get<double>();
}

inline std::string require_string(const json& j, const std::string& key) {
    const json& f = require_field(j, key);
    if (!f.is_string()) throw InvalidValue("field '" + key + "' must be a string");
    return f.get<std::string>();
}

inline std::string get_string(const json& j, const std::string& key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw InvalidValue("field '" + key + "' must be a string");
    return j[key].get<std::string>();
}

inline bool get_bool(const json& j, const std::string& key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) throw InvalidValue("field '" + key + "' must be a boolean");
    return j[key].get<bool>();
}

inline std::vector<double> get_number_array(const json& j, const std::string& key,
                                            std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_array()) throw InvalidValue("field '" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw InvalidValue("field '" + key + "' must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline double checked_alpha(const json& j) {
    const double al = require_number(j, "alpha");
    if (!(al > 0.0 && al <= 1.0)) throw InvalidValue("field 'alpha' must lie in (0, 1]");
    return al;
}

// Deterministic probe points for expression validation.
struct ProbeRng {
    std::mt19937_64 eng;
    explicit ProbeRng(std::uint64_t seed) : eng(seed) {}
    double uniform(double lo, double hi) {
        // Stay off the exact endpoints so admissible half-open domains pass.
        std::uniform_real_distribution<double> d(0.05, 0.95);
        return lo + d(eng) * (hi - lo);
    }
};

using Range = std::pair<double, double>;

// Compiles an expression and evaluates it at a few random in-range points;
// a non-finite value marks the problem file as invalid.
inline Expression compile_checked(const std::string& src, std::vector<std::string> vars,
                                  const std::vector<Range>& ranges, ProbeRng& rng,
                                  const std::string& field) {
    Expression e = Expression::parse(src, std::move(vars));
    std::vector<double> args(ranges.size());
    for (int probe = 0; probe < 3; ++probe) {
        for (std::size_t k = 0; k < ranges.size(); ++k)
            args[k] = rng.uniform(ranges[k].first, ranges[k].second);
        double value;
        try {
            value = e(args);
        } catch (const Error&) {
            throw InvalidValue("expression in field '" + field + "' failed to evaluate at a probe point");
        }
        if (!std::isfinite(value))
            throw InvalidValue("expression in field '" + field +
                               "' is non-finite at a probe point; check its domain");
    }
    return e;
}

inline std::string expr_field(const json& j, const std::string& key) { return require_string(j, key); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Built-in default problems, one per subcommand.

inline std::string default_spec_text(const std::string& kind) {
    if (kind == "deriv")
        return R"({"kind":"deriv","f":"x^2","alpha":0.5,"side":"left","a":0,"x":1})";
    if (kind == "integrate")
        return R"({"kind":"integrate","f":"x","alpha":0.5,"side":"left","a":0,"b":1})";
    if (kind == "extremal")
        return R"({"kind":"extremal","L":"v^2","alpha":0.5,"a":0,"b":1,"ya":0,"yb":1})";
    if (kind == "dubois")
        return R"({"kind":"dubois","L":"v^2","alpha":0.5,"a":0,"b":1,"ya":0,"yb":1})";
    if (kind == "noether-check")
        return R"({"kind":"noether-check","L":"v^2","alpha":0.5,"a":0,"b":1,"ya":0,"yb":1,)"
               R"("tau":"0","xi":"x^0.5","gauge":"y"})";
    if (kind == "control")
        return R"({"kind":"control","L":"v^2","phi":"v","alpha":0.5,"a":0,"b":1,"ya":0,)"
               R"("terminal":{"type":"fixed","yb":1}})";
    if (kind == "dissipative-demo")
        return R"({"kind":"dissipative-demo","m":1,"gamma":0.5,"U":"x^2/2","x0":1,"v0":0,)"
               R"("horizon":5,"widths":[0.2,0.1,0.05,0.025],"extrapolate":true})";
    if (kind == "green-check")
        return R"({"kind":"green-check","f":"x1*x2^2","g":"x1^2*x2","alpha":0.5,)"
               R"("a":0,"b":1,"c":0,"d":1})";
    if (kind == "el2d-check")
        return R"({"kind":"el2d-check","L":"v1^2+v2^2","y":"x1^0.5","alpha":0.5,)"
               R"("a":0,"b":1,"c":0,"d":1})";
    throw UnknownIdentifier("unknown subcommand '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Spec validation.  Checks fields, ranges, and that every expression compiles
// and evaluates finitely on seeded probe points.

inline ProblemSpec parse_spec(const std::string& text, const std::string& kind_hint = "",
                              std::uint64_t seed = 12345) {
    json j = detail::parse_json_text(text);
    if (!j.is_object()) throw InvalidValue("problem file must be a JSON object");

    std::string kind = kind_hint;
    if (j.contains("kind")) {
        const std::string file_kind = detail::require_string(j, "kind");
        if (!kind.empty() && file_kind != kind)
            throw InvalidValue("problem file kind '" + file_kind + "' does not match subcommand '" +
                               kind + "'");
        kind = file_kind;
    }
    if (kind.empty()) throw MissingField("missing required field 'kind'");
    const auto& kinds = known_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
        throw UnknownIdentifier("unknown problem kind '" + kind + "'");

    detail::ProbeRng rng(seed);
    using detail::Range;

    if (kind == "deriv") {
        const double al = detail::checked_alpha(j);
        (void)al;
        const std::string side = detail::get_string(j, "side", "left");
        if (side != "left" && side != "right")
            throw InvalidValue("field 'side' must be \"left\" or \"right\"");
        const double anchor = detail::require_number(j, side == "left" ? "a" : "b");
        std::vector<double> xs;
        const json& xf = detail::require_field(j, "x");
        if (xf.is_number())
            xs.push_back(xf.get<double>());
        else if (xf.is_array())
            for (const auto& v : xf) {
                if (!v.is_number()) throw InvalidValue("field 'x' must be a number or number array");
                xs.push_back(v.get<double>());
            }
        else
            throw InvalidValue("field 'x' must be a number or number array");
        if (xs.empty()) throw MissingField("field 'x' must contain at least one point");
        for (double x : xs) {
            if (side == "left" && x < anchor)
                throw InvalidValue("evaluation points must satisfy x >= a for the left derivative");
            if (side == "right" && x > anchor)
                throw InvalidValue("evaluation points must satisfy x <= b for the right derivative");
        }
        const double lo = side == "left" ? anchor : *std::min_element(xs.begin(), xs.end());
        const double hi = side == "left" ? std::max(anchor + 1.0, *std::max_element(xs.begin(), xs.end()))
                                         : anchor;
        detail::compile_checked(detail::expr_field(j, "f"), {"x"}, {Range{lo, hi}}, rng, "f");
    } else if (kind == "integrate") {
        detail::checked_alpha(j);
        const std::string side = detail::get_string(j, "side", "left");
        if (side != "left" && side != "right")
            throw InvalidValue("field 'side' must be \"left\" or \"right\"");
        const double a = detail::require_number(j, "a");
        const double b = detail::require_number(j, "b");
        if (!(a < b)) throw InvalidValue("integration range needs a < b");
        detail::compile_checked(detail::expr_field(j, "f"), {"x"}, {Range{a, b}}, rng, "f");
    } else if (kind == "extremal" || kind == "dubois" || kind == "noether-check") {
        detail::checked_alpha(j);
        const double a = detail::require_number(j, "a");
        const double b = detail::require_number(j, "b");
        if (!(a < b)) throw InvalidValue("problem interval needs a < b");
        const double ya = detail::require_number(j, "ya");
        const double yb = detail::require_number(j, "yb");
        const Range xr{a, b};
        const Range yr{std::min(ya, yb) - 1.0, std::max(ya, yb) + 1.0};
        const Range vr{-2.0, 2.0};
        detail::compile_checked(detail::expr_field(j, "L"), {"x", "y", "v"}, {xr, yr, vr}, rng, "L");
        if (j.contains("grid_size")) {
            const double n = detail::require_number(j, "grid_size");
            if (n < 5 || n != std::floor(n)) throw InvalidValue("field 'grid_size' must be an integer >= 5");
        }
        if (kind == "noether-check") {
            detail::compile_checked(detail::expr_field(j, "tau"), {"x", "y"}, {xr, yr}, rng, "tau");
            detail::compile_checked(detail::expr_field(j, "xi"), {"x", "y"}, {xr, yr}, rng, "xi");
            if (j.contains("gauge"))
                detail::compile_checked(detail::expr_field(j, "gauge"), {"x", "y"}, {xr, yr}, rng,
                                        "gauge");
            const auto eps = detail::get_number_array(j, "epsilons", {1e-2, 1e-3, 1e-4});
            if (eps.empty()) throw InvalidValue("field 'epsilons' must be nonempty");
            for (std::size_t i = 0; i < eps.size(); ++i) {
                if (!(eps[i] > 0.0)) throw InvalidValue("field 'epsilons' must be positive");
                if (i > 0 && !(eps[i] < eps[i - 1]))
                    throw InvalidValue("field 'epsilons' must be strictly decreasing");
            }
        }
    } else if (kind == "control") {
        detail::checked_alpha(j);
        const double a = detail::require_number(j, "a");
        const double b = detail::require_number(j, "b");
        if (!(a < b)) throw InvalidValue("problem interval needs a < b");
        const double ya = detail::require_number(j, "ya");
        const json& term = detail::require_field(j, "terminal");
        if (!term.is_object()) throw InvalidValue("field 'terminal' must be an object");
        const std::string type = detail::require_string(term, "type");
        double yb = ya;
        if (type == "fixed")
            yb = detail::require_number(term, "yb");
        else if (type != "free")
            throw InvalidValue("terminal type must be \"fixed\" or \"free\"");
        const Range xr{a, b};
        const Range yr{std::min(ya, yb) - 1.0, std::max(ya, yb) + 1.0};
        const Range vr{-2.0, 2.0};
        detail::compile_checked(detail::expr_field(j, "L"), {"x", "y", "v"}, {xr, yr, vr}, rng, "L");
        detail::compile_checked(detail::expr_field(j, "phi"), {"x", "y", "v"}, {xr, yr, vr}, rng, "phi");
    } else if (kind == "dissipative-demo") {
        const double m = detail::require_number(j, "m");
        if (!(m > 0.0)) throw InvalidValue("field 'm' must be positive");
        const double gamma = detail::require_number(j, "gamma");
        if (!(gamma >= 0.0)) throw InvalidValue("field 'gamma' must be nonnegative");
        const double x0 = detail::require_number(j, "x0");
        detail::require_number(j, "v0");
        const double horizon = detail::require_number(j, "horizon");
        if (!(horizon > 0.0)) throw InvalidValue("field 'horizon' must be positive");
        const auto widths = detail::get_number_array(j, "widths", {0.2, 0.1, 0.05, 0.025});
        if (widths.empty()) throw MissingField("field 'widths' must contain at least one width");
        for (std::size_t i = 0; i < widths.size(); ++i) {
            if (!(widths[i] > 0.0)) throw InvalidValue("field 'widths' must be positive");
            if (i > 0 && !(widths[i] < widths[i - 1]))
                throw InvalidValue("field 'widths' must be strictly decreasing");
        }
        detail::compile_checked(detail::expr_field(j, "U"), {"x"}, {Range{x0 - 2.0, x0 + 2.0}}, rng,
                                "U");
    } else if (kind == "green-check" || kind == "el2d-check") {
        detail::checked_alpha(j);
        const double a = detail::require_number(j, "a");
        const double b = detail::require_number(j, "b");
        const double c = detail::require_number(j, "c");
        const double d = detail::require_number(j, "d");
        if (!(a < b) || !(c < d)) throw InvalidValue("rectangle needs a < b and c < d");
        const Range x1r{a, b}, x2r{c, d};
        if (kind == "green-check") {
            detail::compile_checked(detail::expr_field(j, "f"), {"x1", "x2"}, {x1r, x2r}, rng, "f");
            detail::compile_checked(detail::expr_field(j, "g"), {"x1", "x2"}, {x1r, x2r}, rng, "g");
        } else {
            const Range yr{-2.0, 2.0}, vr{-2.0, 2.0};
            detail::compile_checked(detail::expr_field(j, "L"), {"x1", "x2", "y", "v1", "v2"},
                                    {x1r, x2r, yr, vr, vr}, rng, "L");
            detail::compile_checked(detail::expr_field(j, "y"), {"x1", "x2"}, {x1r, x2r}, rng, "y");
            if (j.contains("lattice")) {
                const double n = detail::require_number(j, "lattice");
                if (n < 3 || n != std::floor(n))
                    throw InvalidValue("field 'lattice' must be an integer >= 3");
            }
        }
    }

    return ProblemSpec{kind, std::move(j)};
}

// ---------------------------------------------------------------------------
// Expression-to-callable adapters.

namespace detail {

inline FunctionHandle handle_of_x(const Expression& e, bool with_fd_deriv = false) {
    auto value = [e](double x) {
        const double args[1] = {x};
        return e(std::span<const double>(args, 1));
    };
    if (!with_fd_deriv) return FunctionHandle(value);
    return FunctionHandle(value, [value](double x) { return central_diff(value, x); });
}

inline Lagrangian lagrangian_of(const Expression& e) {
    return Lagrangian([e](double x, double y, double v) {
        const double args[3] = {x, y, v};
        return e(std::span<const double>(args, 3));
    });
}

inline TransformationFamily::Fn2 fn2_of(const Expression& e) {
    return [e](double x, double y) {
        const double args[2] = {x, y};
        return e(std::span<const double>(args, 2));
    };
}

inline Field2D field_of(const Expression& e) {
    return Field2D([e](double x1, double x2) {
        const double args[2] = {x1, x2};
        return e(std::span<const double>(args, 2));
    });
}

inline Expression compiled(const json& j, const std::string& key, std::vector<std::string> vars) {
    return Expression::parse(require_string(j, key), std::move(vars));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dispatch.

namespace detail {

inline ResultDocument run_deriv(const ProblemSpec& spec) {
    const json& j = spec.params;
    const Order order(checked_alpha(j));
    const std::string side = get_string(j, "side", "left");
    const double anchor_pt = require_number(j, side == "left" ? "a" : "b");
    const Anchor anchor =
        side == "left" ? Anchor::left_from(anchor_pt) : Anchor::right_at(anchor_pt);
    const FunctionHandle f = handle_of_x(compiled(j, "f", {"x"}));

    ResultDocument doc{spec.kind, j, {}, {}};
    const json& xf = require_field(j, "x");
    if (xf.is_number()) {
        doc.scalars.emplace_back("value", alpha_deriv(f, order, anchor, xf.get<double>()));
    } else {
        Table t{"derivatives", {"x", "deriv"}, {}};
        for (const auto& v : xf) {
            const double x = v.get<double>();
            t.rows.push_back({x, alpha_deriv(f, order, anchor, x)});
        }
        doc.tables.push_back(std::move(t));
    }
    return doc;
}

inline ResultDocument run_integrate(const ProblemSpec& spec, double tol) {
    const json& j = spec.params;
    const Order order(checked_alpha(j));
    const std::string side = get_string(j, "side", "left");
    const double a = require_number(j, "a");
    const double b = require_number(j, "b");
    QuadratureSettings qs;
    if (tol > 0.0) qs.abs_tol = qs.rel_tol = tol;
    const FunctionHandle f = handle_of_x(compiled(j, "f", {"x"}));
    const double value = side == "left" ? left_integral(f, order, a, b, qs)
                                        : right_integral(f, order, b, a, qs);
    ResultDocument doc{spec.kind, j, {}, {}};
    doc.scalars.emplace_back("value", value);
    return doc;
}

inline VariationalProblem variational_of(const json& j) {
    return VariationalProblem(lagrangian_of(compiled(j, "L", {"x", "y", "v"})),
                              require_number(j, "a"), require_number(j, "b"),
                              Order(checked_alpha(j)), require_number(j, "ya"),
                              require_number(j, "yb"));
}

inline SolverSettings solver_settings_of(const json& j, double tol) {
    SolverSettings ss;
    if (tol > 0.0) ss.residual_tol = tol;
    if (j.contains("grid_size")) ss.grid_size = std::size_t(require_number(j, "grid_size"));
    return ss;
}

inline Table trajectory_table(const GridFunction& y) {
    const GridFunction v = grid_alpha_deriv(y);
    Table t{"trajectory", {"x", "y", "v"}, {}};
    for (std::size_t i = 0; i < y.size(); ++i) t.rows.push_back({y.xs[i], y.ys[i], v.ys[i]});
    return t;
}

inline ResultDocument run_extremal(const ProblemSpec& spec, double tol) {
    const json& j = spec.params;
    const VariationalProblem prob = variational_of(j);
    const Extremal ext = solve_extremal(prob, solver_settings_of(j, tol));
    ResultDocument doc{spec.kind, j, {}, {}};
    doc.scalars.emplace_back("action", action_value(prob, ext.y));
    doc.scalars.emplace_back("el_residual_max", ext.el_residual_max);
    doc.scalars.emplace_back("boundary_error", ext.report.boundary_error);
    doc.scalars.emplace_back("shooting_parameter", ext.report.shooting_parameter);
    doc.scalars.emplace_back("iterations", double(ext.report.iterations));
    doc.scalars.emplace_back("grid_size", double(ext.report.grid_size));
    doc.tables.push_back(trajectory_table(ext.y));
    return doc;
}

inline ResultDocument run_dubois(const ProblemSpec& spec, double tol) {
    const json& j = spec.params;
    const VariationalProblem prob = variational_of(j);
    const Extremal ext = solve_extremal(prob, solver_settings_of(j, tol));
    const double dr = max_abs(interior(dubois_reymond_residual(prob, ext.y)));
    const Lagrangian L = prob.L;
    const ConservedQuantity energy{
        [L](double x, double y, double v) { return L(x, y, v) - L.dv(x, y, v) * v; },
        "autonomous energy L - v dL/dv"};
    ResultDocument doc{spec.kind, j, {}, {}};
    doc.scalars.emplace_back("el_residual_max", ext.el_residual_max);
    doc.scalars.emplace_back("dubois_residual_max", dr);
    doc.scalars.emplace_back("energy_drift", drift(energy, ext.y));
    doc.tables.push_back(trajectory_table(ext.y));
    return doc;
}

inline ResultDocument run_noether(const ProblemSpec& spec, double tol) {
    const json& j = spec.params;
    const VariationalProblem prob = variational_of(j);
    const Extremal ext = solve_extremal(prob, solver_settings_of(j, tol));
    TransformationFamily fam(fn2_of(compiled(j, "tau", {"x", "y"})),
                             fn2_of(compiled(j, "xi", {"x", "y"})));
    if (j.contains("gauge"))
        fam = TransformationFamily(fn2_of(compiled(j, "tau", {"x", "y"})),
                                   fn2_of(compiled(j, "xi", {"x", "y"})),
                                   fn2_of(compiled(j, "gauge", {"x", "y"})));
    const auto eps = get_number_array(j, "epsilons", {1e-2, 1e-3, 1e-4});
    const InvarianceReport report = invariance_report(prob, fam, ext.y, eps);
    const double balance = max_abs(noether_balance_residual(prob, fam, ext));

    ResultDocument doc{spec.kind, j, {}, {}};
    doc.scalars.emplace_back("invariance_residual_max", report.residual_max);
    doc.scalars.emplace_back("noether_balance_max", balance);
    try {
        const ConservedQuantity C = conserved_quantity_gauge(prob, fam);
        doc.scalars.emplace_back("conserved_drift", drift(C, ext.y));
    } catch (const HypothesisViolated&) {
        // Family has a horizontal component; the vertical-symmetry quantity
        // does not apply.
    }
    Table t{"defects", {"epsilon", "defect", "slope"}, {}};
    for (std::size_t i = 0; i < report.epsilon_sequence.size(); ++i)
        t.rows.push_back(
            {report.epsilon_sequence[i], report.defects[i], report.first_order_slopes[i]});
    doc.tables.push_back(std::move(t));
    return doc;
}

inline ResultDocument run_control(const ProblemSpec& spec, double tol) {
    const json& j = spec.params;
    const json& term = require_field(j, "terminal");
    const TerminalCondition terminal = require_string(term, "type") == "fixed"
                                           ? TerminalCondition::fixed(require_number(term, "yb"))
                                           : TerminalCondition::unconstrained();
    ControlProblem cp(lagrangian_of(compiled(j, "L", {"x", "y", "v"})),
                      lagrangian_of(compiled(j, "phi", {"x", "y", "v"})), require_number(j, "a"),
                      require_number(j, "b"), Order(checked_alpha(j)), require_number(j, "ya"),
                      terminal);
    const PontryaginTriple tr = solve_pontryagin(cp, solver_settings_of(j, tol));
    ResultDocument doc{spec.kind, j, {}, {}};
    doc.scalars.emplace_back("state_residual_max", tr.state_residual_max);
    doc.scalars.emplace_back("costate_residual_max", tr.costate_residual_max);
    doc.scalars.emplace_back("stationarity_residual_max", tr.stationarity_residual_max);
    doc.scalars.emplace_back("boundary_error", tr.report.boundary_error);
    doc.scalars.emplace_back("iterations", double(tr.report.iterations));
    doc.scalars.emplace_back("grid_size", double(tr.report.grid_size));
    Table t{"trajectory", {"x", "y", "v", "p"}, {}};
    for (std::size_t i = 0; i < tr.y.size(); ++i)
        t.rows.push_back({tr.y.xs[i], tr.y.ys[i], tr.v.ys[i], tr.p.ys[i]});
    doc.tables.push_back(std::move(t));
    return doc;
}

inline ResultDocument run_dissipative(const ProblemSpec& spec) {
    const json& j = spec.params;
    const FunctionHandle U = handle_of_x(compiled(j, "U", {"x"}), /*with_fd_deriv=*/true);
    const DissipativeSystem sys(require_number(j, "m"), require_number(j, "gamma"), U,
                                require_number(j, "x0"), require_number(j, "v0"));
    const LimitSchedule schedule(get_number_array(j, "widths", {0.2, 0.1, 0.05, 0.025}),
                                 get_bool(j, "extrapolate", true));
    const DissipativeResult result = simulate_with_limit(sys, require_number(j, "horizon"), schedule);

    ResultDocument doc{spec.kind, j, {}, {}};
    doc.scalars.emplace_back("extrapolated_sup_distance", result.report.extrapolated_sup_distance);
    Table conv{"convergence", {"width", "sup_distance"}, {}};
    for (std::size_t k = 0; k < result.report.widths.size(); ++k)
        conv.rows.push_back({result.report.widths[k], result.report.sup_distances[k]});
    doc.tables.push_back(std::move(conv));
    Table traj{"trajectories", {"t", "x", "x_ref", "width"}, {}};
    for (std::size_t k = 0; k < result.per_width.size(); ++k) {
        const GridFunction& g = result.per_width[k];
        for (std::size_t i = 0; i < g.size(); ++i)
            traj.rows.push_back({g.xs[i], g.ys[i], result.reference.ys[i], result.report.widths[k]});
    }
    doc.tables.push_back(std::move(traj));
    return doc;
}

inline ResultDocument run_green(const ProblemSpec& spec, double tol) {
    const json& j = spec.params;
    const Rectangle R(require_number(j, "a"), require_number(j, "b"), require_number(j, "c"),
                      require_number(j, "d"));
    QuadratureSettings qs;
    if (tol > 0.0) qs.abs_tol = qs.rel_tol = tol;
    const double residual = green_residual(field_of(compiled(j, "f", {"x1", "x2"})),
                                           field_of(compiled(j, "g", {"x1", "x2"})), R,
                                           Order(checked_alpha(j)), qs);
    ResultDocument doc{spec.kind, j, {}, {}};
    doc.scalars.emplace_back("residual", residual);
    return doc;
}

inline ResultDocument run_el2d(const ProblemSpec& spec) {
    const json& j = spec.params;
    const Rectangle R(require_number(j, "a"), require_number(j, "b"), require_number(j, "c"),
                      require_number(j, "d"));
    const Expression Lsrc = compiled(j, "L", {"x1", "x2", "y", "v1", "v2"});
    Lagrangian2D L(1, [Lsrc](double x1, double x2, std::span<const double> y,
                             std::span<const double> v) {
        const double args[5] = {x1, x2, y[0], v[0], v[1]};
        return Lsrc(std::span<const double>(args, 5));
    });
    const std::size_t lattice = std::size_t(get_number(j, "lattice", 33));
    const El2dResidual res =
        el2d_residual(L, {field_of(compiled(j, "y", {"x1", "x2"}))}, R, Order(checked_alpha(j)),
                      lattice);
    ResultDocument doc{spec.kind, j, {}, {}};
    doc.scalars.emplace_back("residual_max", res.max_abs);
    return doc;
}

}  // namespace detail

inline ResultDocument run_spec(const ProblemSpec& spec, double tol = 0.0) {
    if (spec.kind == "deriv") return detail::run_deriv(spec);
    if (spec.kind == "integrate") return detail::run_integrate(spec, tol);
    if (spec.kind == "extremal") return detail::run_extremal(spec, tol);
    if (spec.kind == "dubois") return detail::run_dubois(spec, tol);
    if (spec.kind == "noether-check") return detail::run_noether(spec, tol);
    if (spec.kind == "control") return detail::run_control(spec, tol);
    if (spec.kind == "dissipative-demo") return detail::run_dissipative(spec);
    if (spec.kind == "green-check") return detail::run_green(spec, tol);
    if (spec.kind == "el2d-check") return detail::run_el2d(spec);
    throw UnknownIdentifier("unknown problem kind '" + spec.kind + "'");
}

// ---------------------------------------------------------------------------
// Rendering.  Both formats are deterministic functions of the document.

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

}  // namespace detail

inline std::string render_json(const ResultDocument& doc) {
    json out;
    out["kind"] = doc.kind;
    out["spec"] = doc.spec;
    json scalars = json::object();
    for (const auto& [name, value] : doc.scalars) scalars[name] = value;
    out["scalars"] = scalars;
    json tables = json::object();
    for (const auto& t : doc.tables) {
        json jt;
        jt["columns"] = t.columns;
        jt["rows"] = t.rows;
        tables[t.name] = jt;
    }
    out["tables"] = tables;
    return out.dump(2) + "\n";
}

inline std::string render_csv(const ResultDocument& doc) {
    std::string out;
    out += "# kind = " + doc.kind + "\n";
    out += "# spec = " + doc.spec.dump() + "\n";
    for (const auto& [name, value] : doc.scalars)
        out += "# scalar " + name + " = " + detail::format_double(value) + "\n";
    for (const auto& t : doc.tables) {
        out += "## table " + t.name + "\n";
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            if (c) out += ",";
            out += t.columns[c];
        }
        out += "\n";
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out += ",";
                out += detail::format_double(row[c]);
            }
            out += "\n";
        }
    }
    return out;
}

inline std::string render(const ResultDocument& doc, const std::string& format) {
    if (format == "json") return render_json(doc);
    if (format == "csv") return render_csv(doc);
    throw InvalidValue("unknown output format '" + format + "' (expected json or csv)");
}

}  // namespace confrac::cli
