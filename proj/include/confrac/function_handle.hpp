#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "confrac/errors.hpp"
#include "confrac/numerics.hpp"

namespace confrac {

// A scalar function of one variable with optional caller-supplied derivatives.
// A claimed derivative is checked once, lazily, at the first point where it is
// used: it must agree with a central difference quotient to 1e-5 (relative),
// up to the quotient's own noise level.
class FunctionHandle {
  public:
    FunctionHandle() = default;
    explicit FunctionHandle(std::function<double(double)> value,
                            std::function<double(double)> deriv1 = nullptr,
                            std::function<double(double)> deriv2 = nullptr)
        : value_(std::move(value)),
          deriv1_(std::move(deriv1)),
          deriv2_(std::move(deriv2)),
          checked1_(std::make_shared<std::atomic<bool>>(false)),
          checked2_(std::make_shared<std::atomic<bool>>(false)) {}

    double operator()(double x) const { return value_(x); }
    const std::function<double(double)>& value() const { return value_; }

    bool has_deriv1() const { return static_cast<bool>(deriv1_); }
    bool has_deriv2() const { return static_cast<bool>(deriv2_); }

    double deriv1(double x) const {
        if (!deriv1_) throw MissingDerivative("FunctionHandle: deriv1 requested but not supplied");
        const double d = deriv1_(x);
        if (!checked1_->exchange(true)) {
            if (!derivative_claim_ok(value_, x, d))
                throw HypothesisViolated("FunctionHandle: supplied deriv1 disagrees with difference quotient");
        }
        return d;
    }

    double deriv2(double x) const {
        if (!deriv2_) throw MissingDerivative("FunctionHandle: deriv2 requested but not supplied");
        const double d = deriv2_(x);
        if (!checked2_->exchange(true)) {
            if (deriv1_ && !derivative_claim_ok(deriv1_, x, d))
                throw HypothesisViolated("FunctionHandle: supplied deriv2 disagrees with difference quotient");
        }
        return d;
    }

    // Derivative with finite-difference fallback when none was supplied.
    double deriv1_or_fd(double x) const { return deriv1_ ? deriv1(x) : central_diff(value_, x); }

  private:
    std::function<double(double)> value_;
    std::function<double(double)> deriv1_;
    std::function<double(double)> deriv2_;
    std::shared_ptr<std::atomic<bool>> checked1_;
    std::shared_ptr<std::atomic<bool>> checked2_;
};

// A scalar function of N variables with optional partial derivatives.
// Missing partials fall back to central differences in the k-th slot.
class MultiFunctionHandle {
  public:
    using Eval = std::function<double(std::span<const double>)>;

    MultiFunctionHandle() = default;
    MultiFunctionHandle(std::size_t arity, Eval value, std::vector<Eval> partials = {})
        : arity_(arity), value_(std::move(value)), partials_(std::move(partials)) {
        if (!partials_.empty() && partials_.size() != arity_)
            throw DimensionMismatch("MultiFunctionHandle: partials must be empty or one per argument");
    }

    std::size_t arity() const { return arity_; }

    double operator()(std::span<const double> args) const {
        if (args.size() != arity_) throw DimensionMismatch("MultiFunctionHandle: wrong argument count");
        return value_(args);
    }

    double partial(std::size_t k, std::span<const double> args) const {
        if (args.size() != arity_) throw DimensionMismatch("MultiFunctionHandle: wrong argument count");
        if (k >= arity_) throw DimensionMismatch("MultiFunctionHandle: partial index out of range");
        if (!partials_.empty() && partials_[k]) return partials_[k](args);
        std::vector<double> probe(args.begin(), args.end());
        const double x = probe[k];
        return central_diff(
            [&](double t) {
                probe[k] = t;
                return value_(probe);
            },
            x);
    }

  private:
    std::size_t arity_ = 0;
    Eval value_;
    std::vector<Eval> partials_;
};

}  // namespace confrac
