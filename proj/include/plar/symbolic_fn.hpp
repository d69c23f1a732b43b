#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "plar/errors.hpp"

namespace plar::model {

/// Closed-form scalar function used for the regression part b(e) and the
/// noise scale sigma(e) of a generative model. Every variant is total on
/// the real line and carries a declared Hoelder smoothness exponent that
/// the theoretical bandwidth rules consume.
class SymbolicFn {
public:
    enum class Kind { Zero, Constant, SqrtAbs, QuadraticAffine, PiecewiseLinear };

    SymbolicFn() : SymbolicFn(zero()) {}

    static SymbolicFn zero() { return SymbolicFn(Kind::Zero, {}, 1.0); }

    static SymbolicFn constant(double c) { return SymbolicFn(Kind::Constant, {c}, 1.0); }

    /// b(e) = sqrt(|e|); Hoelder with exponent 1/2 at the origin.
    static SymbolicFn sqrt_abs() { return SymbolicFn(Kind::SqrtAbs, {}, 0.5); }

    /// f(e) = c0 + c2 * e^2 (Lipschitz on any compact set).
    static SymbolicFn quadratic_affine(double c0, double c2) {
        return SymbolicFn(Kind::QuadraticAffine, {c0, c2}, 1.0);
    }

    /// Piecewise-linear interpolation through (e, value) knots, constant
    /// beyond the first/last knot.
    static SymbolicFn piecewise_linear(std::vector<std::array<double, 2>> knots) {
        if (knots.empty()) throw InvalidInput("SymbolicFn: no knots");
        std::sort(knots.begin(), knots.end(),
                  [](const auto& a, const auto& b) { return a[0] < b[0]; });
        std::vector<double> params;
        params.reserve(knots.size() * 2);
        for (const auto& k : knots) {
            params.push_back(k[0]);
            params.push_back(k[1]);
        }
        return SymbolicFn(Kind::PiecewiseLinear, std::move(params), 1.0);
    }

    double operator()(double e) const {
        switch (kind_) {
            case Kind::Zero:
                return 0.0;
            case Kind::Constant:
                return params_[0];
            case Kind::SqrtAbs:
                return std::sqrt(std::abs(e));
            case Kind::QuadraticAffine:
                return params_[0] + params_[1] * e * e;
            case Kind::PiecewiseLinear: {
                const std::size_t m = params_.size() / 2;
                if (e <= params_[0]) return params_[1];
                if (e >= params_[2 * (m - 1)]) return params_[2 * (m - 1) + 1];
                for (std::size_t i = 1; i < m; ++i) {
                    const double x0 = params_[2 * (i - 1)], y0 = params_[2 * (i - 1) + 1];
                    const double x1 = params_[2 * i], y1 = params_[2 * i + 1];
                    if (e <= x1) {
                        const double t = x1 > x0 ? (e - x0) / (x1 - x0) : 0.0;
                        return y0 + t * (y1 - y0);
                    }
                }
                return params_.back();
            }
        }
        return 0.0;
    }

    Kind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }

    /// Declared smoothness exponent in (0, 1].
    double holder_exponent() const { return gamma_; }

    SymbolicFn& with_holder_exponent(double gamma) {
        if (!(gamma > 0.0 && gamma <= 1.0)) {
            throw InvalidInput("SymbolicFn: Hoelder exponent must be in (0, 1]");
        }
        gamma_ = gamma;
        return *this;
    }

private:
    SymbolicFn(Kind kind, std::vector<double> params, double gamma)
        : kind_(kind), params_(std::move(params)), gamma_(gamma) {}

    Kind kind_;
    std::vector<double> params_;
    double gamma_;
};

}  // namespace plar::model
