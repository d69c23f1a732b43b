#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plar/detail/stats.hpp"
#include "plar/detail/sum.hpp"
#include "plar/domain.hpp"
#include "plar/errors.hpp"

namespace plar::kernel {

/// When the kernel mass at an evaluation point falls below this, the
/// smoother falls back to the nearest design point's response.
inline constexpr double kDenominatorGuard = 1e-12;

/// Evaluation-grid resolution per connected domain component, shared by the
/// norm quadratures, the stopping rule and the CSV exports.
inline constexpr int kGridPointsPerComponent = 200;

/// Smoothing kernel. Gaussian and Epanechnikov are the standard choices;
/// higher_order(l) is a polynomial-times-Gaussian kernel whose moments of
/// order 1..l vanish, buying a faster bias rate for smooth targets.
class Kernel {
public:
    enum class Family { Gaussian, Epanechnikov, HigherOrder };

    Kernel() : Kernel(gaussian()) {}

    static Kernel gaussian() { return Kernel(Family::Gaussian, 0, {}); }
    static Kernel epanechnikov() { return Kernel(Family::Epanechnikov, 0, {}); }

    static Kernel higher_order(int ell) {
        if (ell < 2) throw InvalidInput("Kernel: higher_order needs ell >= 2");
        return Kernel(Family::HigherOrder, ell, solve_moment_coeffs(ell));
    }

    double operator()(double u) const {
        switch (family_) {
            case Family::Gaussian:
                return detail::normal_pdf(u);
            case Family::Epanechnikov:
                return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
            case Family::HigherOrder: {
                double poly = 0.0;
                const double u2 = u * u;
                for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
                    poly = poly * u2 + *it;
                }
                return poly * detail::normal_pdf(u);
            }
        }
        return 0.0;
    }

    Family family() const { return family_; }
    int order() const { return ell_; }
    const std::vector<double>& poly_coeffs() const { return coeffs_; }

private:
    Kernel(Family family, int ell, std::vector<double> coeffs)
        : family_(family), ell_(ell), coeffs_(std::move(coeffs)) {}

    // Even polynomial c_0 + c_1 u^2 + ... + c_m u^{2m} (m = floor(ell/2))
    // against the Gaussian weight: unit mass and vanishing even moments up
    // to ell. Odd moments vanish by symmetry. Gaussian even moments are the
    // double factorials M_{2k} = (2k-1)!!.
    static std::vector<double> solve_moment_coeffs(int ell) {
        const int m = ell / 2;
        auto gauss_moment = [](int even_order) {
            double v = 1.0;
            for (int k = 1; k < even_order; k += 2) v *= k;
            return v;
        };
        Eigen::MatrixXd system(m + 1, m + 1);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
        rhs[0] = 1.0;
        for (int row = 0; row <= m; ++row) {
            for (int col = 0; col <= m; ++col) {
                system(row, col) = gauss_moment(2 * row + 2 * col);
            }
        }
        const Eigen::VectorXd c = system.fullPivLu().solve(rhs);
        return {c.data(), c.data() + c.size()};
    }

    Family family_;
    int ell_;
    std::vector<double> coeffs_;
};

inline double kernel_eval(const Kernel& k, double u) {
    if (!std::isfinite(u)) throw InvalidInput("kernel_eval: non-finite argument");
    return k(u);
}

/// Bandwidth selection rule. The two empirical rules scale the input
/// standard deviation (the defaults for the regression and variance fits);
/// the theoretical rules implement the rate-optimal (ln n / n) exponents.
struct BandwidthRule {
    enum class Kind {
        EmpiricalSqrt,      // 1.5 * S_e * n^{-1/2}
        EmpiricalCbrt,      // 0.15 * S_e * n^{-1/3}
        Theoretical,        // (ln n / n)^{1/(2*gamma+1)}
        TheoreticalSmooth,  // (ln n / n)^{1/(2*ell+1)}
        Explicit,
    };

    Kind kind = Kind::EmpiricalSqrt;
    double gamma = 0.5;
    int ell = 2;
    double h = 0.0;

    static BandwidthRule empirical_sqrt() { return {Kind::EmpiricalSqrt, 0, 0, 0}; }
    static BandwidthRule empirical_cbrt() { return {Kind::EmpiricalCbrt, 0, 0, 0}; }
    static BandwidthRule theoretical(double gamma) {
        if (!(gamma > 0.0 && gamma <= 1.0)) {
            throw InvalidInput("BandwidthRule: gamma must be in (0, 1]");
        }
        return {Kind::Theoretical, gamma, 0, 0};
    }
    static BandwidthRule theoretical_smooth(int ell) {
        if (ell < 2) throw InvalidInput("BandwidthRule: ell must be >= 2");
        return {Kind::TheoreticalSmooth, 0, ell, 0};
    }
    static BandwidthRule explicit_h(double h) {
        if (!(h > 0.0)) throw InvalidInput("BandwidthRule: explicit h must be > 0");
        return {Kind::Explicit, 0, 0, h};
    }

    bool data_dependent() const { return kind == Kind::EmpiricalSqrt || kind == Kind::EmpiricalCbrt; }
};

/// Resolves a bandwidth rule at sample size n. The data-dependent rules use
/// the empirical (1/n) standard deviation of the exogenous inputs.
inline double bandwidth(const BandwidthRule& rule, std::size_t n, std::span<const double> e) {
    if (n < 2) throw InvalidInput("bandwidth: need n >= 2");
    double s_e = 0.0;
    if (rule.data_dependent()) {
        if (e.empty()) throw InvalidInput("bandwidth: data-dependent rule needs inputs");
        s_e = detail::stddev(e, /*ddof=*/0);
        if (!(s_e > 0.0)) {
            throw DegenerateInput("bandwidth: zero-variance exogenous inputs");
        }
    }
    const double nd = static_cast<double>(n);
    switch (rule.kind) {
        case BandwidthRule::Kind::EmpiricalSqrt:
            return 1.5 * s_e / std::sqrt(nd);
        case BandwidthRule::Kind::EmpiricalCbrt:
            return 0.15 * s_e / std::cbrt(nd);
        case BandwidthRule::Kind::Theoretical:
            return std::pow(std::log(nd) / nd, 1.0 / (2.0 * rule.gamma + 1.0));
        case BandwidthRule::Kind::TheoreticalSmooth:
            return std::pow(std::log(nd) / nd, 1.0 / (2.0 * rule.ell + 1.0));
        case BandwidthRule::Kind::Explicit:
            return rule.h;
    }
    throw InvalidInput("bandwidth: unknown rule");
}

/// Evaluable Nadaraya-Watson estimate: design points, responses (partial
/// residuals), bandwidth and kernel. Immutable after construction; safe to
/// evaluate concurrently.
struct FunctionEstimate {
    std::vector<double> sample_e;
    std::vector<double> sample_r;
    double bandwidth = 1.0;
    Kernel kernel;
    IntervalUnion domain;
    /// Lower clamp applied at evaluation (used by the variance estimate).
    std::optional<double> floor;
};

inline FunctionEstimate nw_fit(std::span<const double> e, std::span<const double> r,
                               const Kernel& kernel, double h, IntervalUnion domain) {
    if (e.size() != r.size()) throw InvalidInput("nw_fit: design/response length mismatch");
    if (e.empty()) throw InvalidInput("nw_fit: empty sample");
    if (!(h > 0.0)) throw InvalidInput("nw_fit: bandwidth must be > 0");
    return FunctionEstimate{{e.begin(), e.end()},
                            {r.begin(), r.end()},
                            h,
                            kernel,
                            std::move(domain),
                            std::nullopt};
}

/// Kernel-weighted average of the responses at e0. Falls back to the
/// response of the nearest design point when the weight mass underflows
/// (ties broken on (distance, e, r), so the result is order-independent).
inline double nw_eval(const FunctionEstimate& fe, double e0) {
    if (!std::isfinite(e0)) throw InvalidInput("nw_eval: non-finite evaluation point");
    detail::CompensatedSum num, den;
    const double inv_h = 1.0 / fe.bandwidth;
    for (std::size_t l = 0; l < fe.sample_e.size(); ++l) {
        const double w = fe.kernel((e0 - fe.sample_e[l]) * inv_h);
        num.add(w * fe.sample_r[l]);
        den.add(w);
    }
    double value;
    if (den.value() < kDenominatorGuard) {
        double best_dist = std::numeric_limits<double>::infinity();
        double best_e = 0.0;
        value = 0.0;
        for (std::size_t l = 0; l < fe.sample_e.size(); ++l) {
            const double dist = std::abs(e0 - fe.sample_e[l]);
            const bool better =
                dist < best_dist ||
                (dist == best_dist &&
                 (fe.sample_e[l] < best_e || (fe.sample_e[l] == best_e && fe.sample_r[l] < value)));
            if (better) {
                best_dist = dist;
                best_e = fe.sample_e[l];
                value = fe.sample_r[l];
            }
        }
    } else {
        value = num.value() / den.value();
    }
    if (fe.floor && value < *fe.floor) value = *fe.floor;
    return value;
}

inline std::vector<double> nw_eval_grid(const FunctionEstimate& fe,
                                        std::span<const double> points) {
    std::vector<double> out;
    out.reserve(points.size());
    for (double e0 : points) out.push_back(nw_eval(fe, e0));
    return out;
}

/// Values of the estimate on the canonical evaluation grid of its domain.
inline std::vector<double> eval_on_domain_grid(const FunctionEstimate& fe,
                                               int per_component = kGridPointsPerComponent) {
    return nw_eval_grid(fe, fe.domain.grid(per_component));
}

}  // namespace plar::kernel
