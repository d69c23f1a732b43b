#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "plar/detail/stats.hpp"
#include "plar/domain.hpp"
#include "plar/errors.hpp"
#include "plar/kernel.hpp"
#include "plar/symbolic_fn.hpp"

namespace plar::metrics {

/// Domain-length-weighted L1 / L2 / sup norms. With d the total domain
/// length: N1 = d^{-1/2} int |h|, N2 = (int h^2)^{1/2}, Ninf = sqrt(d) sup|h|,
/// which always satisfy N1 <= N2 <= Ninf.
struct NormTriple {
    double n1 = 0.0;
    double n2 = 0.0;
    double ninf = 0.0;
};

struct DistanceTriple {
    double tv = 0.0;
    double hellinger = 0.0;
    double kolmogorov = 0.0;
};

/// Norm trio of a function given by its values on the canonical grid of
/// `domain` (trapezoid quadrature).
inline NormTriple norms_on_grid(const IntervalUnion& domain, std::span<const double> values,
                                int per_component = kernel::kGridPointsPerComponent) {
    const double d = domain.length();
    if (!(d > 0.0)) throw InvalidInput("norms_on_grid: domain has zero length");
    std::vector<double> abs_h(values.size()), sq_h(values.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        abs_h[i] = std::abs(values[i]);
        sq_h[i] = values[i] * values[i];
        sup = std::max(sup, abs_h[i]);
    }
    NormTriple t;
    t.n1 = domain.integrate(abs_h, per_component) / std::sqrt(d);
    t.n2 = std::sqrt(domain.integrate(sq_h, per_component));
    t.ninf = std::sqrt(d) * sup;
    return t;
}

/// Norms of (estimate - truth) over `domain`.
inline NormTriple fn_norms(const kernel::FunctionEstimate& est,
                           const std::function<double(double)>& truth,
                           const IntervalUnion& domain) {
    if (domain.empty() || !(domain.length() > 0.0)) {
        throw InvalidInput("fn_norms: empty domain");
    }
    const auto grid = domain.grid(kernel::kGridPointsPerComponent);
    std::vector<double> diff(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        diff[i] = kernel::nw_eval(est, grid[i]) - truth(grid[i]);
    }
    return norms_on_grid(domain, diff);
}

inline NormTriple fn_norms(const kernel::FunctionEstimate& est, const model::SymbolicFn& truth,
                           const IntervalUnion& domain) {
    return fn_norms(est, [&truth](double e) { return truth(e); }, domain);
}

namespace detail_dist {
inline constexpr double kGridLo = -6.0;
inline constexpr double kGridHi = 6.0;
inline constexpr int kGridPoints = 1201;
}  // namespace detail_dist

/// Distances between the standardized-residual distribution and the
/// standard normal: Kolmogorov on the empirical CDF, total variation and
/// Hellinger on a rule-of-thumb Gaussian KDE over [-6, 6] x 1201 points.
inline DistanceTriple noise_distances(std::span<const double> residuals) {
    const std::size_t m = residuals.size();
    if (m < 50) throw InsufficientData("noise_distances: need at least 50 residuals");

    std::vector<double> sorted(residuals.begin(), residuals.end());
    std::sort(sorted.begin(), sorted.end());

    DistanceTriple d;
    const double md = static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double cdf = plar::detail::normal_cdf(sorted[i]);
        const double hi = static_cast<double>(i + 1) / md - cdf;
        const double lo = cdf - static_cast<double>(i) / md;
        d.kolmogorov = std::max({d.kolmogorov, std::abs(hi), std::abs(lo)});
    }

    // KDE with the 1.06 * sd * m^{-1/5} rule, floored at the grid step so a
    // degenerate sample still yields an integrable spike.
    const double step = (detail_dist::kGridHi - detail_dist::kGridLo) /
                        (detail_dist::kGridPoints - 1);
    double sd = 0.0;
    {
        const double mu = plar::detail::mean(sorted);
        plar::detail::CompensatedSum acc;
        for (double r : sorted) acc.add((r - mu) * (r - mu));
        sd = std::sqrt(acc.value() / static_cast<double>(m - 1));
    }
    const double h_kde = std::max(1.06 * sd * std::pow(md, -0.2), step);

    std::vector<double> tv_int(detail_dist::kGridPoints), he_int(detail_dist::kGridPoints);
    for (int g = 0; g < detail_dist::kGridPoints; ++g) {
        const double xg = detail_dist::kGridLo + step * g;
        plar::detail::CompensatedSum acc;
        for (double r : sorted) acc.add(plar::detail::normal_pdf((xg - r) / h_kde));
        const double f_hat = acc.value() / (md * h_kde);
        const double phi = plar::detail::normal_pdf(xg);
        tv_int[static_cast<std::size_t>(g)] = std::abs(f_hat - phi);
        const double ds = std::sqrt(f_hat) - std::sqrt(phi);
        he_int[static_cast<std::size_t>(g)] = ds * ds;
    }
    const auto domain = IntervalUnion::single(detail_dist::kGridLo, detail_dist::kGridHi);
    d.tv = 0.5 * domain.integrate(tv_int, detail_dist::kGridPoints);
    d.hellinger = std::sqrt(0.5 * domain.integrate(he_int, detail_dist::kGridPoints));
    d.tv = std::clamp(d.tv, 0.0, 1.0);
    d.hellinger = std::clamp(d.hellinger, 0.0, 1.0);
    return d;
}

/// Log-log least squares of error against (ln n)/n: error ~ c * ((ln n)/n)^slope.
struct RateFit {
    double slope = 0.0;
    double c_hat = 0.0;
};

inline RateFit fit_rate(std::span<const int> ns, std::span<const double> errors) {
    if (ns.size() != errors.size()) throw InvalidInput("fit_rate: length mismatch");
    std::vector<int> distinct(ns.begin(), ns.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 4) throw InvalidInput("fit_rate: need >= 4 distinct sample sizes");

    std::vector<double> u(ns.size()), y(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (ns[i] < 2) throw InvalidInput("fit_rate: sample sizes must be >= 2");
        if (!(errors[i] > 0.0)) throw InvalidInput("fit_rate: errors must be positive");
        const double nd = static_cast<double>(ns[i]);
        u[i] = std::log(std::log(nd) / nd);
        y[i] = std::log(errors[i]);
    }
    const double u_bar = plar::detail::mean(u);
    const double y_bar = plar::detail::mean(y);
    plar::detail::CompensatedSum sxy, sxx;
    for (std::size_t i = 0; i < u.size(); ++i) {
        sxy.add((u[i] - u_bar) * (y[i] - y_bar));
        sxx.add((u[i] - u_bar) * (u[i] - u_bar));
    }
    RateFit fit;
    fit.slope = sxy.value() / sxx.value();
    fit.c_hat = std::exp(y_bar - fit.slope * u_bar);
    return fit;
}

/// Per-replication estimation scorecard.
struct ErrorReport {
    double theta_err = 0.0;
    NormTriple b_err;
    NormTriple sigma_err;  // norms of (sigma2_hat - sigma^2)
    DistanceTriple noise_dist;
    int n = 0;
    int k_stop = 0;
};

}  // namespace plar::metrics
