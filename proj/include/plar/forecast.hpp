#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "plar/backfit.hpp"
#include "plar/errors.hpp"
#include "plar/kernel.hpp"
#include "plar/model.hpp"

namespace plar::forecast {

/// Symmetric one-step prediction interval [point - s*q, point + s*q] at
/// asymptotic level alpha.
struct ForecastInterval {
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double alpha = 0.0;
    double sigma_at_e = 0.0;
    double q_alpha = 0.0;
};

/// Point predictor phi^T theta_hat + b_hat(e_next). `last_p_x` holds the
/// most recent observations first: (X_n, X_{n-1}, ..., X_{n-p+1}).
inline double predict_next(const backfit::EstimationResult& result,
                           std::span<const double> last_p_x, double e_next) {
    const int p = result.p();
    if (last_p_x.size() != static_cast<std::size_t>(p)) {
        throw InvalidInput("predict_next: need exactly p past values");
    }
    double linear = 0.0;
    for (int j = 0; j < p; ++j) {
        linear += result.theta[j] * last_p_x[static_cast<std::size_t>(j)];
    }
    return linear + kernel::nw_eval(result.b_hat, e_next);
}

/// Standardized retroactive prediction errors
/// (X_hat_{j+1} - X_{j+1}) / sigma_hat(e_{j+1}) for j = p..n-1, computed with
/// the final estimates. Length n - p.
inline std::vector<double> retro_residuals(const backfit::EstimationResult& result,
                                           const model::Trajectory& traj) {
    const int p = result.p();
    const int n = traj.n();
    if (n <= p) throw InvalidInput("retro_residuals: trajectory shorter than p");
    std::vector<double> out(static_cast<std::size_t>(n - p));
    for (int t = p; t < n; ++t) {
        double predicted = kernel::nw_eval(result.b_hat, traj.e[static_cast<std::size_t>(t)]);
        for (int j = 0; j < p; ++j) {
            predicted += result.theta[j] * traj.x[static_cast<std::size_t>(t - 1 - j)];
        }
        const double s2 = std::max(kernel::nw_eval(result.sigma2_hat,
                                                   traj.e[static_cast<std::size_t>(t)]),
                                   backfit::kVarianceFloor);
        out[static_cast<std::size_t>(t - p)] =
            (predicted - traj.x[static_cast<std::size_t>(t)]) / std::sqrt(s2);
    }
    return out;
}

/// Empirical inverse quantile: fraction of |residual| exceeding a.
inline double quantile_inverse(std::span<const double> std_residuals, double a) {
    if (std_residuals.empty()) throw InvalidInput("quantile_inverse: no residuals");
    if (!(a >= 0.0)) throw InvalidInput("quantile_inverse: threshold must be >= 0");
    std::size_t count = 0;
    for (double r : std_residuals) {
        if (std::abs(r) > a) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(std_residuals.size());
}

/// Empirical quantile of |residuals|: the ceil((1-alpha)*m)-th order
/// statistic, i.e. the smallest a with quantile_inverse(a) <= alpha.
inline double quantile(std::span<const double> std_residuals, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("quantile: alpha must be in (0, 1)");
    const std::size_t m = std_residuals.size();
    if (static_cast<double>(m) < std::ceil(2.0 / alpha)) {
        throw InsufficientData("quantile: need at least ceil(2/alpha) residuals");
    }
    std::vector<double> abs_r(m);
    for (std::size_t i = 0; i < m; ++i) abs_r[i] = std::abs(std_residuals[i]);
    const auto rank = static_cast<std::size_t>(
        std::ceil((1.0 - alpha) * static_cast<double>(m)));
    const std::size_t idx = rank == 0 ? 0 : rank - 1;
    std::nth_element(abs_r.begin(), abs_r.begin() + static_cast<std::ptrdiff_t>(idx),
                     abs_r.end());
    return abs_r[idx];
}

/// One-step prediction interval at asymptotic level alpha, standardized by
/// sigma_hat(e_next) and the in-sample residual quantile.
inline ForecastInterval interval(const backfit::EstimationResult& result,
                                 const model::Trajectory& traj,
                                 std::span<const double> last_p_x, double e_next,
                                 double alpha) {
    const auto residuals = retro_residuals(result, traj);
    ForecastInterval fi;
    fi.alpha = alpha;
    fi.point = predict_next(result, last_p_x, e_next);
    fi.q_alpha = quantile(residuals, alpha);
    fi.sigma_at_e = std::sqrt(
        std::max(kernel::nw_eval(result.sigma2_hat, e_next), backfit::kVarianceFloor));
    fi.lo = fi.point - fi.sigma_at_e * fi.q_alpha;
    fi.hi = fi.point + fi.sigma_at_e * fi.q_alpha;
    return fi;
}

/// Recursive multi-step point forecast: the AR part is fed its own
/// predictions while the exogenous inputs for the horizon are assumed
/// known. Interval construction stays one-step only.
inline std::vector<double> predict_path(const backfit::EstimationResult& result,
                                        std::span<const double> last_p_x,
                                        std::span<const double> e_future) {
    const int p = result.p();
    if (last_p_x.size() != static_cast<std::size_t>(p)) {
        throw InvalidInput("predict_path: need exactly p past values");
    }
    std::vector<double> window(last_p_x.begin(), last_p_x.end());
    std::vector<double> out;
    out.reserve(e_future.size());
    for (double e_next : e_future) {
        const double x_hat = predict_next(result, window, e_next);
        out.push_back(x_hat);
        for (std::size_t j = window.size(); j-- > 1;) window[j] = window[j - 1];
        window[0] = x_hat;
    }
    return out;
}

}  // namespace plar::forecast
