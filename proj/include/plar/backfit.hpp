#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plar/detail/parallel.hpp"
#include "plar/detail/sum.hpp"
#include "plar/domain.hpp"
#include "plar/errors.hpp"
#include "plar/kernel.hpp"
#include "plar/metrics.hpp"
#include "plar/model.hpp"

namespace plar::backfit {

inline constexpr double kConditionLimit = 1e12;
inline constexpr double kVarianceFloor = 1e-10;

struct StopMode {
    enum class Kind { FixedK, Stabilized };
    Kind kind = Kind::Stabilized;
    int k = 20;

    static StopMode fixed(int k) {
        if (k < 1) throw InvalidInput("StopMode: fixed iteration count must be >= 1");
        return {Kind::FixedK, k};
    }
    static StopMode stabilized() { return {Kind::Stabilized, 0}; }
};

struct BackfitConfig {
    /// Starting value for the coefficient vector; empty means zeros.
    Eigen::VectorXd theta_init;
    int max_iters = 200;
    double tol = 1e-3;
    kernel::Kernel kernel = kernel::Kernel::gaussian();
    kernel::BandwidthRule bw_b = kernel::BandwidthRule::empirical_sqrt();
    kernel::BandwidthRule bw_sigma = kernel::BandwidthRule::empirical_cbrt();
    StopMode stop_mode = StopMode::stabilized();
    /// Diagnostic hook: skip the kernel step and treat b as identically zero,
    /// reducing the update to the ordinary least-squares autoregression fit.
    bool zero_b = false;
    /// Evaluation domain override; defaults to the generating spec's input
    /// support when available, otherwise to the observed input range.
    std::optional<IntervalUnion> domain;

    void validate() const {
        if (!(tol > 0.0)) throw InvalidInput("BackfitConfig: tol must be > 0");
        if (max_iters < 1) throw InvalidInput("BackfitConfig: max_iters must be >= 1");
    }
};

struct EstimationResult {
    /// Coefficient estimate after each iteration, oldest first. The
    /// initialization itself is not stored; entry k-1 is the k-th update.
    std::vector<Eigen::VectorXd> theta_history;
    Eigen::VectorXd theta;
    kernel::FunctionEstimate b_hat;
    kernel::FunctionEstimate sigma2_hat;
    int k_stop = 0;
    /// False when a stabilized run hit max_iters before the increments
    /// dropped below tolerance.
    bool stabilized = true;
    Eigen::MatrixXd sigma_n_over_n;
    /// Standardized retroactive prediction errors (X_hat - X) / sigma_hat(e).
    std::vector<double> residuals;
    double h_b = 0.0;
    double h_sigma = 0.0;
    double sigma_n_condition = 0.0;

    int p() const { return static_cast<int>(theta.size()); }
};

/// Lagged design matrix: row l-p is (X_{l-1}, ..., X_{l-p}) for l = p+1..n.
inline Eigen::MatrixXd build_phi(const model::Trajectory& traj, int p) {
    const int n = traj.n();
    if (p < 1) throw InvalidInput("build_phi: p must be >= 1");
    if (n <= p) throw InvalidInput("build_phi: need n > p");
    Eigen::MatrixXd phi(n - p, p);
    for (int row = 0; row < n - p; ++row) {
        for (int j = 0; j < p; ++j) {
            phi(row, j) = traj.x[static_cast<std::size_t>(row + p - 1 - j)];
        }
    }
    return phi;
}

/// Sigma_n = sum_l phi_l phi_l^T (compensated accumulation).
inline Eigen::MatrixXd sigma_n(const Eigen::MatrixXd& phi) {
    if (phi.rows() == 0 || phi.cols() == 0) throw InvalidInput("sigma_n: empty design");
    const auto p = phi.cols();
    Eigen::MatrixXd sigma(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i; j < p; ++j) {
            detail::CompensatedSum acc;
            for (Eigen::Index l = 0; l < phi.rows(); ++l) acc.add(phi(l, i) * phi(l, j));
            sigma(i, j) = acc.value();
            sigma(j, i) = sigma(i, j);
        }
    }
    return sigma;
}

namespace detail_bf {

/// Response/input slices for the regression rows l = p+1..n.
inline std::span<const double> x_rows(const model::Trajectory& traj, int p) {
    return {traj.x.data() + p, traj.x.size() - static_cast<std::size_t>(p)};
}
inline std::span<const double> e_rows(const model::Trajectory& traj, int p) {
    return {traj.e.data() + p, traj.e.size() - static_cast<std::size_t>(p)};
}

inline IntervalUnion resolve_domain(const model::Trajectory& traj, int p,
                                    const BackfitConfig& cfg) {
    if (cfg.domain) return *cfg.domain;
    if (traj.truth) return traj.truth->domain();
    const auto e = e_rows(traj, p);
    const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
    return IntervalUnion::single(*lo, *hi);
}

/// Kernel smooths of the responses and of every design column, evaluated at
/// arbitrary points. When the weight mass underflows, the nearest design
/// row is substituted wholesale, which keeps the smooth affine in theta.
struct SmoothedDesign {
    Eigen::VectorXd sx;    // smooth of x at the evaluation points
    Eigen::MatrixXd sphi;  // smooth of each phi column
};

inline SmoothedDesign smooth_design(std::span<const double> eval_points,
                                    std::span<const double> e, std::span<const double> x,
                                    const Eigen::MatrixXd& phi, const kernel::Kernel& kern,
                                    double h, int threads = 1) {
    const std::size_t m = e.size();
    const auto p = phi.cols();
    if (x.size() != m || static_cast<std::size_t>(phi.rows()) != m || m == 0) {
        throw InvalidInput("smooth_design: inconsistent design sizes");
    }
    if (!(h > 0.0)) throw InvalidInput("smooth_design: bandwidth must be > 0");

    SmoothedDesign out;
    out.sx.resize(static_cast<Eigen::Index>(eval_points.size()));
    out.sphi.resize(static_cast<Eigen::Index>(eval_points.size()), p);

    const double inv_h = 1.0 / h;
    plar::detail::parallel_for(eval_points.size(), threads, [&](std::size_t begin,
                                                                std::size_t end) {
        std::vector<plar::detail::CompensatedSum> phi_acc(static_cast<std::size_t>(p));
        for (std::size_t i = begin; i < end; ++i) {
            const double e0 = eval_points[i];
            plar::detail::CompensatedSum den, num_x;
            for (auto& acc : phi_acc) acc = {};
            for (std::size_t j = 0; j < m; ++j) {
                const double w = kern((e0 - e[j]) * inv_h);
                den.add(w);
                num_x.add(w * x[j]);
                for (Eigen::Index c = 0; c < p; ++c) {
                    phi_acc[static_cast<std::size_t>(c)].add(w * phi(static_cast<Eigen::Index>(j), c));
                }
            }
            const double total = den.value();
            const auto row = static_cast<Eigen::Index>(i);
            if (total < kernel::kDenominatorGuard) {
                std::size_t nearest = 0;
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < m; ++j) {
                    const double dist = std::abs(e0 - e[j]);
                    if (dist < best || (dist == best && e[j] < e[nearest])) {
                        best = dist;
                        nearest = j;
                    }
                }
                out.sx[row] = x[nearest];
                out.sphi.row(row) = phi.row(static_cast<Eigen::Index>(nearest));
            } else {
                out.sx[row] = num_x.value() / total;
                for (Eigen::Index c = 0; c < p; ++c) {
                    out.sphi(row, c) = phi_acc[static_cast<std::size_t>(c)].value() / total;
                }
            }
        }
    });
    return out;
}

struct SigmaFactor {
    Eigen::MatrixXd sigma;
    Eigen::LDLT<Eigen::MatrixXd> ldlt;
    double condition = 0.0;
};

inline SigmaFactor factor_sigma_n(const Eigen::MatrixXd& phi) {
    SigmaFactor f;
    f.sigma = sigma_n(phi);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.sigma);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    f.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(lo > 0.0) || f.condition >= kConditionLimit) {
        throw NumericalDegeneracy(
            "backfit: Sigma_n is numerically singular (condition number " +
            std::to_string(f.condition) + ")");
    }
    f.ldlt.compute(f.sigma);
    return f;
}

/// sum_l phi_l * v_l, compensated per component.
inline Eigen::VectorXd weighted_phi_sum(const Eigen::MatrixXd& phi,
                                        std::span<const double> v) {
    const auto p = phi.cols();
    Eigen::VectorXd out(p);
    for (Eigen::Index c = 0; c < p; ++c) {
        plar::detail::CompensatedSum acc;
        for (Eigen::Index l = 0; l < phi.rows(); ++l) {
            acc.add(phi(l, c) * v[static_cast<std::size_t>(l)]);
        }
        out[c] = acc.value();
    }
    return out;
}

/// sum_l phi_l * s_l^T, compensated per entry.
inline Eigen::MatrixXd phi_outer_sum(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& s) {
    const auto p = phi.cols();
    Eigen::MatrixXd out(p, p);
    for (Eigen::Index a = 0; a < p; ++a) {
        for (Eigen::Index b = 0; b < p; ++b) {
            plar::detail::CompensatedSum acc;
            for (Eigen::Index l = 0; l < phi.rows(); ++l) acc.add(phi(l, a) * s(l, b));
            out(a, b) = acc.value();
        }
    }
    return out;
}

}  // namespace detail_bf

/// Contraction matrix of the backfitting error recursion:
/// A_n = Sigma_n^{-1} sum_l phi_l * [NW smooth of phi^T at e_l]. The update
/// map is theta -> const + A_n theta, so A_n's spectral radius governs how
/// fast the iterations stabilize. Diagnostic only.
inline Eigen::MatrixXd compute_An(const model::Trajectory& traj, const Eigen::MatrixXd& phi,
                                  const kernel::Kernel& kern, double h, int threads = 1) {
    const int p = static_cast<int>(phi.cols());
    if (traj.n() <= p || phi.rows() != traj.n() - p) {
        throw InvalidInput("compute_An: design does not match trajectory");
    }
    const auto e = detail_bf::e_rows(traj, p);
    const auto x = detail_bf::x_rows(traj, p);
    const auto factor = detail_bf::factor_sigma_n(phi);
    const auto smooths = detail_bf::smooth_design(e, e, x, phi, kern, h, threads);
    return factor.ldlt.solve(detail_bf::phi_outer_sum(phi, smooths.sphi));
}

struct BackfitStepResult {
    kernel::FunctionEstimate b_est;
    Eigen::VectorXd theta_next;
};

/// One literal transition: kernel fit of b on the partial residuals for
/// theta_prev, then the least-squares coefficient update against that fit.
inline BackfitStepResult backfit_step(const model::Trajectory& traj,
                                      const Eigen::MatrixXd& phi,
                                      const Eigen::VectorXd& theta_prev,
                                      const BackfitConfig& cfg) {
    cfg.validate();
    const int p = static_cast<int>(phi.cols());
    if (theta_prev.size() != p) throw InvalidInput("backfit_step: theta size mismatch");
    const auto e = detail_bf::e_rows(traj, p);
    const auto x = detail_bf::x_rows(traj, p);
    const auto m = static_cast<std::size_t>(phi.rows());
    const double h = bandwidth(cfg.bw_b, static_cast<std::size_t>(traj.n()), traj.e);
    const auto domain = detail_bf::resolve_domain(traj, p, cfg);

    std::vector<double> partial(m, 0.0);
    if (!cfg.zero_b) {
        for (std::size_t l = 0; l < m; ++l) {
            partial[l] = x[l] - phi.row(static_cast<Eigen::Index>(l)).dot(theta_prev);
        }
    }
    BackfitStepResult step{kernel::nw_fit(e, partial, cfg.kernel, h, domain), {}};

    const auto factor = detail_bf::factor_sigma_n(phi);
    std::vector<double> adjusted(m);
    for (std::size_t l = 0; l < m; ++l) {
        adjusted[l] = x[l] - (cfg.zero_b ? 0.0 : kernel::nw_eval(step.b_est, e[l]));
    }
    step.theta_next = factor.ldlt.solve(detail_bf::weighted_phi_sum(phi, adjusted));
    return step;
}

/// Full iterative estimator on pre-built regression rows. The kernel step
/// is affine in theta (b_fit(e) = smooth(x)(e) - smooth(phi)(e)^T theta), so
/// each iteration is evaluated through the precomputed smooths; the result
/// is the paper scheme with summation order fixed by the row order.
inline EstimationResult run_backfit_rows(const Eigen::MatrixXd& phi,
                                         std::span<const double> x,
                                         std::span<const double> e, int n_total,
                                         const IntervalUnion& domain,
                                         const BackfitConfig& cfg, double h_b,
                                         double h_sigma, int threads = 1) {
    cfg.validate();
    const int p = static_cast<int>(phi.cols());
    const auto m = static_cast<std::size_t>(phi.rows());
    if (x.size() != m || e.size() != m || m == 0) {
        throw InvalidInput("run_backfit_rows: inconsistent row sizes");
    }
    Eigen::VectorXd theta = cfg.theta_init;
    if (theta.size() == 0) theta = Eigen::VectorXd::Zero(p);
    if (theta.size() != p) throw InvalidInput("run_backfit_rows: theta_init size mismatch");

    const auto factor = detail_bf::factor_sigma_n(phi);
    const Eigen::VectorXd wx = detail_bf::weighted_phi_sum(phi, x);

    const auto grid = domain.grid(kernel::kGridPointsPerComponent);

    // theta -> affine_const + iteration_matrix * theta
    Eigen::VectorXd affine_const;
    Eigen::MatrixXd iteration_matrix;
    Eigen::VectorXd sx_design, gx_grid;
    Eigen::MatrixXd sphi_design, gphi_grid;
    if (cfg.zero_b) {
        affine_const = factor.ldlt.solve(wx);
        iteration_matrix = Eigen::MatrixXd::Zero(p, p);
        sx_design = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
        sphi_design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), p);
        gx_grid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
        gphi_grid = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.size()), p);
    } else {
        auto design = detail_bf::smooth_design(e, e, x, phi, cfg.kernel, h_b, threads);
        auto on_grid = detail_bf::smooth_design(grid, e, x, phi, cfg.kernel, h_b, threads);
        sx_design = std::move(design.sx);
        sphi_design = std::move(design.sphi);
        gx_grid = std::move(on_grid.sx);
        gphi_grid = std::move(on_grid.sphi);
        std::vector<double> sx_vec(sx_design.data(), sx_design.data() + sx_design.size());
        affine_const =
            factor.ldlt.solve(wx - detail_bf::weighted_phi_sum(phi, sx_vec));
        iteration_matrix = factor.ldlt.solve(detail_bf::phi_outer_sum(phi, sphi_design));
    }

    EstimationResult result;
    result.sigma_n_over_n = factor.sigma / static_cast<double>(n_total);
    result.sigma_n_condition = factor.condition;
    result.h_b = h_b;
    result.h_sigma = h_sigma;

    const bool fixed = cfg.stop_mode.kind == StopMode::Kind::FixedK;
    const int iter_cap = fixed ? cfg.stop_mode.k : cfg.max_iters;
    Eigen::VectorXd theta_for_b = theta;  // theta used in the latest kernel fit
    Eigen::VectorXd prev_grid_b;
    result.stabilized = fixed;
    for (int iter = 1; iter <= iter_cap; ++iter) {
        const Eigen::VectorXd grid_b = gx_grid - gphi_grid * theta;
        const Eigen::VectorXd theta_next = affine_const + iteration_matrix * theta;
        const double theta_inc = (theta_next - theta).norm();
        double b_inc = std::numeric_limits<double>::infinity();
        if (iter >= 2) {
            const Eigen::VectorXd diff = grid_b - prev_grid_b;
            b_inc = metrics::norms_on_grid(
                        domain, {diff.data(), static_cast<std::size_t>(diff.size())})
                        .n1;
        }
        prev_grid_b = grid_b;
        theta_for_b = theta;
        theta = theta_next;
        result.theta_history.push_back(theta);
        if (!fixed && iter >= 2 && std::max(theta_inc, b_inc) <= cfg.tol) {
            result.stabilized = true;
            break;
        }
    }
    result.k_stop = static_cast<int>(result.theta_history.size());
    result.theta = theta;

    // Final function estimates: b from the last kernel fit, then the
    // variance from the squared residuals of (theta_final, b_final).
    std::vector<double> partial(m);
    for (std::size_t l = 0; l < m; ++l) {
        partial[l] = cfg.zero_b
                         ? 0.0
                         : x[l] - phi.row(static_cast<Eigen::Index>(l)).dot(theta_for_b);
    }
    result.b_hat = kernel::nw_fit(e, partial, cfg.kernel, h_b, domain);

    Eigen::VectorXd b_design = sx_design - sphi_design * theta_for_b;
    std::vector<double> sq_resid(m);
    for (std::size_t l = 0; l < m; ++l) {
        const double r = x[l] - phi.row(static_cast<Eigen::Index>(l)).dot(theta) -
                         b_design[static_cast<Eigen::Index>(l)];
        sq_resid[l] = r * r;
    }
    result.sigma2_hat = kernel::nw_fit(e, sq_resid, cfg.kernel, h_sigma, domain);
    result.sigma2_hat.floor = kVarianceFloor;

    const Eigen::MatrixXd no_cols(static_cast<Eigen::Index>(m), 0);
    const auto sig_smooth =
        detail_bf::smooth_design(e, e, sq_resid, no_cols, cfg.kernel, h_sigma, threads);
    result.residuals.resize(m);
    for (std::size_t l = 0; l < m; ++l) {
        const double s2 = std::max(sig_smooth.sx[static_cast<Eigen::Index>(l)], kVarianceFloor);
        const double predicted = phi.row(static_cast<Eigen::Index>(l)).dot(theta) +
                                 b_design[static_cast<Eigen::Index>(l)];
        result.residuals[l] = (predicted - x[l]) / std::sqrt(s2);
    }
    return result;
}

/// Iterative backfitting estimator for an AR order p model on a trajectory.
inline EstimationResult run_backfit(const model::Trajectory& traj, int p,
                                    const BackfitConfig& cfg, int threads = 1) {
    cfg.validate();
    if (traj.n() <= p + 10) throw InvalidInput("run_backfit: need n > p + 10");
    const auto phi = build_phi(traj, p);
    const double h_b = bandwidth(cfg.bw_b, static_cast<std::size_t>(traj.n()), traj.e);
    const double h_sigma = bandwidth(cfg.bw_sigma, static_cast<std::size_t>(traj.n()), traj.e);
    return run_backfit_rows(phi, detail_bf::x_rows(traj, p), detail_bf::e_rows(traj, p),
                            traj.n(), detail_bf::resolve_domain(traj, p, cfg), cfg, h_b,
                            h_sigma, threads);
}

/// Kernel estimate of sigma^2: NW fit of the squared final residuals,
/// clamped below so later standardization stays finite.
inline kernel::FunctionEstimate estimate_variance(const model::Trajectory& traj,
                                                  const Eigen::MatrixXd& phi,
                                                  const Eigen::VectorXd& theta_hat,
                                                  const kernel::FunctionEstimate& b_hat,
                                                  const kernel::Kernel& kern,
                                                  double h_sigma) {
    const int p = static_cast<int>(phi.cols());
    if (theta_hat.size() != p) throw InvalidInput("estimate_variance: theta size mismatch");
    if (traj.n() <= p || phi.rows() != traj.n() - p) {
        throw InvalidInput("estimate_variance: design does not match trajectory");
    }
    const auto e = detail_bf::e_rows(traj, p);
    const auto x = detail_bf::x_rows(traj, p);
    std::vector<double> sq_resid(static_cast<std::size_t>(phi.rows()));
    for (std::size_t l = 0; l < sq_resid.size(); ++l) {
        const double r = x[l] - phi.row(static_cast<Eigen::Index>(l)).dot(theta_hat) -
                         kernel::nw_eval(b_hat, e[l]);
        sq_resid[l] = r * r;
    }
    auto fit = kernel::nw_fit(e, sq_resid, kern, h_sigma, b_hat.domain);
    fit.floor = kVarianceFloor;
    return fit;
}

}  // namespace plar::backfit
