#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plar/domain.hpp"
#include "plar/errors.hpp"
#include "plar/rng.hpp"
#include "plar/symbolic_fn.hpp"

namespace plar::model {

/// Zero-mean scalar noise law. Uniform laws are used for the exogenous
/// perturbation (bounded by hypothesis), Gaussian or truncated Gaussian for
/// the unit-variance system noise.
struct NoiseLaw {
    enum class Kind { Uniform, Gaussian, TruncGaussian };

    Kind kind = Kind::Gaussian;
    /// Uniform: half-width of the support; TruncGaussian: cut in sd units.
    double param = 0.0;

    static NoiseLaw uniform(double half_width) {
        if (!(half_width > 0.0)) throw InvalidInput("NoiseLaw: half width must be > 0");
        return {Kind::Uniform, half_width};
    }
    static NoiseLaw gaussian() { return {Kind::Gaussian, 0.0}; }
    /// Gaussian conditioned on |z| <= cut. At cut = 8 the variance deficit
    /// is ~1e-14, so the law still counts as unit-variance.
    static NoiseLaw trunc_gaussian(double cut = 8.0) {
        if (!(cut > 0.0)) throw InvalidInput("NoiseLaw: cut must be > 0");
        return {Kind::TruncGaussian, cut};
    }

    bool bounded() const { return kind != Kind::Gaussian; }

    /// sup |support|; infinite for the plain Gaussian.
    double bound() const {
        switch (kind) {
            case Kind::Uniform: return param;
            case Kind::TruncGaussian: return param;
            case Kind::Gaussian: return std::numeric_limits<double>::infinity();
        }
        return 0.0;
    }

    double sample(PhiloxRng& rng) const {
        switch (kind) {
            case Kind::Uniform: return rng.uniform(-param, param);
            case Kind::Gaussian: return rng.gaussian();
            case Kind::TruncGaussian: return rng.truncated_gaussian(param);
        }
        return 0.0;
    }
};

struct StabilityReport {
    bool stable = false;
    std::vector<std::complex<double>> roots;  // sorted by (re, im)
    double spectral_radius = 0.0;
};

/// Roots of A(z) = z^p - sum_j a_j z^{p-j} via the companion matrix;
/// stable when every root lies strictly inside the unit disc.
inline StabilityReport check_stability(const Eigen::VectorXd& theta) {
    const auto p = theta.size();
    if (p == 0) throw InvalidInput("check_stability: empty coefficient vector");
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!std::isfinite(theta[j])) {
            throw InvalidInput("check_stability: non-finite coefficient");
        }
    }

    StabilityReport report;
    if (p == 1) {
        report.roots = {std::complex<double>(theta[0], 0.0)};
    } else {
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
        companion.row(0) = theta.transpose();
        companion.block(1, 0, p - 1, p - 1).setIdentity();
        Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
        report.roots.reserve(static_cast<std::size_t>(p));
        for (Eigen::Index j = 0; j < p; ++j) {
            report.roots.push_back(solver.eigenvalues()[j]);
        }
        std::sort(report.roots.begin(), report.roots.end(),
                  [](const std::complex<double>& a, const std::complex<double>& b) {
                      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
                  });
    }
    for (const auto& r : report.roots) {
        report.spectral_radius = std::max(report.spectral_radius, std::abs(r));
    }
    report.stable = report.spectral_radius < 1.0;
    return report;
}

/// Coefficients (a_1, ..., a_p) with z^p - sum_j a_j z^{p-j} = prod (z - r_i).
inline Eigen::VectorXd coeffs_from_roots(std::span<const double> roots) {
    if (roots.empty()) throw InvalidInput("coeffs_from_roots: empty root list");
    // Monic expansion by repeated convolution, highest degree first.
    std::vector<double> poly{1.0};
    for (double r : roots) {
        if (!std::isfinite(r)) throw InvalidInput("coeffs_from_roots: non-finite root");
        std::vector<double> next(poly.size() + 1, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            next[i] += poly[i];
            next[i + 1] -= r * poly[i];
        }
        poly = std::move(next);
    }
    Eigen::VectorXd theta(static_cast<Eigen::Index>(roots.size()));
    for (std::size_t j = 1; j < poly.size(); ++j) {
        theta[static_cast<Eigen::Index>(j - 1)] = -poly[j];
    }
    return theta;
}

/// Full generative description of the periodically correlated partially
/// linear autoregression.
struct ModelSpec {
    int p = 1;
    Eigen::VectorXd theta;
    SymbolicFn b_fn;
    SymbolicFn sigma_fn;
    int period_T = 1;
    std::vector<double> seasonal_s;
    NoiseLaw eta_law = NoiseLaw::uniform(1.0);
    NoiseLaw eps_law = NoiseLaw::gaussian();
    std::uint64_t seed = 0;

    /// Support of the exogenous inputs: union of the per-phase supports.
    IntervalUnion domain() const {
        if (!eta_law.bounded()) {
            throw InvalidInput("ModelSpec: exogenous noise law must be bounded");
        }
        return IntervalUnion::from_centers(seasonal_s, eta_law.bound());
    }

    /// Validates the structural hypotheses: stability, bounded zero-mean
    /// exogenous noise, positive noise scale on the support, matching sizes.
    void validate() const {
        if (p <= 0 || theta.size() != p) {
            throw InvalidInput("ModelSpec: theta must have length p > 0");
        }
        if (period_T <= 0 || seasonal_s.size() != static_cast<std::size_t>(period_T)) {
            throw InvalidInput("ModelSpec: seasonal_s must have length period_T > 0");
        }
        if (!check_stability(theta).stable) {
            throw StabilityError("ModelSpec: autoregression is not stable");
        }
        if (!eta_law.bounded()) {
            throw InvalidInput("ModelSpec: eta law must have bounded support");
        }
        const auto dom = domain();
        double inf_sigma = std::numeric_limits<double>::infinity();
        for (double e : dom.grid(512)) inf_sigma = std::min(inf_sigma, sigma_fn(e));
        if (!(inf_sigma > 0.0)) {
            throw InvalidInput("ModelSpec: sigma must be positive on the input domain");
        }
    }
};

/// Observed or simulated series. x[t] and e[t] store X_{t+1} and e_{t+1}
/// (1-based series indices map to 0-based storage).
struct Trajectory {
    std::vector<double> x;
    std::vector<double> e;
    std::optional<ModelSpec> truth;
    std::uint64_t seed_used = 0;
    std::uint64_t stream_used = 0;

    int n() const { return static_cast<int>(x.size()); }
};

/// Burn-in long enough that the geometric start-up transient is below
/// 1e-12 relative: max(500, log(1e-12)/log(spectral radius)).
inline int default_burn_in(double spectral_radius) {
    if (!(spectral_radius > 0.0) || spectral_radius >= 1.0) return 500;
    return std::max(500, static_cast<int>(std::ceil(std::log(1e-12) / std::log(spectral_radius))));
}

/// Simulates n observations of the model after discarding `burn_in` start-up
/// samples (automatic transient-killing length when omitted). `stream`
/// selects a reproducible generator stream; replications should use distinct
/// streams. `x_init` optionally sets the pre-sample values (most recent
/// first); zeros otherwise. Deterministic given all arguments.
inline Trajectory simulate(const ModelSpec& spec, int n,
                           std::optional<int> burn_in = std::nullopt,
                           std::uint64_t stream = 0,
                           std::span<const double> x_init = {}) {
    if (spec.theta.size() != spec.p || spec.p <= 0) {
        throw InvalidInput("simulate: theta must have length p > 0");
    }
    if (n <= spec.p) throw InvalidInput("simulate: need n > p");
    if (spec.seasonal_s.size() != static_cast<std::size_t>(spec.period_T) || spec.period_T <= 0) {
        throw InvalidInput("simulate: seasonal_s must have length period_T");
    }
    const auto stability = check_stability(spec.theta);
    if (!stability.stable) {
        throw StabilityError("simulate: unstable autoregression (spectral radius " +
                             std::to_string(stability.spectral_radius) + ")");
    }
    if (!x_init.empty() && x_init.size() != static_cast<std::size_t>(spec.p)) {
        throw InvalidInput("simulate: x_init must have length p");
    }

    const int burn = burn_in.value_or(default_burn_in(stability.spectral_radius));
    if (burn < 0) throw InvalidInput("simulate: negative burn_in");

    PhiloxRng eta_rng(spec.seed, 2 * stream);
    PhiloxRng eps_rng(spec.seed, 2 * stream + 1);

    // prev[j] = X_{t-1-j}, most recent first.
    std::vector<double> prev(static_cast<std::size_t>(spec.p), 0.0);
    for (std::size_t j = 0; j < x_init.size(); ++j) prev[j] = x_init[j];

    Trajectory traj;
    traj.x.reserve(static_cast<std::size_t>(n));
    traj.e.reserve(static_cast<std::size_t>(n));
    const int T = spec.period_T;
    for (int t = 1 - burn; t <= n; ++t) {
        const int phase = ((t % T) + T) % T;
        const double e_t = spec.seasonal_s[static_cast<std::size_t>(phase)] +
                           spec.eta_law.sample(eta_rng);
        double x_t = spec.b_fn(e_t) + spec.sigma_fn(e_t) * spec.eps_law.sample(eps_rng);
        for (int j = 0; j < spec.p; ++j) {
            x_t += spec.theta[j] * prev[static_cast<std::size_t>(j)];
        }
        for (int j = spec.p - 1; j > 0; --j) {
            prev[static_cast<std::size_t>(j)] = prev[static_cast<std::size_t>(j - 1)];
        }
        prev[0] = x_t;
        if (t >= 1) {
            traj.x.push_back(x_t);
            traj.e.push_back(e_t);
        }
    }
    traj.truth = spec;
    traj.seed_used = spec.seed;
    traj.stream_used = stream;
    return traj;
}

}  // namespace plar::model
