#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "oracles.hpp"
#include "plar/harness.hpp"
#include "plar/model.hpp"
#include "plar/rng.hpp"

using namespace plar;
using Catch::Approx;

namespace {
Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

std::vector<double> sorted_real_roots(const model::StabilityReport& rep) {
    std::vector<double> roots;
    for (const auto& r : rep.roots) roots.push_back(r.real());
    std::sort(roots.begin(), roots.end());
    return roots;
}
}  // namespace

TEST_CASE("AR(1) stability is the coefficient modulus", "[model]") {
    const auto stable = model::check_stability(vec({0.7}));
    CHECK(stable.stable);
    CHECK(stable.roots[0].real() == Approx(0.7));
    CHECK(stable.roots[0].imag() == 0.0);

    const auto unstable = model::check_stability(vec({1.5}));
    CHECK(!unstable.stable);
    CHECK(unstable.roots[0].real() == Approx(1.5));
}

TEST_CASE("order-4 coefficients recover the designed roots", "[model]") {
    // Independent polynomial expansion of (z-0.5)(z+0.5)(z-0.75)(z-0.25).
    const std::vector<double> roots{0.5, -0.5, 0.75, 0.25};
    const auto poly = oracles::expand_roots(roots);
    REQUIRE(poly.size() == 5);
    const Eigen::VectorXd expected_theta = vec({-poly[1], -poly[2], -poly[3], -poly[4]});
    CHECK(expected_theta[0] == Approx(1.0).margin(1e-14));
    CHECK(expected_theta[1] == Approx(0.0625).margin(1e-14));
    CHECK(expected_theta[2] == Approx(-0.25).margin(1e-14));
    CHECK(expected_theta[3] == Approx(0.046875).margin(1e-14));

    const auto theta = model::coeffs_from_roots(roots);
    CHECK((theta - expected_theta).norm() < 1e-14);

    const auto report = model::check_stability(theta);
    CHECK(report.stable);
    auto recovered = sorted_real_roots(report);
    std::vector<double> want = roots;
    std::sort(want.begin(), want.end());
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(recovered[i] == Approx(want[i]).margin(1e-10));
        CHECK(std::abs(report.roots[i].imag()) < 1e-10);
    }
}

TEST_CASE("coeffs_from_roots base cases", "[model]") {
    CHECK(model::coeffs_from_roots(std::vector<double>{0.5})[0] == Approx(0.5));
    const auto two = model::coeffs_from_roots(std::vector<double>{0.5, -0.5});
    CHECK(two[0] == Approx(0.0).margin(1e-15));
    CHECK(two[1] == Approx(0.25));
    CHECK_THROWS_AS(model::coeffs_from_roots(std::vector<double>{}), InvalidInput);
    CHECK_THROWS_AS(model::check_stability(vec({std::nan(""), 0.1})), InvalidInput);
}

TEST_CASE("coefficients and roots are mutually inverse on random stable sets", "[model]") {
    PhiloxRng rng(314, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 1 + static_cast<int>(rng.next_u64() % 6);
        std::vector<double> roots;
        for (int i = 0; i < p; ++i) roots.push_back(rng.uniform(-0.9, 0.9));
        // Keep roots separated so recovery is well-conditioned.
        std::sort(roots.begin(), roots.end());
        bool ok = true;
        for (int i = 1; i < p; ++i) ok = ok && roots[i] - roots[i - 1] > 0.05;
        if (!ok) continue;
        const auto theta = model::coeffs_from_roots(roots);
        const auto recovered = sorted_real_roots(model::check_stability(theta));
        for (int i = 0; i < p; ++i) REQUIRE(recovered[i] == Approx(roots[i]).margin(1e-8));
    }
}

TEST_CASE("noiseless recursion from a unit start is the geometric sequence", "[model]") {
    model::ModelSpec spec;
    spec.p = 1;
    spec.theta = vec({0.7});
    spec.b_fn = model::SymbolicFn::zero();
    spec.sigma_fn = model::SymbolicFn::zero();
    spec.period_T = 1;
    spec.seasonal_s = {0.0};
    spec.eta_law = model::NoiseLaw::uniform(1.0);
    spec.eps_law = model::NoiseLaw::gaussian();
    spec.seed = 9;

    const double start[] = {1.0};
    const auto traj = model::simulate(spec, 20, 0, 0, start);
    double expected = 1.0;
    for (int t = 0; t < traj.n(); ++t) {
        expected *= 0.7;
        REQUIRE(traj.x[static_cast<std::size_t>(t)] == expected);
    }
}

TEST_CASE("simulation is bit-deterministic given seed and stream", "[model]") {
    const auto spec = harness::builtin_model(harness::BuiltinId::MinusAR1, 77);
    const auto a = model::simulate(spec, 2000);
    const auto b = model::simulate(spec, 2000);
    REQUIRE(a.x == b.x);
    REQUIRE(a.e == b.e);
    const auto c = model::simulate(spec, 2000, std::nullopt, 1);
    CHECK(a.x != c.x);
}

TEST_CASE("longer runs extend shorter ones sample for sample", "[model]") {
    const auto spec = harness::builtin_model(harness::BuiltinId::MinusAR1, 3);
    const auto small = model::simulate(spec, 500);
    const auto big = model::simulate(spec, 800);
    for (int t = 0; t < 500; ++t) {
        REQUIRE(big.x[static_cast<std::size_t>(t)] == small.x[static_cast<std::size_t>(t)]);
    }
}

TEST_CASE("exogenous inputs track the seasonal mean", "[model]") {
    const auto spec = harness::builtin_model(harness::BuiltinId::MinusAR1, 2);
    const int n = 12000;  // 2000 full periods
    const auto traj = model::simulate(spec, n);
    const double mean_s = oracles::mean(spec.seasonal_s);
    CHECK(mean_s == Approx(-2.26 / 6.0));
    const double mean_e = oracles::mean(traj.e);
    // eta is uniform on [-3,3]: sd sqrt(3); three standard errors of the mean.
    const double three_se = 3.0 * std::sqrt(3.0) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean_e - mean_s) < three_se);
    for (double e : traj.e) REQUIRE(spec.domain().contains(e, 1e-12));
}

TEST_CASE("simulated paths stay bounded at length 1e5", "[model]") {
    const auto spec = harness::builtin_model(harness::BuiltinId::MinusAR1, 5);
    const auto traj = model::simulate(spec, 100000);
    double max_abs = 0;
    for (double x : traj.x) max_abs = std::max(max_abs, std::abs(x));
    CHECK(max_abs < 50.0);
}

TEST_CASE("period-blocked subsequences are stationary across halves", "[model]") {
    const auto spec = harness::builtin_model(harness::BuiltinId::MinusAR1, 8);
    const int n = 100000;
    const auto traj = model::simulate(spec, n);
    const int T = spec.period_T;
    for (int phase = 0; phase < T; ++phase) {
        std::vector<double> first, second;
        for (int t = phase; t < n; t += T) {
            (t < n / 2 ? first : second).push_back(traj.x[static_cast<std::size_t>(t)]);
        }
        const double m1 = oracles::mean(first), m2 = oracles::mean(second);
        const double v1 = oracles::sample_variance(first);
        const double v2 = oracles::sample_variance(second);
        const double se = std::sqrt(v1 / first.size() + v2 / second.size());
        REQUIRE(std::abs(m1 - m2) < 5.0 * se);
    }
}

TEST_CASE("simulate refuses unstable or undersized requests", "[model]") {
    auto spec = harness::builtin_model(harness::BuiltinId::PlusAR1, 1);
    spec.theta = vec({1.02});
    CHECK_THROWS_AS(model::simulate(spec, 100), StabilityError);
    const auto ok = harness::builtin_model(harness::BuiltinId::AR4, 1);
    CHECK_THROWS_AS(model::simulate(ok, 4), InvalidInput);
}

TEST_CASE("pre-sample overrides must match the model order", "[model]") {
    const auto spec = harness::builtin_model(harness::BuiltinId::AR4, 1);
    const std::vector<double> wrong{1.0, 2.0};
    CHECK_THROWS_AS(model::simulate(spec, 100, 0, 0, wrong), InvalidInput);
    const std::vector<double> right{1.0, 2.0, 3.0, 4.0};
    CHECK_NOTHROW(model::simulate(spec, 100, 0, 0, right));
}

TEST_CASE("automatic burn-in grows near the stability boundary", "[model]") {
    CHECK(model::default_burn_in(0.5) == 500);
    CHECK(model::default_burn_in(0.7) == 500);
    CHECK(model::default_burn_in(0.999) > 20000);
}

TEST_CASE("spec validation enforces the structural hypotheses", "[model]") {
    auto spec = harness::builtin_model(harness::BuiltinId::MinusAR1, 1);
    CHECK_NOTHROW(spec.validate());

    auto bad_sigma = spec;
    bad_sigma.sigma_fn = model::SymbolicFn::zero();
    CHECK_THROWS_AS(bad_sigma.validate(), InvalidInput);

    auto bad_eta = spec;
    bad_eta.eta_law = model::NoiseLaw::gaussian();
    CHECK_THROWS_AS(bad_eta.validate(), InvalidInput);

    auto bad_season = spec;
    bad_season.seasonal_s.pop_back();
    CHECK_THROWS_AS(bad_season.validate(), InvalidInput);

    auto bad_theta = spec;
    bad_theta.theta = vec({1.5});
    CHECK_THROWS_AS(bad_theta.validate(), StabilityError);
}

TEST_CASE("symbolic function forms evaluate as written", "[model]") {
    CHECK(model::SymbolicFn::sqrt_abs()(-4.0) == Approx(2.0));
    CHECK(model::SymbolicFn::sqrt_abs().holder_exponent() == Approx(0.5));
    CHECK(model::SymbolicFn::quadratic_affine(1.0, 1.0 / 24.0)(6.0) == Approx(2.5));
    CHECK(model::SymbolicFn::constant(3.5)(-100.0) == Approx(3.5));
    CHECK(model::SymbolicFn::zero()(2.0) == 0.0);

    const auto pw = model::SymbolicFn::piecewise_linear({{0.0, 0.0}, {1.0, 2.0}, {3.0, 2.0}});
    CHECK(pw(0.5) == Approx(1.0));
    CHECK(pw(2.0) == Approx(2.0));
    CHECK(pw(-5.0) == Approx(0.0));   // clamped left
    CHECK(pw(10.0) == Approx(2.0));   // clamped right
    CHECK(pw.holder_exponent() == Approx(1.0));

    auto custom = model::SymbolicFn::sqrt_abs().with_holder_exponent(0.4);
    CHECK(custom.holder_exponent() == Approx(0.4));
    CHECK_THROWS_AS(model::SymbolicFn::sqrt_abs().with_holder_exponent(1.5), InvalidInput);
}
