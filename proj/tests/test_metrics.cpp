#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "plar/kernel.hpp"
#include "plar/metrics.hpp"
#include "plar/rng.hpp"

using namespace plar;
using Catch::Approx;

namespace {

/// NW estimate that is identically zero on its domain (zero responses).
kernel::FunctionEstimate zero_estimate(const IntervalUnion& dom) {
    const std::vector<double> e{dom.hull().lo, 0.5 * (dom.hull().lo + dom.hull().hi),
                                dom.hull().hi};
    return kernel::nw_fit(e, std::vector<double>(3, 0.0), kernel::Kernel::gaussian(),
                          std::max(1.0, dom.length()), dom);
}

}  // namespace

TEST_CASE("constant gap makes all three norms equal", "[metrics]") {
    const auto dom = IntervalUnion::single(0.0, 4.0);  // d = 4
    const auto est = zero_estimate(dom);
    const auto norms = metrics::fn_norms(est, [](double) { return -3.0; }, dom);
    // |h| = 3 on a domain of length 4: all norms are 3 * sqrt(4) = 6.
    CHECK(norms.n1 == Approx(6.0).epsilon(1e-9));
    CHECK(norms.n2 == Approx(6.0).epsilon(1e-9));
    CHECK(norms.ninf == Approx(6.0).epsilon(1e-9));

    const auto zero = metrics::fn_norms(est, [](double) { return 0.0; }, dom);
    CHECK(zero.n1 == Approx(0.0).margin(1e-12));
    CHECK(zero.n2 == Approx(0.0).margin(1e-12));
    CHECK(zero.ninf == Approx(0.0).margin(1e-12));
}

TEST_CASE("identity gap on the unit interval matches closed forms", "[metrics]") {
    const auto dom = IntervalUnion::single(0.0, 1.0);
    const auto est = zero_estimate(dom);
    // est - truth = e on [0, 1]
    const auto norms = metrics::fn_norms(est, [](double e) { return -e; }, dom);
    CHECK(norms.n1 == Approx(0.5).margin(1e-3));
    CHECK(norms.n2 == Approx(1.0 / std::sqrt(3.0)).margin(1e-3));
    CHECK(norms.ninf == Approx(1.0).margin(1e-3));
    CHECK(norms.n1 < norms.n2);
    CHECK(norms.n2 < norms.ninf);

    CHECK_THROWS_AS(metrics::fn_norms(est, [](double) { return 0.0; }, IntervalUnion{}),
                    InvalidInput);
}

TEST_CASE("norm ordering holds for arbitrary gap profiles", "[metrics]") {
    PhiloxRng rng(17, 0);
    const auto dom = IntervalUnion({{-2.0, 1.0}, {3.0, 4.5}});
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> values;
        for (std::size_t i = 0; i < dom.grid(200).size(); ++i) {
            values.push_back(rng.gaussian() * rng.uniform(0.1, 5.0));
        }
        const auto norms = metrics::norms_on_grid(dom, values);
        REQUIRE(norms.n1 <= norms.n2 + 1e-9);
        REQUIRE(norms.n2 <= norms.ninf + 1e-9);
    }
}

TEST_CASE("distances of standard normal residuals are small", "[metrics]") {
    PhiloxRng rng(77, 0);
    std::vector<double> r(100000);
    for (auto& v : r) v = rng.gaussian();
    const auto d = metrics::noise_distances(r);
    CHECK(d.tv <= 0.05);
    CHECK(d.hellinger <= 0.05);
    CHECK(d.kolmogorov <= 0.05);
}

TEST_CASE("a point mass at zero is half a Kolmogorov unit away", "[metrics]") {
    const std::vector<double> zeros(100, 0.0);
    const auto d = metrics::noise_distances(zeros);
    CHECK(d.kolmogorov == Approx(0.5).margin(1e-9));
    CHECK(d.tv >= 0.0);
    CHECK(d.tv <= 1.0);
}

TEST_CASE("distance inequalities hold on every output", "[metrics]") {
    PhiloxRng rng(78, 1);
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<double> r(400);
        const double scale = rng.uniform(0.3, 3.0);
        const double shift = rng.uniform(-1.0, 1.0);
        for (auto& v : r) v = rng.gaussian() * scale + shift;
        const auto d = metrics::noise_distances(r);
        REQUIRE(d.tv >= 0.0);
        REQUIRE(d.tv <= 1.0);
        REQUIRE(d.hellinger >= 0.0);
        REQUIRE(d.hellinger <= 1.0);
        REQUIRE(d.kolmogorov >= 0.0);
        REQUIRE(d.kolmogorov <= 1.0);
        REQUIRE(d.kolmogorov <= d.tv);
        REQUIRE(d.hellinger <= std::sqrt(d.tv) + 1e-12);
    }
    CHECK_THROWS_AS(metrics::noise_distances(std::vector<double>(10, 0.0)),
                    InsufficientData);
}

TEST_CASE("rate fitting recovers a synthetic power law exactly", "[metrics]") {
    const std::vector<int> ns{200, 500, 1000, 2000, 4000};
    std::vector<double> errors;
    const double c = 1.7;
    for (int n : ns) {
        errors.push_back(c * std::pow(std::log(double(n)) / n, 0.25));
    }
    const auto fit = metrics::fit_rate(ns, errors);
    CHECK(fit.slope == Approx(0.25).margin(1e-10));
    CHECK(fit.c_hat == Approx(c).margin(1e-10));

    const std::vector<double> flat(ns.size(), 0.37);
    const auto zero = metrics::fit_rate(ns, flat);
    CHECK(zero.slope == Approx(0.0).margin(1e-12));
    CHECK(zero.c_hat == Approx(0.37).margin(1e-10));
}

TEST_CASE("rate fitting is scale-equivariant", "[metrics]") {
    const std::vector<int> ns{100, 300, 900, 2700};
    std::vector<double> errors{0.9, 0.5, 0.3, 0.2};
    const auto base = metrics::fit_rate(ns, errors);
    std::vector<double> scaled;
    for (double e : errors) scaled.push_back(7.5 * e);
    const auto fit = metrics::fit_rate(ns, scaled);
    CHECK(fit.slope == Approx(base.slope).margin(1e-10));
    CHECK(fit.c_hat == Approx(7.5 * base.c_hat).epsilon(1e-10));
}

TEST_CASE("rate fitting input validation", "[metrics]") {
    CHECK_THROWS_AS(metrics::fit_rate(std::vector<int>{100, 200, 300},
                                      std::vector<double>{1, 1, 1}),
                    InvalidInput);
    CHECK_THROWS_AS(metrics::fit_rate(std::vector<int>{100, 200, 300, 400},
                                      std::vector<double>{1, 1, 0, 1}),
                    InvalidInput);
    CHECK_THROWS_AS(metrics::fit_rate(std::vector<int>{100, 100, 100, 100},
                                      std::vector<double>{1, 1, 1, 1}),
                    InvalidInput);
}
