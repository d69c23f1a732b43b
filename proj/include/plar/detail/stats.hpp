#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>

#include "plar/detail/sum.hpp"
#include "plar/errors.hpp"

namespace plar::detail {

inline double mean(std::span<const double> v) {
    if (v.empty()) throw InvalidInput("mean: empty input");
    return compensated_total(v) / static_cast<double>(v.size());
}

/// Standard deviation with selectable denominator (ddof = 0 gives the plain
/// empirical moment, ddof = 1 the unbiased sample version).
inline double stddev(std::span<const double> v, int ddof = 0) {
    const auto n = v.size();
    if (n < 2) throw InvalidInput("stddev: need at least two values");
    const double m = mean(v);
    CompensatedSum acc;
    for (double x : v) acc.add((x - m) * (x - m));
    return std::sqrt(acc.value() / static_cast<double>(n - static_cast<std::size_t>(ddof)));
}

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

}  // namespace plar::detail
