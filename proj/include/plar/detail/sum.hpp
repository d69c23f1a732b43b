#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace plar::detail {

/// Neumaier-compensated accumulator. Keeps long reductions accurate enough
/// that reordering the terms moves the result by O(eps), not O(n*eps).
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_total(std::span<const double> values) {
    CompensatedSum acc;
    for (double v : values) acc.add(v);
    return acc.value();
}

}  // namespace plar::detail
