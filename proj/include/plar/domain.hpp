#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "plar/detail/sum.hpp"
#include "plar/errors.hpp"

namespace plar {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

/// Finite union of closed intervals, kept sorted and disjoint. Used for the
/// support of the exogenous inputs (union of the per-phase noise supports)
/// and for every quadrature/evaluation grid built on it.
class IntervalUnion {
public:
    IntervalUnion() = default;

    explicit IntervalUnion(std::vector<Interval> parts) {
        for (const auto& iv : parts) {
            if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi)) || iv.hi < iv.lo) {
                throw InvalidInput("IntervalUnion: malformed interval");
            }
        }
        std::sort(parts.begin(), parts.end(),
                  [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (const auto& iv : parts) {
            if (!parts_.empty() && iv.lo <= parts_.back().hi) {
                parts_.back().hi = std::max(parts_.back().hi, iv.hi);
            } else {
                parts_.push_back(iv);
            }
        }
    }

    static IntervalUnion single(double lo, double hi) { return IntervalUnion({{lo, hi}}); }

    /// Union of [c - radius, c + radius] over the given centers.
    static IntervalUnion from_centers(std::span<const double> centers, double radius) {
        if (centers.empty()) throw InvalidInput("IntervalUnion: no centers");
        if (radius < 0) throw InvalidInput("IntervalUnion: negative radius");
        std::vector<Interval> parts;
        parts.reserve(centers.size());
        for (double c : centers) parts.push_back({c - radius, c + radius});
        return IntervalUnion(std::move(parts));
    }

    const std::vector<Interval>& parts() const { return parts_; }
    bool empty() const { return parts_.empty(); }

    double length() const {
        double d = 0.0;
        for (const auto& iv : parts_) d += iv.length();
        return d;
    }

    Interval hull() const {
        if (parts_.empty()) throw InvalidInput("IntervalUnion: empty");
        return {parts_.front().lo, parts_.back().hi};
    }

    bool contains(double e, double slack = 0.0) const {
        for (const auto& iv : parts_) {
            if (e >= iv.lo - slack && e <= iv.hi + slack) return true;
        }
        return false;
    }

    /// Evaluation grid: `per_component` equally spaced points (endpoints
    /// included) on each connected component, concatenated in order.
    std::vector<double> grid(int per_component = 200) const {
        if (parts_.empty()) throw InvalidInput("IntervalUnion: empty");
        if (per_component < 2) throw InvalidInput("IntervalUnion: grid needs >= 2 points");
        std::vector<double> pts;
        pts.reserve(parts_.size() * static_cast<std::size_t>(per_component));
        for (const auto& iv : parts_) {
            if (iv.length() <= 0.0) {
                pts.push_back(iv.lo);
                continue;
            }
            const double step = iv.length() / (per_component - 1);
            for (int i = 0; i < per_component; ++i) {
                pts.push_back(i + 1 == per_component ? iv.hi : iv.lo + step * i);
            }
        }
        return pts;
    }

    /// Trapezoid integral of values laid out exactly like grid(per_component).
    double integrate(std::span<const double> values, int per_component = 200) const {
        std::size_t expected = 0;
        for (const auto& iv : parts_) {
            expected += iv.length() <= 0.0 ? 1 : static_cast<std::size_t>(per_component);
        }
        if (values.size() != expected) {
            throw InvalidInput("IntervalUnion::integrate: values do not match grid layout");
        }
        detail::CompensatedSum total;
        std::size_t offset = 0;
        for (const auto& iv : parts_) {
            if (iv.length() <= 0.0) {
                ++offset;
                continue;
            }
            const double step = iv.length() / (per_component - 1);
            for (int i = 0; i + 1 < per_component; ++i) {
                total.add(0.5 * step * (values[offset + i] + values[offset + i + 1]));
            }
            offset += static_cast<std::size_t>(per_component);
        }
        return total.value();
    }

private:
    std::vector<Interval> parts_;
};

}  // namespace plar
