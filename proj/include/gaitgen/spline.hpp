#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "gaitgen/events.hpp"
#include "gaitgen/types.hpp"

namespace gaitgen {

// ---------------------------------------------------------------------------
// Piecewise quintic reconstruction of a continuous periodic trajectory from
// key events: each segment is the unique degree-5 polynomial matching
// (y, ydot, yddot) at both end events.
// ---------------------------------------------------------------------------

/// One quintic piece over [t0, t1] in % gait cycle (t1 may exceed 100 for the
/// wrap segment). Coefficients are in normalized local time tau = (t-t0)/(t1-t0).
struct QuinticSegment {
    double t0 = 0.0;
    double t1 = 0.0;
    std::array<double, 6> c{};  // c0..c5

    double length() const { return t1 - t0; }

    double value(double t_pct) const {
        const double tau = (t_pct - t0) / length();
        double v = 0.0;
        for (size_t i = c.size(); i-- > 0;) v = v * tau + c[i];
        return v;
    }

    /// First derivative w.r.t. % gait cycle.
    double deriv(double t_pct) const {
        const double tau = (t_pct - t0) / length();
        double v = 0.0;
        for (size_t i = c.size(); i-- > 1;) v = v * tau + c[i] * static_cast<double>(i);
        return v / length();
    }

    /// Second derivative w.r.t. % gait cycle.
    double deriv2(double t_pct) const {
        const double tau = (t_pct - t0) / length();
        double v = 0.0;
        for (size_t i = c.size(); i-- > 2;)
            v = v * tau + c[i] * static_cast<double>(i) * static_cast<double>(i - 1);
        return v / (length() * length());
    }
};

struct SplineSample {
    double position = 0.0;      // channel unit
    double velocity = 0.0;      // unit/s
    double acceleration = 0.0;  // unit/s^2
};

class TrajectorySpline {
public:
    TrajectorySpline() = default;
    TrajectorySpline(JointChannel channel, double cycle_time, std::vector<QuinticSegment> segments)
        : channel_(channel), cycle_time_(cycle_time), segments_(std::move(segments)) {}

    JointChannel channel() const { return channel_; }
    double cycle_time() const { return cycle_time_; }
    const std::vector<QuinticSegment>& segments() const { return segments_; }

    /// Position at t (% gait cycle, any real value, periodic).
    double value(double t_pct) const {
        auto [seg, t] = locate(t_pct);
        return seg->value(t);
    }

    /// Position plus real-time derivatives at t (% gait cycle).
    SplineSample sample_at(double t_pct) const {
        auto [seg, t] = locate(t_pct);
        const double pct_per_s = 100.0 / cycle_time_;
        SplineSample s;
        s.position = seg->value(t);
        s.velocity = seg->deriv(t) * pct_per_s;
        s.acceleration = seg->deriv2(t) * pct_per_s * pct_per_s;
        return s;
    }

    /// Evaluate on an endpoint-inclusive grid (n points over [0,100]).
    std::vector<double> to_grid(size_t n) const {
        std::vector<double> out(n);
        const double step = 100.0 / static_cast<double>(n - 1);
        for (size_t i = 0; i < n; ++i) out[i] = value(static_cast<double>(i) * step);
        return out;
    }

private:
    friend TrajectorySpline build_spline(const KeyEventSet&);

    std::pair<const QuinticSegment*, double> locate(double t_pct) const {
        double t = std::fmod(t_pct, 100.0);
        if (t < 0.0) t += 100.0;
        if (t < segments_.front().t0) t += 100.0;  // wrap segment territory
        // segments are ordered by t0; find the last t0 <= t
        size_t lo = 0, hi = segments_.size();
        while (hi - lo > 1) {
            size_t mid = (lo + hi) / 2;
            if (segments_[mid].t0 <= t) lo = mid;
            else hi = mid;
        }
        return {&segments_[lo], t};
    }

    JointChannel channel_ = JointChannel::HipFlexExt;
    double cycle_time_ = 1.0;
    std::vector<QuinticSegment> segments_;
};

namespace detail {

/// Quintic Hermite coefficients on tau in [0,1] matching position p,
/// first derivative v, second derivative a at both ends.
inline std::array<double, 6> quintic_hermite(double p0, double v0, double a0, double p1, double v1,
                                             double a1) {
    const double dp = p1 - p0;
    std::array<double, 6> c{};
    c[0] = p0;
    c[1] = v0;
    c[2] = 0.5 * a0;
    c[3] = 10.0 * dp - 6.0 * v0 - 4.0 * v1 - 1.5 * a0 + 0.5 * a1;
    c[4] = -15.0 * dp + 8.0 * v0 + 7.0 * v1 + 1.5 * a0 - a1;
    c[5] = 6.0 * dp - 3.0 * (v0 + v1) - 0.5 * (a0 - a1);
    return c;
}

}  // namespace detail

/// Build the periodic C2 trajectory through a key-event set. The final
/// segment wraps the last event to the first event shifted by +100%.
inline TrajectorySpline build_spline(const KeyEventSet& events) {
    events.validate();
    const size_t n = events.events.size();
    if (n < 2) throw InvariantViolation("build_spline: need at least 2 events");
    const double t_to_pct = events.cycle_time / 100.0;  // unit/s -> unit/%

    std::vector<QuinticSegment> segments;
    segments.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const KeyEvent& e0 = events.events[i];
        const KeyEvent& e1 = events.events[(i + 1) % n];
        QuinticSegment seg;
        seg.t0 = e0.t;
        seg.t1 = (i + 1 == n) ? e1.t + 100.0 : e1.t;
        const double len = seg.length();
        if (len < 1.0 - 1e-12)
            throw IllConditionedSegment("segment " + e0.detector_id + " -> " + e1.detector_id +
                                        " shorter than 1% (" + format_double(len) + ")");
        const double v0 = e0.ydot * t_to_pct * len;
        const double v1 = e1.ydot * t_to_pct * len;
        const double a0 = e0.yddot * t_to_pct * t_to_pct * len * len;
        const double a1 = e1.yddot * t_to_pct * t_to_pct * len * len;
        seg.c = detail::quintic_hermite(e0.y, v0, a0, e1.y, v1, a1);
        segments.push_back(seg);
    }

    TrajectorySpline spline(events.channel, events.cycle_time, std::move(segments));
    return spline;
}

}  // namespace gaitgen
