#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaitgen/types.hpp"

namespace gaitgen {

// ---------------------------------------------------------------------------
// Sparse key-event parameterization of gait cycles: each cycle is reduced to
// a handful of (t, y, ydot, yddot) landmarks found by per-channel detector
// templates.
// ---------------------------------------------------------------------------

enum class SignalKind { Position, Velocity };
enum class Extremum { Max, Min };
enum class DerivativeConstraint { None, VelocityZero, AccelerationZero };

struct EventDetector {
    std::string id;
    SignalKind signal = SignalKind::Position;
    Extremum extremum = Extremum::Max;
    double window_lo = 0.0;   // % gait cycle
    double window_hi = 100.0; // % gait cycle
    std::optional<double> pinned_time;  // % ; pinned detectors do not search
    DerivativeConstraint constraint = DerivativeConstraint::None;

    double window_mid() const { return 0.5 * (window_lo + window_hi); }
    bool full_window() const { return window_lo == 0.0 && window_hi == 100.0; }

    void validate() const {
        if (id.empty()) throw InvariantViolation("detector with empty id");
        if (!(window_lo >= 0.0 && window_lo < window_hi && window_hi <= 100.0))
            throw InvariantViolation("detector " + id + ": window [" + format_double(window_lo) +
                                     "," + format_double(window_hi) + "] invalid");
        if (pinned_time && !(*pinned_time >= 0.0 && *pinned_time < 100.0))
            throw InvariantViolation("detector " + id + ": pinned time out of [0,100)");
    }
};

struct KeyEventTemplate {
    JointChannel channel = JointChannel::HipFlexExt;
    std::vector<EventDetector> detectors;  // kept ordered by window midpoint

    void validate() const {
        const size_t expected = channel == JointChannel::PelvisLateral ? 4 : 6;
        if (detectors.size() != expected)
            throw InvariantViolation(std::string("template ") + channel_name(channel) +
                                     ": expected " + std::to_string(expected) + " detectors, got " +
                                     std::to_string(detectors.size()));
        for (size_t i = 0; i < detectors.size(); ++i) {
            detectors[i].validate();
            for (size_t j = i + 1; j < detectors.size(); ++j)
                if (detectors[i].id == detectors[j].id)
                    throw InvariantViolation("duplicate detector id '" + detectors[i].id + "'");
        }
        for (size_t i = 1; i < detectors.size(); ++i)
            if (detectors[i].window_mid() < detectors[i - 1].window_mid())
                throw InvariantViolation(std::string("template ") + channel_name(channel) +
                                         ": detectors not ordered by window midpoint");
    }
};

struct KeyEvent {
    double t = 0.0;      // % gait cycle, in [0,100)
    double y = 0.0;      // deg or mm
    double ydot = 0.0;   // unit/s
    double yddot = 0.0;  // unit/s^2
    std::string detector_id;
};

struct KeyEventSet {
    JointChannel channel = JointChannel::HipFlexExt;
    Side side = Side::Right;
    std::vector<KeyEvent> events;  // sorted by t
    double cycle_time = 0.0;       // seconds

    void validate() const {
        if (events.empty()) throw InvariantViolation("empty key-event set");
        for (const auto& e : events)
            if (!(e.t >= 0.0 && e.t < 100.0))
                throw InvariantViolation("event " + e.detector_id + ": t out of [0,100)");
        for (size_t i = 1; i < events.size(); ++i)
            if (events[i].t - events[i - 1].t < 1.0 - 1e-12)
                throw OrderingViolation("events '" + events[i - 1].detector_id + "' and '" +
                                        events[i].detector_id + "' closer than 1%");
        if (channel != JointChannel::PelvisLateral &&
            std::abs(events.front().t) > 1e-12)
            throw InvariantViolation(std::string(channel_name(channel)) +
                                     ": first event must be heel strike at t=0");
        if (!(cycle_time > 0.0)) throw InvariantViolation("key-event set: cycle_time must be > 0");
    }
};

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

struct DerivativeSeries {
    std::vector<double> velocity;      // unit/s
    std::vector<double> acceleration;  // unit/s^2
};

/// Periodic central differences on the %-grid, scaled by 100/cycle_time into
/// real-time units. Input grid is endpoint-inclusive; outputs match its size
/// with the last sample equal to the first (wrap copy).
inline DerivativeSeries differentiate_cycle(const std::vector<double>& samples, double cycle_time) {
    if (samples.size() < 4) throw InvariantViolation("differentiate: grid too small");
    if (!(cycle_time > 0.0)) throw InvariantViolation("differentiate: cycle_time must be > 0");
    const size_t m = samples.size() - 1;  // period samples
    const double h = 100.0 / static_cast<double>(m);          // % per grid step
    const double scale = 100.0 / cycle_time;                  // %/s
    DerivativeSeries out;
    out.velocity.resize(samples.size());
    out.acceleration.resize(samples.size());
    for (size_t i = 0; i < m; ++i) {
        const double prev = samples[(i + m - 1) % m];
        const double next = samples[(i + 1) % m];
        out.velocity[i] = (next - prev) / (2.0 * h) * scale;
        out.acceleration[i] = (next - 2.0 * samples[i] + prev) / (h * h) * scale * scale;
    }
    out.velocity[m] = out.velocity[0];
    out.acceleration[m] = out.acceleration[0];
    return out;
}

inline DerivativeSeries differentiate_cycle(const GaitCycle& c, double cycle_time) {
    return differentiate_cycle(c.samples, cycle_time);
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

namespace detail {

/// Quadratic interpolation of a 3-point stencil (f at -1, 0, +1 grid steps)
/// evaluated at fractional offset d in [-1,1].
inline double quad3(double fm, double f0, double fp, double d) {
    return f0 + d * 0.5 * (fp - fm) + d * d * 0.5 * (fp - 2.0 * f0 + fm);
}

struct SeriesView {
    const std::vector<double>& y;
    const std::vector<double>& v;
    const std::vector<double>& a;
    size_t m;  // period sample count (grid size - 1)

    double at(const std::vector<double>& s, size_t i) const { return s[i % m]; }

    /// Values of all three series at grid index i plus fractional offset d,
    /// with periodic indexing.
    void sample(double i_frac, double& yo, double& vo, double& ao) const {
        double base = std::floor(i_frac + 0.5);  // nearest grid node
        double d = i_frac - base;
        size_t i = static_cast<size_t>(std::fmod(base + static_cast<double>(m), static_cast<double>(m)));
        const size_t ip = (i + 1) % m, im = (i + m - 1) % m;
        yo = quad3(y[im], y[i], y[ip], d);
        vo = quad3(v[im], v[i], v[ip], d);
        ao = quad3(a[im], a[i], a[ip], d);
    }
};

inline bool strictly_monotone(const std::vector<double>& s, size_t lo, size_t hi) {
    bool inc = true, dec = true;
    for (size_t i = lo + 1; i <= hi; ++i) {
        if (s[i] <= s[i - 1]) inc = false;
        if (s[i] >= s[i - 1]) dec = false;
    }
    return inc || dec;
}

}  // namespace detail

/// Locate each detector's event on the cycle. Extremum detectors search their
/// phase window on the grid and refine with a 3-point quadratic fit; full
/// [0,100] windows are treated periodically. A window-boundary extremum is an
/// error when the signal is monotone across the window, otherwise the
/// boundary node is accepted unrefined.
inline KeyEventSet extract_events(const GaitCycle& c, const KeyEventTemplate& tmpl,
                                  double cycle_time) {
    if (c.channel != tmpl.channel)
        throw MixedChannels(std::string("cycle channel ") + channel_name(c.channel) +
                            " does not match template " + channel_name(tmpl.channel));
    tmpl.validate();
    if (c.samples.size() < 4) throw InvariantViolation("extract_events: grid too small");

    const DerivativeSeries deriv = differentiate_cycle(c.samples, cycle_time);
    const size_t m = c.samples.size() - 1;
    const double h = 100.0 / static_cast<double>(m);
    detail::SeriesView view{c.samples, deriv.velocity, deriv.acceleration, m};

    KeyEventSet set;
    set.channel = c.channel;
    set.side = c.side;
    set.cycle_time = cycle_time;

    for (const auto& det : tmpl.detectors) {
        KeyEvent ev;
        ev.detector_id = det.id;

        if (det.pinned_time) {
            const double i_frac = *det.pinned_time / h;
            view.sample(i_frac, ev.y, ev.ydot, ev.yddot);
            ev.t = *det.pinned_time;
        } else {
            const std::vector<double>& sig =
                det.signal == SignalKind::Position ? c.samples : deriv.velocity;
            const bool want_max = det.extremum == Extremum::Max;
            double i_frac;

            if (det.full_window()) {
                size_t best = 0;
                for (size_t i = 1; i < m; ++i) {
                    if (want_max ? sig[i] > sig[best] : sig[i] < sig[best]) best = i;
                }
                // periodic quadratic refinement around the winner
                const double fm = sig[(best + m - 1) % m], f0 = sig[best], fp = sig[(best + 1) % m];
                const double denom = fm - 2.0 * f0 + fp;
                double d = std::abs(denom) > 1e-300 ? 0.5 * (fm - fp) / denom : 0.0;
                d = std::clamp(d, -0.5, 0.5);
                i_frac = static_cast<double>(best) + d;
            } else {
                const size_t i_lo = static_cast<size_t>(std::ceil(det.window_lo / h - 1e-9));
                const size_t i_hi =
                    std::min(c.samples.size() - 1,
                             static_cast<size_t>(std::floor(det.window_hi / h + 1e-9)));
                if (i_hi <= i_lo)
                    throw NoExtremumInWindow("detector " + det.id + ": window too narrow for grid");
                size_t best = i_lo;
                for (size_t i = i_lo + 1; i <= i_hi; ++i) {
                    if (want_max ? sig[i] > sig[best] : sig[i] < sig[best]) best = i;
                }
                if (best == i_lo || best == i_hi) {
                    if (detail::strictly_monotone(sig, i_lo, i_hi))
                        throw NoExtremumInWindow("detector " + det.id + " on " +
                                                 channel_name(c.channel) +
                                                 ": signal monotone in window [" +
                                                 format_double(det.window_lo) + "," +
                                                 format_double(det.window_hi) + "]");
                    i_frac = static_cast<double>(best);  // boundary node, unrefined
                } else {
                    const double fm = sig[best - 1], f0 = sig[best], fp = sig[best + 1];
                    const double denom = fm - 2.0 * f0 + fp;
                    double d = std::abs(denom) > 1e-300 ? 0.5 * (fm - fp) / denom : 0.0;
                    d = std::clamp(d, -0.5, 0.5);
                    i_frac = static_cast<double>(best) + d;
                    i_frac = std::clamp(i_frac, det.window_lo / h, det.window_hi / h);
                }
            }

            view.sample(i_frac, ev.y, ev.ydot, ev.yddot);
            ev.t = std::fmod(i_frac * h, 100.0);
            if (ev.t < 0.0) ev.t += 100.0;
        }

        switch (det.constraint) {
            case DerivativeConstraint::VelocityZero: ev.ydot = 0.0; break;
            case DerivativeConstraint::AccelerationZero: ev.yddot = 0.0; break;
            case DerivativeConstraint::None: break;
        }
        set.events.push_back(ev);
    }

    std::sort(set.events.begin(), set.events.end(),
              [](const KeyEvent& a, const KeyEvent& b) { return a.t < b.t; });
    set.validate();
    return set;
}

// ---------------------------------------------------------------------------
// Default templates. The exact six events per joint are not fully pinned down
// by the source material, so these defaults are chosen to capture the stance
// and swing extrema of typical walking trajectories; they are plain data and
// can be replaced through the template file.
// ---------------------------------------------------------------------------

inline std::map<JointChannel, KeyEventTemplate> default_templates() {
    using DC = DerivativeConstraint;
    auto pin = [](const char* id, double t) {
        EventDetector d;
        d.id = id;
        d.pinned_time = t;
        d.window_lo = t;
        d.window_hi = t + 1.0;
        return d;
    };
    auto ext = [](const char* id, SignalKind sig, Extremum x, double lo, double hi) {
        EventDetector d;
        d.id = id;
        d.signal = sig;
        d.extremum = x;
        d.window_lo = lo;
        d.window_hi = hi;
        d.constraint = sig == SignalKind::Position ? DC::VelocityZero : DC::AccelerationZero;
        return d;
    };
    auto by_mid = [](KeyEventTemplate& t) {
        std::stable_sort(t.detectors.begin(), t.detectors.end(),
                         [](const EventDetector& a, const EventDetector& b) {
                             return a.window_mid() < b.window_mid();
                         });
    };

    std::map<JointChannel, KeyEventTemplate> out;

    {
        KeyEventTemplate t;
        t.channel = JointChannel::HipFlexExt;
        t.detectors = {
            pin("heel_strike", 0.0),
            ext("stance_vel_min", SignalKind::Velocity, Extremum::Min, 5.0, 55.0),
            ext("stance_pos_min", SignalKind::Position, Extremum::Min, 5.0, 60.0),
            ext("swing_vel_max", SignalKind::Velocity, Extremum::Max, 40.0, 90.0),
            ext("swing_pos_max", SignalKind::Position, Extremum::Max, 60.0, 97.0),
            ext("late_vel_min", SignalKind::Velocity, Extremum::Min, 70.0, 99.0),
        };
        by_mid(t);
        out[t.channel] = t;
    }
    {
        KeyEventTemplate t;
        t.channel = JointChannel::HipAbAd;
        t.detectors = {
            pin("heel_strike", 0.0),
            ext("stance_vel_max", SignalKind::Velocity, Extremum::Max, 2.0, 45.0),
            ext("stance_pos_max", SignalKind::Position, Extremum::Max, 10.0, 60.0),
            ext("swing_vel_min", SignalKind::Velocity, Extremum::Min, 40.0, 85.0),
            ext("swing_pos_min", SignalKind::Position, Extremum::Min, 60.0, 97.0),
            ext("late_vel_max", SignalKind::Velocity, Extremum::Max, 72.0, 99.0),
        };
        by_mid(t);
        out[t.channel] = t;
    }
    {
        KeyEventTemplate t;
        t.channel = JointChannel::KneeFlexExt;
        t.detectors = {
            pin("heel_strike", 0.0),
            ext("stance_pos_max", SignalKind::Position, Extremum::Max, 0.0, 55.0),
            ext("stance_vel_min", SignalKind::Velocity, Extremum::Min, 0.0, 60.0),
            ext("counter_pos_min", SignalKind::Position, Extremum::Min, 0.0, 100.0),
            ext("swing_vel_max", SignalKind::Velocity, Extremum::Max, 40.0, 90.0),
            ext("swing_pos_max", SignalKind::Position, Extremum::Max, 60.0, 97.0),
        };
        by_mid(t);
        out[t.channel] = t;
    }
    {
        KeyEventTemplate t;
        t.channel = JointChannel::PelvisLateral;
        t.detectors = {
            ext("pos_max", SignalKind::Position, Extremum::Max, 0.0, 100.0),
            ext("pos_min", SignalKind::Position, Extremum::Min, 0.0, 100.0),
            ext("vel_max", SignalKind::Velocity, Extremum::Max, 0.0, 100.0),
            ext("vel_min", SignalKind::Velocity, Extremum::Min, 0.0, 100.0),
        };
        out[t.channel] = t;
    }

    for (auto& [ch, t] : out) t.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Template file: one delimited row per detector.
//   channel,id,signal,extremum,window_lo,window_hi,pin,constraint
// ---------------------------------------------------------------------------

inline std::string templates_to_text(const std::map<JointChannel, KeyEventTemplate>& templates) {
    std::string out = "channel,id,signal,extremum,window_lo,window_hi,pin,constraint\n";
    for (const auto& [ch, tmpl] : templates) {
        for (const auto& d : tmpl.detectors) {
            out += std::string(channel_name(ch)) + "," + d.id + ",";
            out += d.signal == SignalKind::Position ? "position," : "velocity,";
            out += d.extremum == Extremum::Max ? "max," : "min,";
            out += format_double(d.window_lo) + "," + format_double(d.window_hi) + ",";
            out += d.pinned_time ? format_double(*d.pinned_time) : "-";
            out += ",";
            switch (d.constraint) {
                case DerivativeConstraint::None: out += "none"; break;
                case DerivativeConstraint::VelocityZero: out += "velocity_zero"; break;
                case DerivativeConstraint::AccelerationZero: out += "acceleration_zero"; break;
            }
            out += "\n";
        }
    }
    return out;
}

inline std::map<JointChannel, KeyEventTemplate> templates_from_text(const std::string& text,
                                                                    const std::string& origin) {
    std::map<JointChannel, KeyEventTemplate> out;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        auto f = split(t, ',');
        if (f.size() != 8)
            throw SchemaMismatch(origin + ":" + std::to_string(lineno) +
                                 ": expected 8 fields, got " + std::to_string(f.size()));
        JointChannel ch = parse_channel(trim(f[0]));
        EventDetector d;
        d.id = trim(f[1]);
        std::string sig = to_lower(trim(f[2]));
        if (sig == "position") d.signal = SignalKind::Position;
        else if (sig == "velocity") d.signal = SignalKind::Velocity;
        else throw SchemaMismatch(origin + ": unknown signal '" + sig + "'");
        std::string xt = to_lower(trim(f[3]));
        if (xt == "max") d.extremum = Extremum::Max;
        else if (xt == "min") d.extremum = Extremum::Min;
        else throw SchemaMismatch(origin + ": unknown extremum '" + xt + "'");
        d.window_lo = parse_double(f[4], origin);
        d.window_hi = parse_double(f[5], origin);
        std::string pin = trim(f[6]);
        if (pin != "-" && !pin.empty()) d.pinned_time = parse_double(pin, origin);
        std::string con = to_lower(trim(f[7]));
        if (con == "none") d.constraint = DerivativeConstraint::None;
        else if (con == "velocity_zero") d.constraint = DerivativeConstraint::VelocityZero;
        else if (con == "acceleration_zero") d.constraint = DerivativeConstraint::AccelerationZero;
        else throw SchemaMismatch(origin + ": unknown constraint '" + con + "'");
        auto& tmpl = out[ch];
        tmpl.channel = ch;
        tmpl.detectors.push_back(d);
    }
    for (auto& [ch, tmpl] : out) tmpl.validate();
    if (out.empty()) throw SchemaMismatch(origin + ": no detectors defined");
    return out;
}

inline void save_templates(const std::filesystem::path& p,
                           const std::map<JointChannel, KeyEventTemplate>& templates) {
    write_text_file(p, templates_to_text(templates));
}

inline std::map<JointChannel, KeyEventTemplate> load_templates(const std::filesystem::path& p) {
    return templates_from_text(read_text_file(p), p.string());
}

}  // namespace gaitgen
