#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaitgen/common.hpp"

namespace gaitgen {

// ---------------------------------------------------------------------------
// Core gait-domain types. A dataset is immutable after construction; all
// pipeline stages operate on const references.
// ---------------------------------------------------------------------------

enum class Gender : int { Female = -1, Male = +1 };

enum class Side { Left, Right };

enum class SpeedLevel { L1, L2, L3 };

/// The four trajectory channels handled by the pipeline. Angles in degrees,
/// pelvis lateral translation in millimetres.
enum class JointChannel { HipAbAd, HipFlexExt, KneeFlexExt, PelvisLateral };

constexpr std::array<JointChannel, 4> kAllChannels = {
    JointChannel::HipAbAd, JointChannel::HipFlexExt, JointChannel::KneeFlexExt,
    JointChannel::PelvisLateral};

inline const char* channel_name(JointChannel c) {
    switch (c) {
        case JointChannel::HipAbAd: return "hip_abad";
        case JointChannel::HipFlexExt: return "hip_flexext";
        case JointChannel::KneeFlexExt: return "knee_flexext";
        case JointChannel::PelvisLateral: return "pelvis_lateral";
    }
    return "?";
}

inline const char* channel_unit(JointChannel c) {
    return c == JointChannel::PelvisLateral ? "mm" : "deg";
}

/// Frontal-plane channels carry opposite signs on the two sides; pooling and
/// training mirror left-side cycles onto the right-side convention.
inline bool is_frontal_plane(JointChannel c) {
    return c == JointChannel::HipAbAd || c == JointChannel::PelvisLateral;
}

inline JointChannel parse_channel(const std::string& s) {
    for (JointChannel c : kAllChannels)
        if (s == channel_name(c)) return c;
    throw SchemaMismatch("unknown channel '" + s + "'");
}

inline const char* side_name(Side s) { return s == Side::Left ? "L" : "R"; }

inline Side parse_side(const std::string& s) {
    if (s == "L" || s == "left" || s == "Left") return Side::Left;
    if (s == "R" || s == "right" || s == "Right") return Side::Right;
    throw SchemaMismatch("unknown side '" + s + "'");
}

inline const char* level_name(SpeedLevel l) {
    switch (l) {
        case SpeedLevel::L1: return "L1";
        case SpeedLevel::L2: return "L2";
        case SpeedLevel::L3: return "L3";
    }
    return "?";
}

inline SpeedLevel parse_level(const std::string& s) {
    if (s == "L1") return SpeedLevel::L1;
    if (s == "L2") return SpeedLevel::L2;
    if (s == "L3") return SpeedLevel::L3;
    throw SchemaMismatch("unknown speed level '" + s + "'");
}

/// Percent of self-selected speed associated with each retained level.
inline double level_percent(SpeedLevel l) {
    switch (l) {
        case SpeedLevel::L1: return 40.0;
        case SpeedLevel::L2: return 55.0;
        case SpeedLevel::L3: return 70.0;
    }
    return 0.0;
}

// ---------------------------------------------------------------------------

struct Subject {
    std::string id;
    double age = 0.0;           // years
    double height = 0.0;        // metres
    double mass = 0.0;          // kilograms
    Gender gender = Gender::Male;
    double self_selected_speed = 0.0;  // km/h

    void validate() const {
        if (id.empty()) throw InvariantViolation("subject with empty id");
        if (!(age > 0.0)) throw InvariantViolation("subject " + id + ": age must be > 0");
        if (!(height > 1.0 && height < 2.5))
            throw InvariantViolation("subject " + id + ": height " + format_double(height) +
                                     " m outside (1.0, 2.5)");
        if (!(mass > 20.0 && mass < 200.0))
            throw InvariantViolation("subject " + id + ": mass " + format_double(mass) +
                                     " kg outside (20, 200)");
        if (!(self_selected_speed > 0.0))
            throw InvariantViolation("subject " + id + ": self-selected speed must be > 0");
    }
};

/// One time-normalized joint trajectory cycle. Samples live on a uniform grid
/// over [0,100]% of the gait cycle, sample 0 at heel strike. The stored grid
/// is endpoint-inclusive (default 101 points); the signal period is 100%, so
/// periodic operations use the first N-1 samples.
struct GaitCycle {
    std::string subject_id;
    JointChannel channel = JointChannel::HipFlexExt;
    Side side = Side::Right;
    std::optional<SpeedLevel> level;  // assigned by filter_speed_levels
    double speed_percent = 0.0;       // % of self-selected speed
    double speed = 0.0;               // km/h
    double cycle_time = 0.0;          // seconds
    std::vector<double> samples;

    size_t grid_size() const { return samples.size(); }

    void validate(size_t expected_grid) const {
        if (subject_id.empty()) throw InvariantViolation("cycle with empty subject_id");
        if (samples.size() < 51)
            throw InvariantViolation("cycle " + subject_id + "/" + channel_name(channel) +
                                     ": grid size " + std::to_string(samples.size()) + " < 51");
        if (expected_grid != 0 && samples.size() != expected_grid)
            throw InvariantViolation("cycle " + subject_id + "/" + channel_name(channel) +
                                     ": grid size " + std::to_string(samples.size()) +
                                     " != dataset grid " + std::to_string(expected_grid));
        for (double v : samples)
            if (!std::isfinite(v))
                throw InvariantViolation("cycle " + subject_id + "/" + channel_name(channel) +
                                         ": non-finite sample");
        if (!(speed > 0.0))
            throw InvariantViolation("cycle " + subject_id + ": speed must be > 0");
        if (!(cycle_time > 0.0))
            throw InvariantViolation("cycle " + subject_id + ": cycle_time must be > 0");
    }
};

struct Dataset {
    std::vector<Subject> subjects;
    std::vector<GaitCycle> cycles;
    size_t grid_size = 101;

    const Subject* find_subject(const std::string& id) const {
        for (const auto& s : subjects)
            if (s.id == id) return &s;
        return nullptr;
    }

    /// Full invariant check: ids resolve, grids uniform, channels complete,
    /// cycle speeds consistent with the subject's self-selected speed.
    void validate() const {
        for (const auto& s : subjects) s.validate();
        // subject_id -> (level key) -> channel presence mask
        std::map<std::string, std::map<std::string, std::array<bool, 4>>> seen;
        for (const auto& c : cycles) {
            c.validate(grid_size);
            const Subject* s = find_subject(c.subject_id);
            if (!s)
                throw InvariantViolation("cycle references unknown subject '" + c.subject_id + "'");
            double expected = c.speed_percent / 100.0 * s->self_selected_speed;
            if (std::abs(c.speed - expected) > 1e-6 * std::max(1.0, expected))
                throw InvariantViolation("cycle " + c.subject_id + "/" + channel_name(c.channel) +
                                         ": speed " + format_double(c.speed) +
                                         " km/h outside the admissible band for " +
                                         format_double(c.speed_percent) + "% of self-selected");
            std::string levkey = c.level ? level_name(*c.level)
                                         : "p" + format_double(c.speed_percent);
            seen[c.subject_id][levkey][static_cast<size_t>(c.channel)] = true;
        }
        for (const auto& [sid, levels] : seen)
            for (const auto& [lev, mask] : levels)
                for (JointChannel ch : kAllChannels)
                    if (!mask[static_cast<size_t>(ch)])
                        throw InvariantViolation("subject " + sid + " at " + lev +
                                                 ": channel " + channel_name(ch) + " missing");
    }
};

// ---------------------------------------------------------------------------

using Vec3 = std::array<double, 3>;

/// Raw marker capture for one subject: label -> positions (mm) at fs Hz,
/// plus heel-strike sample indices per side.
struct MarkerTrace {
    std::string subject_id;
    double fs = 0.0;  // Hz
    std::map<std::string, std::vector<Vec3>> markers;
    std::vector<size_t> heel_strikes_left;
    std::vector<size_t> heel_strikes_right;

    void validate() const {
        if (!(fs > 0.0)) throw InvariantViolation("marker trace: fs must be > 0");
        auto check_events = [](const std::vector<size_t>& ev, const char* side) {
            for (size_t i = 1; i < ev.size(); ++i)
                if (ev[i] <= ev[i - 1])
                    throw InvariantViolation(std::string("marker trace: ") + side +
                                             " heel-strike indices not strictly increasing");
        };
        check_events(heel_strikes_left, "left");
        check_events(heel_strikes_right, "right");
    }

    const std::vector<size_t>& heel_strikes(Side s) const {
        return s == Side::Left ? heel_strikes_left : heel_strikes_right;
    }
};

}  // namespace gaitgen
