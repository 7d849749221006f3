#pragma once

// Deterministic synthetic gait data. Key events follow exact linear laws of
// the subject predictors; cycles are quintic reconstructions of those events
// sampled onto the grid. The layouts are matched to the default detector
// templates so extraction recovers the generating events.

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gaitgen/dataset.hpp"
#include "gaitgen/events.hpp"
#include "gaitgen/regression.hpp"
#include "gaitgen/spline.hpp"
#include "gaitgen/types.hpp"

namespace synthetic {

using namespace gaitgen;

struct Dep {
    double cv = 0, cv2 = 0, ch = 0, cw = 0, ca = 0, cs = 0;

    double eval(const PredictorVector& p) const {
        return cv * (p.v - 1.8) + cv2 * (p.v2 - 3.24) + ch * (p.h - 1.7) + cw * (p.w - 70.0) +
               ca * (p.a - 40.0) + cs * p.s;
    }
};

enum class EventKind { Pinned, PositionExtremum, VelocityExtremum };

struct EventSpec {
    std::string id;
    EventKind kind;
    double t_mid;
    Dep t_dep;
    double y_mid;
    Dep y_dep;
    // derivative mids are derived from the layout; these deps perturb them
    Dep ydot_dep;
    Dep yddot_dep;
    // hand-set derivatives for pinned events; derived elsewhere
    double ydot_mid = 0.0;
    double yddot_mid = 0.0;
};

struct ChannelLayout {
    JointChannel channel;
    std::vector<EventSpec> events;  // ordered by t_mid
};

namespace detail {

constexpr double kRefCycleTime = 1.5;  // seconds, used to scale derivative mids

/// Linear-in-predictors fits of T_ref/T(v, age) and its square over the
/// subject range, so derivative laws can track cycle time while staying exact
/// linear functions of {1, v, v^2, a}.
struct TimeScaling {
    Eigen::Vector4d scale1;  // coefficients on {1, v, v^2, a}
    Eigen::Vector4d scale2;

    static const TimeScaling& instance() {
        static const TimeScaling s = [] {
            std::vector<double> vs, as;
            for (double v = 1.25; v <= 3.25; v += 0.125) vs.push_back(v);
            for (double a = 21.0; a <= 81.0; a += 5.0) as.push_back(a);
            const size_t n = vs.size() * as.size();
            Eigen::MatrixXd X(n, 4);
            Eigen::VectorXd y1(n), y2(n);
            size_t r = 0;
            for (double v : vs)
                for (double a : as) {
                    X.row(r) << 1.0, v, v * v, a;
                    const double t = predict_cycle_time_personalized(v, a);
                    y1[r] = kRefCycleTime / t;
                    y2[r] = (kRefCycleTime / t) * (kRefCycleTime / t);
                    ++r;
                }
            TimeScaling out;
            out.scale1 = (X.transpose() * X).ldlt().solve(X.transpose() * y1);
            out.scale2 = (X.transpose() * X).ldlt().solve(X.transpose() * y2);
            return out;
        }();
        return s;
    }

    double eval1(const PredictorVector& p) const {
        return scale1[0] + scale1[1] * p.v + scale1[2] * p.v2 + scale1[3] * p.a;
    }
    double eval2(const PredictorVector& p) const {
        return scale2[0] + scale2[1] * p.v + scale2[2] * p.v2 + scale2[3] * p.a;
    }
};

/// Derivative mids from the (t, y) layout. Velocity events are moved to the
/// midpoint of their (non-velocity) neighbours with a sinusoid-consistent
/// peak slope, so each half-arc behaves like a half sine wave; position
/// events get a three-point parabola curvature. Pinned events keep their
/// hand-set derivatives. Values refer to the reference cycle time; the laws
/// rescale them per subject through TimeScaling.
inline void finalize_layout(ChannelLayout& layout) {
    const size_t n = layout.events.size();
    // pass 1: velocity events move to the grid node nearest the midpoint of
    // their (non-velocity) neighbours, with a sinusoid-consistent peak slope;
    // their timing laws stay constant so extraction stays in one grid cell
    for (size_t i = 0; i < n; ++i) {
        EventSpec& e = layout.events[i];
        if (e.kind != EventKind::VelocityExtremum) continue;
        const EventSpec& prev = layout.events[(i + n - 1) % n];
        const EventSpec& next = layout.events[(i + 1) % n];
        double tp = e.t_mid - prev.t_mid;
        if (tp <= 0) tp += 100.0;
        double tn = next.t_mid - e.t_mid;
        if (tn <= 0) tn += 100.0;
        double t_new = std::round(prev.t_mid + 0.5 * (tp + tn));
        if (t_new >= 100.0) t_new -= 100.0;
        e.t_mid = t_new;
        e.t_dep = Dep{};
        e.y_mid = 0.5 * (prev.y_mid + next.y_mid);
        const double span_s = (tp + tn) / 100.0 * kRefCycleTime;
        e.ydot_mid = M_PI_2 * (next.y_mid - prev.y_mid) / span_s;
        e.yddot_mid = 0.0;
    }
    // pass 2: position curvature from the finalized neighbours
    for (size_t i = 0; i < n; ++i) {
        EventSpec& e = layout.events[i];
        if (e.kind != EventKind::PositionExtremum) continue;
        const EventSpec& prev = layout.events[(i + n - 1) % n];
        const EventSpec& next = layout.events[(i + 1) % n];
        double tp = e.t_mid - prev.t_mid;
        if (tp <= 0) tp += 100.0;
        double tn = next.t_mid - e.t_mid;
        if (tn <= 0) tn += 100.0;
        const double sp = tp / 100.0 * kRefCycleTime;  // seconds
        const double sn = tn / 100.0 * kRefCycleTime;
        e.ydot_mid = 0.0;
        e.yddot_mid = 2.0 * (prev.y_mid * sn - e.y_mid * (sp + sn) + next.y_mid * sp) /
                      (sp * sn * (sp + sn));
    }
}

}  // namespace detail

inline const std::map<JointChannel, ChannelLayout>& layouts() {
    static const std::map<JointChannel, ChannelLayout> all = [] {
        std::map<JointChannel, ChannelLayout> m;
        auto pin = [](const char* id, double y, Dep ydep, double ydot, double yddot) {
            EventSpec e;
            e.id = id;
            e.kind = EventKind::Pinned;
            e.t_mid = 0.0;
            e.y_mid = y;
            e.y_dep = ydep;
            e.ydot_mid = ydot;
            e.yddot_mid = yddot;
            return e;
        };
        auto pos = [](const char* id, double t, Dep tdep, double y, Dep ydep) {
            EventSpec e;
            e.id = id;
            e.kind = EventKind::PositionExtremum;
            e.t_mid = t;
            e.t_dep = tdep;
            e.y_mid = y;
            e.y_dep = ydep;
            return e;
        };
        auto vel = [](const char* id, double t, Dep tdep, double y, Dep ydep) {
            EventSpec e;
            e.id = id;
            e.kind = EventKind::VelocityExtremum;
            e.t_mid = t;
            e.t_dep = tdep;
            e.y_mid = y;
            e.y_dep = ydep;
            return e;
        };

        {
            ChannelLayout knee;
            knee.channel = JointChannel::KneeFlexExt;
            knee.events = {
                pin("heel_strike", 8.0, {.ch = 8.0, .cs = 0.6}, 25.0, 150.0),
                pos("stance_pos_max", 15.0, {.cv = 0.6}, 30.0,
                    {.cv = 1.2, .ch = 8.0, .cw = 0.03, .cs = 1.0}),
                vel("stance_vel_min", 32.0, {.cv = 0.5}, 18.0, {.ch = 5.0}),
                pos("counter_pos_min", 48.0, {.cv = 0.8}, 2.0, {.ch = 1.5, .cs = 0.3}),
                vel("swing_vel_max", 62.0, {.cv = 0.7}, 25.0, {.ch = 4.0}),
                pos("swing_pos_max", 75.0, {.cv = 0.9}, 60.0,
                    {.cv = 1.5, .ch = 9.0, .cw = 0.04, .ca = -0.04, .cs = 1.2}),
            };
            m[knee.channel] = knee;
        }
        {
            ChannelLayout hip;
            hip.channel = JointChannel::HipFlexExt;
            hip.events = {
                pin("heel_strike", 28.0, {.ch = 7.0, .cs = 1.0}, 8.0, -60.0),
                vel("stance_vel_min", 25.0, {.cv = 0.6}, 8.0, {.ch = 3.0}),
                pos("stance_pos_min", 50.0, {.cv = 0.7}, -12.0,
                    {.cv = -0.8, .ch = -3.0, .cw = -0.03, .ca = 0.03, .cs = -1.0}),
                vel("swing_vel_max", 65.0, {.cv = 0.5}, 5.0, {.ch = 2.0}),
                pos("swing_pos_max", 85.0, {.cv = 0.4}, 30.0, {.cv = 0.9, .ch = 6.0, .cs = 1.0}),
                vel("late_vel_min", 93.0, {.cv = 0.3}, 26.8, {.ch = 5.0}),
            };
            m[hip.channel] = hip;
        }
        {
            ChannelLayout abad;
            abad.channel = JointChannel::HipAbAd;
            abad.events = {
                pin("heel_strike", -2.0, {.cs = 0.3}, 10.0, -15.0),
                vel("stance_vel_max", 12.0, {.cv = 0.5}, 1.5, {.ch = 1.0}),
                pos("stance_pos_max", 30.0, {.cv = 0.6}, 5.0,
                    {.cv = 0.4, .ch = 1.5, .cw = 0.01, .cs = 0.4}),
                vel("swing_vel_min", 55.0, {.cv = 0.5}, 0.0, {.ch = 0.5}),
                pos("swing_pos_min", 78.0, {.cv = 0.4}, -5.0, {.cv = -0.3, .ch = -1.2, .cs = -0.4}),
                vel("late_vel_max", 90.0, {.cv = 0.3}, -3.4, {.ch = 0.3}),
            };
            m[abad.channel] = abad;
        }
        {
            ChannelLayout pelvis;
            pelvis.channel = JointChannel::PelvisLateral;
            pelvis.events = {
                vel("vel_max", 5.0, {.cv = 0.4}, 0.0, {.ch = 2.0}),
                pos("pos_max", 30.0, {.cv = 0.5}, 25.0,
                    {.cv = 1.0, .ch = 4.0, .cw = 0.05, .cs = 1.5}),
                vel("vel_min", 55.0, {.cv = 0.4}, 0.0, {.ch = -2.0}),
                pos("pos_min", 80.0, {.cv = 0.5}, -25.0, {.cv = -1.0, .ch = -4.0, .cs = -1.5}),
            };
            m[pelvis.channel] = pelvis;
        }
        for (auto& [ch, layout] : m) detail::finalize_layout(layout);
        return m;
    }();
    return all;
}

/// Ground-truth law evaluation for one event parameter. Derivative mids are
/// rescaled with cycle time through a linear-in-predictors factor, keeping
/// every law an exact linear function of {1, v, v^2, h, w, a, s}.
inline double eval_law(const EventSpec& e, EventParameter param, const PredictorVector& pv) {
    const auto& ts = detail::TimeScaling::instance();
    switch (param) {
        case EventParameter::T:
            return e.kind == EventKind::Pinned ? 0.0 : e.t_mid + e.t_dep.eval(pv);
        case EventParameter::Y:
            return e.y_mid + e.y_dep.eval(pv);
        case EventParameter::Ydot:
            if (e.kind == EventKind::PositionExtremum) return 0.0;
            return e.ydot_mid * ts.eval1(pv) + e.ydot_dep.eval(pv);
        case EventParameter::Yddot:
            if (e.kind == EventKind::VelocityExtremum) return 0.0;
            return e.yddot_mid * ts.eval2(pv) + e.yddot_dep.eval(pv);
    }
    return 0.0;
}

inline const EventSpec& find_spec(JointChannel ch, const std::string& detector_id) {
    for (const auto& e : layouts().at(ch).events)
        if (e.id == detector_id) return e;
    throw std::runtime_error("no synthetic spec for detector " + detector_id);
}

/// True key events for a subject at speed v (right-side convention).
inline KeyEventSet true_events(JointChannel ch, const Subject& subj, double v_kmh) {
    const PredictorVector pv = PredictorVector::make(subj, v_kmh);
    KeyEventSet set;
    set.channel = ch;
    set.side = Side::Right;
    set.cycle_time = predict_cycle_time_personalized(v_kmh, subj.age);
    for (const auto& spec : layouts().at(ch).events) {
        KeyEvent e;
        e.detector_id = spec.id;
        e.t = eval_law(spec, EventParameter::T, pv);
        e.y = eval_law(spec, EventParameter::Y, pv);
        e.ydot = eval_law(spec, EventParameter::Ydot, pv);
        e.yddot = eval_law(spec, EventParameter::Yddot, pv);
        set.events.push_back(e);
    }
    std::sort(set.events.begin(), set.events.end(),
              [](const KeyEvent& a, const KeyEvent& b) { return a.t < b.t; });
    return set;
}

/// One synthetic cycle: the quintic reconstruction of the true events sampled
/// onto the grid. Left-side frontal-plane channels are stored sign-mirrored.
inline GaitCycle make_cycle(JointChannel ch, const Subject& subj, double percent, Side side,
                            size_t grid = 101) {
    const double v = percent / 100.0 * subj.self_selected_speed;
    const KeyEventSet events = true_events(ch, subj, v);
    const TrajectorySpline spline = build_spline(events);
    GaitCycle c;
    c.subject_id = subj.id;
    c.channel = ch;
    c.side = side;
    c.speed_percent = percent;
    c.speed = v;
    c.cycle_time = events.cycle_time;
    c.samples = spline.to_grid(grid);
    if (side == Side::Left && is_frontal_plane(ch))
        for (double& s : c.samples) s = -s;
    return c;
}

/// Deterministic subject roster spanning the predictor ranges; attributes are
/// drawn from a fixed-seed generator so the design matrix keeps full rank.
inline std::vector<Subject> make_subjects(size_t n, uint64_t seed = 90210) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<Subject> out;
    for (size_t i = 0; i < n; ++i) {
        Subject s;
        s.id = "S" + std::to_string(100 + i);
        s.age = 22.0 + 55.0 * u01(rng);
        s.height = 1.52 + 0.40 * u01(rng);
        s.mass = 50.0 + 45.0 * u01(rng);
        s.gender = i % 2 == 0 ? Gender::Male : Gender::Female;
        s.self_selected_speed = 3.5 + 0.9 * u01(rng);
        s.validate();
        out.push_back(s);
    }
    return out;
}

/// Full synthetic dataset: every subject at the three retained speed levels,
/// both sides, all channels. Percents default to the retained trio so the
/// dataset is filter-ready.
inline Dataset make_dataset(size_t n_subjects, size_t grid = 101,
                            const std::vector<double>& percents = {40.0, 55.0, 70.0},
                            bool both_sides = true) {
    Dataset ds;
    ds.grid_size = grid;
    ds.subjects = make_subjects(n_subjects);
    for (const auto& subj : ds.subjects) {
        for (double pct : percents) {
            for (Side side : {Side::Right, Side::Left}) {
                if (!both_sides && side == Side::Left) continue;
                for (JointChannel ch : kAllChannels)
                    ds.cycles.push_back(make_cycle(ch, subj, pct, side, grid));
            }
        }
    }
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// Raw-layout fixture for ingestion tests
// ---------------------------------------------------------------------------

inline std::string raw_schema_text() {
    return "metadata_file = subjects_meta.csv\n"
           "meta.id = participant\n"
           "meta.age = age_years\n"
           "meta.height = height_cm\n"
           "meta.height_unit = cm\n"
           "meta.mass = mass_kg\n"
           "meta.gender = sex\n"
           "meta.gender_male = male\n"
           "meta.gender_female = female\n"
           "meta.speed = comfortable_speed\n"
           "meta.speed_unit = m/s\n"
           "angles.file_template = {id}_trial{trial}_angles.csv\n"
           "trial_percents = 40,55,70,85\n"
           "strides.file_template = {id}_trial{trial}_strides.csv\n"
           "angles.column.hip_abad.L = LHipAbAd\n"
           "angles.column.hip_abad.R = RHipAbAd\n"
           "angles.column.hip_flexext.L = LHipFlex\n"
           "angles.column.hip_flexext.R = RHipFlex\n"
           "angles.column.knee_flexext.L = LKneeFlex\n"
           "angles.column.knee_flexext.R = RKneeFlex\n"
           "angles.column.pelvis_lateral.L = LPelvisLat\n"
           "angles.column.pelvis_lateral.R = RPelvisLat\n";
}

/// Write a raw database root (metadata, per-trial angle and stride files)
/// whose ingestion reproduces make_dataset(n, grid, {40,55,70,85}).
inline std::filesystem::path write_raw_root(const std::filesystem::path& dir, size_t n_subjects,
                                            size_t grid = 101) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::vector<Subject> subjects = make_subjects(n_subjects);
    const std::vector<double> percents = {40.0, 55.0, 70.0, 85.0};

    std::string meta = "participant,age_years,height_cm,mass_kg,sex,comfortable_speed\n";
    for (const auto& s : subjects) {
        meta += s.id + "," + format_double(s.age) + "," + format_double(s.height * 100.0) + "," +
                format_double(s.mass) + "," + (s.gender == Gender::Male ? "male" : "female") +
                "," + format_double(s.self_selected_speed / 3.6) + "\n";
    }
    write_text_file(dir / "subjects_meta.csv", meta);

    const std::map<JointChannel, std::pair<std::string, std::string>> columns = {
        {JointChannel::HipAbAd, {"LHipAbAd", "RHipAbAd"}},
        {JointChannel::HipFlexExt, {"LHipFlex", "RHipFlex"}},
        {JointChannel::KneeFlexExt, {"LKneeFlex", "RKneeFlex"}},
        {JointChannel::PelvisLateral, {"LPelvisLat", "RPelvisLat"}},
    };

    for (const auto& subj : subjects) {
        for (size_t trial = 1; trial <= percents.size(); ++trial) {
            const double pct = percents[trial - 1];
            std::map<JointChannel, std::map<Side, GaitCycle>> cycles;
            for (JointChannel ch : kAllChannels) {
                cycles[ch][Side::Left] = make_cycle(ch, subj, pct, Side::Left, grid);
                cycles[ch][Side::Right] = make_cycle(ch, subj, pct, Side::Right, grid);
            }
            std::string header;
            for (JointChannel ch : kAllChannels) {
                if (!header.empty()) header += ",";
                header += columns.at(ch).first + "," + columns.at(ch).second;
            }
            std::string body;
            for (size_t i = 0; i < grid; ++i) {
                std::string row;
                for (JointChannel ch : kAllChannels) {
                    if (!row.empty()) row += ",";
                    row += format_double(cycles[ch][Side::Left].samples[i]) + "," +
                           format_double(cycles[ch][Side::Right].samples[i]);
                }
                body += row + "\n";
            }
            const std::string base = subj.id + "_trial" + std::to_string(trial);
            write_text_file(dir / (base + "_angles.csv"), header + "\n" + body);

            const double ct = cycles[JointChannel::KneeFlexExt][Side::Right].cycle_time;
            write_text_file(dir / (base + "_strides.csv"),
                            "side,cycle_time_s\nL," + format_double(ct) + "\nR," +
                                format_double(ct) + "\n");
        }
    }
    const fs::path schema_path = dir / "schema.cfg";
    write_text_file(schema_path, raw_schema_text());
    return schema_path;
}

// ---------------------------------------------------------------------------
// Marker-trace fixture for the pelvis derivation
// ---------------------------------------------------------------------------

/// Markers tracing a lateral sinusoid of the given amplitude locked to the
/// gait cycle; four pelvis markers with fixed offsets, n_strides full cycles.
inline MarkerTrace make_marker_trace(double amplitude_mm, size_t n_strides, double fs,
                                     double stride_s, double mean_offset_mm = 100.0) {
    MarkerTrace trace;
    trace.subject_id = "marker_subject";
    trace.fs = fs;
    const size_t per_stride = static_cast<size_t>(std::lround(stride_s * fs));
    const size_t total = per_stride * n_strides + 1;
    const std::vector<std::string> labels = {"RASIS", "LASIS", "RPSIS", "LPSIS"};
    const std::array<double, 4> offsets = {120.0, -120.0, 80.0, -80.0};
    for (size_t m = 0; m < labels.size(); ++m) {
        std::vector<Vec3> pts;
        pts.reserve(total);
        for (size_t i = 0; i < total; ++i) {
            const double phase = static_cast<double>(i % per_stride) /
                                 static_cast<double>(per_stride);
            const double lateral =
                mean_offset_mm + offsets[m] + amplitude_mm * std::sin(2.0 * M_PI * phase);
            pts.push_back({lateral, 500.0 + 10.0 * static_cast<double>(m), 900.0});
        }
        trace.markers[labels[m]] = pts;
    }
    for (size_t k = 0; k <= n_strides; ++k) {
        trace.heel_strikes_right.push_back(k * per_stride);
        if (k < n_strides)
            trace.heel_strikes_left.push_back(k * per_stride + per_stride / 2);
    }
    return trace;
}

}  // namespace synthetic
