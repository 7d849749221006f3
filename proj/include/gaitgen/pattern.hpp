#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gaitgen/dataset.hpp"
#include "gaitgen/regression.hpp"
#include "gaitgen/spline.hpp"

namespace gaitgen {

// ---------------------------------------------------------------------------
// Gait patterns: the controller-facing representation of one full cycle per
// channel, either as a key-event spline (personalized) or a sampled average
// cycle (standard / random).
// ---------------------------------------------------------------------------

enum class PatternKind { Personalized, Standard, Random };

inline const char* pattern_kind_name(PatternKind k) {
    switch (k) {
        case PatternKind::Personalized: return "personalized";
        case PatternKind::Standard: return "standard";
        case PatternKind::Random: return "random";
    }
    return "?";
}

/// One channel of a pattern. Spline-backed channels evaluate the quintic
/// directly; cycle-backed channels evaluate a periodic cubic interpolant of
/// the stored samples.
class PatternChannel {
public:
    static PatternChannel from_spline(TrajectorySpline spline) {
        PatternChannel c;
        c.spline_ = std::move(spline);
        return c;
    }

    static PatternChannel from_cycle(GaitCycle cycle) {
        PatternChannel c;
        std::vector<double> period(cycle.samples.begin(), cycle.samples.end() - 1);
        c.interp_ = std::make_shared<PeriodicCubic>(std::move(period), 100.0);
        c.cycle_ = std::move(cycle);
        return c;
    }

    bool is_spline() const { return spline_.has_value(); }
    const TrajectorySpline& spline() const { return *spline_; }
    const GaitCycle& cycle() const { return *cycle_; }

    /// Position plus real-time derivatives at t% of the cycle.
    SplineSample sample_at(double t_pct, double cycle_time) const {
        if (spline_) return spline_->sample_at(t_pct);
        const double pct_per_s = 100.0 / cycle_time;
        SplineSample s;
        s.position = interp_->value(t_pct);
        s.velocity = interp_->derivative(t_pct) * pct_per_s;
        s.acceleration = interp_->second_derivative(t_pct) * pct_per_s * pct_per_s;
        return s;
    }

    std::vector<double> to_grid(size_t n) const {
        if (spline_) return spline_->to_grid(n);
        if (cycle_->samples.size() == n) return cycle_->samples;
        return resample_cycle_samples(cycle_->samples, n);
    }

private:
    std::optional<TrajectorySpline> spline_;
    std::optional<GaitCycle> cycle_;
    std::shared_ptr<const PeriodicCubic> interp_;
};

struct GaitPattern {
    PatternKind kind = PatternKind::Standard;
    double cycle_time = 1.0;  // seconds
    double speed = 0.0;       // km/h
    std::string source;       // provenance tag for export headers
    std::map<JointChannel, PatternChannel> channels;
    std::map<JointChannel, KeyEventSet> events;  // populated for personalized patterns

    const PatternChannel& channel(JointChannel ch) const {
        auto it = channels.find(ch);
        if (it == channels.end())
            throw InvariantViolation(std::string("pattern: channel ") + channel_name(ch) +
                                     " missing");
        return it->second;
    }

    void validate() const {
        if (!(cycle_time > 0.0)) throw InvariantViolation("pattern: cycle_time must be > 0");
        for (JointChannel ch : kAllChannels) channel(ch);
    }
};

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Predict key events for the subject and reconstruct all four channels as
/// quintic splines; cycle time from the personalized model.
inline GaitPattern generate_personalized(const ModelBank& bank, const Subject& subj,
                                         double v_kmh) {
    GaitPattern p;
    p.kind = PatternKind::Personalized;
    p.speed = v_kmh;
    p.cycle_time = predict_cycle_time_personalized(v_kmh, subj.age);
    p.source = "subject:" + hex64(fnv1a(subj.id + "," + format_double(subj.age) + "," +
                                        format_double(subj.height) + "," +
                                        format_double(subj.mass) + "," +
                                        format_double(v_kmh)));
    p.events = predict_events(bank, subj, v_kmh);
    for (auto& [ch, ev] : p.events)
        p.channels.emplace(ch, PatternChannel::from_spline(build_spline(ev)));
    p.validate();
    return p;
}

namespace detail {

/// Pointwise average over cycles, mirroring left-side frontal-plane channels
/// onto the right-side sign convention.
inline GaitCycle pooled_average(const std::vector<const GaitCycle*>& cycles, size_t grid_size) {
    if (cycles.empty()) throw EmptyInput("pattern average: no cycles");
    GaitCycle out;
    out.subject_id = cycles.front()->subject_id;
    out.channel = cycles.front()->channel;
    out.side = Side::Right;
    out.samples.assign(grid_size, 0.0);
    double time_sum = 0.0, speed_sum = 0.0, pct_sum = 0.0;
    for (const auto* c : cycles) {
        if (c->samples.size() != grid_size)
            throw GridMismatch("pattern average: grid size mismatch");
        const double sign =
            (c->side == Side::Left && is_frontal_plane(c->channel)) ? -1.0 : 1.0;
        for (size_t i = 0; i < grid_size; ++i) out.samples[i] += sign * c->samples[i];
        time_sum += c->cycle_time;
        speed_sum += c->speed;
        pct_sum += c->speed_percent;
    }
    const double n = static_cast<double>(cycles.size());
    for (double& v : out.samples) v /= n;
    out.cycle_time = time_sum / n;
    out.speed = speed_sum / n;
    out.speed_percent = pct_sum / n;
    return out;
}

}  // namespace detail

/// Average the whole trajectory over all subjects, speed levels and both legs
/// (assuming symmetric gait); cycle time from the standard model at (v, h).
inline GaitPattern generate_standard(const Dataset& ds, double v_kmh, double height_m) {
    GaitPattern p;
    p.kind = PatternKind::Standard;
    p.speed = v_kmh;
    p.cycle_time = predict_cycle_time_standard(v_kmh, height_m);
    p.source = "standard:" + hex64(fnv1a(std::to_string(ds.subjects.size()) + "," +
                                         std::to_string(ds.cycles.size())));
    for (JointChannel ch : kAllChannels) {
        std::vector<const GaitCycle*> pool;
        for (const auto& c : ds.cycles)
            if (c.channel == ch && c.level) pool.push_back(&c);
        if (pool.empty())
            throw EmptyInput(std::string("generate_standard: no cycles for ") + channel_name(ch));
        GaitCycle avg = detail::pooled_average(pool, ds.grid_size);
        avg.subject_id = "standard";
        avg.cycle_time = p.cycle_time;
        avg.speed = v_kmh;
        p.channels.emplace(ch, PatternChannel::from_cycle(std::move(avg)));
    }
    p.validate();
    return p;
}

/// Uniformly select one subject's ensemble pattern at the given level.
/// Deterministic under the seed.
inline GaitPattern pick_random_pattern(const Dataset& ds, SpeedLevel level, uint64_t seed,
                                       std::string* chosen_subject = nullptr) {
    std::set<std::string> ids;
    for (const auto& c : ds.cycles)
        if (c.level == level) ids.insert(c.subject_id);
    if (ids.empty())
        throw EmptyInput(std::string("pick_random_pattern: no cycles at ") + level_name(level));
    std::vector<std::string> ordered(ids.begin(), ids.end());
    std::mt19937_64 rng(seed);
    const std::string& pick =
        ordered[std::uniform_int_distribution<size_t>(0, ordered.size() - 1)(rng)];
    if (chosen_subject) *chosen_subject = pick;

    GaitPattern p;
    p.kind = PatternKind::Random;
    p.source = "subject:" + hex64(fnv1a(pick));
    double time_sum = 0.0, speed_sum = 0.0;
    size_t n_meta = 0;
    for (JointChannel ch : kAllChannels) {
        std::vector<const GaitCycle*> pool;
        for (const auto& c : ds.cycles)
            if (c.channel == ch && c.level == level && c.subject_id == pick) pool.push_back(&c);
        if (pool.empty())
            throw EmptyInput(std::string("pick_random_pattern: subject ") + pick +
                             " lacks channel " + channel_name(ch));
        GaitCycle avg = detail::pooled_average(pool, ds.grid_size);
        time_sum += avg.cycle_time;
        speed_sum += avg.speed;
        ++n_meta;
        p.channels.emplace(ch, PatternChannel::from_cycle(std::move(avg)));
    }
    p.cycle_time = time_sum / static_cast<double>(n_meta);
    p.speed = speed_sum / static_cast<double>(n_meta);
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// Sampling and export
// ---------------------------------------------------------------------------

struct PatternSeries {
    double dt = 0.0;
    std::vector<double> time;  // seconds
    std::map<JointChannel, std::vector<SplineSample>> channels;
};

/// Periodic real-time sampling: position, velocity and acceleration per
/// channel at t = k*dt over n_cycles cycles (endpoint included).
inline PatternSeries sample_pattern(const GaitPattern& p, double dt, double n_cycles = 1.0) {
    if (!(dt > 0.0)) throw InvariantViolation("sample_pattern: dt must be > 0");
    if (!(n_cycles > 0.0)) throw InvariantViolation("sample_pattern: n_cycles must be > 0");
    p.validate();
    PatternSeries out;
    out.dt = dt;
    const double horizon = n_cycles * p.cycle_time;
    const size_t count = static_cast<size_t>(std::floor(horizon / dt + 1e-9)) + 1;
    out.time.resize(count);
    for (size_t k = 0; k < count; ++k) out.time[k] = static_cast<double>(k) * dt;
    for (JointChannel ch : kAllChannels) {
        auto& series = out.channels[ch];
        series.reserve(count);
        const PatternChannel& pc = p.channel(ch);
        for (size_t k = 0; k < count; ++k) {
            const double t_pct = std::fmod(out.time[k] / p.cycle_time * 100.0, 100.0);
            series.push_back(pc.sample_at(t_pct, p.cycle_time));
        }
    }
    return out;
}

/// Pattern export: one delimited file, header lines carrying kind, cycle
/// time, speed and source hash.
inline std::string pattern_series_to_text(const GaitPattern& p, const PatternSeries& s) {
    std::string out;
    out += "# kind = " + std::string(pattern_kind_name(p.kind)) + "\n";
    out += "# cycle_time_s = " + format_double(p.cycle_time) + "\n";
    out += "# speed_kmh = " + format_double(p.speed) + "\n";
    out += "# source = " + p.source + "\n";
    out += "time_s";
    for (JointChannel ch : kAllChannels) {
        const std::string base = channel_name(ch);
        out += "," + base + "_pos," + base + "_vel," + base + "_acc";
    }
    out += "\n";
    for (size_t k = 0; k < s.time.size(); ++k) {
        out += format_double(s.time[k]);
        for (JointChannel ch : kAllChannels) {
            const SplineSample& v = s.channels.at(ch)[k];
            out += "," + format_double(v.position) + "," + format_double(v.velocity) + "," +
                   format_double(v.acceleration);
        }
        out += "\n";
    }
    return out;
}

/// Plot-data export: per-channel % grid with values and key-event markers.
inline std::string pattern_plotdata_to_text(const GaitPattern& p, size_t grid_size = 101) {
    std::string out;
    out += "# kind = " + std::string(pattern_kind_name(p.kind)) + "\n";
    out += "section,channel,t_pct,y,ydot,yddot,detector\n";
    const double step = 100.0 / static_cast<double>(grid_size - 1);
    for (JointChannel ch : kAllChannels) {
        const PatternChannel& pc = p.channel(ch);
        for (size_t i = 0; i < grid_size; ++i) {
            const double t = static_cast<double>(i) * step;
            const SplineSample v = pc.sample_at(t, p.cycle_time);
            out += std::string("grid,") + channel_name(ch) + "," + format_double(t) + "," +
                   format_double(v.position) + "," + format_double(v.velocity) + "," +
                   format_double(v.acceleration) + ",-\n";
        }
        const auto ev = p.events.find(ch);
        if (ev != p.events.end()) {
            for (const auto& e : ev->second.events)
                out += std::string("event,") + channel_name(ch) + "," + format_double(e.t) + "," +
                       format_double(e.y) + "," + format_double(e.ydot) + "," +
                       format_double(e.yddot) + "," + e.detector_id + "\n";
        }
    }
    return out;
}

}  // namespace gaitgen
