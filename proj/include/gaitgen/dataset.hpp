#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gaitgen/interp.hpp"
#include "gaitgen/types.hpp"

namespace gaitgen {

// ---------------------------------------------------------------------------
// Gait database ingestion: per-subject metadata plus per-trial angle files
// (and optionally raw pelvis markers), normalized onto the dataset grid.
// ---------------------------------------------------------------------------

struct DatasetSchema {
    // subject metadata
    std::string metadata_file;
    char meta_delimiter = ',';
    std::string col_id, col_age, col_height, col_mass, col_gender, col_speed;
    std::string height_unit = "m";     // "m" or "cm"
    std::string speed_unit = "km/h";   // "km/h" or "m/s"
    std::string gender_male = "M", gender_female = "F";

    // per-trial angle files
    std::string angles_template;  // placeholders {id}, {trial}
    char angles_delimiter = ',';
    // set for sources that record frontal-plane angles anatomically (same sign
    // semantics on both legs); the store convention is side-signed
    bool mirror_left_frontal = false;
    std::vector<double> trial_percents;  // % of self-selected speed per trial index (1-based)
    // channel/side -> column name; pelvis columns optional when markers are used
    std::map<std::pair<JointChannel, Side>, std::string> angle_columns;

    // per-trial stride times: columns side, cycle_time_s
    std::string strides_template;

    // raw pelvis markers (optional)
    std::string markers_template;       // columns <label>_<axis>
    std::string marker_events_template; // columns side, index
    char markers_delimiter = ',';
    double markers_fs = 0.0;
    std::vector<std::string> marker_labels;
    int marker_lateral_axis = 0;  // 0=X, 1=Y, 2=Z

    bool has_markers() const { return !markers_template.empty(); }

    static DatasetSchema load(const std::filesystem::path& p) {
        const KeyValueFile kv = KeyValueFile::load(p);
        DatasetSchema s;
        s.metadata_file = kv.get("metadata_file");
        s.meta_delimiter = kv.get_or("meta.delimiter", ",")[0];
        s.col_id = kv.get("meta.id");
        s.col_age = kv.get("meta.age");
        s.col_height = kv.get("meta.height");
        s.col_mass = kv.get("meta.mass");
        s.col_gender = kv.get("meta.gender");
        s.col_speed = kv.get("meta.speed");
        s.height_unit = kv.get_or("meta.height_unit", "m");
        s.speed_unit = kv.get_or("meta.speed_unit", "km/h");
        s.gender_male = kv.get_or("meta.gender_male", "M");
        s.gender_female = kv.get_or("meta.gender_female", "F");
        if (s.height_unit != "m" && s.height_unit != "cm")
            throw ConfigError("meta.height_unit must be 'm' or 'cm'");
        if (s.speed_unit != "km/h" && s.speed_unit != "m/s")
            throw ConfigError("meta.speed_unit must be 'km/h' or 'm/s'");

        s.angles_template = kv.get("angles.file_template");
        s.angles_delimiter = kv.get_or("angles.delimiter", ",")[0];
        s.mirror_left_frontal = kv.get_or("angles.mirror_left_frontal", "false") == "true";
        for (const auto& tok : split(kv.get("trial_percents"), ','))
            s.trial_percents.push_back(parse_double(tok, "trial_percents"));
        for (JointChannel ch : kAllChannels) {
            for (Side side : {Side::Left, Side::Right}) {
                const std::string key =
                    std::string("angles.column.") + channel_name(ch) + "." + side_name(side);
                if (kv.has(key)) s.angle_columns[{ch, side}] = kv.get(key);
            }
        }
        s.strides_template = kv.get("strides.file_template");

        if (kv.has("markers.file_template")) {
            s.markers_template = kv.get("markers.file_template");
            s.marker_events_template = kv.get("markers.events_file_template");
            s.markers_delimiter = kv.get_or("markers.delimiter", ",")[0];
            s.markers_fs = kv.get_double("markers.fs");
            for (const auto& tok : split(kv.get("markers.labels"), ','))
                s.marker_labels.push_back(trim(tok));
            const std::string axis = to_lower(kv.get_or("markers.lateral_axis", "x"));
            if (axis == "x") s.marker_lateral_axis = 0;
            else if (axis == "y") s.marker_lateral_axis = 1;
            else if (axis == "z") s.marker_lateral_axis = 2;
            else throw ConfigError("markers.lateral_axis must be x, y or z");
        }

        // every channel needs either a column mapping or the marker pipeline
        for (JointChannel ch : kAllChannels) {
            const bool mapped = s.angle_columns.count({ch, Side::Left}) ||
                                s.angle_columns.count({ch, Side::Right});
            if (!mapped && !(ch == JointChannel::PelvisLateral && s.has_markers()))
                throw ConfigError(std::string("schema: no source for channel ") +
                                  channel_name(ch));
        }
        return s;
    }
};

namespace detail {

inline std::string expand_template(std::string tmpl, const std::string& id, size_t trial) {
    auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
        size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    replace_all(tmpl, "{id}", id);
    replace_all(tmpl, "{trial}", std::to_string(trial));
    return tmpl;
}

/// Delimited text with a required header row.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::string origin;

    static Table load(const std::filesystem::path& p, char delim) {
        Table t;
        t.origin = p.string();
        const auto lines = read_lines(p);
        bool got_header = false;
        for (const auto& line : lines) {
            if (trim(line).empty() || trim(line)[0] == '#') continue;
            auto fields = split(line, delim);
            for (auto& f : fields) f = trim(f);
            if (!got_header) {
                t.header = fields;
                got_header = true;
            } else {
                if (fields.size() != t.header.size())
                    throw SchemaMismatch(t.origin + ": row " + std::to_string(t.rows.size() + 2) +
                                         " has " + std::to_string(fields.size()) +
                                         " fields, header has " + std::to_string(t.header.size()));
                t.rows.push_back(std::move(fields));
            }
        }
        if (!got_header) throw SchemaMismatch(p.string() + ": missing header row");
        return t;
    }

    size_t column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw SchemaMismatch(origin + ": missing column '" + name + "'");
    }

    std::optional<size_t> column_opt(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Pointwise mean of cycles sharing channel, side and grid; cycle time and
/// speed are averaged too.
inline GaitCycle ensemble_average(const std::vector<GaitCycle>& cycles) {
    if (cycles.empty()) throw EmptyInput("ensemble_average: no cycles");
    const GaitCycle& first = cycles.front();
    GaitCycle out = first;
    std::fill(out.samples.begin(), out.samples.end(), 0.0);
    double time_sum = 0.0, speed_sum = 0.0, pct_sum = 0.0;
    for (const auto& c : cycles) {
        if (c.channel != first.channel)
            throw MixedChannels("ensemble_average: mixed channels");
        if (c.side != first.side)
            throw MixedChannels("ensemble_average: mixed sides");
        if (c.samples.size() != first.samples.size())
            throw GridMismatch("ensemble_average: mixed grid sizes");
        for (size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += c.samples[i];
        time_sum += c.cycle_time;
        speed_sum += c.speed;
        pct_sum += c.speed_percent;
    }
    const double n = static_cast<double>(cycles.size());
    for (double& v : out.samples) v /= n;
    out.cycle_time = time_sum / n;
    out.speed = speed_sum / n;
    out.speed_percent = pct_sum / n;
    return out;
}

/// Pelvis lateral displacement cycles from raw markers: lateral coordinate of
/// the pelvis-marker centroid, mean-removed per stride, time-normalized and
/// ensemble-averaged per side. Units mm.
inline std::vector<GaitCycle> derive_pelvis_lateral(const MarkerTrace& trace,
                                                    const std::vector<std::string>& labels,
                                                    int lateral_axis, size_t grid_size) {
    trace.validate();
    if (labels.empty()) throw MissingMarker("no pelvis marker labels configured");
    std::vector<const std::vector<Vec3>*> series;
    size_t len = 0;
    for (const auto& label : labels) {
        auto it = trace.markers.find(label);
        if (it == trace.markers.end())
            throw MissingMarker("marker '" + label + "' absent for subject " + trace.subject_id);
        if (!series.empty() && it->second.size() != len)
            throw InvariantViolation("marker '" + label + "': length mismatch");
        len = it->second.size();
        series.push_back(&it->second);
    }

    std::vector<double> centroid(len);
    for (size_t t = 0; t < len; ++t) {
        double acc = 0.0;
        for (const auto* m : series) acc += (*m)[t][static_cast<size_t>(lateral_axis)];
        centroid[t] = acc / static_cast<double>(series.size());
    }

    std::vector<GaitCycle> out;
    for (Side side : {Side::Left, Side::Right}) {
        const auto& strikes = trace.heel_strikes(side);
        if (strikes.size() < 4)  // need >= 3 strides
            throw InsufficientCycles("subject " + trace.subject_id + " side " + side_name(side) +
                                     ": " + std::to_string(strikes.size() < 1 ? 0 : strikes.size() - 1) +
                                     " strides (< 3)");
        std::vector<GaitCycle> strides;
        for (size_t k = 0; k + 1 < strikes.size(); ++k) {
            const size_t i0 = strikes[k], i1 = strikes[k + 1];
            if (i1 >= len)
                throw InvariantViolation("heel-strike index beyond marker series");
            std::vector<double> seg(centroid.begin() + static_cast<long>(i0),
                                    centroid.begin() + static_cast<long>(i1) + 1);
            const double mean = std::accumulate(seg.begin(), seg.end(), 0.0) /
                                static_cast<double>(seg.size());
            for (double& v : seg) v -= mean;
            GaitCycle c;
            c.subject_id = trace.subject_id;
            c.channel = JointChannel::PelvisLateral;
            c.side = side;
            c.cycle_time = static_cast<double>(i1 - i0) / trace.fs;
            c.speed = 1.0;  // caller assigns trial speed
            c.samples = resample_segment(seg, grid_size);
            strides.push_back(std::move(c));
        }
        out.push_back(ensemble_average(strides));
    }
    return out;
}

/// Retain only the 40/55/70% speed trials (relabelled L1/L2/L3) whose absolute
/// speed is at or below the treadmill limit.
inline Dataset filter_speed_levels(const Dataset& ds, double treadmill_limit_kmh = 3.2,
                                   size_t* dropped_over_limit = nullptr) {
    static const std::map<int, SpeedLevel> kLevelByPercent = {
        {40, SpeedLevel::L1}, {55, SpeedLevel::L2}, {70, SpeedLevel::L3}};
    Dataset out;
    out.grid_size = ds.grid_size;
    size_t dropped = 0;
    for (const auto& c : ds.cycles) {
        const int pct = static_cast<int>(std::lround(c.speed_percent));
        if (std::abs(c.speed_percent - pct) > 1e-9) continue;
        const auto it = kLevelByPercent.find(pct);
        if (it == kLevelByPercent.end()) continue;
        if (c.speed > treadmill_limit_kmh + 1e-12) {
            ++dropped;
            continue;
        }
        GaitCycle kept = c;
        kept.level = it->second;
        out.cycles.push_back(std::move(kept));
    }
    if (dropped_over_limit) *dropped_over_limit = dropped;
    if (out.cycles.empty()) throw EmptyResult("filter_speed_levels: no cycles survive");
    std::set<std::string> kept_ids;
    for (const auto& c : out.cycles) kept_ids.insert(c.subject_id);
    for (const auto& s : ds.subjects)
        if (kept_ids.count(s.id)) out.subjects.push_back(s);
    out.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Raw ingestion
// ---------------------------------------------------------------------------

inline Dataset ingest_dataset(const std::filesystem::path& root, const DatasetSchema& schema,
                              size_t grid_size = 101) {
    namespace fs = std::filesystem;
    Dataset ds;
    ds.grid_size = grid_size;

    const detail::Table meta = detail::Table::load(root / schema.metadata_file,
                                                   schema.meta_delimiter);
    const size_t c_id = meta.column(schema.col_id);
    const size_t c_age = meta.column(schema.col_age);
    const size_t c_h = meta.column(schema.col_height);
    const size_t c_m = meta.column(schema.col_mass);
    const size_t c_g = meta.column(schema.col_gender);
    const size_t c_v = meta.column(schema.col_speed);

    for (size_t r = 0; r < meta.rows.size(); ++r) {
        const auto& row = meta.rows[r];
        const std::string where = meta.origin + " row " + std::to_string(r + 2);
        Subject s;
        s.id = row[c_id];
        s.age = parse_double(row[c_age], where);
        s.height = parse_double(row[c_h], where);
        if (schema.height_unit == "cm") s.height /= 100.0;
        s.mass = parse_double(row[c_m], where);
        const std::string g = row[c_g];
        if (g == schema.gender_male) s.gender = Gender::Male;
        else if (g == schema.gender_female) s.gender = Gender::Female;
        else throw SchemaMismatch(where + ": gender '" + g + "' matches neither '" +
                                  schema.gender_male + "' nor '" + schema.gender_female + "'");
        s.self_selected_speed = parse_double(row[c_v], where);
        if (schema.speed_unit == "m/s") s.self_selected_speed *= 3.6;
        s.validate();
        ds.subjects.push_back(std::move(s));
    }
    if (ds.subjects.empty()) throw EmptyResult(meta.origin + ": no subjects");

    for (const auto& subj : ds.subjects) {
        for (size_t trial = 1; trial <= schema.trial_percents.size(); ++trial) {
            const double pct = schema.trial_percents[trial - 1];
            const double speed = pct / 100.0 * subj.self_selected_speed;
            const fs::path angle_path =
                root / detail::expand_template(schema.angles_template, subj.id, trial);
            if (!fs::exists(angle_path))
                throw MissingFile(angle_path.string() + " (subject " + subj.id + ", trial " +
                                  std::to_string(trial) + ")");

            // stride times per side
            const fs::path stride_path =
                root / detail::expand_template(schema.strides_template, subj.id, trial);
            const detail::Table strides = detail::Table::load(stride_path, schema.angles_delimiter);
            std::map<Side, double> cycle_time;
            {
                const size_t sc = strides.column("side");
                const size_t tc = strides.column("cycle_time_s");
                for (const auto& row : strides.rows)
                    cycle_time[parse_side(row[sc])] =
                        parse_double(row[tc], strides.origin);
            }

            const detail::Table angles = detail::Table::load(angle_path, schema.angles_delimiter);
            if (angles.rows.size() < 4)
                throw SchemaMismatch(angles.origin + ": too few samples");

            for (const auto& [key, column_name] : schema.angle_columns) {
                const auto& [channel, side] = key;
                const auto col = angles.column_opt(column_name);
                if (!col)
                    throw SchemaMismatch(angles.origin + ": missing column '" + column_name +
                                         "' for " + channel_name(channel));
                std::vector<double> raw;
                raw.reserve(angles.rows.size());
                for (size_t r = 0; r < angles.rows.size(); ++r)
                    raw.push_back(parse_double(angles.rows[r][*col],
                                               angles.origin + " row " + std::to_string(r + 2)));
                GaitCycle c;
                c.subject_id = subj.id;
                c.channel = channel;
                c.side = side;
                c.speed_percent = pct;
                c.speed = speed;
                const auto ct = cycle_time.find(side);
                if (ct == cycle_time.end())
                    throw SchemaMismatch(stride_path.string() + ": no cycle time for side " +
                                         side_name(side));
                c.cycle_time = ct->second;
                c.samples = resample_cycle_samples(raw, grid_size);
                if (schema.mirror_left_frontal && side == Side::Left &&
                    is_frontal_plane(channel))
                    for (double& v : c.samples) v = -v;
                c.validate(grid_size);
                ds.cycles.push_back(std::move(c));
            }

            // pelvis from raw markers when not mapped to an angle column
            const bool pelvis_mapped =
                schema.angle_columns.count({JointChannel::PelvisLateral, Side::Left}) ||
                schema.angle_columns.count({JointChannel::PelvisLateral, Side::Right});
            if (!pelvis_mapped && schema.has_markers()) {
                const fs::path marker_path =
                    root / detail::expand_template(schema.markers_template, subj.id, trial);
                const fs::path events_path =
                    root / detail::expand_template(schema.marker_events_template, subj.id, trial);
                const detail::Table mk = detail::Table::load(marker_path, schema.markers_delimiter);
                MarkerTrace trace;
                trace.subject_id = subj.id;
                trace.fs = schema.markers_fs;
                for (const auto& label : schema.marker_labels) {
                    std::array<size_t, 3> cols{};
                    const char* axes = "XYZ";
                    for (int a = 0; a < 3; ++a)
                        cols[static_cast<size_t>(a)] = mk.column(label + "_" + axes[a]);
                    std::vector<Vec3> pts;
                    pts.reserve(mk.rows.size());
                    for (const auto& row : mk.rows)
                        pts.push_back({parse_double(row[cols[0]], mk.origin),
                                       parse_double(row[cols[1]], mk.origin),
                                       parse_double(row[cols[2]], mk.origin)});
                    trace.markers[label] = std::move(pts);
                }
                const detail::Table ev = detail::Table::load(events_path, schema.markers_delimiter);
                const size_t sc = ev.column("side"), ic = ev.column("index");
                for (const auto& row : ev.rows) {
                    const size_t idx = static_cast<size_t>(parse_long(row[ic], ev.origin));
                    if (parse_side(row[sc]) == Side::Left) trace.heel_strikes_left.push_back(idx);
                    else trace.heel_strikes_right.push_back(idx);
                }
                for (auto& c : derive_pelvis_lateral(trace, schema.marker_labels,
                                                     schema.marker_lateral_axis, grid_size)) {
                    c.speed_percent = pct;
                    c.speed = speed;
                    ds.cycles.push_back(std::move(c));
                }
            }
        }
    }

    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// Canonical export format: subjects.csv + cycles.csv, full precision.
// ---------------------------------------------------------------------------

inline void export_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::string subjects = "id,age,height_m,mass_kg,gender,self_selected_kmh\n";
    for (const auto& s : ds.subjects) {
        subjects += s.id + "," + format_double(s.age) + "," + format_double(s.height) + "," +
                    format_double(s.mass) + "," + (s.gender == Gender::Male ? "M" : "F") + "," +
                    format_double(s.self_selected_speed) + "\n";
    }
    std::string cycles = "subject_id,channel,side,level,percent,speed_kmh,cycle_time_s";
    for (size_t i = 0; i < ds.grid_size; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), ",s%03zu", i);
        cycles += buf;
    }
    cycles += "\n";
    for (const auto& c : ds.cycles) {
        cycles += c.subject_id;
        cycles += ",";
        cycles += channel_name(c.channel);
        cycles += ",";
        cycles += side_name(c.side);
        cycles += ",";
        cycles += c.level ? level_name(*c.level) : "-";
        cycles += ",";
        cycles += format_double(c.speed_percent) + "," + format_double(c.speed) + "," +
                  format_double(c.cycle_time);
        for (double v : c.samples) {
            cycles += ",";
            cycles += format_double(v);
        }
        cycles += "\n";
    }
    write_text_file(dir / "subjects.csv", subjects);
    write_text_file(dir / "cycles.csv", cycles);
}

inline Dataset load_canonical_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    const detail::Table subjects = detail::Table::load(dir / "subjects.csv", ',');
    for (const auto& row : subjects.rows) {
        Subject s;
        s.id = row[subjects.column("id")];
        s.age = parse_double(row[subjects.column("age")], subjects.origin);
        s.height = parse_double(row[subjects.column("height_m")], subjects.origin);
        s.mass = parse_double(row[subjects.column("mass_kg")], subjects.origin);
        s.gender = row[subjects.column("gender")] == "M" ? Gender::Male : Gender::Female;
        s.self_selected_speed =
            parse_double(row[subjects.column("self_selected_kmh")], subjects.origin);
        ds.subjects.push_back(std::move(s));
    }

    const detail::Table cycles = detail::Table::load(dir / "cycles.csv", ',');
    constexpr size_t kFixedCols = 7;
    if (cycles.header.size() <= kFixedCols)
        throw SchemaMismatch(cycles.origin + ": no sample columns");
    ds.grid_size = cycles.header.size() - kFixedCols;
    for (const auto& row : cycles.rows) {
        GaitCycle c;
        c.subject_id = row[0];
        c.channel = parse_channel(row[1]);
        c.side = parse_side(row[2]);
        if (row[3] != "-") c.level = parse_level(row[3]);
        c.speed_percent = parse_double(row[4], cycles.origin);
        c.speed = parse_double(row[5], cycles.origin);
        c.cycle_time = parse_double(row[6], cycles.origin);
        c.samples.reserve(ds.grid_size);
        for (size_t i = kFixedCols; i < row.size(); ++i)
            c.samples.push_back(parse_double(row[i], cycles.origin));
        ds.cycles.push_back(std::move(c));
    }
    ds.validate();
    return ds;
}

}  // namespace gaitgen
