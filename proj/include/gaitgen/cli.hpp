#pragma once

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gaitgen/dataset.hpp"
#include "gaitgen/evaluation.hpp"
#include "gaitgen/exo.hpp"
#include "gaitgen/pattern.hpp"
#include "gaitgen/regression.hpp"
#include "gaitgen/version.hpp"

namespace gaitgen::cli {

// ---------------------------------------------------------------------------
// Subcommand front-end. A key-value config file provides defaults; command
// line flags win. Every command honours --dry-run and writes its artifacts
// under the output directory.
// ---------------------------------------------------------------------------

struct RunConfig {
    std::filesystem::path dataset;        // canonical dataset directory
    std::filesystem::path dataset_root;   // raw database root (ingest)
    std::filesystem::path schema;
    std::filesystem::path templates;
    std::filesystem::path geometry_left;
    std::filesystem::path geometry_right;
    std::filesystem::path bank;
    std::filesystem::path out = "out";
    std::string speed_unit = "km/h";  // unit of --speed flags: km/h or m/s
    size_t grid_size = 101;
    uint64_t seed = 1;
    double treadmill_limit = 3.2;  // km/h
    double alpha = 0.01;
    double dt = 0.01;      // seconds, sampling step for exports
    double n_cycles = 1.0; // cycles per exported series

    void overlay(const KeyValueFile& kv) {
        auto path = [&](const char* key, std::filesystem::path& dst) {
            if (kv.has(key)) dst = kv.get(key);
        };
        path("dataset", dataset);
        path("dataset_root", dataset_root);
        path("schema", schema);
        path("templates", templates);
        path("geometry_left", geometry_left);
        path("geometry_right", geometry_right);
        path("bank", bank);
        path("out", out);
        if (kv.has("speed_unit")) speed_unit = kv.get("speed_unit");
        grid_size = static_cast<size_t>(kv.get_long_or("grid_size", static_cast<long>(grid_size)));
        seed = static_cast<uint64_t>(kv.get_long_or("seed", static_cast<long>(seed)));
        treadmill_limit = kv.get_double_or("treadmill_limit", treadmill_limit);
        alpha = kv.get_double_or("alpha", alpha);
        dt = kv.get_double_or("dt", dt);
        n_cycles = kv.get_double_or("cycles", n_cycles);
    }

    double to_kmh(double speed) const { return speed_unit == "m/s" ? speed * 3.6 : speed; }

    std::string resolved_text() const {
        std::string s;
        s += "dataset = " + dataset.string() + "\n";
        s += "dataset_root = " + dataset_root.string() + "\n";
        s += "schema = " + schema.string() + "\n";
        s += "templates = " + templates.string() + "\n";
        s += "geometry_left = " + geometry_left.string() + "\n";
        s += "geometry_right = " + geometry_right.string() + "\n";
        s += "bank = " + bank.string() + "\n";
        s += "out = " + out.string() + "\n";
        s += "speed_unit = " + speed_unit + "\n";
        s += "grid_size = " + std::to_string(grid_size) + "\n";
        s += "seed = " + std::to_string(seed) + "\n";
        s += "treadmill_limit = " + format_double(treadmill_limit) + "\n";
        s += "alpha = " + format_double(alpha) + "\n";
        s += "dt = " + format_double(dt) + "\n";
        s += "cycles = " + format_double(n_cycles) + "\n";
        return s;
    }
};

struct SubjectFlags {
    double age = 0.0;
    double height = 0.0;
    double mass = 0.0;
    std::string gender = "M";
    double speed = 0.0;  // in config speed unit
    std::string id = "subject";

    Subject to_subject() const {
        Subject s;
        s.id = id;
        s.age = age;
        s.height = height;
        s.mass = mass;
        if (gender == "M" || gender == "m" || gender == "male") s.gender = Gender::Male;
        else if (gender == "F" || gender == "f" || gender == "female") s.gender = Gender::Female;
        else throw ConfigError("gender must be M or F, got '" + gender + "'");
        // self-selected speed is not used for prediction; keep it plausible
        s.self_selected_speed = 4.5;
        s.validate();
        return s;
    }

    void add_flags(CLI::App* cmd, bool required = true) {
        auto req = [&](CLI::Option* o) { if (required) o->required(); };
        req(cmd->add_option("--age", age, "age in years"));
        req(cmd->add_option("--height", height, "body height in metres"));
        req(cmd->add_option("--mass", mass, "body mass in kg"));
        req(cmd->add_option("--gender", gender, "M or F"));
        req(cmd->add_option("--speed", speed, "walking speed (config speed unit)"));
        cmd->add_option("--id", id, "subject label for export headers");
    }
};

namespace detail {

inline Dataset load_filtered(const RunConfig& cfg, std::ostream& log) {
    if (cfg.dataset.empty()) throw ConfigError("no dataset directory configured");
    Dataset ds = load_canonical_dataset(cfg.dataset);
    size_t dropped = 0;
    Dataset filtered = filter_speed_levels(ds, cfg.treadmill_limit, &dropped);
    if (dropped > 0)
        log << "dropped " << dropped << " cycles above " << format_double(cfg.treadmill_limit)
            << " km/h\n";
    return filtered;
}

inline std::map<JointChannel, KeyEventTemplate> load_templates_or_default(const RunConfig& cfg) {
    if (!cfg.templates.empty()) return load_templates(cfg.templates);
    return default_templates();
}

inline std::string config_hash(const RunConfig& cfg) {
    uint64_t h = fnv1a(cfg.resolved_text());
    if (!cfg.templates.empty() && std::filesystem::exists(cfg.templates))
        h = fnv1a(read_text_file(cfg.templates), h);
    return hex64(h);
}

inline GaitPattern make_pattern(const std::string& from, const RunConfig& cfg,
                                const SubjectFlags& subj, std::ostream& log) {
    if (from == "personalized") {
        if (cfg.bank.empty()) throw ConfigError("--from personalized requires a model bank");
        const ModelBank bank = load_bank(cfg.bank);
        return generate_personalized(bank, subj.to_subject(), cfg.to_kmh(subj.speed));
    }
    if (from == "standard") {
        const Dataset ds = load_filtered(cfg, log);
        return generate_standard(ds, cfg.to_kmh(subj.speed), subj.height);
    }
    if (from == "random") {
        const Dataset ds = load_filtered(cfg, log);
        std::string chosen;
        GaitPattern p = pick_random_pattern(ds, SpeedLevel::L1, cfg.seed, &chosen);
        log << "random pattern drawn from subject " << chosen << "\n";
        return p;
    }
    throw ConfigError("--from must be personalized, standard or random");
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"gait pattern personalization and exoskeleton reference toolkit"};
    app.set_version_flag("--version", std::string(kToolVersion) + " (" +
                                          ModelBank::kFormatVersion + ")");

    std::string config_file;
    bool dry_run = false;
    RunConfig cfg;
    app.add_option("--config", config_file, "key-value config file");
    app.add_flag("--dry-run", dry_run, "print resolved config and planned outputs, write nothing");
    std::optional<std::string> opt_out, opt_dataset, opt_templates, opt_bank;
    std::optional<uint64_t> opt_seed;
    app.add_option("--out", opt_out, "output directory");
    app.add_option("--dataset", opt_dataset, "canonical dataset directory");
    app.add_option("--templates", opt_templates, "key-event template file");
    app.add_option("--bank", opt_bank, "model bank file");
    app.add_option("--seed", opt_seed, "seed for random selections");
    app.require_subcommand(0, 1);

    // --- ingest ---
    auto* c_ingest = app.add_subcommand("ingest", "load a raw gait database and export it in "
                                                  "canonical form");
    std::string ingest_root, ingest_schema;
    c_ingest->add_option("--root", ingest_root, "database root directory")->required();
    c_ingest->add_option("--schema", ingest_schema, "dataset schema config")->required();

    // --- train ---
    auto* c_train = app.add_subcommand("train", "train the key-event model bank");

    // --- predict ---
    auto* c_predict = app.add_subcommand("predict", "generate a personalized gait pattern");
    SubjectFlags predict_subj;
    predict_subj.add_flags(c_predict);

    // --- standard ---
    auto* c_standard = app.add_subcommand("standard", "generate the standard gait pattern");
    double std_speed = 0.0, std_height = 0.0;
    c_standard->add_option("--speed", std_speed, "walking speed (config speed unit)")->required();
    c_standard->add_option("--height", std_height, "body height in metres")->required();

    // --- random ---
    auto* c_random = app.add_subcommand("random", "draw one subject's pattern at a speed level");
    std::string random_level = "L1";
    c_random->add_option("--level", random_level, "speed level (L1, L2, L3)");

    // --- evaluate ---
    auto* c_evaluate = app.add_subcommand("evaluate", "leave-one-out cross-validation report");

    // --- fk / ik ---
    auto* c_fk = app.add_subcommand("fk", "forward kinematics: hip angles to shaft lengths");
    double fk_fl = 0.0, fk_ab = 0.0, fk_lateral = 0.0;
    std::string fk_side = "R";
    c_fk->add_option("--theta-fl", fk_fl, "hip flexion/extension (rad)")->required();
    c_fk->add_option("--theta-ab", fk_ab, "hip ab-/adduction (rad)")->required();
    c_fk->add_option("--pelvis-lateral", fk_lateral, "pelvis lateral offset (mm)");
    c_fk->add_option("--side", fk_side, "leg side (L or R)");

    auto* c_ik = app.add_subcommand("ik", "inverse kinematics: shaft lengths to hip angles");
    double ik_pint = 0.0, ik_pext = 0.0, ik_lateral = 0.0;
    std::string ik_side = "R";
    c_ik->add_option("--p-int", ik_pint, "internal shaft length (m)")->required();
    c_ik->add_option("--p-ext", ik_pext, "external shaft length (m)")->required();
    c_ik->add_option("--pelvis-lateral", ik_lateral, "pelvis lateral offset (mm)");
    c_ik->add_option("--side", ik_side, "leg side (L or R)");

    // --- export-actuators ---
    auto* c_export = app.add_subcommand("export-actuators",
                                        "convert a gait pattern into actuator references");
    std::string export_from = "personalized";
    SubjectFlags export_subj;
    c_export->add_option("--from", export_from, "personalized, standard or random");
    export_subj.add_flags(c_export, /*required=*/false);

    // --- plotdata ---
    auto* c_plot = app.add_subcommand("plotdata", "export per-channel grids and event markers");
    std::string plot_from = "personalized";
    SubjectFlags plot_subj;
    c_plot->add_option("--from", plot_from, "personalized, standard or random");
    plot_subj.add_flags(c_plot, /*required=*/false);

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (!config_file.empty()) cfg.overlay(KeyValueFile::load(config_file));
        if (opt_out) cfg.out = *opt_out;
        if (opt_dataset) cfg.dataset = *opt_dataset;
        if (opt_templates) cfg.templates = *opt_templates;
        if (opt_bank) cfg.bank = *opt_bank;
        if (opt_seed) cfg.seed = *opt_seed;
        if (app.get_subcommands().empty()) {
            err << "error: a subcommand is required (see --help)\n";
            return 2;
        }

        auto planned = [&](const std::string& name) {
            return (cfg.out / name).string();
        };
        auto emit = [&](const std::string& name, const std::string& content) {
            if (dry_run) {
                out << "would write " << planned(name) << "\n";
                return;
            }
            write_text_file(cfg.out / name, content);
        };

        if (dry_run) out << "resolved config:\n" << cfg.resolved_text();

        if (*c_ingest) {
            cfg.dataset_root = ingest_root;
            cfg.schema = ingest_schema;
            const DatasetSchema schema = DatasetSchema::load(cfg.schema);
            const Dataset ds = ingest_dataset(cfg.dataset_root, schema, cfg.grid_size);
            if (dry_run) {
                out << "would write " << planned("dataset/subjects.csv") << " and "
                    << planned("dataset/cycles.csv") << "\n";
            } else {
                export_dataset(ds, cfg.out / "dataset");
            }
            out << "ingested " << ds.subjects.size() << " subjects, " << ds.cycles.size()
                << " cycles (grid " << ds.grid_size << ")\n";
        } else if (*c_train) {
            const Dataset ds = detail::load_filtered(cfg, out);
            const auto templates = detail::load_templates_or_default(cfg);
            const ModelBank bank = train_bank(ds, templates, cfg.alpha);
            emit("bank.txt", bank_to_text(bank));
            size_t fitted = 0;
            for (const auto& [id, m] : bank.models) fitted += m.structural ? 0 : 1;
            out << "trained " << bank.models.size() << " models (" << fitted << " fitted, "
                << bank.models.size() - fitted << " structural) from " << ds.subjects.size()
                << " subjects\n";
        } else if (*c_predict) {
            if (cfg.bank.empty()) throw ConfigError("predict requires --bank");
            const ModelBank bank = load_bank(cfg.bank);
            const GaitPattern p = generate_personalized(bank, predict_subj.to_subject(),
                                                        cfg.to_kmh(predict_subj.speed));
            emit("pattern_personalized.csv",
                 pattern_series_to_text(p, sample_pattern(p, cfg.dt, cfg.n_cycles)));
            emit("pattern_personalized_plot.csv", pattern_plotdata_to_text(p, cfg.grid_size));
            out << "personalized pattern: cycle time " << format_double(p.cycle_time)
                << " s at " << format_double(p.speed) << " km/h\n";
        } else if (*c_standard) {
            const Dataset ds = detail::load_filtered(cfg, out);
            const GaitPattern p = generate_standard(ds, cfg.to_kmh(std_speed), std_height);
            emit("pattern_standard.csv",
                 pattern_series_to_text(p, sample_pattern(p, cfg.dt, cfg.n_cycles)));
            out << "standard pattern: cycle time " << format_double(p.cycle_time) << " s at "
                << format_double(p.speed) << " km/h\n";
        } else if (*c_random) {
            const Dataset ds = detail::load_filtered(cfg, out);
            std::string chosen;
            const GaitPattern p =
                pick_random_pattern(ds, parse_level(random_level), cfg.seed, &chosen);
            emit("pattern_random.csv",
                 pattern_series_to_text(p, sample_pattern(p, cfg.dt, cfg.n_cycles)));
            out << "random pattern from subject " << chosen << " at "
                << format_double(p.speed) << " km/h\n";
        } else if (*c_evaluate) {
            const Dataset ds = detail::load_filtered(cfg, out);
            LoocvConfig lc;
            lc.templates = detail::load_templates_or_default(cfg);
            lc.alpha = cfg.alpha;
            lc.config_hash = detail::config_hash(cfg);
            const EvaluationReport report = loocv(ds, lc);
            if (dry_run) {
                out << "would write " << planned("evaluation_report.txt") << " and "
                    << planned("evaluation_table.txt") << "\n";
            } else {
                report_emit(report, cfg.out);
            }
            out << report_to_table_text(report);
        } else if (*c_fk || *c_ik) {
            const bool is_fk = static_cast<bool>(*c_fk);
            const std::string side = is_fk ? fk_side : ik_side;
            std::filesystem::path geom_path =
                parse_side(side) == Side::Left ? cfg.geometry_left : cfg.geometry_right;
            const ExoGeometry geom = geom_path.empty() ? ExoGeometry{} : load_geometry(geom_path);
            PelvisPose pelvis = neutral_pelvis(geom);
            const double lateral_mm = is_fk ? fk_lateral : ik_lateral;
            pelvis.T_FP.x() += lateral_mm / 1000.0;
            if (is_fk) {
                HipJointAngles hip;
                hip.theta_fl = fk_fl;
                hip.theta_ab = fk_ab;
                hip.theta_ro = consistent_internal_rotation(pelvis, fk_fl, fk_ab);
                const FkResult r = forward_kinematics(geom, pelvis, hip);
                std::string text;
                text += "p_int = " + format_double(r.actuators.p_int) + "\n";
                text += "p_ext = " + format_double(r.actuators.p_ext) + "\n";
                text += "theta_A = " + format_double(r.actuators.theta_A) + "\n";
                text += "theta_1 = " + format_double(r.chain.theta_1) + "\n";
                text += "theta_2 = " + format_double(r.chain.theta_2) + "\n";
                text += "theta_E = " + format_double(r.chain.theta_E) + "\n";
                text += "theta_B = " + format_double(r.chain.theta_B) + "\n";
                text += "residual_H = " + format_double(r.chain.residual_H) + "\n";
                text += "residual_E = " + format_double(r.chain.residual_E) + "\n";
                emit("fk_result.txt", text);
                out << "p_int=" << format_double(r.actuators.p_int)
                    << " p_ext=" << format_double(r.actuators.p_ext)
                    << " theta_A=" << format_double(r.actuators.theta_A) << "\n";
            } else {
                ActuatorState act;
                act.p_int = ik_pint;
                act.p_ext = ik_pext;
                const IkResult r = inverse_kinematics(geom, pelvis, act);
                std::string text;
                text += "theta_fl = " + format_double(r.hip.theta_fl) + "\n";
                text += "theta_ab = " + format_double(r.hip.theta_ab) + "\n";
                text += "theta_ro = " + format_double(r.hip.theta_ro) + "\n";
                text += "theta_A = " + format_double(r.chain.theta_A) + "\n";
                text += "residual_H = " + format_double(r.chain.residual_H) + "\n";
                text += "residual_E = " + format_double(r.chain.residual_E) + "\n";
                emit("ik_result.txt", text);
                out << "theta_fl=" << format_double(r.hip.theta_fl)
                    << " theta_ab=" << format_double(r.hip.theta_ab)
                    << " theta_ro=" << format_double(r.hip.theta_ro) << "\n";
            }
        } else if (*c_export) {
            const GaitPattern p = detail::make_pattern(export_from, cfg, export_subj, out);
            const ExoGeometry geom_r =
                cfg.geometry_right.empty() ? ExoGeometry{} : load_geometry(cfg.geometry_right);
            const ExoGeometry geom_l =
                cfg.geometry_left.empty() ? mirrored(geom_r) : load_geometry(cfg.geometry_left);
            const ActuatorSeries series =
                pattern_to_actuators(geom_l, geom_r, p, cfg.dt, cfg.n_cycles);
            emit("actuators.csv", actuator_series_to_text(series));
            out << "actuator references: " << series.time.size() << " samples at dt="
                << format_double(cfg.dt) << " s\n";
        } else if (*c_plot) {
            const GaitPattern p = detail::make_pattern(plot_from, cfg, plot_subj, out);
            emit("plotdata.csv", pattern_plotdata_to_text(p, cfg.grid_size));
            out << "plot data for " << pattern_kind_name(p.kind) << " pattern ("
                << cfg.grid_size << "-point grid)\n";
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    std::vector<std::string> full;
    full.push_back("gaitgen");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const auto& a : full) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace gaitgen::cli
