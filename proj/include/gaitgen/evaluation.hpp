#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gaitgen/dataset.hpp"
#include "gaitgen/pattern.hpp"
#include "gaitgen/regression.hpp"

namespace gaitgen {

// ---------------------------------------------------------------------------
// Leave-one-out cross-validation of the prediction pipeline: per held-out
// subject, train on the rest, score personalized and standard patterns
// against the subject's actual cycles.
// ---------------------------------------------------------------------------

inline double rmse(const GaitCycle& a, const GaitCycle& b) {
    if (a.channel != b.channel) throw GridMismatch("rmse: mixed channels");
    if (a.samples.size() != b.samples.size()) throw GridMismatch("rmse: grid size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        const double d = a.samples[i] - b.samples[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.samples.size()));
}

inline double rmse_samples(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw GridMismatch("rmse: grid size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / static_cast<double>(a.size()));
}

struct SubjectScores {
    std::string subject_id;
    // mean over sides and levels, one value per channel
    std::map<JointChannel, double> personalized;
    std::map<JointChannel, double> standard;
};

struct EvaluationReport {
    std::map<JointChannel, double> rmse_personalized;  // deg (angles) or mm (pelvis)
    std::map<JointChannel, double> rmse_standard;
    std::vector<SubjectScores> per_subject;
    size_t n_folds = 0;
    std::string config_hash;
    std::string averaging_note =
        "RMSE averaged over sides, then speed levels, then subjects";

    void validate() const {
        if (n_folds != per_subject.size())
            throw InvariantViolation("report: n_folds does not match breakdown size");
        for (JointChannel ch : kAllChannels) {
            if (!rmse_personalized.count(ch) || !rmse_standard.count(ch))
                throw InvariantViolation(std::string("report: channel ") + channel_name(ch) +
                                         " missing");
            if (rmse_personalized.at(ch) < 0.0 || rmse_standard.at(ch) < 0.0)
                throw InvariantViolation("report: negative RMSE");
        }
    }
};

struct LoocvConfig {
    std::map<JointChannel, KeyEventTemplate> templates;
    double alpha = 0.01;
    std::string config_hash;  // propagated into the report
};

/// One fold per subject. Within a fold: the bank and the standard pattern are
/// built from the remaining subjects only; the held-out subject's cycles are
/// scored per side and level at the actual cycle speeds.
inline EvaluationReport loocv(const Dataset& ds, const LoocvConfig& cfg) {
    for (const auto& c : ds.cycles)
        if (!c.level) throw InvariantViolation("loocv: dataset must be level-filtered");
    if (ds.subjects.size() < 3) throw InsufficientData("loocv: need at least 3 subjects");

    EvaluationReport report;
    report.config_hash = cfg.config_hash;

    std::map<JointChannel, std::vector<double>> personalized_means, standard_means;

    for (const auto& held_out : ds.subjects) {
        // training fold
        Dataset fold;
        fold.grid_size = ds.grid_size;
        for (const auto& s : ds.subjects)
            if (s.id != held_out.id) fold.subjects.push_back(s);
        for (const auto& c : ds.cycles)
            if (c.subject_id != held_out.id) fold.cycles.push_back(c);
        for (const auto& c : fold.cycles)
            if (c.subject_id == held_out.id)
                throw InvariantViolation("loocv: leakage in fold " + held_out.id);

        ModelBank bank;
        try {
            bank = train_bank(fold, cfg.templates, cfg.alpha);
        } catch (const Error& e) {
            throw Error(e.kind(), "fold " + held_out.id + ": " + e.what());
        }

        // test cycles grouped by (level, side)
        std::map<std::pair<SpeedLevel, Side>, std::vector<const GaitCycle*>> groups;
        for (const auto& c : ds.cycles)
            if (c.subject_id == held_out.id) groups[{*c.level, c.side}].push_back(&c);

        // per-channel: level -> mean over sides
        std::map<JointChannel, std::map<SpeedLevel, std::vector<double>>> pers_acc, stan_acc;

        std::map<SpeedLevel, GaitPattern> personalized_cache;
        std::map<SpeedLevel, GaitPattern> standard_cache;

        for (const auto& [key, cycles] : groups) {
            const auto& [level, side] = key;
            const double speed =
                std::accumulate(cycles.begin(), cycles.end(), 0.0,
                                [](double s, const GaitCycle* c) { return s + c->speed; }) /
                static_cast<double>(cycles.size());

            if (!personalized_cache.count(level)) {
                try {
                    personalized_cache.emplace(level,
                                               generate_personalized(bank, held_out, speed));
                    standard_cache.emplace(level,
                                           generate_standard(fold, speed, held_out.height));
                } catch (const Error& e) {
                    throw Error(e.kind(), "fold " + held_out.id + " level " +
                                              level_name(level) + ": " + e.what());
                }
            }
            const GaitPattern& pers = personalized_cache.at(level);
            const GaitPattern& stan = standard_cache.at(level);

            for (const GaitCycle* actual : cycles) {
                // frontal-plane channels of left-side cycles are mirrored onto
                // the pattern's right-side convention before scoring
                std::vector<double> actual_samples = actual->samples;
                if (side == Side::Left && is_frontal_plane(actual->channel))
                    for (double& v : actual_samples) v = -v;
                const std::vector<double> pred_p =
                    pers.channel(actual->channel).to_grid(ds.grid_size);
                const std::vector<double> pred_s =
                    stan.channel(actual->channel).to_grid(ds.grid_size);
                pers_acc[actual->channel][level].push_back(
                    rmse_samples(actual_samples, pred_p));
                stan_acc[actual->channel][level].push_back(
                    rmse_samples(actual_samples, pred_s));
            }
        }

        SubjectScores scores;
        scores.subject_id = held_out.id;
        auto reduce = [](const std::map<SpeedLevel, std::vector<double>>& by_level) {
            double level_sum = 0.0;
            size_t level_cnt = 0;
            for (const auto& [lvl, values] : by_level) {
                const double side_mean =
                    std::accumulate(values.begin(), values.end(), 0.0) /
                    static_cast<double>(values.size());
                level_sum += side_mean;
                ++level_cnt;
            }
            return level_sum / static_cast<double>(level_cnt);
        };
        for (JointChannel ch : kAllChannels) {
            if (!pers_acc.count(ch))
                throw InvariantViolation(std::string("loocv: held-out subject ") + held_out.id +
                                         " has no cycles for " + channel_name(ch));
            scores.personalized[ch] = reduce(pers_acc.at(ch));
            scores.standard[ch] = reduce(stan_acc.at(ch));
            personalized_means[ch].push_back(scores.personalized[ch]);
            standard_means[ch].push_back(scores.standard[ch]);
        }
        report.per_subject.push_back(std::move(scores));
    }

    report.n_folds = report.per_subject.size();
    for (JointChannel ch : kAllChannels) {
        const auto& pm = personalized_means[ch];
        const auto& sm = standard_means[ch];
        report.rmse_personalized[ch] =
            std::accumulate(pm.begin(), pm.end(), 0.0) / static_cast<double>(pm.size());
        report.rmse_standard[ch] =
            std::accumulate(sm.begin(), sm.end(), 0.0) / static_cast<double>(sm.size());
    }
    report.validate();
    return report;
}

// ---------------------------------------------------------------------------
// Report emission: machine-readable structured text plus an aligned table.
// ---------------------------------------------------------------------------

inline std::string report_to_machine_text(const EvaluationReport& r) {
    r.validate();
    std::string out = "gaitgen-evaluation v1\n";
    out += "n_folds = " + std::to_string(r.n_folds) + "\n";
    out += "config_hash = " + r.config_hash + "\n";
    out += "averaging = " + r.averaging_note + "\n";
    for (JointChannel ch : kAllChannels) {
        out += std::string("rmse,") + channel_name(ch) + "," + channel_unit(ch) + "," +
               format_double(r.rmse_personalized.at(ch)) + "," +
               format_double(r.rmse_standard.at(ch)) + "\n";
    }
    for (const auto& s : r.per_subject) {
        out += "subject," + s.subject_id;
        for (JointChannel ch : kAllChannels)
            out += "," + format_double(s.personalized.at(ch)) + "," +
                   format_double(s.standard.at(ch));
        out += "\n";
    }
    return out;
}

inline std::string report_to_table_text(const EvaluationReport& r) {
    r.validate();
    auto label = [](JointChannel ch) -> std::string {
        switch (ch) {
            case JointChannel::HipAbAd: return "Hip abd/add (deg)";
            case JointChannel::HipFlexExt: return "Hip flex/ext (deg)";
            case JointChannel::KneeFlexExt: return "Knee flex/ext (deg)";
            case JointChannel::PelvisLateral: return "Pelvis lateral (mm)";
        }
        return "?";
    };
    std::ostringstream out;
    out << "RMSE between predicted and actual gait patterns ("
        << r.n_folds << " leave-one-out folds)\n";
    out << r.averaging_note << "\n";
    out << "config " << r.config_hash << "\n\n";
    out << std::left << std::setw(22) << "Joint" << std::right << std::setw(18)
        << "Act-Personalized" << std::setw(14) << "Act-Standard" << "\n";
    out << std::string(54, '-') << "\n";
    out << std::fixed << std::setprecision(3);
    for (JointChannel ch : kAllChannels) {
        out << std::left << std::setw(22) << label(ch) << std::right << std::setw(18)
            << r.rmse_personalized.at(ch) << std::setw(14) << r.rmse_standard.at(ch) << "\n";
    }
    return out.str();
}

inline void report_emit(const EvaluationReport& r, const std::filesystem::path& dir) {
    write_text_file(dir / "evaluation_report.txt", report_to_machine_text(r));
    write_text_file(dir / "evaluation_table.txt", report_to_table_text(r));
}

}  // namespace gaitgen
