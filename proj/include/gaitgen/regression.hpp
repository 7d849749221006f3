#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "gaitgen/events.hpp"
#include "gaitgen/types.hpp"

namespace gaitgen {

// ---------------------------------------------------------------------------
// Per-parameter key-event regression: Y = b_c + b_v v + b_v2 v^2 + b_h h
//                                        + b_w w + b_a a + b_s s
// with backward stepwise selection at p < alpha followed by bisquare IRLS.
// ---------------------------------------------------------------------------

constexpr size_t kNumPredictors = 7;  // intercept, v, v^2, h, w, a, s
constexpr std::array<const char*, kNumPredictors> kPredictorNames = {
    "intercept", "v", "v2", "h", "w", "a", "s"};

struct PredictorVector {
    double v = 0.0;   // km/h
    double v2 = 0.0;  // (km/h)^2
    double h = 0.0;   // m
    double w = 0.0;   // kg
    double a = 0.0;   // years
    double s = 1.0;   // gender, -1 female / +1 male

    static PredictorVector make(const Subject& subj, double speed_kmh) {
        PredictorVector p;
        p.v = speed_kmh;
        p.v2 = speed_kmh * speed_kmh;
        p.h = subj.height;
        p.w = subj.mass;
        p.a = subj.age;
        p.s = static_cast<double>(static_cast<int>(subj.gender));
        return p;
    }

    void validate() const {
        if (v2 != v * v) throw InvariantViolation("predictor vector: v2 != v^2");
        if (s != -1.0 && s != 1.0) throw InvariantViolation("predictor vector: s must be -1 or +1");
    }

    /// Full design row including the implicit intercept.
    Eigen::Matrix<double, 1, kNumPredictors> full_row() const {
        Eigen::Matrix<double, 1, kNumPredictors> r;
        r << 1.0, v, v2, h, w, a, s;
        return r;
    }
};

// ---------------------------------------------------------------------------
// Ordinary least squares with classical t-test p-values
// ---------------------------------------------------------------------------

struct OlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd p_values;  // two-sided, per coefficient
    double sigma2 = 0.0;       // residual variance estimate
    long dof = 0;
};

inline OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const long n = X.rows(), p = X.cols();
    if (y.size() != n) throw InvariantViolation("fit_ols: X and Y row counts differ");
    if (n < p + 2) throw InsufficientData("fit_ols: need at least cols+2 rows, got " +
                                          std::to_string(n) + " rows for " + std::to_string(p) +
                                          " columns");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) throw RankDeficient("fit_ols: design matrix rank " +
                                           std::to_string(qr.rank()) + " < " + std::to_string(p));

    OlsFit fit;
    fit.beta = qr.solve(y);
    const Eigen::VectorXd resid = y - X * fit.beta;
    fit.dof = n - p;
    fit.sigma2 = resid.squaredNorm() / static_cast<double>(fit.dof);

    const Eigen::MatrixXd xtx_inv =
        (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    fit.p_values.resize(p);
    const boost::math::students_t tdist(static_cast<double>(fit.dof));
    for (long j = 0; j < p; ++j) {
        const double se = std::sqrt(std::max(0.0, fit.sigma2 * xtx_inv(j, j)));
        if (se <= 0.0) {
            fit.p_values[j] = fit.beta[j] == 0.0 ? 1.0 : 0.0;
            continue;
        }
        const double t = std::abs(fit.beta[j] / se);
        fit.p_values[j] = 2.0 * boost::math::cdf(boost::math::complement(tdist, t));
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Backward stepwise elimination
// ---------------------------------------------------------------------------

using PredictorMask = std::array<bool, kNumPredictors>;

inline Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& X_full, const PredictorMask& mask) {
    long cols = 0;
    for (bool b : mask) cols += b ? 1 : 0;
    Eigen::MatrixXd X(X_full.rows(), cols);
    long out = 0;
    for (size_t j = 0; j < kNumPredictors; ++j)
        if (mask[j]) X.col(out++) = X_full.col(static_cast<long>(j));
    return X;
}

/// Iteratively drop the non-intercept predictor with the largest p >= alpha,
/// refitting after each drop. The intercept is never dropped; ties go to the
/// earliest predictor in the fixed order v, v^2, h, w, a, s.
inline PredictorMask stepwise_select(const Eigen::MatrixXd& X_full, const Eigen::VectorXd& y,
                                     double alpha = 0.01) {
    if (X_full.cols() != static_cast<long>(kNumPredictors))
        throw InvariantViolation("stepwise_select: expected full 7-column design");
    PredictorMask mask;
    mask.fill(true);
    if (alpha >= 1.0) return mask;  // degenerate no-op threshold

    while (true) {
        const Eigen::MatrixXd X = apply_mask(X_full, mask);
        const OlsFit fit = fit_ols(X, y);
        double worst_p = -1.0;
        size_t worst_j = 0;
        long col = 0;
        for (size_t j = 0; j < kNumPredictors; ++j) {
            if (!mask[j]) continue;
            if (j != 0 && fit.p_values[col] >= alpha && fit.p_values[col] > worst_p) {
                worst_p = fit.p_values[col];
                worst_j = j;
            }
            ++col;
        }
        if (worst_p < 0.0) break;
        mask[worst_j] = false;
    }
    return mask;
}

// ---------------------------------------------------------------------------
// Robust IRLS with Tukey bisquare weights
// ---------------------------------------------------------------------------

struct RobustFit {
    Eigen::VectorXd beta;
    bool converged = false;
    int iterations = 0;
    double scale = 0.0;          // final robust sigma-hat
    Eigen::VectorXd weights;     // final per-row weights
};

namespace detail {

inline double median_inplace(std::vector<double>& v) {
    if (v.empty()) throw EmptyInput("median of empty vector");
    const size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
}

inline double mad_scale(const Eigen::VectorXd& residuals) {
    std::vector<double> r(residuals.data(), residuals.data() + residuals.size());
    const double med = median_inplace(r);
    for (double& x : r) x = std::abs(x - med);
    return 1.4826 * median_inplace(r);
}

}  // namespace detail

constexpr double kBisquareTuning = 4.685;  // 95% Gaussian efficiency

/// Iteratively reweighted least squares with the redescending bisquare
/// weight w(r) = (1 - (r/(k*sigma))^2)^2 for |r| < k*sigma, else 0.
/// Non-convergence is reported through the flag, not an exception.
inline RobustFit fit_robust_bisquare(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     int max_iterations = 50, double tol = 1e-8) {
    const long n = X.rows();
    RobustFit fit;
    fit.weights = Eigen::VectorXd::Ones(n);
    fit.beta = fit_ols(X, y).beta;

    for (int iter = 1; iter <= max_iterations; ++iter) {
        fit.iterations = iter;
        const Eigen::VectorXd resid = y - X * fit.beta;
        fit.scale = detail::mad_scale(resid);
        if (fit.scale <= 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff())) {
            fit.converged = true;  // (near-)perfect fit
            fit.weights = Eigen::VectorXd::Ones(n);
            return fit;
        }
        const double cutoff = kBisquareTuning * fit.scale;
        double wsum = 0.0;
        for (long i = 0; i < n; ++i) {
            const double u = resid[i] / cutoff;
            const double w = std::abs(u) < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
            fit.weights[i] = w;
            wsum += w;
        }
        if (wsum <= 0.0) throw AllZeroWeights("bisquare IRLS: all row weights are zero");

        const Eigen::VectorXd sw = fit.weights.cwiseSqrt();
        const Eigen::MatrixXd Xw = sw.asDiagonal() * X;
        const Eigen::VectorXd yw = sw.asDiagonal() * y;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
        qr.setThreshold(1e-10);
        if (qr.rank() < X.cols()) {
            // downweighting starved the design; keep the last full-rank iterate
            fit.converged = false;
            return fit;
        }
        const Eigen::VectorXd beta_new = qr.solve(yw);
        const double delta = (beta_new - fit.beta).cwiseAbs().maxCoeff();
        fit.beta = beta_new;
        if (delta < tol) {
            fit.converged = true;
            return fit;
        }
    }
    fit.converged = false;
    return fit;
}

// ---------------------------------------------------------------------------
// Gait cycle time models (fixed published coefficients, speed in km/h)
// ---------------------------------------------------------------------------

constexpr std::array<double, 4> kCycleTimePersonalized = {2.7662, -0.7458, 0.0903, -0.0037};
constexpr std::array<double, 4> kCycleTimeStandard = {1.8993, -0.6909, 0.0789, 0.3928};
constexpr double kMinCycleTime = 0.2;  // seconds

/// T = c0 + c1 v + c2 v^2 + c3 a   (v in km/h, a in years)
inline double predict_cycle_time_personalized(double v_kmh, double age_years) {
    if (!(v_kmh > 0.0)) throw InvariantViolation("cycle time: speed must be > 0");
    const auto& c = kCycleTimePersonalized;
    const double t = (c[2] * v_kmh + c[1]) * v_kmh + c[0] + c[3] * age_years;
    if (t <= kMinCycleTime)
        throw NonPositiveResult("personalized cycle time " + format_double(t) + " s at v=" +
                                format_double(v_kmh));
    return t;
}

/// T = c0 + c1 v + c2 v^2 + c3 h   (v in km/h, h in metres)
inline double predict_cycle_time_standard(double v_kmh, double height_m) {
    if (!(v_kmh > 0.0)) throw InvariantViolation("cycle time: speed must be > 0");
    if (!(height_m > 0.0)) throw InvariantViolation("cycle time: height must be > 0");
    const auto& c = kCycleTimeStandard;
    const double t = (c[2] * v_kmh + c[1]) * v_kmh + c[0] + c[3] * height_m;
    if (t <= kMinCycleTime)
        throw NonPositiveResult("standard cycle time " + format_double(t) + " s at v=" +
                                format_double(v_kmh));
    return t;
}

// ---------------------------------------------------------------------------
// Model bank
// ---------------------------------------------------------------------------

enum class EventParameter { T, Y, Ydot, Yddot };

constexpr std::array<EventParameter, 4> kAllParameters = {
    EventParameter::T, EventParameter::Y, EventParameter::Ydot, EventParameter::Yddot};

inline const char* parameter_name(EventParameter p) {
    switch (p) {
        case EventParameter::T: return "t";
        case EventParameter::Y: return "y";
        case EventParameter::Ydot: return "ydot";
        case EventParameter::Yddot: return "yddot";
    }
    return "?";
}

inline EventParameter parse_parameter(const std::string& s) {
    for (EventParameter p : kAllParameters)
        if (s == parameter_name(p)) return p;
    throw SchemaMismatch("unknown event parameter '" + s + "'");
}

struct TargetId {
    JointChannel channel;
    std::string detector_id;
    EventParameter parameter;

    bool operator<(const TargetId& o) const {
        return std::tie(channel, detector_id, parameter) <
               std::tie(o.channel, o.detector_id, o.parameter);
    }
};

struct RegressionModel {
    TargetId target;
    bool structural = false;   // parameter fixed by a pin or derivative constraint
    double structural_value = 0.0;
    PredictorMask included{};  // intercept always true for fitted models
    std::vector<double> coefficients;  // one per included predictor
    // fit diagnostics
    long n_rows = 0;
    double robust_scale = 0.0;
    int iterations = 0;
    bool converged = true;

    double predict(const PredictorVector& pv) const {
        if (structural) return structural_value;
        const auto row = pv.full_row();
        double acc = 0.0;
        size_t k = 0;
        for (size_t j = 0; j < kNumPredictors; ++j)
            if (included[j]) acc += coefficients[k++] * row(0, static_cast<long>(j));
        return acc;
    }

    void validate() const {
        if (structural) return;
        if (!included[0]) throw InvariantViolation("model without intercept");
        size_t cnt = 0;
        for (bool b : included) cnt += b ? 1 : 0;
        if (coefficients.size() != cnt)
            throw InvariantViolation("model coefficient count does not match mask");
        for (double c : coefficients)
            if (!std::isfinite(c)) throw InvariantViolation("non-finite model coefficient");
    }
};

struct ModelBank {
    static constexpr const char* kFormatVersion = "gaitgen-modelbank v1";

    std::map<TargetId, RegressionModel> models;
    std::array<double, 4> cycle_time_personalized = kCycleTimePersonalized;
    std::array<double, 4> cycle_time_standard = kCycleTimeStandard;
    double speed_min = 0.0;  // km/h, training envelope
    double speed_max = 0.0;
    size_t grid_size = 101;

    const RegressionModel& at(const TargetId& id) const {
        auto it = models.find(id);
        if (it == models.end())
            throw InvariantViolation(std::string("model bank: no model for ") +
                                     channel_name(id.channel) + "/" + id.detector_id + "/" +
                                     parameter_name(id.parameter));
        return it->second;
    }

    /// Detectors present per channel, in first-seen (serialized) order.
    std::map<JointChannel, std::vector<std::string>> detectors_by_channel() const {
        std::map<JointChannel, std::vector<std::string>> out;
        for (const auto& [id, m] : models) {
            auto& v = out[id.channel];
            if (std::find(v.begin(), v.end(), id.detector_id) == v.end())
                v.push_back(id.detector_id);
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Which parameter, if any, is structurally constant for a detector, and its value.
inline std::optional<std::pair<EventParameter, double>> structural_constant(
    const EventDetector& det, EventParameter param) {
    if (det.pinned_time && param == EventParameter::T) return {{param, *det.pinned_time}};
    if (det.constraint == DerivativeConstraint::VelocityZero && param == EventParameter::Ydot)
        return {{param, 0.0}};
    if (det.constraint == DerivativeConstraint::AccelerationZero && param == EventParameter::Yddot)
        return {{param, 0.0}};
    return std::nullopt;
}

/// Train one regression model per free (channel, detector, parameter) target
/// from the per-cycle key events of the whole dataset. Pinned and
/// derivative-constrained parameters are recorded as structural constants.
inline ModelBank train_bank(const Dataset& ds,
                            const std::map<JointChannel, KeyEventTemplate>& templates,
                            double alpha = 0.01) {
    for (const auto& c : ds.cycles)
        if (!c.level)
            throw InvariantViolation("train_bank: dataset must be filtered to speed levels first");

    struct Row {
        PredictorVector pv;
        std::map<std::string, std::array<double, 4>> per_detector;  // t,y,ydot,yddot
    };
    std::map<JointChannel, std::vector<Row>> rows;

    ModelBank bank;
    bank.grid_size = ds.grid_size;
    bank.speed_min = std::numeric_limits<double>::infinity();
    bank.speed_max = 0.0;

    for (const auto& c : ds.cycles) {
        const Subject* subj = ds.find_subject(c.subject_id);
        if (!subj) throw InvariantViolation("train_bank: unresolved subject " + c.subject_id);
        const auto tmpl_it = templates.find(c.channel);
        if (tmpl_it == templates.end())
            throw InvariantViolation(std::string("train_bank: no template for channel ") +
                                     channel_name(c.channel));
        // left-side frontal-plane cycles are mirrored onto the right-side sign
        // convention so both legs train one model family
        KeyEventSet events;
        if (c.side == Side::Left && is_frontal_plane(c.channel)) {
            GaitCycle mirrored = c;
            for (double& v : mirrored.samples) v = -v;
            events = extract_events(mirrored, tmpl_it->second, c.cycle_time);
        } else {
            events = extract_events(c, tmpl_it->second, c.cycle_time);
        }
        Row row;
        row.pv = PredictorVector::make(*subj, c.speed);
        for (const auto& e : events.events)
            row.per_detector[e.detector_id] = {e.t, e.y, e.ydot, e.yddot};
        rows[c.channel].push_back(std::move(row));
        bank.speed_min = std::min(bank.speed_min, c.speed);
        bank.speed_max = std::max(bank.speed_max, c.speed);
    }

    for (const auto& [channel, tmpl] : templates) {
        const auto it = rows.find(channel);
        if (it == rows.end())
            throw InsufficientData(std::string("train_bank: no cycles for channel ") +
                                   channel_name(channel));
        const auto& channel_rows = it->second;

        for (const auto& det : tmpl.detectors) {
            for (EventParameter param : kAllParameters) {
                RegressionModel model;
                model.target = {channel, det.id, param};
                if (auto sc = structural_constant(det, param)) {
                    model.structural = true;
                    model.structural_value = sc->second;
                    bank.models[model.target] = model;
                    continue;
                }
                const long n = static_cast<long>(channel_rows.size());
                if (n < 10)
                    throw InsufficientData(std::string("target ") + channel_name(channel) + "/" +
                                           det.id + "/" + parameter_name(param) + ": only " +
                                           std::to_string(n) + " rows (< 10)");
                Eigen::MatrixXd X(n, kNumPredictors);
                Eigen::VectorXd y(n);
                for (long i = 0; i < n; ++i) {
                    X.row(i) = channel_rows[static_cast<size_t>(i)].pv.full_row();
                    y[i] = channel_rows[static_cast<size_t>(i)]
                               .per_detector.at(det.id)[static_cast<size_t>(param)];
                }
                const PredictorMask mask = stepwise_select(X, y, alpha);
                const RobustFit rf = fit_robust_bisquare(apply_mask(X, mask), y);
                model.included = mask;
                model.coefficients.assign(rf.beta.data(), rf.beta.data() + rf.beta.size());
                model.n_rows = n;
                model.robust_scale = rf.scale;
                model.iterations = rf.iterations;
                model.converged = rf.converged;
                model.validate();
                bank.models[model.target] = model;
            }
        }
    }
    return bank;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

/// Evaluate the bank for one subject at walking speed v (km/h). Events are
/// sorted by predicted timing; later events are nudged forward to keep >= 1%
/// separation, up to a 3% total budget.
inline std::map<JointChannel, KeyEventSet> predict_events(const ModelBank& bank,
                                                          const Subject& subj, double v_kmh) {
    if (bank.models.empty()) throw InvariantViolation("predict_events: empty model bank");
    if (v_kmh < bank.speed_min * 0.9 - 1e-12 || v_kmh > bank.speed_max * 1.1 + 1e-12)
        throw InvariantViolation("predict_events: speed " + format_double(v_kmh) +
                                 " km/h outside training envelope [" +
                                 format_double(bank.speed_min) + ", " +
                                 format_double(bank.speed_max) + "] +/-10%");

    const PredictorVector pv = PredictorVector::make(subj, v_kmh);
    pv.validate();
    const double cycle_time = predict_cycle_time_personalized(v_kmh, subj.age);

    std::map<JointChannel, KeyEventSet> out;
    for (const auto& [channel, detector_ids] : bank.detectors_by_channel()) {
        struct Pred {
            KeyEvent event;
            bool pinned = false;
        };
        std::vector<Pred> preds;
        for (const auto& det_id : detector_ids) {
            Pred p;
            p.event.detector_id = det_id;
            const RegressionModel& t_model = bank.at({channel, det_id, EventParameter::T});
            p.pinned = t_model.structural;
            p.event.t = t_model.predict(pv);
            p.event.y = bank.at({channel, det_id, EventParameter::Y}).predict(pv);
            p.event.ydot = bank.at({channel, det_id, EventParameter::Ydot}).predict(pv);
            p.event.yddot = bank.at({channel, det_id, EventParameter::Yddot}).predict(pv);
            if (!p.pinned) p.event.t = std::clamp(p.event.t, 0.0, 100.0 - 1e-9);
            preds.push_back(std::move(p));
        }
        std::stable_sort(preds.begin(), preds.end(), [](const Pred& a, const Pred& b) {
            if (a.event.t != b.event.t) return a.event.t < b.event.t;
            return a.pinned && !b.pinned;  // pinned events win ties
        });

        double budget = 3.0;
        for (size_t i = 1; i < preds.size(); ++i) {
            const double min_t = preds[i - 1].event.t + 1.0;
            if (preds[i].event.t < min_t) {
                if (preds[i].pinned)
                    throw NonMonotoneEvents(std::string(channel_name(channel)) +
                                            ": pinned event collides after sorting");
                budget -= min_t - preds[i].event.t;
                preds[i].event.t = min_t;
            }
        }
        // wrap gap to the first event must also stay >= 1%
        const double wrap_gap = 100.0 - preds.back().event.t + preds.front().event.t;
        if (wrap_gap < 1.0) {
            const double target = 99.0 + preds.front().event.t;
            budget -= preds.back().event.t - target;
            preds.back().event.t = target;
            for (size_t i = preds.size() - 1; i-- > 0;) {
                const double max_t = preds[i + 1].event.t - 1.0;
                if (preds[i].event.t > max_t) {
                    if (preds[i].pinned)
                        throw NonMonotoneEvents(std::string(channel_name(channel)) +
                                                ": pinned event collides at wrap");
                    budget -= preds[i].event.t - max_t;
                    preds[i].event.t = max_t;
                }
            }
        }
        if (budget < 0.0)
            throw NonMonotoneEvents(std::string(channel_name(channel)) +
                                    ": event separation needs more than 3% total nudge");

        KeyEventSet set;
        set.channel = channel;
        set.side = Side::Right;
        set.cycle_time = cycle_time;
        for (auto& p : preds) set.events.push_back(std::move(p.event));
        set.validate();
        out[channel] = std::move(set);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: versioned structured text, full precision.
// ---------------------------------------------------------------------------

inline std::string bank_to_text(const ModelBank& bank) {
    std::string out(ModelBank::kFormatVersion);
    out += "\n";
    out += "grid_size = " + std::to_string(bank.grid_size) + "\n";
    out += "speed_min = " + format_double(bank.speed_min) + "\n";
    out += "speed_max = " + format_double(bank.speed_max) + "\n";
    auto fmt_poly = [](const std::array<double, 4>& c) {
        return format_double(c[0]) + "," + format_double(c[1]) + "," + format_double(c[2]) + "," +
               format_double(c[3]);
    };
    out += "cycle_time_personalized = " + fmt_poly(bank.cycle_time_personalized) + "\n";
    out += "cycle_time_standard = " + fmt_poly(bank.cycle_time_standard) + "\n";
    out += "# channel,detector,parameter,kind,...\n";
    for (const auto& [id, m] : bank.models) {
        out += std::string(channel_name(id.channel)) + "," + id.detector_id + "," +
               parameter_name(id.parameter) + ",";
        if (m.structural) {
            out += "structural," + format_double(m.structural_value) + "\n";
            continue;
        }
        out += "fit,";
        for (bool b : m.included) out += b ? '1' : '0';
        for (double c : m.coefficients) out += "," + format_double(c);
        out += ";n=" + std::to_string(m.n_rows) + ";scale=" + format_double(m.robust_scale) +
               ";iters=" + std::to_string(m.iterations) +
               ";converged=" + (m.converged ? "1" : "0") + "\n";
    }
    return out;
}

inline ModelBank bank_from_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || trim(line) != ModelBank::kFormatVersion)
        throw SchemaMismatch(origin + ": bad or missing model bank version header");
    ModelBank bank;
    auto parse_poly = [&](const std::string& v) {
        auto f = split(v, ',');
        if (f.size() != 4) throw SchemaMismatch(origin + ": cycle-time model needs 4 coefficients");
        std::array<double, 4> c{};
        for (size_t i = 0; i < 4; ++i) c[i] = parse_double(f[i], origin);
        return c;
    };
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = origin + ":" + std::to_string(lineno);
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq != std::string::npos && t.find(',') > eq) {
            const std::string key = trim(t.substr(0, eq));
            const std::string val = trim(t.substr(eq + 1));
            if (key == "grid_size") bank.grid_size = static_cast<size_t>(parse_long(val, where));
            else if (key == "speed_min") bank.speed_min = parse_double(val, where);
            else if (key == "speed_max") bank.speed_max = parse_double(val, where);
            else if (key == "cycle_time_personalized") bank.cycle_time_personalized = parse_poly(val);
            else if (key == "cycle_time_standard") bank.cycle_time_standard = parse_poly(val);
            else throw SchemaMismatch(where + ": unknown key '" + key + "'");
            continue;
        }
        const auto semis = split(t, ';');
        const auto f = split(semis[0], ',');
        if (f.size() < 5) throw SchemaMismatch(where + ": short model row");
        RegressionModel m;
        m.target.channel = parse_channel(trim(f[0]));
        m.target.detector_id = trim(f[1]);
        m.target.parameter = parse_parameter(trim(f[2]));
        const std::string kind = trim(f[3]);
        if (kind == "structural") {
            m.structural = true;
            m.structural_value = parse_double(f[4], where);
        } else if (kind == "fit") {
            const std::string bits = trim(f[4]);
            if (bits.size() != kNumPredictors)
                throw SchemaMismatch(where + ": predictor mask must have 7 bits");
            for (size_t j = 0; j < kNumPredictors; ++j) m.included[j] = bits[j] == '1';
            for (size_t j = 5; j < f.size(); ++j)
                m.coefficients.push_back(parse_double(f[j], where));
            for (size_t j = 1; j < semis.size(); ++j) {
                const auto kv = split(semis[j], '=');
                if (kv.size() != 2) throw SchemaMismatch(where + ": bad diagnostic field");
                const std::string key = trim(kv[0]);
                if (key == "n") m.n_rows = parse_long(kv[1], where);
                else if (key == "scale") m.robust_scale = parse_double(kv[1], where);
                else if (key == "iters") m.iterations = static_cast<int>(parse_long(kv[1], where));
                else if (key == "converged") m.converged = trim(kv[1]) == "1";
            }
            m.validate();
        } else {
            throw SchemaMismatch(where + ": unknown model kind '" + kind + "'");
        }
        bank.models[m.target] = m;
    }
    if (bank.models.empty()) throw SchemaMismatch(origin + ": empty model bank");
    return bank;
}

inline void save_bank(const std::filesystem::path& p, const ModelBank& bank) {
    write_text_file(p, bank_to_text(bank));
}

inline ModelBank load_bank(const std::filesystem::path& p) {
    return bank_from_text(read_text_file(p), p.string());
}

}  // namespace gaitgen
