#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gaitgen/common.hpp"
#include "gaitgen/pattern.hpp"

namespace gaitgen {

// ---------------------------------------------------------------------------
// Closed-chain hip/pelvis kinematics. Frames: O (global), F (fixed pelvis
// module), P (pelvis plate), H (hip centre), A (actuator plane). The hip
// module loop runs O -> H -> E (top, through the thigh) and O -> A -> E -> B
// -> H (bottom, through the linear actuators); closing it at H gives
// closed-form forward kinematics, closing at E drives the Newton inverse
// solve.
// ---------------------------------------------------------------------------

inline Eigen::Matrix3d rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << 1, 0, 0, 0, c, -s, 0, s, c;
    return r;
}

inline Eigen::Matrix3d rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << c, 0, s, 0, 1, 0, -s, 0, c;
    return r;
}

inline Eigen::Matrix3d rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return r;
}

inline Eigen::Matrix3d drot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << 0, 0, 0, 0, -s, -c, 0, c, -s;
    return r;
}

inline Eigen::Matrix3d drot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << -s, 0, c, 0, 0, 0, -c, 0, -s;
    return r;
}

inline Eigen::Matrix3d drot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Eigen::Matrix3d r;
    r << -s, -c, 0, c, -s, 0, 0, 0, 0;
    return r;
}

// ---------------------------------------------------------------------------

struct ExoGeometry {
    double l_c = 0.10;  // lateral separation of the actuator bases (m)
    double l_1 = 0.12;  // closed-chain link P_ext -> E (m)
    double l_2 = 0.12;  // closed-chain link P_int -> E (m)
    double l_n = 0.08;  // thigh offset E -> B (m)
    double l_m = 0.35;  // thigh offset B -> H (m)
    double d = 0.05;    // shaft base offset (m)
    Eigen::Vector3d T_OF{0.0, 0.0, 0.0};
    Eigen::Vector3d T_FP_nominal{0.0, 0.35, 0.11};
    Eigen::Vector3d T_PH{0.0, 0.0405, 0.0226};  // per-user calibrated hip offset
    Side side = Side::Right;
    double p_min = 0.0;   // actuator stroke limits (m)
    double p_max = 0.45;

    void validate() const {
        for (double l : {l_c, l_1, l_2, l_n, l_m, d})
            if (!(l > 0.0)) throw InvariantViolation("geometry: all lengths must be > 0");
        if (!(l_1 + l_2 > l_c))
            throw InvariantViolation("geometry: chain not closable (l_1 + l_2 <= l_c)");
        if (!(p_min < p_max)) throw InvariantViolation("geometry: stroke limits out of order");
    }
};

/// Reflect the geometry across the sagittal (x=0) plane. The roles of the
/// internal/external links swap with the frame handedness.
inline ExoGeometry mirrored(const ExoGeometry& g) {
    ExoGeometry m = g;
    m.T_OF.x() = -g.T_OF.x();
    m.T_FP_nominal.x() = -g.T_FP_nominal.x();
    m.T_PH.x() = -g.T_PH.x();
    std::swap(m.l_1, m.l_2);
    m.side = g.side == Side::Left ? Side::Right : Side::Left;
    return m;
}

struct PelvisPose {
    double alpha = 0.0;   // rotation about x (rad)
    double beta_p = 0.0;  // rotation about y (rad)
    double gamma = 0.0;   // rotation about z (rad)
    Eigen::Vector3d T_FP{0.0, 0.0, 0.0};  // translation F -> P (m)

    Eigen::Matrix3d rotation() const { return rot_x(alpha) * rot_y(beta_p) * rot_z(gamma); }

    void validate() const {
        for (double a : {alpha, beta_p, gamma})
            if (!(a > -M_PI_2 && a < M_PI_2))
                throw InvariantViolation("pelvis pose: angle out of (-pi/2, pi/2)");
    }
};

inline PelvisPose neutral_pelvis(const ExoGeometry& g) {
    PelvisPose p;
    p.T_FP = g.T_FP_nominal;
    return p;
}

struct HipJointAngles {
    double theta_fl = 0.0;  // flexion/extension (rad)
    double theta_ab = 0.0;  // ab-/adduction (rad)
    double theta_ro = 0.0;  // internal/external rotation, mechanically constrained (rad)

    Eigen::Matrix3d rotation() const {
        return rot_x(theta_fl) * rot_y(theta_ab) * rot_z(theta_ro);
    }

    void validate() const {
        if (!(theta_fl >= -0.6 && theta_fl <= 1.6))
            throw InvariantViolation("hip angles: theta_fl out of [-0.6, 1.6] rad");
        if (!(theta_ab >= -0.5 && theta_ab <= 0.5))
            throw InvariantViolation("hip angles: theta_ab out of [-0.5, 0.5] rad");
    }
};

struct ActuatorState {
    double p_int = 0.0;   // internal shaft length (m)
    double p_ext = 0.0;   // external shaft length (m)
    double theta_A = 0.0; // passive actuator-plane rotation about x (rad)

    void validate(const ExoGeometry& g) const {
        if (p_int < g.p_min - 1e-12 || p_int > g.p_max + 1e-12 ||
            p_ext < g.p_min - 1e-12 || p_ext > g.p_max + 1e-12)
            throw StrokeLimit("actuator state: shaft length outside [" +
                              format_double(g.p_min) + ", " + format_double(g.p_max) + "] m");
        if (!(theta_A > -M_PI_2 && theta_A < M_PI_2))
            throw InvariantViolation("actuator state: theta_A out of (-pi/2, pi/2)");
    }
};

struct ChainSolution {
    double theta_1 = 0.0;  // link angle at P_ext (rad)
    double theta_2 = 0.0;  // link angle at P_int (rad)
    double theta_E = 0.0;  // hinge at E (rad)
    double theta_B = 0.0;  // hinge at B (rad)
    double theta_A = 0.0;  // actuator plane rotation (rad)
    Eigen::Vector3d E{0, 0, 0};
    Eigen::Vector3d B{0, 0, 0};
    Eigen::Vector3d H{0, 0, 0};
    double residual_H = 0.0;  // | H_top - H_bottom | (m)
    double residual_E = 0.0;  // | E_top - E_bottom | (m)
};

constexpr double kClosureTolerance = 1e-9;  // metres

// ---------------------------------------------------------------------------
// Top branch  (O -> H -> E)
// ---------------------------------------------------------------------------

struct TopBranch {
    Eigen::Vector3d H;
    Eigen::Vector3d E;
    Eigen::Matrix3d R_OH;
};

inline TopBranch pose_top_branch(const ExoGeometry& g, const PelvisPose& pelvis,
                                 const HipJointAngles& hip) {
    const Eigen::Matrix3d R_FP = pelvis.rotation();
    const Eigen::Vector3d T_OP = g.T_OF + pelvis.T_FP;
    TopBranch top;
    top.H = T_OP + R_FP * g.T_PH;
    top.R_OH = R_FP * hip.rotation();
    top.E = top.H + top.R_OH * Eigen::Vector3d(0.0, -g.l_n, -g.l_m);
    return top;
}

namespace detail {

/// theta_E and theta_B placing the bottom branch H on the top-branch H, given
/// E and the actuator plane angle. w is H - E expressed in the plane frame.
inline void solve_hinges(const ExoGeometry& g, const Eigen::Vector3d& w, double& theta_E,
                         double& theta_B) {
    const double s_b = w.x() / g.l_m;
    if (std::abs(s_b) > 1.0)
        throw Unreachable("hinge B: |sin| = " + format_double(std::abs(s_b)) + " > 1");
    theta_B = std::asin(s_b);
    const double rho = g.l_m * std::cos(theta_B);
    theta_E = std::atan2(w.z(), w.y()) - std::atan2(rho, g.l_n);
    if (theta_E > M_PI) theta_E -= 2.0 * M_PI;
    if (theta_E < -M_PI) theta_E += 2.0 * M_PI;
}

inline Eigen::Vector3d bottom_branch_H(const ExoGeometry& g, const Eigen::Vector3d& E,
                                       double theta_A, double theta_E, double theta_B) {
    const Eigen::Matrix3d R_OA = rot_x(theta_A);
    const Eigen::Vector3d B = E + R_OA * rot_x(theta_E) * Eigen::Vector3d(0.0, g.l_n, 0.0);
    return B + R_OA * rot_x(theta_E) * rot_y(theta_B) * Eigen::Vector3d(0.0, 0.0, g.l_m);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Forward kinematics (joint -> actuator), closed form via closure at H
// ---------------------------------------------------------------------------

struct FkResult {
    ActuatorState actuators;
    ChainSolution chain;
};

inline FkResult forward_kinematics(const ExoGeometry& g, const PelvisPose& pelvis,
                                   const HipJointAngles& hip) {
    g.validate();
    pelvis.validate();
    hip.validate();
    const TopBranch top = pose_top_branch(g, pelvis, hip);

    // E must lie in the actuator plane: theta_A from its (y, z) direction.
    const double u = std::hypot(top.E.y(), top.E.z());
    if (u < 1e-9) throw Unreachable("E on the actuator-plane rotation axis");
    const double theta_A = std::atan2(top.E.z(), top.E.y());
    if (!(theta_A > -M_PI_2 && theta_A < M_PI_2))
        throw Unreachable("actuator plane rotation " + format_double(theta_A) +
                          " rad out of (-pi/2, pi/2)");

    // In-plane x closure: l_c/2 - l_1 sin(th1) = x_E = -l_c/2 + l_2 sin(th2);
    // links open forward, so both cosines are positive.
    const double s1 = (0.5 * g.l_c - top.E.x()) / g.l_1;
    const double s2 = (top.E.x() + 0.5 * g.l_c) / g.l_2;
    if (std::abs(s1) > 1.0 || std::abs(s2) > 1.0)
        throw Unreachable("in-plane closure has no solution (|sin| > 1)");
    const double c1 = std::sqrt(1.0 - s1 * s1);
    const double c2 = std::sqrt(1.0 - s2 * s2);

    // Ordinate closure: p + d + l cos(theta) = |(y_E, z_E)|.
    FkResult out;
    out.actuators.theta_A = theta_A;
    out.actuators.p_ext = u - g.d - g.l_1 * c1;
    out.actuators.p_int = u - g.d - g.l_2 * c2;
    if (out.actuators.p_ext < g.p_min || out.actuators.p_ext > g.p_max ||
        out.actuators.p_int < g.p_min || out.actuators.p_int > g.p_max)
        throw StrokeLimit("required shafts (p_int=" + format_double(out.actuators.p_int) +
                          ", p_ext=" + format_double(out.actuators.p_ext) + ") outside [" +
                          format_double(g.p_min) + ", " + format_double(g.p_max) + "]");

    out.chain.theta_1 = std::asin(s1);
    out.chain.theta_2 = std::asin(s2);
    out.chain.theta_A = theta_A;
    out.chain.E = top.E;
    out.chain.H = top.H;

    const Eigen::Vector3d w = rot_x(theta_A).transpose() * (top.H - top.E);
    detail::solve_hinges(g, w, out.chain.theta_E, out.chain.theta_B);
    out.chain.B = top.E + rot_x(theta_A) * rot_x(out.chain.theta_E) *
                              Eigen::Vector3d(0.0, g.l_n, 0.0);

    // Loop-closure residuals from the actuator-side reconstruction.
    const Eigen::Vector3d E_bot =
        rot_x(theta_A) * Eigen::Vector3d(0.5 * g.l_c - g.l_1 * s1,
                                         out.actuators.p_ext + g.d + g.l_1 * c1, 0.0);
    const Eigen::Vector3d H_bot =
        detail::bottom_branch_H(g, E_bot, theta_A, out.chain.theta_E, out.chain.theta_B);
    out.chain.residual_E = (top.E - E_bot).norm();
    out.chain.residual_H = (top.H - H_bot).norm();
    if (out.chain.residual_E > kClosureTolerance || out.chain.residual_H > kClosureTolerance)
        throw NoConvergence("forward kinematics closure residual above tolerance");
    return out;
}

// ---------------------------------------------------------------------------
// Inverse kinematics (actuator -> joint), damped Newton on closure at E
// ---------------------------------------------------------------------------

struct IkResult {
    HipJointAngles hip;
    ChainSolution chain;
};

namespace detail {

struct InPlaneE {
    double x = 0.0;      // in-plane abscissa of E
    double u = 0.0;      // in-plane ordinate of E
    double theta_1 = 0.0;
    double theta_2 = 0.0;
};

/// Intersect the two link circles in the actuator plane. Branch choice: both
/// link angles in (-pi/2, pi/2); if both intersections qualify, prefer the
/// one continuous with `hint` (in-plane point), else the smaller |theta_1|.
inline InPlaneE in_plane_closure(const ExoGeometry& g, double p_int, double p_ext,
                                 const std::optional<Eigen::Vector2d>& hint = std::nullopt) {
    const Eigen::Vector2d c_ext(0.5 * g.l_c, p_ext + g.d);
    const Eigen::Vector2d c_int(-0.5 * g.l_c, p_int + g.d);
    const Eigen::Vector2d delta = c_int - c_ext;
    const double dist = delta.norm();
    if (dist < 1e-12) throw Unreachable("degenerate in-plane geometry");
    if (dist > g.l_1 + g.l_2 || dist < std::abs(g.l_1 - g.l_2))
        throw Unreachable("link circles do not intersect (distance " + format_double(dist) + ")");
    const double a = (dist * dist + g.l_1 * g.l_1 - g.l_2 * g.l_2) / (2.0 * dist);
    const double h2 = g.l_1 * g.l_1 - a * a;
    const double h = h2 > 0.0 ? std::sqrt(h2) : 0.0;
    const Eigen::Vector2d mid = c_ext + a / dist * delta;
    const Eigen::Vector2d perp(-delta.y() / dist, delta.x() / dist);

    std::vector<InPlaneE> candidates;
    for (double sgn : {+1.0, -1.0}) {
        const Eigen::Vector2d e = mid + sgn * h * perp;
        // links open forward: E above both shaft ends
        if (e.y() <= c_ext.y() || e.y() <= c_int.y()) continue;
        InPlaneE cand;
        cand.x = e.x();
        cand.u = e.y();
        cand.theta_1 = std::atan2(c_ext.x() - e.x(), e.y() - c_ext.y());
        cand.theta_2 = std::atan2(e.x() - c_int.x(), e.y() - c_int.y());
        if (std::abs(cand.theta_1) < M_PI_2 && std::abs(cand.theta_2) < M_PI_2)
            candidates.push_back(cand);
        if (h == 0.0) break;  // tangent circles: single intersection
    }
    if (candidates.empty())
        throw Unreachable("no forward-opening in-plane closure for the given shaft lengths");
    if (candidates.size() == 1) return candidates.front();
    if (hint) {
        const Eigen::Vector2d h0(candidates[0].x, candidates[0].u);
        const Eigen::Vector2d h1(candidates[1].x, candidates[1].u);
        return (h0 - *hint).norm() <= (h1 - *hint).norm() ? candidates[0] : candidates[1];
    }
    return std::abs(candidates[0].theta_1) <= std::abs(candidates[1].theta_1) ? candidates[0]
                                                                              : candidates[1];
}

}  // namespace detail

/// Solve hip angles from shaft lengths. The passive plane angle in `act` is
/// ignored (it is determined by the closure); a previous IK solution can be
/// supplied to seed the Newton iteration for batch continuity.
inline IkResult inverse_kinematics(const ExoGeometry& g, const PelvisPose& pelvis,
                                   const ActuatorState& act,
                                   const std::optional<HipJointAngles>& seed = std::nullopt) {
    g.validate();
    pelvis.validate();
    if (act.p_int < g.p_min - 1e-12 || act.p_int > g.p_max + 1e-12 ||
        act.p_ext < g.p_min - 1e-12 || act.p_ext > g.p_max + 1e-12)
        throw StrokeLimit("shaft lengths outside stroke limits");

    const detail::InPlaneE plane = detail::in_plane_closure(g, act.p_int, act.p_ext);

    const Eigen::Matrix3d R_FP = pelvis.rotation();
    const Eigen::Vector3d H = g.T_OF + pelvis.T_FP + R_FP * g.T_PH;
    const Eigen::Vector3d n(0.0, -g.l_n, -g.l_m);

    // Closure residual at E in the unknowns q = (theta_fl, theta_ab, theta_ro):
    //   r0 = E_top.x - x_E
    //   r1 = |(E_top.y, E_top.z)| - u_E
    //   r2 = l_n * x-component of the thigh's y-axis (the E/B hinge pair keeps
    //        that axis in the global y-z plane)
    auto residual = [&](const Eigen::Vector3d& q, Eigen::Vector3d& r, Eigen::Matrix3d* J) {
        const Eigen::Matrix3d R1 = rot_x(q[0]), R2 = rot_y(q[1]), R3 = rot_z(q[2]);
        const Eigen::Matrix3d R_OH = R_FP * R1 * R2 * R3;
        const Eigen::Vector3d E = H + R_OH * n;
        const double rad = std::hypot(E.y(), E.z());
        r[0] = E.x() - plane.x;
        r[1] = rad - plane.u;
        r[2] = g.l_n * R_OH(0, 1);
        if (J) {
            const Eigen::Matrix3d dR_fl = R_FP * drot_x(q[0]) * R2 * R3;
            const Eigen::Matrix3d dR_ab = R_FP * R1 * drot_y(q[1]) * R3;
            const Eigen::Matrix3d dR_ro = R_FP * R1 * R2 * drot_z(q[2]);
            const Eigen::Matrix3d dRs[3] = {dR_fl, dR_ab, dR_ro};
            for (int j = 0; j < 3; ++j) {
                const Eigen::Vector3d dE = dRs[j] * n;
                (*J)(0, j) = dE.x();
                (*J)(1, j) = rad > 1e-12 ? (E.y() * dE.y() + E.z() * dE.z()) / rad : 0.0;
                (*J)(2, j) = g.l_n * dRs[j](0, 1);
            }
        }
    };

    Eigen::Vector3d q(0.0, 0.0, 0.0);
    if (seed) q = Eigen::Vector3d(seed->theta_fl, seed->theta_ab, seed->theta_ro);

    Eigen::Vector3d r;
    Eigen::Matrix3d J;
    residual(q, r, &J);
    if (!seed) {
        // analytic seed: one linearized step about the neutral configuration
        const Eigen::Vector3d step = J.fullPivLu().solve(-r);
        if (step.allFinite()) q += step.cwiseMax(-0.5).cwiseMin(0.5);
        residual(q, r, &J);
    }

    // converge well below the closure tolerance so round trips keep margin
    const double newton_tol = 0.01 * kClosureTolerance;
    bool converged = r.norm() < newton_tol;
    for (int iter = 0; iter < 50 && !converged; ++iter) {
        const Eigen::Vector3d step = J.fullPivLu().solve(-r);
        if (!step.allFinite()) throw NoConvergence("inverse kinematics: singular Jacobian");
        double lambda = 1.0;
        const double r0 = r.norm();
        Eigen::Vector3d q_try, r_try;
        while (true) {
            q_try = q + lambda * step;
            residual(q_try, r_try, nullptr);
            if (r_try.norm() < r0 || lambda < 1.0 / 64.0) break;
            lambda *= 0.5;
        }
        q = q_try;
        residual(q, r, &J);
        converged = r.norm() < newton_tol;
    }
    if (!converged)
        throw NoConvergence("inverse kinematics: residual " + format_double(r.norm()) +
                            " m after 50 iterations");

    IkResult out;
    out.hip.theta_fl = q[0];
    out.hip.theta_ab = q[1];
    out.hip.theta_ro = q[2];

    const TopBranch top = pose_top_branch(g, pelvis, out.hip);
    const double theta_A = std::atan2(top.E.z(), top.E.y());
    out.chain.theta_A = theta_A;
    out.chain.theta_1 = plane.theta_1;
    out.chain.theta_2 = plane.theta_2;
    out.chain.E = top.E;
    out.chain.H = top.H;
    const Eigen::Vector3d w = rot_x(theta_A).transpose() * (top.H - top.E);
    detail::solve_hinges(g, w, out.chain.theta_E, out.chain.theta_B);
    out.chain.B = top.E + rot_x(theta_A) * rot_x(out.chain.theta_E) *
                              Eigen::Vector3d(0.0, g.l_n, 0.0);

    const Eigen::Vector3d E_bot = rot_x(theta_A) * Eigen::Vector3d(plane.x, plane.u, 0.0);
    const Eigen::Vector3d H_bot =
        detail::bottom_branch_H(g, E_bot, theta_A, out.chain.theta_E, out.chain.theta_B);
    out.chain.residual_E = (top.E - E_bot).norm();
    out.chain.residual_H = (top.H - H_bot).norm();
    if (out.chain.residual_E > kClosureTolerance || out.chain.residual_H > kClosureTolerance)
        throw NoConvergence("inverse kinematics: loop-closure residual above tolerance");
    return out;
}

/// Internal rotation enforced by the mechanism for given flexion/abduction
/// and pelvis pose (the thigh's y-axis stays in the global y-z plane).
inline double consistent_internal_rotation(const PelvisPose& pelvis, double theta_fl,
                                           double theta_ab) {
    const Eigen::Matrix3d R_FP = pelvis.rotation();
    const double cf = std::cos(theta_fl), sf = std::sin(theta_fl);
    const double ca = std::cos(theta_ab), sa = std::sin(theta_ab);
    const double A = R_FP(0, 1) * cf + R_FP(0, 2) * sf;
    const double B = -R_FP(0, 0) * ca - R_FP(0, 1) * sa * sf + R_FP(0, 2) * sa * cf;
    double theta = std::atan2(-A, B);
    if (theta > M_PI_2) theta -= M_PI;
    if (theta < -M_PI_2) theta += M_PI;
    return theta;
}

// ---------------------------------------------------------------------------
// Geometry configuration file
// ---------------------------------------------------------------------------

inline ExoGeometry geometry_from_kv(const KeyValueFile& kv) {
    ExoGeometry g;
    auto vec3 = [&](const std::string& key, Eigen::Vector3d fallback) {
        if (!kv.has(key)) return fallback;
        std::istringstream ss(kv.get(key));
        Eigen::Vector3d v;
        if (!(ss >> v.x() >> v.y() >> v.z()))
            throw ConfigError(kv.origin() + ": key '" + key + "' needs three numbers");
        return v;
    };
    g.l_c = kv.get_double_or("l_c", g.l_c);
    g.l_1 = kv.get_double_or("l_1", g.l_1);
    g.l_2 = kv.get_double_or("l_2", g.l_2);
    g.l_n = kv.get_double_or("l_n", g.l_n);
    g.l_m = kv.get_double_or("l_m", g.l_m);
    g.d = kv.get_double_or("d", g.d);
    g.T_OF = vec3("T_OF", g.T_OF);
    g.T_FP_nominal = vec3("T_FP_nominal", g.T_FP_nominal);
    g.T_PH = vec3("T_PH", g.T_PH);
    if (kv.has("side")) g.side = parse_side(kv.get("side"));
    g.p_min = kv.get_double_or("p_min", g.p_min);
    g.p_max = kv.get_double_or("p_max", g.p_max);
    g.validate();
    return g;
}

inline ExoGeometry load_geometry(const std::filesystem::path& p) {
    return geometry_from_kv(KeyValueFile::load(p));
}

inline std::string geometry_to_text(const ExoGeometry& g) {
    auto v3 = [](const Eigen::Vector3d& v) {
        return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
    };
    std::string out;
    out += "# exoskeleton hip-module geometry (metres)\n";
    out += "side = " + std::string(g.side == Side::Left ? "L" : "R") + "\n";
    out += "l_c = " + format_double(g.l_c) + "\n";
    out += "l_1 = " + format_double(g.l_1) + "\n";
    out += "l_2 = " + format_double(g.l_2) + "\n";
    out += "l_n = " + format_double(g.l_n) + "\n";
    out += "l_m = " + format_double(g.l_m) + "\n";
    out += "d = " + format_double(g.d) + "\n";
    out += "T_OF = " + v3(g.T_OF) + "\n";
    out += "T_FP_nominal = " + v3(g.T_FP_nominal) + "\n";
    out += "T_PH = " + v3(g.T_PH) + "\n";
    out += "p_min = " + format_double(g.p_min) + "\n";
    out += "p_max = " + format_double(g.p_max) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Batch conversion of a gait pattern into actuator reference trajectories
// ---------------------------------------------------------------------------

struct ActuatorSample {
    double p_int = 0.0;
    double p_ext = 0.0;
    double theta_A = 0.0;
    double knee_deg = 0.0;
};

struct ActuatorSeries {
    double dt = 0.0;
    std::vector<double> time;
    std::vector<ActuatorSample> left;
    std::vector<ActuatorSample> right;
};

constexpr double kDegToRad = M_PI / 180.0;

/// Sample the pattern and run per-sample forward kinematics for both legs.
/// The left leg follows the same trajectories phase-shifted by half a cycle
/// (symmetric gait); frontal-plane signals are expressed in each geometry's
/// own mirrored frame. The knee channel passes through unchanged: its
/// revolute joint is directly actuated.
inline ActuatorSeries pattern_to_actuators(const ExoGeometry& geom_left,
                                           const ExoGeometry& geom_right, const GaitPattern& p,
                                           double dt, double n_cycles = 1.0) {
    geom_left.validate();
    geom_right.validate();
    p.validate();
    const PatternSeries series = sample_pattern(p, dt, n_cycles);
    ActuatorSeries out;
    out.dt = dt;
    out.time = series.time;
    out.left.reserve(series.time.size());
    out.right.reserve(series.time.size());

    const auto& flex = series.channels.at(JointChannel::HipFlexExt);
    const auto& abad = series.channels.at(JointChannel::HipAbAd);
    const auto& knee = series.channels.at(JointChannel::KneeFlexExt);
    const auto& pelv = series.channels.at(JointChannel::PelvisLateral);

    const PatternChannel& flex_ch = p.channel(JointChannel::HipFlexExt);
    const PatternChannel& abad_ch = p.channel(JointChannel::HipAbAd);
    const PatternChannel& knee_ch = p.channel(JointChannel::KneeFlexExt);

    for (size_t k = 0; k < series.time.size(); ++k) {
        const double phase = std::fmod(series.time[k] / p.cycle_time * 100.0, 100.0);
        const double lateral_m = pelv[k].position / 1000.0;  // mm -> m

        auto solve_side = [&](const ExoGeometry& g, double fl_deg, double ab_deg,
                              double lateral_sign) {
            PelvisPose pose;
            pose.T_FP = g.T_FP_nominal + Eigen::Vector3d(lateral_sign * lateral_m, 0.0, 0.0);
            HipJointAngles hip;
            hip.theta_fl = fl_deg * kDegToRad;
            hip.theta_ab = ab_deg * kDegToRad;
            hip.theta_ro = consistent_internal_rotation(pose, hip.theta_fl, hip.theta_ab);
            try {
                const FkResult fk = forward_kinematics(g, pose, hip);
                ActuatorSample s;
                s.p_int = fk.actuators.p_int;
                s.p_ext = fk.actuators.p_ext;
                s.theta_A = fk.actuators.theta_A;
                return s;
            } catch (const Error& e) {
                throw Error(e.kind(), "sample " + std::to_string(k) + " (t=" +
                                          format_double(series.time[k]) + " s): " + e.what());
            }
        };

        ActuatorSample right = solve_side(geom_right, flex[k].position, abad[k].position, +1.0);
        right.knee_deg = knee[k].position;
        out.right.push_back(right);

        const double phase_l = std::fmod(phase + 50.0, 100.0);
        const SplineSample fl_l = flex_ch.sample_at(phase_l, p.cycle_time);
        const SplineSample ab_l = abad_ch.sample_at(phase_l, p.cycle_time);
        const SplineSample kn_l = knee_ch.sample_at(phase_l, p.cycle_time);
        ActuatorSample left = solve_side(geom_left, fl_l.position, ab_l.position, -1.0);
        left.knee_deg = kn_l.position;
        out.left.push_back(left);
    }
    return out;
}

inline std::string actuator_series_to_text(const ActuatorSeries& s) {
    std::string out = "time_s,p_int_L,p_ext_L,theta_A_L,knee_L,p_int_R,p_ext_R,theta_A_R,knee_R\n";
    for (size_t k = 0; k < s.time.size(); ++k) {
        const ActuatorSample& l = s.left[k];
        const ActuatorSample& r = s.right[k];
        out += format_double(s.time[k]) + "," + format_double(l.p_int) + "," +
               format_double(l.p_ext) + "," + format_double(l.theta_A) + "," +
               format_double(l.knee_deg) + "," + format_double(r.p_int) + "," +
               format_double(r.p_ext) + "," + format_double(r.theta_A) + "," +
               format_double(r.knee_deg) + "\n";
    }
    return out;
}

}  // namespace gaitgen
