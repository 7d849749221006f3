#pragma once

// Independent reference implementations used to freeze expected values in
// tests. Nothing here may call into the code paths it checks.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "gaitgen/types.hpp"

namespace oracles {

/// Spectral differentiation of a periodic signal: naive DFT, derivative in
/// frequency space, inverse DFT. Input is the endpoint-inclusive grid; output
/// matches it. Units: unit/s via cycle_time.
inline std::vector<double> fourier_derivative(const std::vector<double>& samples,
                                              double cycle_time, int order = 1) {
    const size_t m = samples.size() - 1;  // one period
    using cd = std::complex<double>;
    std::vector<cd> spectrum(m, cd(0, 0));
    for (size_t k = 0; k < m; ++k)
        for (size_t n = 0; n < m; ++n)
            spectrum[k] += samples[n] *
                           std::exp(cd(0, -2.0 * M_PI * static_cast<double>(k * n) /
                                              static_cast<double>(m)));
    // multiply by (i*omega)^order with omega in rad/s
    for (size_t k = 0; k < m; ++k) {
        double freq = static_cast<double>(k);
        if (k > m / 2) freq -= static_cast<double>(m);  // negative frequencies
        if (2 * k == m) {
            spectrum[k] = 0.0;  // drop the unmatched Nyquist bin
            continue;
        }
        const double omega = 2.0 * M_PI * freq / cycle_time;
        cd mult(1, 0);
        for (int o = 0; o < order; ++o) mult *= cd(0, omega);
        spectrum[k] *= mult;
    }
    std::vector<double> out(samples.size());
    for (size_t n = 0; n < m; ++n) {
        cd acc(0, 0);
        for (size_t k = 0; k < m; ++k)
            acc += spectrum[k] * std::exp(cd(0, 2.0 * M_PI * static_cast<double>(k * n) /
                                                    static_cast<double>(m)));
        out[n] = acc.real() / static_cast<double>(m);
    }
    out[m] = out[0];
    return out;
}

/// Plain Horner evaluation of c0 + c1 v + c2 v^2 plus a linear extra term.
inline double horner_cycle_time(const std::array<double, 4>& c, double v, double extra) {
    double poly = c[2];
    poly = poly * v + c[1];
    poly = poly * v + c[0];
    return poly + c[3] * extra;
}

/// Homogeneous-transform chain for the top branch, built from 4x4 products
/// only (independent of the production 3x3 path).
struct TopBranchOracle {
    Eigen::Vector3d H;
    Eigen::Vector3d E;
};

inline Eigen::Matrix4d hom(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 3>(0, 0) = r;
    m.block<3, 1>(0, 3) = t;
    return m;
}

inline Eigen::Matrix3d rx4(double a) {
    Eigen::Matrix3d r;
    r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
    return r;
}
inline Eigen::Matrix3d ry4(double a) {
    Eigen::Matrix3d r;
    r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
    return r;
}
inline Eigen::Matrix3d rz4(double a) {
    Eigen::Matrix3d r;
    r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return r;
}

inline TopBranchOracle top_branch_oracle(const Eigen::Vector3d& T_OF,
                                         const Eigen::Vector3d& T_FP,
                                         const Eigen::Vector3d& T_PH, double alpha, double beta,
                                         double gamma, double fl, double ab, double ro,
                                         double l_n, double l_m) {
    // pelvis plate frame: translated to T_OF + T_FP, rotated by Rx Ry Rz
    const Eigen::Matrix4d plate =
        hom(Eigen::Matrix3d::Identity(), T_OF + T_FP) *
        hom(rx4(alpha) * ry4(beta) * rz4(gamma), Eigen::Vector3d::Zero());
    TopBranchOracle out;
    out.H = (plate * Eigen::Vector4d(T_PH.x(), T_PH.y(), T_PH.z(), 1.0)).head<3>();
    // hip frame: at H, oriented by the pelvis rotation times the hip rotation
    const Eigen::Matrix4d hip_frame =
        hom(Eigen::Matrix3d::Identity(), out.H) *
        hom(rx4(alpha) * ry4(beta) * rz4(gamma) * rx4(fl) * ry4(ab) * rz4(ro),
            Eigen::Vector3d::Zero());
    out.E = (hip_frame * Eigen::Vector4d(0.0, -l_n, -l_m, 1.0)).head<3>();
    return out;
}

/// Exhaustive grid-scan extremum without refinement.
struct GridScanHit {
    size_t index;
    double value;
};

inline GridScanHit grid_scan_extremum(const std::vector<double>& s, size_t lo, size_t hi,
                                      bool want_max) {
    GridScanHit hit{lo, s[lo]};
    for (size_t i = lo; i <= hi; ++i) {
        if (want_max ? s[i] > hit.value : s[i] < hit.value) hit = {i, s[i]};
    }
    return hit;
}

inline double direct_rmse(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc / static_cast<double>(a.size()));
}

inline std::vector<double> direct_mean(const std::vector<std::vector<double>>& rows) {
    std::vector<double> out(rows.front().size(), 0.0);
    for (const auto& r : rows)
        for (size_t i = 0; i < out.size(); ++i) out[i] += r[i];
    for (double& v : out) v /= static_cast<double>(rows.size());
    return out;
}

}  // namespace oracles
