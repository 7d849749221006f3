#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "gaitgen/common.hpp"

namespace gaitgen {

// ---------------------------------------------------------------------------
// Cubic spline interpolation on uniform grids. Two flavours: periodic (for
// whole gait cycles, period 100%) and natural (for stride segments).
// ---------------------------------------------------------------------------

/// C2 periodic cubic spline through M uniformly spaced samples over one
/// period. Sample i sits at x = i * period / M; x wraps modulo the period.
class PeriodicCubic {
public:
    PeriodicCubic(std::vector<double> values, double period)
        : y_(std::move(values)), period_(period) {
        const size_t m = y_.size();
        if (m < 3) throw InvariantViolation("periodic spline needs >= 3 samples");
        if (!(period > 0.0)) throw InvariantViolation("periodic spline needs period > 0");
        h_ = period_ / static_cast<double>(m);
        solve_second_derivatives();
    }

    double value(double x) const { return eval<0>(x); }
    double derivative(double x) const { return eval<1>(x); }
    double second_derivative(double x) const { return eval<2>(x); }

    double period() const { return period_; }

private:
    template <int Order>
    double eval(double x) const {
        const size_t m = y_.size();
        double t = std::fmod(x, period_);
        if (t < 0.0) t += period_;
        size_t i = static_cast<size_t>(t / h_);
        if (i >= m) i = m - 1;
        const size_t j = (i + 1) % m;
        const double a = (static_cast<double>(i + 1) * h_ - t) / h_;  // weight on left node
        const double b = 1.0 - a;
        if constexpr (Order == 0) {
            return a * y_[i] + b * y_[j] +
                   ((a * a * a - a) * m2_[i] + (b * b * b - b) * m2_[j]) * h_ * h_ / 6.0;
        } else if constexpr (Order == 1) {
            return (y_[j] - y_[i]) / h_ +
                   ((3.0 * b * b - 1.0) * m2_[j] - (3.0 * a * a - 1.0) * m2_[i]) * h_ / 6.0;
        } else {
            return a * m2_[i] + b * m2_[j];
        }
    }

    // Cyclic tridiagonal system (1 4 1)/6 * m2 = d2y/h^2, solved with the
    // Sherman-Morrison correction on the Thomas algorithm.
    void solve_second_derivatives() {
        const size_t m = y_.size();
        std::vector<double> rhs(m);
        for (size_t i = 0; i < m; ++i) {
            const double prev = y_[(i + m - 1) % m];
            const double next = y_[(i + 1) % m];
            rhs[i] = 6.0 * (next - 2.0 * y_[i] + prev) / (h_ * h_);
        }
        m2_.assign(m, 0.0);

        const double diag = 4.0, off = 1.0;
        // A = T + u v^T with u = (-diag, 0, ..., off)^T trick (Numerical Recipes
        // cyclic form): use gamma = -diag.
        const double gamma = -diag;
        std::vector<double> bb(m, diag);
        bb[0] = diag - gamma;
        bb[m - 1] = diag - off * off / gamma;

        auto thomas = [&](const std::vector<double>& r) {
            std::vector<double> x(m), cp(m);
            double beta = bb[0];
            x[0] = r[0] / beta;
            for (size_t i = 1; i < m; ++i) {
                cp[i] = off / beta;
                beta = bb[i] - off * cp[i];
                x[i] = (r[i] - off * x[i - 1]) / beta;
            }
            for (size_t i = m - 1; i-- > 0;) x[i] -= cp[i + 1] * x[i + 1];
            return x;
        };

        std::vector<double> u(m, 0.0);
        u[0] = gamma;
        u[m - 1] = off;
        std::vector<double> x = thomas(rhs);
        std::vector<double> z = thomas(u);
        const double fact = (x[0] + off * x[m - 1] / gamma) /
                            (1.0 + z[0] + off * z[m - 1] / gamma);
        for (size_t i = 0; i < m; ++i) m2_[i] = x[i] - fact * z[i];
    }

    std::vector<double> y_;
    std::vector<double> m2_;
    double period_;
    double h_;
};

/// Natural cubic spline through n uniformly spaced samples spanning
/// [x0, x0 + (n-1)*h]. Used for stride-segment resampling.
class NaturalCubic {
public:
    NaturalCubic(std::vector<double> values, double x0, double h)
        : y_(std::move(values)), x0_(x0), h_(h) {
        const size_t n = y_.size();
        if (n < 3) throw InvariantViolation("natural spline needs >= 3 samples");
        if (!(h > 0.0)) throw InvariantViolation("natural spline needs h > 0");
        // Tridiagonal (1 4 1) system for interior second derivatives.
        m2_.assign(n, 0.0);
        std::vector<double> c(n, 0.0), r(n, 0.0);
        for (size_t i = 1; i + 1 < n; ++i)
            r[i] = 6.0 * (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]) / (h_ * h_);
        double beta = 4.0;
        if (n > 2) {
            m2_[1] = r[1] / beta;
            for (size_t i = 2; i + 1 < n; ++i) {
                c[i] = 1.0 / beta;
                beta = 4.0 - c[i];
                m2_[i] = (r[i] - m2_[i - 1]) / beta;
            }
            for (size_t i = n - 2; i-- > 1;) m2_[i] -= c[i + 1] * m2_[i + 1];
        }
    }

    double value(double x) const {
        const size_t n = y_.size();
        double t = (x - x0_) / h_;
        double fi = std::floor(t);
        if (fi < 0) fi = 0;
        if (fi > static_cast<double>(n - 2)) fi = static_cast<double>(n - 2);
        const size_t i = static_cast<size_t>(fi);
        const double a = (fi + 1.0) - t;
        const double b = 1.0 - a;
        return a * y_[i] + b * y_[i + 1] +
               ((a * a * a - a) * m2_[i] + (b * b * b - b) * m2_[i + 1]) * h_ * h_ / 6.0;
    }

private:
    std::vector<double> y_;
    std::vector<double> m2_;
    double x0_;
    double h_;
};

// ---------------------------------------------------------------------------

/// Resample an endpoint-inclusive cycle (period 100%) onto a new inclusive
/// grid. The source's duplicate endpoint is ignored; the output endpoint is
/// the wrap value.
inline std::vector<double> resample_cycle_samples(const std::vector<double>& src, size_t n_out) {
    if (src.size() < 4) throw InvariantViolation("resample: source grid too small");
    if (n_out < 2) throw InvariantViolation("resample: target grid too small");
    std::vector<double> period_samples(src.begin(), src.end() - 1);
    PeriodicCubic spline(std::move(period_samples), 100.0);
    std::vector<double> out(n_out);
    const double step = 100.0 / static_cast<double>(n_out - 1);
    for (size_t j = 0; j < n_out; ++j) out[j] = spline.value(static_cast<double>(j) * step);
    return out;
}

/// Resample a non-periodic segment whose samples span [0,100] inclusive
/// (first sample at 0%, last at 100%) onto an inclusive grid.
inline std::vector<double> resample_segment(const std::vector<double>& src, size_t n_out) {
    if (src.size() < 3) throw InvariantViolation("resample: segment too small");
    if (n_out < 2) throw InvariantViolation("resample: target grid too small");
    const double h = 100.0 / static_cast<double>(src.size() - 1);
    NaturalCubic spline(src, 0.0, h);
    std::vector<double> out(n_out);
    const double step = 100.0 / static_cast<double>(n_out - 1);
    for (size_t j = 0; j < n_out; ++j) out[j] = spline.value(static_cast<double>(j) * step);
    return out;
}

}  // namespace gaitgen
