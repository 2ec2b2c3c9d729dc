#pragma once

// Post-processing of a finite-volume snapshot in self-similar coordinates
// (xi, eta) = (x, y) / t: radial cross-sections, shock / smooth-sonic
// classification per angle, the theta3 bracket, and the residual of the
// second-order self-similar pressure equation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "nlw/errors.hpp"
#include "nlw/fv_solver.hpp"
#include "nlw/gas_model.hpp"
#include "nlw/polar_grid.hpp"

namespace nlw {

/// Interior samples, row-major by (theta, r): index j * nr + i.
struct SelfSimField {
    std::shared_ptr<const PolarGrid> grid;
    double time = 0.0;
    double gamma = 0.0;
    std::vector<double> xi, eta, r, theta, rho, p, c2, u;

    int nr() const { return grid->nr; }
    int ntheta() const { return grid->ntheta; }
    std::size_t at(int i, int j) const { return std::size_t(j) * grid->nr + std::size_t(i); }
};

namespace detail {

// theta is the grid angle (unwrapped past pi), not atan2 of (xi, eta).
inline void fill_derived(SelfSimField& s, const GasLaw& gl, std::size_t k, double theta) {
    s.r[k] = std::sqrt(s.xi[k] * s.xi[k] + s.eta[k] * s.eta[k]);
    s.theta[k] = theta;
    s.c2[k] = gl.sound_speed_sq_p(s.p[k]);
    s.u[k] = s.r[k] * s.r[k] - s.c2[k];
}

inline SelfSimField alloc_selfsim(std::shared_ptr<const PolarGrid> grid, double t, const GasLaw& gl) {
    SelfSimField s;
    s.grid = std::move(grid);
    s.time = t;
    s.gamma = gl.gamma();
    const std::size_t n = std::size_t(s.grid->nr) * s.grid->ntheta;
    for (auto* v : {&s.xi, &s.eta, &s.r, &s.theta, &s.rho, &s.p, &s.c2, &s.u}) v->assign(n, 0.0);
    return s;
}

}  // namespace detail

inline SelfSimField to_selfsimilar(const FVField& f, const GasLaw& gl) {
    if (!(f.time > 0.0)) throw DomainError("to_selfsimilar: field time must be positive");
    SelfSimField s = detail::alloc_selfsim(f.grid, f.time, gl);
    const PolarGrid& g = *f.grid;
    for (int j = 0; j < g.ntheta; ++j)
        for (int i = 0; i < g.nr; ++i) {
            const std::size_t kc = g.cell(i, j), k = s.at(i, j);
            s.xi[k] = g.xc[kc] / f.time;
            s.eta[k] = g.yc[kc] / f.time;
            s.rho[k] = f.q[kc].rho;
            s.p[k] = gl.pressure(s.rho[k]);
            detail::fill_derived(s, gl, k, g.theta_center(j));
        }
    return s;
}

/// Self-similar field sampled from a closed-form pressure p(r, theta) on the
/// grid's cell centers at time t (used for exact-solution residual checks).
inline SelfSimField selfsim_from_pressure(std::shared_ptr<const PolarGrid> grid, double t, const GasLaw& gl,
                                          const std::function<double(double r, double theta)>& pfun) {
    if (!(t > 0.0)) throw DomainError("selfsim_from_pressure: time must be positive");
    SelfSimField s = detail::alloc_selfsim(grid, t, gl);
    const PolarGrid& g = *s.grid;
    for (int j = 0; j < g.ntheta; ++j)
        for (int i = 0; i < g.nr; ++i) {
            const std::size_t kc = g.cell(i, j), k = s.at(i, j);
            s.xi[k] = g.xc[kc] / t;
            s.eta[k] = g.yc[kc] / t;
            s.p[k] = pfun(std::hypot(s.xi[k], s.eta[k]), g.theta_center(j));
            s.rho[k] = gl.density_from_pressure(s.p[k]);
            detail::fill_derived(s, gl, k, g.theta_center(j));
        }
    return s;
}

struct CrossPoint {
    double r = 0.0;
    double rho = 0.0;
    double p = 0.0;
    double u = 0.0;
};

struct CrossSection {
    double theta = 0.0;  // requested angle (radians)
    int row = -1;        // grid row actually extracted
    std::vector<CrossPoint> points;
};

inline CrossSection radial_cross_section(const SelfSimField& s, double theta) {
    const PolarGrid& g = *s.grid;
    if (g.mapping != Mapping::polar) throw DomainError("radial_cross_section: needs a polar grid");
    const double eps = 1e-12;
    if (theta < g.bounds.thetamin - eps || theta > g.bounds.thetamax + eps)
        throw DomainError("radial_cross_section: angle outside the grid");
    int j = static_cast<int>(std::floor((theta - g.bounds.thetamin) / g.dtheta));
    j = std::clamp(j, 0, g.ntheta - 1);
    CrossSection cs;
    cs.theta = theta;
    cs.row = j;
    cs.points.reserve(g.nr);
    for (int i = 0; i < g.nr; ++i) {
        const std::size_t k = s.at(i, j);
        cs.points.push_back({s.r[k], s.rho[k], s.p[k], s.u[k]});
    }
    return cs;
}

enum class AngleClass { shock, smooth_sonic, unclassified };

inline const char* to_string(AngleClass c) {
    switch (c) {
        case AngleClass::shock: return "SHOCK";
        case AngleClass::smooth_sonic: return "SMOOTH_SONIC";
        case AngleClass::unclassified: return "UNCLASSIFIED";
    }
    return "?";
}

struct AngleClassification {
    AngleClass cls = AngleClass::unclassified;
    double transition_r = std::numeric_limits<double>::quiet_NaN();
    double max_window_jump = 0.0;  // largest max-min of rho over a window
};

/// SHOCK if some window of `window` consecutive points spans a density range
/// above jump_threshold (transition at the window with the largest range);
/// otherwise SMOOTH_SONIC at the outermost sign change of u.
inline AngleClassification classify_angle(const CrossSection& cs, double jump_threshold = 0.02, int window = 3) {
    AngleClassification out;
    const auto& pts = cs.points;
    const int n = static_cast<int>(pts.size());
    if (window < 2 || n < 2 * window) return out;
    int best = -1;
    for (int k = 0; k + window <= n; ++k) {
        double lo = pts[k].rho, hi = pts[k].rho;
        for (int m = 1; m < window; ++m) {
            lo = std::min(lo, pts[k + m].rho);
            hi = std::max(hi, pts[k + m].rho);
        }
        if (hi - lo > out.max_window_jump) {
            out.max_window_jump = hi - lo;
            best = k;
        }
    }
    if (out.max_window_jump > jump_threshold) {
        out.cls = AngleClass::shock;
        out.transition_r = 0.5 * (pts[best].r + pts[best + window - 1].r);
        return out;
    }
    // Every window is below threshold, so any sign change of u is smooth.
    for (int k = n - 1; k > 0; --k) {
        const double a = pts[k - 1].u, b = pts[k].u;
        if ((a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0)) {
            const double w = a / (a - b);
            out.cls = AngleClass::smooth_sonic;
            out.transition_r = pts[k - 1].r + w * (pts[k].r - pts[k - 1].r);
            return out;
        }
    }
    return out;
}

struct AngleReportRow {
    double theta = 0.0;  // radians
    AngleClassification c;
};

struct Theta3Interval {
    double lo = 0.0;  // radians
    double hi = 0.0;
};

/// Classify every angle theta_lo, theta_lo + step, ..., <= theta_hi.
inline std::vector<AngleReportRow> classify_angles(const SelfSimField& s, double theta_lo, double theta_hi,
                                                   double step, double jump_threshold, int window) {
    if (!(step > 0.0)) throw DomainError("classify_angles: step must be positive");
    std::vector<AngleReportRow> rows;
    const int n = static_cast<int>(std::floor((theta_hi - theta_lo) / step + 1e-9));
    for (int k = 0; k <= n; ++k) {
        const double th = theta_lo + k * step;
        rows.push_back({th, classify_angle(radial_cross_section(s, th), jump_threshold, window)});
    }
    return rows;
}

/// Scanning upward: the first SMOOTH_SONIC angle preceded by some SHOCK angle,
/// bracketed below by the last SHOCK angle before it.
inline Theta3Interval estimate_theta3(const std::vector<AngleReportRow>& rows) {
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (rows[k - 1].theta >= rows[k].theta) throw DomainError("estimate_theta3: angles not increasing");
    int last_shock = -1;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].c.cls == AngleClass::shock) last_shock = static_cast<int>(k);
        else if (rows[k].c.cls == AngleClass::smooth_sonic && last_shock >= 0)
            return {rows[last_shock].theta, rows[k].theta};
    }
    throw AnalysisError("estimate_theta3: no shock to smooth-sonic transition found");
}

struct ResidualNorms {
    double l1 = 0.0;    // mean |residual| over the mask
    double linf = 0.0;
    std::size_t count = 0;
};

/// Residual of r^2(1 - r^2/c^2) p_rr + p_thth + r(1 - 2r^2/c^2) p_r + kappa (r^2/c^2)(r^2/p) p_r^2
/// by central differences on the uniform (r, theta) grid. Cells without a full
/// stencil are dropped from the mask. mask: one byte per sample (at(i, j)).
inline ResidualNorms pnd_residual(const SelfSimField& s, const std::vector<std::uint8_t>& mask) {
    const PolarGrid& g = *s.grid;
    if (g.mapping != Mapping::polar) throw DomainError("pnd_residual: needs a polar grid");
    if (mask.size() != s.p.size()) throw DomainError("pnd_residual: mask size mismatch");
    const double kappa = (s.gamma - 1.0) / s.gamma;
    const double dr = g.dr / s.time, dth = g.dtheta;
    ResidualNorms out;
    for (int j = 1; j + 1 < g.ntheta; ++j)
        for (int i = 1; i + 1 < g.nr; ++i) {
            const std::size_t k = s.at(i, j);
            if (!mask[k]) continue;
            const double rr = (g.bounds.rmin + (i + 0.5) * g.dr) / s.time;
            const double pc = s.p[k];
            const double pe = s.p[s.at(i + 1, j)], pw = s.p[s.at(i - 1, j)];
            const double pn = s.p[s.at(i, j + 1)], ps = s.p[s.at(i, j - 1)];
            const double pr = (pe - pw) / (2.0 * dr);
            const double prr = (pe - 2.0 * pc + pw) / (dr * dr);
            const double ptt = (pn - 2.0 * pc + ps) / (dth * dth);
            const double q = rr * rr / s.c2[k];
            const double res = rr * rr * (1.0 - q) * prr + ptt + rr * (1.0 - 2.0 * q) * pr +
                               kappa * q * (rr * rr / pc) * pr * pr;
            out.l1 += std::abs(res);
            out.linf = std::max(out.linf, std::abs(res));
            ++out.count;
        }
    if (out.count == 0) throw DomainError("pnd_residual: empty mask");
    out.l1 /= double(out.count);
    return out;
}

/// Mask of samples whose polar coordinates lie in the given box.
inline std::vector<std::uint8_t> box_mask(const SelfSimField& s, double r_lo, double r_hi, double th_lo,
                                          double th_hi) {
    std::vector<std::uint8_t> m(s.p.size(), 0);
    for (std::size_t k = 0; k < m.size(); ++k)
        m[k] = s.r[k] >= r_lo && s.r[k] <= r_hi && s.theta[k] >= th_lo && s.theta[k] <= th_hi;
    return m;
}

}  // namespace nlw
