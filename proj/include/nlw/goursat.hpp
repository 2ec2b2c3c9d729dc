#pragma once

// Method of characteristics for the (p, R, S) system in the transient
// region between Gamma_12 (plus characteristic, rarefaction data) and
// Gamma_23 (minus characteristic, prescribed or extracted data):
//   p_theta = (R + S)/2,  d_- R = h (S - R) R,  d_+ S = h (R - S) S,
// with d_+- = d_theta +- lambda d_r. Also boundary-data validation, sonic
// front extraction, level curves of u = r^2 - c^2 and near-sonic diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlw/characteristics.hpp"
#include "nlw/errors.hpp"
#include "nlw/gas_model.hpp"
#include "nlw/selfsim.hpp"

namespace nlw {

struct Gamma12Sample {
    double theta = 0.0, r = 0.0, p = 0.0, R = 0.0, S = 0.0;
};

struct Gamma23Sample {
    double theta = 0.0;
    double f = 0.0;    // radius
    double fp = 0.0;   // df/dtheta
    double g = 0.0;    // pressure
    double dmg = 0.0;  // d_- g (= S on Gamma_23)
    double R = 0.0;
};

struct BoundaryData {
    std::vector<Gamma12Sample> g12;  // theta increasing from theta2
    std::vector<Gamma23Sample> g23;  // theta increasing from theta2
    double theta3 = 0.0;
};

/// R at Xi_2 from the rarefaction formula.
inline double r_at_xi2(const GasLaw& gl, const QuadrantData& qd) {
    return r0_exact(gl, qd, qd.xi2).R;
}

/// n + 1 exact samples of Gamma_12 on [theta2, theta_hi].
inline std::vector<Gamma12Sample> make_gamma12(const GasLaw& gl, const QuadrantData& qd, int n,
                                               double theta_hi = 0.5 * std::numbers::pi) {
    if (n < 1) throw DomainError("make_gamma12: need n >= 1");
    std::vector<Gamma12Sample> out;
    out.reserve(n + 1);
    for (int k = 0; k <= n; ++k) {
        const double th = k == n ? theta_hi : qd.xi2.theta + (theta_hi - qd.xi2.theta) * k / n;
        const double r = gamma12(qd, th);
        const PRS w = r0_exact(gl, qd, {r, th});
        out.push_back({th, r, w.p, w.R, 0.0});
    }
    return out;
}

namespace detail {

/// Solve x = x0 * exp(a + b (s - x)) for x > 0 (b >= 0) by Newton on the log.
inline double implicit_exp(double x0, double a, double b, double s) {
    if (x0 == 0.0) return 0.0;
    double x = x0 * std::exp(std::min(a + b * (s - x0), 50.0));
    if (!(x > 0.0) || !std::isfinite(x)) x = x0;
    for (int it = 0; it < 60; ++it) {
        const double F = std::log(x) - std::log(x0) - a - b * (s - x);
        const double dF = 1.0 / x + b;
        double xn = x - F / dF;
        if (!(xn > 0.0)) xn = 0.5 * x;
        if (std::abs(xn - x) <= 1e-15 * std::max(std::abs(x), 1e-300)) return xn;
        x = xn;
    }
    return x;
}

}  // namespace detail

/// Recompute R along Gamma_23 from R(Xi_2) by d_- R = h (d_- g - R) R with a
/// trapezoidal exponent (implicit in R). A sonic sample takes the limit R = S.
inline void integrate_r23(const GasLaw& gl, std::vector<Gamma23Sample>& g23, double R0) {
    if (g23.empty()) return;
    auto hh = [&](const Gamma23Sample& s) -> std::optional<double> {
        const double u = s.f * s.f - gl.sound_speed_sq_p(s.g);
        if (!(u > 0.0)) return std::nullopt;
        return h_coef(gl, s.f, s.g);
    };
    g23[0].R = R0;
    for (std::size_t k = 1; k < g23.size(); ++k) {
        auto& a = g23[k - 1];
        auto& b = g23[k];
        const auto ha = hh(a), hb = hh(b);
        if (!ha) {
            b.R = a.R;
            continue;
        }
        if (!hb) {
            b.R = b.dmg;
            continue;
        }
        const double d = b.theta - a.theta;
        b.R = detail::implicit_exp(a.R, 0.5 * d * *ha * (a.dmg - a.R), 0.5 * d * *hb, b.dmg);
    }
}

// ---------------------------------------------------------------------------
// Validation.

struct CheckResult {
    std::string name;
    bool passed = true;
    bool hard = true;  // false: warning only
    double value = 0.0;
    double tol = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    bool accepted() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed || !c.hard; });
    }
    std::string ndjson() const {
        std::ostringstream os;
        for (const auto& c : checks) {
            nlohmann::ordered_json j;
            j["check"] = c.name;
            j["passed"] = c.passed;
            j["severity"] = c.hard ? "hard" : "warning";
            j["value"] = c.value;
            j["tol"] = c.tol;
            if (!c.detail.empty()) j["detail"] = c.detail;
            os << j.dump() << '\n';
        }
        return os.str();
    }
};

struct ValidationOptions {
    double tol = 5e-3;
    int terminal_window = 3;  // samples used for the limit trends at theta3
};

/// Checks of the Gamma_23 data: characteristic ODE, corner values at Xi_2,
/// positivity of d_- g, the R quadrature, the limits at theta3, the bounds
/// on f and g, and the wave-speed class of the Riemann data.
inline ValidationReport validate_boundary_data(const GasLaw& gl, const QuadrantData& qd, const BoundaryData& bd,
                                               const ValidationOptions& opt = {}) {
    ValidationReport rep;
    const auto& s = bd.g23;
    if (s.size() < 32) throw DomainError("validate_boundary_data: need at least 32 Gamma_23 samples");
    const double tol = opt.tol;
    auto add = [&](std::string name, bool ok, double value, double t, std::string det = {}, bool hard = true) {
        rep.checks.push_back({std::move(name), ok, hard, value, t, std::move(det)});
    };
    const std::size_t n = s.size();

    // G23: f' = -lambda(f, g), with f' from central differences of f.
    double g23_err = 0.0, fp_max = -1e300;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double fd = (s[k + 1].f - s[k - 1].f) / (s[k + 1].theta - s[k - 1].theta);
        fp_max = std::max(fp_max, fd);
        double lam;
        try {
            lam = lambda_speed(gl, s[k].f, s[k].g);
        } catch (const DomainError&) {
            lam = 0.0;
            g23_err = std::max(g23_err, 1.0);
        }
        g23_err = std::max(g23_err, std::abs(fd + lam) / std::max(1.0, lam));
    }
    add("G23", g23_err <= tol && fp_max <= tol, g23_err, tol,
        fp_max > tol ? "df/dtheta > 0 somewhere" : "");

    const double r2 = std::sqrt(qd.c1 * qd.c4);
    add("r2", std::abs(s.front().f - r2) <= tol * r2, std::abs(s.front().f - r2), tol * r2);
    add("pXi2", std::abs(s.front().g - qd.p4) <= tol * qd.p4, std::abs(s.front().g - qd.p4), tol * qd.p4);

    // Scale for derivative checks: R at Xi_2.
    const double Rx = r_at_xi2(gl, qd);
    add("SXi2", std::abs(s.front().dmg) <= tol * std::max(1.0, Rx) * 10.0, std::abs(s.front().dmg),
        tol * std::max(1.0, Rx) * 10.0);

    // z23: d_- g > 0 strictly inside (theta2, theta3); the end windows may approach 0.
    const std::size_t w = static_cast<std::size_t>(std::max(1, opt.terminal_window));
    double zmin = 1e300, zmax = -1e300;
    for (std::size_t k = w; k + w < n; ++k) {
        zmin = std::min(zmin, s[k].dmg);
        zmax = std::max(zmax, s[k].dmg);
    }
    add("z23", zmin > 0.0, zmin, 0.0, zmin > 0.0 ? "" : "d_- g not strictly positive inside Gamma_23");

    // R23: stored R vs quadrature.
    {
        auto copy = s;
        integrate_r23(gl, copy, Rx);
        double err = 0.0;
        for (std::size_t k = 0; k < n; ++k) err = std::max(err, std::abs(copy[k].R - s[k].R));
        add("R23", err <= tol * Rx, err, tol * Rx);
        add("RXi2", std::abs(s.front().R - Rx) <= tol * Rx, std::abs(s.front().R - Rx), tol * Rx);
    }

    // G1: R and d_- g decrease toward 0 over the terminal window.
    {
        bool trend = true;
        for (std::size_t k = n - w; k < n; ++k)
            trend = trend && s[k].R <= s[k - 1].R + 1e-14 && s[k].dmg <= s[k - 1].dmg + 1e-14;
        const double endval = std::max(std::abs(s.back().R), std::abs(s.back().dmg));
        add("G1", trend && endval <= tol * std::max(1.0, Rx) * 10.0, endval, tol * std::max(1.0, Rx) * 10.0,
            trend ? "" : "R or d_- g not decreasing at theta3");
    }

    // fgbounds: c4^2 < c^2(g) <= f^2 <= c1 c4 (the strict lower bound holds away from Xi_2).
    {
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double c2 = gl.sound_speed_sq_p(s[k].g), f2 = s[k].f * s[k].f;
            worst = std::max({worst, qd.c4 * qd.c4 - c2, c2 - f2, f2 - qd.c1 * qd.c4});
        }
        add("fgbounds", worst <= tol * qd.c4 * qd.c4, worst, tol * qd.c4 * qd.c4);
    }

    add("speed_class", qd.speed_class != WaveSpeedClass::violated, 2.0 * qd.c4 - qd.c1, 0.0,
        to_string(qd.speed_class), qd.speed_class == WaveSpeedClass::violated);
    if (qd.speed_class == WaveSpeedClass::boundary) rep.checks.back().passed = false;  // warning only
    return rep;
}

// ---------------------------------------------------------------------------
// Gamma_23 from a finite-volume field.

/// Bilinear interpolation of p from a polar self-similar field.
inline double interp_pressure(const SelfSimField& s, double r, double theta) {
    const PolarGrid& g = *s.grid;
    const double a = (r * s.time - g.bounds.rmin) / g.dr - 0.5;
    const double b = (theta - g.bounds.thetamin) / g.dtheta - 0.5;
    const int i = static_cast<int>(std::floor(a)), j = static_cast<int>(std::floor(b));
    if (i < 0 || j < 0 || i + 1 >= g.nr || j + 1 >= g.ntheta) throw DomainError("interp_pressure: outside grid");
    const double wa = a - i, wb = b - j;
    return (1 - wa) * (1 - wb) * s.p[s.at(i, j)] + wa * (1 - wb) * s.p[s.at(i + 1, j)] +
           (1 - wa) * wb * s.p[s.at(i, j + 1)] + wa * wb * s.p[s.at(i + 1, j + 1)];
}

struct ExtractOptions {
    double lambda_stop = 1e-3;  // end of Gamma_23: lambda below this
    double h_max = 0.0;         // trace step; 0 means a quarter of the grid dtheta
    double slope_window = 0.0;  // d_- g fit half-width in theta; 0 means two grid dtheta
};

/// Trace the minus characteristic from Xi_2 through the field's pressure,
/// sample g and d_- g along it, and fill R by the Gamma_23 quadrature.
inline BoundaryData gamma23_from_field(const GasLaw& gl, const QuadrantData& qd, const SelfSimField& s,
                                       const ExtractOptions& opt = {}) {
    const PolarGrid& g = *s.grid;
    if (g.mapping != Mapping::polar) throw ExtractionError("gamma23_from_field: needs a polar grid");
    TraceOptions to;
    to.theta_end = 0.5 * std::numbers::pi;
    to.h_max = opt.h_max > 0.0 ? opt.h_max : 0.25 * g.dtheta;
    to.tol = 1e-10;
    to.t_cut = 0.0;
    to.stop = [&](double r, double th) {
        const double p = interp_pressure(s, r, th);
        const double c2 = gl.sound_speed_sq_p(p);
        return r * r <= c2 || r * std::sqrt((r * r - c2) / c2) < opt.lambda_stop;
    };
    PressureFn pf = [&](double r, double th) { return interp_pressure(s, r, th); };
    CharCurve cv;
    try {
        cv = integrate_char(gl, pf, qd.xi2, Family::minus, to);
    } catch (const DomainError& e) {
        throw ExtractionError(std::string("gamma23_from_field: ") + e.what());
    }
    if (cv.truncated && cv.samples.size() < 2)
        throw ExtractionError("gamma23_from_field: trace left the grid at the start");
    if (cv.samples.size() < 8) throw ExtractionError("gamma23_from_field: trace too short");

    BoundaryData bd;
    const auto& cs = cv.samples;
    const std::size_t n = cs.size();
    const double hw = opt.slope_window > 0.0 ? opt.slope_window : 2.0 * g.dtheta;
    bd.g23.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        auto& o = bd.g23[k];
        o.theta = cs[k].theta;
        o.f = cs[k].r;
        o.g = cs[k].p;
        const double c2 = gl.sound_speed_sq_p(o.g);
        o.fp = o.f * o.f > c2 ? -o.f * std::sqrt((o.f * o.f - c2) / c2) : 0.0;
    }
    // d_- g = dg/dtheta along the curve: least-squares slope over a window,
    // one-sided at the ends so the window never leaves the curve.
    for (std::size_t k = 0; k < n; ++k) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = 0;
        for (std::size_t q = 0; q < n; ++q) {
            const double dx = cs[q].theta - cs[k].theta;
            if (std::abs(dx) > hw) continue;
            sx += dx;
            sy += cs[q].p;
            sxx += dx * dx;
            sxy += dx * cs[q].p;
            ++m;
        }
        const double den = m * sxx - sx * sx;
        bd.g23[k].dmg = den > 0.0 ? (m * sxy - sx * sy) / den : 0.0;
    }
    integrate_r23(gl, bd.g23, r_at_xi2(gl, qd));
    bd.theta3 = bd.g23.back().theta;
    return bd;
}

/// Resample Gamma_23 data to n + 1 points uniform in theta (piecewise linear).
inline std::vector<Gamma23Sample> resample_gamma23(const std::vector<Gamma23Sample>& in, int n) {
    if (in.size() < 2 || n < 1) throw DomainError("resample_gamma23: need >= 2 samples and n >= 1");
    std::vector<Gamma23Sample> out;
    out.reserve(n + 1);
    const double a = in.front().theta, b = in.back().theta;
    std::size_t seg = 0;
    for (int k = 0; k <= n; ++k) {
        const double th = k == n ? b : a + (b - a) * k / n;
        while (seg + 2 < in.size() && in[seg + 1].theta < th) ++seg;
        const auto &L = in[seg], &H = in[seg + 1];
        const double w = std::clamp((th - L.theta) / (H.theta - L.theta), 0.0, 1.0);
        auto lerp = [w](double x, double y) { return x + w * (y - x); };
        out.push_back({th, lerp(L.f, H.f), lerp(L.fp, H.fp), lerp(L.g, H.g), lerp(L.dmg, H.dmg), lerp(L.R, H.R)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Characteristic mesh.

enum BreachBits : std::uint8_t {
    kBreachR = 1,
    kBreachS = 2,
    kBreachP = 4,
    kBreachPtheta = 8,
};

struct MeshNode {
    double theta = 0.0, r = 0.0, p = 0.0, R = 0.0, S = 0.0, t = 0.0;
    bool valid = false;
    bool sonic = false;
    std::uint8_t breach = 0;
};

/// Node (i, j): i indexes minus lines (starting on Gamma_12 at sample i),
/// j indexes plus lines (starting on Gamma_23 at sample j). Plus line j runs
/// over i, minus line i runs over j.
struct CharMesh {
    int ni = 0, nj = 0;  // node counts along Gamma_12 and Gamma_23
    std::vector<MeshNode> nodes;
    double p_lo = 0.0, p_hi = 0.0;  // bounds used for the breach flags
    MeshNode& at(int i, int j) { return nodes[std::size_t(j) * ni + std::size_t(i)]; }
    const MeshNode& at(int i, int j) const { return nodes[std::size_t(j) * ni + std::size_t(i)]; }
    std::size_t count_valid() const {
        return std::count_if(nodes.begin(), nodes.end(), [](const MeshNode& n) { return n.valid; });
    }
};

struct MarchOptions {
    double t_cut = 1e-4;
    int max_iter = 20;
    double tol = 1e-12;
    double bound_tol = 1e-8;
    /// Flag R <= 0 / S <= 0 at interior nodes (off for data where S vanishes identically).
    bool check_positivity = true;
};

namespace detail {

inline double sonic_u(const GasLaw& gl, double r, double p) { return r * r - gl.sound_speed_sq_p(p); }

/// Joint Newton on (log R, log S) of the trapezoidal exponential updates
///   R = RM exp(dM/2 (eM + hN (S - R))),  S = SP exp(dP/2 (eP + hN (R - S))),
/// where eM, eP are the predecessor exponents h (S - R) R / R and h (R - S).
/// A zero predecessor value stays zero (the equation is homogeneous).
inline void transport_rs(double& R, double& S, double RM, double SP, double dM, double dP, double eM, double eP,
                         double hN) {
    const bool Rz = RM == 0.0, Sz = SP == 0.0;
    R = Rz ? 0.0 : std::max(R, 1e-300);
    S = Sz ? 0.0 : std::max(S, 1e-300);
    if (Rz && Sz) return;
    for (int k = 0; k < 50; ++k) {
        const double F1 = Rz ? 0.0 : std::log(R) - std::log(RM) - 0.5 * dM * (eM + hN * (S - R));
        const double F2 = Sz ? 0.0 : std::log(S) - std::log(SP) - 0.5 * dP * (eP + hN * (R - S));
        const double a11 = Rz ? 1.0 : 1.0 / R + 0.5 * dM * hN, a12 = -0.5 * dM * hN;
        const double a21 = -0.5 * dP * hN, a22 = Sz ? 1.0 : 1.0 / S + 0.5 * dP * hN;
        double dR = 0.0, dS = 0.0;
        if (Rz) dS = -F2 / a22;
        else if (Sz) dR = -F1 / a11;
        else {
            const double det = a11 * a22 - a12 * a21;
            dR = -(F1 * a22 - F2 * a12) / det;
            dS = -(a11 * F2 - a21 * F1) / det;
        }
        double Rn = R + dR, Sn = S + dS;
        if (!Rz && !(Rn > 0.0)) Rn = 0.5 * R;
        if (!Sz && !(Sn > 0.0)) Sn = 0.5 * S;
        const bool done = std::abs(Rn - R) <= 1e-15 * R && std::abs(Sn - S) <= 1e-15 * S;
        R = Rn;
        S = Sn;
        if (done) break;
    }
}

}  // namespace detail

/// March the Goursat problem on the characteristic grid spanned by the given
/// boundary samples. Each node is the intersection of the plus line from
/// (i-1, j) and the minus line from (i, j-1), located with trapezoidal slopes;
/// R and S follow from the exponential form of their transport equations
/// (implicit in the new node, solved by Newton), and p from the trapezoidal
/// integrals of R along the plus line and S along the minus line, averaged.
inline CharMesh goursat_march(const GasLaw& gl, const std::vector<Gamma12Sample>& g12,
                              const std::vector<Gamma23Sample>& g23, double p_lo, double p_hi,
                              const MarchOptions& opt = {}) {
    if (g12.empty() || g23.empty()) throw DomainError("goursat_march: empty boundary data");
    if (std::abs(g12[0].theta - g23[0].theta) > 1e-10 || std::abs(g12[0].r - g23[0].f) > 1e-8)
        throw DomainError("goursat_march: boundary arcs do not share their first point");
    CharMesh m;
    m.ni = static_cast<int>(g12.size());
    m.nj = static_cast<int>(g23.size());
    m.nodes.assign(std::size_t(m.ni) * m.nj, MeshNode{});
    m.p_lo = p_lo;
    m.p_hi = p_hi;

    auto finish = [&](MeshNode& nd) {
        const double u = detail::sonic_u(gl, nd.r, nd.p);
        nd.t = std::sqrt(std::max(u, 0.0));
        nd.sonic = nd.t < opt.t_cut;
        nd.valid = true;
    };
    for (int i = 0; i < m.ni; ++i) {
        auto& nd = m.at(i, 0);
        nd.theta = g12[i].theta;
        nd.r = g12[i].r;
        nd.p = g12[i].p;
        nd.R = g12[i].R;
        nd.S = g12[i].S;
        finish(nd);
        if (nd.sonic) break;
    }
    for (int j = 1; j < m.nj; ++j) {
        auto& nd = m.at(0, j);
        nd.theta = g23[j].theta;
        nd.r = g23[j].f;
        nd.p = g23[j].g;
        nd.R = g23[j].R;
        nd.S = g23[j].dmg;
        finish(nd);
        if (nd.sonic) break;
    }

    auto lam = [&](double r, double p) {
        const double c2 = gl.sound_speed_sq_p(p), u = r * r - c2;
        return u > 0.0 ? r * std::sqrt(u / c2) : 0.0;
    };
    auto hcoef = [&](double r, double p) -> double {
        const double c2 = gl.sound_speed_sq_p(p), u = r * r - c2;
        return u > 0.0 ? r * r * gl.dc2_dp(p) / (4.0 * c2 * u) : std::numeric_limits<double>::infinity();
    };

    for (int j = 1; j < m.nj; ++j) {
        for (int i = 1; i < m.ni; ++i) {
            const MeshNode& P = m.at(i - 1, j);  // plus-line predecessor
            const MeshNode& M = m.at(i, j - 1);  // minus-line predecessor
            if (!P.valid || !M.valid || P.sonic || M.sonic) continue;
            const double lP = lam(P.r, P.p), lM = lam(M.r, M.p);
            const double hP = hcoef(P.r, P.p), hM = hcoef(M.r, M.p);
            // Node from a guess lN of lambda at the node: position from the
            // trapezoidal slopes, then R, S and p. Returns false when the
            // slopes degenerate.
            MeshNode N;
            N.R = M.R;
            N.S = P.S;
            bool sonic_hit = false;
            auto eval = [&](double lN) {
                const double a = 0.5 * (lP + lN), b = 0.5 * (lM + lN);
                if (!(a + b > 0.0)) return false;
                N.theta = (M.r - P.r + a * P.theta + b * M.theta) / (a + b);
                N.r = P.r + a * (N.theta - P.theta);
                const double dP = N.theta - P.theta, dM = N.theta - M.theta;
                N.p = 0.5 * ((P.p + 0.5 * dP * (P.R + P.R)) + (M.p + 0.5 * dM * (M.S + M.S)));
                // p enters R and S only through hN: a few passes settle it.
                for (int pass = 0; pass < 30; ++pass) {
                    const double p_old = N.p;
                    const double uN = detail::sonic_u(gl, N.r, N.p);
                    sonic_hit = uN < opt.t_cut * opt.t_cut;
                    if (sonic_hit) {
                        // Sonic: drop the node's own (singular) coefficient.
                        N.S = P.S * std::exp(std::min(dP * hP * (P.R - P.S), 50.0));
                        N.R = M.R * std::exp(std::min(dM * hM * (M.S - M.R), 50.0));
                    } else {
                        detail::transport_rs(N.R, N.S, M.R, P.S, dM, dP, hM * (M.S - M.R), hP * (P.R - P.S),
                                             hcoef(N.r, N.p));
                    }
                    N.p = 0.5 * ((P.p + 0.5 * dP * (P.R + N.R)) + (M.p + 0.5 * dM * (M.S + N.S)));
                    if (sonic_hit || std::abs(N.p - p_old) <= 1e-15 * N.p) break;
                }
                return true;
            };
            // lambda at the node solves x^2 = r^2 u / c^2 with (r, u) taken at
            // node(x). This form stays smooth through the sonic circle, where
            // lambda itself behaves like sqrt(u); secant iteration on it,
            // clamped at x = 0 (a sonic node).
            auto resid = [&](double x) {
                return x * x - N.r * N.r * detail::sonic_u(gl, N.r, N.p) / gl.sound_speed_sq_p(N.p);
            };
            bool converged = false;
            double x0 = 0.5 * (lP + lM), f0 = 0.0, x_prev = 0.0, f_prev = 0.0;
            double th_prev = 1e300, r_prev = 1e300;
            for (int it = 0; it < opt.max_iter; ++it) {
                if (!eval(x0)) break;
                if (std::abs(N.theta - th_prev) <= opt.tol && std::abs(N.r - r_prev) <= opt.tol) {
                    converged = true;
                    break;
                }
                th_prev = N.theta;
                r_prev = N.r;
                f0 = resid(x0);
                double x1 = lam(N.r, N.p);  // plain fixed-point step to start
                if (it > 0 && f0 != f_prev) x1 = x0 - f0 * (x0 - x_prev) / (f0 - f_prev);
                if (!std::isfinite(x1)) break;
                if (x0 == 0.0 && sonic_hit) {
                    converged = true;  // sonic already at lambda = 0
                    break;
                }
                x_prev = x0;
                f_prev = f0;
                x0 = std::max(x1, 0.0);
            }
            // No root with u > 0 (the residual stays positive): the node lies
            // on or past the sonic circle.
            if (!converged && eval(0.0) && sonic_hit) converged = true;
            if (!converged) throw MeshError("goursat_march: characteristic intersection did not converge", i, j);
            if (N.theta < P.theta - 1e-14 || N.theta < M.theta - 1e-14)
                throw MeshError("goursat_march: new node behind its predecessors", i, j);
            finish(N);
            if (sonic_hit) N.sonic = true;
            // Breach flags.
            if (opt.check_positivity) {
                if (!(N.R > 0.0)) N.breach |= kBreachR;
                if (!(N.S > 0.0)) N.breach |= kBreachS;
            }
            if (N.p < p_lo - opt.bound_tol || N.p > p_hi + opt.bound_tol) N.breach |= kBreachP;
            // Discrete p_theta: node value and difference quotients along both lines.
            const double qP = (N.p - P.p) / std::max(N.theta - P.theta, 1e-300);
            const double qM = (N.p - M.p) / std::max(N.theta - M.theta, 1e-300);
            if (0.5 * (N.R + N.S) < -1e-10 || qP < -1e-10 || qM < -1e-10) N.breach |= kBreachPtheta;
            m.at(i, j) = N;
        }
    }
    return m;
}

inline CharMesh goursat_march(const GasLaw& gl, const QuadrantData& qd, const BoundaryData& bd,
                              const MarchOptions& opt = {}) {
    return goursat_march(gl, bd.g12, bd.g23, qd.p4, qd.p1, opt);
}

// ---------------------------------------------------------------------------
// Mesh analysis.

struct InvariantReport {
    std::size_t nodes = 0;
    std::size_t breach_R = 0, breach_S = 0, breach_p = 0, breach_ptheta = 0;
    double min_R = 1e300, min_S = 1e300, min_p = 1e300, max_p = -1e300;
    std::size_t hard_breaches() const { return breach_R + breach_S + breach_p + breach_ptheta; }
};

/// Counts breach flags over interior nodes (i, j >= 1); boundary samples
/// carry data, not computed values.
inline InvariantReport mesh_invariants(const CharMesh& m) {
    InvariantReport r;
    for (int j = 1; j < m.nj; ++j)
        for (int i = 1; i < m.ni; ++i) {
            const auto& n = m.at(i, j);
            if (!n.valid) continue;
            ++r.nodes;
            r.breach_R += (n.breach & kBreachR) != 0;
            r.breach_S += (n.breach & kBreachS) != 0;
            r.breach_p += (n.breach & kBreachP) != 0;
            r.breach_ptheta += (n.breach & kBreachPtheta) != 0;
            r.min_R = std::min(r.min_R, n.R);
            r.min_S = std::min(r.min_S, n.S);
            r.min_p = std::min(r.min_p, n.p);
            r.max_p = std::max(r.max_p, n.p);
        }
    return r;
}

struct SonicSample {
    double theta = 0.0, r = 0.0, rs = 0.0;
    int line = -1;  // minus line index
};

/// Ordered from the Gamma_23 (Xi_3) side to the Gamma_12 (Xi_1) side.
struct SonicFront {
    std::vector<SonicSample> samples;
};

/// One sample per minus line that ends sonic: the line's last supersonic
/// node (or the sonic node itself when it sits within t_cut of u = 0) moved
/// to u = 0 at fixed r with u_theta = -(c^2)'(R + S)/2; R = S = p_theta
/// there. The correction is capped at twice the line's last step, so an
/// exact sonic node (u = 0, p_theta = 0, e.g. Xi_1) is kept verbatim.
inline SonicFront extract_sonic(const GasLaw& gl, const CharMesh& m) {
    SonicFront f;
    for (int i = 0; i < m.ni; ++i) {
        int jl = -1;
        for (int j = 0; j < m.nj; ++j) {
            const auto& n = m.at(i, j);
            if (!n.valid) break;
            jl = j;
            if (n.sonic) break;
        }
        if (jl < 0 || !m.at(i, jl).sonic) continue;
        const MeshNode& last = m.at(i, jl);
        const MeshNode* prev = jl > 0 && m.at(i, jl - 1).valid ? &m.at(i, jl - 1) : nullptr;
        const MeshNode* base = &last;
        if (detail::sonic_u(gl, last.r, last.p) < 0.0 && prev && !prev->sonic) base = prev;
        const double u = detail::sonic_u(gl, base->r, base->p);
        const double pt = 0.5 * (base->R + base->S);
        const double ut = -gl.dc2_dp(base->p) * pt;
        const double cap = prev ? 2.0 * std::abs(last.theta - prev->theta) : 0.0;
        double th = base->theta;
        if (u != 0.0 && ut < 0.0 && std::abs(u / ut) <= cap) th -= u / ut;
        f.samples.push_back({th, base->r, pt, i});
    }
    return f;
}

struct FrontCheck {
    std::size_t samples = 0;
    bool strictly_decreasing = false;  // d eta / d xi <= -slope_tol between consecutive samples
    double max_slope = 0.0;            // largest (least negative) Cartesian slope
    bool ends_to_zero = false;         // R = S decreasing over the last 3 samples at both ends
};

inline FrontCheck check_front(const SonicFront& f, double slope_tol = 1e-6) {
    FrontCheck c;
    const auto& s = f.samples;
    c.samples = s.size();
    if (s.size() < 4) return c;
    c.strictly_decreasing = true;
    c.max_slope = -1e300;
    for (std::size_t k = 1; k < s.size(); ++k) {
        const double x0 = s[k - 1].r * std::cos(s[k - 1].theta), y0 = s[k - 1].r * std::sin(s[k - 1].theta);
        const double x1 = s[k].r * std::cos(s[k].theta), y1 = s[k].r * std::sin(s[k].theta);
        const double dx = x1 - x0;
        const double slope = dx != 0.0 ? (y1 - y0) / dx : (y1 > y0 ? -1e300 : 1e300);
        c.max_slope = std::max(c.max_slope, slope);
        if (!(dx < 0.0) || !(slope <= -slope_tol)) c.strictly_decreasing = false;
    }
    const std::size_t n = s.size();
    c.ends_to_zero = s[0].rs < s[1].rs && s[1].rs < s[2].rs && s[n - 1].rs < s[n - 2].rs && s[n - 2].rs < s[n - 3].rs;
    return c;
}

struct LevelPoint {
    double theta = 0.0, r = 0.0;
};

/// Points where u = d, by linear interpolation along both families, sorted by theta.
inline std::vector<LevelPoint> level_curve_u(const GasLaw& gl, const CharMesh& m, double d) {
    double umax = -1e300;
    for (const auto& n : m.nodes)
        if (n.valid) umax = std::max(umax, detail::sonic_u(gl, n.r, n.p));
    if (!(d > 0.0) || !(d < umax)) throw DomainError("level_curve_u: level outside (0, max u)");
    std::vector<LevelPoint> pts;
    auto edge = [&](const MeshNode& a, const MeshNode& b) {
        if (!a.valid || !b.valid) return;
        const double ua = detail::sonic_u(gl, a.r, a.p) - d, ub = detail::sonic_u(gl, b.r, b.p) - d;
        if ((ua > 0.0) == (ub > 0.0)) return;
        const double w = ua / (ua - ub);
        pts.push_back({a.theta + w * (b.theta - a.theta), a.r + w * (b.r - a.r)});
    };
    for (int j = 0; j < m.nj; ++j)
        for (int i = 0; i < m.ni; ++i) {
            if (i + 1 < m.ni) edge(m.at(i, j), m.at(i + 1, j));
            if (j + 1 < m.nj) edge(m.at(i, j), m.at(i, j + 1));
        }
    std::sort(pts.begin(), pts.end(), [](const LevelPoint& a, const LevelPoint& b) { return a.theta < b.theta; });
    return pts;
}

struct NearSonicDiagnostics {
    bool applicable = false;  // false when S vanishes identically (nothing to compare)
    std::size_t band_nodes = 0;
    std::size_t excluded = 0;  // R <= 0 or S <= 0
    double sup_ratio = 0.0;    // sup |R - S| / t over the band
    double max_abs_V = 0.0;    // V = 1/S - 1/R
};

/// Band: valid, non-flagged interior nodes with t < t_band.
inline NearSonicDiagnostics near_sonic_diagnostics(const CharMesh& m, double t_band) {
    NearSonicDiagnostics d;
    bool any_s = false;
    for (int j = 1; j < m.nj; ++j)
        for (int i = 1; i < m.ni; ++i) {
            const auto& n = m.at(i, j);
            if (!n.valid) continue;
            any_s = any_s || n.S != 0.0;
            if (n.sonic || !(n.t < t_band)) continue;
            if (!(n.R > 0.0) || !(n.S > 0.0)) {
                ++d.excluded;
                continue;
            }
            ++d.band_nodes;
            d.sup_ratio = std::max(d.sup_ratio, std::abs(n.R - n.S) / n.t);
            d.max_abs_V = std::max(d.max_abs_V, std::abs(1.0 / n.S - 1.0 / n.R));
        }
    d.applicable = any_s && d.band_nodes > 0;
    return d;
}

/// Ratio of sups between two refinements; divergence when it exceeds 2.
struct RefinementRatio {
    double ratio = 0.0;
    bool diverging = false;
};

inline RefinementRatio compare_refinements(const NearSonicDiagnostics& coarse, const NearSonicDiagnostics& fine) {
    RefinementRatio r;
    if (!coarse.applicable || !fine.applicable || coarse.sup_ratio == 0.0) return r;
    r.ratio = fine.sup_ratio / coarse.sup_ratio;
    r.diverging = r.ratio > 2.0;
    return r;
}

}  // namespace nlw
