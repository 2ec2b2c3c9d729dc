#pragma once

// Characteristics of the self-similar pressure equation in polar
// coordinates (r, theta): dr/dtheta = +-lambda with
// lambda = r sqrt((r^2 - c^2) / c^2), closed-form curves of the rarefaction
// and simple-wave regions, the Riccati transport of S, curvature formulas
// for R and S, and pairwise-intersection envelope detection.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nlw/errors.hpp"
#include "nlw/gas_model.hpp"

namespace nlw {

enum class Family { plus, minus };

inline const char* to_string(Family f) { return f == Family::plus ? "plus" : "minus"; }

/// Tolerance on r^2 - c^2 below which a point counts as sonic rather than subsonic.
inline constexpr double kSonicTol = 1e-12;

/// Polar characteristic slope lambda >= 0.
inline double lambda_speed(const GasLaw& gl, double r, double p) {
    const double c2 = gl.sound_speed_sq_p(p);
    const double u = r * r - c2;
    if (u < -kSonicTol) throw DomainError("lambda_speed: subsonic point");
    if (u <= 0.0) return 0.0;
    return r * std::sqrt(u / c2);
}

/// h = r^2 (c^2)' / (4 c^2 (r^2 - c^2)); coefficient of the R, S transport.
inline double h_coef(const GasLaw& gl, double r, double p) {
    const double c2 = gl.sound_speed_sq_p(p);
    const double u = r * r - c2;
    if (!(u > 0.0)) throw DomainError("h_coef: non-supersonic point");
    return r * r * gl.dc2_dp(p) / (4.0 * c2 * u);
}

struct CartSlopes {
    double minus = 0.0;
    double plus = 0.0;
    bool vertical = false;  // xi^2 == c^2: both slopes infinite, values unset
};

/// Cartesian slopes d eta / d xi of the two families at (xi, eta).
inline CartSlopes cart_slopes(const GasLaw& gl, double xi, double eta, double p) {
    const double c2 = gl.sound_speed_sq_p(p);
    const double u = xi * xi + eta * eta - c2;
    if (u < -kSonicTol) throw DomainError("cart_slopes: subsonic point");
    const double den = xi * xi - c2;
    CartSlopes s;
    if (std::abs(den) <= 1e-14 * std::max(1.0, c2)) {
        s.vertical = true;
        return s;
    }
    const double root = std::sqrt(c2 * std::max(u, 0.0));
    s.minus = (xi * eta - root) / den;
    s.plus = (xi * eta + root) / den;
    return s;
}

/// Gamma_12: r = c1 sin(theta) for theta in [theta2, pi/2].
inline double gamma12(const QuadrantData& qd, double theta) {
    const double eps = 1e-12;
    if (theta < qd.xi2.theta - eps || theta > 0.5 * std::numbers::pi + eps)
        throw DomainError("gamma12: theta outside [theta2, pi/2]");
    return qd.c1 * std::sin(theta);
}

/// Phase of Gamma_24: arcsec sqrt(c1/c4) - arcsin sqrt(c4/c1) = pi/2 - 2 theta2,
/// zero exactly when c1 = 2 c4.
inline double gamma24_phase(const QuadrantData& qd) {
    const double q = std::sqrt(qd.c1 / qd.c4);
    return std::acos(1.0 / q) - std::asin(1.0 / q);
}

/// Gamma_24: r = c4 sec(theta + phase).
inline double gamma24(const QuadrantData& qd, double theta) {
    const double cs = std::cos(theta + gamma24_phase(qd));
    if (!(cs > 1e-12)) throw DomainError("gamma24: secant pole or negative branch");
    return qd.c4 / cs;
}

struct PRS {
    double p = 0.0;
    double R = 0.0;
    double S = 0.0;
};

/// Exact solution of the rarefaction region R0: c^2(p) = eta^2.
inline PRS r0_exact(const GasLaw& gl, const QuadrantData& qd, PolarPoint pt) {
    const double eta = pt.r * std::sin(pt.theta);
    const double tol = 1e-12;
    if (!(pt.r > 0.0) || eta < qd.c4 - tol || eta > qd.c1 + tol || std::cos(pt.theta) < -tol)
        throw DomainError("r0_exact: point outside the rarefaction region");
    const double k = gl.kappa(), gk = std::pow(gl.gamma(), 1.0 / k);
    const double s = std::sin(pt.theta), c = std::max(std::cos(pt.theta), 0.0);
    PRS w;
    w.p = std::pow(eta, 2.0 / k) / gk;
    w.R = 4.0 / (k * gk) * c * std::pow(s, 2.0 / k - 1.0) * std::pow(pt.r, 2.0 / k);
    w.S = 0.0;
    return w;
}

// ---------------------------------------------------------------------------
// Curve tracing.

struct CharSample {
    double theta = 0.0;
    double r = 0.0;
    double p = 0.0;
};

struct CharCurve {
    Family family = Family::plus;
    std::vector<CharSample> samples;
    bool sonic_stop = false;  // ended because t = sqrt(r^2 - c^2) fell below t_cut
    bool truncated = false;   // step underflow or domain exit
};

/// Pressure field p(r, theta); may throw to signal leaving its domain.
using PressureFn = std::function<double(double r, double theta)>;

struct TraceOptions {
    double theta_end = 0.0;  // integrate from start.theta toward this angle
    double h_max = 1e-4;     // largest |dtheta|
    double h_min = 1e-13;
    double tol = 1e-12;      // local error per step, relative to max(1, r)
    double t_cut = 1e-6;
    /// Optional extra stop: return true to end the curve at (r, theta).
    std::function<bool(double r, double theta)> stop;
};

namespace detail {

inline double sonic_t(const GasLaw& gl, double r, double p) {
    return std::sqrt(std::max(r * r - gl.sound_speed_sq_p(p), 0.0));
}

}  // namespace detail

/// RK4 on dr/dtheta = +-lambda(r, p_eval(r, theta)) with step-doubling error
/// control. Stops at theta_end, at the sonic threshold (flagged), at the
/// caller's predicate, or when the step underflows (truncated).
inline CharCurve integrate_char(const GasLaw& gl, const PressureFn& p_eval, PolarPoint start, Family family,
                                const TraceOptions& opt) {
    CharCurve cv;
    cv.family = family;
    const double sgn = family == Family::plus ? 1.0 : -1.0;
    const double dir = opt.theta_end >= start.theta ? 1.0 : -1.0;

    double th = start.theta, r = start.r;
    double p = p_eval(r, th);
    if (r * r - gl.sound_speed_sq_p(p) < -kSonicTol) throw DomainError("integrate_char: subsonic start");
    cv.samples.push_back({th, r, p});
    if (detail::sonic_t(gl, r, p) < opt.t_cut) {
        cv.sonic_stop = true;
        return cv;
    }

    // Slope; nullopt when the stage lands in the subsonic zone or outside p's domain.
    auto slope = [&](double rr, double tt) -> std::optional<double> {
        double pp;
        try {
            pp = p_eval(rr, tt);
        } catch (const DomainError&) {
            return std::nullopt;
        }
        const double c2 = gl.sound_speed_sq_p(pp);
        const double u = rr * rr - c2;
        if (u < 0.0) return std::nullopt;
        return sgn * rr * std::sqrt(u / c2);
    };
    auto rk4 = [&](double rr, double tt, double h) -> std::optional<double> {
        auto k1 = slope(rr, tt);
        if (!k1) return std::nullopt;
        auto k2 = slope(rr + 0.5 * h * *k1, tt + 0.5 * h);
        if (!k2) return std::nullopt;
        auto k3 = slope(rr + 0.5 * h * *k2, tt + 0.5 * h);
        if (!k3) return std::nullopt;
        auto k4 = slope(rr + h * *k3, tt + h);
        if (!k4) return std::nullopt;
        return rr + h / 6.0 * (*k1 + 2.0 * *k2 + 2.0 * *k3 + *k4);
    };

    double h = opt.h_max;
    while (dir * (opt.theta_end - th) > 1e-15) {
        h = std::min(h, dir * (opt.theta_end - th));
        const auto full = rk4(r, th, dir * h);
        std::optional<double> two;
        if (full) {
            const auto half = rk4(r, th, 0.5 * dir * h);
            if (half) two = rk4(*half, th + 0.5 * dir * h, 0.5 * dir * h);
        }
        if (!full || !two || std::abs(*two - *full) > 15.0 * opt.tol * std::max(1.0, std::abs(r))) {
            h *= 0.5;
            if (h < opt.h_min) {
                cv.truncated = true;
                break;
            }
            continue;
        }
        // Richardson-extrapolated value.
        const double rn = *two + (*two - *full) / 15.0;
        const double tn = th + dir * h;
        double pn;
        try {
            pn = p_eval(rn, tn);
        } catch (const DomainError&) {
            cv.truncated = true;
            break;
        }
        th = tn;
        r = rn;
        p = pn;
        cv.samples.push_back({th, r, p});
        if (detail::sonic_t(gl, r, p) < opt.t_cut) {
            cv.sonic_stop = true;
            break;
        }
        if (opt.stop && opt.stop(r, th)) break;
        h = std::min(opt.h_max, 2.0 * h);
    }
    return cv;
}

// ---------------------------------------------------------------------------
// Simple-wave family: straight plus characteristics of constant states.

struct SimpleWaveFoot {
    double theta0 = 0.0;
    double r0 = 0.0;
    double p0 = 0.0;
    double s0 = 0.0;  // sqrt((r0^2 - c^2(p0)) / c^2(p0))
};

inline SimpleWaveFoot make_foot(const GasLaw& gl, double theta0, double r0, double p0) {
    const double c2 = gl.sound_speed_sq_p(p0);
    const double u = r0 * r0 - c2;
    if (!(r0 > 0.0) || u < -kSonicTol) throw DomainError("make_foot: subsonic foot");
    return {theta0, r0, p0, std::sqrt(std::max(u, 0.0) / c2)};
}

namespace detail {

/// Line coefficients: the plus characteristic through the foot is a xi + b eta = r0.
inline void foot_line(const SimpleWaveFoot& f, double& a, double& b) {
    const double s = std::sin(f.theta0), c = std::cos(f.theta0);
    b = s - c * f.s0;
    a = s * f.s0 + c;
}

}  // namespace detail

/// Radius of the foot's plus characteristic at angle theta.
inline double simple_wave_char(const SimpleWaveFoot& f, double theta) {
    double a, b;
    detail::foot_line(f, a, b);
    const double den = b * std::sin(theta) + a * std::cos(theta);
    if (!(den > 0.0)) throw DomainError("simple_wave_char: past the asymptote");
    return f.r0 / den;
}

/// c^2 of the constant state whose plus characteristic joins foot and point.
inline double recover_c2(double xi0, double eta0, double xi, double eta) {
    const double d2 = (eta - eta0) * (eta - eta0) + (xi - xi0) * (xi - xi0);
    if (!(d2 > 0.0)) throw DomainError("recover_c2: coincident points");
    const double num = eta * xi0 - xi * eta0;
    return num * num / d2;
}

struct RiccatiResult {
    double S = 0.0;
    bool blowup = false;  // denominator vanished or changed sign
};

/// S = S0 / (S0 H + 1), H the path integral of h along the plus characteristic.
inline RiccatiResult riccati_S(double S0, double h_integral) {
    const double den = S0 * h_integral + 1.0;
    if (!(den > 1e-14)) return {std::numeric_limits<double>::infinity(), true};
    return {S0 / den, false};
}

/// Integral of h along the foot's plus characteristic from theta0 to theta
/// (composite Gauss-Legendre, 4 nodes per panel).
inline double h_integral_simple(const GasLaw& gl, const SimpleWaveFoot& f, double theta, int panels = 64) {
    static constexpr double xg[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                     0.8611363115940526};
    static constexpr double wg[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                     0.3478548451374538};
    const double a = f.theta0, L = (theta - a) / panels;
    double s = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double mid = a + (k + 0.5) * L;
        for (int q = 0; q < 4; ++q) {
            const double th = mid + 0.5 * L * xg[q];
            s += wg[q] * h_coef(gl, simple_wave_char(f, th), f.p0);
        }
    }
    return 0.5 * L * s;
}

/// R (plus family) or S (minus family) from a characteristic r(theta) and its
/// first two derivatives: both equal p^(1/gamma)/(gamma kappa) times d(c^2)
/// along the curve, with c^2 = r^4 / (r'^2 + r^2).
inline double rs_from_curve(const GasLaw& gl, double r, double r1, double r2, Family family) {
    if (!(r > 0.0)) throw DomainError("rs_from_curve: non-positive radius");
    const double sign_tol = 1e-14 * r;
    if ((family == Family::plus && r1 < -sign_tol) || (family == Family::minus && r1 > sign_tol))
        throw DomainError("rs_from_curve: slope sign does not match the family");
    const double q = r1 * r1 + r * r;
    const double c2 = r * r * r * r / q;
    const double p = gl.pressure_from_c2(c2);
    const double g = gl.gamma(), k = gl.kappa();
    const double dc2 = 2.0 * r * r * r * r1 * (r * r + 2.0 * r1 * r1 - r * r2) / (q * q);
    return dc2 * std::pow(p, 1.0 / g) / (g * k);
}

// ---------------------------------------------------------------------------
// Envelope detection.

struct EnvelopeSample {
    double theta = 0.0;
    double r = 0.0;
};

struct EnvelopeResult {
    bool found = false;
    EnvelopeSample xi4;                  // smallest-theta intersection
    std::vector<EnvelopeSample> samples;  // one per intersecting adjacent pair, ordered along the feet
};

/// Pairwise intersections of adjacent feet's plus characteristics within
/// [theta_lo, theta_hi] and in front of both feet (angle on the far side of
/// theta0 in the direction of travel `dir`, +1 or -1).
inline EnvelopeResult envelope_point(const std::vector<SimpleWaveFoot>& feet, double theta_lo, double theta_hi,
                                     double dir = -1.0) {
    if (feet.size() < 3) throw DomainError("envelope_point: need at least 3 feet");
    EnvelopeResult res;
    for (std::size_t k = 0; k + 1 < feet.size(); ++k) {
        double a1, b1, a2, b2;
        detail::foot_line(feet[k], a1, b1);
        detail::foot_line(feet[k + 1], a2, b2);
        const double det = a1 * b2 - a2 * b1;
        if (std::abs(det) < 1e-14) continue;  // parallel
        const double xi = (feet[k].r0 * b2 - feet[k + 1].r0 * b1) / det;
        const double eta = (a1 * feet[k + 1].r0 - a2 * feet[k].r0) / det;
        const double r = std::hypot(xi, eta), th = std::atan2(eta, xi);
        if (th < theta_lo || th > theta_hi) continue;
        if (dir * (th - feet[k].theta0) < 0.0 || dir * (th - feet[k + 1].theta0) < 0.0) continue;
        res.samples.push_back({th, r});
    }
    if (!res.samples.empty()) {
        res.found = true;
        res.xi4 = *std::min_element(res.samples.begin(), res.samples.end(),
                                    [](const auto& x, const auto& y) { return x.theta < y.theta; });
    }
    return res;
}

}  // namespace nlw
