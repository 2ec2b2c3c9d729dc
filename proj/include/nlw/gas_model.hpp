#pragma once

// Polytropic closure p = rho^gamma (k = 1), the conserved state (rho, m, n),
// four-quadrant Riemann data and the exact planar rarefaction fans.

#include <cmath>
#include <numbers>
#include <string>

#include "nlw/errors.hpp"

namespace nlw {

struct State {
    double rho = 1.0;
    double m = 0.0;  // x-momentum
    double n = 0.0;  // y-momentum

    friend bool operator==(const State&, const State&) = default;
};

inline State operator+(State a, const State& b) { return {a.rho + b.rho, a.m + b.m, a.n + b.n}; }
inline State operator-(State a, const State& b) { return {a.rho - b.rho, a.m - b.m, a.n - b.n}; }
inline State operator*(double s, const State& a) { return {s * a.rho, s * a.m, s * a.n}; }

class GasLaw {
public:
    explicit GasLaw(double gamma = 3.0) : gamma_(gamma), kappa_((gamma - 1.0) / gamma) {
        if (!(gamma > 1.0) || !std::isfinite(gamma))
            throw ConfigError("gamma must satisfy 1 < gamma < inf, got " + std::to_string(gamma));
        const double rounded = std::round(gamma);
        int_gamma_ = (rounded == gamma && rounded <= 8.0) ? static_cast<int>(rounded) : 0;
    }

    double gamma() const noexcept { return gamma_; }
    double kappa() const noexcept { return kappa_; }
    /// gamma when it is a small integer, else 0.
    int integer_gamma() const noexcept { return int_gamma_; }

    /// p(rho) = rho^gamma.
    double pressure(double rho) const {
        if (!(rho > 0.0)) throw DomainError("pressure: non-positive density");
        return pressure_unchecked(rho);
    }

    /// Hot-loop variant; caller guarantees rho > 0.
    double pressure_unchecked(double rho) const noexcept {
        if (int_gamma_ != 0) {
            double p = rho;
            for (int k = 1; k < int_gamma_; ++k) p *= rho;
            return p;
        }
        return std::pow(rho, gamma_);
    }

    /// c^2(rho) = gamma rho^(gamma-1).
    double sound_speed_sq(double rho) const {
        if (!(rho > 0.0)) throw DomainError("sound_speed_sq: non-positive density");
        return gamma_ * std::pow(rho, gamma_ - 1.0);
    }

    double sound_speed(double rho) const { return std::sqrt(sound_speed_sq(rho)); }

    /// c^2 written through the pressure: gamma p^kappa.
    double sound_speed_sq_p(double p) const {
        if (!(p > 0.0)) throw DomainError("sound_speed_sq_p: non-positive pressure");
        return gamma_ * std::pow(p, kappa_);
    }

    /// d(c^2)/dp = (gamma - 1) p^(kappa - 1).
    double dc2_dp(double p) const {
        if (!(p > 0.0)) throw DomainError("dc2_dp: non-positive pressure");
        return (gamma_ - 1.0) * std::pow(p, kappa_ - 1.0);
    }

    double density_from_pressure(double p) const {
        if (!(p > 0.0)) throw DomainError("density_from_pressure: non-positive pressure");
        return std::pow(p, 1.0 / gamma_);
    }

    /// Inverse of c^2(p): the pressure whose sound speed squared is c2.
    double pressure_from_c2(double c2) const {
        if (!(c2 > 0.0)) throw DomainError("pressure_from_c2: non-positive c^2");
        return std::pow(c2 / gamma_, 1.0 / kappa_);
    }

    /// Density whose sound speed is c.
    double density_from_sound_speed(double c) const {
        if (!(c > 0.0)) throw DomainError("density_from_sound_speed: non-positive speed");
        return std::pow(c * c / gamma_, 1.0 / (gamma_ - 1.0));
    }

    /// Phi_ij = int_{rho_j}^{rho_i} c(s) ds.
    double phi(double rho_i, double rho_j) const {
        if (!(rho_i > 0.0) || !(rho_j > 0.0)) throw DomainError("phi: non-positive density");
        const double e = 0.5 * (gamma_ + 1.0);
        return std::sqrt(gamma_) * (std::pow(rho_i, e) - std::pow(rho_j, e)) / e;
    }

private:
    double gamma_;
    double kappa_;
    int int_gamma_ = 0;
};

struct PolarPoint {
    double r = 0.0;
    double theta = 0.0;  // radians
};

enum class WaveSpeedClass { strict, boundary, violated };

inline const char* to_string(WaveSpeedClass c) {
    switch (c) {
        case WaveSpeedClass::strict: return "2c4 > c1 (strict)";
        case WaveSpeedClass::boundary: return "2c4 = c1 (boundary case)";
        case WaveSpeedClass::violated: return "2c4 < c1";
    }
    return "?";
}

struct QuadrantData {
    State u1, u2, u3, u4;
    double rho1 = 0.0, rho4 = 0.0;
    double c1 = 0.0, c4 = 0.0;
    double p1 = 0.0, p4 = 0.0;
    double phi14 = 0.0;
    PolarPoint xi1;  // (c1, pi/2)
    PolarPoint xi2;  // (sqrt(c1 c4), asin sqrt(c4/c1))
    WaveSpeedClass speed_class = WaveSpeedClass::strict;
};

/// Relative tolerance used to call 2 c4 = c1.
inline constexpr double kSpeedClassTol = 1e-12;

inline QuadrantData four_quadrant_states(const GasLaw& gl, double rho1, double rho4) {
    if (!(rho4 > 0.0)) throw ConfigError("rho4 must be positive");
    if (!(rho1 > rho4)) throw ConfigError("four-quadrant data need rho1 > rho4");
    QuadrantData qd;
    qd.rho1 = rho1;
    qd.rho4 = rho4;
    qd.phi14 = gl.phi(rho1, rho4);
    qd.u1 = {rho1, 0.0, qd.phi14};
    qd.u2 = {rho1, 0.0, 0.0};
    qd.u3 = {rho1, -qd.phi14, 0.0};
    qd.u4 = {rho4, 0.0, 0.0};
    qd.c1 = gl.sound_speed(rho1);
    qd.c4 = gl.sound_speed(rho4);
    qd.p1 = gl.pressure(rho1);
    qd.p4 = gl.pressure(rho4);
    qd.xi1 = {qd.c1, 0.5 * std::numbers::pi};
    qd.xi2 = {std::sqrt(qd.c1 * qd.c4), std::asin(std::sqrt(qd.c4 / qd.c1))};
    const double gap = 2.0 * qd.c4 - qd.c1;
    if (std::abs(gap) <= kSpeedClassTol * qd.c1)
        qd.speed_class = WaveSpeedClass::boundary;
    else
        qd.speed_class = gap > 0.0 ? WaveSpeedClass::strict : WaveSpeedClass::violated;
    return qd;
}

enum class PlanarWave { R14, R34 };

/// Exact one-dimensional fan. For R14, s = y/t; for R34, s = -x/t (mirror of
/// R14 under the reflection (x, y) -> (-y, -x), (m, n) -> (-n, -m)).
inline State planar_rarefaction(const GasLaw& gl, const QuadrantData& qd, PlanarWave which,
                                double s) {
    State fan;
    if (s >= qd.c1) {
        fan = qd.u1;
    } else if (s <= qd.c4) {
        fan = qd.u4;
    } else {
        const double rho = gl.density_from_sound_speed(s);
        fan = {rho, 0.0, gl.phi(rho, qd.rho4)};
    }
    if (which == PlanarWave::R14) return fan;
    return {fan.rho, -fan.n, -fan.m};
}

/// Self-similar far-field composition of the two planar fans and the two
/// (inert) contacts, evaluated at (xi, eta) = (x/t, y/t). Exact outside the
/// sonic circle r = c1.
inline State far_field_state(const GasLaw& gl, const QuadrantData& qd, double xi, double eta) {
    if (xi >= 0.0 && eta >= 0.0) return planar_rarefaction(gl, qd, PlanarWave::R14, eta);
    if (xi < 0.0 && eta >= 0.0) return qd.u2;
    if (xi < 0.0 && eta < 0.0) return planar_rarefaction(gl, qd, PlanarWave::R34, -xi);
    return qd.u4;
}

/// Initial (t = 0) quadrant constants at a physical point.
inline State quadrant_state(const QuadrantData& qd, double x, double y) {
    if (x >= 0.0 && y >= 0.0) return qd.u1;
    if (x < 0.0 && y >= 0.0) return qd.u2;
    if (x < 0.0 && y < 0.0) return qd.u3;
    return qd.u4;
}

}  // namespace nlw
