#pragma once

// Roe linearization of the nonlinear wave system across a face with unit
// normal (nx, ny). In the face frame the flux is (m_n, p(rho), 0); the Roe
// speed is the secant slope c^2 = dp/drho, falling back to c^2 at the mean
// density when the densities (nearly) coincide.

#include <array>
#include <cassert>
#include <cmath>

#include "nlw/gas_model.hpp"

namespace nlw {

inline constexpr double kRoeDegenerateJump = 1e-12;

struct RoeFan {
    double c_hat = 0.0;
    std::array<double, 3> speeds{};   // (-c, 0, +c)
    std::array<double, 3> strengths{};  // alpha_1, alpha_2 (tangential), alpha_3
    std::array<State, 3> waves{};       // Cartesian components
    State amdq;                         // left-going fluctuation A^- dQ
    State apdq;                         // right-going fluctuation A^+ dQ
};

/// Roe speed from the two densities and their pressures. Hot-path helper.
inline double roe_speed(const GasLaw& gl, double rho_l, double rho_r, double p_l, double p_r) noexcept {
    const double drho = rho_r - rho_l;
    double c2;
    if (std::abs(drho) > kRoeDegenerateJump) {
        c2 = (p_r - p_l) / drho;
    } else {
        const double rm = 0.5 * (rho_l + rho_r);
        c2 = gl.gamma() * std::pow(rm, gl.gamma() - 1.0);
    }
    assert(c2 > 0.0);
    return std::sqrt(c2);
}

/// Physical normal flux F(q).n in Cartesian components.
inline State normal_flux(const GasLaw& gl, const State& q, double nx, double ny) {
    const double p = gl.pressure(q.rho);
    return {q.m * nx + q.n * ny, p * nx, p * ny};
}

inline RoeFan roe_interface(const GasLaw& gl, const State& ul, const State& ur, double nx, double ny) {
    if (!(ul.rho > 0.0) || !(ur.rho > 0.0))
        throw DomainError("roe_interface: non-positive density");
    const double pl = gl.pressure(ul.rho), pr = gl.pressure(ur.rho);
    const double c = roe_speed(gl, ul.rho, ur.rho, pl, pr);

    const double tx = -ny, ty = nx;
    const double drho = ur.rho - ul.rho;
    const double dmn = (ur.m - ul.m) * nx + (ur.n - ul.n) * ny;
    const double dmt = (ur.m - ul.m) * tx + (ur.n - ul.n) * ty;

    RoeFan fan;
    fan.c_hat = c;
    fan.speeds = {-c, 0.0, c};
    const double a1 = 0.5 * (drho - dmn / c);
    const double a3 = 0.5 * (drho + dmn / c);
    fan.strengths = {a1, dmt, a3};
    // Eigenvectors in the face frame: (1, -c, 0), (0, 0, 1), (1, c, 0).
    fan.waves[0] = {a1, -c * a1 * nx, -c * a1 * ny};
    fan.waves[1] = {0.0, dmt * tx, dmt * ty};
    fan.waves[2] = {a3, c * a3 * nx, c * a3 * ny};
    fan.amdq = -c * fan.waves[0];
    fan.apdq = c * fan.waves[2];
    return fan;
}

}  // namespace nlw
