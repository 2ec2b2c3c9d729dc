#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "nlw/characteristics.hpp"

using namespace nlw;

namespace {

struct Case {
    GasLaw gl{3.0};
    QuadrantData qd = four_quadrant_states(gl, 0.5, 0.25);
};

}  // namespace

TEST(Characteristics, LambdaAndSonicCircle) {
    Case s;
    EXPECT_NEAR(lambda_speed(s.gl, s.qd.c4, s.qd.p4), 0.0, 1e-12);
    EXPECT_THROW(lambda_speed(s.gl, 0.5 * s.qd.c4, s.qd.p4), DomainError);
    EXPECT_THROW(h_coef(s.gl, s.qd.c4, s.qd.p4), DomainError);
    EXPECT_GT(h_coef(s.gl, 1.0, s.qd.p4), 0.0);
}

TEST(Characteristics, Gamma24PhaseVanishesAtBoundaryClass) {
    Case s;
    EXPECT_NEAR(gamma24_phase(s.qd), 0.0, 1e-14);
    const QuadrantData q2 = four_quadrant_states(s.gl, 0.5, 0.3);
    EXPECT_NEAR(gamma24_phase(q2), 0.5 * std::numbers::pi - 2.0 * q2.xi2.theta, 1e-13);
    EXPECT_THROW(gamma12(s.qd, 0.1), DomainError);
}

TEST(Characteristics, TracesGamma12AndGamma24) {
    Case s;
    PressureFn pr0 = [&](double r, double th) { return r0_exact(s.gl, s.qd, {r, th}).p; };
    TraceOptions o;
    const double th0 = 0.5 * std::numbers::pi - 1e-3;
    o.theta_end = s.qd.xi2.theta;
    const CharCurve c12 = integrate_char(s.gl, pr0, {gamma12(s.qd, th0), th0}, Family::plus, o);
    ASSERT_GT(c12.samples.size(), 10u);
    for (const auto& p : c12.samples) EXPECT_NEAR(p.r, gamma12(s.qd, p.theta), 1e-8);

    PressureFn p4 = [&](double, double) { return s.qd.p4; };
    o.theta_end = 80.0 * std::numbers::pi / 180.0;
    const CharCurve c24 = integrate_char(s.gl, p4, s.qd.xi2, Family::plus, o);
    ASSERT_GT(c24.samples.size(), 10u);
    for (const auto& p : c24.samples) EXPECT_NEAR(p.r, gamma24(s.qd, p.theta), 1e-8);
}

TEST(Characteristics, SubsonicStartRejected) {
    Case s;
    PressureFn p4 = [&](double, double) { return s.qd.p4; };
    TraceOptions o;
    o.theta_end = 1.0;
    EXPECT_THROW(integrate_char(s.gl, p4, {0.3, 0.5}, Family::plus, o), DomainError);
}

TEST(SimpleWave, RecoverC2FromRandomFeet) {
    Case s;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int used = 0;
    for (int k = 0; k < 1000; ++k) {
        const double p0 = s.qd.p4 + (s.qd.p1 - s.qd.p4) * U(rng);
        const double c = std::sqrt(s.gl.sound_speed_sq_p(p0));
        const double r0 = c * (1.0 + 0.5 * U(rng)), t0 = 0.2 + 1.2 * U(rng);
        const SimpleWaveFoot f = make_foot(s.gl, t0, r0, p0);
        const double th = t0 - 0.3 * U(rng);
        double r;
        try {
            r = simple_wave_char(f, th);
        } catch (const DomainError&) {
            continue;
        }
        if (th == t0) continue;
        ++used;
        const double c2 = recover_c2(r0 * std::cos(t0), r0 * std::sin(t0), r * std::cos(th), r * std::sin(th));
        EXPECT_NEAR(c2, c * c, 1e-10);
    }
    EXPECT_GT(used, 900);
    EXPECT_THROW(recover_c2(1.0, 1.0, 1.0, 1.0), DomainError);
}

TEST(SimpleWave, SlopeIsLambda) {
    Case s;
    const SimpleWaveFoot f = make_foot(s.gl, s.qd.xi2.theta, 1.1 * s.qd.xi2.r, s.qd.p4);
    const double th = s.qd.xi2.theta - 0.2, r = simple_wave_char(f, th);
    const double lam = lambda_speed(s.gl, r, s.qd.p4);
    auto err = [&](double h) {
        return std::abs((simple_wave_char(f, th + h) - simple_wave_char(f, th - h)) / (2 * h) - lam);
    };
    EXPECT_GT(std::log2(err(1e-2) / err(5e-3)), 1.9);
}

TEST(Riccati, ClosedFormMatchesOdeAndBlowsUp) {
    Case s;
    const double p0 = 0.5 * (s.qd.p1 + s.qd.p4);
    const SimpleWaveFoot f = make_foot(s.gl, s.qd.xi2.theta, 1.2 * std::sqrt(s.gl.sound_speed_sq_p(p0)), p0);
    const double S0 = 0.05, th1 = f.theta0 - 0.2;
    // RK4 on dS/dtheta = -h S^2 from theta0 toward th1.
    const int n = 2000;
    const double dth = (th1 - f.theta0) / n;
    double S = S0, th = f.theta0;
    auto rhs = [&](double t, double y) { return -h_coef(s.gl, simple_wave_char(f, t), f.p0) * y * y; };
    for (int k = 0; k < n; ++k, th += dth) {
        const double k1 = rhs(th, S), k2 = rhs(th + dth / 2, S + dth / 2 * k1);
        const double k3 = rhs(th + dth / 2, S + dth / 2 * k2), k4 = rhs(th + dth, S + dth * k3);
        S += dth / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    const RiccatiResult rr = riccati_S(S0, h_integral_simple(s.gl, f, th1));
    ASSERT_FALSE(rr.blowup);
    EXPECT_NEAR(rr.S, S, 1e-6 * std::abs(S));
    EXPECT_TRUE(riccati_S(-1.0, 1.0).blowup);
    EXPECT_FALSE(riccati_S(0.0, 5.0).blowup);
}

TEST(Riccati, RsFromCurveSignCheck) {
    Case s;
    EXPECT_THROW(rs_from_curve(s.gl, 0.5, -0.1, 0.0, Family::plus), DomainError);
    EXPECT_THROW(rs_from_curve(s.gl, 0.5, 0.1, 0.0, Family::minus), DomainError);
    EXPECT_THROW(rs_from_curve(s.gl, 0.0, 0.1, 0.0, Family::plus), DomainError);
}

TEST(Envelope, NeedsThreeFeetAndFindsCrossing) {
    Case s;
    std::vector<SimpleWaveFoot> feet;
    feet.push_back(make_foot(s.gl, 0.9, 0.7, s.qd.p4));
    feet.push_back(make_foot(s.gl, 0.85, 0.69, s.qd.p4 * 1.2));
    EXPECT_THROW(envelope_point(feet, 0.0, 1.0), DomainError);
    // Three feet with increasing sound speed: converging characteristics.
    feet.clear();
    for (int k = 0; k < 3; ++k) feet.push_back(make_foot(s.gl, 0.8 - 0.02 * k, 0.7, s.qd.p4 * (1.0 + 0.6 * k)));
    const EnvelopeResult env = envelope_point(feet, 0.0, 0.8, -1.0);
    for (const auto& smp : env.samples) {
        EXPECT_LE(smp.theta, 0.8);
        EXPECT_GE(smp.theta, 0.0);
    }
}
