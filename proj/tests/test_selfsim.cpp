#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "nlw/characteristics.hpp"
#include "nlw/selfsim.hpp"

using namespace nlw;

namespace {

CrossSection synthetic(double theta, bool shock) {
    CrossSection cs;
    cs.theta = theta;
    for (int i = 0; i < 100; ++i) {
        const double r = 0.01 * (i + 0.5);
        CrossPoint p;
        p.r = r;
        p.rho = shock ? (r < 0.5 ? 0.4 : 0.3) : 0.4 - 0.1 * r;
        p.p = p.rho * p.rho * p.rho;
        p.u = r * r - 0.36;  // sonic at r = 0.6
        cs.points.push_back(p);
    }
    return cs;
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

TEST(Classify, ShockAndSmoothSonic) {
    const auto a = classify_angle(synthetic(0.1, true));
    EXPECT_EQ(a.cls, AngleClass::shock);
    EXPECT_NEAR(a.transition_r, 0.5, 0.02);
    const auto b = classify_angle(synthetic(0.1, false));
    EXPECT_EQ(b.cls, AngleClass::smooth_sonic);
    EXPECT_NEAR(b.transition_r, 0.6, 1e-3);
    CrossSection tiny;
    EXPECT_EQ(classify_angle(tiny).cls, AngleClass::unclassified);
}

TEST(Classify, ThresholdIsStrict) {
    CrossSection cs = synthetic(0.1, false);
    for (auto& p : cs.points) p.rho = 0.5;
    cs.points[50].rho = 0.515625;  // range exactly at the threshold: not above it
    EXPECT_NE(classify_angle(cs, 0.015625, 3).cls, AngleClass::shock);
    cs.points[50].rho = 0.5157;
    EXPECT_EQ(classify_angle(cs, 0.015625, 3).cls, AngleClass::shock);
}

TEST(Theta3, BracketsFirstTransition) {
    std::vector<AngleReportRow> rows;
    for (int d = 0; d <= 90; ++d) {
        AngleReportRow r;
        r.theta = deg(d);
        r.c.cls = d < 30 ? AngleClass::smooth_sonic : d <= 55 ? AngleClass::shock : AngleClass::smooth_sonic;
        rows.push_back(r);
    }
    const Theta3Interval t = estimate_theta3(rows);
    EXPECT_NEAR(t.lo, deg(55), 1e-12);
    EXPECT_NEAR(t.hi, deg(56), 1e-12);
    for (auto& r : rows) r.c.cls = AngleClass::smooth_sonic;
    EXPECT_THROW(estimate_theta3(rows), AnalysisError);
    std::swap(rows[0], rows[1]);
    EXPECT_THROW(estimate_theta3(rows), DomainError);
}

TEST(SelfSim, ResidualOfExactRarefactionConverges) {
    GasLaw gl(3.0);
    const QuadrantData qd = four_quadrant_states(gl, 0.5, 0.25);
    auto pexact = [&](double r, double th) { return r0_exact(gl, qd, {r, th}).p; };
    double prev = 0.0;
    for (int n : {100, 200}) {
        auto g = std::make_shared<const PolarGrid>(
            build_grid(n, n, GridBounds{0.5, 0.8, deg(60), deg(80)}, Mapping::polar));
        const SelfSimField s = selfsim_from_pressure(g, 1.0, gl, pexact);
        const auto mask = box_mask(s, 0.55, 0.75, deg(62), deg(78));
        const ResidualNorms rn = pnd_residual(s, mask);
        EXPECT_GT(rn.count, 0u);
        if (prev > 0.0) {
            EXPECT_GT(prev / rn.linf, 3.0);  // second order
        }
        prev = rn.linf;
    }
    EXPECT_LT(prev, 1e-5);
}

TEST(SelfSim, CrossSectionPicksRowAndScalesByTime) {
    GasLaw gl(3.0);
    auto g = std::make_shared<const PolarGrid>(build_grid(10, 90, GridBounds{0.1, 2.1, 0.0, deg(90)}, Mapping::polar));
    auto pf = [](double r, double) { return 0.01 + 0.001 * r; };
    const SelfSimField s = selfsim_from_pressure(g, 2.0, gl, pf);
    const CrossSection cs = radial_cross_section(s, deg(45.5));
    EXPECT_EQ(cs.row, 45);
    ASSERT_EQ(cs.points.size(), 10u);
    EXPECT_NEAR(cs.points[0].r, 0.1, 1e-12);  // physical 0.2 at t = 2
    EXPECT_THROW(radial_cross_section(s, deg(120)), DomainError);
}
