#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "nlw/fv_solver.hpp"

using namespace nlw;

namespace {

struct Case {
    GasLaw gl{3.0};
    QuadrantData qd = four_quadrant_states(gl, 0.5, 0.25);
};

std::shared_ptr<const PolarGrid> small_polar(int nr, int nt) {
    return std::make_shared<const PolarGrid>(
        build_grid(nr, nt, GridBounds{0.01, 1.0, 0.0, 1.5 * std::numbers::pi}, Mapping::polar));
}

}  // namespace

TEST(SolverConfig, Validation) {
    SolverConfig c;
    EXPECT_NO_THROW(c.validate());
    c.cfl = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.cfl = 0.5;
    c.order = 3;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(limiter_from_string("superbee"), ConfigError);
    EXPECT_EQ(limiter_from_string("minmod"), Limiter::minmod);
}

TEST(FvSolver, UniformStateIsPreserved) {
    Case s;
    auto g = small_polar(20, 30);
    SolverConfig cfg;
    cfg.bc = {BcKind::extrapolate, BcKind::extrapolate, BcKind::extrapolate, BcKind::extrapolate};
    FVField f = initial_field(s.gl, s.qd, g);
    for (auto& q : f.q) q = {0.3, 0.0, 0.0};
    detail::Workspace ws;
    for (int k = 0; k < 5; ++k) step(f, s.gl, s.qd, cfg, 1.0, ws);
    for (int j = 0; j < g->ntheta; ++j)
        for (int i = 0; i < g->nr; ++i) {
            EXPECT_NEAR(f.at(i, j).rho, 0.3, 1e-14);
            EXPECT_NEAR(f.at(i, j).m, 0.0, 1e-14);
            EXPECT_NEAR(f.at(i, j).n, 0.0, 1e-14);
        }
}

TEST(FvSolver, StepConservesUpToBoundaryFlux) {
    Case s;
    auto g = small_polar(30, 45);
    for (int order : {1, 2}) {
        SolverConfig cfg;
        cfg.order = order;
        FVField f = initial_field(s.gl, s.qd, g);
        apply_bc(f, s.gl, s.qd, cfg, 0.0);
        detail::Workspace ws;
        for (int k = 0; k < 20; ++k) {
            const State before = total_conserved(f);
            const StepLog lg = step(f, s.gl, s.qd, cfg, 1.0, ws);
            const State after = total_conserved(f);
            const double scale = std::abs(before.rho) + std::abs(before.m) + std::abs(before.n);
            EXPECT_LE(std::abs(after.rho - before.rho + lg.dt * lg.boundary_outflow.rho), 1e-12 * scale);
            EXPECT_LE(std::abs(after.m - before.m + lg.dt * lg.boundary_outflow.m), 1e-12 * scale);
            EXPECT_LE(std::abs(after.n - before.n + lg.dt * lg.boundary_outflow.n), 1e-12 * scale);
            EXPECT_LE(lg.max_courant, cfg.cfl + 1e-12);
        }
    }
}

TEST(FvSolver, DensityStaysWithinInitialRange) {
    Case s;
    auto g = small_polar(40, 60);
    SolverConfig cfg;
    cfg.t_final = 0.5;
    const SolveResult res = solve(s.gl, s.qd, g, cfg);
    EXPECT_NEAR(res.field.time, 0.5, 1e-15);
    for (int j = 0; j < g->ntheta; ++j)
        for (int i = 0; i < g->nr; ++i) {
            EXPECT_GT(res.field.at(i, j).rho, 0.2);
            EXPECT_LT(res.field.at(i, j).rho, 0.55);
        }
}

TEST(FvSolver, DeterministicAcrossRuns) {
    Case s;
    auto g = small_polar(24, 36);
    SolverConfig cfg;
    cfg.t_final = 0.3;
    const SolveResult a = solve(s.gl, s.qd, g, cfg), b = solve(s.gl, s.qd, g, cfg);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t k = 0; k < a.field.q.size(); ++k) {
        EXPECT_EQ(a.field.q[k].rho, b.field.q[k].rho);
        EXPECT_EQ(a.field.q[k].m, b.field.q[k].m);
    }
}

TEST(FvSolver, PlanarRarefactionConvergesAtOrderTwo) {
    Case s;
    auto err = [&](int n) {
        const double ylo = -0.5, yhi = 1.5, dy = (yhi - ylo) / n;
        auto g = std::make_shared<const PolarGrid>(
            build_grid(4, n, GridBounds{0.0, 4 * dy, ylo, yhi}, Mapping::cartesian));
        SolverConfig cfg;
        cfg.problem = Problem::planar_r14;
        cfg.bc = {BcKind::extrapolate, BcKind::extrapolate, BcKind::far_field, BcKind::far_field};
        const SolveResult res = solve(s.gl, s.qd, g, cfg);
        double e = 0.0;
        for (int j = 0; j < n; ++j) {
            const std::size_t k = g->cell(1, j);
            e += std::abs(res.field.q[k].rho - planar_rarefaction(s.gl, s.qd, PlanarWave::R14, g->yc[k]).rho) * dy;
        }
        return e;
    };
    const double e1 = err(100), e2 = err(200);
    EXPECT_LT(e2, e1);
    EXPECT_GT(e1 / e2, 1.5);
}

TEST(FvSolver, ExactStateComposition) {
    Case s;
    EXPECT_DOUBLE_EQ(exact_state(s.gl, s.qd, Problem::four_quadrant, 1.0, 1.0, 0.0).rho, 0.5);
    EXPECT_DOUBLE_EQ(exact_state(s.gl, s.qd, Problem::four_quadrant, 1.0, -1.0, 0.0).rho, 0.25);
    // Far field at t = 1 outside the sonic circle: the planar fan.
    const State q = exact_state(s.gl, s.qd, Problem::four_quadrant, 2.0, 0.6, 1.0);
    EXPECT_NEAR(q.rho, s.gl.density_from_sound_speed(0.6), 1e-14);
}
