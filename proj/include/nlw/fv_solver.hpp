#pragma once

// Wave-propagation finite-volume solver for the nonlinear wave system on a
// mapped grid with capacities. Unsplit fluctuation form: first-order Roe
// fluctuations, optional limited second-order corrections, optional
// transverse propagation of the first-order fluctuations.
//
// Updates are accumulated per cell in flux units (length-weighted) so that
// q_new = q - dt/A * acc. Every correction is written as a face flux that
// one side gains and the other loses, so interior contributions telescope
// and only boundary faces change the conserved totals; those are summed
// into StepLog::boundary_outflow.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "nlw/errors.hpp"
#include "nlw/gas_model.hpp"
#include "nlw/polar_grid.hpp"
#include "nlw/roe.hpp"

namespace nlw {

enum class Limiter { none, minmod, mc };
enum class BcKind { far_field, extrapolate };
enum class Problem { four_quadrant, planar_r14 };

inline const char* to_string(Limiter l) {
    switch (l) {
        case Limiter::none: return "none";
        case Limiter::minmod: return "minmod";
        case Limiter::mc: return "mc";
    }
    return "?";
}

inline Limiter limiter_from_string(const std::string& s) {
    if (s == "none") return Limiter::none;
    if (s == "minmod") return Limiter::minmod;
    if (s == "mc") return Limiter::mc;
    throw ConfigError("unknown limiter '" + s + "' (expected none, minmod or mc)");
}

struct EdgeBc {
    BcKind inner = BcKind::extrapolate;  // low i
    BcKind outer = BcKind::far_field;    // high i
    BcKind lower = BcKind::far_field;    // low j
    BcKind upper = BcKind::far_field;    // high j
};

struct SolverConfig {
    double cfl = 0.9;
    int order = 2;
    Limiter limiter = Limiter::mc;
    double t_final = 1.0;
    std::optional<bool> transverse;  // unset: on at order 2, off at order 1
    EdgeBc bc;
    Problem problem = Problem::four_quadrant;
    long max_steps = 10'000'000;

    bool use_transverse() const { return transverse.value_or(order == 2); }

    void validate() const {
        if (!(cfl > 0.0 && cfl < 1.0)) throw ConfigError("cfl must lie in (0, 1)");
        if (order != 1 && order != 2) throw ConfigError("order must be 1 or 2");
        if (!(t_final > 0.0)) throw ConfigError("t_final must be positive");
        if (max_steps < 1) throw ConfigError("max_steps must be positive");
    }
};

struct FVField {
    std::shared_ptr<const PolarGrid> grid;
    std::vector<State> q;  // padded, ghosts included
    double time = 0.0;

    const State& at(int i, int j) const { return q[grid->cell(i, j)]; }
    State& at(int i, int j) { return q[grid->cell(i, j)]; }
};

struct StepLog {
    long step = 0;
    double t = 0.0;   // time after the step
    double dt = 0.0;
    int retries = 0;
    double max_courant = 0.0;  // max over cells of dt c_max L_max / A
    State boundary_outflow;    // net outward boundary flux (per unit time)
};

struct SolveResult {
    FVField field;
    std::vector<StepLog> log;
    double wall_seconds = 0.0;
};

/// Exact state used for initial data (t <= 0) and far-field ghosts (t > 0).
inline State exact_state(const GasLaw& gl, const QuadrantData& qd, Problem problem, double x, double y,
                         double t) {
    if (problem == Problem::planar_r14) {
        if (t <= 0.0) return y >= 0.0 ? qd.u1 : qd.u4;
        return planar_rarefaction(gl, qd, PlanarWave::R14, y / t);
    }
    if (t <= 0.0) return quadrant_state(qd, x, y);
    return far_field_state(gl, qd, x / t, y / t);
}

inline FVField initial_field(const GasLaw& gl, const QuadrantData& qd, std::shared_ptr<const PolarGrid> grid,
                             Problem problem = Problem::four_quadrant) {
    FVField f;
    f.grid = std::move(grid);
    const PolarGrid& g = *f.grid;
    f.q.assign(g.padded_size(), qd.u4);
    for (std::size_t k = 0; k < f.q.size(); ++k) f.q[k] = exact_state(gl, qd, problem, g.xc[k], g.yc[k], 0.0);
    f.time = 0.0;
    return f;
}

/// Fill the two ghost layers on every edge for boundary time t.
inline void apply_bc(FVField& field, const GasLaw& gl, const QuadrantData& qd, const SolverConfig& cfg,
                     double t) {
    const PolarGrid& g = *field.grid;
    const int ng = PolarGrid::ng, NI = g.NI(), NJ = g.NJ();
    auto fill = [&](int I, int J, BcKind kind, int Isrc, int Jsrc) {
        const std::size_t k = g.idx(I, J);
        if (kind == BcKind::extrapolate)
            field.q[k] = field.q[g.idx(Isrc, Jsrc)];
        else
            field.q[k] = exact_state(gl, qd, cfg.problem, g.xc[k], g.yc[k], t);
    };
    for (int J = ng; J < NJ - ng; ++J) {
        for (int I = 0; I < ng; ++I) fill(I, J, cfg.bc.inner, ng, J);
        for (int I = NI - ng; I < NI; ++I) fill(I, J, cfg.bc.outer, NI - ng - 1, J);
    }
    // Angular edges span all I so corners follow the j-edge rule.
    for (int I = 0; I < NI; ++I) {
        const int Ic = std::clamp(I, ng, NI - ng - 1);
        for (int J = 0; J < ng; ++J) fill(I, J, cfg.bc.lower, Ic, ng);
        for (int J = NJ - ng; J < NJ; ++J) fill(I, J, cfg.bc.upper, Ic, NJ - ng - 1);
    }
}

/// Sum of A*q over interior cells.
inline State total_conserved(const FVField& f) {
    const PolarGrid& g = *f.grid;
    State s{0.0, 0.0, 0.0};
    for (int j = 0; j < g.ntheta; ++j)
        for (int i = 0; i < g.nr; ++i) {
            const std::size_t k = g.cell(i, j);
            s = s + g.area[k] * f.q[k];
        }
    return s;
}

namespace detail {

// Limited strength for a wave of strength `local` whose upwind neighbour has
// strength `up`. Written with selects so the face loops vectorize.
constexpr double limited(Limiter l, double local, double up) {
    if (l == Limiter::none) return local;
    const bool same = local * up > 0.0;
    const double al = std::abs(local), au = std::abs(up);
    const double sg = local > 0.0 ? 1.0 : -1.0;
    double mag;
    if (l == Limiter::minmod)
        mag = std::min(al, au);
    else
        mag = std::min(0.5 * (al + au), std::min(2.0 * al, 2.0 * au));
    return same ? sg * mag : 0.0;
}

struct Vec3s {
    std::vector<double> a, b, c;
    void resize(std::size_t n) {
        a.assign(n, 0.0);
        b.assign(n, 0.0);
        c.assign(n, 0.0);
    }
};

// Scratch arrays reused across steps (structure of arrays, padded indexing).
struct Workspace {
    std::vector<double> rho, m, n, p, c2;
    std::vector<double> ic, ia1, ia3;  // i-face Roe speed and strengths
    std::vector<double> jc, ja1, ja3;  // j-face
    Vec3s di, dj;                      // first-order increments per cell (transverse source)
    Vec3s hi, hj;                      // correction fluxes per face
    std::vector<State> next;
    bool h_written = false;  // hi/hj hold non-zero corrections

    void resize(std::size_t N) {
        if (rho.size() == N) return;
        for (auto* v : {&rho, &m, &n, &p, &c2, &ic, &ia1, &ia3, &jc, &ja1, &ja3}) v->assign(N, 0.0);
        di.resize(N);
        dj.resize(N);
        hi.resize(N);
        hj.resize(N);
    }
};

}  // namespace detail

/// Stable time step: cfl * min A / (c_max * max face length), with c_max the
/// largest cell sound speed among the cell and its four neighbours (an upper
/// bound on every Roe speed at its faces since p is convex in rho).
/// Without transverse terms the unsplit donor-cell update needs the sum of
/// the directional Courant numbers below one, so the half perimeter replaces
/// the longest face.
inline double stable_dt(const FVField& f, const GasLaw& gl, double cfl, detail::Workspace& ws,
                        bool transverse = true) {
    const PolarGrid& g = *f.grid;
    const int ng = PolarGrid::ng, NI = g.NI();
    const std::size_t N = g.padded_size();
    ws.resize(N);
    double* c2 = ws.c2.data();
    const State* q = f.q.data();
    double rmin = 1.0;
    if (gl.integer_gamma() == 3) {
#pragma omp simd reduction(min : rmin)
        for (std::size_t k = 0; k < N; ++k) {
            const double r = q[k].rho;
            rmin = std::min(rmin, r);
            c2[k] = 3.0 * r * r;
        }
    } else {
        for (std::size_t k = 0; k < N; ++k) {
            const double r = q[k].rho;
            rmin = std::min(rmin, r);
            c2[k] = r > 0.0 ? gl.gamma() * gl.pressure_unchecked(r) / r : 0.0;
        }
    }
    if (!(rmin > 0.0)) {
        for (std::size_t k = 0; k < N; ++k)
            if (!(q[k].rho > 0.0)) throw SolverError("non-positive density in stable_dt", static_cast<long>(k));
    }
    // Reduce c^2 (L/A)^2; one square root at the end.
    double inv2 = 0.0;
    const double *A = g.area.data(), *Lmax = g.max_face_len.data(), *fi = g.fi_len.data(), *fj = g.fj_len.data();
    for (int J = ng; J < g.NJ() - ng; ++J) {
        const std::size_t k0 = g.idx(ng, J), k1 = g.idx(NI - ng, J);
#pragma omp simd reduction(max : inv2)
        for (std::size_t k = k0; k < k1; ++k) {
            const double cm = std::max(std::max(std::max(c2[k], c2[k - 1]), std::max(c2[k + 1], c2[k - NI])),
                                       c2[k + NI]);
            const double L = transverse ? Lmax[k] : 0.5 * (fi[k] + fi[k + 1] + fj[k] + fj[k + NI]);
            const double w = L / A[k];
            inv2 = std::max(inv2, cm * w * w);
        }
    }
    return cfl / std::sqrt(inv2);
}

inline double stable_dt(const FVField& f, const GasLaw& gl, double cfl, bool transverse = true) {
    detail::Workspace ws;
    return stable_dt(f, gl, cfl, ws, transverse);
}

namespace detail {

// Hot kernels. Free functions over restrict-qualified arrays so that the
// compiler can vectorize them; all indices are padded linear indices.

// Roe speed and acoustic strengths on faces k in [k0, k1) between k - off
// and k. The degenerate branch uses the mean of the cell c^2, equal to c^2
// at the mean density to O(drho^2), i.e. below round-off at the switch.
inline void face_waves(std::size_t k0, std::size_t k1, std::size_t off, const double* __restrict rho,
                       const double* __restrict mx, const double* __restrict my, const double* __restrict p,
                       const double* __restrict c2, const double* __restrict fnx, const double* __restrict fny,
                       double* __restrict cc, double* __restrict a1, double* __restrict a3) {
    for (std::size_t k = k0; k < k1; ++k) {
        const std::size_t kl = k - off;
        const double drho = rho[k] - rho[kl];
        // Select-only formulation (no branches) so the loop vectorizes.
        const double jump = static_cast<double>(std::abs(drho) > kRoeDegenerateJump);
        const double sec = (p[k] - p[kl]) / (drho + (1.0 - jump));
        const double c = std::sqrt(jump * sec + (1.0 - jump) * 0.5 * (c2[k] + c2[kl]));
        const double dmn = (mx[k] - mx[kl]) * fnx[k] + (my[k] - my[kl]) * fny[k];
        cc[k] = c;
        a1[k] = 0.5 * (drho - dmn / c);
        a3[k] = 0.5 * (drho + dmn / c);
    }
}

// Face geometry and Roe data for one direction.
struct FaceSet {
    const double* __restrict nx;
    const double* __restrict ny;
    const double* __restrict len;
    const double* __restrict c;
    const double* __restrict a1;
    const double* __restrict a3;
};

// First-order increment per area of cells k in [k0, k1) from the two faces
// k and k + off of one direction: apdq at k (c a3 L (1, c n)) plus amdq at
// k + off (-c a1 L (1, -c n)). Source of the transverse terms.
inline void cell_increments(std::size_t k0, std::size_t k1, std::size_t off, const FaceSet& f,
                            const double* __restrict area, double* __restrict da, double* __restrict db,
                            double* __restrict dc) {
    for (std::size_t k = k0; k < k1; ++k) {
        const std::size_t ku = k + off;
        const double wp = f.c[k] * f.a3[k] * f.len[k], wm = -f.c[ku] * f.a1[ku] * f.len[ku];
        const double ia = 1.0 / area[k];
        da[k] = (wp + wm) * ia;
        db[k] = (wp * f.c[k] * f.nx[k] - wm * f.c[ku] * f.nx[ku]) * ia;
        dc[k] = (wp * f.c[k] * f.ny[k] - wm * f.c[ku] * f.ny[ku]) * ia;
    }
}

// Correction flux through faces k in [k0, k1) between k - off (low) and k
// (high): limited second-order term plus transverse propagation of the
// other direction's increments (B+ of the low cell's, B- of the high cell's).
template <Limiter Lim, bool Second, bool Transverse>
void correction_fluxes(std::size_t k0, std::size_t k1, std::size_t off, double dt, const FaceSet& f,
                       const double* __restrict area, const double* __restrict da, const double* __restrict db,
                       const double* __restrict dc, double* __restrict ha, double* __restrict hb,
                       double* __restrict hc) {
    for (std::size_t k = k0; k < k1; ++k) {
        const std::size_t kl = k - off;
        const double c = f.c[k], L = f.len[k], nx = f.nx[k], ny = f.ny[k];
        double fa = 0.0, fb = 0.0, fc = 0.0;
        if constexpr (Second) {
            const double nu = dt * c * L / (0.5 * (area[k] + area[kl]));
            const double t1 = limited(Lim, f.a1[k], f.a1[k + off]);
            const double t3 = limited(Lim, f.a3[k], f.a3[kl]);
            const double w = 0.5 * c * (1.0 - nu) * L;
            fa = w * (t1 + t3);
            const double wn = w * c * (t3 - t1);
            fb = wn * nx;
            fc = wn * ny;
        }
        if constexpr (Transverse) {
            const double ci = 1.0 / c;
            const double b3 = 0.5 * (da[kl] + (db[kl] * nx + dc[kl] * ny) * ci);
            const double b1 = 0.5 * (da[k] - (db[k] * nx + dc[k] * ny) * ci);
            const double sc = -0.5 * dt * L * c;
            fa += sc * (b3 - b1);
            const double sn = sc * c * (b3 + b1);
            fb += sn * nx;
            fc += sn * ny;
        }
        ha[k] = fa;
        hb[k] = fb;
        hc[k] = fc;
    }
}

// Conservative update of cells k in [k0, k1). Returns the number of cells
// whose density is not positive.
inline long update_cells(std::size_t k0, std::size_t k1, std::size_t S, double dt, const FaceSet& fi,
                         const FaceSet& fj, const double* __restrict area, const double* __restrict rho,
                         const double* __restrict mx, const double* __restrict my, const double* __restrict hia,
                         const double* __restrict hib, const double* __restrict hic, const double* __restrict hja,
                         const double* __restrict hjb, const double* __restrict hjc, State* __restrict out) {
    long nbad = 0;
    for (std::size_t k = k0; k < k1; ++k) {
        const std::size_t kr = k + 1, ku = k + S;
        const double wp = fi.c[k] * fi.a3[k] * fi.len[k], wm = -fi.c[kr] * fi.a1[kr] * fi.len[kr];
        const double vp = fj.c[k] * fj.a3[k] * fj.len[k], vm = -fj.c[ku] * fj.a1[ku] * fj.len[ku];
        double aa = wp + wm + vp + vm;
        double ab = wp * fi.c[k] * fi.nx[k] - wm * fi.c[kr] * fi.nx[kr] + vp * fj.c[k] * fj.nx[k] -
                    vm * fj.c[ku] * fj.nx[ku];
        double ac = wp * fi.c[k] * fi.ny[k] - wm * fi.c[kr] * fi.ny[kr] + vp * fj.c[k] * fj.ny[k] -
                    vm * fj.c[ku] * fj.ny[ku];
        aa += hia[kr] - hia[k] + hja[ku] - hja[k];
        ab += hib[kr] - hib[k] + hjb[ku] - hjb[k];
        ac += hic[kr] - hic[k] + hjc[ku] - hjc[k];
        const double s = dt / area[k];
        const double r = rho[k] - s * aa;
        out[k].rho = r;
        out[k].m = mx[k] - s * ab;
        out[k].n = my[k] - s * ac;
        nbad += !(r > 0.0);
    }
    return nbad;
}

}  // namespace detail

/// One time step of size dt from field (ghosts filled by the caller). The
/// interior result goes to ws.next; its ghosts are stale. Returns false if an
/// interior density turned non-positive; bad_cell then holds its padded index.
///
/// Rows are processed in strips with a small halo so every intermediate
/// array stays cache-resident; halo rows are recomputed, never shared.
inline bool advance(const FVField& field, const GasLaw& gl, const SolverConfig& cfg, double dt, StepLog& log,
                    detail::Workspace& ws, long& bad_cell) {
    const PolarGrid& g = *field.grid;
    const int NI = g.NI(), NJ = g.NJ();
    const int lo = PolarGrid::ng;
    const std::size_t N = g.padded_size();
    const std::size_t S = static_cast<std::size_t>(NI);  // j stride
    ws.resize(N);
    ws.next.resize(N);
    const double gam = gl.gamma();
    double* rho = ws.rho.data();
    double* mx = ws.m.data();
    double* my = ws.n.data();
    double* p = ws.p.data();
    double* c2 = ws.c2.data();
    const double* A = g.area.data();
    const State* q = field.q.data();
    const detail::FaceSet fi{g.fi_nx.data(), g.fi_ny.data(), g.fi_len.data(),
                             ws.ic.data(),   ws.ia1.data(),  ws.ia3.data()};
    const detail::FaceSet fj{g.fj_nx.data(), g.fj_ny.data(), g.fj_len.data(),
                             ws.jc.data(),   ws.ja1.data(),  ws.ja3.data()};

    const bool second = cfg.order == 2;
    const bool transverse = cfg.use_transverse();
    const bool corrections = second || transverse;

    auto row = [&](int J) { return g.idx(0, J); };

    auto cells = [&](int J0, int J1) {
        const std::size_t k0 = row(J0), k1 = row(J1);
        for (std::size_t k = k0; k < k1; ++k) {
            rho[k] = q[k].rho;
            mx[k] = q[k].m;
            my[k] = q[k].n;
        }
        if (gl.integer_gamma() == 3) {
            for (std::size_t k = k0; k < k1; ++k) p[k] = rho[k] * rho[k] * rho[k];
        } else if (gl.integer_gamma() == 2) {
            for (std::size_t k = k0; k < k1; ++k) p[k] = rho[k] * rho[k];
        } else {
            for (std::size_t k = k0; k < k1; ++k) p[k] = gl.pressure_unchecked(rho[k]);
        }
        for (std::size_t k = k0; k < k1; ++k) c2[k] = gam * p[k] / rho[k];
    };

    // Runtime switches resolved once so the inner loops are branch-free.
    auto corr_rows = [&](int Ja, int Jb, auto kernel) {
        for (int J = Ja; J < Jb; ++J)
            kernel(row(J) + lo, row(J) + NI - lo + 1, 1, dt, fi, A, ws.dj.a.data(), ws.dj.b.data(),
                   ws.dj.c.data(), ws.hi.a.data(), ws.hi.b.data(), ws.hi.c.data());
        for (int J = Ja; J < Jb + 1; ++J)
            kernel(row(J) + lo, row(J) + NI - lo, S, dt, fj, A, ws.di.a.data(), ws.di.b.data(), ws.di.c.data(),
                   ws.hj.a.data(), ws.hj.b.data(), ws.hj.c.data());
    };
    auto corrections_for = [&](int Ja, int Jb) {
        auto pick = [&](auto second_tag, auto transverse_tag) {
            constexpr bool kS = decltype(second_tag)::value, kT = decltype(transverse_tag)::value;
            switch (cfg.limiter) {
                case Limiter::none: corr_rows(Ja, Jb, detail::correction_fluxes<Limiter::none, kS, kT>); break;
                case Limiter::minmod: corr_rows(Ja, Jb, detail::correction_fluxes<Limiter::minmod, kS, kT>); break;
                case Limiter::mc: corr_rows(Ja, Jb, detail::correction_fluxes<Limiter::mc, kS, kT>); break;
            }
        };
        if (second && transverse) pick(std::true_type{}, std::true_type{});
        else if (second) pick(std::true_type{}, std::false_type{});
        else pick(std::false_type{}, std::true_type{});
    };

    if (corrections) {
        ws.h_written = true;
    } else if (ws.h_written) {
        ws.hi.resize(N);
        ws.hj.resize(N);
        ws.h_written = false;
    }

    long nbad = 0;
    constexpr int kStrip = 16;
    for (int Ja = lo; Ja < NJ - lo; Ja += kStrip) {
        const int Jb = std::min(Ja + kStrip, NJ - lo);
        cells(Ja - 2, Jb + 2);
        detail::face_waves(row(Ja - 1) + 1, row(Jb + 1), 1, rho, mx, my, p, c2, g.fi_nx.data(), g.fi_ny.data(),
                           ws.ic.data(), ws.ia1.data(), ws.ia3.data());
        detail::face_waves(row(Ja - 1), row(Jb + 2), S, rho, mx, my, p, c2, g.fj_nx.data(), g.fj_ny.data(),
                           ws.jc.data(), ws.ja1.data(), ws.ja3.data());
        if (corrections) {
            if (transverse) {
                for (int J = Ja - 1; J < Jb + 1; ++J) {
                    detail::cell_increments(row(J) + 1, row(J) + NI - 1, 1, fi, A, ws.di.a.data(), ws.di.b.data(),
                                            ws.di.c.data());
                    detail::cell_increments(row(J) + 1, row(J) + NI - 1, S, fj, A, ws.dj.a.data(), ws.dj.b.data(),
                                            ws.dj.c.data());
                }
            }
            corrections_for(Ja, Jb);
        }
        for (int J = Ja; J < Jb; ++J)
            nbad += detail::update_cells(row(J) + lo, row(J) + NI - lo, S, dt, fi, fj, A, rho, mx, my,
                                         ws.hi.a.data(), ws.hi.b.data(), ws.hi.c.data(), ws.hj.a.data(),
                                         ws.hj.b.data(), ws.hj.c.data(), ws.next.data());
    }
    const double *ic = fi.c, *ia1 = fi.a1, *ia3 = fi.a3, *inx = fi.nx, *iny = fi.ny, *iL = fi.len;
    const double *jc = fj.c, *ja1 = fj.a1, *ja3 = fj.a3, *jnx = fj.nx, *jny = fj.ny, *jL = fj.len;

    // Net outward flux through the boundary faces, from the interior side:
    // L F(q_in).n_out plus what the interior cell received at that face.
    State out{0.0, 0.0, 0.0};
    auto add_out = [&](std::size_t kin, double nx, double ny, double L, double fa, double fb, double fc) {
        out.rho += L * (mx[kin] * nx + my[kin] * ny) + fa;
        out.m += L * p[kin] * nx + fb;
        out.n += L * p[kin] * ny + fc;
    };
    auto hv = [&](const detail::Vec3s& h, std::size_t k, int comp) {
        if (!corrections) return 0.0;
        return comp == 0 ? h.a[k] : comp == 1 ? h.b[k] : h.c[k];
    };
    for (int J = lo; J < NJ - lo; ++J) {
        // Low i edge: the interior cell on the high side receives apdq - H.
        std::size_t k = g.idx(lo, J);
        double w = ic[k] * ia3[k] * iL[k];
        add_out(k, -inx[k], -iny[k], iL[k], w - hv(ws.hi, k, 0), w * ic[k] * inx[k] - hv(ws.hi, k, 1),
                w * ic[k] * iny[k] - hv(ws.hi, k, 2));
        // High i edge: the interior cell on the low side receives amdq + H.
        k = g.idx(NI - lo, J);
        w = -ic[k] * ia1[k] * iL[k];
        add_out(k - 1, inx[k], iny[k], iL[k], w + hv(ws.hi, k, 0), -w * ic[k] * inx[k] + hv(ws.hi, k, 1),
                -w * ic[k] * iny[k] + hv(ws.hi, k, 2));
    }
    for (int I = lo; I < NI - lo; ++I) {
        std::size_t k = g.idx(I, lo);
        double w = jc[k] * ja3[k] * jL[k];
        add_out(k, -jnx[k], -jny[k], jL[k], w - hv(ws.hj, k, 0), w * jc[k] * jnx[k] - hv(ws.hj, k, 1),
                w * jc[k] * jny[k] - hv(ws.hj, k, 2));
        k = g.idx(I, NJ - lo);
        w = -jc[k] * ja1[k] * jL[k];
        add_out(k - S, jnx[k], jny[k], jL[k], w + hv(ws.hj, k, 0), -w * jc[k] * jnx[k] + hv(ws.hj, k, 1),
                -w * jc[k] * jny[k] + hv(ws.hj, k, 2));
    }

    bad_cell = -1;
    if (nbad > 0) {
        for (int J = lo; J < NJ - lo && bad_cell < 0; ++J)
            for (int I = lo; I < NI - lo; ++I)
                if (!(ws.next[g.idx(I, J)].rho > 0.0)) {
                    bad_cell = static_cast<long>(g.idx(I, J));
                    break;
                }
    }
    log.dt = dt;
    log.t = field.time + dt;
    log.boundary_outflow = out;
    return nbad == 0;
}

inline constexpr int kMaxPositivityRetries = 10;

/// Advance field in place by one step of at most dt_max (time step chosen
/// from the CFL condition). Ghosts are filled at the midpoint time.
inline StepLog step(FVField& field, const GasLaw& gl, const QuadrantData& qd, const SolverConfig& cfg,
                    double dt_max, detail::Workspace& ws) {
    const double dt_cfl = stable_dt(field, gl, cfg.cfl, ws, cfg.use_transverse());
    double dt = std::min(dt_cfl, dt_max);
    StepLog log;
    for (int attempt = 0; attempt <= kMaxPositivityRetries; ++attempt) {
        apply_bc(field, gl, qd, cfg, field.time + 0.5 * dt);
        long bad = -1;
        if (advance(field, gl, cfg, dt, log, ws, bad)) {
            log.retries = attempt;
            log.max_courant = cfg.cfl * dt / dt_cfl;
            // Ghosts of the swapped-in buffer are stale; refresh them so the
            // field is complete between steps.
            field.q.swap(ws.next);
            field.time += dt;
            apply_bc(field, gl, qd, cfg, field.time);
            return log;
        }
        if (attempt == kMaxPositivityRetries)
            throw SolverError("positivity lost after " + std::to_string(kMaxPositivityRetries) +
                                  " step halvings at t=" + std::to_string(field.time),
                              bad);
        dt *= 0.5;
    }
    return log;
}

inline StepLog step(FVField& field, const GasLaw& gl, const QuadrantData& qd, const SolverConfig& cfg) {
    detail::Workspace ws;
    return step(field, gl, qd, cfg, cfg.t_final - field.time, ws);
}

using ProgressFn = std::function<void(const StepLog&)>;

inline SolveResult solve(const GasLaw& gl, const QuadrantData& qd, std::shared_ptr<const PolarGrid> grid,
                         const SolverConfig& cfg, const ProgressFn& progress = {}) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    SolveResult res;
    res.field = initial_field(gl, qd, std::move(grid), cfg.problem);
    detail::Workspace ws;
    const double eps = 1e-14 * cfg.t_final;
    long n = 0;
    while (res.field.time < cfg.t_final - eps) {
        if (n >= cfg.max_steps) throw SolverError("max_steps reached before t_final");
        StepLog lg = step(res.field, gl, qd, cfg, cfg.t_final - res.field.time, ws);
        lg.step = ++n;
        if (progress) progress(lg);
        res.log.push_back(lg);
    }
    res.field.time = cfg.t_final;
    apply_bc(res.field, gl, qd, cfg, res.field.time);
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace nlw
