#pragma once

// Logically rectangular mapped finite-volume grid. The computational
// coordinates (a, b) are uniform; the polar mapping sends them to
// (a cos b, a sin b). Cells are the straight-edged quadrilaterals spanned by
// the mapped corners, so every cell is a closed polygon and the capacity is
// its exact area over da*db. A Cartesian mapping is kept for planar tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "nlw/errors.hpp"

namespace nlw {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class Mapping { polar, cartesian };

struct GridBounds {
    double rmin = 1e-2;
    double rmax = 1.0;
    double thetamin = 0.0;
    double thetamax = 1.5 * std::numbers::pi;
};

class PolarGrid {
public:
    static constexpr int ng = 2;  // ghost layers per edge

    int nr = 0;
    int ntheta = 0;
    GridBounds bounds;
    Mapping mapping = Mapping::polar;
    double dr = 0.0;
    double dtheta = 0.0;

    int NI() const noexcept { return nr + 2 * ng; }
    int NJ() const noexcept { return ntheta + 2 * ng; }
    std::size_t padded_size() const noexcept { return std::size_t(NI()) * std::size_t(NJ()); }

    /// Padded index; interior cell (i, j) sits at (i + ng, j + ng).
    std::size_t idx(int I, int J) const noexcept { return std::size_t(J) * NI() + std::size_t(I); }
    std::size_t cell(int i, int j) const noexcept { return idx(i + ng, j + ng); }

    Vec2 map(double a, double b) const noexcept {
        if (mapping == Mapping::polar) return {a * std::cos(b), a * std::sin(b)};
        return {a, b};
    }

    /// Computational center of interior (or ghost, for out-of-range i) cell.
    double r_center(int i) const noexcept { return bounds.rmin + (i + 0.5) * dr; }
    double theta_center(int j) const noexcept { return bounds.thetamin + (j + 0.5) * dtheta; }

    // Per padded cell.
    std::vector<double> xc, yc, area, max_face_len;
    // i-faces: face (I, J) separates padded cells (I-1, J) and (I, J); normal
    // points toward (I, J). Valid for I in [1, NI).
    std::vector<double> fi_nx, fi_ny, fi_len;
    // j-faces: face (I, J) separates (I, J-1) and (I, J). Valid for J in [1, NJ).
    std::vector<double> fj_nx, fj_ny, fj_len;

    double capacity(int i, int j) const noexcept { return area[cell(i, j)] / (dr * dtheta); }

    /// Sum of interior cell areas.
    double total_area() const noexcept {
        double s = 0.0;
        for (int j = 0; j < ntheta; ++j)
            for (int i = 0; i < nr; ++i) s += area[cell(i, j)];
        return s;
    }
};

namespace detail {

inline double quad_area(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    // Shoelace over a -> b -> c -> d.
    const double s = a.x * b.y - b.x * a.y + b.x * c.y - c.x * b.y + c.x * d.y - d.x * c.y +
                     d.x * a.y - a.x * d.y;
    return 0.5 * std::abs(s);
}

}  // namespace detail

inline PolarGrid build_grid(int nr, int ntheta, const GridBounds& bounds,
                            Mapping mapping = Mapping::polar) {
    if (nr < 4 || ntheta < 4)
        throw ConfigError("build_grid: need nr, ntheta >= 4 (got " + std::to_string(nr) + ", " +
                          std::to_string(ntheta) + ")");
    if (!(bounds.rmax > bounds.rmin) || !(bounds.thetamax > bounds.thetamin))
        throw ConfigError("build_grid: degenerate bounds");
    if (mapping == Mapping::polar) {
        if (!(bounds.rmin > 0.0)) throw ConfigError("build_grid: polar grid needs rmin > 0");
        if (bounds.thetamax - bounds.thetamin > 2.0 * std::numbers::pi + 1e-12)
            throw ConfigError("build_grid: angular range exceeds 2 pi");
    }

    PolarGrid g;
    g.nr = nr;
    g.ntheta = ntheta;
    g.bounds = bounds;
    g.mapping = mapping;
    g.dr = (bounds.rmax - bounds.rmin) / nr;
    g.dtheta = (bounds.thetamax - bounds.thetamin) / ntheta;

    const int NI = g.NI(), NJ = g.NJ();
    const std::size_t n = g.padded_size();
    g.xc.assign(n, 0.0);
    g.yc.assign(n, 0.0);
    g.area.assign(n, 0.0);
    g.max_face_len.assign(n, 0.0);
    g.fi_nx.assign(n, 0.0);
    g.fi_ny.assign(n, 0.0);
    g.fi_len.assign(n, 0.0);
    g.fj_nx.assign(n, 0.0);
    g.fj_ny.assign(n, 0.0);
    g.fj_len.assign(n, 0.0);

    // Corner (I, J) of the padded lattice sits at computational
    // (rmin + (I - ng) dr, thetamin + (J - ng) dtheta). Ghost cells on the
    // inner polar edge may reach negative radius; their geometry is only
    // used for limiter ratios and stays well-defined as long as it is
    // non-degenerate, so the radius is clamped at a small positive value.
    auto corner = [&](int I, int J) {
        double a = bounds.rmin + (I - PolarGrid::ng) * g.dr;
        if (mapping == Mapping::polar && a <= 0.0) a = 0.25 * bounds.rmin;
        const double b = bounds.thetamin + (J - PolarGrid::ng) * g.dtheta;
        return g.map(a, b);
    };

    for (int J = 0; J < NJ; ++J) {
        for (int I = 0; I < NI; ++I) {
            const std::size_t k = g.idx(I, J);
            double a = bounds.rmin + (I - PolarGrid::ng + 0.5) * g.dr;
            if (mapping == Mapping::polar && a <= 0.0) a = 0.5 * bounds.rmin;
            const Vec2 c = g.map(a, bounds.thetamin + (J - PolarGrid::ng + 0.5) * g.dtheta);
            g.xc[k] = c.x;
            g.yc[k] = c.y;
            g.area[k] = detail::quad_area(corner(I, J), corner(I + 1, J), corner(I + 1, J + 1),
                                          corner(I, J + 1));
        }
    }
    // i-face (I, J): segment from corner (I, J) to (I, J+1); +i normal.
    for (int J = 0; J < NJ; ++J) {
        for (int I = 1; I < NI; ++I) {
            const Vec2 p0 = corner(I, J), p1 = corner(I, J + 1);
            const double dx = p1.x - p0.x, dy = p1.y - p0.y;
            const double len = std::hypot(dx, dy);
            const std::size_t k = g.idx(I, J);
            g.fi_len[k] = len;
            g.fi_nx[k] = dy / len;
            g.fi_ny[k] = -dx / len;
        }
    }
    // j-face (I, J): segment from corner (I, J) to (I+1, J); +j normal.
    for (int J = 1; J < NJ; ++J) {
        for (int I = 0; I < NI; ++I) {
            const Vec2 p0 = corner(I, J), p1 = corner(I + 1, J);
            const double dx = p1.x - p0.x, dy = p1.y - p0.y;
            const double len = std::hypot(dx, dy);
            const std::size_t k = g.idx(I, J);
            g.fj_len[k] = len;
            g.fj_nx[k] = -dy / len;
            g.fj_ny[k] = dx / len;
        }
    }
    for (int J = 1; J + 1 < NJ; ++J) {
        for (int I = 1; I + 1 < NI; ++I) {
            const std::size_t k = g.idx(I, J);
            g.max_face_len[k] =
                std::max({g.fi_len[k], g.fi_len[g.idx(I + 1, J)], g.fj_len[k], g.fj_len[g.idx(I, J + 1)]});
        }
    }
    return g;
}

/// Area of the mapped (polygonal) domain, computed from the chord polygon.
inline double polygonal_domain_area(const PolarGrid& g) {
    if (g.mapping == Mapping::cartesian)
        return (g.bounds.rmax - g.bounds.rmin) * (g.bounds.thetamax - g.bounds.thetamin);
    const double ring = 0.5 * (g.bounds.rmax * g.bounds.rmax - g.bounds.rmin * g.bounds.rmin);
    return ring * std::sin(g.dtheta) * g.ntheta;
}

}  // namespace nlw
