#pragma once

// CSV and NDJSON artifacts. Numbers are written with std::to_chars (shortest
// round-trip form), so output is exact and byte-reproducible. Angles are in
// degrees in every file; internal values are radians.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlw/characteristics.hpp"
#include "nlw/errors.hpp"
#include "nlw/fv_solver.hpp"
#include "nlw/goursat.hpp"
#include "nlw/selfsim.hpp"

namespace nlw {

/// Artifact missing or malformed (a prerequisite stage has not been run).
class ArtifactError : public std::runtime_error {
public:
    explicit ArtifactError(const std::string& what) : std::runtime_error(what) {}
};

inline double to_deg(double rad) { return rad * (180.0 / std::numbers::pi); }
inline double to_rad(double deg) { return deg * (std::numbers::pi / 180.0); }

inline std::string fmt_num(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

/// Row-at-a-time CSV writer. Fields are numbers or bare tokens (no quoting).
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& header) : path_(path), out_(path) {
        if (!out_) throw ArtifactError("cannot write " + path.string());
        out_ << header << '\n';
    }
    CsvWriter& num(double x) { return field(fmt_num(x)); }
    CsvWriter& integer(long long x) { return field(std::to_string(x)); }
    CsvWriter& token(const std::string& s) { return field(s); }
    void end_row() {
        out_ << '\n';
        first_ = true;
    }
    void close() {
        out_.close();
        if (!out_) throw ArtifactError("write failed for " + path_.string());
    }

private:
    CsvWriter& field(const std::string& s) {
        if (!first_) out_ << ',';
        out_ << s;
        first_ = false;
        return *this;
    }
    std::filesystem::path path_;
    std::ofstream out_;
    bool first_ = true;
};

/// Parsed CSV: header names and string cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return static_cast<int>(k);
        return -1;
    }
    double num(std::size_t row, int col) const {
        const std::string& s = rows[row][col];
        double x = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw ArtifactError("bad number '" + s + "' in CSV row " + std::to_string(row + 1));
        return x;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) {
        if (!cur.empty() && cur.back() == '\r') cur.pop_back();
        out.push_back(cur);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& required = {}) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("missing artifact " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ArtifactError("empty CSV " + path.string());
    t.header = split_csv_line(line);
    for (const auto& name : required)
        if (t.column(name) < 0) throw ArtifactError(path.string() + ": missing column '" + name + "'");
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.header.size())
            throw ArtifactError(path.string() + ": row " + std::to_string(t.rows.size() + 1) + " has " +
                                std::to_string(cells.size()) + " fields, expected " +
                                std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

// ---------------------------------------------------------------------------
// Field snapshot.

inline constexpr const char* kFieldHeader = "r,theta,x,y,rho,m,n,p,c2";

/// Interior cells, row-major by (theta, r).
inline void write_field_csv(const std::filesystem::path& path, const FVField& f, const GasLaw& gl) {
    const PolarGrid& g = *f.grid;
    CsvWriter w(path, kFieldHeader);
    for (int j = 0; j < g.ntheta; ++j)
        for (int i = 0; i < g.nr; ++i) {
            const std::size_t k = g.cell(i, j);
            const State& q = f.q[k];
            const double p = gl.pressure(q.rho);
            w.num(std::hypot(g.xc[k], g.yc[k])).num(to_deg(g.theta_center(j))).num(g.xc[k]).num(g.yc[k]);
            w.num(q.rho).num(q.m).num(q.n).num(p).num(gl.sound_speed_sq_p(p));
            w.end_row();
        }
    w.close();
}

/// Read a field snapshot onto `grid` (which must be the grid it was written
/// from); cell positions are checked against the grid.
inline FVField read_field_csv(const std::filesystem::path& path, std::shared_ptr<const PolarGrid> grid,
                              double time) {
    const CsvTable t = read_csv(path, {"r", "theta", "x", "y", "rho", "m", "n"});
    const PolarGrid& g = *grid;
    const std::size_t n = std::size_t(g.nr) * g.ntheta;
    if (t.rows.size() != n)
        throw ArtifactError(path.string() + ": " + std::to_string(t.rows.size()) + " rows, grid has " +
                            std::to_string(n) + " cells (config changed since solve?)");
    const int cx = t.column("x"), cy = t.column("y"), cr = t.column("rho"), cm = t.column("m"), cn = t.column("n");
    FVField f;
    f.grid = std::move(grid);
    f.time = time;
    f.q.assign(g.padded_size(), State{1.0, 0.0, 0.0});
    std::size_t row = 0;
    for (int j = 0; j < g.ntheta; ++j)
        for (int i = 0; i < g.nr; ++i, ++row) {
            const std::size_t k = g.cell(i, j);
            const double scale = std::max(1.0, std::hypot(g.xc[k], g.yc[k]));
            if (std::abs(t.num(row, cx) - g.xc[k]) > 1e-9 * scale || std::abs(t.num(row, cy) - g.yc[k]) > 1e-9 * scale)
                throw ArtifactError(path.string() + ": cell positions do not match the configured grid");
            f.q[k] = {t.num(row, cr), t.num(row, cm), t.num(row, cn)};
            if (!(f.q[k].rho > 0.0)) throw ArtifactError(path.string() + ": non-positive density");
        }
    return f;
}

// ---------------------------------------------------------------------------
// Post-processing artifacts.

inline void write_crosssections_csv(const std::filesystem::path& path, const std::vector<CrossSection>& sections) {
    CsvWriter w(path, "theta_deg,r,rho,p,u");
    for (const auto& cs : sections)
        for (const auto& pt : cs.points) {
            w.num(to_deg(cs.theta)).num(pt.r).num(pt.rho).num(pt.p).num(pt.u);
            w.end_row();
        }
    w.close();
}

inline void write_report_csv(const std::filesystem::path& path, const std::vector<AngleReportRow>& rows) {
    CsvWriter w(path, "theta_deg,class,transition_r");
    for (const auto& r : rows) {
        w.num(to_deg(r.theta)).token(to_string(r.c.cls));
        if (std::isfinite(r.c.transition_r)) w.num(r.c.transition_r);
        else w.token("");
        w.end_row();
    }
    w.close();
}

inline constexpr const char* kGamma23Header = "theta_deg,f,fp,g,dmg,R";

inline void write_gamma23_csv(const std::filesystem::path& path, const std::vector<Gamma23Sample>& s) {
    CsvWriter w(path, kGamma23Header);
    for (const auto& x : s) {
        w.num(to_deg(x.theta)).num(x.f).num(x.fp).num(x.g).num(x.dmg).num(x.R);
        w.end_row();
    }
    w.close();
}

inline std::vector<Gamma23Sample> read_gamma23_csv(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, {"theta_deg", "f", "fp", "g", "dmg", "R"});
    std::vector<Gamma23Sample> out;
    out.reserve(t.rows.size());
    for (std::size_t k = 0; k < t.rows.size(); ++k)
        out.push_back({to_rad(t.num(k, 0)), t.num(k, 1), t.num(k, 2), t.num(k, 3), t.num(k, 4), t.num(k, 5)});
    return out;
}

// ---------------------------------------------------------------------------
// Characteristics.

inline void write_curves_csv(const std::filesystem::path& path, const std::vector<CharCurve>& curves) {
    CsvWriter w(path, "family,theta,r,p");
    for (const auto& c : curves)
        for (const auto& s : c.samples) {
            w.token(to_string(c.family)).num(to_deg(s.theta)).num(s.r).num(s.p);
            w.end_row();
        }
    w.close();
}

inline void write_envelope_csv(const std::filesystem::path& path, const EnvelopeResult& env) {
    CsvWriter w(path, "theta,r");
    for (const auto& s : env.samples) {
        w.num(to_deg(s.theta)).num(s.r);
        w.end_row();
    }
    w.close();
}

// ---------------------------------------------------------------------------
// Goursat mesh and sonic front.

inline void write_mesh_csv(const std::filesystem::path& path, const CharMesh& m) {
    CsvWriter w(path, "i,j,theta,r,p,R,S,t,sonic_flag");
    for (int j = 0; j < m.nj; ++j)
        for (int i = 0; i < m.ni; ++i) {
            const auto& n = m.at(i, j);
            if (!n.valid) continue;
            w.integer(i).integer(j).num(to_deg(n.theta)).num(n.r).num(n.p).num(n.R).num(n.S).num(n.t);
            w.integer(n.sonic ? 1 : 0);
            w.end_row();
        }
    w.close();
}

inline void write_sonic_front_csv(const std::filesystem::path& path, const SonicFront& f) {
    CsvWriter w(path, "theta,r,RS_value");
    for (const auto& s : f.samples) {
        w.num(to_deg(s.theta)).num(s.r).num(s.rs);
        w.end_row();
    }
    w.close();
}

// ---------------------------------------------------------------------------
// NDJSON.

inline void append_ndjson(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw ArtifactError("cannot append to " + path.string());
    out << j.dump() << '\n';
}

inline std::vector<nlohmann::json> read_ndjson(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArtifactError("missing artifact " + path.string());
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw ArtifactError(path.string() + ": bad NDJSON line: " + e.what());
        }
    }
    return out;
}

/// FNV-1a 64-bit hash, hex encoded; used as a deterministic run id.
inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k, h >>= 4) out[k] = digits[h & 15];
    return out;
}

}  // namespace nlw
