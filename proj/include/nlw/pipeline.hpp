#pragma once

// Stage runner: solve -> postproc -> chars -> goursat -> validate -> report,
// exchanging CSV / NDJSON artifacts under one output directory. Every stage
// appends one line to run.ndjson tagged with the run id (a hash of the
// effective configuration).

#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlw/characteristics.hpp"
#include "nlw/config.hpp"
#include "nlw/errors.hpp"
#include "nlw/fv_solver.hpp"
#include "nlw/gas_model.hpp"
#include "nlw/goursat.hpp"
#include "nlw/io.hpp"
#include "nlw/polar_grid.hpp"
#include "nlw/selfsim.hpp"

namespace nlw {

namespace fs = std::filesystem;

inline constexpr const char* kStageNames[] = {"solve", "postproc", "chars", "goursat", "validate", "report"};

struct Artifacts {
    fs::path dir;
    fs::path field() const { return dir / "field.csv"; }
    fs::path crosssections() const { return dir / "crosssections.csv"; }
    fs::path report() const { return dir / "report.csv"; }
    fs::path gamma23() const { return dir / "gamma23.csv"; }
    fs::path chars(const std::string& what) const { return dir / ("chars_" + what + ".csv"); }
    fs::path mesh() const { return dir / "mesh.csv"; }
    fs::path sonic_front() const { return dir / "sonic_front.csv"; }
    fs::path validation() const { return dir / "validation.ndjson"; }
    fs::path run_log() const { return dir / "run.ndjson"; }
};

class Pipeline {
public:
    /// cfg must already be validated.
    Pipeline(RunConfig cfg, std::ostream& log = std::cerr)
        : cfg_(std::move(cfg)), gl_(cfg_.gamma), qd_(four_quadrant_states(gl_, cfg_.rho1, cfg_.rho4)), log_(log) {
        art_.dir = cfg_.outdir;
        run_id_ = fnv1a_hex(cfg_.to_json().dump());
    }

    const RunConfig& config() const { return cfg_; }
    const std::string& run_id() const { return run_id_; }
    const Artifacts& artifacts() const { return art_; }

    /// Run one stage by name. Throws the module errors; the CLI maps them to exit codes.
    void run(const std::string& stage) {
        fs::create_directories(art_.dir);
        if (stage == "solve") solve();
        else if (stage == "postproc") postproc();
        else if (stage == "chars") chars();
        else if (stage == "goursat") goursat();
        else if (stage == "validate") validate();
        else if (stage == "report") report(std::cout);
        else throw ConfigError("unknown stage '" + stage + "'");
    }

    std::shared_ptr<const PolarGrid> grid() const {
        GridBounds b{cfg_.rmin, cfg_.rmax, to_rad(cfg_.thetamin), to_rad(cfg_.thetamax)};
        return std::make_shared<const PolarGrid>(build_grid(cfg_.nr, cfg_.ntheta, b, Mapping::polar));
    }

    SolverConfig solver_config() const {
        SolverConfig sc;
        sc.cfl = cfg_.cfl;
        sc.order = cfg_.order;
        sc.limiter = limiter_from_string(cfg_.limiter);
        sc.t_final = cfg_.t_final;
        return sc;
    }

    // -- stages ---------------------------------------------------------------

    void solve() {
        const auto g = grid();
        log_ << "solve: " << cfg_.nr << "x" << cfg_.ntheta << " cells to t=" << cfg_.t_final << '\n';
        const SolveResult res = nlw::solve(gl_, qd_, g, solver_config(), [&](const StepLog& l) {
            if (l.step % 1000 == 0) log_ << "  step " << l.step << " t=" << l.t << '\n';
        });
        write_field_csv(art_.field(), res.field, gl_);
        double rmin = 1e300, rmax = -1e300, cmax = 0.0;
        long retries = 0;
        for (int j = 0; j < g->ntheta; ++j)
            for (int i = 0; i < g->nr; ++i) {
                rmin = std::min(rmin, res.field.at(i, j).rho);
                rmax = std::max(rmax, res.field.at(i, j).rho);
            }
        for (const auto& l : res.log) {
            cmax = std::max(cmax, l.max_courant);
            retries += l.retries;
        }
        auto j = record("solve");
        j["steps"] = res.log.size();
        j["wall_seconds"] = res.wall_seconds;
        j["max_courant"] = cmax;
        j["positivity_retries"] = retries;
        j["rho_min"] = rmin;
        j["rho_max"] = rmax;
        append(j);
        log_ << "solve: " << res.log.size() << " steps, " << res.wall_seconds << " s\n";
    }

    void postproc() {
        need(art_.field(), "solve");
        const auto g = grid();
        const FVField f = read_field_csv(art_.field(), g, cfg_.t_final);
        const SelfSimField s = to_selfsimilar(f, gl_);

        // Cross sections every 10 degrees over the scan window.
        std::vector<CrossSection> sections;
        for (double d = cfg_.scan_min_deg; d <= cfg_.scan_max_deg + 1e-9; d += 10.0)
            sections.push_back(radial_cross_section(s, to_rad(d)));
        write_crosssections_csv(art_.crosssections(), sections);

        const auto rows = classify_angles(s, to_rad(cfg_.scan_min_deg), to_rad(cfg_.scan_max_deg),
                                          to_rad(cfg_.angle_step_deg), cfg_.jump_threshold, cfg_.window);
        write_report_csv(art_.report(), rows);

        auto j = record("postproc");
        std::size_t nshock = 0, nsmooth = 0;
        for (const auto& r : rows) {
            nshock += r.c.cls == AngleClass::shock;
            nsmooth += r.c.cls == AngleClass::smooth_sonic;
        }
        j["angles"] = rows.size();
        j["shock_angles"] = nshock;
        j["smooth_sonic_angles"] = nsmooth;
        j["pnd_residual_r0"] = r0_residual(s);

        std::string theta3_error;
        try {
            const Theta3Interval t3 = estimate_theta3(rows);
            j["theta3_deg"] = {to_deg(t3.lo), to_deg(t3.hi)};
            log_ << "postproc: theta3 in [" << to_deg(t3.lo) << ", " << to_deg(t3.hi) << "] deg\n";
        } catch (const AnalysisError& e) {
            j["theta3_deg"] = nullptr;
            theta3_error = e.what();
        }

        if (fs::exists(art_.gamma23())) fs::remove(art_.gamma23());
        try {
            ExtractOptions eo;
            eo.lambda_stop = cfg_.lambda_stop;
            const BoundaryData bd = gamma23_from_field(gl_, qd_, s, eo);
            write_gamma23_csv(art_.gamma23(), bd.g23);
            j["gamma23_samples"] = bd.g23.size();
            j["gamma23_theta_end_deg"] = to_deg(bd.theta3);
        } catch (const ExtractionError& e) {
            j["gamma23_error"] = e.what();
            log_ << "postproc: " << e.what() << '\n';
        }
        if (!theta3_error.empty()) j["error"] = theta3_error;
        append(j);
        if (!theta3_error.empty()) throw AnalysisError(theta3_error);
    }

    void chars() {
        std::vector<CharCurve> g12, g24;
        TraceOptions to;
        to.theta_end = 0.5 * std::numbers::pi;
        PressureFn exact = [&](double r, double th) { return r0_exact(gl_, qd_, {r, th}).p; };
        // Gamma_12: plus characteristic of the exact rarefaction field from Xi_2 to Xi_1.
        g12.push_back(integrate_char(gl_, exact, qd_.xi2, Family::plus, to));
        // Gamma_24: plus characteristic of the constant state 4, from Xi_2 toward the shock side.
        to.theta_end = std::max(qd_.xi2.theta - 0.25 * std::numbers::pi, 0.0);
        PressureFn p4 = [&](double, double) { return qd_.p4; };
        g24.push_back(integrate_char(gl_, p4, qd_.xi2, Family::plus, to));
        write_curves_csv(art_.chars("gamma12"), g12);
        write_curves_csv(art_.chars("gamma24"), g24);

        auto j = record("chars");
        j["gamma12_samples"] = g12[0].samples.size();
        j["gamma24_samples"] = g24[0].samples.size();
        j["gamma24_phase"] = gamma24_phase(qd_);
        double e12 = 0.0, e24 = 0.0;
        for (const auto& sm : g12[0].samples) e12 = std::max(e12, std::abs(sm.r - gamma12(qd_, sm.theta)));
        for (const auto& sm : g24[0].samples) e24 = std::max(e24, std::abs(sm.r - gamma24(qd_, sm.theta)));
        j["gamma12_max_error"] = e12;
        j["gamma24_max_error"] = e24;

        // Simple-wave family from Gamma_23 feet, when post-processing produced it.
        if (fs::exists(art_.gamma23())) {
            const auto g23 = read_gamma23_csv(art_.gamma23());
            std::vector<SimpleWaveFoot> feet;
            for (const auto& s : g23)
                if (s.f * s.f > gl_.sound_speed_sq_p(s.g)) feet.push_back(make_foot(gl_, s.theta, s.f, s.g));
            std::vector<CharCurve> fam;
            const std::size_t stride = std::max<std::size_t>(1, feet.size() / 24);
            for (std::size_t k = 0; k < feet.size(); k += stride) {
                CharCurve c;
                c.family = Family::plus;
                const auto& ft = feet[k];
                const int n = 64;
                for (int q = 0; q <= n; ++q) {
                    const double th = ft.theta0 - (ft.theta0 - to.theta_end) * q / n;
                    try {
                        c.samples.push_back({th, simple_wave_char(ft, th), ft.p0});
                    } catch (const DomainError&) {
                        break;
                    }
                }
                fam.push_back(std::move(c));
            }
            write_curves_csv(art_.chars("simple"), fam);
            if (feet.size() >= 3) {
                const EnvelopeResult env = envelope_point(feet, to.theta_end, qd_.xi2.theta, -1.0);
                write_envelope_csv(art_.chars("envelope"), env);
                j["envelope_found"] = env.found;
                if (env.found) j["xi4"] = {{"theta_deg", to_deg(env.xi4.theta)}, {"r", env.xi4.r}};
            }
            j["simple_wave_curves"] = fam.size();
        }
        append(j);
    }

    /// Gamma_23 data from the configured source: post-processing output
    /// (coupled) or a user table theta_deg,f,g (prescribed).
    BoundaryData boundary_data(int n) const {
        BoundaryData bd;
        std::vector<Gamma23Sample> raw;
        if (cfg_.mode == "coupled") {
            need(art_.gamma23(), "postproc");
            raw = read_gamma23_csv(art_.gamma23());
        } else {
            raw = prescribed_gamma23(cfg_.gamma23_file);
        }
        if (raw.size() < 2) throw ArtifactError("Gamma_23 table has fewer than 2 samples");
        bd.g23 = resample_gamma23(raw, n);
        bd.theta3 = bd.g23.back().theta;
        bd.g12 = make_gamma12(gl_, qd_, n);
        return bd;
    }

    void goursat() {
        const int n = cfg_.mesh_n;
        MarchOptions mo;
        mo.t_cut = cfg_.t_cut;
        const BoundaryData bd = boundary_data(n);
        const CharMesh m = goursat_march(gl_, qd_, bd, mo);
        const InvariantReport inv = mesh_invariants(m);
        const SonicFront front = extract_sonic(gl_, m);
        const FrontCheck fc = check_front(front);
        write_mesh_csv(art_.mesh(), m);
        write_sonic_front_csv(art_.sonic_front(), front);

        // Near-sonic stability against the doubled mesh.
        const NearSonicDiagnostics d1 = near_sonic_diagnostics(m, cfg_.t_band);
        const CharMesh m2 = goursat_march(gl_, qd_, boundary_data(2 * n), mo);
        const NearSonicDiagnostics d2 = near_sonic_diagnostics(m2, cfg_.t_band);
        const RefinementRatio rr = compare_refinements(d1, d2);

        auto j = record("goursat");
        j["mode"] = cfg_.mode;
        j["mesh_n"] = n;
        j["valid_nodes"] = m.count_valid();
        j["invariants"] = {{"nodes", inv.nodes},       {"breach_R", inv.breach_R},
                           {"breach_S", inv.breach_S}, {"breach_p", inv.breach_p},
                           {"breach_ptheta", inv.breach_ptheta}, {"min_R", inv.min_R},
                           {"min_S", inv.min_S},       {"min_p", inv.min_p},
                           {"max_p", inv.max_p}};
        j["sonic_front"] = {{"samples", fc.samples},
                            {"strictly_decreasing", fc.strictly_decreasing},
                            {"max_slope", fc.max_slope},
                            {"ends_to_zero", fc.ends_to_zero}};
        j["near_sonic"] = {{"applicable", d1.applicable && d2.applicable},
                           {"band_nodes", {d1.band_nodes, d2.band_nodes}},
                           {"sup_ratio", {d1.sup_ratio, d2.sup_ratio}},
                           {"max_abs_V", {d1.max_abs_V, d2.max_abs_V}},
                           {"refinement_ratio", rr.ratio},
                           {"diverging", rr.diverging}};
        append(j);
        log_ << "goursat: " << m.count_valid() << " nodes, " << inv.hard_breaches() << " breaches, front "
             << fc.samples << " samples\n";
    }

    void validate() {
        const BoundaryData bd = boundary_data(std::max(cfg_.mesh_n, 32));
        const ValidationReport rep = validate_boundary_data(gl_, qd_, bd);
        {
            std::ofstream out(art_.validation());
            if (!out) throw ArtifactError("cannot write " + art_.validation().string());
            out << rep.ndjson();
        }
        auto j = record("validate");
        j["accepted"] = rep.accepted();
        nlohmann::ordered_json failed = nlohmann::ordered_json::array(), warned = nlohmann::ordered_json::array();
        for (const auto& c : rep.checks)
            if (!c.passed) (c.hard ? failed : warned).push_back(c.name);
        j["failed_checks"] = failed;
        j["warnings"] = warned;
        append(j);
        if (!rep.accepted()) throw AnalysisError("boundary data rejected: " + failed.dump());
    }

    /// Latest record of each stage for this run id, printed as text.
    void report(std::ostream& os) {
        need(art_.run_log(), "solve");
        const auto lines = read_ndjson(art_.run_log());
        std::map<std::string, nlohmann::json> last;
        for (const auto& l : lines)
            if (l.value("run_id", "") == run_id_) last[l.value("stage", "")] = l;
        if (last.empty()) throw ArtifactError("run.ndjson has no records for run " + run_id_ + "; run a stage first");
        os << "run " << run_id_ << '\n';
        for (const char* st : kStageNames) {
            auto it = last.find(st);
            if (it == last.end()) continue;
            nlohmann::json body = it->second;
            body.erase("run_id");
            body.erase("stage");
            body.erase("config");
            os << "  " << st << ": " << body.dump() << '\n';
        }
        append(record("report"));
    }

private:
    void need(const fs::path& p, const char* stage) const {
        if (!fs::exists(p))
            throw ArtifactError("missing " + p.filename().string() + "; run '" + stage + "' first");
    }

    nlohmann::ordered_json record(const char* stage) const {
        nlohmann::ordered_json j;
        j["run_id"] = run_id_;
        j["stage"] = stage;
        j["config"] = cfg_.to_json();
        return j;
    }

    void append(const nlohmann::ordered_json& j) const { append_ndjson(art_.run_log(), j); }

    /// Residual of the self-similar pressure equation over the smooth part of
    /// the rarefaction region (diagnostic only).
    nlohmann::ordered_json r0_residual(const SelfSimField& s) const {
        std::vector<std::uint8_t> mask(s.p.size(), 0);
        const double lo = qd_.xi2.theta + to_rad(2.0), hi = 0.5 * std::numbers::pi - to_rad(2.0);
        for (std::size_t k = 0; k < mask.size(); ++k) {
            const double eta = s.r[k] * std::sin(s.theta[k]);
            mask[k] = s.theta[k] >= lo && s.theta[k] <= hi && eta >= qd_.c4 + 0.02 && eta <= qd_.c1 - 0.02 &&
                      s.u[k] > 0.05;
        }
        try {
            const ResidualNorms rn = pnd_residual(s, mask);
            return {{"l1", rn.l1}, {"linf", rn.linf}, {"cells", rn.count}};
        } catch (const DomainError&) {
            return nullptr;
        }
    }

    std::vector<Gamma23Sample> prescribed_gamma23(const std::string& path) const {
        const CsvTable t = read_csv(path, {"theta_deg", "f", "g"});
        const int ct = t.column("theta_deg"), cf = t.column("f"), cg = t.column("g");
        std::vector<Gamma23Sample> s(t.rows.size());
        for (std::size_t k = 0; k < s.size(); ++k) {
            s[k].theta = to_rad(t.num(k, ct));
            s[k].f = t.num(k, cf);
            s[k].g = t.num(k, cg);
            if (k > 0 && !(s[k].theta > s[k - 1].theta))
                throw ArtifactError(path + ": theta_deg must be strictly increasing");
        }
        const std::size_t n = s.size();
        if (n < 3) throw ArtifactError(path + ": need at least 3 rows");
        // f' and d_- g = dg/dtheta along the curve by (one-sided at the ends) differences.
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t a = k == 0 ? 0 : k - 1, b = k + 1 == n ? n - 1 : k + 1;
            s[k].fp = (s[b].f - s[a].f) / (s[b].theta - s[a].theta);
            s[k].dmg = (s[b].g - s[a].g) / (s[b].theta - s[a].theta);
            // A quotient below the rounding floor of g is zero: left as noise it
            // seeds S, which grows exponentially toward the sonic line.
            const double floor = 16.0 * std::numeric_limits<double>::epsilon() *
                                 std::max(std::abs(s[a].g), std::abs(s[b].g)) / (s[b].theta - s[a].theta);
            if (std::abs(s[k].dmg) <= floor) s[k].dmg = 0.0;
        }
        integrate_r23(gl_, s, r_at_xi2(gl_, qd_));
        return s;
    }

    RunConfig cfg_;
    GasLaw gl_;
    QuadrantData qd_;
    std::ostream& log_;
    Artifacts art_;
    std::string run_id_;
};

}  // namespace nlw
