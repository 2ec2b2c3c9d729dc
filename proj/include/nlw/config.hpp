#pragma once

// Flat key=value run configuration: one pair per line, '#' starts a comment.
// Every key has a default (the shipped profile); unknown keys and
// out-of-range values raise ConfigError naming the key. Angles are degrees.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nlw/errors.hpp"

namespace nlw {

struct RunConfig {
    // Gas and Riemann data.
    double gamma = 3.0;
    double rho1 = 0.5;
    double rho4 = 0.25;
    // Grid (reduced profile; the fine grid is nr=2376, ntheta=2700).
    int nr = 600;
    int ntheta = 900;
    double rmin = 0.01;
    double rmax = 1.0;
    double thetamin = 0.0;    // degrees
    double thetamax = 270.0;  // degrees
    // Solver.
    double cfl = 0.9;
    int order = 2;
    std::string limiter = "mc";
    double t_final = 1.0;
    // Analysis.
    double jump_threshold = 0.02;
    int window = 3;
    double angle_step_deg = 1.0;
    double scan_min_deg = 0.0;
    double scan_max_deg = 90.0;
    double lambda_stop = 1e-3;  // Gamma_23 extraction ends where lambda drops below this
    // Goursat.
    int mesh_n = 200;
    double t_cut = 1e-4;
    double t_band = 0.05;
    std::string mode = "coupled";
    std::string gamma23_file;  // prescribed mode: CSV theta_deg,f,g
    std::string outdir = "run";

    void set(const std::string& key, const std::string& value);
    void validate() const;
    nlohmann::ordered_json to_json() const;
    static const std::vector<std::string>& keys();
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const char* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc{} || ptr != end || v.empty())
        throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
    return x;
}

inline int parse_int(const std::string& key, const std::string& v) {
    int x = 0;
    const char* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc{} || ptr != end || v.empty())
        throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
    return x;
}

}  // namespace detail

inline const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = {
        "gamma",          "rho1",         "rho4",         "nr",          "ntheta",      "rmin",
        "rmax",           "thetamin",     "thetamax",     "cfl",         "order",       "limiter",
        "t_final",        "jump_threshold", "window",     "angle_step_deg", "scan_min_deg", "scan_max_deg",
        "lambda_stop",    "mesh_n",       "t_cut",        "t_band",      "mode",        "gamma23_file",
        "outdir"};
    return k;
}

inline void RunConfig::set(const std::string& key, const std::string& value) {
    using detail::parse_double;
    using detail::parse_int;
    const std::map<std::string, double*> dbl = {
        {"gamma", &gamma},       {"rho1", &rho1},
        {"rho4", &rho4},         {"rmin", &rmin},
        {"rmax", &rmax},         {"thetamin", &thetamin},
        {"thetamax", &thetamax}, {"cfl", &cfl},
        {"t_final", &t_final},   {"jump_threshold", &jump_threshold},
        {"angle_step_deg", &angle_step_deg}, {"scan_min_deg", &scan_min_deg},
        {"scan_max_deg", &scan_max_deg},     {"lambda_stop", &lambda_stop},
        {"t_cut", &t_cut},       {"t_band", &t_band}};
    const std::map<std::string, int*> ints = {
        {"nr", &nr}, {"ntheta", &ntheta}, {"order", &order}, {"window", &window}, {"mesh_n", &mesh_n}};
    const std::map<std::string, std::string*> strs = {
        {"limiter", &limiter}, {"mode", &mode}, {"gamma23_file", &gamma23_file}, {"outdir", &outdir}};
    if (auto it = dbl.find(key); it != dbl.end()) *it->second = parse_double(key, value);
    else if (auto jt = ints.find(key); jt != ints.end()) *jt->second = parse_int(key, value);
    else if (auto st = strs.find(key); st != strs.end()) *st->second = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

inline void RunConfig::validate() const {
    auto need = [](bool ok, const std::string& key, const std::string& what) {
        if (!ok) throw ConfigError("config key '" + key + "': " + what);
    };
    need(gamma > 1.0 && std::isfinite(gamma), "gamma", "must be > 1");
    need(rho4 > 0.0, "rho4", "must be > 0");
    need(rho1 > rho4, "rho1", "must exceed rho4");
    need(nr >= 4, "nr", "must be >= 4");
    need(ntheta >= 4, "ntheta", "must be >= 4");
    need(rmin > 0.0, "rmin", "must be > 0");
    need(rmax > rmin, "rmax", "must exceed rmin");
    need(thetamax > thetamin, "thetamax", "must exceed thetamin");
    need(thetamax - thetamin <= 360.0, "thetamax", "angular range exceeds 360 degrees");
    need(cfl > 0.0 && cfl < 1.0, "cfl", "range (0,1)");
    need(order == 1 || order == 2, "order", "must be 1 or 2");
    need(limiter == "none" || limiter == "minmod" || limiter == "mc", "limiter", "one of none, minmod, mc");
    need(t_final > 0.0, "t_final", "must be > 0");
    need(jump_threshold > 0.0, "jump_threshold", "must be > 0");
    need(window >= 2, "window", "must be >= 2");
    need(angle_step_deg > 0.0, "angle_step_deg", "must be > 0");
    need(scan_max_deg > scan_min_deg, "scan_max_deg", "must exceed scan_min_deg");
    need(scan_min_deg >= thetamin && scan_max_deg <= thetamax, "scan_min_deg",
         "scan window must lie inside [thetamin, thetamax]");
    need(lambda_stop > 0.0, "lambda_stop", "must be > 0");
    need(mesh_n >= 32, "mesh_n", "must be >= 32");
    need(t_cut > 0.0, "t_cut", "must be > 0");
    need(t_band > t_cut, "t_band", "must exceed t_cut");
    need(mode == "coupled" || mode == "prescribed", "mode", "coupled or prescribed");
    need(mode != "prescribed" || !gamma23_file.empty(), "gamma23_file", "required in prescribed mode");
    need(!outdir.empty(), "outdir", "must not be empty");
}

inline nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["gamma"] = gamma;
    j["rho1"] = rho1;
    j["rho4"] = rho4;
    j["nr"] = nr;
    j["ntheta"] = ntheta;
    j["rmin"] = rmin;
    j["rmax"] = rmax;
    j["thetamin"] = thetamin;
    j["thetamax"] = thetamax;
    j["cfl"] = cfl;
    j["order"] = order;
    j["limiter"] = limiter;
    j["t_final"] = t_final;
    j["jump_threshold"] = jump_threshold;
    j["window"] = window;
    j["angle_step_deg"] = angle_step_deg;
    j["scan_min_deg"] = scan_min_deg;
    j["scan_max_deg"] = scan_max_deg;
    j["lambda_stop"] = lambda_stop;
    j["mesh_n"] = mesh_n;
    j["t_cut"] = t_cut;
    j["t_band"] = t_band;
    j["mode"] = mode;
    j["gamma23_file"] = gamma23_file;
    j["outdir"] = outdir;
    return j;
}

/// Apply key=value lines from text (file contents) onto cfg.
inline void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "config") {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string_view v(line);
        if (const auto h = v.find('#'); h != std::string_view::npos) v = v.substr(0, h);
        v = detail::trim(v);
        if (v.empty()) continue;
        const auto eq = v.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
        cfg.set(std::string(detail::trim(v.substr(0, eq))), std::string(detail::trim(v.substr(eq + 1))));
    }
}

inline void apply_override(RunConfig& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(std::string(detail::trim(std::string_view(kv).substr(0, eq))),
            std::string(detail::trim(std::string_view(kv).substr(eq + 1))));
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig cfg;
    apply_config_text(cfg, ss.str(), path);
    return cfg;
}

}  // namespace nlw
