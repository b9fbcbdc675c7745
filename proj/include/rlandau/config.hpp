/**
 * Run configuration: a human-readable key = value document with '#'
 * comments. Parsing and serialization round-trip exactly at the field
 * level; unknown keys are rejected.
 */
#ifndef RLANDAU_CONFIG_HPP
#define RLANDAU_CONFIG_HPP

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "rlandau/solver.hpp"

namespace rlandau {

enum class Scenario { Equilibrium, TwoBump, PerturbedJuttner, CustomCheckpoint };

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::Equilibrium: return "equilibrium";
        case Scenario::TwoBump: return "two-bump";
        case Scenario::PerturbedJuttner: return "perturbed-juttner";
        case Scenario::CustomCheckpoint: return "custom-checkpoint";
    }
    return "equilibrium";
}

inline Scenario scenario_from_string(const std::string& s) {
    if (s == "equilibrium") return Scenario::Equilibrium;
    if (s == "two-bump") return Scenario::TwoBump;
    if (s == "perturbed-juttner") return Scenario::PerturbedJuttner;
    if (s == "custom-checkpoint") return Scenario::CustomCheckpoint;
    throw ConfigError("config: unknown scenario '" + s + "'");
}

inline std::string to_string(Scheme s) {
    return s == Scheme::ExplicitEuler ? "explicit-euler" : "rk2";
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "explicit-euler") return Scheme::ExplicitEuler;
    if (s == "rk2") return Scheme::Rk2;
    throw ConfigError("config: unknown scheme '" + s + "'");
}

struct RunConfig {
    Scenario scenario = Scenario::Equilibrium;
    SolverConfig solver;
    int diag_stride = 10;
    std::string output_dir = "out";
    long seed = 1;
    std::string checkpoint_path;  // for scenario = custom-checkpoint

    void validate() const {
        solver.validate();
        if (diag_stride < 1) throw ConfigError("config: diag_stride must be >= 1");
        if (scenario == Scenario::CustomCheckpoint && checkpoint_path.empty())
            throw ConfigError("config: custom-checkpoint requires checkpoint_path");
    }

    bool operator==(const RunConfig& o) const {
        return scenario == o.scenario && solver.eps == o.solver.eps &&
               solver.radius == o.solver.radius && solver.n_per_axis == o.solver.n_per_axis &&
               solver.t_end == o.solver.t_end && solver.dt_init == o.solver.dt_init &&
               solver.dt_safety == o.solver.dt_safety && solver.scheme == o.solver.scheme &&
               solver.negativity_tol == o.solver.negativity_tol &&
               solver.active_threshold == o.solver.active_threshold &&
               diag_stride == o.diag_stride && output_dir == o.output_dir && seed == o.seed &&
               checkpoint_path == o.checkpoint_path;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for '" + key + "': " + v);
    }
}

inline long parse_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for '" + key + "': " + v);
    }
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key == "scenario") cfg.scenario = scenario_from_string(val);
        else if (key == "radius") cfg.solver.radius = detail::parse_double(key, val);
        else if (key == "n_per_axis") cfg.solver.n_per_axis = static_cast<int>(detail::parse_long(key, val));
        else if (key == "eps") cfg.solver.eps = detail::parse_double(key, val);
        else if (key == "t_end") cfg.solver.t_end = detail::parse_double(key, val);
        else if (key == "dt_init") cfg.solver.dt_init = detail::parse_double(key, val);
        else if (key == "dt_safety") cfg.solver.dt_safety = detail::parse_double(key, val);
        else if (key == "scheme") cfg.solver.scheme = scheme_from_string(val);
        else if (key == "negativity_tol") cfg.solver.negativity_tol = detail::parse_double(key, val);
        else if (key == "active_threshold") cfg.solver.active_threshold = detail::parse_double(key, val);
        else if (key == "diag_stride") cfg.diag_stride = static_cast<int>(detail::parse_long(key, val));
        else if (key == "output_dir") cfg.output_dir = val;
        else if (key == "seed") cfg.seed = detail::parse_long(key, val);
        else if (key == "checkpoint_path") cfg.checkpoint_path = val;
        else throw ConfigError("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    return parse_config(in);
}

inline std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "# rlandau run configuration\n";
    out << "# momenta and times are in normalized units (mass, c and all\n";
    out << "# physical constants equal to one)\n";
    out << "scenario = " << to_string(cfg.scenario) << "\n";
    out << "radius = " << num(cfg.solver.radius) << "          # grid half-width (momentum units)\n";
    out << "n_per_axis = " << cfg.solver.n_per_axis << "       # odd node count per axis\n";
    out << "eps = " << num(cfg.solver.eps) << "                # regularization parameter\n";
    out << "t_end = " << num(cfg.solver.t_end) << "            # final time\n";
    out << "dt_init = " << num(cfg.solver.dt_init) << "        # step cap (stability still applies)\n";
    out << "dt_safety = " << num(cfg.solver.dt_safety) << "    # fraction of the stability limit\n";
    out << "scheme = " << to_string(cfg.solver.scheme) << "\n";
    out << "negativity_tol = " << num(cfg.solver.negativity_tol) << "  # relative negativity rejection\n";
    out << "active_threshold = " << num(cfg.solver.active_threshold)
        << "  # relative cut for assembly sources/targets\n";
    out << "diag_stride = " << cfg.diag_stride << "            # steps between diagnostic samples\n";
    out << "output_dir = " << cfg.output_dir << "\n";
    out << "seed = " << cfg.seed << "              # seed for the randomized suites\n";
    if (!cfg.checkpoint_path.empty()) out << "checkpoint_path = " << cfg.checkpoint_path << "\n";
    return out.str();
}

}  // namespace rlandau

#endif  // RLANDAU_CONFIG_HPP
