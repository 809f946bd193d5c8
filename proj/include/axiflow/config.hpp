#pragma once

// Flat `key = value` run configuration. Lines starting with '#' are comments.
// Every problem is reported, not just the first one.

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "driver.hpp"
#include "io.hpp"

namespace axiflow {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct ShapeKeys {
    const char* name;
    std::vector<const char*> dims;
};

inline const std::vector<ShapeKeys>& shape_table() {
    static const std::vector<ShapeKeys> t{
        {"sphere", {"radius"}},
        {"rounded_cylinder", {"width", "height"}},
        {"disc", {"diameter", "height"}},
        {"torus", {"major_radius", "minor_radius"}},
        {"disc_with_hole", {"outer_diameter", "hole_diameter", "height"}},
        {"droplet", {"diameter", "height"}},
        {"perturbed_cylinder", {"radius", "length", "amplitude", "modes"}},
        {"file", {"path", "topology"}},
    };
    return t;
}

class ConfigReader {
public:
    std::map<std::string, std::string> values;
    std::map<std::string, int> lines;
    std::vector<std::string> errors;

    bool has(const std::string& k) const { return values.count(k) != 0; }

    void error(const std::string& key, const std::string& msg) {
        auto it = lines.find(key);
        errors.push_back(it == lines.end() ? key + ": " + msg : "line " + std::to_string(it->second) + ": " + key + ": " + msg);
    }

    std::optional<double> number(const std::string& k) {
        if (!has(k)) return std::nullopt;
        double v = 0.0;
        if (!parse_double(values[k], v)) {
            error(k, "expected a number, got '" + values[k] + "'");
            return std::nullopt;
        }
        return v;
    }

    std::optional<double> positive(const std::string& k) {
        auto v = number(k);
        if (v && !(*v > 0.0)) {
            error(k, "must be positive");
            return std::nullopt;
        }
        return v;
    }

    std::optional<long> integer(const std::string& k, long min) {
        if (!has(k)) return std::nullopt;
        const std::string& s = values[k];
        char* end = nullptr;
        errno = 0;
        const long v = std::strtol(s.c_str(), &end, 10);
        if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
            error(k, "expected an integer, got '" + s + "'");
            return std::nullopt;
        }
        if (v < min) {
            error(k, "must be at least " + std::to_string(min));
            return std::nullopt;
        }
        return v;
    }

    std::optional<std::vector<double>> list(const std::string& k) {
        if (!has(k)) return std::nullopt;
        std::vector<double> out;
        for (const auto& item : split(values[k], ',')) {
            double v = 0.0;
            if (!parse_double(item, v)) {
                error(k, "bad list entry '" + trim(item) + "'");
                return std::nullopt;
            }
            out.push_back(v);
        }
        return out;
    }

    template <class E>
    std::optional<E> choice(const std::string& k, const std::vector<std::pair<const char*, E>>& opts) {
        if (!has(k)) return std::nullopt;
        for (const auto& [name, val] : opts)
            if (values[k] == name) return val;
        std::string names;
        for (const auto& o : opts) names += (names.empty() ? "" : " | ") + std::string(o.first);
        error(k, "expected " + names + ", got '" + values[k] + "'");
        return std::nullopt;
    }
};

inline std::optional<EndpointClass> endpoint_class(ConfigReader& r, const std::string& k) {
    return r.choice<EndpointClass>(k, {{"axis", EndpointClass::Axis},
                                       {"wall", EndpointClass::CylinderWall},
                                       {"plane", EndpointClass::Plane},
                                       {"fixed", EndpointClass::Fixed}});
}

} // namespace detail

/// Parses and validates a configuration. Relative `path` entries resolve against `base_dir`.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
    detail::ConfigReader r;
    {
        std::istringstream in(text);
        std::string raw;
        int lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            const std::string line = detail::trim(raw);
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                r.errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
                continue;
            }
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string val = detail::trim(line.substr(eq + 1));
            if (key.empty()) {
                r.errors.push_back("line " + std::to_string(lineno) + ": missing key");
                continue;
            }
            if (r.has(key)) {
                r.errors.push_back("line " + std::to_string(lineno) + ": duplicate key " + key);
                continue;
            }
            r.values[key] = val;
            r.lines[key] = lineno;
        }
    }

    std::set<std::string> known{"flow",   "scheme", "alpha",    "xi",      "shape",     "boundary0", "boundary1",
                                "rho0",   "rho1",   "rho",      "J",       "dt",        "t_final",   "snapshots",
                                "out_dir", "tol",   "max_iters"};
    for (const auto& s : detail::shape_table())
        for (const char* d : s.dims) known.insert(d);
    for (const auto& [k, v] : r.values)
        if (!known.count(k)) r.error(k, "unknown key");
    for (const char* k : {"flow", "shape", "dt", "t_final"})
        if (!r.has(k)) r.errors.push_back(std::string("missing required key ") + k);

    RunConfig cfg;
    if (auto f = r.choice<FlowKind>("flow", {{"sd", FlowKind::SurfaceDiffusion},
                                             {"intermediate", FlowKind::Intermediate},
                                             {"cmcf", FlowKind::ConservedMeanCurvature}}))
        cfg.flow.kind = *f;
    if (auto s = r.choice<SchemeVariant>(
            "scheme", {{"stabilized", SchemeVariant::Stabilized}, {"equidistributing", SchemeVariant::Equidistributing}}))
        cfg.flow.variant = *s;
    if (auto v = r.positive("alpha")) cfg.flow.alpha = *v;
    if (auto v = r.positive("xi")) cfg.flow.xi = *v;
    if (cfg.flow.kind != FlowKind::Intermediate)
        for (const char* k : {"alpha", "xi"})
            if (r.has(k)) r.error(k, "only used by the intermediate flow");

    if (auto v = r.positive("dt")) cfg.dt = *v;
    if (auto v = r.positive("t_final")) cfg.t_final = *v;
    if (auto v = r.positive("tol")) cfg.newton.tol = *v;
    if (auto v = r.integer("max_iters", 1)) cfg.newton.max_iters = static_cast<int>(*v);
    if (r.has("out_dir")) cfg.out_dir = r.values["out_dir"];
    if (auto l = r.list("snapshots")) {
        for (double t : *l)
            if (t < 0.0 || t > cfg.t_final * (1.0 + 1e-12)) {
                r.error("snapshots", "time " + format_time(t) + " outside [0, t_final]");
            }
        cfg.snapshots = *l;
    } else {
        cfg.snapshots = {0.0, cfg.t_final};
    }
    std::optional<long> J = r.integer("J", 3);
    if (J) cfg.shape.elements = static_cast<std::size_t>(*J);

    // Shape.
    const std::string shape_name = r.has("shape") ? r.values["shape"] : "";
    const detail::ShapeKeys* shape_keys = nullptr;
    for (const auto& s : detail::shape_table())
        if (shape_name == s.name) shape_keys = &s;
    bool shape_ok = shape_keys != nullptr;
    if (!shape_keys && r.has("shape")) {
        std::string names;
        for (const auto& s : detail::shape_table()) names += (names.empty() ? "" : " | ") + std::string(s.name);
        r.error("shape", "expected " + names + ", got '" + shape_name + "'");
    }
    if (shape_keys) {
        std::set<std::string> mine(shape_keys->dims.begin(), shape_keys->dims.end());
        for (const auto& s : detail::shape_table())
            for (const char* d : s.dims)
                if (r.has(d) && !mine.count(d)) {
                    r.error(d, "not a dimension of shape " + shape_name);
                    mine.insert(d);
                }
        const std::size_t before = r.errors.size();
        auto dim = [&](const char* k, double dflt) { return r.positive(k).value_or(dflt); };
        if (shape_name == "sphere") {
            cfg.shape.kind = shape::Sphere{dim("radius", 1.0)};
        } else if (shape_name == "rounded_cylinder") {
            cfg.shape.kind = shape::RoundedCylinder{dim("width", 1.0), dim("height", 7.0)};
        } else if (shape_name == "disc") {
            cfg.shape.kind = shape::Disc{dim("diameter", 9.0), dim("height", 1.0)};
        } else if (shape_name == "torus") {
            cfg.shape.kind = shape::Torus{dim("major_radius", 1.0), dim("minor_radius", 0.25)};
        } else if (shape_name == "disc_with_hole") {
            shape::DiscWithHole s;
            s.outer_diameter = dim("outer_diameter", s.outer_diameter);
            s.hole_diameter = dim("hole_diameter", s.hole_diameter);
            s.height = dim("height", s.height);
            cfg.shape.kind = s;
        } else if (shape_name == "droplet") {
            cfg.shape.kind = shape::HalfDiscDroplet{dim("diameter", 2.0), dim("height", 1.0), 0.0};
        } else if (shape_name == "perturbed_cylinder") {
            shape::PerturbedCylinder s;
            s.radius = dim("radius", s.radius);
            s.length = dim("length", s.length);
            if (auto a = r.number("amplitude")) {
                if (*a < 0.0) r.error("amplitude", "must be nonnegative");
                s.amplitude = *a;
            }
            if (auto m = r.list("modes")) s.modes = *m;
            cfg.shape.kind = s;
        } else if (shape_name == "file") {
            if (!r.has("path")) r.errors.push_back("missing required key path for shape file");
            auto topo = r.choice<Topology>("topology", {{"open", Topology::Open}, {"closed", Topology::Closed}})
                            .value_or(Topology::Open);
            if (r.has("path")) {
                std::filesystem::path p = r.values["path"];
                if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
                try {
                    Curve c = read_curve_csv(p, topo);
                    if (J && *J != static_cast<long>(c.element_count()))
                        r.error("J", "does not match the " + std::to_string(c.element_count()) + " elements in " +
                                         p.string());
                    cfg.shape.elements = c.element_count();
                    cfg.initial_curve = std::move(c);
                } catch (const Error& e) {
                    r.error("path", e.what());
                }
            }
            if (topo == Topology::Open)
                for (const char* k : {"boundary0", "boundary1"})
                    if (!r.has(k)) r.errors.push_back(std::string("missing required key ") + k + " for an open curve");
        }
        shape_ok = r.errors.size() == before;
    }

    // Contact energy of the shape itself (droplet substrate, hole plane).
    if (r.has("rho")) {
        if (shape_name != "droplet" && shape_name != "disc_with_hole") {
            r.error("rho", "only used by shapes droplet and disc_with_hole; use rho0/rho1");
        } else if (auto v = r.number("rho")) {
            if (auto* d = std::get_if<shape::HalfDiscDroplet>(&cfg.shape.kind)) d->rho = *v;
            if (auto* d = std::get_if<shape::DiscWithHole>(&cfg.shape.kind)) d->rho = *v;
        }
    }

    for (int p = 0; p < 2; ++p) {
        const std::string bk = "boundary" + std::to_string(p), rk = "rho" + std::to_string(p);
        auto& ov = cfg.boundary[static_cast<std::size_t>(p)];
        ov.kind = detail::endpoint_class(r, bk);
        ov.rho = r.number(rk);
    }

    // Checks against the generated geometry.
    if (shape_ok && r.errors.empty()) {
        try {
            auto [curve, bspec] = generate(cfg.shape);
            if (cfg.initial_curve) curve = *cfg.initial_curve;
            if (curve.closed()) {
                for (const char* k : {"boundary0", "boundary1", "rho0", "rho1"})
                    if (r.has(k)) r.error(k, "closed curves have no endpoints");
            } else {
                for (int p = 0; p < 2; ++p) {
                    const std::string rk = "rho" + std::to_string(p);
                    const auto& ov = cfg.boundary[static_cast<std::size_t>(p)];
                    const auto kind = ov.kind ? *ov.kind : (bspec.empty() ? EndpointClass::Axis : bspec.end(p).kind);
                    if (r.has(rk) && (kind == EndpointClass::Axis || kind == EndpointClass::Fixed))
                        r.error(rk, std::string("endpoint class ") + to_string(kind) + " takes no contact energy");
                }
            }
            if (r.errors.empty()) (void)initial_geometry(cfg);
        } catch (const Error& e) {
            r.errors.push_back(std::string("shape: ") + e.what());
        }
    }

    if (!r.errors.empty()) throw ConfigError(r.errors);
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

} // namespace axiflow
