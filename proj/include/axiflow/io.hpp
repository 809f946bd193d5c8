#pragma once

// Output files of a run: diagnostics.csv, curve_t<t>.csv snapshots and curves.svg.
// Numbers are written with 17 significant digits so that reading them back is exact.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "driver.hpp"
#include "geometry.hpp"

namespace axiflow {

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Short form of a snapshot time for file names, e.g. 0.25 -> "0.25".
inline std::string format_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", t);
    return buf;
}

inline std::string snapshot_filename(double t) { return "curve_t" + format_time(t) + ".csv"; }

inline int exit_code(Termination t) {
    switch (t) {
    case Termination::Completed: return 0;
    case Termination::PinchOff: return 2;
    default: return 1;
    }
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + p.string() + " for writing");
    return f;
}

inline void finish(std::ofstream& f, const std::filesystem::path& p) {
    f.flush();
    if (!f) throw Error("write failed: " + p.string());
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return false;
    const std::string t = s.substr(b, e - b + 1);
    char* end = nullptr;
    errno = 0;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && errno != ERANGE && std::isfinite(out);
}

} // namespace detail

inline void write_diagnostics_csv(const std::filesystem::path& p, const std::vector<DiagnosticsRecord>& recs) {
    auto f = detail::open_out(p);
    f << "t,energy_ratio,volume_loss,mesh_ratio,newton_iters,min_r,min_elem\n";
    for (const auto& r : recs)
        f << format_double(r.t) << ',' << format_double(r.energy_ratio) << ',' << format_double(r.volume_loss) << ','
          << format_double(r.mesh_ratio) << ',' << r.newton_iters << ',' << format_double(r.min_r) << ','
          << format_double(r.min_elem) << '\n';
    detail::finish(f, p);
}

inline void write_curve_csv(const std::filesystem::path& p, const Curve& c) {
    auto f = detail::open_out(p);
    f << "rho,r,z\n";
    const auto J = static_cast<double>(c.element_count());
    for (std::size_t j = 0; j < c.node_count(); ++j)
        f << format_double(static_cast<double>(j) / J) << ',' << format_double(c.nodes[j].x()) << ','
          << format_double(c.nodes[j].y()) << '\n';
    detail::finish(f, p);
}

/// Reads a rho,r,z file. The rho column is only checked for being increasing.
inline Curve read_curve_csv(const std::filesystem::path& p, Topology topology = Topology::Open) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw Error("cannot open " + p.string());
    std::string line;
    if (!std::getline(f, line)) throw Error(p.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "rho,r,z") throw Error(p.string() + ": expected header rho,r,z");
    Curve c;
    c.topology = topology;
    double last_rho = -INFINITY;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cols = detail::split(line, ',');
        double rho = 0, r = 0, z = 0;
        if (cols.size() != 3 || !detail::parse_double(cols[0], rho) || !detail::parse_double(cols[1], r) ||
            !detail::parse_double(cols[2], z))
            throw Error(p.string() + ":" + std::to_string(lineno) + ": malformed row");
        if (!(rho > last_rho)) throw Error(p.string() + ":" + std::to_string(lineno) + ": rho must increase");
        last_rho = rho;
        c.nodes.emplace_back(r, z);
    }
    if (c.node_count() < 3) throw Error(p.string() + ": need at least 3 nodes");
    return c;
}

/// Generating curves and their mirror images across the z-axis.
inline void write_curves_svg(const std::filesystem::path& p, const std::vector<Snapshot>& snaps) {
    double rmax = 0.0, zlo = INFINITY, zhi = -INFINITY;
    for (const auto& s : snaps)
        for (const auto& x : s.state.curve.nodes) {
            rmax = std::max(rmax, std::abs(x.x()));
            zlo = std::min(zlo, x.y());
            zhi = std::max(zhi, x.y());
        }
    if (snaps.empty()) rmax = zlo = zhi = 0.0;
    const double w = std::max(2.0 * rmax, 1e-9), hgt = std::max(zhi - zlo, 1e-9);
    const double scale = 800.0 / std::max(w, hgt);
    const double pad = 20.0;
    const double W = w * scale + 2 * pad, H = hgt * scale + 2 * pad;
    auto px = [&](double r) { return pad + (r + rmax) * scale; };
    auto py = [&](double z) { return pad + (zhi - z) * scale; };
    auto num = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.3f", v);
        return std::string(b);
    };

    auto f = detail::open_out(p);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\"" << num(H)
      << "\" viewBox=\"0 0 " << num(W) << ' ' << num(H) << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<line x1=\"" << num(px(0)) << "\" y1=\"0\" x2=\"" << num(px(0)) << "\" y2=\"" << num(H)
      << "\" stroke=\"gray\" stroke-dasharray=\"4 4\" stroke-width=\"0.5\"/>\n";
    for (const auto& s : snaps) {
        const auto& c = s.state.curve;
        const char* tag = c.closed() ? "polygon" : "polyline";
        for (double side : {1.0, -1.0}) {
            f << '<' << tag << " data-t=\"" << format_time(s.t) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
            for (std::size_t j = 0; j < c.node_count(); ++j)
                f << (j ? " " : "") << num(px(side * c.nodes[j].x())) << ',' << num(py(c.nodes[j].y()));
            f << "\"/>\n";
        }
    }
    f << "</svg>\n";
    detail::finish(f, p);
}

/// Writes all run outputs into `dir` and returns the process exit code.
inline int emit_outputs(const RunResult& res, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
    write_diagnostics_csv(dir / "diagnostics.csv", res.diagnostics);
    for (const auto& s : res.snapshots) write_curve_csv(dir / snapshot_filename(s.t), s.state.curve);
    write_curves_svg(dir / "curves.svg", res.snapshots);
    return exit_code(res.termination);
}

} // namespace axiflow
