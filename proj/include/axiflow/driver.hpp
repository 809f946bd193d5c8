#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "newton.hpp"
#include "schemes.hpp"
#include "shapes.hpp"

namespace axiflow {

struct EndpointOverride {
    std::optional<EndpointClass> kind;
    std::optional<double> rho;
};

struct RunConfig {
    FlowSpec flow;
    ShapeSpec shape;
    /// Replaces the shape's own initial curve when set (polyline loaded from file).
    std::optional<Curve> initial_curve;
    std::array<EndpointOverride, 2> boundary;
    NewtonConfig newton;
    double dt = 1e-3;
    double t_final = 1.0;
    std::vector<double> snapshots;
    std::string out_dir = "out";
};

struct DiagnosticsRecord {
    double t = 0.0;
    double energy_ratio = 1.0;  ///< E(t) / E(0)
    double volume_loss = 0.0;   ///< (M(t) - M(0)) / M(0)
    double mesh_ratio = 1.0;
    int newton_iters = 0;
    double min_r = 0.0;         ///< smallest r over off-axis nodes
    double min_elem = 0.0;      ///< shortest element
};

enum class Termination { Completed, PinchOff, NewtonFailure, DegenerateMesh };

inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::Completed: return "completed";
    case Termination::PinchOff: return "pinch-off";
    case Termination::NewtonFailure: return "newton-failure";
    case Termination::DegenerateMesh: return "degenerate-mesh";
    }
    return "?";
}

struct Snapshot {
    double t = 0.0;
    StepState state;
};

struct RunResult {
    BoundarySpec boundary;
    std::vector<Snapshot> snapshots;
    std::vector<DiagnosticsRecord> diagnostics;
    Termination termination = Termination::Completed;
    double t_end = 0.0;
    std::string message;
    StepState final_state;
};

/// Pinch-off is declared once an off-axis node comes within this fraction of the
/// initial maximal radius of the axis.
inline constexpr double kPinchRelRadius = 1e-3;

struct PinchEvent {
    double min_r = 0.0;
    double min_elem = 0.0;
    std::string reason;
};

inline std::optional<PinchEvent> detect_pinchoff(const Curve& c, const BoundarySpec& b, double initial_max_r) {
    const double min_r = min_offaxis_radius(c, b);
    const double min_elem = min_chord(c);
    if (min_r < kPinchRelRadius * initial_max_r)
        return PinchEvent{min_r, min_elem, "curve reached the axis"};
    if (!(min_elem >= kDegenerateRelLength * bounding_diagonal(c)))
        return PinchEvent{min_r, min_elem, "element collapsed"};
    return std::nullopt;
}

/// Initial curve and boundary after applying config overrides.
inline std::pair<Curve, BoundarySpec> initial_geometry(const RunConfig& cfg) {
    auto [curve, bspec] = generate(cfg.shape);
    if (cfg.initial_curve) curve = *cfg.initial_curve;
    if (!curve.closed()) {
        std::array<Endpoint, 2> ends = bspec.empty() ? std::array<Endpoint, 2>{} : *bspec.ends;
        for (int p = 0; p < 2; ++p) {
            const auto& ov = cfg.boundary[static_cast<std::size_t>(p)];
            if (ov.kind) ends[static_cast<std::size_t>(p)].kind = *ov.kind;
            if (ov.rho) ends[static_cast<std::size_t>(p)].rho = *ov.rho;
            if (ends[static_cast<std::size_t>(p)].kind == EndpointClass::Axis)
                curve.nodes[endpoint_node(curve, p)].x() = 0.0;
        }
        bspec = BoundarySpec::open(ends[0], ends[1]);
    } else {
        bspec = BoundarySpec::none();
    }
    validate(curve, bspec);
    return {std::move(curve), std::move(bspec)};
}

inline DiagnosticsRecord diagnose(double t, const Curve& c, const BoundarySpec& b, double e0, double m0, int iters) {
    DiagnosticsRecord d;
    d.t = t;
    d.energy_ratio = total_energy(c, b) / e0;
    d.volume_loss = (discrete_volume(c, b) - m0) / m0;
    d.min_elem = min_chord(c);
    d.mesh_ratio = d.min_elem > 0.0 ? mesh_ratio(c) : INFINITY;
    d.newton_iters = iters;
    d.min_r = min_offaxis_radius(c, b);
    return d;
}

using StepObserver = std::function<void(const StepState&, const DiagnosticsRecord&)>;

/// Uniform time stepping from t = 0 to t_final or the first termination event.
inline RunResult run(const RunConfig& cfg, const StepObserver& observer = {}) {
    cfg.flow.validate();
    cfg.newton.validate();
    if (!(cfg.dt > 0.0) || !(cfg.t_final > 0.0)) throw Error("dt and t_final must be positive");

    RunResult out;
    auto [curve, bspec] = initial_geometry(cfg);
    out.boundary = bspec;
    StepState state = initial_state(curve, bspec, cfg.flow);

    const double e0 = total_energy(state.curve, bspec);
    const double m0 = discrete_volume(state.curve, bspec);
    const double r0 = max_radius(state.curve);
    const auto steps = static_cast<long>(std::ceil(cfg.t_final / cfg.dt - 1e-9));

    std::vector<long> snapshot_steps;
    for (double ts : cfg.snapshots) snapshot_steps.push_back(std::lround(ts / cfg.dt));
    auto wants_snapshot = [&](long m) {
        for (long s : snapshot_steps)
            if (s == m) return true;
        return false;
    };

    DiagnosticsRecord rec = diagnose(0.0, state.curve, bspec, e0, m0, 0);
    out.diagnostics.push_back(rec);
    if (observer) observer(state, rec);
    if (wants_snapshot(0)) out.snapshots.push_back({0.0, state});

    long m = 0;
    for (; m < steps; ++m) {
        const double t_next = static_cast<double>(m + 1) * cfg.dt;
        TimestepResult step;
        try {
            step = solve_timestep(cfg.flow, bspec, state, cfg.dt, cfg.newton);
        } catch (const NewtonFailure& e) {
            // iterates that cross the axis mean the step has no solution because the neck closed
            const bool pinched = e.min_radius() < kPinchRelRadius * r0;
            out.termination = pinched ? Termination::PinchOff : Termination::NewtonFailure;
            out.message = pinched ? std::string("Newton iterates reached the axis (") + e.what() + ")" : e.what();
            out.t_end = t_next;
            break;
        } catch (const DegenerateMesh& e) {
            out.termination = Termination::DegenerateMesh;
            out.message = e.what();
            out.t_end = t_next;
            break;
        }
        state = std::move(step.state);
        rec = diagnose(t_next, state.curve, bspec, e0, m0, step.iterations);
        out.diagnostics.push_back(rec);
        if (observer) observer(state, rec);
        if (wants_snapshot(m + 1)) out.snapshots.push_back({t_next, state});
        if (auto ev = detect_pinchoff(state.curve, bspec, r0)) {
            out.termination = Termination::PinchOff;
            out.message = ev->reason;
            out.t_end = t_next;
            ++m;
            break;
        }
    }
    if (out.termination == Termination::Completed) out.t_end = static_cast<double>(m) * cfg.dt;
    const double t_state = static_cast<double>(m) * cfg.dt;
    if (out.termination != Termination::Completed &&
        (out.snapshots.empty() || out.snapshots.back().t != t_state))
        out.snapshots.push_back({t_state, state});
    out.final_state = std::move(state);
    return out;
}

} // namespace axiflow
