#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "linsolve.hpp"
#include "schemes.hpp"

namespace axiflow {

struct NewtonConfig {
    double tol = 1e-10;
    int max_iters = 20;

    void validate() const {
        if (!(tol > 0.0)) throw Error("newton tolerance must be positive");
        if (max_iters < 1) throw Error("newton max_iters must be at least 1");
    }
};

/// Max-norm increments of one Newton update, per field.
struct Increment {
    double position = 0.0;   ///< max_j |X^{i+1}(q_j) - X^i(q_j)|
    double curvature = 0.0;
    double potential = 0.0;

    bool within(double tol) const { return position <= tol && curvature <= tol && potential <= tol; }
};

struct NewtonStepResult {
    StepState state;
    Increment increment;
    double residual_norm = 0.0;  ///< max-norm of the residual before the update
};

struct TimestepResult {
    StepState state;
    int iterations = 0;
    std::vector<Increment> history;
};

inline Increment measure_increment(const DofMap& dofs, const Vector& delta) {
    Increment inc;
    for (std::size_t i = 0; i < dofs.node_count(); ++i) {
        Vec2 dx = Vec2::Zero();
        for (int c = 0; c < 2; ++c)
            if (int d = dofs.position(i, c); d >= 0) dx[c] = delta[d];
        inc.position = std::max(inc.position, dx.norm());
        inc.curvature = std::max(inc.curvature, std::abs(delta[dofs.curvature(i)]));
        if (int d = dofs.potential(i); d >= 0) inc.potential = std::max(inc.potential, std::abs(delta[d]));
    }
    return inc;
}

/// One Newton update: assemble, solve J delta = -R, add delta.
inline NewtonStepResult newton_step(const SchemeAssembler& assembler, const StepState& current) {
    SchemeSystem sys = assembler.assemble(current);
    const double rnorm = sys.residual.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(rnorm)) throw NewtonFailure("non-finite residual", 0, rnorm);
    const Vector delta = factor_solve(sys.jacobian, -sys.residual);
    return {assembler.apply_increment(current, delta), measure_increment(assembler.dofs(), delta), rnorm};
}

/// Iterates Newton from the previous level until all increment norms are <= tol.
inline TimestepResult solve_timestep(const FlowSpec& flow, const BoundarySpec& bspec, const StepState& old,
                                     double dt, const NewtonConfig& cfg = {}) {
    cfg.validate();
    const SchemeAssembler assembler(flow, bspec, old, dt);
    TimestepResult out{old, 0, {}};
    double last_residual = 0.0;
    double min_r = min_offaxis_radius(old.curve, bspec);
    auto fail = [&](const std::string& why, int it) { return NewtonFailure(why, it, last_residual, min_r); };
    for (int it = 1; it <= cfg.max_iters; ++it) {
        NewtonStepResult step;
        try {
            step = newton_step(assembler, out.state);
        } catch (const SingularSystem& e) {
            throw fail(std::string("linear solve failed: ") + e.what(), it);
        } catch (const DegenerateMesh& e) {
            throw fail(std::string("degenerate iterate: ") + e.what(), it);
        }
        last_residual = step.residual_norm;
        out.state = std::move(step.state);
        out.history.push_back(step.increment);
        out.iterations = it;
        min_r = std::min(min_r, min_offaxis_radius(out.state.curve, bspec));
        if (!std::isfinite(step.increment.position) || !std::isfinite(step.increment.curvature))
            throw fail("non-finite Newton increment", it);
        if (step.increment.within(cfg.tol)) return out;
    }
    throw fail("no convergence within " + std::to_string(cfg.max_iters) + " iterations", cfg.max_iters);
}

} // namespace axiflow
