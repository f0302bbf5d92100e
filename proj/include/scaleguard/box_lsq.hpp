#pragma once

#include "scaleguard/scaling.hpp"

#include <span>
#include <vector>

namespace scaleguard {

struct SolverOptions {
    int max_iterations = 10000;
    double step_tolerance = 1e-6;
    double lower = 0.0;
    double upper = 255.0;
};

struct SolveResult {
    std::vector<double> x;
    bool feasible = false;
    int iterations = 0;
    double max_violation = 0.0;
};

/// Smallest-norm change of `start` such that every row of `op` lands within
/// `tolerance` of its target while all entries stay inside [lower, upper]:
///
///     min ||x - start||^2  s.t.  |op.row(k) . x - targets[k]| <= tolerance,
///                                lower <= x <= upper.
///
/// Solved by Dykstra's cyclic projections. Each slab projection is a
/// gradient step of length 1/||c_k||^2 on the violated constraint, the box
/// projection is a clamp, and the Dykstra increments make the limit the
/// exact minimizer rather than just a feasible point. Stops when no entry
/// moved more than step_tolerance during a sweep or after max_iterations
/// sweeps; the result is feasible when every slab holds within 1e-6.
SolveResult solve_min_change(std::span<const double> start, const AxisOperator& op, std::span<const double> targets,
                             double tolerance, const SolverOptions& options = {});

} // namespace scaleguard
