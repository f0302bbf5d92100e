#include "scaleguard/box_lsq.hpp"

#include "scaleguard/errors.hpp"

#include <algorithm>
#include <cmath>

namespace scaleguard {

namespace {

constexpr double kFeasibilitySlack = 1e-6;

double row_dot(const std::vector<Tap>& taps, const std::vector<double>& x)
{
    double acc = 0.0;
    for (const Tap& t : taps) {
        acc += t.weight * x[static_cast<std::size_t>(t.index)];
    }
    return acc;
}

} // namespace

SolveResult solve_min_change(std::span<const double> start, const AxisOperator& op, std::span<const double> targets,
                             double tolerance, const SolverOptions& options)
{
    if (static_cast<int>(start.size()) != op.src_len() || static_cast<int>(targets.size()) != op.dst_len()) {
        throw DimensionMismatch("solve_min_change: vector lengths do not match the operator");
    }
    if (tolerance < 0.0) {
        throw InvalidArgument("solve_min_change: negative tolerance");
    }
    const int n = op.src_len();
    const int k_count = op.dst_len();

    std::vector<double> norms(static_cast<std::size_t>(k_count));
    for (int k = 0; k < k_count; ++k) {
        double s = 0.0;
        for (const Tap& t : op.row(k)) {
            s += t.weight * t.weight;
        }
        norms[static_cast<std::size_t>(k)] = s;
    }

    SolveResult result;
    result.x.assign(start.begin(), start.end());
    std::vector<double>& x = result.x;
    for (double& v : x) {
        v = std::clamp(v, options.lower, options.upper);
    }
    std::vector<double> slab_increment(static_cast<std::size_t>(k_count), 0.0);
    std::vector<double> box_increment(static_cast<std::size_t>(n), 0.0);
    // Start was clamped; that clamp is the first box projection.
    for (int i = 0; i < n; ++i) {
        box_increment[static_cast<std::size_t>(i)] = start[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)];
    }

    auto violation = [&] {
        double worst = 0.0;
        for (int k = 0; k < k_count; ++k) {
            const double r = row_dot(op.row(k), x);
            worst = std::max(worst, std::abs(r - targets[static_cast<std::size_t>(k)]) - tolerance);
        }
        return std::max(worst, 0.0);
    };

    for (int sweep = 1; sweep <= options.max_iterations; ++sweep) {
        double moved = 0.0;
        for (int k = 0; k < k_count; ++k) {
            const auto& taps = op.row(k);
            const double norm = norms[static_cast<std::size_t>(k)];
            if (norm == 0.0) {
                continue;
            }
            double& lambda = slab_increment[static_cast<std::size_t>(k)];
            // y = x + lambda * c, project y onto the slab.
            const double r = row_dot(taps, x) + lambda * norm;
            const double t = targets[static_cast<std::size_t>(k)];
            const double clamped = std::clamp(r, t - tolerance, t + tolerance);
            const double next_lambda = (r - clamped) / norm;
            const double delta = lambda - next_lambda;
            if (delta != 0.0) {
                for (const Tap& tap : taps) {
                    x[static_cast<std::size_t>(tap.index)] += delta * tap.weight;
                }
                moved = std::max(moved, std::abs(delta) * std::sqrt(norm));
            }
            lambda = next_lambda;
        }
        for (int i = 0; i < n; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const double y = x[ui] + box_increment[ui];
            const double proj = std::clamp(y, options.lower, options.upper);
            moved = std::max(moved, std::abs(proj - x[ui]));
            box_increment[ui] = y - proj;
            x[ui] = proj;
        }
        result.iterations = sweep;
        // A stalled sweep that still violates a slab means the box and the
        // slabs do not intersect; further sweeps only grow the increments.
        if (moved < options.step_tolerance) {
            break;
        }
    }
    result.max_violation = violation();
    result.feasible = result.max_violation <= kFeasibilitySlack;
    return result;
}

} // namespace scaleguard
