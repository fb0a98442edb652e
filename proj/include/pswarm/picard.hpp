#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pswarm/chebyshev.hpp"
#include "pswarm/errors.hpp"
#include "pswarm/pc_matrices.hpp"
#include "pswarm/thread_pool.hpp"
#include "pswarm/types.hpp"

namespace pswarm {

/// Outcome of one fixed-point solve.
struct IterationReport {
    int iterations = 0;
    double final_error = std::numeric_limits<double>::infinity();
    bool converged = false;
    std::vector<double> per_iteration_errors;
};

namespace detail {

inline void throw_first_non_finite(const Mat& y) {
    for (Index j = 0; j < y.rows(); ++j) {
        for (Index c = 0; c < y.cols(); ++c) {
            if (!std::isfinite(y(j, c))) {
                throw DivergenceError("picard iteration produced a non-finite value at node "
                                          + std::to_string(j) + ", column " + std::to_string(c),
                                      j, c);
            }
        }
    }
}

} // namespace detail

/// Generic Picard-Chebyshev fixed-point loop over an N x K state block.
///
/// dynamics(y, force) must fill all N rows of the omega2-scaled derivative
/// block for the iterate y; error_fn(current, previous) returns the scalar
/// stopping error. Iterates until the error drops to `tolerance` or
/// `max_iterations` is reached; non-convergence is reported, not thrown.
template <typename DynamicsFn, typename ErrorFn>
std::pair<Mat, IterationReport> pc_solve(const PCMatrices& mats, DynamicsFn&& dynamics,
                                         const Mat& y_init, const RowVec& initial_row,
                                         double tolerance, int max_iterations,
                                         ErrorFn&& error_fn, ThreadPool* pool = nullptr) {
    if (tolerance <= 0.0) {
        throw Error("pc_solve: tolerance must be positive");
    }
    if (y_init.rows() != mats.n_nodes || y_init.cols() != initial_row.cols()) {
        throw ShapeError("pc_solve: initial block is " + std::to_string(y_init.rows()) + "x"
                         + std::to_string(y_init.cols()) + ", expected "
                         + std::to_string(mats.n_nodes) + "x" + std::to_string(initial_row.cols()));
    }

    Mat y = y_init;
    Mat y_next(y.rows(), y.cols());
    Mat force(y.rows(), y.cols());
    IterationReport report;
    report.per_iteration_errors.reserve(static_cast<std::size_t>(std::max(max_iterations, 0)));

    for (int it = 1; it <= max_iterations; ++it) {
        dynamics(y, force);
        picard_update_into(mats, force, initial_row, y_next, pool);
        if (!y_next.allFinite()) {
            detail::throw_first_non_finite(y_next);
        }
        const double err = error_fn(y_next, y);
        y.swap(y_next);
        report.iterations = it;
        report.final_error = err;
        report.per_iteration_errors.push_back(err);
        if (err <= tolerance) {
            report.converged = true;
            break;
        }
    }
    return {std::move(y), std::move(report)};
}

} // namespace pswarm
