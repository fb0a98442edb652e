#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "pswarm/chebyshev.hpp"
#include "pswarm/errors.hpp"
#include "pswarm/thread_pool.hpp"
#include "pswarm/types.hpp"

namespace pswarm {

/// Constant operators of the Picard-Chebyshev update for a given node count.
///
/// With M = N-1 and samples g_j of an integrand taken at the Lobatto nodes:
///   xform  maps samples to plain series coefficients c, i.e.
///          sum_k c_k T_k(tau_j) reproduces g_j (degree-M interpolation),
///   integ  maps integrand coefficients to antiderivative coefficients,
///          b_1 = c_0 - c_2/2, b_k = (c_{k-1} - c_{k+1})/(2k), row 0 zero,
///   a_op   = integ * xform (samples straight to antiderivative coefficients),
///   eval   evaluates a coefficient set at the nodes with the constant
///          column half-weighted: eval(j,k) = sigma_k T_k(tau_j), sigma_0 = 1/2,
///   s_row  picks the constant term that anchors the update at tau = -1:
///          s_row[k-1] = -2(-1)^k for k = 1..M.
///
/// update_op and anchor_op are the fused products eval*a_op and
/// [0 s_row]*a_op used on the hot path; together with the constant 1/2
/// first column of eval they reproduce the plain two-product update.
///
/// Everything here depends on N only, never on segment data.
struct PCMatrices {
    Index n_nodes = 0;
    Mat eval;
    Mat xform;
    Mat integ;
    Mat a_op;
    RowVec s_row;
    Mat update_op;
    RowVec anchor_op;
};

inline PCMatrices build_matrices(Index n_nodes) {
    if (n_nodes < 3) {
        throw InvalidSizeError("build_matrices: need at least 3 nodes, got "
                               + std::to_string(n_nodes));
    }
    const Index n = n_nodes;
    const Index m = n - 1;
    const Vec tau = chebyshev_lobatto_nodes(n);

    // T_k(tau_j) for all nodes and orders, by recurrence.
    Mat tval(n, n);
    for (Index j = 0; j < n; ++j) {
        chebyshev_values(tau[j], tval.row(j).data(), n);
    }

    PCMatrices mats;
    mats.n_nodes = n;

    mats.eval = tval;
    mats.eval.col(0) *= 0.5;

    // Discrete Chebyshev transform on the Lobatto grid:
    // c_k = 2/(M nu_k) * sum''_j g_j T_k(tau_j), nu_0 = nu_M = 2 else 1,
    // where sum'' halves the first and last terms.
    mats.xform.resize(n, n);
    for (Index k = 0; k < n; ++k) {
        const double nu = (k == 0 || k == m) ? 2.0 : 1.0;
        for (Index j = 0; j < n; ++j) {
            const double half = (j == 0 || j == m) ? 0.5 : 1.0;
            mats.xform(k, j) = 2.0 / (static_cast<double>(m) * nu) * half * tval(j, k);
        }
    }

    mats.integ = Mat::Zero(n, n);
    mats.integ(1, 0) = 1.0;
    if (n > 2) {
        mats.integ(1, 2) = -0.5;
    }
    for (Index k = 2; k <= m; ++k) {
        const double inv2k = 1.0 / (2.0 * static_cast<double>(k));
        mats.integ(k, k - 1) = inv2k;
        if (k + 1 <= m) {
            mats.integ(k, k + 1) = -inv2k;
        }
    }

    mats.a_op = mats.integ * mats.xform;

    mats.s_row.resize(m);
    for (Index k = 1; k <= m; ++k) {
        mats.s_row(k - 1) = (k % 2 == 0) ? -2.0 : 2.0;
    }

    mats.update_op = mats.eval * mats.a_op;
    RowVec s_full = RowVec::Zero(n);
    s_full.tail(m) = mats.s_row;
    mats.anchor_op = s_full * mats.a_op;
    return mats;
}

/// Process-wide cache: the operators are immutable and depend on N only,
/// so one copy per node count is shared by all segments and workers.
inline std::shared_ptr<const PCMatrices> cached_matrices(Index n_nodes) {
    static std::mutex mutex;
    static std::unordered_map<Index, std::shared_ptr<const PCMatrices>> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n_nodes);
    if (it == cache.end()) {
        it = cache.emplace(n_nodes,
                           std::make_shared<const PCMatrices>(build_matrices(n_nodes))).first;
    }
    return it->second;
}

/// One linear Picard update: given the omega2-scaled derivative samples F
/// (N rows, any column count) and the initial conditions, returns
/// Y = eval * B with B_0 = s_row * (a_op F)_{1..M} + 2 y_0 and
/// B_{1..M} = (a_op F)_{1..M}. Row 0 of the result reproduces the initial
/// row up to roundoff.
inline void picard_update_into(const PCMatrices& mats, const Mat& force_block,
                               const RowVec& initial_row, Mat& out,
                               ThreadPool* pool = nullptr) {
    const Index n = mats.n_nodes;
    if (force_block.rows() != n) {
        throw ShapeError("picard_update: force block has " + std::to_string(force_block.rows())
                         + " rows, expected " + std::to_string(n));
    }
    if (initial_row.cols() != force_block.cols()) {
        throw ShapeError("picard_update: initial row has " + std::to_string(initial_row.cols())
                         + " columns, force block has " + std::to_string(force_block.cols()));
    }
    out.resize(n, force_block.cols());
    // b0 collects the anchor row; eval's constant column is 1/2 everywhere,
    // so its contribution is a broadcast of b0/2 over all node rows.
    RowVec b0 = mats.anchor_op * force_block + 2.0 * initial_row;
    if (pool != nullptr && pool->size() > 1 && n >= 2 * static_cast<Index>(pool->size())) {
        // Disjoint row bands of the product; each band is a contiguous
        // slab of the row-major output.
        pool->parallel_chunks(n, [&](Index begin, Index end) {
            out.middleRows(begin, end - begin).noalias() =
                mats.update_op.middleRows(begin, end - begin) * force_block;
            out.middleRows(begin, end - begin).rowwise() += 0.5 * b0;
        });
    } else {
        out.noalias() = mats.update_op * force_block;
        out.rowwise() += 0.5 * b0;
    }
}

inline Mat picard_update(const PCMatrices& mats, const Mat& force_block,
                         const RowVec& initial_row, ThreadPool* pool = nullptr) {
    Mat out(force_block.rows(), force_block.cols());
    picard_update_into(mats, force_block, initial_row, out, pool);
    return out;
}

} // namespace pswarm
