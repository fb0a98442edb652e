#pragma once

#include <algorithm>
#include <bit>
#include <span>
#include <vector>

#include "pswarm/errors.hpp"
#include "pswarm/thread_pool.hpp"
#include "pswarm/types.hpp"

namespace pswarm {

/// Depth of the cooperative reduction tree over n elements, counting the
/// leaf level: ceil(log2(n)) + 1. 16 elements reduce in 5 levels.
inline int reduction_levels(std::size_t n) {
    if (n == 0) {
        throw EmptyReductionError("reduction_levels: empty input");
    }
    return static_cast<int>(std::bit_width(n - 1)) + 1;
}

/// Sequential scan maximum.
inline double reduce_max(std::span<const double> values) {
    if (values.empty()) {
        throw EmptyReductionError("reduce_max: empty input");
    }
    double best = values[0];
    for (double v : values.subspan(1)) {
        best = std::max(best, v);
    }
    return best;
}

/// Tree reduction: pairwise rounds until a single value remains, with the
/// pairs of each round optionally split over the pool. max is associative
/// and commutative, so the result always equals the sequential scan.
inline double reduce_max_tree(std::span<const double> values, ThreadPool* pool = nullptr) {
    if (values.empty()) {
        throw EmptyReductionError("reduce_max_tree: empty input");
    }
    std::vector<double> buf(values.begin(), values.end());
    Index len = static_cast<Index>(buf.size());
    while (len > 1) {
        const Index pairs = len / 2;
        auto merge = [&](Index begin, Index end) {
            for (Index i = begin; i < end; ++i) {
                buf[static_cast<std::size_t>(i)] =
                    std::max(buf[static_cast<std::size_t>(2 * i)],
                             buf[static_cast<std::size_t>(2 * i + 1)]);
            }
        };
        if (pool != nullptr && pool->size() > 1 && pairs >= 1024) {
            pool->parallel_chunks(pairs, merge);
        } else {
            merge(0, pairs);
        }
        if (len % 2 == 1) {
            buf[static_cast<std::size_t>(pairs)] = buf[static_cast<std::size_t>(len - 1)];
            len = pairs + 1;
        } else {
            len = pairs;
        }
    }
    return buf[0];
}

} // namespace pswarm
