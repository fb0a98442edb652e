#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pswarm/chebyshev.hpp"
#include "pswarm/errors.hpp"
#include "pswarm/kepler.hpp"
#include "pswarm/types.hpp"

namespace pswarm {

/// One fitted span of a tabulated body ephemeris: plain Chebyshev series
/// per Cartesian component over t in [t_start, t_end].
struct ChebyshevSegment {
    double t_start = 0.0;
    double t_end = 0.0;
    Vec coeffs_x;
    Vec coeffs_y;
    Vec coeffs_z;

    Vec3 position_at(double t) const {
        const double tau = (2.0 * t - (t_start + t_end)) / (t_end - t_start);
        return Vec3(clenshaw(coeffs_x, tau), clenshaw(coeffs_y, tau), clenshaw(coeffs_z, tau));
    }

    static double clenshaw(const Vec& c, double x) {
        double b1 = 0.0;
        double b2 = 0.0;
        for (Index k = c.size() - 1; k >= 1; --k) {
            const double b0 = c[k] + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        return c[0] + x * b1 - b2;
    }
};

/// Ordered, gap-free list of segments.
struct ChebyshevEphemeris {
    std::vector<ChebyshevSegment> segments;
};

/// A perturbing body: gravitational parameter plus either analytic elements
/// or a tabulated Chebyshev ephemeris.
struct BodySpec {
    std::string name;
    double mu = 0.0;
    std::variant<OrbitalElements, ChebyshevEphemeris> ephemeris;
};

/// Body position at an arbitrary epoch. The analytic provider propagates the
/// stored elements with the central gravitational parameter; the tabulated
/// provider evaluates the covering segment and reports a coverage error
/// (with the offending epoch) outside its span.
inline Vec3 body_position(const BodySpec& body, double central_mu, double t) {
    if (const auto* elements = std::get_if<OrbitalElements>(&body.ephemeris)) {
        return elements_to_state(*elements, central_mu, t).r;
    }
    const auto& table = std::get<ChebyshevEphemeris>(body.ephemeris);
    for (const auto& seg : table.segments) {
        const bool forward = seg.t_start <= seg.t_end;
        if ((forward && t >= seg.t_start && t <= seg.t_end)
            || (!forward && t <= seg.t_start && t >= seg.t_end)) {
            return seg.position_at(t);
        }
    }
    throw CoverageError("ephemeris for body '" + body.name + "' does not cover epoch "
                        + std::to_string(t),
                        t);
}

/// Per-node frozen body positions for one segment's Picard iterations.
/// node_times is copied verbatim from the active grid.
struct EphemerisTable {
    Vec node_times;
    double central_mu = 0.0;
    std::vector<std::string> body_names;
    std::vector<double> body_mus;
    std::vector<Mat> body_positions; // one N x 3 matrix per body

    Index n_bodies() const { return static_cast<Index>(body_mus.size()); }
};

/// Evaluates every body once per node and freezes the result for the
/// segment, so the iteration loop never re-reads ephemerides.
inline EphemerisTable build_ephemeris_cache(const std::vector<BodySpec>& bodies,
                                            const ChebyshevGrid& grid, double central_mu) {
    EphemerisTable table;
    table.node_times = grid.times;
    table.central_mu = central_mu;
    table.body_names.reserve(bodies.size());
    table.body_mus.reserve(bodies.size());
    table.body_positions.reserve(bodies.size());
    for (const auto& body : bodies) {
        Mat pos(grid.n_nodes, 3);
        for (Index j = 0; j < grid.n_nodes; ++j) {
            pos.row(j) = body_position(body, central_mu, grid.times[j]).transpose();
        }
        table.body_names.push_back(body.name);
        table.body_mus.push_back(body.mu);
        table.body_positions.push_back(std::move(pos));
    }
    return table;
}

/// Fits one Chebyshev segment to a position function by Lobatto sampling
/// and the discrete Chebyshev transform. Intended for building tabulated
/// ephemerides from analytic or external sources.
template <typename PositionFn>
ChebyshevSegment fit_chebyshev_segment(PositionFn&& position, double t_start, double t_end,
                                       Index n_coeffs) {
    if (n_coeffs < 3) {
        throw InvalidSizeError("fit_chebyshev_segment: need at least 3 coefficients");
    }
    if (t_start == t_end) {
        throw InvalidSpanError("fit_chebyshev_segment: degenerate span");
    }
    const Index n = n_coeffs;
    const Index m = n - 1;
    const Vec tau = chebyshev_lobatto_nodes(n);
    Mat samples(n, 3);
    for (Index j = 0; j < n; ++j) {
        const double t = 0.5 * (t_end - t_start) * tau[j] + 0.5 * (t_end + t_start);
        samples.row(j) = position(t).transpose();
    }
    Mat tval(n, n);
    for (Index j = 0; j < n; ++j) {
        chebyshev_values(tau[j], tval.row(j).data(), n);
    }
    ChebyshevSegment seg;
    seg.t_start = t_start;
    seg.t_end = t_end;
    seg.coeffs_x.resize(n);
    seg.coeffs_y.resize(n);
    seg.coeffs_z.resize(n);
    for (Index k = 0; k < n; ++k) {
        const double nu = (k == 0 || k == m) ? 2.0 : 1.0;
        Vec3 acc = Vec3::Zero();
        for (Index j = 0; j < n; ++j) {
            const double half = (j == 0 || j == m) ? 0.5 : 1.0;
            acc += half * tval(j, k) * samples.row(j).transpose();
        }
        acc *= 2.0 / (static_cast<double>(m) * nu);
        seg.coeffs_x[k] = acc.x();
        seg.coeffs_y[k] = acc.y();
        seg.coeffs_z[k] = acc.z();
    }
    return seg;
}

} // namespace pswarm
