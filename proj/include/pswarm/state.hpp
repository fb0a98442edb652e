#pragma once

#include <cmath>

#include "pswarm/types.hpp"

namespace pswarm {

/// One trajectory sample: epoch in seconds past J2000, position in km,
/// velocity in km/s.
struct StateVector {
    double epoch = 0.0;
    Vec3 r = Vec3::Zero();
    Vec3 v = Vec3::Zero();
};

inline bool is_finite(const StateVector& s) {
    return std::isfinite(s.epoch) && s.r.allFinite() && s.v.allFinite();
}

/// v^2/2 - mu/|r|, km^2/s^2.
inline double specific_energy(const StateVector& s, double mu) {
    return 0.5 * s.v.squaredNorm() - mu / s.r.norm();
}

inline Vec3 angular_momentum(const StateVector& s) {
    return s.r.cross(s.v);
}

} // namespace pswarm
