#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "pswarm/errors.hpp"
#include "pswarm/state.hpp"

namespace pswarm {

/// Classical elements of a bound heliocentric/planetocentric orbit.
/// Lengths in km, angles in radians, epoch in seconds past J2000.
struct OrbitalElements {
    double a = 0.0;
    double e = 0.0;
    double i = 0.0;
    double raan = 0.0;
    double argp = 0.0;
    double m0 = 0.0;
    double epoch = 0.0;
};

/// Solves E - e sin E = M by Newton iteration to 1e-14 on the anomaly.
/// M may span multiple revolutions; the returned E keeps the same branch.
inline double solve_kepler(double mean_anomaly, double eccentricity) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double m_wrapped = std::remainder(mean_anomaly, two_pi);
    // Near-parabolic cases stall when started at M, start at +-pi instead.
    double e_anom = (eccentricity < 0.8) ? m_wrapped : std::copysign(std::numbers::pi, m_wrapped);
    for (int it = 0; it < 50; ++it) {
        const double f = e_anom - eccentricity * std::sin(e_anom) - m_wrapped;
        const double fp = 1.0 - eccentricity * std::cos(e_anom);
        const double step = f / fp;
        e_anom -= step;
        if (std::abs(step) <= 1e-14) {
            return e_anom + (mean_anomaly - m_wrapped);
        }
    }
    throw SolverError("solve_kepler: Newton iteration did not converge for M = "
                      + std::to_string(mean_anomaly) + ", e = " + std::to_string(eccentricity));
}

/// 2 pi sqrt(a^3/mu) of the osculating conic; requires a bound state.
inline double osculating_period(const StateVector& s, double mu) {
    const double energy = specific_energy(s, mu);
    if (!(energy < 0.0)) {
        throw NonEllipticError("osculating_period: state is not bound (specific energy "
                               + std::to_string(energy) + " km^2/s^2)");
    }
    const double a = -mu / (2.0 * energy);
    return 2.0 * std::numbers::pi * std::sqrt(a * a * a / mu);
}

/// Conic propagation by dt seconds: eccentric-anomaly Kepler solve plus
/// Lagrange f-and-g reconstruction. Elliptic orbits only; hyperbolic or
/// near-parabolic states raise NonEllipticError so callers can fall back
/// to a cold start.
inline StateVector kepler_propagate(const StateVector& s, double mu, double dt) {
    const double r0n = s.r.norm();
    if (!(r0n > 0.0)) {
        throw SingularityError("kepler_propagate: zero-radius state");
    }
    const double energy = 0.5 * s.v.squaredNorm() - mu / r0n;
    if (!(energy < 0.0)) {
        throw NonEllipticError("kepler_propagate: specific energy " + std::to_string(energy)
                               + " km^2/s^2 is not negative");
    }
    if (dt == 0.0) {
        return s;
    }
    const double a = -mu / (2.0 * energy);
    const double mean_motion = std::sqrt(mu / (a * a * a));
    const double e_sin_e0 = s.r.dot(s.v) / std::sqrt(mu * a);
    const double e_cos_e0 = 1.0 - r0n / a;
    const double ecc = std::hypot(e_sin_e0, e_cos_e0);
    if (ecc >= 1.0 - 1e-8) {
        throw NonEllipticError("kepler_propagate: eccentricity " + std::to_string(ecc)
                               + " too close to parabolic");
    }
    const double e0 = std::atan2(e_sin_e0, e_cos_e0);
    const double m0 = e0 - e_sin_e0;
    const double e1 = solve_kepler(m0 + mean_motion * dt, ecc);

    const double de = e1 - e0;
    const double cos_de = std::cos(de);
    const double sin_de = std::sin(de);
    const double f = 1.0 - (a / r0n) * (1.0 - cos_de);
    const double g = dt + (sin_de - de) / mean_motion;

    StateVector out;
    out.epoch = s.epoch + dt;
    out.r = f * s.r + g * s.v;
    const double r1n = a * (1.0 - ecc * std::cos(e1));
    const double fdot = -std::sqrt(mu * a) * sin_de / (r1n * r0n);
    const double gdot = 1.0 - (a / r1n) * (1.0 - cos_de);
    out.v = fdot * s.r + gdot * s.v;
    return out;
}

/// Perifocal-to-inertial state at epoch t from classical elements.
inline StateVector elements_to_state(const OrbitalElements& el, double mu, double t) {
    if (!(el.a > 0.0) || el.e < 0.0 || el.e >= 1.0 - 1e-8) {
        throw NonEllipticError("elements_to_state: elements do not define a bound conic (a = "
                               + std::to_string(el.a) + ", e = " + std::to_string(el.e) + ")");
    }
    const double mean_motion = std::sqrt(mu / (el.a * el.a * el.a));
    const double e_anom = solve_kepler(el.m0 + mean_motion * (t - el.epoch), el.e);
    const double ce = std::cos(e_anom);
    const double se = std::sin(e_anom);
    const double beta = std::sqrt(1.0 - el.e * el.e);
    const double rn = el.a * (1.0 - el.e * ce);

    const double xp = el.a * (ce - el.e);
    const double yp = el.a * beta * se;
    const double vscale = std::sqrt(mu * el.a) / rn;
    const double vxp = -vscale * se;
    const double vyp = vscale * beta * ce;

    const double co = std::cos(el.raan), so = std::sin(el.raan);
    const double ci = std::cos(el.i), si = std::sin(el.i);
    const double cw = std::cos(el.argp), sw = std::sin(el.argp);
    const Vec3 p(co * cw - so * sw * ci, so * cw + co * sw * ci, sw * si);
    const Vec3 q(-co * sw - so * cw * ci, -so * sw + co * cw * ci, cw * si);

    StateVector out;
    out.epoch = t;
    out.r = xp * p + yp * q;
    out.v = vxp * p + vyp * q;
    return out;
}

} // namespace pswarm
