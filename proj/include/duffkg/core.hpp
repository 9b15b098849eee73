// Phase-plane geometry of the damped focusing Duffing equation
//
//     u'' + gamma u' + u = u^3
//
// Energy E(u, v) = u^2/2 - u^4/4 + v^2/2 is nonincreasing along solutions and
// the saddles (+-1, 0) sit exactly on the level E = 1/4. That level splits the
// plane into the sub-threshold sets
//
//     K+ = { E < 1/4, |u| < 1 }   (global, decays to 0 when gamma > 0)
//     K- = { E < 1/4, |u| > 1 }   (finite-time blow-up)
//
// and the super-threshold set N = { E >= 1/4 }, which for v > 0 is further cut
// by u relative to -1 and +1 into N1 (u >= 1), N2 (-1 <= u < 1), N3 (u < -1).

#pragma once

#include <string_view>

namespace duffkg {

inline constexpr double kEnergyThreshold = 0.25;

/// A point (u, v) = (position, velocity) of the Duffing phase plane.
/// Both coordinates are finite; construction throws std::invalid_argument
/// otherwise.
class State {
public:
    State() = default;
    State(double u, double v);

    double u() const { return u_; }
    double v() const { return v_; }

    State operator-() const { return State(-u_, -v_); }
    bool operator==(const State&) const = default;

private:
    double u_ = 0.0;
    double v_ = 0.0;
};

/// Nonnegative damping coefficient.
class Damping {
public:
    Damping() = default;
    explicit Damping(double gamma);

    double value() const { return gamma_; }
    bool undamped() const { return gamma_ == 0.0; }

private:
    double gamma_ = 0.0;
};

enum class Region {
    KPlus,
    KMinus,
    N1,
    N2,
    N3,
    NBoundaryCurve,
    EquilibriumPlus,
    EquilibriumMinus,
    EquilibriumZero,
    NMirror,
};

std::string_view to_string(Region r);

double static_energy(double u);
double energy(const State& s);

/// Total labelling of the plane. Super-threshold states with v < 0 are
/// labelled NMirror; the v = 0, u != +-1 part of N (empty in exact arithmetic,
/// reachable through rounding) is NBoundaryCurve.
Region classify_region(const State& s);

bool in_sub_threshold(Region r);

/// Undamped orbit on the E = 1/4 shell starting at (u0, (1 - u0^2)/sqrt 2),
/// u0 in (-1, 1). It increases monotonically to the saddle u = 1.
/// Throws std::domain_error for u0 outside (-1, 1) or t < 0.
double threshold_solution(double u0, double t);

/// Nonnegative velocity at position u on the energy shell E = energy_level.
/// Throws std::domain_error when the shell does not reach u.
double velocity_on_energy_shell(double energy_level, double u);

}  // namespace duffkg
