#include "duffkg/core.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace duffkg {

State::State(double u, double v) : u_(u), v_(v) {
    if (!std::isfinite(u) || !std::isfinite(v)) {
        throw std::invalid_argument("State: coordinates must be finite");
    }
}

Damping::Damping(double gamma) : gamma_(gamma) {
    if (!std::isfinite(gamma) || gamma < 0.0) {
        throw std::invalid_argument("Damping: gamma must be finite and >= 0");
    }
}

std::string_view to_string(Region r) {
    switch (r) {
        case Region::KPlus: return "KPlus";
        case Region::KMinus: return "KMinus";
        case Region::N1: return "N1";
        case Region::N2: return "N2";
        case Region::N3: return "N3";
        case Region::NBoundaryCurve: return "NBoundaryCurve";
        case Region::EquilibriumPlus: return "EquilibriumPlus";
        case Region::EquilibriumMinus: return "EquilibriumMinus";
        case Region::EquilibriumZero: return "EquilibriumZero";
        case Region::NMirror: return "NMirror";
    }
    return "?";
}

double static_energy(double u) {
    const double u2 = u * u;
    return u2 / 2.0 - u2 * u2 / 4.0;
}

double energy(const State& s) {
    return static_energy(s.u()) + s.v() * s.v() / 2.0;
}

Region classify_region(const State& s) {
    const double u = s.u();
    const double v = s.v();
    if (v == 0.0) {
        if (u == 1.0) return Region::EquilibriumPlus;
        if (u == -1.0) return Region::EquilibriumMinus;
        if (u == 0.0) return Region::EquilibriumZero;
    }
    const double e = energy(s);
    if (e < kEnergyThreshold) {
        // |u| == 1 cannot occur here: E(+-1, v) >= 1/4.
        return std::abs(u) < 1.0 ? Region::KPlus : Region::KMinus;
    }
    if (v > 0.0) {
        if (u >= 1.0) return Region::N1;
        if (u >= -1.0) return Region::N2;
        return Region::N3;
    }
    if (v < 0.0) return Region::NMirror;
    return Region::NBoundaryCurve;
}

bool in_sub_threshold(Region r) {
    return r == Region::KPlus || r == Region::KMinus;
}

double threshold_solution(double u0, double t) {
    if (!(u0 > -1.0 && u0 < 1.0)) {
        throw std::domain_error("threshold_solution: u0 must lie in (-1, 1)");
    }
    if (!(t >= 0.0)) {
        throw std::domain_error("threshold_solution: t must be >= 0");
    }
    const double decay = std::exp(-t * std::numbers::sqrt2);
    return 1.0 - 2.0 * (1.0 - u0) * decay / (1.0 + u0 + (1.0 - u0) * decay);
}

double velocity_on_energy_shell(double energy_level, double u) {
    const double radicand = 2.0 * energy_level - u * u + u * u * u * u / 2.0;
    if (radicand < 0.0) {
        throw std::domain_error("velocity_on_energy_shell: shell does not reach u");
    }
    return std::sqrt(radicand);
}

}  // namespace duffkg
