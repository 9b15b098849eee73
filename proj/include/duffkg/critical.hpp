// Bisection for the critical damping values gamma0 < gamma1 and the critical
// velocity U1.
//
// Each search relies on the monotone interval structure of the fate as a
// function of the parameter: for data in N2 the blow-up set in gamma is
// [0, gamma0) and the decay set (gamma0, inf); for N3 the decay set is the
// open interval (gamma0, gamma1) with blow-up on both sides; for initial data
// (-1, u1) at fixed gamma > 0 decay holds on (0, U1) and blow-up on (U1, inf).
// Probes are classified with certificates only, so a bracket never rests on an
// Undetermined fate.

#pragma once

#include "duffkg/classifier.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace duffkg {

class SearchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Probe {
    double parameter = 0.0;
    FateKind kind = FateKind::Undetermined;
};

struct Bracket {
    double lo = 0.0;
    double hi = 0.0;
    FateKind lo_fate = FateKind::Undetermined;
    FateKind hi_fate = FateKind::Undetermined;
    double width_target = 0.0;
    /// Set when the threshold is known in closed form (lo == hi).
    bool exact = false;
    /// Every certified probe evaluated for this bracket, in evaluation order.
    std::vector<Probe> probes;
    double wall_time = 0.0;

    double midpoint() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
};

struct SearchOptions {
    IntegratorOptions integrator;  ///< t_max is rescaled per search
    double seed_epsilon = 1e-3;    ///< relative inflation of the explicit seed bounds
    int max_doublings = 40;
    int max_window_samples = 1024;  ///< N3: finest grid used to find a decay damping
};

/// Budget for probes near a threshold: 200 + 50 log10(initial / target width).
double scaled_t_max(double initial_width, double target_width);

/// Upper bound on gamma0 for data in N2: max(u1 / (1 - u0), u1).
double n2_gamma_upper_bound(const State& s0);

/// gamma0 for s0 in N2: lo_fate BlowUp, hi_fate DecayZero. Data on the
/// E = 1/4 shell returns the exact bracket gamma0 = 0.
/// Throws std::invalid_argument when s0 is not in N2, SearchError when a probe
/// stays Undetermined after one tighter retry or a seed has the wrong fate.
Bracket find_gamma0_n2(const State& s0, double width, const SearchOptions& opts = {});

struct N3Brackets {
    Bracket gamma0;  ///< BlowUp | DecayZero
    Bracket gamma1;  ///< DecayZero | BlowUp
};

/// Both critical dampings for s0 in N3 with E > 1/4.
N3Brackets find_gamma0_gamma1_n3(const State& s0, double width, const SearchOptions& opts = {});

/// Certified lower seed for U1 from the explicit constants gamma/4 and
/// 1/(4 sqrt 2) of the velocity lower bound near -1.
double u1_lower_seed(double gamma);

/// Upper bound C0(gamma) above which (-1, u1) reaches u = 1 by t = ln 2 / gamma
/// (comparison with v'' + gamma v' = -2/(3 sqrt 3)).
double u1_upper_bound(double gamma);

/// U1 for initial data (-1, u1): lo_fate DecayZero, hi_fate BlowUp.
Bracket find_u1(Damping gamma, double width, const SearchOptions& opts = {});

/// CSV header and row `u0,u1,target,lo,hi,midpoint,probes,wall_time`.
inline constexpr std::string_view kSearchCsvHeader = "u0,u1,target,lo,hi,midpoint,probes,wall_time";
std::string search_csv_row(double u0, double u1, std::string_view target, const Bracket& b);

}  // namespace duffkg
