#include "duffkg/critical.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>

namespace duffkg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string describe(const State& s) {
    std::ostringstream os;
    os.precision(17);
    os << "(" << s.u() << ", " << s.v() << ")";
    return os.str();
}

// One certified probe; Undetermined gets a single retry at 10x tighter
// tolerances before the search gives up.
class Prober {
public:
    Prober(IntegratorOptions opts, Bracket& record) : opts_(std::move(opts)), record_(record) {}

    FateKind operator()(const State& s0, double gamma, double parameter) {
        Fate f = classify_fate(s0, Damping(gamma), opts_);
        if (f.kind == FateKind::Undetermined) {
            IntegratorOptions tight = opts_;
            tight.rel_tol /= 10.0;
            tight.abs_tol /= 10.0;
            f = classify_fate(s0, Damping(gamma), tight);
        }
        if (f.kind == FateKind::Undetermined) {
            std::ostringstream os;
            os.precision(17);
            os << "probe undetermined after retry: s0=" << describe(s0) << " gamma=" << gamma
               << " certificate=" << to_string(f.certificate) << " t=" << f.cert_time;
            throw SearchError(os.str());
        }
        record_.probes.push_back(Probe{parameter, f.kind});
        return f.kind;
    }

private:
    IntegratorOptions opts_;
    Bracket& record_;
};

void expect_fate(FateKind got, FateKind want, const char* what, double parameter) {
    if (got == want) return;
    std::ostringstream os;
    os.precision(17);
    os << what << " at " << parameter << ": expected " << to_string(want) << ", got " << to_string(got);
    throw SearchError(os.str());
}

// Shrinks [b.lo, b.hi] to the target width; probe(p) must return lo_fate or hi_fate.
template <class ProbeFn>
void bisect(Bracket& b, ProbeFn&& probe) {
    while (b.hi - b.lo > b.width_target) {
        const double mid = b.midpoint();
        if (mid <= b.lo || mid >= b.hi) break;  // no representable midpoint left
        const FateKind k = probe(mid);
        if (k == b.lo_fate) {
            b.lo = mid;
        } else if (k == b.hi_fate) {
            b.hi = mid;
        } else {
            std::ostringstream os;
            os.precision(17);
            os << "fate " << to_string(k) << " at " << mid << " breaks the bracket [" << b.lo << ", " << b.hi
               << "]";
            throw SearchError(os.str());
        }
    }
}

void check_width(double width) {
    if (!(width > 0.0) || !std::isfinite(width)) throw std::invalid_argument("search width must be positive");
}

IntegratorOptions probe_options(const SearchOptions& opts, double initial_width, double width) {
    IntegratorOptions io = opts.integrator;
    io.t_max = std::max(io.t_max, scaled_t_max(initial_width, width));
    return io;
}

}  // namespace

double scaled_t_max(double initial_width, double target_width) {
    const double ratio = initial_width / target_width;
    return 200.0 + 50.0 * std::log10(std::max(ratio, 1.0));
}

double n2_gamma_upper_bound(const State& s0) {
    return std::max(s0.v() / (1.0 - s0.u()), s0.v());
}

Bracket find_gamma0_n2(const State& s0, double width, const SearchOptions& opts) {
    check_width(width);
    const bool on_shell = std::abs(energy(s0) - kEnergyThreshold) <= kShellTolerance;
    if (classify_region(s0) != Region::N2 && !(on_shell && s0.v() > 0.0 && std::abs(s0.u()) < 1.0)) {
        throw std::invalid_argument("find_gamma0_n2: initial state " + describe(s0) + " is not in N2");
    }
    const auto t0 = Clock::now();
    Bracket b;
    b.width_target = width;

    if (on_shell) {
        // On the threshold shell the undamped flow is the heteroclinic to +1.
        b.exact = true;
        b.lo_fate = FateKind::ConvergePlus;
        b.hi_fate = FateKind::DecayZero;
        b.wall_time = seconds_since(t0);
        return b;
    }

    b.lo = 0.0;
    b.hi = n2_gamma_upper_bound(s0) * (1.0 + opts.seed_epsilon);
    b.lo_fate = FateKind::BlowUp;
    b.hi_fate = FateKind::DecayZero;

    Prober probe(probe_options(opts, b.hi - b.lo, width), b);
    expect_fate(probe(s0, b.lo, b.lo), FateKind::BlowUp, "gamma0 lower seed", b.lo);
    expect_fate(probe(s0, b.hi, b.hi), FateKind::DecayZero, "gamma0 upper seed", b.hi);
    bisect(b, [&](double g) { return probe(s0, g, g); });

    b.wall_time = seconds_since(t0);
    return b;
}

N3Brackets find_gamma0_gamma1_n3(const State& s0, double width, const SearchOptions& opts) {
    check_width(width);
    const bool on_shell = std::abs(energy(s0) - kEnergyThreshold) <= kShellTolerance;
    if (classify_region(s0) != Region::N3 && !(on_shell && s0.v() > 0.0 && s0.u() < -1.0)) {
        throw std::invalid_argument("find_gamma0_gamma1_n3: initial state " + describe(s0) + " is not in N3");
    }
    if (on_shell) {
        throw std::invalid_argument("find_gamma0_gamma1_n3: E = 1/4 has no decay window "
                                    "(gamma = 0 converges to -1, every gamma > 0 blows up)");
    }
    const auto t0 = Clock::now();
    N3Brackets out;
    Bracket& b0 = out.gamma0;
    Bracket& b1 = out.gamma1;
    b0.width_target = b1.width_target = width;
    b0.lo_fate = FateKind::BlowUp;
    b0.hi_fate = FateKind::DecayZero;
    b1.lo_fate = FateKind::DecayZero;
    b1.hi_fate = FateKind::BlowUp;

    // Past u1 / (-1 - u0) the solution cannot reach u = -1 and blows up to the left.
    double top = s0.v() / (-1.0 - s0.u()) * (1.0 + opts.seed_epsilon);
    Prober seed_probe(probe_options(opts, top, width), b1);
    int doublings = 0;
    while (seed_probe(s0, top, top) != FateKind::BlowUp) {
        if (++doublings > opts.max_doublings) throw SearchError("gamma1 upper seed: no blow-up found by doubling");
        top *= 2.0;
    }
    const IntegratorOptions io = probe_options(opts, top, width);
    Prober probe0(io, b0);
    Prober probe1(io, b1);

    expect_fate(probe0(s0, 0.0, 0.0), FateKind::BlowUp, "gamma0 lower seed", 0.0);

    // Locate one damping inside the decay window on successively finer grids.
    double inside = -1.0;
    for (int n = 8; n <= opts.max_window_samples && inside < 0.0; n *= 2) {
        for (int i = 1; i < n; i += (n == 8 ? 1 : 2)) {  // finer grids only visit new points
            const double g = top * i / n;
            const FateKind k = probe0(s0, g, g);
            if (k == FateKind::DecayZero) {
                inside = g;
                break;
            }
            if (k != FateKind::BlowUp) throw SearchError("unexpected fate while scanning the N3 window");
        }
    }
    if (inside < 0.0) throw SearchError("no decaying damping found between gamma0 and gamma1");

    b0.lo = 0.0;
    b0.hi = inside;
    // Grid probes below `inside` all blew up; reuse the largest as the lower end.
    for (const auto& p : b0.probes) {
        if (p.kind == FateKind::BlowUp && p.parameter < inside) b0.lo = std::max(b0.lo, p.parameter);
    }
    b1.lo = inside;
    b1.hi = top;
    bisect(b0, [&](double g) { return probe0(s0, g, g); });
    bisect(b1, [&](double g) { return probe1(s0, g, g); });

    b0.wall_time = b1.wall_time = seconds_since(t0);
    return out;
}

double u1_lower_seed(double gamma) {
    const double g1 = std::min(gamma, 1.0);
    const double gmax = std::max(gamma, 1.0);
    return g1 * std::min(0.25, 1.0 / (4.0 * std::sqrt(2.0) * gmax));
}

double u1_upper_bound(double gamma) {
    const double c = 2.0 / (3.0 * std::sqrt(3.0));
    return 4.0 * gamma + 2.0 * c * (std::log(2.0) - 0.5) / gamma;
}

Bracket find_u1(Damping gamma, double width, const SearchOptions& opts) {
    check_width(width);
    const double g = gamma.value();
    if (!(g > 0.0)) throw std::invalid_argument("find_u1: gamma must be positive");
    const auto t0 = Clock::now();
    Bracket b;
    b.width_target = width;
    b.lo_fate = FateKind::DecayZero;
    b.hi_fate = FateKind::BlowUp;

    const double cap = u1_upper_bound(g) * (1.0 + opts.seed_epsilon);
    const auto at = [](double u1) { return State(-1.0, u1); };

    Prober seed_probe(probe_options(opts, cap, width), b);
    b.lo = u1_lower_seed(g) * (1.0 - opts.seed_epsilon);
    expect_fate(seed_probe(at(b.lo), g, b.lo), FateKind::DecayZero, "U1 lower seed", b.lo);

    b.hi = std::min(2.0 * b.lo, cap);
    int doublings = 0;
    for (;;) {
        const FateKind k = seed_probe(at(b.hi), g, b.hi);
        if (k == FateKind::BlowUp) break;
        expect_fate(k, FateKind::DecayZero, "U1 doubling", b.hi);
        if (b.hi >= cap) throw SearchError("U1 upper seed: no blow-up at the explicit bound C0(gamma)");
        if (++doublings > opts.max_doublings) throw SearchError("U1 upper seed: doubling limit reached");
        b.lo = b.hi;
        b.hi = std::min(2.0 * b.hi, cap);
    }

    Prober probe(probe_options(opts, b.hi - b.lo, width), b);
    bisect(b, [&](double u1) { return probe(at(u1), g, u1); });
    b.wall_time = seconds_since(t0);
    return b;
}

std::string search_csv_row(double u0, double u1, std::string_view target, const Bracket& b) {
    char buf[320];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%s,%.17g,%.17g,%.17g,%zu,%.6f", u0, u1, std::string(target).c_str(),
                  b.lo, b.hi, b.midpoint(), b.probes.size(), b.wall_time);
    return buf;
}

}  // namespace duffkg
