#include "duffkg/ode.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace duffkg {

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::EnteredKPlus: return "EnteredKPlus";
        case EventKind::EnteredKMinus: return "EnteredKMinus";
        case EventKind::CrossedEnergyQuarter: return "CrossedEnergyQuarter";
        case EventKind::BlowupThreshold: return "BlowupThreshold";
        case EventKind::VelocitySignChange: return "VelocitySignChange";
    }
    return "?";
}

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::TimeBudget: return "TimeBudget";
        case StopReason::BlowupThreshold: return "BlowupThreshold";
        case StopReason::RequestedEvent: return "RequestedEvent";
        case StopReason::Predicate: return "Predicate";
        case StopReason::StepUnderflow: return "StepUnderflow";
    }
    return "?";
}

void IntegratorOptions::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
        throw std::invalid_argument("IntegratorOptions: tolerances must be > 0");
    }
    if (!(blowup_threshold > 2.0)) {
        throw std::invalid_argument("IntegratorOptions: blowup_threshold must be > 2");
    }
    if (!(t_max > 0.0)) throw std::invalid_argument("IntegratorOptions: t_max must be > 0");
    if (!(max_step > 0.0)) throw std::invalid_argument("IntegratorOptions: max_step must be > 0");
}

std::optional<Event> Trajectory::first_event(EventKind kind) const {
    for (const auto& e : events_) {
        if (e.kind == kind) return e;
    }
    return std::nullopt;
}

namespace {

using Vec = std::array<double, 3>;  // u, v, dissipation

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer & Wanner, DOPRI5 contd5).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct Rhs {
    double gamma;
    Vec operator()(const Vec& y) const {
        const double u = y[0];
        const double v = y[1];
        return {v, u * u * u - u - gamma * v, gamma * v * v};
    }
};

Vec axpy(const Vec& y, double h, std::initializer_list<std::pair<double, const Vec*>> terms) {
    Vec out = y;
    for (std::size_t i = 0; i < 3; ++i) {
        double acc = 0.0;
        for (const auto& [coef, k] : terms) acc += coef * (*k)[i];
        out[i] += h * acc;
    }
    return out;
}

// Dense output on one accepted step.
struct Dense {
    double t0 = 0.0;
    double h = 0.0;
    std::array<Vec, 5> r{};

    Vec at(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        Vec y{};
        for (std::size_t i = 0; i < 3; ++i) {
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        return y;
    }
};

Sample to_sample(double t, const Vec& y) { return Sample{t, State(y[0], y[1]), y[2]}; }

// Root of g on [a, b] given opposite signs at the ends, polished to 1e-12.
template <class G>
double polish_root(G g, double a, double b, double ga, double gb) {
    if (ga == 0.0) return a;
    if (gb == 0.0) return b;
    std::uintmax_t iters = 200;
    auto tol = [](double lo, double hi) { return std::abs(hi - lo) <= 1e-12; };
    const auto [lo, hi] = boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, iters);
    return 0.5 * (lo + hi);
}

struct PendingEvent {
    double t;
    EventKind kind;
    Vec y;
};

bool requested(const IntegratorOptions& opts, EventKind k) {
    return std::find(opts.stop_on.begin(), opts.stop_on.end(), k) != opts.stop_on.end();
}

double energy_of(const Vec& y) { return energy(State(y[0], y[1])); }

}  // namespace

Trajectory integrate(const State& s0, Damping gamma, const IntegratorOptions& opts) {
    opts.validate();
    Trajectory traj;
    traj.gamma_ = gamma.value();
    const Rhs f{gamma.value()};

    double t = 0.0;
    Vec y{s0.u(), s0.v(), 0.0};
    traj.samples_.push_back(to_sample(t, y));

    const Region r0 = classify_region(s0);
    if (r0 == Region::KPlus || r0 == Region::KMinus) {
        const auto kind = r0 == Region::KPlus ? EventKind::EnteredKPlus : EventKind::EnteredKMinus;
        traj.events_.push_back(Event{0.0, kind, s0});
        if (requested(opts, kind)) {
            traj.stop_reason_ = StopReason::RequestedEvent;
            return traj;
        }
    }
    if (std::abs(s0.u()) >= opts.blowup_threshold) {
        traj.events_.push_back(Event{0.0, EventKind::BlowupThreshold, s0});
        traj.stop_reason_ = StopReason::BlowupThreshold;
        return traj;
    }
    if (opts.stop_when && opts.stop_when(traj.samples_.back())) {
        traj.stop_reason_ = StopReason::Predicate;
        return traj;
    }

    auto error_norm = [&](const Vec& y0, const Vec& y1, const Vec& err) {
        double acc = 0.0;
        for (std::size_t i = 0; i < 3; ++i) {
            const double sc = opts.abs_tol + opts.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
            acc += (err[i] / sc) * (err[i] / sc);
        }
        return std::sqrt(acc / 3.0);
    };

    Vec k1 = f(y);
    double h = std::min({opts.max_step, 1e-3, opts.t_max});
    const double uround = std::numeric_limits<double>::epsilon();

    while (t < opts.t_max) {
        if (h <= 10.0 * uround * std::max(1.0, std::abs(t))) {
            traj.stop_reason_ = StopReason::StepUnderflow;
            return traj;
        }
        h = std::min(h, opts.max_step);
        if (t + h > opts.t_max) h = opts.t_max - t;

        const Vec y2 = axpy(y, h, {{a21, &k1}});
        const Vec k2 = f(y2);
        const Vec y3 = axpy(y, h, {{a31, &k1}, {a32, &k2}});
        const Vec k3 = f(y3);
        const Vec y4 = axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
        const Vec k4 = f(y4);
        const Vec y5 = axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
        const Vec k5 = f(y5);
        const Vec y6 = axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
        const Vec k6 = f(y6);
        const Vec y1 = axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
        const Vec k7 = f(y1);

        Vec err{};
        for (std::size_t i = 0; i < 3; ++i) {
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                          e7 * k7[i]);
        }
        bool finite = true;
        for (double x : y1) finite = finite && std::isfinite(x);
        const double en = finite ? error_norm(y, y1, err) : std::numeric_limits<double>::infinity();

        if (!(en <= 1.0)) {
            const double fac = std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.2;
            h *= fac;
            continue;
        }

        Dense dense;
        dense.t0 = t;
        dense.h = h;
        for (std::size_t i = 0; i < 3; ++i) {
            const double diff = y1[i] - y[i];
            const double bspl = h * k1[i] - diff;
            dense.r[0][i] = y[i];
            dense.r[1][i] = diff;
            dense.r[2][i] = bspl;
            dense.r[3][i] = diff - h * k7[i] - bspl;
            dense.r[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                                 d7 * k7[i]);
        }
        const double t1 = t + h;

        // Event scan on [t, t1].
        std::vector<PendingEvent> pending;
        {
            auto gE = [&](double s) { return energy_of(dense.at(s)) - kEnergyThreshold; };
            const double g0 = energy_of(y) - kEnergyThreshold;
            const double g1 = energy_of(y1) - kEnergyThreshold;
            const bool down = g0 >= 0.0 && g1 < 0.0;
            const bool up = g0 < 0.0 && g1 >= 0.0;
            if (down || up) {
                const double tc = polish_root(gE, t, t1, g0, g1);
                const Vec yc = dense.at(tc);
                pending.push_back({tc, EventKind::CrossedEnergyQuarter, yc});
                if (down) {
                    const Region r = classify_region(State(y1[0], y1[1]));
                    if (r == Region::KPlus) pending.push_back({tc, EventKind::EnteredKPlus, yc});
                    if (r == Region::KMinus) pending.push_back({tc, EventKind::EnteredKMinus, yc});
                }
            }
        }
        if ((y[1] > 0.0 && y1[1] <= 0.0) || (y[1] < 0.0 && y1[1] >= 0.0)) {
            auto gv = [&](double s) { return dense.at(s)[1]; };
            const double tc = polish_root(gv, t, t1, y[1], y1[1]);
            pending.push_back({tc, EventKind::VelocitySignChange, dense.at(tc)});
        }
        if (std::abs(y1[0]) >= opts.blowup_threshold) {
            auto gb = [&](double s) { return std::abs(dense.at(s)[0]) - opts.blowup_threshold; };
            const double tc =
                polish_root(gb, t, t1, std::abs(y[0]) - opts.blowup_threshold,
                            std::abs(y1[0]) - opts.blowup_threshold);
            pending.push_back({tc, EventKind::BlowupThreshold, dense.at(tc)});
        }
        std::stable_sort(pending.begin(), pending.end(),
                         [](const PendingEvent& a, const PendingEvent& b) { return a.t < b.t; });

        for (std::size_t i = 0; i < pending.size(); ++i) {
            const auto& p = pending[i];
            traj.events_.push_back(Event{p.t, p.kind, State(p.y[0], p.y[1])});
            const bool stop = p.kind == EventKind::BlowupThreshold || requested(opts, p.kind);
            if (!stop) continue;
            // Simultaneous events (a K+/K- entry and its energy crossing) are all kept.
            for (std::size_t j = i + 1; j < pending.size() && pending[j].t == p.t; ++j) {
                const auto& q = pending[j];
                traj.events_.push_back(Event{q.t, q.kind, State(q.y[0], q.y[1])});
            }
            if (p.t > t) traj.samples_.push_back(to_sample(p.t, p.y));
            traj.stop_reason_ = p.kind == EventKind::BlowupThreshold ? StopReason::BlowupThreshold
                                                                     : StopReason::RequestedEvent;
            return traj;
        }

        t = t1;
        y = y1;
        k1 = k7;
        traj.samples_.push_back(to_sample(t, y));
        if (opts.stop_when && opts.stop_when(traj.samples_.back())) {
            traj.stop_reason_ = StopReason::Predicate;
            return traj;
        }

        const double fac = en > 0.0 ? std::clamp(0.9 * std::pow(en, -0.2), 0.2, 10.0) : 10.0;
        h *= fac;
    }
    traj.stop_reason_ = StopReason::TimeBudget;
    return traj;
}

double energy_identity_residual(const Trajectory& traj, Damping /*gamma*/) {
    const auto& s = traj.samples();
    const double e0 = energy(s.front().state);
    double worst = 0.0;
    for (const auto& smp : s) {
        worst = std::max(worst, std::abs(energy(smp.state) - e0 + smp.dissipation));
    }
    return worst;
}

std::vector<Sample> blowup_tail(const Trajectory& traj) {
    std::vector<Sample> tail;
    const auto& s = traj.samples();
    for (auto it = s.rbegin(); it != s.rend() && tail.size() < 20; ++it) {
        if (std::abs(it->state.u()) > 100.0) tail.push_back(*it);
    }
    std::reverse(tail.begin(), tail.end());
    return tail;
}

BlowupEstimate detect_blowup(const Trajectory& traj) {
    if (!traj.has_event(EventKind::BlowupThreshold) && !traj.has_event(EventKind::EnteredKMinus)) {
        throw std::logic_error("detect_blowup: trajectory has no blow-up or K- event");
    }
    BlowupEstimate est;

    const auto tail = blowup_tail(traj);
    if (tail.size() >= 3) {
        // Least squares y = a + b t on y = 1/|u|; 1/|u| vanishes at t = -a/b.
        double st = 0, sy = 0, stt = 0, sty = 0;
        const double n = static_cast<double>(tail.size());
        for (const auto& smp : tail) {
            const double y = 1.0 / std::abs(smp.state.u());
            st += smp.t;
            sy += y;
            stt += smp.t * smp.t;
            sty += smp.t * y;
        }
        const double b = (n * sty - st * sy) / (n * stt - st * st);
        const double a = (sy - b * st) / n;
        if (b < 0.0) est.t_est = -a / b;
    }

    const auto& s = traj.samples();
    const bool undamped_above = traj.gamma() == 0.0 && energy(s.front().state) > kEnergyThreshold;

    // Sustained window: u^2 >= 1 + delta on the trailing run of samples.
    std::size_t k0 = s.size();
    while (k0 > 0 && s[k0 - 1].state.u() * s[k0 - 1].state.u() >= 1.0 + kWindowDelta) --k0;
    bool window = false;
    if (k0 < s.size() && traj.has_event(EventKind::BlowupThreshold)) {
        window = k0 == 0 || s.back().t - s[k0].t >= kWindowLength;
    }
    est.certified = traj.has_event(EventKind::EnteredKMinus) || undamped_above || window;
    return est;
}

void write_csv(std::ostream& out, const Trajectory& traj) {
    out << "t,u,v,E,dissipation\n";
    char buf[160];
    for (const auto& smp : traj.samples()) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", smp.t, smp.state.u(),
                      smp.state.v(), energy(smp.state), smp.dissipation);
        out << buf;
    }
}

}  // namespace duffkg
