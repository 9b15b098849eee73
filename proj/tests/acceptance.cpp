// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "duffkg/basin.hpp"
#include "duffkg/critical.hpp"
#include "duffkg/kg.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace duffkg;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

std::string format(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

long double threshold_oracle(long double u0, long double t) {
    const long double e = std::exp(-t * std::sqrt(2.0L));
    return 1.0L - 2.0L * (1.0L - u0) * e / (1.0L + u0 + (1.0L - u0) * e);
}

int worker_count() { return std::max(8, static_cast<int>(std::thread::hardware_concurrency())); }

// Runs f(i) for i in [0, n) on a small pool; results are indexed, so order is irrelevant.
void parallel_for(int n, int threads, const std::function<void(int)>& f) {
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < n; i = next++) f(i);
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

Outcome c1_closed_form() {
    IntegratorOptions o;
    o.t_max = 10;
    o.rel_tol = 1e-13;
    o.abs_tol = 1e-15;
    const auto t0 = Clock::now();
    const Trajectory tr = integrate(State(0, 1 / std::sqrt(2.0)), Damping(0), o);
    const double elapsed = since(t0);
    double worst = 0.0;
    for (const auto& s : tr.samples()) {
        worst = std::max(worst, static_cast<double>(std::fabs(s.state.u() - threshold_oracle(0.0L, s.t))));
    }
    const bool ok = worst <= 1e-8 && elapsed < 0.1 && tr.back().t == 10.0;
    return {ok, format("sup |u - closed form| = %.3e (<= 1e-8) on [0,10], %.4f s (< 0.1 s), rel_tol 1e-13",
                       worst, elapsed)};
}

Outcome c2_energy_identity() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> gam(0.0, 2.0), angle(0.0, 2 * std::numbers::pi), rad(0.0, 0.68);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double r = rad(rng), a = angle(rng);
        const State s0(r * std::cos(a), r * std::sin(a));
        const double g = gam(rng);
        IntegratorOptions o;
        o.t_max = 10;
        worst = std::max(worst, energy_identity_residual(integrate(s0, Damping(g), o), Damping(g)));
    }
    double conservation = 0.0;
    for (const State s0 : {State(0.5, 0.0), State(0.0, 0.6), State(-0.8, 0.1), State(0.3, -0.4)}) {
        IntegratorOptions o;
        o.t_max = 50;
        conservation = std::max(conservation, energy_identity_residual(integrate(s0, Damping(0), o), Damping(0)));
    }
    return {worst <= 1e-8 && conservation <= 1e-9,
            format("max residual %.3e over 100 runs (<= 1e-8); undamped drift %.3e on [0,50] (<= 1e-9)", worst,
                   conservation)};
}

Outcome c3_region_certificates() {
    constexpr int kN = 10000;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-3.0, 3.0), v(-3.0, 3.0), gam(0.0, 2.0);
    std::vector<State> kplus, kminus;
    std::vector<double> gp, gm;
    while (static_cast<int>(kplus.size()) < kN || static_cast<int>(kminus.size()) < kN) {
        const State s(u(rng), v(rng));
        const double g = gam(rng);
        const Region r = classify_region(s);
        if (r == Region::KPlus && static_cast<int>(kplus.size()) < kN) {
            kplus.push_back(s);
            gp.push_back(g);
        } else if (r == Region::KMinus && static_cast<int>(kminus.size()) < kN) {
            kminus.push_back(s);
            gm.push_back(g);
        }
    }
    std::vector<FateKind> fp(kN), fm(kN);
    const auto t0 = Clock::now();
    parallel_for(2 * kN, worker_count(), [&](int i) {
        if (i < kN) fp[i] = classify_fate(kplus[i], Damping(gp[i]), {}).kind;
        else fm[i - kN] = classify_fate(kminus[i - kN], Damping(gm[i - kN]), {}).kind;
    });
    const double elapsed = since(t0);
    // The certificates above fire on entry; integrate a subset to confirm the dynamics agree.
    constexpr int kCheck = 500;
    std::vector<int> dyn_bad(2 * kCheck, 0);
    parallel_for(2 * kCheck, worker_count(), [&](int i) {
        IntegratorOptions o;
        o.t_max = 50;
        if (i < kCheck) {
            for (const auto& smp : integrate(kplus[i], Damping(gp[i]), o).samples()) {
                if (classify_region(smp.state) != Region::KPlus && smp.state != State(0, 0)) dyn_bad[i] = 1;
            }
        } else {
            const int k = i - kCheck;
            dyn_bad[i] = integrate(kminus[k], Damping(gm[k]), o).stop_reason() != StopReason::BlowupThreshold;
        }
    });
    const long dyn_fail = std::count(dyn_bad.begin(), dyn_bad.end(), 1);
    const long bad_plus = std::count_if(fp.begin(), fp.end(), [](FateKind k) { return k != FateKind::DecayZero; });
    const long bad_minus = std::count_if(fm.begin(), fm.end(), [](FateKind k) { return k != FateKind::BlowUp; });
    return {bad_plus == 0 && bad_minus == 0 && elapsed < 60.0 && dyn_fail == 0,
            format("K+ exceptions %ld/10000, K- exceptions %ld/10000, %.2f s (< 60 s); "
                   "integrated cross-check: %ld/1000 disagree",
                   bad_plus, bad_minus, elapsed, dyn_fail)};
}

int transitions(const std::vector<FateKind>& seq) {
    int n = 0;
    for (std::size_t i = 1; i < seq.size(); ++i) n += seq[i] != seq[i - 1];
    return n;
}

Outcome c4_trichotomy() {
    const State n2(0, 1);
    std::vector<FateKind> seq;
    bool certified = true;
    for (int i = 0; i < 200; ++i) {
        const double g = 1.5 * i / 199.0;
        seq.push_back(classify_fate(n2, Damping(g), {}).kind);
        certified = certified && seq.back() != FateKind::Undetermined;
    }
    const bool step = certified && transitions(seq) == 1 && seq.front() == FateKind::BlowUp &&
                      seq.back() == FateKind::DecayZero;
    const Bracket b = find_gamma0_n2(n2, 1e-6);
    const bool bracket_ok = b.width() <= 1e-6 && b.lo >= 0.0 && b.hi <= 1.0;

    const State n3(-1.5, 2.0);
    const N3Brackets nb = find_gamma0_gamma1_n3(n3, 1e-6);
    std::vector<FateKind> seq3;
    bool cert3 = true;
    const double top = 2.0 * nb.gamma1.hi;
    for (int i = 0; i < 200; ++i) {
        seq3.push_back(classify_fate(n3, Damping(top * i / 199.0), {}).kind);
        cert3 = cert3 && seq3.back() != FateKind::Undetermined;
    }
    const bool two = cert3 && transitions(seq3) == 2 && seq3.front() == FateKind::BlowUp &&
                     seq3.back() == FateKind::BlowUp && nb.gamma0.midpoint() < nb.gamma1.midpoint();
    return {step && bracket_ok && two,
            format("(0,1): %d transition(s) on 200 gammas, gamma0 in [%.9f, %.9f]; (-1.5,2): %d transitions, "
                   "gamma0 ~ %.7f < gamma1 ~ %.7f",
                   transitions(seq), b.lo, b.hi, transitions(seq3), nb.gamma0.midpoint(), nb.gamma1.midpoint())};
}

Outcome c5_shadow() {
    const Bracket b = find_gamma0_n2(State(0, 1), 1e-8);
    IntegratorOptions o;
    o.t_max = 200;
    const Trajectory tr = integrate(State(0, 1), Damping(b.midpoint()), o);
    double closest = 1e300;
    for (const auto& s : tr.samples()) closest = std::min(closest, std::hypot(s.state.u() - 1.0, s.state.v()));
    return {closest <= 0.05 && b.width() <= 1e-8,
            format("gamma0 midpoint %.10f (width %.1e): closest approach to (1,0) = %.3e (<= 0.05)", b.midpoint(),
                   b.width(), closest)};
}

Outcome c6_velocity_floors() {
    bool ok = true;
    std::string detail;
    for (double g : {0.1, 0.5}) {
        const Fate f = classify_fate(State(-1, g / 4 * 0.99), Damping(g), {});
        ok = ok && f.kind == FateKind::DecayZero;
        detail += format("gamma=%.1f:%s ", g, std::string(to_string(f.kind)).c_str());
    }
    for (double g : {1.0, 2.0}) {
        const Fate f = classify_fate(State(-1, 0.99 / (4 * std::sqrt(2.0))), Damping(g), {});
        ok = ok && f.kind == FateKind::DecayZero;
        detail += format("gamma=%.1f:%s ", g, std::string(to_string(f.kind)).c_str());
    }
    return {ok, detail};
}

Outcome c7_comparison() {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> pos(-1.5, 1.5), vel(0.1, 2.0), gam(0.0, 2.0);
    IntegratorOptions o;
    o.t_max = 20;
    o.max_step = 0.05;
    int pairs = 0, violations = 0, points = 0;
    double min_phi = 1e300;
    while (pairs < 50) {
        const State s0(pos(rng), vel(rng));
        double g1 = gam(rng), g2 = gam(rng);
        if (g1 > g2) std::swap(g1, g2);
        if (g2 - g1 < 1e-3) continue;
        const auto phi = velocity_profile_difference(integrate(s0, Damping(g1), o), integrate(s0, Damping(g2), o), 100);
        for (double p : phi) {
            violations += !(p > 0.0);
            min_phi = std::min(min_phi, p);
        }
        points += static_cast<int>(phi.size());
        ++pairs;
    }
    return {violations == 0, format("%d pairs, %d interior points, %d with phi <= 0 (min phi %.3e)", pairs, points,
                                    violations, min_phi)};
}

Outcome c8_blowup_rate() {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3.0, 3.0), v(-3.0, 3.0), gam(0.0, 2.0);
    int count = 0, tries = 0;
    double worst = 1e300;
    while (count < 20 && tries < 10000) {
        ++tries;
        const State s0(u(rng), v(rng));
        const double g = (count % 4 == 0) ? 0.0 : gam(rng);
        if (std::abs(s0.u()) < 1.0 && energy(s0) < 0.25) continue;
        const Trajectory tr = integrate(s0, Damping(g), {});
        if (tr.stop_reason() != StopReason::BlowupThreshold) continue;
        const BlowupEstimate est = detect_blowup(tr);
        if (!est.certified || !est.t_est) continue;
        for (const auto& s : blowup_tail(tr)) worst = std::min(worst, std::abs(s.state.u()) * (*est.t_est - s.t));
        ++count;
    }
    return {count == 20 && worst >= 0.9,
            format("%d certified blow-ups, min over trailing windows of |u|(t_est - t) = %.4f (>= 0.9)", count,
                   worst)};
}

struct BasinRun {
    BasinMap map;
    double seconds;
};

BasinRun basin_for(double gamma, int threads, const std::string& stem) {
    BasinJob job;
    job.gamma = gamma;
    job.threads = threads;
    job.csv_path = stem + ".csv";
    job.pgm_path = stem + ".pgm";
    const auto t0 = Clock::now();
    BasinMap m = run_basin(job);
    return {std::move(m), since(t0)};
}

const double kBasinGammas[3] = {0.0, 0.5, 2.0};

Outcome c9_basin() {
    const int threads = 8;
    std::vector<BasinRun> runs;
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        runs.push_back(basin_for(kBasinGammas[i], threads, format("basin_a_%d", i)));
        total += runs.back().seconds;
    }
    const auto& init = runs[0].map.initial;
    long k_pixels = 0, k_mismatch = 0, undetermined = 0;
    long n2 = 0;
    long n2_blow[3] = {0, 0, 0};
    for (std::size_t p = 0; p < init.size(); ++p) {
        const Region r = classify_region(init[p]);
        for (const auto& run : runs) undetermined += run.map.fates[p].kind == FateKind::Undetermined;
        if (r == Region::KPlus || r == Region::KMinus) {
            ++k_pixels;
            const FateKind k0 = runs[0].map.fates[p].kind;
            if (runs[1].map.fates[p].kind != k0 || runs[2].map.fates[p].kind != k0) ++k_mismatch;
        }
        if (r == Region::N2) {
            ++n2;
            for (int i = 0; i < 3; ++i) n2_blow[i] += runs[i].map.fates[p].kind == FateKind::BlowUp;
        }
    }
    const double f[3] = {double(n2_blow[0]) / n2, double(n2_blow[1]) / n2, double(n2_blow[2]) / n2};
    const bool monotone = f[0] >= f[1] && f[1] >= f[2] && f[0] > f[2];
    return {k_mismatch == 0 && monotone && total < 300.0,
            format("K pixels %ld, mismatches across gamma %ld; N2 blow-up fraction %.4f >= %.4f >= %.4f; "
                   "undetermined %ld; %.1f s on %d threads (%u cores) (< 300 s)",
                   k_pixels, k_mismatch, f[0], f[1], f[2], undetermined, total, threads,
                   std::thread::hardware_concurrency())};
}

Outcome c10_kg_duffing() {
    const TorusGrid g(1, 8.0, 128);
    double worst = 0.0;
    for (const auto& [u0, u1, gamma] : {std::tuple{0.3, 0.5, 0.4}, std::tuple{0.5, 0.0, 0.0}, std::tuple{-0.2, 0.6, 1.0}}) {
        KGOptions ko;
        ko.t_max = 20;
        const KGTrajectory tr = kg_integrate(KGState::constant(g, u0, u1), gamma, ko);
        IntegratorOptions io;
        io.rel_tol = 1e-12;
        io.abs_tol = 1e-14;
        for (const auto& s : tr.samples) {
            if (s.t == 0.0) continue;
            io.t_max = s.t;
            const State d = integrate(State(u0, u1), Damping(gamma), io).back().state;
            worst = std::max({worst, std::abs(d.u() - s.mean_u), std::abs(d.v() - s.mean_v)});
        }
        if (tr.samples.back().t < 20.0) worst = 1e300;
    }
    return {worst <= 1e-6, format("sup |mode-0 - Duffing| = %.3e over [0,20] (<= 1e-6), d=1 n=128 L=8", worst)};
}

Outcome c11_symmetry_breaking() {
    const TorusGrid g(1, 8.0, 256);
    const double quarter = g.volume() / 4;
    const SymmetryWitness w = symmetry_breaking_witness(g, 0.05);
    const GroundState gs = ground_state_search(g);
    const bool ok = std::abs(w.K) <= 1e-10 && w.J < quarter && gs.d <= w.J && gs.residual <= 1e-6 &&
                    gs.converged;
    return {ok, format("lambda1 = %.4f; K(1+h) = %.2e, J(1+h) = %.10f < L/4 = %.1f; d = %.10f, residual %.2e",
                       g.lambda1(), w.K, w.J, quarter, gs.d, gs.residual)};
}

Outcome c12_kg_fates() {
    const double gamma = 1.0;
    const Bracket u1b = find_u1(Damping(gamma), 1e-6);
    const double U1 = u1b.midpoint();
    const TorusGrid g(1, 8.0, 64);
    const GroundState gs = ground_state_search(g);
    KGFateOptions fo;
    fo.integrator.t_max = 100;
    fo.integrator.d_ref = 0.99 * gs.d;
    fo.max_doublings = 4;
    const Field c = Field::sample(g, [&](const std::vector<double>& x) {
        return std::cos(2 * std::numbers::pi * x[0] / g.side());
    });
    const Field unit = c * (1.0 / std::sqrt(h1_squared(c)));

    bool ok = true;
    std::string detail = format("U1(gamma=1) = %.7f, d_ref = %.6f; ", U1, *fo.integrator.d_ref);
    for (double sign : {1.0, -1.0}) {
        const KGState pert(unit * (sign * 1e-3), Field(g));
        const KGFate decay = kg_fate_experiment(KGState::constant(g, -1.0, U1 / 2), pert, gamma, fo);
        const KGFate blow = kg_fate_experiment(KGState::constant(g, -1.0, 2 * U1), pert, gamma, fo);
        ok = ok && decay.kind == FateKind::DecayZero && blow.kind == FateKind::BlowUp &&
             blow.stop == KGStop::NegativeEnergy && blow.cert_energy < 0.0;
        detail += format("[%+g eps] U1/2 -> %s (margin %.2e), 2U1 -> %s (E_KG = %.3g at t = %.3f); ", sign,
                         std::string(to_string(decay.kind)).c_str(), decay.margin,
                         std::string(to_string(blow.kind)).c_str(), blow.cert_energy, blow.cert_time);
    }
    return {ok, detail};
}

Outcome c13_determinism() {
    bool same = true;
    for (int i = 0; i < 3; ++i) {
        basin_for(kBasinGammas[i], 3, format("basin_b_%d", i));
        same = same && slurp(format("basin_a_%d.csv", i)) == slurp(format("basin_b_%d.csv", i));
        same = same && slurp(format("basin_a_%d.pgm", i)) == slurp(format("basin_b_%d.pgm", i));
        same = same && !slurp(format("basin_a_%d.pgm", i)).empty();
    }
    return {same, "criterion-9 CSV and PGM outputs compared byte-for-byte between 8 and 3 threads"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {"C1 closed-form match", c1_closed_form},
        {"C2 energy identity", c2_energy_identity},
        {"C3 region certificates", c3_region_certificates},
        {"C4 damping trichotomy", c4_trichotomy},
        {"C5 threshold shadowing", c5_shadow},
        {"C6 velocity floors near -1", c6_velocity_floors},
        {"C7 comparison monotonicity", c7_comparison},
        {"C8 blow-up rate", c8_blowup_rate},
        {"C9 basin figure", c9_basin},
        {"C10 KG/Duffing correspondence", c10_kg_duffing},
        {"C11 symmetry breaking", c11_symmetry_breaking},
        {"C12 KG fate experiments", c12_kg_fates},
        {"C13 determinism", c13_determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("[%s] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), since(t0));
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
    return failures == 0 ? 0 : 1;
}
