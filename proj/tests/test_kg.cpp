#include "duffkg/kg.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

using namespace duffkg;

namespace {

Field cosine(const TorusGrid& g, double amplitude, double offset = 0.0, int mode = 1) {
    return Field::sample(g, [&](const std::vector<double>& x) {
        return offset + amplitude * std::cos(2.0 * std::numbers::pi * mode * x[0] / g.side());
    });
}

}  // namespace

TEST_CASE("grid validation and spectral constants") {
    CHECK_THROWS_AS(TorusGrid(0, 1.0, 8), std::invalid_argument);
    CHECK_THROWS_AS(TorusGrid(1, 1.0, 12), std::invalid_argument);
    CHECK_THROWS_AS(TorusGrid(1, -1.0, 8), std::invalid_argument);
    const TorusGrid g(2, 8.0, 16);
    CHECK(g.volume() == doctest::Approx(64.0));
    CHECK(g.lambda1() == doctest::Approx(std::pow(2 * std::numbers::pi / 8.0, 2)));
    CHECK(g.size() == 256);
    CHECK(g.spectral_size() == 16 * 9);
    CHECK(g.cell_volume() == doctest::Approx(0.25));
}

TEST_CASE("values and coefficients stay consistent; Parseval and derivatives") {
    for (int d = 1; d <= 3; ++d) {
        const TorusGrid g(d, 5.0, 16);
        const Field f = Field::sample(g, [](const std::vector<double>& x) {
            double s = 0.3;
            for (double xi : x) s += std::sin(2 * std::numbers::pi * xi / 5.0) + 0.2 * std::cos(4 * std::numbers::pi * xi / 5.0);
            return s;
        });
        CHECK(f.consistency_error() <= 1e-12);
        CHECK(f.coefficients()[0].imag() == doctest::Approx(0.0));
        CHECK(f.coefficients()[0].real() == doctest::Approx(0.3));
        // Mean of grad^2 for sum_i sin(k x_i) + 0.2 cos(2 k x_i): d (k^2/2 + 0.04 (2k)^2 / 2) V.
        const double k = 2 * std::numbers::pi / 5.0;
        const double expected = d * (0.5 * k * k + 0.02 * 4 * k * k) * g.volume();
        CHECK(gradient_squared(f) == doctest::Approx(expected).epsilon(1e-12));
        const Field back = helmholtz_inverse(helmholtz(f));
        double err = 0;
        for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(back.values()[i] - f.values()[i]));
        CHECK(err <= 1e-12);
    }
}

TEST_CASE("energy and K functional examples") {
    const TorusGrid g(1, 8.0, 64);
    const double V = g.volume();
    CHECK(kg_energy(KGState::constant(g, 0, 0)) == 0.0);
    CHECK(kg_energy(KGState::constant(g, 1, 0)) == doctest::Approx(V / 4));
    for (const auto& [u0, u1] : {std::pair{0.3, 0.5}, std::pair{-1.2, 2.0}, std::pair{2.0, -0.1}}) {
        CHECK(kg_energy(KGState::constant(g, u0, u1)) == doctest::Approx(V * energy(State(u0, u1))).epsilon(1e-13));
    }
    CHECK(K_functional(Field::constant(g, 1)) == doctest::Approx(0.0).scale(V));
    CHECK(K_functional(Field::constant(g, 0)) == 0.0);
    CHECK(K_functional(Field::constant(g, 2)) == doctest::Approx(-12 * V));
}

TEST_CASE("Nehari projection") {
    const TorusGrid g(1, 8.0, 64);
    const Field c = nehari_project(Field::constant(g, 3.0));
    for (double x : c.values()) CHECK(x == doctest::Approx(1.0).epsilon(1e-14));

    const Field w = cosine(g, 0.1, 1.0);
    const Field p = nehari_project(w);
    CHECK(std::abs(K_functional(p)) <= 1e-10 * h1_squared(p));
    const Field pp = nehari_project(p);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(pp.values()[i] - p.values()[i]) <= 1e-12);
    const Field scaled = nehari_project(w * 7.5);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(scaled.values()[i] - p.values()[i]) <= 1e-12);
    CHECK(J_functional(p) == doctest::Approx(nehari_quotient(w)).epsilon(1e-13));
    CHECK_THROWS_AS(nehari_project(Field(g)), std::domain_error);
}

TEST_CASE("symmetry-breaking witness on L = 8") {
    const TorusGrid g(1, 8.0, 128);
    const double V = g.volume();
    const SymmetryWitness zero = symmetry_breaking_witness(g, 0.0);
    CHECK(zero.J == doctest::Approx(V / 4));
    CHECK(zero.K == doctest::Approx(0.0).scale(V));
    for (double beta : {0.01, 0.05, 0.1}) {
        const SymmetryWitness w = symmetry_breaking_witness(g, beta);
        CHECK(std::abs(w.K) <= 1e-10);
        CHECK(w.J < V / 4);
        CHECK(w.alpha < 0.0);
        CHECK(w.alpha >= -2 * (5 - g.lambda1()) * beta * beta / (2 * std::sqrt(V)));
    }
    CHECK_THROWS_AS(symmetry_breaking_witness(g, 10.0), std::domain_error);
    CHECK_THROWS_AS(symmetry_breaking_witness(TorusGrid(1, 4.0, 64), 0.05), std::invalid_argument);
}

TEST_CASE("ground states") {
    SUBCASE("lambda1 >= 2: d = V/4 with Q = +-1") {
        const TorusGrid g(1, 4.0, 32);
        GroundStateOptions o;
        o.seeds = 4;
        const GroundState gs = ground_state_search(g, o);
        CHECK(gs.converged);
        CHECK(gs.d <= g.volume() / 4 * (1 + 1e-12));
        CHECK(gs.d > 0.0);
        CHECK(gs.residual <= 1e-8);
        for (double x : gs.Q.values()) CHECK(std::abs(x) == doctest::Approx(1.0).epsilon(1e-8));
    }
    SUBCASE("lambda1 < 2: d < V/4, on the Nehari manifold, stationary, below the witness") {
        const TorusGrid g(1, 8.0, 128);
        GroundStateOptions o;
        o.seeds = 4;
        const GroundState gs = ground_state_search(g, o);
        const SymmetryWitness w = symmetry_breaking_witness(g, 0.05);
        CHECK(gs.converged);
        CHECK(gs.d > 0.0);
        CHECK(gs.d < g.volume() / 4);
        CHECK(gs.d <= w.J);
        CHECK(std::abs(K_functional(gs.Q)) <= 1e-8 * h1_squared(gs.Q));
        CHECK(gs.relative_residual <= 1e-6);
    }
}

TEST_CASE("constant data reproduce the Duffing flow") {
    const TorusGrid g(1, 8.0, 32);
    KGOptions o;
    o.t_max = 20;
    const KGTrajectory tr = kg_integrate(KGState::constant(g, 0.3, 0.5), 0.4, o);
    IntegratorOptions io;
    io.rel_tol = 1e-12;
    io.abs_tol = 1e-14;
    double worst = 0.0;
    for (const auto& s : tr.samples) {
        if (s.t == 0.0) continue;
        io.t_max = s.t;
        const State d = integrate(State(0.3, 0.5), Damping(0.4), io).back().state;
        worst = std::max({worst, std::abs(d.u() - s.mean_u), std::abs(d.v() - s.mean_v)});
    }
    CHECK(worst <= 1e-6);
    const auto& u = tr.final_state.u.values();
    for (double x : u) CHECK(x == doctest::Approx(u[0]).epsilon(1e-12));
}

TEST_CASE("energy identity and spectral reality along a damped run") {
    const TorusGrid g(2, 6.0, 16);
    const KGState s0(cosine(g, 0.3, 0.2), cosine(g, 0.1, 0.0, 2));
    KGOptions o;
    o.t_max = 10;
    const KGTrajectory tr = kg_integrate(s0, 0.5, o);
    CHECK(kg_energy_identity_residual(tr) <= 1e-6);
    CHECK(tr.final_state.u.consistency_error() <= 1e-12);
    CHECK(tr.final_state.u.coefficients()[0].imag() == 0.0);
}

TEST_CASE("stationary ground state stays put") {
    const TorusGrid g(1, 4.0, 32);
    GroundStateOptions o;
    o.seeds = 2;
    const GroundState gs = ground_state_search(g, o);
    KGOptions ko;
    ko.t_max = 10;
    const KGTrajectory tr = kg_integrate(KGState(gs.Q, Field(g)), 0.0, ko);
    const Field diff = tr.final_state.u - gs.Q;
    double worst = 0.0;
    for (double x : diff.values()) worst = std::max(worst, std::abs(x));
    CHECK(worst <= 1e-6);
}

TEST_CASE("blow-up, negative energy and certificates") {
    const TorusGrid g(1, 8.0, 32);
    KGOptions o;
    o.t_max = 50;
    o.stop_on_negative_energy = false;
    const KGTrajectory blow = kg_integrate(KGState::constant(g, 1.5, 0.5), 0.5, o);
    CHECK(blow.stop == KGStop::Blowup);
    CHECK(blow.negative_time.has_value());

    o.d_ref = 1.0;
    const KGTrajectory decay = kg_integrate(KGState::constant(g, 0.1, 0.0), 0.5, o);
    CHECK(decay.stop == KGStop::DecayCertificate);
    CHECK(decay.decay_time == 0.0);
}

TEST_CASE("fate experiments") {
    const TorusGrid g(1, 8.0, 32);
    KGFateOptions fo;
    fo.integrator.t_max = 60;
    fo.integrator.d_ref = 0.99 * 1.32;
    fo.max_doublings = 3;
    const KGState zero{Field(g), Field(g)};
    const KGFate blow = kg_fate_experiment(KGState::constant(g, -1.0, 4.6), zero, 1.0, fo);
    CHECK(blow.kind == FateKind::BlowUp);
    CHECK(blow.stop == KGStop::NegativeEnergy);
    CHECK(blow.cert_energy < 0.0);
    CHECK(blow.margin == 0.0);

    const Field c = cosine(g, 1.0);
    const KGState pert(c * (1e-3 / std::sqrt(h1_squared(c))), Field(g));
    const KGFate decay = kg_fate_experiment(KGState::constant(g, -1.0, 1.16), pert, 1.0, fo);
    CHECK(decay.kind == FateKind::DecayZero);
    CHECK(decay.margin > 0.0);

    // Large amplitude: E_KG < d_ref with K < 0 right away.
    const KGFate now = kg_fate_experiment(KGState::constant(g, 0, 0), KGState(Field::constant(g, 1.5), Field(g)), 1.0, fo);
    CHECK(now.kind == FateKind::BlowUp);

    KGFateOptions no_ref;
    CHECK_THROWS_AS(kg_fate_experiment(zero, zero, 1.0, no_ref), std::invalid_argument);
}

TEST_CASE("continuity probe") {
    const TorusGrid g(1, 8.0, 32);
    const KGState s0 = KGState::constant(g, 0.3, 0.0);
    CHECK(continuity_probe(s0, 0.0, 5.0, 1.0, 1) == 0.0);
    double lo = 1e300, hi = 0.0;
    for (double delta : {1e-2, 1e-3, 1e-4}) {
        const double r = continuity_probe(s0, delta, 5.0, 1.0, 42);
        CHECK(std::isfinite(r));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(hi <= 3 * lo);
    CHECK_THROWS_AS(continuity_probe(KGState::constant(g, 2.0, 1.0), 1e-3, 50.0, 0.1, 1), std::logic_error);
}

TEST_CASE("random perturbations have the requested energy norm") {
    const TorusGrid g(3, 6.0, 8);
    const KGState p = random_perturbation(g, 0.25, 9);
    CHECK(energy_norm(p) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("snapshot round trip and header layout") {
    const TorusGrid g(2, 6.5, 8);
    const Field f = cosine(g, 0.7, 0.1);
    std::stringstream buf;
    write_snapshot(buf, f);
    const std::string bytes = buf.str();
    REQUIRE(bytes.size() == 32 + 8 * g.size());
    CHECK(bytes.substr(0, 4) == "KGF1");
    const Field back = read_snapshot(buf);
    CHECK(back.grid() == g);
    CHECK(back.values() == f.values());

    std::stringstream bad("XXXX");
    CHECK_THROWS(read_snapshot(bad));
}

TEST_CASE("KG CSV summary header") {
    const TorusGrid g(1, 8.0, 16);
    KGOptions o;
    o.t_max = 0.5;
    std::ostringstream os;
    write_kg_csv(os, kg_integrate(KGState::constant(g, 0.1, 0.0), 0.0, o));
    CHECK(os.str().rfind("t,E_KG,K,H1norm,dissipation\n", 0) == 0);
}
