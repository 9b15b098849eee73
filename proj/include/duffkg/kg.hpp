// Damped cubic Klein-Gordon equation u_tt - Delta u + gamma u_t + u = u^3 on
// flat tori, together with the Nehari-manifold functionals
//   J(u) = 1/2 ||u||_{H^1}^2 - 1/4 ||u||_{L^4}^4,
//   K(u) = ||u||_{H^1}^2 - ||u||_{L^4}^4,
//   E_KG(u, v) = J(u) + 1/2 ||v||_{L^2}^2.

#pragma once

#include "duffkg/classifier.hpp"
#include "duffkg/spectral.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace duffkg {

struct KGState {
    Field u;
    Field v;

    KGState(Field u0, Field v0);
    static KGState constant(const TorusGrid& grid, double u0, double v0);
    const TorusGrid& grid() const { return u.grid(); }
};

double J_functional(const Field& u);
double K_functional(const Field& u);
double kg_energy(const KGState& s);
/// sqrt(||u||_{H^1}^2 + ||v||_{L^2}^2).
double energy_norm(const KGState& s);

/// lambda w with lambda = ||w||_{H^1} / ||w||_{L^4}^2, so that K(lambda w) = 0.
/// Throws std::domain_error for a field with vanishing L^4 norm.
Field nehari_project(const Field& w);

/// 1/4 ||w||_{H^1}^4 / ||w||_{L^4}^4, equal to J at the Nehari projection of w.
double nehari_quotient(const Field& w);

/// ||-Delta Q + Q - Q^3||_{L^2}.
double stationarity_residual(const Field& q);

// ---------------------------------------------------------------- dynamics

struct KGOptions {
    double t_max = 20.0;
    /// Upper bound on the step; the effective step also obeys
    /// dt <= cfl / sqrt(1 + lambda_max) and dt <= cfl / sqrt(1 + 3 max u^2).
    double dt = 0.01;
    double cfl = 0.2;
    double min_dt = 1e-12;
    /// Blow-up once ||u||_{H^1} >= blowup_factor * sqrt(V).
    double blowup_factor = 1e4;
    /// Summary samples are recorded at this spacing (and at the final time).
    double sample_interval = 0.1;
    /// When set, entering {E_KG < d_ref, K >= 0} stops with DecayCertificate
    /// and {E_KG < d_ref, K < 0} stops with InstabilityCertificate.
    std::optional<double> d_ref;
    /// Whether the instability set ends the run (it is recorded either way).
    bool stop_on_instability = true;
    /// Stop as soon as E_KG < 0.
    bool stop_on_negative_energy = false;

    void validate() const;
};

enum class KGStop {
    TimeBudget,
    Blowup,
    NegativeEnergy,
    DecayCertificate,
    InstabilityCertificate,
    StepUnderflow,
};

std::string_view to_string(KGStop s);

struct KGSample {
    double t = 0.0;
    double energy = 0.0;
    double K = 0.0;
    double h1 = 0.0;
    double dissipation = 0.0;
    double mean_u = 0.0;  ///< mode-0 pair, i.e. the spatial averages
    double mean_v = 0.0;
};

struct KGTrajectory {
    std::vector<KGSample> samples;
    KGState final_state;
    KGStop stop = KGStop::TimeBudget;
    double gamma = 0.0;
    /// First step times at which each certificate condition held.
    std::optional<double> decay_time;
    std::optional<double> instability_time;
    std::optional<double> negative_time;
    double negative_energy = 0.0;  ///< E_KG at negative_time
};

/// Classical RK4 on the Fourier system with the cubic term evaluated
/// pseudospectrally and dealiased by the 2/3 rule. The dissipation
/// gamma int int v^2 is carried as an extra RK4 component.
KGTrajectory kg_integrate(const KGState& s0, double gamma, const KGOptions& opts);

/// max over samples of |E(t) - E(0) + dissipation(t)|.
double kg_energy_identity_residual(const KGTrajectory& traj);

/// CSV with header `t,E_KG,K,H1norm,dissipation`.
void write_kg_csv(std::ostream& out, const KGTrajectory& traj);

struct KGFate {
    FateKind kind = FateKind::Undetermined;
    KGStop stop = KGStop::TimeBudget;
    double cert_time = 0.0;
    double cert_energy = 0.0;  ///< E_KG at certification (negative for the E < 0 witness)
    /// Largest scaled perturbation norm (H^1 x L^2) with the same certified fate.
    double margin = 0.0;
};

struct KGFateOptions {
    KGOptions integrator;
    /// Scaling search for the margin: perturbation factors 2, 4, ... up to 2^max_doublings.
    int max_doublings = 6;
};

/// Fate of base + perturbation. BlowUp requires E_KG < 0 or the instability
/// set {E_KG < d_ref, K < 0}; DecayZero requires {E_KG < d_ref, K >= 0}.
/// integrator.d_ref must be set.
KGFate kg_fate_experiment(const KGState& base, const KGState& perturbation, double gamma,
                          const KGFateOptions& opts);

/// sup_t ||(u, u_t)(t) - (w, w_t)(t)|| / delta where w starts from s0 plus a
/// random smooth perturbation of energy norm delta. Returns 0 for delta = 0.
/// Throws std::logic_error when the base run blows up before T.
double continuity_probe(const KGState& s0, double delta, double T, double gamma, std::uint64_t seed,
                        const KGOptions& opts = {});

/// A smooth random pair (u, v) with energy norm exactly `norm`.
KGState random_perturbation(const TorusGrid& grid, double norm, std::uint64_t seed, int max_mode = 4);

// ----------------------------------------------------------- ground states

struct SymmetryWitness {
    Field h;
    double alpha = 0.0;
    double beta_coeff = 0.0;
    double J = 0.0;  ///< J(1 + h)
    double K = 0.0;  ///< K(1 + h), zero up to root-finding accuracy
};

/// h = alpha phi0 + beta_coeff phi1 with phi0 = V^{-1/2},
/// phi1 = sqrt(2/V) cos(2 pi x_1 / L) and alpha chosen so that K(1 + h) = 0.
/// Throws std::invalid_argument when lambda1 >= 2 and std::domain_error when K
/// has no sign change on the alpha interval (beta_coeff too large).
SymmetryWitness symmetry_breaking_witness(const TorusGrid& grid, double beta_coeff);

struct GroundStateOptions {
    int seeds = 16;
    std::uint64_t seed = 1;
    int max_iterations = 20000;
    /// Stop once the relative quotient decrease over `stall_window` iterations
    /// falls below stall_tolerance and the residual has stopped improving.
    double stall_tolerance = 1e-12;
    int stall_window = 50;
    /// Converged outright once residual <= residual_tolerance * ||Q||_{H^1}.
    double residual_tolerance = 1e-12;
    /// Also descend from the symmetry-breaking witness when lambda1 < 2.
    bool use_witness_seed = true;
    double witness_beta = 0.05;
};

struct GroundState {
    Field Q;
    double d = 0.0;  ///< J(Q)
    double residual = 0.0;
    double relative_residual = 0.0;  ///< residual / ||Q||_{H^1}
    int iterations = 0;
    bool converged = false;
    std::string best_seed;
};

GroundState ground_state_search(const TorusGrid& grid, const GroundStateOptions& opts = {});

/// Descent from one seed (projected onto the Nehari manifold first).
GroundState descend_to_ground_state(const Field& seed, const GroundStateOptions& opts = {});

// ---------------------------------------------------------------- snapshots

/// Flat binary snapshot: 32-byte header (magic "KGF1", uint32 d, uint64 n,
/// double L, 8 zero bytes) followed by n^d little-endian doubles, row-major.
void write_snapshot(std::ostream& out, const Field& f);
Field read_snapshot(std::istream& in);

}  // namespace duffkg
