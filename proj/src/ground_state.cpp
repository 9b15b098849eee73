#include "duffkg/kg.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace duffkg {

SymmetryWitness symmetry_breaking_witness(const TorusGrid& grid, double beta_coeff) {
    const double lambda1 = grid.lambda1();
    if (!(lambda1 < 2.0)) throw std::invalid_argument("symmetry_breaking_witness: requires lambda1 < 2");
    if (!std::isfinite(beta_coeff)) throw std::invalid_argument("symmetry_breaking_witness: beta must be finite");

    const double V = grid.volume();
    const double L = grid.side();
    const Field phi0 = Field::constant(grid, 1.0 / std::sqrt(V));
    const Field phi1 = Field::sample(grid, [&](const std::vector<double>& x) {
        return std::sqrt(2.0 / V) * std::cos(2.0 * std::numbers::pi * x[0] / L);
    });
    const Field one = Field::constant(grid, 1.0);

    SymmetryWitness w{.h = Field(grid), .alpha = 0.0, .beta_coeff = beta_coeff, .J = V / 4.0, .K = 0.0};
    if (beta_coeff == 0.0) {
        w.J = J_functional(one);
        w.K = K_functional(one);
        return w;
    }

    const double a = 2.0 * std::sqrt(V);
    const double b = 5.0 - lambda1;
    auto h_of = [&](double alpha) { return phi0 * alpha + phi1 * beta_coeff; };
    auto K_of = [&](double alpha) { return K_functional(one + h_of(alpha)); };

    // K(1 + h) = -a alpha - b beta^2 + O(|alpha|^2 + |beta|^3), so the root
    // sits at alpha ~ -b beta^2 / a, inside [-2 b beta^2 / a, 0].
    const double lo = -2.0 * b * beta_coeff * beta_coeff / a;
    const double hi = 0.0;
    const double f_lo = K_of(lo);
    const double f_hi = K_of(hi);
    if (!(f_lo > 0.0 && f_hi < 0.0)) {
        throw std::domain_error("symmetry_breaking_witness: K(1+h) has no sign change on the alpha interval; "
                                "beta is too large");
    }
    std::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(K_of, lo, hi, f_lo, f_hi,
                                                        boost::math::tools::eps_tolerance<double>(52), iters);
    const double alpha = 0.5 * (root.first + root.second);
    w.alpha = alpha;
    w.h = h_of(alpha);
    const Field q = one + w.h;
    w.J = J_functional(q);
    w.K = K_functional(q);
    return w;
}

namespace {

Field cube(const Field& f) {
    std::vector<double> c(f.values().size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = f.values()[i] * f.values()[i] * f.values()[i];
    return Field::from_values(f.grid(), std::move(c));
}

// H^1-gradient of R(w) = A^2 / (4 B): A w / B - A^2 (1 - Delta)^{-1} w^3 / B^2.
Field preconditioned_gradient(const Field& w, double A, double B) {
    return w * (A / B) - helmholtz_inverse(cube(w)) * (A * A / (B * B));
}

constexpr double kStationarityTarget = 1e-6;

Field random_seed(const TorusGrid& grid, std::mt19937_64& rng, double amplitude) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    constexpr int kModes = 4;
    struct Wave {
        int m[3];
        double amp, phase;
    };
    std::vector<Wave> waves;
    for (int i = 0; i < 6; ++i) {
        Wave wv{};
        for (int a = 0; a < 3; ++a) wv.m[a] = static_cast<int>(std::lround(unit(rng) * kModes));
        wv.amp = amplitude * unit(rng);
        wv.phase = phase(rng);
        waves.push_back(wv);
    }
    const double k0 = 2.0 * std::numbers::pi / grid.side();
    return Field::sample(grid, [&](const std::vector<double>& x) {
        double s = 1.0;
        for (const auto& wv : waves) {
            double arg = wv.phase;
            for (std::size_t a = 0; a < x.size(); ++a) arg += k0 * wv.m[a] * x[a];
            s += wv.amp * std::cos(arg);
        }
        return s;
    });
}

}  // namespace

GroundState descend_to_ground_state(const Field& seed, const GroundStateOptions& opts) {
    Field w = nehari_project(seed);
    double R = nehari_quotient(w);
    double tau = 1.0;
    std::deque<double> history{R};
    double best_residual = std::numeric_limits<double>::infinity();
    int since_improvement = 0;

    GroundState gs{.Q = w, .d = R, .residual = 0.0, .relative_residual = 0.0, .iterations = 0, .converged = false, .best_seed = {}};
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        const double res = stationarity_residual(w);
        const double rel = res / std::sqrt(h1_squared(w));
        if (rel <= opts.residual_tolerance) break;
        if (res < best_residual * (1.0 - 1e-3)) {
            best_residual = res;
            since_improvement = 0;
        } else if (++since_improvement >= opts.stall_window && history.size() > static_cast<std::size_t>(opts.stall_window) &&
                   history.front() - R <= opts.stall_tolerance * R) {
            break;
        }

        const double A = h1_squared(w);
        const double B = l4_fourth(w);
        const Field P = preconditioned_gradient(w, A, B);
        const double slope = h1_squared(P);
        if (slope == 0.0) break;

        // Armijo backtracking in the H^1 metric.
        // Cap below 2: high modes see the preconditioned Hessian as ~identity, so
        // tau >= 2 stops them contracting.
        tau = std::min(2.0 * tau, 1.5);
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            const Field trial = w - P * tau;
            double Rt = std::numeric_limits<double>::infinity();
            if (l4_fourth(trial) > 0.0) Rt = nehari_quotient(trial);
            if (Rt <= R - 1e-4 * tau * slope) {
                w = nehari_project(trial);
                R = nehari_quotient(w);
                accepted = true;
                break;
            }
            // Near a critical point the decrease in R drops below rounding; fall back to
            // the residual as the merit function.
            if (std::abs(Rt - R) <= 1e-13 * R) {
                Field projected = nehari_project(trial);
                if (stationarity_residual(projected) < res) {
                    w = std::move(projected);
                    R = nehari_quotient(w);
                    accepted = true;
                    break;
                }
            }
            tau *= 0.5;
        }
        if (!accepted) break;  // no descent possible at working precision
        history.push_back(R);
        if (history.size() > static_cast<std::size_t>(opts.stall_window) + 1) history.pop_front();
    }

    gs.Q = w;
    gs.d = J_functional(w);
    gs.residual = stationarity_residual(w);
    gs.relative_residual = gs.residual / std::sqrt(h1_squared(w));
    gs.iterations = it;
    gs.converged = gs.relative_residual <= kStationarityTarget;
    return gs;
}

GroundState ground_state_search(const TorusGrid& grid, const GroundStateOptions& opts) {
    std::mt19937_64 rng(opts.seed);
    std::vector<std::pair<std::string, Field>> seeds;
    for (int i = 0; i < opts.seeds; ++i) {
        // Alternate near-constant and strongly modulated seeds.
        const double amplitude = (i % 2 == 0) ? 0.1 : 1.5;
        seeds.emplace_back("random-" + std::to_string(i), random_seed(grid, rng, amplitude));
    }
    if (opts.use_witness_seed && grid.lambda1() < 2.0) {
        const SymmetryWitness w = symmetry_breaking_witness(grid, opts.witness_beta);
        seeds.emplace_back("witness", Field::constant(grid, 1.0) + w.h);
    }

    std::optional<GroundState> best;
    for (const auto& [name, seed] : seeds) {
        if (!(l4_fourth(seed) > 0.0)) continue;
        GroundState gs = descend_to_ground_state(seed, opts);
        gs.best_seed = name;
        const bool better = !best || (gs.converged && !best->converged) ||
                            (gs.converged == best->converged && gs.d < best->d);
        if (better) best = std::move(gs);
    }
    if (!best) throw std::runtime_error("ground_state_search: no usable seed");
    return *best;
}

}  // namespace duffkg
