#include "duffkg/kg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace duffkg {

KGState::KGState(Field u0, Field v0) : u(std::move(u0)), v(std::move(v0)) {
    if (!(u.grid() == v.grid())) throw std::invalid_argument("KGState: u and v live on different grids");
}

KGState KGState::constant(const TorusGrid& grid, double u0, double v0) {
    return KGState(Field::constant(grid, u0), Field::constant(grid, v0));
}

double J_functional(const Field& u) { return 0.5 * h1_squared(u) - 0.25 * l4_fourth(u); }

double K_functional(const Field& u) { return h1_squared(u) - l4_fourth(u); }

double kg_energy(const KGState& s) { return J_functional(s.u) + 0.5 * l2_squared(s.v); }

double energy_norm(const KGState& s) { return std::sqrt(h1_squared(s.u) + l2_squared(s.v)); }

Field nehari_project(const Field& w) {
    const double b = l4_fourth(w);
    if (!(b > 0.0)) throw std::domain_error("nehari_project: field has zero L4 norm");
    const double lambda = std::sqrt(h1_squared(w)) / std::sqrt(b);
    return w * lambda;
}

double nehari_quotient(const Field& w) {
    const double a = h1_squared(w);
    const double b = l4_fourth(w);
    if (!(b > 0.0)) throw std::domain_error("nehari_quotient: field has zero L4 norm");
    return 0.25 * a * a / b;
}

double stationarity_residual(const Field& q) {
    std::vector<double> cube(q.values().size());
    for (std::size_t i = 0; i < cube.size(); ++i) cube[i] = q.values()[i] * q.values()[i] * q.values()[i];
    const Field r = helmholtz(q) - Field::from_values(q.grid(), std::move(cube));
    return std::sqrt(l2_squared(r));
}

void KGOptions::validate() const {
    if (!(t_max > 0.0)) throw std::invalid_argument("KGOptions: t_max must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("KGOptions: dt must be positive");
    if (!(cfl > 0.0)) throw std::invalid_argument("KGOptions: cfl must be positive");
    if (!(min_dt > 0.0)) throw std::invalid_argument("KGOptions: min_dt must be positive");
    if (!(blowup_factor > 0.0)) throw std::invalid_argument("KGOptions: blowup_factor must be positive");
    if (!(sample_interval > 0.0)) throw std::invalid_argument("KGOptions: sample_interval must be positive");
}

std::string_view to_string(KGStop s) {
    switch (s) {
        case KGStop::TimeBudget: return "TimeBudget";
        case KGStop::Blowup: return "Blowup";
        case KGStop::NegativeEnergy: return "NegativeEnergy";
        case KGStop::DecayCertificate: return "DecayCertificate";
        case KGStop::InstabilityCertificate: return "InstabilityCertificate";
        case KGStop::StepUnderflow: return "StepUnderflow";
    }
    return "?";
}

namespace {

using Spectrum = std::vector<Complex>;

// RK4 on (U, W, D) with U, W the half-spectra of u and u_t and D the
// dissipation ledger.
class Stepper {
public:
    Stepper(const KGState& s0, double gamma)
        : grid_(s0.grid()),
          gamma_(gamma),
          U_(s0.u.coefficients()),
          W_(s0.v.coefficients()),
          values_(grid_.size()),
          cube_(grid_.size()),
          spec_(grid_.spectral_size()) {
        refresh();
    }

    const TorusGrid& grid() const { return grid_; }
    const Spectrum& U() const { return U_; }
    const Spectrum& W() const { return W_; }
    double dissipation() const { return D_; }
    /// Grid values of u at the current state.
    const std::vector<double>& u_values() const { return u_now_; }

    double max_u_squared() const {
        double m = 0.0;
        for (double x : u_now_) m = std::max(m, x * x);
        return m;
    }

    double grad_sq(const Spectrum& c) const { return weighted(c, true); }
    double l2_sq(const Spectrum& c) const { return weighted(c, false); }

    double l4_fourth_now() const {
        double sum = 0.0;
        for (double x : u_now_) sum += (x * x) * (x * x);
        return grid_.cell_volume() * sum;
    }

    bool finite() const {
        for (double x : u_now_) {
            if (!std::isfinite(x)) return false;
        }
        return std::isfinite(D_);
    }

    void step(double dt) {
        const std::size_t m = U_.size();
        Spectrum k1u, k1w, k2u, k2w, k3u, k3w, k4u, k4w;
        double k1d, k2d, k3d, k4d;
        Spectrum tu(m), tw(m);

        rhs(U_, W_, k1u, k1w, k1d);
        axpy(U_, k1u, 0.5 * dt, tu);
        axpy(W_, k1w, 0.5 * dt, tw);
        rhs(tu, tw, k2u, k2w, k2d);
        axpy(U_, k2u, 0.5 * dt, tu);
        axpy(W_, k2w, 0.5 * dt, tw);
        rhs(tu, tw, k3u, k3w, k3d);
        axpy(U_, k3u, dt, tu);
        axpy(W_, k3w, dt, tw);
        rhs(tu, tw, k4u, k4w, k4d);

        const double h6 = dt / 6.0;
        for (std::size_t s = 0; s < m; ++s) {
            U_[s] += h6 * (k1u[s] + 2.0 * k2u[s] + 2.0 * k3u[s] + k4u[s]);
            W_[s] += h6 * (k1w[s] + 2.0 * k2w[s] + 2.0 * k3w[s] + k4w[s]);
        }
        D_ += h6 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        refresh();
    }

    KGState state() const {
        return KGState(Field::from_coefficients(grid_, U_), Field::from_coefficients(grid_, W_));
    }

private:
    double weighted(const Spectrum& c, bool gradient) const {
        const auto& k2 = grid_.k_squared();
        const auto& w = grid_.mode_weight();
        double sum = 0.0;
        for (std::size_t s = 0; s < c.size(); ++s) sum += w[s] * (gradient ? k2[s] : 1.0) * std::norm(c[s]);
        return grid_.volume() * sum;
    }

    static void axpy(const Spectrum& x, const Spectrum& y, double a, Spectrum& out) {
        for (std::size_t s = 0; s < x.size(); ++s) out[s] = x[s] + a * y[s];
    }

    void refresh() {
        u_now_.resize(grid_.size());
        grid_.inverse(U_.data(), u_now_.data());
    }

    void rhs(const Spectrum& U, const Spectrum& W, Spectrum& dU, Spectrum& dW, double& dD) {
        const auto& k2 = grid_.k_squared();
        const auto& mask = grid_.dealias_mask();
        grid_.inverse(U.data(), values_.data());
        for (std::size_t i = 0; i < values_.size(); ++i) cube_[i] = values_[i] * values_[i] * values_[i];
        grid_.forward(cube_.data(), spec_.data());
        dU = W;
        dW.resize(U.size());
        for (std::size_t s = 0; s < U.size(); ++s) {
            dW[s] = -(1.0 + k2[s]) * U[s] - gamma_ * W[s] + mask[s] * spec_[s];
        }
        dD = gamma_ * l2_sq(W);
    }

    TorusGrid grid_;
    double gamma_;
    Spectrum U_;
    Spectrum W_;
    double D_ = 0.0;
    std::vector<double> u_now_;
    std::vector<double> values_;
    std::vector<double> cube_;
    Spectrum spec_;
};

double stable_dt(const KGOptions& opts, const TorusGrid& grid, double max_u2) {
    double dt = std::min(opts.dt, opts.cfl / std::sqrt(1.0 + grid.lambda_max()));
    return std::min(dt, opts.cfl / std::sqrt(1.0 + 3.0 * max_u2));
}

struct Diagnostics {
    double energy, K, h1sq;
};

Diagnostics diagnose(const Stepper& st) {
    const double h1sq = st.grad_sq(st.U()) + st.l2_sq(st.U());
    const double u4 = st.l4_fourth_now();
    return {0.5 * h1sq - 0.25 * u4 + 0.5 * st.l2_sq(st.W()), h1sq - u4, h1sq};
}

}  // namespace

KGTrajectory kg_integrate(const KGState& s0, double gamma, const KGOptions& opts) {
    opts.validate();
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("kg_integrate: gamma must be >= 0");

    Stepper st(s0, gamma);
    KGTrajectory traj{.samples = {}, .final_state = s0, .stop = KGStop::TimeBudget, .gamma = gamma,
                      .decay_time = {}, .instability_time = {}, .negative_time = {}};
    const TorusGrid& grid = st.grid();
    const double blowup_h1 = opts.blowup_factor * std::sqrt(grid.volume());

    double t = 0.0;
    double next_sample = 0.0;
    auto record = [&](const Diagnostics& dg) {
        traj.samples.push_back(KGSample{t, dg.energy, dg.K, std::sqrt(dg.h1sq), st.dissipation(),
                                        st.U()[0].real(), st.W()[0].real()});
    };

    for (;;) {
        if (!st.finite()) {
            traj.stop = KGStop::StepUnderflow;
            break;
        }
        const Diagnostics dg = diagnose(st);
        bool stop = false;
        if (opts.d_ref && dg.energy < *opts.d_ref) {
            if (dg.K >= 0.0) {
                if (!traj.decay_time) traj.decay_time = t;
                traj.stop = KGStop::DecayCertificate;
                stop = true;
            } else {
                if (!traj.instability_time) traj.instability_time = t;
                if (opts.stop_on_instability) {
                    traj.stop = KGStop::InstabilityCertificate;
                    stop = true;
                }
            }
        }
        if (dg.energy < 0.0 && !traj.negative_time) {
            traj.negative_time = t;
            traj.negative_energy = dg.energy;
            if (opts.stop_on_negative_energy && !stop) {
                traj.stop = KGStop::NegativeEnergy;
                stop = true;
            }
        }
        if (!stop && std::sqrt(dg.h1sq) >= blowup_h1) {
            traj.stop = KGStop::Blowup;
            stop = true;
        }
        const bool at_end = t >= opts.t_max;
        if (stop || at_end || t >= next_sample) {
            record(dg);
            while (next_sample <= t) next_sample += opts.sample_interval;
        }
        if (stop || at_end) break;

        double dt = stable_dt(opts, grid, st.max_u_squared());
        if (dt < opts.min_dt) {
            traj.stop = KGStop::StepUnderflow;
            record(dg);
            break;
        }
        // Land exactly on sample times and the end of the budget.
        const double target = std::min(next_sample, opts.t_max);
        if (t + dt >= target) {
            st.step(target - t);
            t = target;
        } else {
            st.step(dt);
            t += dt;
        }
    }

    traj.final_state = st.state();
    return traj;
}

double kg_energy_identity_residual(const KGTrajectory& traj) {
    if (traj.samples.empty()) return 0.0;
    const double e0 = traj.samples.front().energy;
    double r = 0.0;
    for (const auto& s : traj.samples) r = std::max(r, std::abs(s.energy - e0 + s.dissipation));
    return r;
}

void write_kg_csv(std::ostream& out, const KGTrajectory& traj) {
    out << "t,E_KG,K,H1norm,dissipation\n";
    char buf[160];
    for (const auto& s : traj.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.energy, s.K, s.h1, s.dissipation);
        out << buf;
    }
}

namespace {

KGState add(const KGState& a, const KGState& b, double scale) {
    return KGState(a.u + b.u * scale, a.v + b.v * scale);
}

KGFate fate_of(const KGState& s0, double gamma, const KGOptions& io) {
    const KGTrajectory traj = kg_integrate(s0, gamma, io);
    KGFate f;
    f.stop = traj.stop;
    if (traj.stop == KGStop::DecayCertificate) {
        f.kind = FateKind::DecayZero;
        f.cert_time = *traj.decay_time;
        f.cert_energy = traj.samples.back().energy;
    } else if (traj.negative_time) {
        f.kind = FateKind::BlowUp;
        f.cert_time = *traj.negative_time;
        f.cert_energy = traj.negative_energy;
    } else if (traj.instability_time) {
        f.kind = FateKind::BlowUp;
        f.cert_time = *traj.instability_time;
        f.cert_energy = traj.samples.back().energy;
    }
    return f;
}

}  // namespace

KGFate kg_fate_experiment(const KGState& base, const KGState& perturbation, double gamma,
                          const KGFateOptions& opts) {
    if (!opts.integrator.d_ref) throw std::invalid_argument("kg_fate_experiment: d_ref must be set");
    KGOptions io = opts.integrator;
    // Keep going past the instability set to exhibit the E_KG < 0 witness.
    io.stop_on_instability = false;
    io.stop_on_negative_energy = true;

    KGFate f = fate_of(add(base, perturbation, 1.0), gamma, io);
    const double pnorm = energy_norm(perturbation);
    if (f.kind == FateKind::Undetermined || pnorm == 0.0) return f;

    double scale = 1.0;
    for (int i = 0; i < opts.max_doublings; ++i) {
        const KGFate g = fate_of(add(base, perturbation, 2.0 * scale), gamma, io);
        if (g.kind != f.kind) break;
        scale *= 2.0;
    }
    f.margin = scale * pnorm;
    return f;
}

KGState random_perturbation(const TorusGrid& grid, double norm, std::uint64_t seed, int max_mode) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const std::size_t n = static_cast<std::size_t>(grid.points());
    const std::size_t half = n / 2 + 1;
    auto draw = [&]() {
        std::vector<Complex> c(grid.spectral_size());
        for (std::size_t s = 0; s < c.size(); ++s) {
            bool low = static_cast<int>(s % half) <= max_mode;
            std::size_t rest = s / half;
            for (int a = 0; a + 1 < grid.dim(); ++a) {
                const int i = static_cast<int>(rest % n);
                const int m = i <= static_cast<int>(n / 2) ? i : i - static_cast<int>(n);
                low = low && std::abs(m) <= max_mode;
                rest /= n;
            }
            const double re = dist(rng);
            const double im = dist(rng);
            if (low) c[s] = Complex(re, s == 0 ? 0.0 : im);
        }
        return Field::from_coefficients(grid, std::move(c));
    };
    KGState p(draw(), draw());
    const double current = energy_norm(p);
    if (norm == 0.0 || current == 0.0) return KGState(Field(grid), Field(grid));
    const double s = norm / current;
    return KGState(p.u * s, p.v * s);
}

double continuity_probe(const KGState& s0, double delta, double T, double gamma, std::uint64_t seed,
                        const KGOptions& opts) {
    if (delta == 0.0) return 0.0;
    if (!(delta > 0.0)) throw std::invalid_argument("continuity_probe: delta must be nonnegative");
    if (!(T > 0.0)) throw std::invalid_argument("continuity_probe: T must be positive");
    opts.validate();

    const KGState pert = random_perturbation(s0.grid(), delta, seed);
    Stepper a(s0, gamma);
    Stepper b(add(s0, pert, 1.0), gamma);
    const TorusGrid& grid = a.grid();
    const double blowup_h1 = opts.blowup_factor * std::sqrt(grid.volume());

    auto distance = [&]() {
        Spectrum du(a.U().size()), dw(a.W().size());
        for (std::size_t s = 0; s < du.size(); ++s) {
            du[s] = a.U()[s] - b.U()[s];
            dw[s] = a.W()[s] - b.W()[s];
        }
        return std::sqrt(a.grad_sq(du) + a.l2_sq(du) + a.l2_sq(dw));
    };

    double sup = distance();
    double t = 0.0;
    while (t < T) {
        // Both runs share every step so that the difference carries no step-size noise.
        double dt = std::min(stable_dt(opts, grid, a.max_u_squared()), stable_dt(opts, grid, b.max_u_squared()));
        if (dt < opts.min_dt) throw std::logic_error("continuity_probe: step underflow before T");
        const bool last = t + dt >= T;
        if (last) dt = T - t;
        a.step(dt);
        b.step(dt);
        t = last ? T : t + dt;
        if (!a.finite() || std::sqrt(a.grad_sq(a.U()) + a.l2_sq(a.U())) >= blowup_h1) {
            throw std::logic_error("continuity_probe: base solution blows up before T");
        }
        sup = std::max(sup, distance());
    }
    return sup / delta;
}

}  // namespace duffkg
