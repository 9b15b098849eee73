// duffkg: command-line front end.
//
// Exit codes: 0 success, 2 usage error, 3 numerical failure.

#include "duffkg/basin.hpp"
#include "duffkg/critical.hpp"
#include "duffkg/kg.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

using namespace duffkg;

namespace {

constexpr int kUsageError = 2;
constexpr int kNumericalFailure = 3;

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    std::optional<double> t_max;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out;
};

// Writes to --out when given, otherwise stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
            if (!*file_) throw std::runtime_error("cannot write " + path);
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

IntegratorOptions ode_options(const Globals& g, double default_t_max) {
    IntegratorOptions o;
    o.rel_tol = g.rel_tol;
    o.abs_tol = g.abs_tol;
    o.t_max = g.t_max.value_or(default_t_max);
    o.validate();
    return o;
}

struct GridArgs {
    int dim = 1;
    double L = 8.0;
    int n = 128;

    void add_to(CLI::App* app) {
        app->add_option("--dim", dim, "Torus dimension (1, 2 or 3)")->check(CLI::Range(1, 3));
        app->add_option("--L", L, "Side length");
        app->add_option("--n", n, "Grid points per axis (power of two)");
    }
    TorusGrid grid() const { return TorusGrid(dim, L, n); }
};

double reference_ground_energy(const TorusGrid& grid, std::uint64_t seed) {
    GroundStateOptions gopts;
    gopts.seed = seed;
    const GroundState gs = ground_state_search(grid, gopts);
    return gs.d;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fate classification and threshold search for the damped Duffing and Klein-Gordon equations"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Read `key = value` defaults from a file; flags override it");

    Globals g;
    app.add_option("--rel-tol", g.rel_tol, "Relative tolerance of the ODE integrator")->check(CLI::PositiveNumber);
    app.add_option("--abs-tol", g.abs_tol, "Absolute tolerance of the ODE integrator")->check(CLI::PositiveNumber);
    app.add_option("--t-max", g.t_max, "Time budget")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output file (default: stdout)");

    double u0 = 0.0, u1 = 0.0, gamma = 0.0, width = 1e-8;

    auto* simulate = app.add_subcommand("simulate", "Integrate one trajectory and write it as CSV");
    simulate->add_option("--u0", u0)->required();
    simulate->add_option("--u1", u1)->required();
    simulate->add_option("--gamma", gamma)->check(CLI::NonNegativeNumber);

    auto* classify = app.add_subcommand("classify", "Certified fate of one initial state");
    classify->add_option("--u0", u0)->required();
    classify->add_option("--u1", u1)->required();
    classify->add_option("--gamma", gamma)->check(CLI::NonNegativeNumber);

    BasinJob job;
    std::string csv_path, pgm_path;
    auto* basin = app.add_subcommand("basin", "Fate map over a phase-plane window (CSV + PGM)");
    basin->add_option("--u-min", job.u_min);
    basin->add_option("--u-max", job.u_max);
    basin->add_option("--v-min", job.v_min);
    basin->add_option("--v-max", job.v_max);
    basin->add_option("--nx", job.nx);
    basin->add_option("--ny", job.ny);
    basin->add_option("--gamma", job.gamma)->check(CLI::NonNegativeNumber);
    basin->add_option("--csv", csv_path, "CSV of fate rows (default: <out>.csv)");
    basin->add_option("--pgm", pgm_path, "P5 image (default: <out>.pgm)");

    auto* crit_gamma = app.add_subcommand("critical-gamma", "Bracket gamma0 (N2) or gamma0 < gamma1 (N3)");
    crit_gamma->add_option("--u0", u0)->required();
    crit_gamma->add_option("--u1", u1)->required();
    crit_gamma->add_option("--width", width)->check(CLI::PositiveNumber);

    auto* crit_u1 = app.add_subcommand("critical-u1", "Bracket U1 for initial data (-1, u1)");
    crit_u1->add_option("--gamma", gamma)->required()->check(CLI::PositiveNumber);
    crit_u1->add_option("--width", width)->check(CLI::PositiveNumber);

    GridArgs grid_args;
    double dt = 0.01;
    std::string init_path, snapshot_path;
    auto* kg_run = app.add_subcommand("kg-run", "Integrate the Klein-Gordon equation; CSV summary");
    grid_args.add_to(kg_run);
    kg_run->add_option("--u0", u0, "Constant initial position");
    kg_run->add_option("--u1", u1, "Constant initial velocity");
    kg_run->add_option("--init", init_path, "Initial position snapshot (KGF1), overrides --u0");
    kg_run->add_option("--gamma", gamma)->check(CLI::NonNegativeNumber);
    kg_run->add_option("--dt", dt)->check(CLI::PositiveNumber);
    kg_run->add_option("--snapshot", snapshot_path, "Write the final position as KGF1");

    int seeds = 16;
    auto* kg_ground = app.add_subcommand("kg-ground", "Ground-state energy d by Nehari descent");
    grid_args.add_to(kg_ground);
    kg_ground->add_option("--seeds", seeds)->check(CLI::NonNegativeNumber);
    kg_ground->add_option("--snapshot", snapshot_path, "Write Q as KGF1");

    double beta = 0.05;
    auto* kg_witness = app.add_subcommand("kg-witness", "Symmetry-breaking element 1 + h on the Nehari manifold");
    grid_args.add_to(kg_witness);
    kg_witness->add_option("--beta", beta);

    double eps = 1e-3;
    int mode = 1;
    std::optional<double> d_ref;
    auto* kg_fate = app.add_subcommand("kg-fate", "Certified fate of constant data plus a cosine perturbation");
    grid_args.add_to(kg_fate);
    kg_fate->add_option("--u0", u0)->required();
    kg_fate->add_option("--u1", u1)->required();
    kg_fate->add_option("--gamma", gamma)->check(CLI::NonNegativeNumber);
    kg_fate->add_option("--eps", eps, "Perturbation norm (H1 x L2)")->check(CLI::NonNegativeNumber);
    kg_fate->add_option("--mode", mode, "Cosine mode number along the first axis");
    kg_fate->add_option("--d-ref", d_ref, "Certificate level (default: 0.99 x ground-state energy)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        Output out_holder(basin->parsed() ? std::string() : g.out);
        std::ostream& out = out_holder.stream();

        if (simulate->parsed()) {
            const Trajectory traj = integrate(State(u0, u1), Damping(gamma), ode_options(g, 200.0));
            write_csv(out, traj);
            if (traj.stop_reason() == StopReason::StepUnderflow) throw NumericalFailure("step-size underflow");
        } else if (classify->parsed()) {
            const State s0(u0, u1);
            const Fate f = classify_fate(s0, Damping(gamma), ode_options(g, 200.0));
            out << kFateCsvHeader << '\n' << fate_csv_row(s0, gamma, f) << '\n';
        } else if (basin->parsed()) {
            job.integrator = ode_options(g, 200.0);
            job.threads = g.threads;
            job.csv_path = !csv_path.empty() ? csv_path : (g.out.empty() ? "" : g.out + ".csv");
            job.pgm_path = !pgm_path.empty() ? pgm_path : (g.out.empty() ? "" : g.out + ".pgm");
            if (job.csv_path.empty() && job.pgm_path.empty()) {
                throw CLI::ValidationError("basin", "needs --out, --csv or --pgm");
            }
            run_basin(job);
        } else if (crit_gamma->parsed()) {
            const State s0(u0, u1);
            SearchOptions so;
            so.integrator = ode_options(g, 200.0);
            out << kSearchCsvHeader << '\n';
            const Region r = classify_region(s0);
            if (r == Region::N2) {
                out << search_csv_row(u0, u1, "gamma0", find_gamma0_n2(s0, width, so)) << '\n';
            } else if (r == Region::N3) {
                const N3Brackets b = find_gamma0_gamma1_n3(s0, width, so);
                out << search_csv_row(u0, u1, "gamma0", b.gamma0) << '\n';
                out << search_csv_row(u0, u1, "gamma1", b.gamma1) << '\n';
            } else {
                throw CLI::ValidationError("critical-gamma",
                                           "initial state lies in " + std::string(to_string(r)) + ", not N2 or N3");
            }
        } else if (crit_u1->parsed()) {
            SearchOptions so;
            so.integrator = ode_options(g, 200.0);
            const Bracket b = find_u1(Damping(gamma), width, so);
            out << kSearchCsvHeader << '\n' << search_csv_row(-1.0, b.midpoint(), "U1@gamma=" + fmt(gamma), b) << '\n';
        } else if (kg_run->parsed()) {
            const TorusGrid grid = grid_args.grid();
            Field u = Field::constant(grid, u0);
            if (!init_path.empty()) {
                std::ifstream in(init_path, std::ios::binary);
                if (!in) throw std::runtime_error("cannot read " + init_path);
                u = read_snapshot(in);
                if (!(u.grid() == grid)) throw CLI::ValidationError("kg-run", "snapshot grid differs from --dim/--L/--n");
            }
            KGOptions ko;
            ko.t_max = g.t_max.value_or(20.0);
            ko.dt = dt;
            const KGTrajectory traj = kg_integrate(KGState(u, Field::constant(grid, u1)), gamma, ko);
            write_kg_csv(out, traj);
            if (!snapshot_path.empty()) {
                std::ofstream snap(snapshot_path, std::ios::binary | std::ios::trunc);
                if (!snap) throw std::runtime_error("cannot write " + snapshot_path);
                write_snapshot(snap, traj.final_state.u);
            }
            std::cerr << "stop=" << to_string(traj.stop) << '\n';
            if (traj.stop == KGStop::StepUnderflow) throw NumericalFailure("step-size underflow");
        } else if (kg_ground->parsed()) {
            const TorusGrid grid = grid_args.grid();
            GroundStateOptions go;
            go.seed = g.seed;
            go.seeds = seeds;
            const GroundState gs = ground_state_search(grid, go);
            out << "dim,L,n,lambda1,d,V_over_4,residual,relative_residual,converged,seed\n"
                << grid.dim() << ',' << fmt(grid.side()) << ',' << grid.points() << ',' << fmt(grid.lambda1()) << ','
                << fmt(gs.d) << ',' << fmt(grid.volume() / 4.0) << ',' << fmt(gs.residual) << ','
                << fmt(gs.relative_residual) << ',' << (gs.converged ? 1 : 0) << ',' << gs.best_seed << '\n';
            if (!snapshot_path.empty()) {
                std::ofstream snap(snapshot_path, std::ios::binary | std::ios::trunc);
                if (!snap) throw std::runtime_error("cannot write " + snapshot_path);
                write_snapshot(snap, gs.Q);
            }
            if (!gs.converged) {
                std::cerr << "warning: descent did not reach the stationarity target\n";
                return kNumericalFailure;
            }
        } else if (kg_witness->parsed()) {
            const TorusGrid grid = grid_args.grid();
            const SymmetryWitness w = symmetry_breaking_witness(grid, beta);
            out << "dim,L,n,lambda1,beta,alpha,J,K,V_over_4\n"
                << grid.dim() << ',' << fmt(grid.side()) << ',' << grid.points() << ',' << fmt(grid.lambda1()) << ','
                << fmt(beta) << ',' << fmt(w.alpha) << ',' << fmt(w.J) << ',' << fmt(w.K) << ','
                << fmt(grid.volume() / 4.0) << '\n';
        } else if (kg_fate->parsed()) {
            const TorusGrid grid = grid_args.grid();
            KGFateOptions fo;
            fo.integrator.t_max = g.t_max.value_or(100.0);
            fo.integrator.d_ref = d_ref.value_or(0.99 * reference_ground_energy(grid, g.seed));
            const KGState base = KGState::constant(grid, u0, u1);
            const Field c = Field::sample(grid, [&](const std::vector<double>& x) {
                return std::cos(2.0 * 3.14159265358979323846 * mode * x[0] / grid.side());
            });
            const double cn = std::sqrt(h1_squared(c));
            const KGState pert(c * (eps / cn), Field(grid));
            const KGFate f = kg_fate_experiment(base, pert, gamma, fo);
            out << "u0,u1,gamma,eps,d_ref,kind,stop,cert_time,cert_energy,margin\n"
                << fmt(u0) << ',' << fmt(u1) << ',' << fmt(gamma) << ',' << fmt(eps) << ','
                << fmt(*fo.integrator.d_ref) << ',' << to_string(f.kind) << ',' << to_string(f.stop) << ','
                << fmt(f.cert_time) << ',' << fmt(f.cert_energy) << ',' << fmt(f.margin) << '\n';
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n' << app.help();
        return kUsageError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
    return 0;
}
