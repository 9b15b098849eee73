#pragma once

#include "duffkg/core.hpp"
#include "duffkg/ode.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace duffkg {

enum class FateKind { BlowUp, DecayZero, ConvergePlus, ConvergeMinus, Undetermined };

/// What justified a fate.
enum class Certificate {
    EnteredKPlus,            // forward-invariant decay region reached
    EnteredKMinus,           // forward-invariant blow-up region reached
    UndampedAboveThreshold,  // gamma = 0 and E > 1/4
    ThresholdClosedForm,     // gamma = 0 and E = 1/4: explicit heteroclinic / blow-up
    SustainedWindow,            // u^2 >= 1 + delta held over a window with E < 1/4
    Equilibrium,             // (+-1, 0)
    BisectionLimit,          // issued by a threshold search, not by classify_fate
    BudgetExhausted,
    StepUnderflow,
};

std::string_view to_string(FateKind k);
std::string_view to_string(Certificate c);
FateKind mirror(FateKind k);

struct Fate {
    FateKind kind = FateKind::Undetermined;
    Certificate certificate = Certificate::BudgetExhausted;
    double cert_time = 0.0;
    State witness;
};

/// Certificates on region entry are only issued once E < 1/4 - kCertificateMargin,
/// so that they survive re-integration at tighter tolerance.
inline constexpr double kCertificateMargin = 1e-8;

/// States with |E - 1/4| below this are treated as lying on the threshold shell.
inline constexpr double kShellTolerance = 1e-14;

/// Integrates from s0 until a certificate fires or opts.t_max is exhausted.
/// Undetermined is an ordinary result, never an error. Any stop_on/stop_when
/// set in opts is replaced by the classifier's own stopping rule.
Fate classify_fate(const State& s0, Damping gamma, const IntegratorOptions& opts);

/// Decay rate -d/dt log|(u, v) - target| fitted by least squares on the
/// trailing samples within distance 0.1 of target. Returns +infinity when the
/// tail sits exactly on the target. Throws std::logic_error when fewer than
/// 5 usable tail samples exist.
double exponential_rate_estimate(const Trajectory& traj, const State& target);

/// v as a function of u along the initial span where v > 0. Cubic Hermite
/// interpolation of the samples, with slopes dv/du taken from the vector field.
class VelocityProfile {
public:
    explicit VelocityProfile(const Trajectory& traj);

    double u_begin() const { return u_.front(); }
    double u_end() const { return u_.back(); }
    double operator()(double x) const;

private:
    std::vector<double> u_;
    std::vector<double> v_;
    std::vector<double> dv_;
};

/// phi(x) = v1(u1^{-1}(x)) - v2(u2^{-1}(x)) at n evenly spaced interior points
/// of the common increasing span of two runs from the same initial state.
std::vector<double> velocity_profile_difference(const Trajectory& less_damped,
                                                const Trajectory& more_damped, int n);

/// One CSV row `u0,u1,gamma,kind,cert_time,witness_u,witness_v` (no newline).
std::string fate_csv_row(const State& s0, double gamma, const Fate& fate);
inline constexpr std::string_view kFateCsvHeader = "u0,u1,gamma,kind,cert_time,witness_u,witness_v";

}  // namespace duffkg
