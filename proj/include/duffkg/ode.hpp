// Adaptive integration of u'' + gamma u' + u = u^3.
//
// The integrated state is (u, v, D) with D' = gamma v^2, so the dissipation
// ledger D(t) = gamma * int_0^t v^2 is advanced by the same embedded pair and
// under the same error control as the trajectory itself. The energy identity
// E(t) - E(0) + D(t) = 0 is then an independent check on the integrator.

#pragma once

#include "duffkg/core.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace duffkg {

enum class EventKind {
    EnteredKPlus,
    EnteredKMinus,
    CrossedEnergyQuarter,
    BlowupThreshold,
    VelocitySignChange,
};

std::string_view to_string(EventKind k);

struct Sample {
    double t = 0.0;
    State state;
    double dissipation = 0.0;
};

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::CrossedEnergyQuarter;
    State state;
};

enum class StopReason { TimeBudget, BlowupThreshold, RequestedEvent, Predicate, StepUnderflow };

std::string_view to_string(StopReason r);

struct IntegratorOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.5;
    double blowup_threshold = 1e6;
    double t_max = 200.0;
    /// Integration stops at the (root-polished) time of the first of these.
    std::vector<EventKind> stop_on;
    /// Checked on every accepted sample; returning true stops integration.
    std::function<bool(const Sample&)> stop_when;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

/// Immutable record of one integration run.
class Trajectory {
public:
    const std::vector<Sample>& samples() const { return samples_; }
    const std::vector<Event>& events() const { return events_; }
    StopReason stop_reason() const { return stop_reason_; }
    double gamma() const { return gamma_; }
    const Sample& front() const { return samples_.front(); }
    const Sample& back() const { return samples_.back(); }

    std::optional<Event> first_event(EventKind kind) const;
    bool has_event(EventKind kind) const { return first_event(kind).has_value(); }

private:
    friend Trajectory integrate(const State&, Damping, const IntegratorOptions&);

    std::vector<Sample> samples_;
    std::vector<Event> events_;
    StopReason stop_reason_ = StopReason::TimeBudget;
    double gamma_ = 0.0;
};

/// Dormand-Prince 5(4) with the continuous extension used for event
/// localisation. Events are polished to 1e-12 in time. A step-size underflow
/// ends the run early with StopReason::StepUnderflow; the trajectory up to the
/// failure point is still returned.
Trajectory integrate(const State& s0, Damping gamma, const IntegratorOptions& opts);

/// max over samples of |E(sample) - E(first) + dissipation(sample)|.
double energy_identity_residual(const Trajectory& traj, Damping gamma);

struct BlowupEstimate {
    std::optional<double> t_est;  ///< empty when fewer than 3 samples have |u| > 100
    bool certified = false;
};

inline constexpr double kWindowDelta = 1e-3;
inline constexpr double kWindowLength = 5.0;

/// Extrapolated blow-up time from a least-squares fit of 1/|u| against t on
/// the last 20 samples with |u| > 100. Certified when the run entered K-,
/// when gamma = 0 with E(s0) > 1/4, or when u^2 >= 1 + delta held on a
/// trailing window of kWindowLength time units (or since the start).
/// Throws std::logic_error when the run has neither a BlowupThreshold nor an
/// EnteredKMinus event.
BlowupEstimate detect_blowup(const Trajectory& traj);

/// Samples with |u| > 100 that enter the blow-up fit, oldest first.
std::vector<Sample> blowup_tail(const Trajectory& traj);

/// CSV with header `t,u,v,E,dissipation`, 17 significant digits.
void write_csv(std::ostream& out, const Trajectory& traj);

}  // namespace duffkg
