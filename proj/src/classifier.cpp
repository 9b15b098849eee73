#include "duffkg/classifier.hpp"

#include <boost/math/interpolators/cubic_hermite.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace duffkg {

std::string_view to_string(FateKind k) {
    switch (k) {
        case FateKind::BlowUp: return "BlowUp";
        case FateKind::DecayZero: return "DecayZero";
        case FateKind::ConvergePlus: return "ConvergePlus";
        case FateKind::ConvergeMinus: return "ConvergeMinus";
        case FateKind::Undetermined: return "Undetermined";
    }
    return "?";
}

std::string_view to_string(Certificate c) {
    switch (c) {
        case Certificate::EnteredKPlus: return "EnteredKPlus";
        case Certificate::EnteredKMinus: return "EnteredKMinus";
        case Certificate::UndampedAboveThreshold: return "UndampedAboveThreshold";
        case Certificate::ThresholdClosedForm: return "ThresholdClosedForm";
        case Certificate::SustainedWindow: return "SustainedWindow";
        case Certificate::Equilibrium: return "Equilibrium";
        case Certificate::BisectionLimit: return "BisectionLimit";
        case Certificate::BudgetExhausted: return "BudgetExhausted";
        case Certificate::StepUnderflow: return "StepUnderflow";
    }
    return "?";
}

FateKind mirror(FateKind k) {
    if (k == FateKind::ConvergePlus) return FateKind::ConvergeMinus;
    if (k == FateKind::ConvergeMinus) return FateKind::ConvergePlus;
    return k;
}

namespace {

Fate sub_threshold_fate(const State& s, double t) {
    if (std::abs(s.u()) < 1.0) return Fate{FateKind::DecayZero, Certificate::EnteredKPlus, t, s};
    return Fate{FateKind::BlowUp, Certificate::EnteredKMinus, t, s};
}

// gamma = 0 on the E = 1/4 shell with v > 0.
Fate closed_form_fate(const State& s) {
    if (s.u() > 1.0) return Fate{FateKind::BlowUp, Certificate::ThresholdClosedForm, 0.0, s};
    if (s.u() < -1.0) return Fate{FateKind::ConvergeMinus, Certificate::ThresholdClosedForm, 0.0, s};
    return Fate{FateKind::ConvergePlus, Certificate::ThresholdClosedForm, 0.0, s};
}

Fate mirrored(Fate f) {
    f.kind = mirror(f.kind);
    f.witness = -f.witness;
    return f;
}

Fate classify_impl(const State& s0, Damping gamma, const IntegratorOptions& opts, int depth);

Fate integrate_and_certify(const State& s0, Damping gamma, const IntegratorOptions& base) {
    IntegratorOptions opts = base;
    opts.stop_on.clear();

    double window_start = std::numeric_limits<double>::quiet_NaN();
    opts.stop_when = [&window_start](const Sample& smp) {
        const double e = energy(smp.state);
        if (e < kEnergyThreshold - kCertificateMargin) return true;
        const double u2 = smp.state.u() * smp.state.u();
        if (e < kEnergyThreshold && u2 >= 1.0 + kWindowDelta) {
            if (std::isnan(window_start)) window_start = smp.t;
            return smp.t - window_start >= kWindowLength;
        }
        window_start = std::numeric_limits<double>::quiet_NaN();
        return false;
    };

    const Trajectory traj = integrate(s0, gamma, opts);
    const Sample& last = traj.back();

    switch (traj.stop_reason()) {
        case StopReason::Predicate: {
            const double e = energy(last.state);
            if (e < kEnergyThreshold - kCertificateMargin) {
                Fate f = sub_threshold_fate(last.state, last.t);
                const auto entry = traj.first_event(f.kind == FateKind::DecayZero
                                                        ? EventKind::EnteredKPlus
                                                        : EventKind::EnteredKMinus);
                if (entry) f.cert_time = entry->t;
                return f;
            }
            return Fate{FateKind::BlowUp, Certificate::SustainedWindow, last.t, last.state};
        }
        case StopReason::BlowupThreshold: {
            const auto est = detect_blowup(traj);
            if (est.certified) {
                return Fate{FateKind::BlowUp, Certificate::SustainedWindow, last.t, last.state};
            }
            return Fate{FateKind::Undetermined, Certificate::BudgetExhausted, last.t, last.state};
        }
        case StopReason::StepUnderflow:
            return Fate{FateKind::Undetermined, Certificate::StepUnderflow, last.t, last.state};
        case StopReason::TimeBudget:
        case StopReason::RequestedEvent:
            break;
    }
    return Fate{FateKind::Undetermined, Certificate::BudgetExhausted, last.t, last.state};
}

Fate classify_impl(const State& s0, Damping gamma, const IntegratorOptions& opts, int depth) {
    if (s0.v() < 0.0) return mirrored(classify_impl(-s0, gamma, opts, depth));

    // Rounding can push a state meant to sit on the threshold shell into K; the shell wins.
    if (gamma.undamped() && s0.v() > 0.0 && std::abs(energy(s0) - kEnergyThreshold) <= kShellTolerance) {
        return closed_form_fate(s0);
    }

    const Region region = classify_region(s0);
    switch (region) {
        case Region::EquilibriumPlus:
            return Fate{FateKind::ConvergePlus, Certificate::Equilibrium, 0.0, s0};
        case Region::EquilibriumMinus:
            return Fate{FateKind::ConvergeMinus, Certificate::Equilibrium, 0.0, s0};
        case Region::EquilibriumZero:
        case Region::KPlus:
        case Region::KMinus:
            return sub_threshold_fate(s0, 0.0);
        default:
            break;
    }

    const double e = energy(s0);
    if (region == Region::NBoundaryCurve) {
        // No certificate applies on the v = 0 axis; take one micro-step off the axis and retry.
        if (depth > 0) return Fate{FateKind::Undetermined, Certificate::BudgetExhausted, 0.0, s0};
        IntegratorOptions micro = opts;
        micro.stop_on.clear();
        micro.stop_when = nullptr;
        micro.t_max = 1e-6;
        const Trajectory step = integrate(s0, gamma, micro);
        Fate f = classify_impl(step.back().state, gamma, opts, depth + 1);
        f.cert_time += step.back().t;
        return f;
    }

    if (gamma.undamped()) {
        if (std::abs(e - kEnergyThreshold) <= kShellTolerance) return closed_form_fate(s0);
        return Fate{FateKind::BlowUp, Certificate::UndampedAboveThreshold, 0.0, s0};
    }
    return integrate_and_certify(s0, gamma, opts);
}

}  // namespace

Fate classify_fate(const State& s0, Damping gamma, const IntegratorOptions& opts) {
    return classify_impl(s0, gamma, opts, 0);
}

double exponential_rate_estimate(const Trajectory& traj, const State& target) {
    const auto& s = traj.samples();
    auto dist = [&](const Sample& smp) {
        return std::hypot(smp.state.u() - target.u(), smp.state.v() - target.v());
    };
    std::size_t k0 = s.size();
    while (k0 > 0 && dist(s[k0 - 1]) <= 0.1) --k0;
    if (k0 == s.size()) throw std::logic_error("exponential_rate_estimate: tail too short");

    bool all_zero = true;
    double st = 0, sy = 0, stt = 0, sty = 0;
    int n = 0;
    for (std::size_t k = k0; k < s.size(); ++k) {
        const double d = dist(s[k]);
        if (d != 0.0) all_zero = false;
        if (d < 1e-9) continue;  // integrator noise floor
        const double y = std::log(d);
        st += s[k].t;
        sy += y;
        stt += s[k].t * s[k].t;
        sty += s[k].t * y;
        ++n;
    }
    if (all_zero) return std::numeric_limits<double>::infinity();
    if (n < 5) throw std::logic_error("exponential_rate_estimate: tail too short");
    const double slope = (n * sty - st * sy) / (n * stt - st * st);
    return -slope;
}

VelocityProfile::VelocityProfile(const Trajectory& traj) {
    for (const auto& smp : traj.samples()) {
        if (!(smp.state.v() > 0.0)) break;
        if (!u_.empty() && !(smp.state.u() > u_.back())) break;
        u_.push_back(smp.state.u());
        v_.push_back(smp.state.v());
        // dv/du straight from the vector field.
        dv_.push_back((smp.state.u() * smp.state.u() * smp.state.u() - smp.state.u() -
                       traj.gamma() * smp.state.v()) / smp.state.v());
    }
    if (u_.size() < 4) throw std::logic_error("VelocityProfile: increasing span too short");
}

double VelocityProfile::operator()(double x) const {
    if (x < u_.front() || x > u_.back()) {
        throw std::domain_error("VelocityProfile: x outside the increasing span");
    }
    auto it = std::upper_bound(u_.begin(), u_.end(), x);
    std::size_t hi = static_cast<std::size_t>(std::distance(u_.begin(), it));
    hi = std::clamp<std::size_t>(hi, 1, u_.size() - 1);
    const std::size_t lo = hi - 1;
    const boost::math::interpolators::cubic_hermite<std::vector<double>> spline(
        {u_[lo], u_[hi]}, {v_[lo], v_[hi]}, {dv_[lo], dv_[hi]});
    return spline(x);
}

std::vector<double> velocity_profile_difference(const Trajectory& less_damped,
                                                const Trajectory& more_damped, int n) {
    const VelocityProfile p1(less_damped);
    const VelocityProfile p2(more_damped);
    const double a = std::max(p1.u_begin(), p2.u_begin());
    const double b = std::min(p1.u_end(), p2.u_end());
    std::vector<double> phi;
    phi.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        const double x = a + (b - a) * i / (n + 1);
        phi.push_back(p1(x) - p2(x));
    }
    return phi;
}

std::string fate_csv_row(const State& s0, double gamma, const Fate& fate) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s,%.17g,%.17g,%.17g", s0.u(), s0.v(), gamma,
                  std::string(to_string(fate.kind)).c_str(), fate.cert_time, fate.witness.u(),
                  fate.witness.v());
    return buf;
}

}  // namespace duffkg
