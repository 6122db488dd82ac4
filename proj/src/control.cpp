#include "retrobeam/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "retrobeam/errors.hpp"

namespace retrobeam {

namespace {

struct ClosedLoopRhs {
    const ControllerParams& c;
    const PlantParams& p;
    const std::function<double(double)>& r_ref;
    const std::function<double(double)>& g;

    // State is (y, integrator). Saturations and conditional integration mirror
    // the discrete controller.
    void eval(double t, double y, double integ, double& dy, double& dinteg) const {
        const double y_meas = std::clamp(y, c.y_min_dbw, c.y_max_dbw);
        const double err = r_ref(t) - y_meas;
        const double r_raw = integ + c.b_db - c.k_f * y_meas;
        const double r = std::clamp(r_raw, c.r_min_db, c.r_max_db);
        const bool windup = (r_raw > c.r_max_db && err > 0.0) || (r_raw < c.r_min_db && err < 0.0);
        dinteg = windup ? 0.0 : c.k_i * err;
        dy = (r + g(t)) / p.t_p;
    }
};

}  // namespace

void ControllerParams::validate() const {
    if (!(k_f > 0.0)) throw NumericalError("k_f must be positive");
    if (!(k_i > 0.0)) throw NumericalError("k_i must be positive");
    if (!(r_min_db < r_max_db)) throw NumericalError("actuator range is empty");
    if (!(y_min_dbw < y_max_dbw)) throw NumericalError("sensor range is empty");
}

const char* to_string(Damping d) {
    switch (d) {
        case Damping::Overdamped: return "overdamped";
        case Damping::Critical: return "critical";
        case Damping::Underdamped: return "underdamped";
    }
    return "unknown";
}

double plant_response(const PlantParams& p, double r_db, double g_db, double t) {
    if (!(p.t_p > 0.0)) throw NumericalError("loop time must be positive");
    return (r_db + g_db) * t / p.t_p + p.y0_dbw;
}

PoleAnalysis poles(const ControllerParams& c, const PlantParams& p) {
    c.validate();
    if (!(p.t_p > 0.0)) throw NumericalError("loop time must be positive");
    PoleAnalysis pa;
    pa.discriminant = c.k_f * c.k_f - 4.0 * c.k_i * p.t_p;
    const double two_tp = 2.0 * p.t_p;
    if (pa.discriminant > 0.0) {
        const double root = std::sqrt(pa.discriminant);
        pa.p1 = (-c.k_f - root) / two_tp;
        pa.p2 = (-c.k_f + root) / two_tp;
        pa.damping = Damping::Overdamped;
    } else if (pa.discriminant == 0.0) {
        pa.p1 = pa.p2 = -c.k_f / two_tp;
        pa.damping = Damping::Critical;
    } else {
        const double root = std::sqrt(-pa.discriminant);
        pa.p1 = std::complex<double>(-c.k_f / two_tp, -root / two_tp);
        pa.p2 = std::complex<double>(-c.k_f / two_tp, root / two_tp);
        pa.damping = Damping::Underdamped;
    }
    return pa;
}

double settling_time(const ControllerParams& c, const PlantParams& p) {
    const PoleAnalysis pa = poles(c, p);
    switch (pa.damping) {
        case Damping::Critical:
            return 10.0 * p.t_p / c.k_f;
        case Damping::Overdamped:
            return 5.0 * c.k_f / c.k_i;
        case Damping::Underdamped:
            throw UnderdampedError("settling estimate is defined for damped designs only");
    }
    throw NumericalError("unreachable damping class");
}

DesignResult design_gains(double t_s_target, const PlantParams& p, double k_f) {
    if (!(t_s_target > 0.0)) throw NumericalError("settling target must be positive");
    if (!(k_f > 0.0)) throw NumericalError("k_f must be positive");
    DesignResult d;
    d.params.k_f = k_f;
    d.params.k_i = 5.0 * k_f / t_s_target;
    const PoleAnalysis pa = poles(d.params, p);
    d.damping = pa.damping;
    d.pole_analysis = pa;
    d.overshoot_bound_db =
        pa.damping == Damping::Critical ? 2.0 / (std::numbers::e * k_f) : 1.0 / k_f;
    d.ramp_error_per_dbps = 1.0 / d.params.k_i;
    if (pa.damping == Damping::Underdamped) {
        d.settling_time_s = t_s_target;
        d.warnings.push_back("design is underdamped: loop time too long for the settling target");
    } else {
        d.settling_time_s = settling_time(d.params, p);
    }
    if (t_s_target <= 20.0 * p.t_p) {
        d.warnings.push_back("settling target within 20 loop times: response will ring");
    }
    return d;
}

double overshoot_step_disturbance(const ControllerParams& c, const PlantParams& p, double g0_db) {
    const PoleAnalysis pa = poles(c, p);
    switch (pa.damping) {
        case Damping::Critical:
            return 2.0 * g0_db / (std::numbers::e * c.k_f);
        case Damping::Overdamped:
            return g0_db / c.k_f;
        case Damping::Underdamped:
            throw UnderdampedError("overshoot bound is defined for damped designs only");
    }
    throw NumericalError("unreachable damping class");
}

double ramp_error(const ControllerParams& c, double c0_db_per_s) {
    c.validate();
    return c0_db_per_s / c.k_i;
}

StartupCoefficients startup_coefficients(const ControllerParams& c, const PlantParams& p,
                                         double r0_dbw, double g0_db, double y0_dbw) {
    const PoleAnalysis pa = poles(c, p);
    if (pa.damping != Damping::Overdamped) {
        throw NonOverdampedError("startup closed form requires distinct real poles");
    }
    const double p1 = pa.p1.real();
    const double p2 = pa.p2.real();
    const double g_eff = g0_db + c.b_db;
    const double root = std::sqrt(pa.discriminant);  // = t_p (p2 - p1)
    StartupCoefficients sc;
    sc.p1 = p1;
    sc.p2 = p2;
    sc.r0 = r0_dbw;
    sc.a1 = -(c.k_i * r0_dbw + p1 * g_eff + p1 * p1 * p.t_p * y0_dbw) / (p1 * root);
    sc.a2 = (c.k_i * r0_dbw + p2 * g_eff + p2 * p2 * p.t_p * y0_dbw) / (p2 * root);
    return sc;
}

double startup_response(const ControllerParams& c, const PlantParams& p, double r0_dbw,
                        double g0_db, double y0_dbw, double t) {
    const StartupCoefficients sc = startup_coefficients(c, p, r0_dbw, g0_db, y0_dbw);
    if (t < 0.0) return y0_dbw;
    return sc.r0 + sc.a1 * std::exp(sc.p1 * t) + sc.a2 * std::exp(sc.p2 * t);
}

double startup_max(const ControllerParams& c, const PlantParams& p, double r0_dbw, double g0_db,
                   double y0_dbw) {
    const StartupCoefficients sc = startup_coefficients(c, p, r0_dbw, g0_db, y0_dbw);
    const double ratio = -(sc.a1 * sc.p1) / (sc.a2 * sc.p2);
    if (!(ratio > 0.0)) {
        throw NoExtremumError("trajectory is monotone: no interior extremum");
    }
    const double root = std::sqrt(c.k_f * c.k_f - 4.0 * c.k_i * p.t_p);  // t_p (p2 - p1)
    return sc.r0 + sc.a1 * std::pow(ratio, p.t_p * sc.p1 / root) +
           sc.a2 * std::pow(ratio, p.t_p * sc.p2 / root);
}

double startup_peak(const ControllerParams& c, const PlantParams& p, double r0_dbw, double g0_db,
                    double y0_dbw) {
    const StartupCoefficients sc = startup_coefficients(c, p, r0_dbw, g0_db, y0_dbw);
    double peak = std::max(y0_dbw, r0_dbw);  // boundary values at t = 0 and t -> inf
    const double ratio = -(sc.a1 * sc.p1) / (sc.a2 * sc.p2);
    if (ratio > 0.0) {
        const double t_star = std::log(ratio) / (sc.p2 - sc.p1);
        if (t_star > 0.0) {
            peak = std::max(peak, startup_response(c, p, r0_dbw, g0_db, y0_dbw, t_star));
        }
    }
    return peak;
}

std::pair<ControlState, double> pi_step(const ControlState& s, const ControllerParams& c,
                                        double y_meas_dbw, double dt) {
    c.validate();
    if (!(dt > 0.0)) throw StepSizeError("controller update period must be positive");
    const double y = std::clamp(y_meas_dbw, c.y_min_dbw, c.y_max_dbw);
    const double err = c.reference_dbw - y;
    // The hold condition looks at the command the current integrator emits,
    // matching the continuous model. Gating on the post-advance command
    // instead can deadlock: one large K_I err dt step overshoots the rail, so
    // the advance is refused forever while the emitted command sits in range.
    const double r_raw = s.integrator_db + c.b_db - c.k_f * y;
    ControlState next = s;
    if ((r_raw > c.r_max_db && err > 0.0) || (r_raw < c.r_min_db && err < 0.0)) {
        next.integrator_db = s.integrator_db;  // hold: command pinned at the rail
    } else {
        next.integrator_db = s.integrator_db + c.k_i * err * dt;
    }
    const double r =
        std::clamp(next.integrator_db + c.b_db - c.k_f * y, c.r_min_db, c.r_max_db);
    next.last_r_db = r;
    return {next, r};
}

std::vector<LinearTracePoint> simulate_closed_loop_linear(
    const ControllerParams& c, const PlantParams& p,
    const std::function<double(double)>& reference_dbw, const std::function<double(double)>& g_db,
    double y0_dbw, double duration, double dt) {
    c.validate();
    if (!(p.t_p > 0.0)) throw NumericalError("loop time must be positive");
    if (!(dt > 0.0) || dt > p.t_p / 4.0) {
        throw StepSizeError("integration step must be positive and at most t_p / 4");
    }
    if (!(duration > 0.0)) throw NumericalError("duration must be positive");

    const ClosedLoopRhs f{c, p, reference_dbw, g_db};
    std::vector<LinearTracePoint> trace;
    const auto n_steps = static_cast<std::size_t>(std::ceil(duration / dt));
    trace.reserve(n_steps + 1);
    double y = y0_dbw;
    double integ = 0.0;
    auto record = [&](double t) {
        const double y_meas = std::clamp(y, c.y_min_dbw, c.y_max_dbw);
        const double r =
            std::clamp(integ + c.b_db - c.k_f * y_meas, c.r_min_db, c.r_max_db);
        trace.push_back({t, y, r});
    };
    record(0.0);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        double k1y, k1i, k2y, k2i, k3y, k3i, k4y, k4i;
        f.eval(t, y, integ, k1y, k1i);
        f.eval(t + dt / 2, y + dt / 2 * k1y, integ + dt / 2 * k1i, k2y, k2i);
        f.eval(t + dt / 2, y + dt / 2 * k2y, integ + dt / 2 * k2i, k3y, k3i);
        f.eval(t + dt, y + dt * k3y, integ + dt * k3i, k4y, k4i);
        y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        integ += dt / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
        record(static_cast<double>(i + 1) * dt);
    }
    return trace;
}

}  // namespace retrobeam
