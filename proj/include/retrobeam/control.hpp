#pragma once

#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace retrobeam {

// Log-domain plant: one loop circulation multiplies output power by the loop
// gain, so y dB grows by (r + g) per t_p seconds.
struct PlantParams {
    double t_p = 26.33e-9;   // loop circulation time, seconds
    double y0_dbw = -140.0;  // initial output power
};

struct ControllerParams {
    double k_f = 1.0;         // proportional feedback gain
    double k_i = 5e6;         // integral gain, 1/s
    double b_db = 0.0;        // bias added to the commanded attenuation
    double r_min_db = -35.0;  // actuator range
    double r_max_db = -3.0;
    double y_min_dbw = -150.0;  // sensor range
    double y_max_dbw = 10.0;
    double reference_dbw = -30.0;

    void validate() const;
};

struct ControlState {
    double integrator_db = 0.0;
    double last_r_db = 0.0;
};

enum class Damping { Overdamped, Critical, Underdamped };

const char* to_string(Damping d);

struct PoleAnalysis {
    std::complex<double> p1;  // more negative real part (fast pole)
    std::complex<double> p2;  // dominant pole, p2 >= p1 when real
    Damping damping = Damping::Overdamped;
    double discriminant = 0.0;  // k_f^2 - 4 k_i t_p
};

// Open-loop log-power trajectory under constant r and g: y = (r+g) t/t_p + y0.
double plant_response(const PlantParams& p, double r_db, double g_db, double t);

PoleAnalysis poles(const ControllerParams& c, const PlantParams& p);

// 10 t_p / k_f at critical damping, 5 k_f / k_i overdamped.
// Throws UnderdampedError.
double settling_time(const ControllerParams& c, const PlantParams& p);

struct DesignResult {
    ControllerParams params;
    Damping damping = Damping::Overdamped;
    PoleAnalysis pole_analysis;
    double settling_time_s = 0.0;
    double overshoot_bound_db = 0.0;     // per unit (1 dB) disturbance step
    double ramp_error_per_dbps = 0.0;    // error per unit dB/s drift
    std::vector<std::string> warnings;
};

// k_i = 5 k_f / t_s. Warns when t_s_target <= 20 t_p (loop too slow to act
// that fast) without refusing the design.
DesignResult design_gains(double t_s_target, const PlantParams& p, double k_f = 1.0);

// Peak deviation after a g0 step from equilibrium: 2 g0/(e k_f) critical,
// g0/k_f overdamped (dominant-pole bound). Throws UnderdampedError.
double overshoot_step_disturbance(const ControllerParams& c, const PlantParams& p, double g0_db);

// Steady tracking error under a channel drift of c0 dB/s: c0 / k_i.
double ramp_error(const ControllerParams& c, double c0_db_per_s);

struct StartupCoefficients {
    double p1 = 0.0;
    double p2 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    double r0 = 0.0;
};

// Startup transient for reference step r0, disturbance step g0 (bias folds in
// as g0 + b), initial condition y0, zero initial integrator:
//   y(t) = r0 + A1 e^(p1 t) + A2 e^(p2 t),
// with exact partial-fraction residues (A1 + A2 + r0 = y0 identically).
// Throws NonOverdampedError when the poles are not real and distinct.
StartupCoefficients startup_coefficients(const ControllerParams& c, const PlantParams& p,
                                         double r0_dbw, double g0_db, double y0_dbw);
double startup_response(const ControllerParams& c, const PlantParams& p, double r0_dbw,
                        double g0_db, double y0_dbw, double t);

// Value of the startup trajectory at its interior extremum. Throws
// NoExtremumError when -A1 p1 / (A2 p2) <= 0 (monotone trajectory) and
// NonOverdampedError as above.
double startup_max(const ControllerParams& c, const PlantParams& p, double r0_dbw, double g0_db,
                   double y0_dbw);

// Largest output value over t >= 0 (interior extremum when it exists and lies
// at positive time, else the larger boundary value).
double startup_peak(const ControllerParams& c, const PlantParams& p, double r0_dbw, double g0_db,
                    double y0_dbw);

// One PI update on a dt-spaced measurement grid. Clamps the measurement to the
// sensor range and the command to the actuator range; the integrator holds
// when the command is clamped and the error would push it further in.
std::pair<ControlState, double> pi_step(const ControlState& s, const ControllerParams& c,
                                        double y_meas_dbw, double dt);

struct LinearTracePoint {
    double t = 0.0;
    double y_dbw = 0.0;
    double r_db = 0.0;
};

// Continuous closed loop (controller + integrator plant) integrated with RK4.
// Throws StepSizeError when dt > t_p / 4.
std::vector<LinearTracePoint> simulate_closed_loop_linear(
    const ControllerParams& c, const PlantParams& p,
    const std::function<double(double)>& reference_dbw, const std::function<double(double)>& g_db,
    double y0_dbw, double duration, double dt);

}  // namespace retrobeam
