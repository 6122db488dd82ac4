#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "retrobeam/trace.hpp"
#include "retrobeam/trajectory.hpp"

namespace retrobeam {

struct NelderMeadOptions {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    double initial_step = 0.5;
    double tol = 1e-10;       // simplex value spread at convergence
    int max_evaluations = 4000;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double f = 0.0;
    std::vector<double> best_trace;  // best value after each evaluation
    int evaluations = 0;
    bool converged = false;
};

// Standard downhill simplex minimizer. The best trace is non-increasing by
// construction. Throws DimensionError on empty x0.
NelderMeadResult nelder_mead_optimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {});

// Open-loop beam steering from known element and target positions: equal
// amplitudes, phases conjugating the propagation to the receiver reference
// point.
Eigen::VectorXcd position_tracking_weights(const ArrayGeometry& generator, const Vec3& rx_reference);

// Single-sided retrodirective weights: conjugate of the channel column seen
// from one receiver pilot element. Throws IndexError on a bad element index and
// ZeroVectorError when the pilot column is all zero.
Eigen::VectorXcd pilot_conjugate_weights(const ChannelSnapshot& ch, int pilot_element);

enum class SuperpositionMode { Simultaneous, Sequential };

struct SuperpositionConfig {
    SuperpositionMode mode = SuperpositionMode::Simultaneous;
    double iteration_time = 26.33e-9;  // seconds consumed per objective evaluation
    NelderMeadOptions nm;
    int sequential_element_budget = 20;  // evaluations per element visit
    double tx_power_w = 1.0;
};

// Iterative power superposition: Nelder-Mead over per-element (log-amplitude,
// phase) against measured received power, evaluated on the live channel (time
// advances one iteration_time per measurement). Trace rows carry the incumbent
// operating point.
SimulationTrace iterative_superposition_run(const ChannelTrajectory& traj, double duration,
                                            const SuperpositionConfig& cfg);

// Efficiency trace of a fixed-weights transmitter on a (possibly moving)
// channel, sampled every iteration_time.
SimulationTrace fixed_weights_run(const ChannelTrajectory& traj, double duration,
                                  const std::function<Eigen::VectorXcd(const ChannelSnapshot&)>&
                                      weights_for,
                                  double iteration_time);

}  // namespace retrobeam
