#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "retrobeam/channel.hpp"

namespace retrobeam {

struct LoopParams {
    std::complex<double> gain_g{100.0, 0.0};  // generator amplification per circulation
    std::complex<double> loss_l{0.1, 0.0};    // receiver-side attenuator, |L| <= 1
    double noise_power_dbw = -140.0;          // injected per receiver port
    double z0 = 50.0;
    std::optional<double> rx_saturation_w;    // per-port clip power, watts

    void validate() const;
};

struct LoopState {
    Eigen::VectorXcd v1f;  // receiver forward waves (pilot side), length m
    Eigen::VectorXcd v2f;  // generator forward waves, length n
    std::int64_t k = 0;    // circulations completed
    double t = 0.0;        // seconds, advanced by the caller's loop time

    static LoopState start(const Eigen::VectorXcd& v1f0, int generator_ports);
};

// One circulation of the retrodirective loop:
//   v2b = S21 v1f, v2f = conj(G v2b), v1b = S21^T v2f (clipped per port),
//   v1f' = conj(L v1b) + u.
// Throws DimensionError on mismatched sizes and OverflowError once any wave
// magnitude passes 1e154 (divergence declared before doubles go non-finite).
LoopState step(const LoopState& s, const ChannelSnapshot& ch, const LoopParams& p,
               const Eigen::VectorXcd& u, double dt = 0.0);

// Closed-form zero-input state after k circulations:
//   v1f(k) = (conj(L) G)^k sum_i xi_i^k <b_i, v1f0> b_i.
Eigen::VectorXcd zero_input_oracle(const ChannelSnapshot& ch, const LoopParams& p,
                                   const Eigen::VectorXcd& v1f0, int k);

struct PowerReading {
    double power_w = 0.0;       // receiver output, |v1b|^2 / z0 after clipping
    double efficiency = 0.0;    // beam transfer efficiency of current v2f
    bool efficiency_defined = false;
};

PowerReading power_out(const LoopState& s, const ChannelSnapshot& ch, const LoopParams& p);

// Reading the receiver would take if the circulation starting from s.v1f ran
// now: v2b = S21 v1f, v2f = conj(G v2b), v1b = S21^T v2f clipped per port.
// The capture point sits before the attenuator, so the result is independent
// of loss_l; a controller can act on it within the same circulation.
PowerReading capture_preview(const LoopState& s, const ChannelSnapshot& ch, const LoopParams& p);

enum class Stability { Stable, Marginal, Unstable };

const char* to_string(Stability s);

// Compares |LG| xi_max against 1 with relative tolerance.
Stability classify_product(double lg_mag, double xi_max, double rel_tol = 1e-9);
Stability classify_stability(const LoopParams& p, const EigenAnalysis& ea, double rel_tol = 1e-9);

// Output power after k circulations when locked to the dominant mode:
//   P(k) = p0 |xi_max L G|^(2k).
double power_recursion_oracle(double p0_w, double xi_max, double lg_mag, std::int64_t k);

struct GainSweepPoint {
    double lg_db = 0.0;              // 20 log10 |LG|
    double measured_efficiency = 0.0;
};

// Steady-state measured efficiency across loop gains (0.5 dB grid by default).
// Requires saturation and nonzero noise so every operating point settles.
std::vector<GainSweepPoint> gain_sweep(const ChannelSnapshot& ch, const LoopParams& tmpl,
                                       double lg_min_db, double lg_max_db, std::uint64_t seed,
                                       double step_db = 0.5, int steps_per_point = 400);

// Marginal |LG| located by bisection on the loop's zero-input growth rate
// (power iteration of the circulation map; no eigensolver involved).
double find_marginal_lg(const ChannelSnapshot& ch, std::uint64_t seed, double rel_tol = 1e-12);

struct RegressionResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int n = 0;
};

// Random 4x4 snapshots with a clear spectral gap, reproducible from the seed.
std::vector<ChannelSnapshot> regression_channel_set(int n_channels, std::uint64_t seed);

// Regression of 20 log10 |LG|_marginal against -20 log10 xi_max over random
// channels. Throws InsufficientDataError (n < 10) and DegenerateRegressionError
// (no variance in the regressor).
RegressionResult marginal_regression(int n_channels, std::uint64_t seed);
RegressionResult marginal_regression(std::span<const ChannelSnapshot> channels,
                                     std::uint64_t seed);

}  // namespace retrobeam
