#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <deque>
#include <vector>

#include "retrobeam/channel.hpp"
#include "retrobeam/control.hpp"
#include "retrobeam/loop.hpp"
#include "retrobeam/trace.hpp"
#include "retrobeam/trajectory.hpp"

namespace retrobeam {

struct CarrierConfig {
    double f0 = 2.4e9;            // carrier, Hz
    double sample_rate = 48e9;    // Hz (20.83 ps steps)
    double lo1_factor = 1.4;      // first mixer LO = 1.4 f0 -> difference at 0.4 f0
    double lo2_factor = 0.6;      // second mixer LO = 0.6 f0 -> sum back at f0
    double mixer_amplitude = 2.0; // X1 = X2 = 2 restores unity conversion gain
    double bpf_q = 10.0;
    int power_window = 10000;     // moving-average samples for power readings
    double z0 = 50.0;

    void validate() const;
};

// Discrete biquad b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;

    double process(double x, double& s1, double& s2) const;
    std::complex<double> response(double f, double sample_rate) const;
};

// Second-order band-pass (Butterworth prototype) at `center` Hz, bilinear
// transform prewarped so |H(center)| = 1. Throws NyquistError when center is
// not below sample_rate / 2.
Biquad design_bpf(double center, double q, double sample_rate);

// Analytic group delay of the band-pass at its center: 2 q / (2 pi center).
double bpf_group_delay(double center, double q);

// One channel direction as per-path amplitude + fractional delay lines.
// Path delay realizes the S-parameter phase at f0 (principal value plus one
// full carrier period of headroom for the interpolator).
class DelayLineBank {
public:
    DelayLineBank() = default;
    // trim_samples shortens every path by a fixed amount. The recirculation
    // update hands the receiver output to the next circulation one sample
    // late, so the loop builds its forward bank with one sample trimmed off;
    // otherwise the loop phase slips w0/fs per circulation and the resonance
    // pulls off the carrier (and into the band-pass skirts).
    DelayLineBank(const Eigen::MatrixXcd& s, const CarrierConfig& cfg, double trim_samples = 0.0);

    // Push one sample per input port, produce one sample per output port.
    void process(const std::vector<double>& in, std::vector<double>& out);
    void retune(const Eigen::MatrixXcd& s);  // same shape, updated paths

    int inputs() const { return inputs_; }
    int outputs() const { return outputs_; }
    double mean_delay_s() const;
    double max_delay_samples() const { return max_delay_; }

private:
    int inputs_ = 0;
    int outputs_ = 0;
    double f0_ = 0.0;
    double sample_rate_ = 0.0;
    double trim_ = 0.0;
    Eigen::MatrixXd amp_;
    Eigen::MatrixXd delay_;  // samples, fractional
    double max_delay_ = 0.0;
    int history_ = 0;
    std::vector<std::vector<double>> buffers_;  // ring buffer per input port
    int write_pos_ = 0;
};

// Superheterodyne phase conjugator: mix with 1.4 f0, band-pass at 0.4 f0, mix
// with 0.6 f0, band-pass at f0. Output settles to a conjugated replica of the
// input tone's phase offset.
class Conjugator {
public:
    Conjugator() = default;
    explicit Conjugator(const CarrierConfig& cfg);

    double process(double x, double t);
    void reset();

    // Settled conversion gain at f0 (X1 X2 / 4 through unity filters).
    double nominal_gain() const { return gain_; }

private:
    double w_lo1_ = 0.0;
    double w_lo2_ = 0.0;
    double x1_ = 2.0;
    double x2_ = 2.0;
    double gain_ = 1.0;
    Biquad bpf1_;
    Biquad bpf2_;
    double s11_ = 0.0, s12_ = 0.0, s21_ = 0.0, s22_ = 0.0;
};

// Running mean of x^2 over `window` samples divided by z0 (RMS power of a tone
// of amplitude A is A^2 / (2 z0)).
class MovingAveragePower {
public:
    MovingAveragePower() = default;
    MovingAveragePower(int window, double z0);

    double push(double x);
    double value() const;

private:
    int window_ = 1;
    double z0_ = 50.0;
    std::deque<double> samples_;
    double sum_sq_ = 0.0;
};

double avg_power(const std::vector<double>& samples, int window, double z0 = 50.0);

// Complex amplitude of a sampled tone at f (least-squares quadrature over an
// integer number of periods).
std::complex<double> tone_phasor(const std::vector<double>& samples, double f,
                                 double sample_rate, std::size_t begin = 0);

struct CarrierRunResult {
    SimulationTrace trace;              // one row per controller update
    double measured_efficiency = 0.0;   // settled return-channel power ratio
    double loop_latency_s = 0.0;        // predicted circulation time (= controller t_p)
    double measured_latency_s = 0.0;    // impulse round-trip measurement
};

// Predicted circulation time: both channel traversals plus two conjugator
// group delays.
double predicted_loop_time(const ChannelSnapshot& ch, const CarrierConfig& cfg);

// Round-trip delay through channel -> conjugator -> channel -> conjugator,
// measured as the envelope delay of an amplitude-modulated carrier (quadrature
// at the modulation frequency, so the estimate is the loop group delay).
double measure_loop_latency(const ChannelSnapshot& ch, const CarrierConfig& cfg,
                            const LoopParams& p);

// Full carrier-level closed loop (sample-domain signals, PI control of the
// attenuator once per circulation).
CarrierRunResult run_carrier_loop(const ChannelTrajectory& traj, const CarrierConfig& cfg,
                                  const LoopParams& p, const ControllerParams& c,
                                  double duration, std::uint64_t seed);

}  // namespace retrobeam
