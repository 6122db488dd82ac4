#include "retrobeam/carrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>
#include <utility>

#include "retrobeam/errors.hpp"
#include "retrobeam/rng.hpp"

namespace retrobeam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Amplitude of the time signal carrying the phasor power |v|^2 / z0:
// x(t) = sqrt(2) |v| cos(w0 t + arg v).
double tone_amplitude(double power_w, double z0) { return std::sqrt(2.0 * power_w * z0); }

}  // namespace

void CarrierConfig::validate() const {
    if (!(f0 > 0.0)) throw ConfigError("carrier.f0_hz", "must be positive");
    if (!(lo1_factor > 1.0)) throw ConfigError("carrier.lo1_factor", "must exceed 1");
    if (!(lo2_factor > 0.0)) throw ConfigError("carrier.lo2_factor", "must be positive");
    if (std::abs(lo1_factor - 1.0 + lo2_factor - 1.0) > 1e-9) {
        throw ConfigError("carrier.lo2_factor",
                          "mixing plan must return to the carrier: lo1 - 1 + lo2 = 1");
    }
    if (!(sample_rate > 2.0 * (lo1_factor + 1.0) * f0)) {
        throw ConfigError("carrier.sample_rate_hz",
                          "must exceed twice the highest mixing image");
    }
    if (!(mixer_amplitude > 0.0)) throw ConfigError("carrier.mixer_amplitude", "must be positive");
    if (!(bpf_q > 0.0)) throw ConfigError("carrier.bpf_q", "must be positive");
    if (power_window < 1) throw ConfigError("carrier.power_window", "must be >= 1");
    if (!(z0 > 0.0)) throw ConfigError("carrier.z0_ohm", "must be positive");
}

double Biquad::process(double x, double& s1, double& s2) const {
    const double y = b0 * x + s1;
    s1 = b1 * x - a1 * y + s2;
    s2 = b2 * x - a2 * y;
    return y;
}

std::complex<double> Biquad::response(double f, double sample_rate) const {
    const std::complex<double> zi = std::polar(1.0, -kTwoPi * f / sample_rate);
    return (b0 + zi * (b1 + zi * b2)) / (1.0 + zi * (a1 + zi * a2));
}

Biquad design_bpf(double center, double q, double sample_rate) {
    if (!(center > 0.0) || !(q > 0.0) || !(sample_rate > 0.0)) {
        throw NyquistError("band-pass design needs positive center, q and sample rate");
    }
    if (!(center < sample_rate / 2.0)) {
        throw NyquistError("band-pass center must lie below half the sample rate");
    }
    // Bilinear transform of (w0/q) s / (s^2 + (w0/q) s + w0^2), prewarped so the
    // digital response is exactly 1 at `center`.
    const double w0 = kTwoPi * center;
    const double k = w0 / std::tan(w0 / (2.0 * sample_rate));
    const double bw = w0 / q;
    const double a0 = k * k + bw * k + w0 * w0;
    Biquad f;
    f.b0 = bw * k / a0;
    f.b1 = 0.0;
    f.b2 = -f.b0;
    f.a1 = (2.0 * w0 * w0 - 2.0 * k * k) / a0;
    f.a2 = (k * k - bw * k + w0 * w0) / a0;
    return f;
}

double bpf_group_delay(double center, double q) { return 2.0 * q / (kTwoPi * center); }

DelayLineBank::DelayLineBank(const Eigen::MatrixXcd& s, const CarrierConfig& cfg,
                             double trim_samples) {
    inputs_ = static_cast<int>(s.cols());
    outputs_ = static_cast<int>(s.rows());
    if (inputs_ < 1 || outputs_ < 1) throw DimensionError("delay bank needs a nonempty matrix");
    f0_ = cfg.f0;
    sample_rate_ = cfg.sample_rate;
    trim_ = trim_samples;
    if (sample_rate_ / f0_ - trim_ < 2.0) {
        throw NyquistError("trimmed path delay leaves no room for interpolation");
    }
    retune(s);
    // Phase-derived delays stay below two carrier periods, so size the rings
    // once and keep them across retunes.
    history_ = static_cast<int>(std::ceil(2.0 * sample_rate_ / f0_)) + 4;
    buffers_.assign(inputs_, std::vector<double>(history_, 0.0));
    write_pos_ = 0;
}

void DelayLineBank::retune(const Eigen::MatrixXcd& s) {
    if (static_cast<int>(s.cols()) != inputs_ || static_cast<int>(s.rows()) != outputs_) {
        throw DimensionError("retune must keep the port layout");
    }
    amp_.resize(outputs_, inputs_);
    delay_.resize(outputs_, inputs_);
    max_delay_ = 0.0;
    const double period_samples = sample_rate_ / f0_;
    for (int i = 0; i < outputs_; ++i) {
        for (int j = 0; j < inputs_; ++j) {
            amp_(i, j) = std::abs(s(i, j));
            // A pure delay tau shows up as phase -w0 tau; realize the principal
            // part plus one full period of headroom for the interpolator.
            double cycles = -std::arg(s(i, j)) / kTwoPi;
            cycles -= std::floor(cycles);
            delay_(i, j) = (cycles + 1.0) * period_samples - trim_;
            max_delay_ = std::max(max_delay_, delay_(i, j));
        }
    }
}

void DelayLineBank::process(const std::vector<double>& in, std::vector<double>& out) {
    if (static_cast<int>(in.size()) != inputs_) {
        throw DimensionError("delay bank input size mismatch");
    }
    for (int j = 0; j < inputs_; ++j) buffers_[j][write_pos_] = in[j];
    out.assign(outputs_, 0.0);
    for (int i = 0; i < outputs_; ++i) {
        double acc = 0.0;
        for (int j = 0; j < inputs_; ++j) {
            if (amp_(i, j) == 0.0) continue;
            const double pos = static_cast<double>(write_pos_) - delay_(i, j);
            const double base = std::floor(pos);
            const double mu = pos - base;
            int idx = static_cast<int>(base) % history_;
            if (idx < 0) idx += history_;
            const int i0 = (idx - 1 + history_) % history_;
            const int i1 = idx;
            const int i2 = (idx + 1) % history_;
            const int i3 = (idx + 2) % history_;
            const auto& buf = buffers_[j];
            // Cubic Lagrange on the four samples around the read point.
            const double w0 = -mu * (mu - 1.0) * (mu - 2.0) / 6.0;
            const double w1 = (mu + 1.0) * (mu - 1.0) * (mu - 2.0) / 2.0;
            const double w2 = -(mu + 1.0) * mu * (mu - 2.0) / 2.0;
            const double w3 = (mu + 1.0) * mu * (mu - 1.0) / 6.0;
            acc += amp_(i, j) *
                   (w0 * buf[i0] + w1 * buf[i1] + w2 * buf[i2] + w3 * buf[i3]);
        }
        out[i] = acc;
    }
    write_pos_ = (write_pos_ + 1) % history_;
}

double DelayLineBank::mean_delay_s() const {
    return delay_.mean() / sample_rate_;
}

Conjugator::Conjugator(const CarrierConfig& cfg) {
    cfg.validate();
    w_lo1_ = kTwoPi * cfg.lo1_factor * cfg.f0;
    w_lo2_ = kTwoPi * cfg.lo2_factor * cfg.f0;
    x1_ = cfg.mixer_amplitude;
    x2_ = cfg.mixer_amplitude;
    gain_ = x1_ * x2_ / 4.0;
    bpf1_ = design_bpf((cfg.lo1_factor - 1.0) * cfg.f0, cfg.bpf_q, cfg.sample_rate);
    bpf2_ = design_bpf(cfg.f0, cfg.bpf_q, cfg.sample_rate);
    reset();
}

double Conjugator::process(double x, double t) {
    const double if1 = bpf1_.process(x * x1_ * std::cos(w_lo1_ * t), s11_, s12_);
    return bpf2_.process(if1 * x2_ * std::cos(w_lo2_ * t), s21_, s22_);
}

void Conjugator::reset() { s11_ = s12_ = s21_ = s22_ = 0.0; }

MovingAveragePower::MovingAveragePower(int window, double z0) : window_(window), z0_(z0) {
    if (window < 1) throw DimensionError("power window must be >= 1");
    if (!(z0 > 0.0)) throw NumericalError("impedance must be positive");
}

double MovingAveragePower::push(double x) {
    samples_.push_back(x);
    sum_sq_ += x * x;
    if (static_cast<int>(samples_.size()) > window_) {
        const double old = samples_.front();
        samples_.pop_front();
        sum_sq_ -= old * old;
    }
    return value();
}

double MovingAveragePower::value() const {
    if (samples_.empty()) return 0.0;
    return std::max(sum_sq_, 0.0) / (static_cast<double>(samples_.size()) * z0_);
}

double avg_power(const std::vector<double>& samples, int window, double z0) {
    if (samples.empty()) throw InsufficientDataError("no samples for a power reading");
    const std::size_t n = std::min<std::size_t>(samples.size(), std::max(window, 1));
    double sum = 0.0;
    for (std::size_t i = samples.size() - n; i < samples.size(); ++i) sum += samples[i] * samples[i];
    return sum / (static_cast<double>(n) * z0);
}

std::complex<double> tone_phasor(const std::vector<double>& samples, double f, double sample_rate,
                                 std::size_t begin) {
    if (begin >= samples.size()) throw InsufficientDataError("tone window is empty");
    const double per_period = sample_rate / f;
    const auto avail = static_cast<double>(samples.size() - begin);
    const auto periods = static_cast<std::int64_t>(std::floor(avail / per_period));
    if (periods < 1) throw InsufficientDataError("tone window shorter than one period");
    const auto count = static_cast<std::size_t>(std::llround(periods * per_period));
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(begin + k) / sample_rate;
        acc += samples[begin + k] * std::polar(1.0, -kTwoPi * f * t);
    }
    return 2.0 * acc / static_cast<double>(count);
}

double predicted_loop_time(const ChannelSnapshot& ch, const CarrierConfig& cfg) {
    cfg.validate();
    ch.validate();
    const DelayLineBank forward(ch.s21, cfg);
    const DelayLineBank back(ch.s21.transpose(), cfg);
    const double conj_delay = bpf_group_delay((cfg.lo1_factor - 1.0) * cfg.f0, cfg.bpf_q) +
                              bpf_group_delay(cfg.f0, cfg.bpf_q);
    return forward.mean_delay_s() + back.mean_delay_s() + 2.0 * conj_delay;
}

double measure_loop_latency(const ChannelSnapshot& ch, const CarrierConfig& cfg,
                            const LoopParams& p) {
    cfg.validate();
    ch.validate();
    p.validate();
    const int n = ch.generator_ports();
    const int m = ch.receiver_ports();
    const double fs = cfg.sample_rate;
    const double ts = 1.0 / fs;

    DelayLineBank forward(ch.s21, cfg);
    DelayLineBank back(ch.s21.transpose(), cfg);
    std::vector<Conjugator> conj_gen(n, Conjugator(cfg));
    std::vector<Conjugator> conj_rx(m, Conjugator(cfg));

    // Amplitude-modulated carrier; the modulation frequency divides both the
    // carrier and the sample grid so quadrature windows close exactly.
    const double f_mod = cfg.f0 / 48.0;
    const double predicted = predicted_loop_time(ch, cfg);
    const double settle = 8.0 * predicted + 4.0 / f_mod;
    const double window = 4.0 / f_mod;
    const auto total = static_cast<std::int64_t>(std::llround((settle + window) * fs));
    const auto begin = static_cast<std::int64_t>(std::llround(settle * fs));

    std::vector<double> x1f(m, 0.0), v2b, v2f(n, 0.0), v1b;
    std::complex<double> acc_in = 0.0;
    std::complex<double> acc_out = 0.0;
    const double gmag = std::abs(p.gain_g);
    for (std::int64_t k = 0; k < total; ++k) {
        const double t = static_cast<double>(k) * ts;
        const double envelope = 1.0 + 0.5 * std::cos(kTwoPi * f_mod * t);
        const double drive = envelope * std::cos(kTwoPi * cfg.f0 * t);
        std::fill(x1f.begin(), x1f.end(), drive);

        forward.process(x1f, v2b);
        for (int i = 0; i < n; ++i) v2f[i] = gmag * conj_gen[i].process(v2b[i], t);
        back.process(v2f, v1b);
        double out_sq = 0.0;
        for (int j = 0; j < m; ++j) {
            const double y = conj_rx[j].process(v1b[j], t);
            out_sq += y * y;
        }
        if (k >= begin) {
            const auto rot = std::polar(1.0, -kTwoPi * f_mod * t);
            acc_in += drive * drive * static_cast<double>(m) * rot;
            acc_out += out_sq * rot;
        }
    }
    // Envelope power rides at f_mod; the phase lag between input and output
    // projections is the round-trip group delay.
    double phase = std::arg(acc_in * std::conj(acc_out));
    if (phase < 0.0) phase += kTwoPi;
    return phase / (kTwoPi * f_mod);
}

CarrierRunResult run_carrier_loop(const ChannelTrajectory& traj, const CarrierConfig& cfg,
                                  const LoopParams& p, const ControllerParams& c, double duration,
                                  std::uint64_t seed) {
    cfg.validate();
    p.validate();
    c.validate();
    if (!(duration > 0.0)) throw ConfigError("duration_s", "must be positive");

    ChannelSnapshot snap = traj.sample(0.0);
    const int n = snap.generator_ports();
    const int m = snap.receiver_ports();
    const double fs = cfg.sample_rate;
    const double ts = 1.0 / fs;
    const bool moving = traj.kind() != ChannelTrajectory::Kind::Static;

    // The forward bank absorbs the one-sample transport of the recirculation
    // update, keeping the loop resonance exactly on the carrier.
    DelayLineBank forward(snap.s21, cfg, 1.0);
    DelayLineBank back(snap.s21.transpose(), cfg);
    std::vector<Conjugator> conj_gen(n, Conjugator(cfg));
    std::vector<Conjugator> conj_rx(m, Conjugator(cfg));

    const double t_loop = predicted_loop_time(snap, cfg);
    const auto interval_samples = std::max<std::int64_t>(1, std::llround(t_loop * fs));
    const double dt_ctrl = static_cast<double>(interval_samples) * ts;

    // The control law reads power averaged over the trailing quarter of each
    // interval, rounded to whole carrier cycles. Samples in that window saw
    // their last attenuator pass about half a loop time earlier, inside the
    // same interval, so the command issued for an interval is reflected in
    // that interval's own reading (same capture-before-attenuator order as
    // the phasor engine). A full-interval average would mix two commands and
    // turn the lock into a slowly rung-out oscillation.
    const double cycle = fs / cfg.f0;
    const auto quarter = std::max<std::int64_t>(1, interval_samples / 4);
    const auto n_cycles =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(static_cast<double>(quarter) / cycle));
    const auto window_samples = std::min(
        interval_samples,
        std::max<std::int64_t>(1, std::llround(static_cast<double>(n_cycles) * cycle)));
    const auto window_start = interval_samples - window_samples;
    const auto intervals =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(duration / dt_ctrl));

    Rng rng(seed);
    const double gmag = std::abs(p.gain_g);
    const double clip_amp =
        p.rx_saturation_w ? tone_amplitude(*p.rx_saturation_w, p.z0)
                          : std::numeric_limits<double>::infinity();

    ControlState cs;
    double r_db = 0.0;
    std::tie(cs, r_db) = pi_step(cs, c, -1e9, dt_ctrl);

    const std::complex<double> rot_step = std::polar(1.0, -kTwoPi * cfg.f0 * ts);

    CarrierRunResult result;
    result.loop_latency_s = t_loop;
    result.trace.rows.reserve(intervals);

    std::vector<double> x1f(m, 0.0), v2b, v2f(n, 0.0), v1b;
    std::int64_t sample_index = 0;
    for (std::int64_t iv = 0; iv < intervals; ++iv) {
        const double t_start = static_cast<double>(sample_index) * ts;
        if (moving && iv > 0) {
            snap = traj.sample(t_start);
            forward.retune(snap.s21);
            back.retune(snap.s21.transpose());
        }
        const EigenAnalysis ea = eig_analysis(snap);
        const double lmag = std::pow(10.0, r_db / 20.0);

        // Seed/measurement noise as one narrowband tone per port per interval.
        const Eigen::VectorXcd noise = noise_vector(m, p.noise_power_dbw, p.z0, rng);
        std::vector<double> noise_amp(m), noise_phase(m);
        for (int j = 0; j < m; ++j) {
            noise_amp[j] = std::sqrt(2.0) * std::abs(noise(j));
            noise_phase[j] = std::arg(noise(j));
        }

        double sum_in_sq = 0.0;
        double sum_out_sq = 0.0;
        double win_clip_sq = 0.0;
        Eigen::VectorXcd v2f_acc = Eigen::VectorXcd::Zero(n);
        std::complex<double> rot = std::polar(1.0, -kTwoPi * cfg.f0 * t_start);

        for (std::int64_t k = 0; k < interval_samples; ++k) {
            const double t = static_cast<double>(sample_index) * ts;
            forward.process(x1f, v2b);
            for (int i = 0; i < n; ++i) {
                v2f[i] = gmag * conj_gen[i].process(v2b[i], t);
                sum_in_sq += v2f[i] * v2f[i];
                v2f_acc(i) += v2f[i] * rot;
            }
            back.process(v2f, v1b);
            for (int j = 0; j < m; ++j) {
                const double raw = v1b[j];
                sum_out_sq += raw * raw;
                const double clipped = std::clamp(raw, -clip_amp, clip_amp);
                if (k >= window_start) win_clip_sq += clipped * clipped;
                x1f[j] = lmag * conj_rx[j].process(clipped, t) +
                         noise_amp[j] * std::cos(kTwoPi * cfg.f0 * t + noise_phase[j]);
            }
            rot *= rot_step;
            ++sample_index;
        }

        const double power_w =
            win_clip_sq / (static_cast<double>(window_samples) * p.z0);
        const double y_dbw = 10.0 * std::log10(std::max(power_w, 1e-300));

        TraceRow row;
        row.t = static_cast<double>(sample_index) * ts;
        row.power_dbw = y_dbw;
        row.r_db = r_db;
        row.g_db = 20.0 * std::log10(gmag * ea.xi_max());
        row.efficiency = sum_in_sq > 0.0 ? sum_out_sq / sum_in_sq : 0.0;
        row.xi_max = ea.xi_max();
        {
            const double norm = v2f_acc.norm();
            double aligned = 0.0;
            if (norm > 0.0) {
                for (int i = 0; i < ea.a_vecs.cols(); ++i) {
                    if (ea.xi_generator(i) < ea.xi_max() * (1.0 - 1e-9)) break;
                    aligned += std::norm(ea.a_vecs.col(i).dot(v2f_acc));
                }
                row.alignment = std::sqrt(aligned) / norm;
            }
        }
        row.stability = classify_product(lmag * gmag, ea.xi_max(), 1e-2);
        result.trace.rows.push_back(row);

        std::tie(cs, r_db) = pi_step(cs, c, y_dbw, dt_ctrl);
    }

    const std::size_t rows = result.trace.size();
    const std::size_t tail = std::max<std::size_t>(1, rows / 4);
    double eff_sum = 0.0;
    for (std::size_t i = rows - tail; i < rows; ++i) {
        eff_sum += result.trace.rows[i].efficiency;
    }
    result.measured_efficiency = eff_sum / static_cast<double>(tail);
    result.measured_latency_s = measure_loop_latency(traj.sample(0.0), cfg, p);
    return result;
}

}  // namespace retrobeam
