#include "retrobeam/loop.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "retrobeam/errors.hpp"
#include "retrobeam/rng.hpp"

namespace retrobeam {

namespace {

constexpr double kOverflowLimit = 1e154;

void check_magnitudes(const Eigen::VectorXcd& v, const char* what) {
    for (int i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v(i).real()) || !std::isfinite(v(i).imag()) ||
            std::abs(v(i)) > kOverflowLimit) {
            throw OverflowError(std::string(what) + " diverged past 1e154");
        }
    }
}

Eigen::VectorXcd clip_per_port(const Eigen::VectorXcd& v, const LoopParams& p) {
    if (!p.rx_saturation_w) return v;
    const double cap = std::sqrt(*p.rx_saturation_w * p.z0);
    Eigen::VectorXcd out = v;
    for (int i = 0; i < out.size(); ++i) {
        const double mag = std::abs(out(i));
        if (mag > cap) out(i) *= cap / mag;
    }
    return out;
}

// Per-circulation growth of the zero-input loop at this |LG|, measured by
// running the physical recursion with renormalization (power iteration).
double growth_rate(const ChannelSnapshot& ch, double lg_mag, const Eigen::VectorXcd& seed_vec) {
    LoopParams p;
    p.gain_g = lg_mag;
    p.loss_l = 1.0;
    p.noise_power_dbw = -400.0;
    p.z0 = ch.z0;
    LoopState s = LoopState::start(seed_vec, ch.generator_ports());
    const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(ch.receiver_ports());
    double rate = 0.0;
    double prev_rate = -1.0;
    for (int iter = 0; iter < 5000; ++iter) {
        const double before = s.v1f.norm();
        s = step(s, ch, p, zero);
        const double after = s.v1f.norm();
        if (before == 0.0 || after == 0.0) return 0.0;
        rate = after / before;
        s.v1f /= after;  // renormalize so the iteration never over/underflows
        if (iter > 8 && std::abs(rate - prev_rate) <= 1e-14 * rate) break;
        prev_rate = rate;
    }
    return rate;
}

}  // namespace

void LoopParams::validate() const {
    if (std::abs(loss_l) > 1.0) throw NumericalError("|L| must not exceed 1");
    if (!(z0 > 0.0)) throw NumericalError("reference impedance must be positive");
    if (rx_saturation_w && !(*rx_saturation_w > 0.0)) {
        throw NumericalError("saturation power must be positive");
    }
}

LoopState LoopState::start(const Eigen::VectorXcd& v1f0, int generator_ports) {
    LoopState s;
    s.v1f = v1f0;
    s.v2f = Eigen::VectorXcd::Zero(generator_ports);
    return s;
}

LoopState step(const LoopState& s, const ChannelSnapshot& ch, const LoopParams& p,
               const Eigen::VectorXcd& u, double dt) {
    p.validate();
    if (s.v1f.size() != ch.s21.cols()) {
        throw DimensionError("v1f length does not match receiver port count");
    }
    if (u.size() != s.v1f.size()) throw DimensionError("input length does not match v1f");
    check_magnitudes(s.v1f, "v1f");

    // Pilot up, amplify and conjugate, return, attenuate and conjugate.
    const Eigen::VectorXcd v2b = ch.s21 * s.v1f;
    const Eigen::VectorXcd v2f = (p.gain_g * v2b).conjugate();
    const Eigen::VectorXcd v1b = clip_per_port(ch.s21.transpose() * v2f, p);
    const Eigen::VectorXcd v1f = (p.loss_l * v1b).conjugate() + u;
    check_magnitudes(v2f, "v2f");
    check_magnitudes(v1f, "v1f");

    LoopState next;
    next.v1f = v1f;
    next.v2f = v2f;
    next.k = s.k + 1;
    next.t = s.t + dt;
    return next;
}

Eigen::VectorXcd zero_input_oracle(const ChannelSnapshot& ch, const LoopParams& p,
                                   const Eigen::VectorXcd& v1f0, int k) {
    if (v1f0.size() != ch.s21.cols()) {
        throw DimensionError("v1f length does not match receiver port count");
    }
    if (k < 0) throw IndexError("circulation count must be non-negative");
    const EigenAnalysis ea = eig_analysis(ch);
    const std::complex<double> lg = std::conj(p.loss_l) * p.gain_g;
    const std::complex<double> lg_k = std::pow(lg, k);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v1f0.size());
    for (int i = 0; i < ea.b_vecs.cols(); ++i) {
        const double xi = i < ea.xi.size() ? ea.xi(i) : 0.0;
        const std::complex<double> w = ea.b_vecs.col(i).dot(v1f0);  // <b_i, v1f0>
        out += std::pow(xi, k) * w * ea.b_vecs.col(i);
    }
    return lg_k * out;
}

PowerReading power_out(const LoopState& s, const ChannelSnapshot& ch, const LoopParams& p) {
    PowerReading r;
    const Eigen::VectorXcd v1b = clip_per_port(ch.s21.transpose() * s.v2f, p);
    r.power_w = v1b.squaredNorm() / p.z0;
    if (s.v2f.squaredNorm() > 0.0) {
        r.efficiency = efficiency(ch, s.v2f);
        r.efficiency_defined = true;
    }
    return r;
}

PowerReading capture_preview(const LoopState& s, const ChannelSnapshot& ch, const LoopParams& p) {
    if (s.v1f.size() != ch.s21.cols()) {
        throw DimensionError("v1f length does not match receiver port count");
    }
    const Eigen::VectorXcd v2b = ch.s21 * s.v1f;
    LoopState ahead;
    ahead.v2f = (p.gain_g * v2b).conjugate();
    return power_out(ahead, ch, p);
}

const char* to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Marginal: return "marginal";
        case Stability::Unstable: return "unstable";
    }
    return "unknown";
}

Stability classify_product(double lg_mag, double xi_max, double rel_tol) {
    if (!(lg_mag >= 0.0) || !(xi_max >= 0.0)) throw NumericalError("gains must be non-negative");
    const double product = lg_mag * xi_max;
    if (std::abs(product - 1.0) <= rel_tol) return Stability::Marginal;
    return product < 1.0 ? Stability::Stable : Stability::Unstable;
}

Stability classify_stability(const LoopParams& p, const EigenAnalysis& ea, double rel_tol) {
    return classify_product(std::abs(p.loss_l * p.gain_g), ea.xi_max(), rel_tol);
}

double power_recursion_oracle(double p0_w, double xi_max, double lg_mag, std::int64_t k) {
    if (!(p0_w >= 0.0)) throw NumericalError("initial power must be non-negative");
    if (k < 0) throw IndexError("circulation count must be non-negative");
    return p0_w * std::pow(xi_max * lg_mag, 2.0 * static_cast<double>(k));
}

std::vector<GainSweepPoint> gain_sweep(const ChannelSnapshot& ch, const LoopParams& tmpl,
                                       double lg_min_db, double lg_max_db, std::uint64_t seed,
                                       double step_db, int steps_per_point) {
    if (!(step_db > 0.0)) throw StepSizeError("sweep step must be positive");
    if (lg_max_db < lg_min_db) throw StepSizeError("sweep range is inverted");
    if (steps_per_point < 10) throw InsufficientDataError("need at least 10 circulations per point");
    if (!tmpl.rx_saturation_w) {
        throw NumericalError("gain sweep requires receiver saturation to bound unstable points");
    }
    if (tmpl.noise_power_dbw <= -300.0) {
        throw NumericalError("gain sweep requires nonzero injected noise");
    }

    std::vector<GainSweepPoint> out;
    Rng rng(seed);
    const int m = ch.receiver_ports();
    const int settle = steps_per_point / 2;
    for (double lg_db = lg_min_db; lg_db <= lg_max_db + 1e-9; lg_db += step_db) {
        LoopParams p = tmpl;
        // Keep |L| <= 1 by pushing the swept product into the generator gain.
        p.loss_l = 1.0;
        p.gain_g = std::pow(10.0, lg_db / 20.0);
        LoopState s = LoopState::start(noise_vector(m, p.noise_power_dbw, p.z0, rng),
                                       ch.generator_ports());
        double num = 0.0;
        double den = 0.0;
        for (int k = 0; k < steps_per_point; ++k) {
            s = step(s, ch, p, noise_vector(m, p.noise_power_dbw, p.z0, rng));
            if (k < settle) continue;
            const Eigen::VectorXcd v1b = ch.s21.transpose() * s.v2f;
            // Energy-weighted efficiency estimate over the averaging window.
            num += v1b.squaredNorm();
            den += s.v2f.squaredNorm();
        }
        GainSweepPoint pt;
        pt.lg_db = lg_db;
        pt.measured_efficiency = den > 0.0 ? num / den : 0.0;
        out.push_back(pt);
    }
    return out;
}

double find_marginal_lg(const ChannelSnapshot& ch, std::uint64_t seed, double rel_tol) {
    Rng rng(seed);
    const Eigen::VectorXcd seed_vec = complex_gaussian(ch.receiver_ports(), 1.0, rng);
    // growth(lg) = lg * xi_max is monotone in lg: bracket then bisect.
    double lo = 1e-6;
    double hi = 1e6;
    const double g_lo = growth_rate(ch, lo, seed_vec);
    if (g_lo >= 1.0) throw NumericalError("channel gain too high to bracket marginal point");
    for (int i = 0; i < 200 && growth_rate(ch, hi, seed_vec) <= 1.0; ++i) hi *= 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);  // geometric: the scale is logarithmic
        if (growth_rate(ch, mid, seed_vec) < 1.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if ((hi - lo) <= rel_tol * lo) break;
    }
    return 0.5 * (lo + hi);
}

RegressionResult marginal_regression(std::span<const ChannelSnapshot> channels,
                                     std::uint64_t seed) {
    if (channels.size() < 10) {
        throw InsufficientDataError("marginal regression needs at least 10 channels");
    }
    std::vector<double> x;
    std::vector<double> y;
    x.reserve(channels.size());
    y.reserve(channels.size());
    for (std::size_t i = 0; i < channels.size(); ++i) {
        const EigenAnalysis ea = eig_analysis(channels[i]);
        x.push_back(-20.0 * std::log10(ea.xi_max()));
        y.push_back(20.0 * std::log10(find_marginal_lg(channels[i], seed + i)));
    }
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double var_x = sxx - sx * sx / n;
    const double var_y = syy - sy * sy / n;
    if (var_x <= 1e-12 * std::max(1.0, sxx / n)) {
        throw DegenerateRegressionError("regressor has no variance across channels");
    }
    RegressionResult r;
    r.n = static_cast<int>(x.size());
    r.slope = (sxy - sx * sy / n) / var_x;
    r.intercept = (sy - r.slope * sx) / n;
    const double cov = sxy - sx * sy / n;
    r.r_squared = var_y > 0.0 ? (cov * cov) / (var_x * var_y) : 1.0;
    return r;
}

std::vector<ChannelSnapshot> regression_channel_set(int n_channels, std::uint64_t seed) {
    std::vector<ChannelSnapshot> channels;
    channels.reserve(std::max(n_channels, 0));
    std::uint64_t draw = seed;
    while (static_cast<int>(channels.size()) < n_channels) {
        Rng pick(draw);
        const double sigma = uniform(0.05, 0.9, pick);
        ChannelSnapshot ch = random_passive_channel(4, 4, draw * 2654435761u + 1, sigma);
        ++draw;
        // Keep a clear spectral gap so growth-rate bisection converges fast.
        const EigenAnalysis ea = eig_analysis(ch);
        if (ea.xi(1) > 0.81 * ea.xi(0)) continue;
        channels.push_back(std::move(ch));
    }
    return channels;
}

RegressionResult marginal_regression(int n_channels, std::uint64_t seed) {
    if (n_channels < 10) {
        throw InsufficientDataError("marginal regression needs at least 10 channels");
    }
    const std::vector<ChannelSnapshot> channels = regression_channel_set(n_channels, seed);
    return marginal_regression(std::span<const ChannelSnapshot>(channels), seed);
}

}  // namespace retrobeam
