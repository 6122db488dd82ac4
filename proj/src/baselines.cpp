#include "retrobeam/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "retrobeam/errors.hpp"

namespace retrobeam {

namespace {

// Per-element (log-amplitude, phase) parameterization of a weight vector.
Eigen::VectorXcd weights_from_params(const Eigen::VectorXd& x) {
    const int n = static_cast<int>(x.size()) / 2;
    Eigen::VectorXcd w(n);
    for (int i = 0; i < n; ++i) w(i) = std::polar(std::exp(x(2 * i)), x(2 * i + 1));
    return w;
}

TraceRow efficiency_row(const ChannelSnapshot& ch, const EigenAnalysis& ea,
                        const Eigen::VectorXcd& w, double t) {
    TraceRow row;
    row.t = t;
    row.xi_max = ea.xi_max();
    row.g_db = 0.0;
    row.r_db = 0.0;
    const double norm = w.norm();
    if (norm > 0.0) {
        row.efficiency = efficiency(ch, w);
        double aligned_power = 0.0;
        for (int i = 0; i < ea.a_vecs.cols(); ++i) {
            if (ea.xi_generator(i) < ea.xi_max() * (1.0 - 1e-9)) break;
            aligned_power += std::norm(ea.a_vecs.col(i).dot(w));
        }
        row.alignment = std::sqrt(aligned_power) / norm;
        row.power_dbw = 10.0 * std::log10(std::max(row.efficiency, 1e-300));
    }
    row.stability = Stability::Stable;
    return row;
}

}  // namespace

NelderMeadResult nelder_mead_optimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& x0, const NelderMeadOptions& opt) {
    const int n = static_cast<int>(x0.size());
    if (n < 1) throw DimensionError("optimizer needs at least one coordinate");

    std::vector<Eigen::VectorXd> xs;
    std::vector<double> fs;
    NelderMeadResult result;
    auto evaluate = [&](const Eigen::VectorXd& x) {
        const double v = f(x);
        ++result.evaluations;
        if (result.best_trace.empty() || v < result.best_trace.back()) {
            result.best_trace.push_back(v);
        } else {
            result.best_trace.push_back(result.best_trace.back());
        }
        return v;
    };

    xs.push_back(x0);
    fs.push_back(evaluate(x0));
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x = x0;
        x(i) += opt.initial_step;
        xs.push_back(x);
        fs.push_back(evaluate(x));
    }

    auto order = [&] {
        std::vector<int> idx(xs.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        std::vector<Eigen::VectorXd> xs2;
        std::vector<double> fs2;
        for (int i : idx) {
            xs2.push_back(xs[i]);
            fs2.push_back(fs[i]);
        }
        xs.swap(xs2);
        fs.swap(fs2);
    };

    while (result.evaluations < opt.max_evaluations) {
        order();
        if (fs.back() - fs.front() <= opt.tol * (1.0 + std::abs(fs.front()))) {
            result.converged = true;
            break;
        }
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += xs[i];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd reflected = centroid + opt.reflection * (centroid - xs.back());
        const double f_r = evaluate(reflected);
        if (f_r < fs.front()) {
            const Eigen::VectorXd expanded = centroid + opt.expansion * (centroid - xs.back());
            const double f_e = evaluate(expanded);
            if (f_e < f_r) {
                xs.back() = expanded;
                fs.back() = f_e;
            } else {
                xs.back() = reflected;
                fs.back() = f_r;
            }
            continue;
        }
        if (f_r < fs[xs.size() - 2]) {
            xs.back() = reflected;
            fs.back() = f_r;
            continue;
        }
        const Eigen::VectorXd contracted = centroid + opt.contraction * (xs.back() - centroid);
        const double f_c = evaluate(contracted);
        if (f_c < fs.back()) {
            xs.back() = contracted;
            fs.back() = f_c;
            continue;
        }
        for (std::size_t i = 1; i < xs.size(); ++i) {
            xs[i] = xs.front() + opt.shrink * (xs[i] - xs.front());
            fs[i] = evaluate(xs[i]);
            if (result.evaluations >= opt.max_evaluations) break;
        }
    }
    order();
    result.x = xs.front();
    result.f = fs.front();
    return result;
}

Eigen::VectorXcd position_tracking_weights(const ArrayGeometry& generator,
                                           const Vec3& rx_reference) {
    generator.validate();
    const int n = generator.size();
    Eigen::VectorXcd w(n);
    for (int i = 0; i < n; ++i) {
        const double d = distance(generator.element_positions[i], rx_reference);
        // Conjugate the propagation phase so all contributions add at the
        // reference point.
        w(i) = std::polar(1.0, 2.0 * std::numbers::pi * d / generator.wavelength);
    }
    return w / w.norm();
}

Eigen::VectorXcd pilot_conjugate_weights(const ChannelSnapshot& ch, int pilot_element) {
    if (pilot_element < 0 || pilot_element >= ch.receiver_ports()) {
        throw IndexError("pilot element index out of range");
    }
    const Eigen::VectorXcd column = ch.s21.col(pilot_element);
    const double norm = column.norm();
    if (norm == 0.0) throw ZeroVectorError("pilot column is zero: no retrodirective reference");
    return column.conjugate() / norm;
}

SimulationTrace iterative_superposition_run(const ChannelTrajectory& traj, double duration,
                                            const SuperpositionConfig& cfg) {
    if (!(duration > 0.0)) throw NumericalError("duration must be positive");
    if (!(cfg.iteration_time > 0.0)) throw NumericalError("iteration time must be positive");

    const ChannelSnapshot first = traj.sample(0.0);
    const int n = first.generator_ports();
    const int dim = 2 * n;
    double t = 0.0;
    SimulationTrace trace;

    auto measured_negative_power = [&](const Eigen::VectorXd& x) {
        const ChannelSnapshot ch = traj.sample(t);
        t += cfg.iteration_time;  // one live measurement per evaluation
        Eigen::VectorXcd w = weights_from_params(x);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        w *= std::sqrt(cfg.tx_power_w * ch.z0) / norm;
        return -(ch.s21.transpose() * w).squaredNorm() / ch.z0;
    };

    Eigen::VectorXd incumbent = Eigen::VectorXd::Zero(dim);
    auto record_incumbent = [&] {
        const ChannelSnapshot ch = traj.sample(t);
        const EigenAnalysis ea = eig_analysis(ch);
        trace.rows.push_back(efficiency_row(ch, ea, weights_from_params(incumbent), t));
    };

    // Once the optimizer stops spending measurements, the weights it settled
    // on stay in service for the rest of the window (the channel may drift
    // away underneath them).
    auto hold_incumbent_until = [&](double t_end) {
        while (t + cfg.iteration_time <= t_end + 1e-15) {
            t += cfg.iteration_time;
            record_incumbent();
        }
    };

    if (cfg.mode == SuperpositionMode::Simultaneous) {
        NelderMeadOptions opt = cfg.nm;
        opt.max_evaluations = std::max(1, static_cast<int>(duration / cfg.iteration_time));
        double best_f = std::numeric_limits<double>::infinity();
        auto objective = [&](const Eigen::VectorXd& x) {
            const double v = measured_negative_power(x);
            if (v < best_f) {
                best_f = v;
                incumbent = x;
            }
            record_incumbent();
            return v;
        };
        nelder_mead_optimize(objective, incumbent, opt);
        hold_incumbent_until(duration);
        return trace;
    }

    // Sequential: optimize one element (2 coordinates) at a time, round-robin.
    double best_f = std::numeric_limits<double>::infinity();
    const int total_budget = std::max(1, static_cast<int>(duration / cfg.iteration_time));
    int spent = 0;
    for (int element = 0; spent < total_budget; element = (element + 1) % n) {
        NelderMeadOptions opt = cfg.nm;
        opt.max_evaluations = std::min(cfg.sequential_element_budget, total_budget - spent);
        if (opt.max_evaluations < 3) break;
        const int base = 2 * element;
        Eigen::VectorXd sub0(2);
        sub0 << incumbent(base), incumbent(base + 1);
        auto sub_objective = [&](const Eigen::VectorXd& sub) {
            Eigen::VectorXd x = incumbent;
            x(base) = sub(0);
            x(base + 1) = sub(1);
            const double v = measured_negative_power(x);
            if (v < best_f) {
                best_f = v;
                incumbent = x;
            }
            record_incumbent();
            return v;
        };
        const NelderMeadResult res = nelder_mead_optimize(sub_objective, sub0, opt);
        spent += res.evaluations;
        if (res.evaluations == 0) break;
    }
    hold_incumbent_until(duration);
    return trace;
}

SimulationTrace fixed_weights_run(
    const ChannelTrajectory& traj, double duration,
    const std::function<Eigen::VectorXcd(const ChannelSnapshot&)>& weights_for,
    double iteration_time) {
    if (!(duration > 0.0)) throw NumericalError("duration must be positive");
    if (!(iteration_time > 0.0)) throw NumericalError("iteration time must be positive");
    SimulationTrace trace;
    const int steps = std::max(1, static_cast<int>(duration / iteration_time));
    for (int k = 1; k <= steps; ++k) {
        const double t = k * iteration_time;
        const ChannelSnapshot ch = traj.sample(t);
        const EigenAnalysis ea = eig_analysis(ch);
        trace.rows.push_back(efficiency_row(ch, ea, weights_for(ch), t));
    }
    return trace;
}

}  // namespace retrobeam
