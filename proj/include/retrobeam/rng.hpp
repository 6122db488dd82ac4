#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>

namespace retrobeam {

using Rng = std::mt19937_64;

// Circularly symmetric complex Gaussian vector with E|u_i|^2 = mean_sq.
inline Eigen::VectorXcd complex_gaussian(int len, double mean_sq, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(mean_sq / 2.0));
    Eigen::VectorXcd v(len);
    for (int i = 0; i < len; ++i) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v(i) = std::complex<double>(re, im);
    }
    return v;
}

// Noise vector for one loop circulation: per-port power p_dbw across z0.
inline Eigen::VectorXcd noise_vector(int len, double p_dbw, double z0, Rng& rng) {
    const double p_w = std::pow(10.0, p_dbw / 10.0);
    return complex_gaussian(len, p_w * z0, rng);
}

inline double uniform(double lo, double hi, Rng& rng) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

}  // namespace retrobeam
