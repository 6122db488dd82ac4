#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "retrobeam/geometry.hpp"

namespace retrobeam {

// Rectangular blocker lying in a plane perpendicular to the array separation
// axis (z). Paths crossing the plate are attenuated; the transition across the
// plate edge is smoothed over `edge_softness` meters so a moving plate changes
// the channel continuously.
struct Obstruction {
    Vec3 center;
    double half_width = 0.025;   // x half extent, meters
    double half_height = 0.025;  // y half extent, meters
    double attenuation = 0.05;   // amplitude factor applied to blocked paths
    Vec3 velocity;               // meters/second
    double edge_softness = 0.025;

    Obstruction at_time(double t) const;
    // Amplitude factor for the segment a->b: 1 when clear, `attenuation` when
    // fully blocked, smooth in between.
    double path_factor(const Vec3& a, const Vec3& b) const;
    void validate() const;
};

// Forward transmission matrix of the two-array network at one instant.
// s21(i, j) couples generator port i to receiver port j; the return channel is
// the transpose (reciprocal network, matched ports).
struct ChannelSnapshot {
    Eigen::MatrixXcd s21;
    double z0 = 50.0;
    double timestamp = 0.0;

    int generator_ports() const { return static_cast<int>(s21.rows()); }
    int receiver_ports() const { return static_cast<int>(s21.cols()); }
    double max_singular_value() const;

    // Throws DimensionError / NumericalError / PassivityError.
    void validate() const;
};

// Beam modes of a snapshot. xi holds the squared singular values of s21 in
// descending order; a_vecs columns span the generator port space (eigenvectors
// of conj(S21) S21^T), b_vecs the receiver port space (eigenvectors of
// S21^H S21). Both bases are orthonormal and full.
struct EigenAnalysis {
    Eigen::VectorXd xi;
    Eigen::MatrixXcd a_vecs;
    Eigen::MatrixXcd b_vecs;

    double xi_max() const { return xi(0); }
    // xi padded with zeros to the generator port count.
    double xi_generator(int i) const;
    Eigen::VectorXcd a_max() const { return a_vecs.col(0); }
    Eigen::VectorXcd b_max() const { return b_vecs.col(0); }
};

// Free-space coupling between every generator/receiver element pair, with
// optional obstruction shadowing. Throws GeometryError when arrays overlap or
// wavelengths disagree, PassivityError if the synthesized matrix is not
// strictly passive.
ChannelSnapshot synth_channel(const ArrayGeometry& generator, const ArrayGeometry& receiver,
                              const std::optional<Obstruction>& obstruction = std::nullopt,
                              double z0 = 50.0, double timestamp = 0.0);

EigenAnalysis eig_analysis(const ChannelSnapshot& ch);

// Beam transfer efficiency of the forward excitation v2f (Rayleigh quotient of
// the generator-side Gram matrix). Throws ZeroVectorError on v2f = 0.
double efficiency(const ChannelSnapshot& ch, const Eigen::VectorXcd& v2f);

// Coordinates of v2f in the a-basis. Throws RankError when the generator Gram
// matrix is numerically rank deficient (condition > 1e12).
Eigen::VectorXcd decompose_input(const EigenAnalysis& ea, const Eigen::VectorXcd& v2f);

// Efficiency from eigenmode weights: sum(xi_i |w_i|^2) / sum(|w_i|^2).
double efficiency_from_weights(const EigenAnalysis& ea, const Eigen::VectorXcd& weights);

std::string channel_to_json(const ChannelSnapshot& ch);
ChannelSnapshot channel_from_json(const std::string& text);

// Atomic write (temp file + rename). Throws IoError.
void save_channel(const ChannelSnapshot& ch, const std::filesystem::path& path);
// Throws IoError / ParseError / PassivityError.
ChannelSnapshot load_channel(const std::filesystem::path& path);

// Random strictly passive snapshot: complex Gaussian entries rescaled so the
// largest singular value equals sigma_max.
ChannelSnapshot random_passive_channel(int n, int m, std::uint64_t seed, double sigma_max = 0.5);

}  // namespace retrobeam
