#include "retrobeam/channel.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <system_error>

#include "json.hpp"
#include "retrobeam/errors.hpp"
#include "retrobeam/rng.hpp"

namespace retrobeam {

namespace {

constexpr double kMinSeparationWavelengths = 0.1;
constexpr double kRankConditionLimit = 1e12;

double smoothstep01(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    const auto dir = path.parent_path();
    if (!dir.empty() && !std::filesystem::exists(dir, ec)) {
        throw IoError("directory does not exist: " + dir.string());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << text;
        if (!out.good()) throw IoError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

}  // namespace

Obstruction Obstruction::at_time(double t) const {
    Obstruction moved = *this;
    moved.center = center + velocity * t;
    return moved;
}

double Obstruction::path_factor(const Vec3& a, const Vec3& b) const {
    const double dz = b.z - a.z;
    if (dz == 0.0) return 1.0;  // path parallel to the plate plane
    const double s = (center.z - a.z) / dz;
    if (s <= 0.0 || s >= 1.0) return 1.0;
    const Vec3 hit = a + (b - a) * s;
    // Signed distance to the rectangle edge in-plane (negative inside).
    const double dx = std::abs(hit.x - center.x) - half_width;
    const double dy = std::abs(hit.y - center.y) - half_height;
    const double d = std::max(dx, dy);
    if (edge_softness <= 0.0) return d <= 0.0 ? attenuation : 1.0;
    const double blocked = smoothstep01(0.5 - d / edge_softness);
    return 1.0 - (1.0 - attenuation) * blocked;
}

void Obstruction::validate() const {
    if (!(half_width > 0.0) || !(half_height > 0.0)) {
        throw GeometryError("obstruction extents must be positive");
    }
    if (!(attenuation >= 0.0) || attenuation > 1.0) {
        throw GeometryError("obstruction attenuation must lie in [0, 1]");
    }
    if (edge_softness < 0.0) throw GeometryError("edge softness must be non-negative");
}

double ChannelSnapshot::max_singular_value() const {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s21);
    return svd.singularValues()(0);
}

void ChannelSnapshot::validate() const {
    if (s21.rows() < 1 || s21.cols() < 1) throw DimensionError("s21 must be at least 1x1");
    if (!(z0 > 0.0)) throw NumericalError("reference impedance must be positive");
    if (!s21.allFinite()) throw NumericalError("s21 has non-finite entries");
    const double smax = max_singular_value();
    if (!(smax < 1.0)) {
        throw PassivityError("max singular value " + std::to_string(smax) + " is not < 1");
    }
}

double EigenAnalysis::xi_generator(int i) const {
    if (i < 0 || i >= a_vecs.rows()) throw IndexError("mode index out of range");
    return i < xi.size() ? xi(i) : 0.0;
}

ChannelSnapshot synth_channel(const ArrayGeometry& generator, const ArrayGeometry& receiver,
                              const std::optional<Obstruction>& obstruction, double z0,
                              double timestamp) {
    generator.validate();
    receiver.validate();
    if (obstruction) obstruction->validate();
    if (generator.wavelength != receiver.wavelength) {
        throw GeometryError("arrays must share one operating wavelength");
    }
    const double lambda = generator.wavelength;
    const int n = generator.size();
    const int m = receiver.size();

    ChannelSnapshot ch;
    ch.z0 = z0;
    ch.timestamp = timestamp;
    ch.s21.resize(n, m);
    const double g2 = generator.element_gain * receiver.element_gain;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
            const Vec3& p = generator.element_positions[i];
            const Vec3& q = receiver.element_positions[j];
            const double d = distance(p, q);
            if (d <= kMinSeparationWavelengths * lambda) {
                throw GeometryError("generator and receiver elements closer than lambda/10");
            }
            double amp = g2 * lambda / (4.0 * std::numbers::pi * d);
            if (obstruction) amp *= obstruction->path_factor(p, q);
            const double phase = -2.0 * std::numbers::pi * d / lambda;
            ch.s21(i, j) = std::polar(amp, phase);
        }
    }
    ch.validate();
    return ch;
}

EigenAnalysis eig_analysis(const ChannelSnapshot& ch) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ch.s21, Eigen::ComputeFullU | Eigen::ComputeFullV);
    EigenAnalysis ea;
    const auto& sv = svd.singularValues();
    ea.xi = sv.array().square();
    ea.a_vecs = svd.matrixU().conjugate();
    ea.b_vecs = svd.matrixV();
    return ea;
}

double efficiency(const ChannelSnapshot& ch, const Eigen::VectorXcd& v2f) {
    if (v2f.size() != ch.s21.rows()) {
        throw DimensionError("excitation length does not match generator port count");
    }
    const double denom = v2f.squaredNorm();
    if (denom == 0.0) throw ZeroVectorError("efficiency of the zero excitation is undefined");
    return (ch.s21.transpose() * v2f).squaredNorm() / denom;
}

Eigen::VectorXcd decompose_input(const EigenAnalysis& ea, const Eigen::VectorXcd& v2f) {
    if (v2f.size() != ea.a_vecs.rows()) {
        throw DimensionError("excitation length does not match eigenbasis dimension");
    }
    const int n = static_cast<int>(ea.a_vecs.rows());
    const double xi_min = ea.xi_generator(n - 1);
    if (!(xi_min > 0.0) || ea.xi_max() / xi_min > kRankConditionLimit) {
        throw RankError("generator Gram matrix is numerically rank deficient");
    }
    return ea.a_vecs.adjoint() * v2f;
}

double efficiency_from_weights(const EigenAnalysis& ea, const Eigen::VectorXcd& weights) {
    if (weights.size() != ea.a_vecs.rows()) {
        throw DimensionError("weight count does not match eigenbasis dimension");
    }
    const double denom = weights.squaredNorm();
    if (denom == 0.0) throw ZeroVectorError("efficiency of zero weights is undefined");
    double num = 0.0;
    for (int i = 0; i < weights.size(); ++i) {
        num += ea.xi_generator(i) * std::norm(weights(i));
    }
    return num / denom;
}

std::string channel_to_json(const ChannelSnapshot& ch) {
    nlohmann::json j;
    j["n"] = ch.generator_ports();
    j["m"] = ch.receiver_ports();
    j["z0_ohm"] = ch.z0;
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < ch.s21.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int jcol = 0; jcol < ch.s21.cols(); ++jcol) {
            row.push_back({ch.s21(i, jcol).real(), ch.s21(i, jcol).imag()});
        }
        rows.push_back(std::move(row));
    }
    j["s21"] = std::move(rows);
    return j.dump(2) + "\n";
}

ChannelSnapshot channel_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid channel JSON: ") + e.what());
    }
    for (const char* key : {"n", "m", "s21"}) {
        if (!j.contains(key)) throw ParseError(std::string("channel JSON missing \"") + key + "\"");
    }
    if (!j["n"].is_number_integer() || !j["m"].is_number_integer()) {
        throw ParseError("channel JSON dimensions must be integers");
    }
    const int n = j["n"].get<int>();
    const int m = j["m"].get<int>();
    if (n < 1 || m < 1) throw ParseError("channel JSON dimensions must be positive");

    ChannelSnapshot ch;
    ch.z0 = j.value("z0_ohm", 50.0);
    if (!(ch.z0 > 0.0)) throw ParseError("z0_ohm must be positive");
    const auto& rows = j["s21"];
    if (!rows.is_array() || static_cast<int>(rows.size()) != n) {
        throw ParseError("s21 must hold n rows");
    }
    ch.s21.resize(n, m);
    for (int i = 0; i < n; ++i) {
        const auto& row = rows[i];
        if (!row.is_array() || static_cast<int>(row.size()) != m) {
            throw ParseError("s21 row " + std::to_string(i) + " must hold m entries");
        }
        for (int jcol = 0; jcol < m; ++jcol) {
            const auto& cell = row[jcol];
            if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() ||
                !cell[1].is_number()) {
                throw ParseError("s21 entries must be [re, im] pairs");
            }
            ch.s21(i, jcol) = std::complex<double>(cell[0].get<double>(), cell[1].get<double>());
        }
    }
    ch.validate();
    return ch;
}

void save_channel(const ChannelSnapshot& ch, const std::filesystem::path& path) {
    atomic_write_text(path, channel_to_json(ch));
}

ChannelSnapshot load_channel(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return channel_from_json(text);
}

ChannelSnapshot random_passive_channel(int n, int m, std::uint64_t seed, double sigma_max) {
    if (n < 1 || m < 1) throw DimensionError("channel dimensions must be positive");
    if (!(sigma_max > 0.0) || !(sigma_max < 1.0)) {
        throw PassivityError("target max singular value must lie in (0, 1)");
    }
    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ChannelSnapshot ch;
    ch.s21.resize(n, m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) ch.s21(i, j) = std::complex<double>(gauss(rng), gauss(rng));
    }
    ch.s21 *= sigma_max / ch.max_singular_value();
    ch.validate();
    return ch;
}

}  // namespace retrobeam
