#include "retrobeam/geometry.hpp"

#include <cmath>

#include "retrobeam/errors.hpp"

namespace retrobeam {

Vec3 ArrayGeometry::centroid() const {
    Vec3 c;
    for (const auto& p : element_positions) c = c + p;
    const double n = static_cast<double>(element_positions.size());
    return n > 0 ? c * (1.0 / n) : c;
}

ArrayGeometry ArrayGeometry::translated(const Vec3& offset) const {
    ArrayGeometry out = *this;
    for (auto& p : out.element_positions) p = p + offset;
    return out;
}

ArrayGeometry ArrayGeometry::rotated_y(double angle, const Vec3& pivot) const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    ArrayGeometry out = *this;
    for (auto& p : out.element_positions) {
        const Vec3 q = p - pivot;
        p = Vec3{c * q.x + s * q.z, q.y, -s * q.x + c * q.z} + pivot;
    }
    return out;
}

void ArrayGeometry::validate() const {
    if (element_positions.empty()) throw GeometryError("array has no elements");
    if (!(element_gain > 0.0)) throw GeometryError("element gain must be positive");
    if (!(wavelength > 0.0)) throw GeometryError("wavelength must be positive");
    for (std::size_t i = 0; i < element_positions.size(); ++i) {
        for (std::size_t j = i + 1; j < element_positions.size(); ++j) {
            if (distance(element_positions[i], element_positions[j]) <= 0.0) {
                throw GeometryError("coincident array elements");
            }
        }
    }
}

ArrayGeometry ArrayGeometry::grid(int rows, int cols, double spacing, double wavelength,
                                  double element_gain) {
    if (rows < 1 || cols < 1) throw GeometryError("grid needs at least one row and column");
    if (!(spacing > 0.0)) throw GeometryError("grid spacing must be positive");
    ArrayGeometry g;
    g.element_gain = element_gain;
    g.wavelength = wavelength;
    const double x0 = -0.5 * spacing * (cols - 1);
    const double y0 = -0.5 * spacing * (rows - 1);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            g.element_positions.push_back({x0 + c * spacing, y0 + r * spacing, 0.0});
        }
    }
    g.validate();
    return g;
}

}  // namespace retrobeam
