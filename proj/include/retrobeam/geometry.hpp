#pragma once

#include <cmath>
#include <vector>

namespace retrobeam {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// One antenna array: element positions plus the scalar element gain and the
// operating wavelength shared by every element.
struct ArrayGeometry {
    std::vector<Vec3> element_positions;
    double element_gain = 1.0;
    double wavelength = 0.125;

    int size() const { return static_cast<int>(element_positions.size()); }
    Vec3 centroid() const;

    ArrayGeometry translated(const Vec3& offset) const;
    // Rigid rotation about an axis through `pivot` along +y (in-plane axis of a
    // broadside-z array), angle in radians.
    ArrayGeometry rotated_y(double angle, const Vec3& pivot) const;

    // Throws GeometryError on empty arrays, coincident elements, or
    // non-positive gain/wavelength.
    void validate() const;

    // rows x cols grid centered on the origin in the x-y plane.
    static ArrayGeometry grid(int rows, int cols, double spacing, double wavelength,
                              double element_gain = 1.0);
};

}  // namespace retrobeam
