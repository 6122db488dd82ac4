#include <cmath>

#include "doctest.h"
#include "retrobeam/channel.hpp"
#include "retrobeam/errors.hpp"
#include "retrobeam/geometry.hpp"

using namespace retrobeam;

TEST_CASE("grid lays elements out centered in the x-y plane") {
    const ArrayGeometry g = ArrayGeometry::grid(2, 3, 0.5, 0.125, 2.0);
    REQUIRE(g.size() == 6);
    CHECK(g.element_gain == 2.0);
    CHECK(g.wavelength == 0.125);
    CHECK(g.element_positions[0].x == doctest::Approx(-0.5));
    CHECK(g.element_positions[0].y == doctest::Approx(-0.25));
    CHECK(g.element_positions[5].x == doctest::Approx(0.5));
    CHECK(g.element_positions[5].y == doctest::Approx(0.25));
    for (const auto& p : g.element_positions) CHECK(p.z == 0.0);
    const Vec3 c = g.centroid();
    CHECK(c.norm() == doctest::Approx(0.0));
}

TEST_CASE("translate and rotate are rigid") {
    const ArrayGeometry g = ArrayGeometry::grid(3, 3, 0.0625, 0.125);
    const ArrayGeometry t = g.translated({0.1, -0.2, 0.3});
    CHECK(t.centroid().x == doctest::Approx(0.1));
    CHECK(t.centroid().y == doctest::Approx(-0.2));
    CHECK(t.centroid().z == doctest::Approx(0.3));

    const ArrayGeometry r = t.rotated_y(0.7, t.centroid());
    for (int i = 0; i < g.size(); ++i) {
        for (int j = i + 1; j < g.size(); ++j) {
            CHECK(distance(r.element_positions[i], r.element_positions[j]) ==
                  doctest::Approx(distance(g.element_positions[i], g.element_positions[j])));
        }
    }
    // pivot stays put
    CHECK(distance(r.centroid(), t.centroid()) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rotated_y by a quarter turn maps +x onto -z") {
    ArrayGeometry g;
    g.element_positions = {{1.0, 2.0, 0.0}};
    const ArrayGeometry r = g.rotated_y(M_PI / 2.0, {0, 0, 0});
    CHECK(r.element_positions[0].x == doctest::Approx(0.0));
    CHECK(r.element_positions[0].y == doctest::Approx(2.0));
    CHECK(r.element_positions[0].z == doctest::Approx(-1.0));
}

TEST_CASE("geometry validation rejects degenerate arrays") {
    CHECK_THROWS_AS(ArrayGeometry{}.validate(), GeometryError);
    CHECK_THROWS_AS(ArrayGeometry::grid(0, 2, 0.1, 0.125), GeometryError);
    CHECK_THROWS_AS(ArrayGeometry::grid(2, 2, -0.1, 0.125), GeometryError);

    ArrayGeometry g = ArrayGeometry::grid(2, 2, 0.1, 0.125);
    g.element_positions.push_back(g.element_positions.front());
    CHECK_THROWS_AS(g.validate(), GeometryError);

    ArrayGeometry bad_gain = ArrayGeometry::grid(2, 2, 0.1, 0.125);
    bad_gain.element_gain = 0.0;
    CHECK_THROWS_AS(bad_gain.validate(), GeometryError);
    ArrayGeometry bad_wl = ArrayGeometry::grid(2, 2, 0.1, 0.125);
    bad_wl.wavelength = -1.0;
    CHECK_THROWS_AS(bad_wl.validate(), GeometryError);
}

TEST_CASE("obstruction shadows paths through the plate") {
    Obstruction ob;
    ob.center = {0.0, 0.0, 0.1};
    ob.attenuation = 0.05;
    ob.edge_softness = 0.025;

    const Vec3 a{0, 0, 0}, b{0, 0, 0.2};
    CHECK(ob.path_factor(a, b) == doctest::Approx(0.05));  // dead center
    CHECK(ob.path_factor({1.0, 0, 0}, {1.0, 0, 0.2}) == 1.0);
    // path parallel to the plate plane never crosses it
    CHECK(ob.path_factor({0, 0, 0.1}, {1, 0, 0.1}) == 1.0);
    // plate plane outside the segment
    CHECK(ob.path_factor({0, 0, 0.15}, {0, 0, 0.2}) == 1.0);

    // exactly on the edge the smooth profile sits halfway
    const double edge = ob.path_factor({0.025, 0, 0}, {0.025, 0, 0.2});
    CHECK(edge == doctest::Approx(1.0 - 0.95 * 0.5));

    // amplitude is continuous across the feathered edge; the smooth profile
    // swings 0.95 over one softness length, so per-millimeter steps stay
    // under 0.95 * 1.5 / 25 (a hard edge would jump the full 0.95 at once)
    double prev = ob.path_factor({0.0, 0, 0}, {0.0, 0, 0.2});
    for (double x = 0.001; x < 0.08; x += 0.001) {
        const double f = ob.path_factor({x, 0, 0}, {x, 0, 0.2});
        CHECK(std::abs(f - prev) < 0.06);
        CHECK(f >= prev - 1e-12);  // monotone moving away from the plate
        prev = f;
    }
    CHECK(prev == 1.0);
}

TEST_CASE("obstruction moves with its velocity") {
    Obstruction ob;
    ob.center = {-0.09, 0.0, 0.1};
    ob.velocity = {800.0, 0.0, 0.0};
    const Obstruction later = ob.at_time(1e-4);
    CHECK(later.center.x == doctest::Approx(-0.01));
    CHECK(later.center.z == doctest::Approx(0.1));
    CHECK(ob.center.x == doctest::Approx(-0.09));  // original untouched
}

TEST_CASE("obstruction validation") {
    Obstruction ob;
    ob.half_width = 0.0;
    CHECK_THROWS_AS(ob.validate(), GeometryError);
    ob = {};
    ob.attenuation = 1.5;
    CHECK_THROWS_AS(ob.validate(), GeometryError);
    ob = {};
    ob.edge_softness = -0.01;
    CHECK_THROWS_AS(ob.validate(), GeometryError);
    ob = {};
    CHECK_NOTHROW(ob.validate());
}
