#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "gofi/kinematics.hpp"
#include "support.hpp"

using namespace gofi;
using namespace gofi::testing;

namespace {

const Frame kStraight{{0, 0}, 0.0, 0.0};

// Axis-aligned interval test for boxes with heading 0.
bool aabb_overlap(Vec2 a, BodyBox ba, Vec2 b, BodyBox bb) {
    return std::abs(a.x - b.x) <= 0.5 * (ba.length + bb.length) && std::abs(a.y - b.y) <= 0.5 * (ba.width + bb.width);
}

}  // namespace

TEST_CASE("step at constant speed advances speed*dt") {
    const VehicleState s = step(at(0, 0, 0, 10), 0.0, kStraight, 0.1);
    CHECK(s.position.x == doctest::Approx(1.0));
    CHECK(s.speed == doctest::Approx(10.0));
}

TEST_CASE("step clamps speed at zero") {
    const VehicleState s = step(at(0, 0, 0, 1), -20.0, kStraight, 0.1, DynamicLimits{14.0, -50.0, 3.0});
    CHECK(s.speed == 0.0);
    CHECK(s.position.x >= 0.0);
}

TEST_CASE("uniform acceleration matches closed form") {
    VehicleState s = at(0, 0);
    for (int i = 0; i < 50; ++i) {
        s = step(s, 2.0, kStraight, 0.1);
    }
    const double t = 5.0;
    CHECK(s.speed == doctest::Approx(2.0 * t).epsilon(1e-9));
    const double analytic = 0.5 * 2.0 * t * t;
    CHECK(std::abs(s.position.x - analytic) <= 0.02 * analytic);
}

TEST_CASE("step rejects nonpositive dt and never yields negative speed or NaN") {
    CHECK_THROWS_AS(step(at(0, 0), 1.0, kStraight, 0.0), std::invalid_argument);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> v(0.0, 14.0);
    std::uniform_real_distribution<double> a(-100.0, 100.0);
    std::uniform_real_distribution<double> h(-3.14, 3.14);
    for (int i = 0; i < 5000; ++i) {
        const VehicleState s = step(at(1, 2, h(rng), v(rng)), a(rng), Frame{{0, 0}, h(rng), 0.0}, 0.1);
        CHECK(s.speed >= 0.0);
        CHECK(s.speed <= 14.0);
        CHECK_FALSE(std::isnan(s.position.x));
        CHECK(s.heading >= -std::numbers::pi);
        CHECK(s.heading < std::numbers::pi);
    }
}

TEST_CASE("concat arithmetic and identity") {
    const Trajectory a = cruising("v", {0, 0}, 0.0, 5.0, 0.9);
    REQUIRE(a.states.size() == 10);
    Trajectory b = cruising("v", a.back().position, 0.0, 5.0, 1.9, a.end_time());
    REQUIRE(b.states.size() == 20);
    const Trajectory ab = concat(a, b);
    CHECK(ab.states.size() == 29);
    CHECK(ab.path_length() == doctest::Approx(a.path_length() + b.path_length()).epsilon(1e-12));
    Trajectory single = a;
    single.states = {a.back()};
    CHECK(concat(a, single).states == a.states);
    Trajectory other = b;
    other.vehicle_id = "w";
    CHECK_THROWS_AS(concat(a, other), TrajectoryError);
    Trajectory far = cruising("v", {50, 0}, 0.0, 5.0, 1.0);
    CHECK_THROWS_AS(concat(a, far), TrajectoryError);
}

TEST_CASE("collides: poses and interval oracle") {
    CHECK(collides(at(3, 4, 0.3), kCarBox, at(3, 4, 0.3), kCarBox));
    CHECK_FALSE(collides(at(0, 0), kCarBox, at(100, 0), kCarBox));
    const BodyBox b42{4.0, 2.0};
    CHECK(collides(at(0, 0), b42, at(3.9, 0), b42) == aabb_overlap({0, 0}, b42, {3.9, 0}, b42));
    CHECK(collides(at(0, 0), b42, at(3.9, 0), b42));
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int i = 0; i < 3000; ++i) {
        const Vec2 p{u(rng), u(rng)};
        CHECK(collides(at(0, 0), b42, at(p.x, p.y), kCarBox) == aabb_overlap({0, 0}, b42, p, kCarBox));
    }
}

TEST_CASE("collides is symmetric") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::uniform_real_distribution<double> h(-3.1, 3.1);
    std::uniform_real_distribution<double> dim(0.3, 5.0);
    for (int i = 0; i < 5000; ++i) {
        const VehicleState a = at(u(rng), u(rng), h(rng));
        const VehicleState b = at(u(rng), u(rng), h(rng));
        const BodyBox ba{dim(rng), dim(rng)};
        const BodyBox bb{dim(rng), dim(rng)};
        CHECK(collides(a, ba, b, bb) == collides(b, bb, a, ba));
    }
}

TEST_CASE("trajectory_collision") {
    const Trajectory a = cruising("a", {0, 0}, 0.0, 10.0, 5.0);
    const Trajectory b = cruising("b", {0, 10}, 0.0, 10.0, 5.0);
    CHECK_FALSE(trajectory_collision(a, kCarBox, b, kCarBox));

    const Trajectory c = cruising("c", {80, 0}, std::numbers::pi, 10.0, 5.0);
    const auto hit = trajectory_collision(a, kCarBox, c, kCarBox);
    std::optional<std::size_t> scan;
    for (std::size_t i = 0; i < a.states.size() && !scan; ++i) {
        if (collides(a.states[i], kCarBox, c.states[i], kCarBox)) {
            scan = i;
        }
    }
    REQUIRE(scan);
    CHECK(hit == scan);

    Trajectory one_a = a;
    one_a.states.resize(1);
    Trajectory one_b = a;
    one_b.states.resize(1);
    CHECK(trajectory_collision(one_a, kCarBox, one_b, kCarBox) == std::optional<std::size_t>{0});
}

TEST_CASE("trajectory_collision aligns start times") {
    const Trajectory a = cruising("a", {0, 0}, 0.0, 0.0, 3.0, 2.0);
    const Trajectory b = parked("b", at(0, 0), 2.5, 0.0);
    const auto hit = trajectory_collision(a, kCarBox, b, kCarBox);
    REQUIRE(hit);
    CHECK(*hit == 0);
    const Trajectory late = parked("b", at(0, 0), 1.0, 0.0);
    CHECK_FALSE(trajectory_collision(a, kCarBox, late, kCarBox));
}

TEST_CASE("trajectory CSV layout") {
    std::ostringstream out;
    write_trajectory_csv_header(out);
    write_trajectory_csv(out, cruising("v1", {1, 2}, 0.0, 3.0, 0.1));
    const std::string text = out.str();
    CHECK(text.rfind("t,vehicle_id,x,y,heading,speed,accel\n", 0) == 0);
    CHECK(text.find("\n0,v1,1,2,0,3,0\n") != std::string::npos);
}

TEST_CASE("kinematic consistency bound") {
    Trajectory t = cruising("v", {0, 0}, 0.0, 10.0, 2.0);
    CHECK(t.kinematically_consistent());
    t.states[5].position.x += 1.0;
    CHECK_FALSE(t.kinematically_consistent());
}
