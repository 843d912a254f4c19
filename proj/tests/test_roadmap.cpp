#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <random>

#include "gofi/roadmap.hpp"
#include "support.hpp"

using namespace gofi;
using namespace gofi::testing;

namespace {

const char* kTwoLaneJson = R"({
  "lanes": [
    {"id": "R", "centerline": [[0, 0], [100, 0]], "width": 3.5, "successors": [],
     "left": "L", "right": null, "speed_limit": 10, "kind": "road"},
    {"id": "L", "centerline": [[0, 3.5], [100, 3.5]], "width": 3.5, "successors": [],
     "left": null, "right": "R", "speed_limit": 10, "kind": "road"}
  ],
  "goals": [{"id": "G", "location": [95, 0], "target_speed": 0, "radius": 2}],
  "occlusion_sites": [],
  "obstructions": []
})";

}  // namespace

TEST_CASE("wrap_angle maps into [-pi, pi)") {
    CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(-std::numbers::pi));
    CHECK(wrap_angle(3.0 * std::numbers::pi / 2.0) == doctest::Approx(-std::numbers::pi / 2.0));
    CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(-std::numbers::pi));
    CHECK(wrap_angle(0.25) == doctest::Approx(0.25));
}

TEST_CASE("load_map parses a straight two-lane map") {
    const RoadMap m = parse_map(kTwoLaneJson);
    CHECK(m.lanes().size() == 2);
    CHECK(m.site_count() == 0);
    CHECK(m.lane("R").left_neighbor.value() == "L");
    CHECK(m.goal("G").radius == doctest::Approx(2.0));
}

TEST_CASE("dangling successor reference names the missing id") {
    std::string text = kTwoLaneJson;
    text.replace(text.find(R"("successors": [])"), 16, R"("successors": ["NOPE"])");
    try {
        parse_map(text);
        FAIL("expected MapError");
    } catch (const MapError& e) {
        CHECK(std::string(e.what()).find("NOPE") != std::string::npos);
    }
}

TEST_CASE("unknown keys and malformed JSON are rejected with diagnostics") {
    std::string extra = kTwoLaneJson;
    extra.replace(extra.find(R"("kind": "road")"), 14, R"("kind": "road", "colour": "red")");
    CHECK_THROWS_WITH_AS(parse_map(extra), doctest::Contains("colour"), MapError);
    CHECK_THROWS_WITH_AS(parse_map("{\"lanes\": [\n  {,]}"), doctest::Contains("line 2"), MapError);
    std::string bad_width = kTwoLaneJson;
    bad_width.replace(bad_width.find(R"("width": 3.5)"), 12, R"("width": "x")");
    CHECK_THROWS_WITH_AS(parse_map(bad_width), doctest::Contains("lanes[0].width"), MapError);
}

TEST_CASE("lane_frame on a straight lane") {
    const RoadMap m = straight_road(20.0);
    const Frame f = m.lane_frame("A", 5.0);
    CHECK(f.point.x == doctest::Approx(5.0));
    CHECK(f.point.y == doctest::Approx(0.0));
    CHECK(f.heading == doctest::Approx(0.0));
    CHECK(f.curvature == doctest::Approx(0.0));
    const Frame end = m.lane_frame("A", 20.0);
    CHECK(end.point == Vec2{20.0, 0.0});
    CHECK_THROWS_AS(m.lane_frame("A", 20.5), std::out_of_range);
    CHECK_THROWS_AS(m.lane_frame("A", -0.1), std::out_of_range);
}

TEST_CASE("quarter circle of radius 10 has curvature 1/r at its midpoint") {
    const double r = 10.0;
    RoadMap m({make_lane("Q", arc_points({0, 0}, r, -std::numbers::pi / 2.0, 0.0, 0.1))}, {}, {}, {});
    const double len = m.lane("Q").length();
    const double k = m.lane_frame("Q", 0.5 * len).curvature;
    CHECK(k == doctest::Approx(1.0 / r).epsilon(0.05));
}

TEST_CASE("lane_frame heading is continuous along a curved lane") {
    RoadMap m({make_lane("Q", arc_points({0, 0}, 8.0, 0.0, 3.0, 0.3))}, {}, {}, {});
    const double len = m.lane("Q").length();
    double prev = m.lane_frame("Q", 0.0).heading;
    for (double s = 0.1; s <= len; s += 0.1) {
        const double h = m.lane_frame("Q", s).heading;
        CHECK(std::abs(wrap_angle(h - prev)) < 0.2);
        prev = h;
    }
}

TEST_CASE("occludes: segment through a box") {
    const RoadMap m = straight_road();
    const Polygon through = oriented_box({5, 0}, 0.0, 2.0, 2.0);
    const Polygon aside = oriented_box({5, 5}, 0.0, 2.0, 2.0);
    CHECK(occludes(m, {0, 0}, {10, 0}, {through}));
    CHECK_FALSE(occludes(m, {0, 0}, {10, 0}, {aside}));
}

TEST_CASE("occludes is symmetric") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    std::uniform_real_distribution<double> h(-3.0, 3.0);
    const Polygon building{{2, 2}, {8, 2}, {8, 8}, {2, 8}};
    RoadMap m({make_lane("A", straight_points({-30, -30}, {30, -30}))}, {}, {}, {building});
    for (int i = 0; i < 2000; ++i) {
        const Vec2 a{u(rng), u(rng)};
        const Vec2 b{u(rng), u(rng)};
        const std::vector<Polygon> boxes{oriented_box({u(rng), u(rng)}, h(rng), 4.0, 1.8)};
        CHECK(occludes(m, a, b, boxes) == occludes(m, b, a, boxes));
    }
}

TEST_CASE("save_map then load_map preserves content") {
    RoadMap m = two_lane_road();
    OccludedSiteDef cv{"car", {20, 3.5}, 0.0, ConstantVelocity{8.0, "L"}, 4.0, 1.8};
    OccludedSiteDef st{"ped", {30, 0}, 1.5, Stationary{}, 0.6, 0.6};
    Lane cross = make_lane("X", straight_points({60, -3}, {60, 6}), 2.0);
    cross.kind = LaneKind::crosswalk;
    std::vector<Lane> lanes = m.lanes();
    lanes.push_back(cross);
    const RoadMap full(lanes, m.goals(), {cv, st}, {Polygon{{0, 10}, {5, 10}, {5, 15}}});
    const auto path = std::filesystem::temp_directory_path() / "gofi_roundtrip.json";
    save_map(full, path);
    const RoadMap back = load_map(path);
    std::filesystem::remove(path);
    REQUIRE(back.lanes().size() == full.lanes().size());
    for (std::size_t i = 0; i < full.lanes().size(); ++i) {
        const Lane& a = full.lanes()[i];
        const Lane& b = back.lanes()[i];
        CHECK(a.id == b.id);
        CHECK(a.centerline.points() == b.centerline.points());
        CHECK(a.width == b.width);
        CHECK(a.successors == b.successors);
        CHECK(a.left_neighbor == b.left_neighbor);
        CHECK(a.right_neighbor == b.right_neighbor);
        CHECK(a.speed_limit == b.speed_limit);
        CHECK(a.kind == b.kind);
    }
    REQUIRE(back.site_count() == 2);
    CHECK(std::get<ConstantVelocity>(back.occlusion_sites()[0].behavior).lane == "L");
    CHECK(std::holds_alternative<Stationary>(back.occlusion_sites()[1].behavior));
    CHECK(back.occlusion_sites()[1].length == doctest::Approx(0.6));
    CHECK(back.obstructions() == full.obstructions());
    CHECK(map_to_json(back) == map_to_json(full));
}

TEST_CASE("goal outside every lane corridor is rejected") {
    std::vector<Lane> lanes{make_lane("A", straight_points({0, 0}, {50, 0}))};
    CHECK_THROWS_AS(RoadMap(lanes, {GoalDef{"far", {25, 40}, 0.0, 2.0}}, {}, {}), MapError);
}

TEST_CASE("localize and turn classification") {
    Lane in = make_lane("in", straight_points({0, 0}, {50, 0}), 10.0, {"straight", "left"});
    Lane straight = make_lane("straight", straight_points({50, 0}, {100, 0}));
    Lane left = make_lane("left", arc_points({50, 10}, 10.0, -std::numbers::pi / 2.0, 0.0));
    RoadMap m({in, straight, left}, {}, {}, {});
    CHECK(m.turn_kind(0, 1) == TurnKind::straight);
    CHECK(m.turn_kind(0, 2) == TurnKind::left);
    CHECK(m.straight_successor(0).value() == 1);
    CHECK(m.turning_successors(0, TurnKind::left) == std::vector<std::size_t>{2});
    const auto loc = m.localize({20, 0.5}, 0.0);
    REQUIRE(loc);
    CHECK(m.lane(loc->lane).id == "in");
    CHECK(loc->lateral == doctest::Approx(0.5));
    CHECK_FALSE(m.localize({20, 0.0}, std::numbers::pi));
    CHECK_FALSE(m.localize({20, 30.0}, 0.0));
}
