#include "gofi/roadmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gofi {
namespace {

using nlohmann::json;

constexpr double kTurnThreshold = std::numbers::pi / 6.0;

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw MapError(where + ": expected an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw MapError(where + ": unknown key '" + key + "'");
        }
    }
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw MapError(where + ": missing required key '" + key + "'");
    }
    return *it;
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        throw MapError(where + ": expected a number");
    }
    return v.get<double>();
}

std::string text(const json& v, const std::string& where) {
    if (!v.is_string()) {
        throw MapError(where + ": expected a string");
    }
    return v.get<std::string>();
}

Vec2 point(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2) {
        throw MapError(where + ": expected [x, y]");
    }
    return {number(v[0], where + "[0]"), number(v[1], where + "[1]")};
}

std::vector<Vec2> points(const json& v, const std::string& where) {
    if (!v.is_array()) {
        throw MapError(where + ": expected an array of points");
    }
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(point(v[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

std::optional<std::string> optional_id(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    return text(*it, where + "." + key);
}

Lane parse_lane(const json& j, const std::string& where) {
    reject_unknown(j, {"id", "centerline", "width", "successors", "left", "right", "speed_limit", "kind"}, where);
    Lane lane;
    lane.id = text(require(j, "id", where), where + ".id");
    lane.centerline = Polyline(points(require(j, "centerline", where), where + ".centerline"));
    lane.width = number(require(j, "width", where), where + ".width");
    lane.speed_limit = number(require(j, "speed_limit", where), where + ".speed_limit");
    if (auto it = j.find("successors"); it != j.end()) {
        if (!it->is_array()) {
            throw MapError(where + ".successors: expected an array of lane ids");
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            lane.successors.push_back(text((*it)[i], where + ".successors[" + std::to_string(i) + "]"));
        }
    }
    lane.left_neighbor = optional_id(j, "left", where);
    lane.right_neighbor = optional_id(j, "right", where);
    if (auto it = j.find("kind"); it != j.end()) {
        const std::string kind = text(*it, where + ".kind");
        if (kind == "road") {
            lane.kind = LaneKind::road;
        } else if (kind == "crosswalk") {
            lane.kind = LaneKind::crosswalk;
        } else {
            throw MapError(where + ".kind: expected 'road' or 'crosswalk', got '" + kind + "'");
        }
    }
    return lane;
}

GoalDef parse_goal(const json& j, const std::string& where) {
    reject_unknown(j, {"id", "location", "target_speed", "radius"}, where);
    GoalDef g;
    g.id = text(require(j, "id", where), where + ".id");
    g.location = point(require(j, "location", where), where + ".location");
    g.target_speed = number(require(j, "target_speed", where), where + ".target_speed");
    g.radius = number(require(j, "radius", where), where + ".radius");
    return g;
}

OccludedSiteDef parse_site(const json& j, const std::string& where) {
    reject_unknown(j, {"id", "pose", "behavior", "footprint"}, where);
    OccludedSiteDef site;
    site.id = text(require(j, "id", where), where + ".id");
    const json& pose = require(j, "pose", where);
    if (!pose.is_array() || pose.size() != 3) {
        throw MapError(where + ".pose: expected [x, y, heading]");
    }
    site.position = {number(pose[0], where + ".pose[0]"), number(pose[1], where + ".pose[1]")};
    site.heading = number(pose[2], where + ".pose[2]");
    const json& fp = require(j, "footprint", where);
    if (!fp.is_array() || fp.size() != 2) {
        throw MapError(where + ".footprint: expected [length, width]");
    }
    site.length = number(fp[0], where + ".footprint[0]");
    site.width = number(fp[1], where + ".footprint[1]");
    const std::string bw = where + ".behavior";
    const json& b = require(j, "behavior", where);
    const std::string type = text(require(b, "type", bw), bw + ".type");
    if (type == "stationary") {
        reject_unknown(b, {"type"}, bw);
        site.behavior = Stationary{};
    } else if (type == "constant_velocity") {
        reject_unknown(b, {"type", "speed", "lane"}, bw);
        site.behavior = ConstantVelocity{number(require(b, "speed", bw), bw + ".speed"),
                                         text(require(b, "lane", bw), bw + ".lane")};
    } else {
        throw MapError(bw + ".type: unknown behavior '" + type + "'");
    }
    return site;
}

json point_json(Vec2 p) { return json::array({p.x, p.y}); }

}  // namespace

RoadMap::RoadMap(std::vector<Lane> lanes, std::vector<GoalDef> goals, std::vector<OccludedSiteDef> sites,
                 std::vector<Polygon> obstructions)
    : lanes_(std::move(lanes)), goals_(std::move(goals)), sites_(std::move(sites)), obstructions_(std::move(obstructions)) {
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
        if (!index_.emplace(lanes_[i].id, i).second) {
            throw MapError("duplicate lane id '" + lanes_[i].id + "'");
        }
    }
    validate();
}

void RoadMap::validate() const {
    auto check_ref = [&](const std::string& ref, const std::string& owner, const char* field) {
        if (!index_.contains(ref)) {
            throw MapError("lane '" + owner + "' " + field + " references missing lane id '" + ref + "'");
        }
    };
    for (const Lane& lane : lanes_) {
        const auto& pts = lane.centerline.points();
        if (pts.size() < 2) {
            throw MapError("lane '" + lane.id + "': centerline needs at least 2 points");
        }
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (distance(pts[i - 1], pts[i]) < 1e-9) {
                throw MapError("lane '" + lane.id + "': repeated centerline point at index " + std::to_string(i));
            }
        }
        if (!(lane.width > 0.0)) {
            throw MapError("lane '" + lane.id + "': width must be positive");
        }
        if (!(lane.speed_limit >= 0.0)) {
            throw MapError("lane '" + lane.id + "': speed_limit must be nonnegative");
        }
        for (const auto& s : lane.successors) {
            check_ref(s, lane.id, "successor");
        }
        if (lane.left_neighbor) {
            check_ref(*lane.left_neighbor, lane.id, "left neighbor");
        }
        if (lane.right_neighbor) {
            check_ref(*lane.right_neighbor, lane.id, "right neighbor");
        }
    }
    std::set<std::string> goal_ids;
    for (const GoalDef& g : goals_) {
        if (!goal_ids.insert(g.id).second) {
            throw MapError("duplicate goal id '" + g.id + "'");
        }
        if (!(g.radius > 0.0)) {
            throw MapError("goal '" + g.id + "': radius must be positive");
        }
        if (!(g.target_speed >= 0.0)) {
            throw MapError("goal '" + g.id + "': target_speed must be nonnegative");
        }
        const bool on_road = std::any_of(lanes_.begin(), lanes_.end(), [&](const Lane& l) {
            return l.kind == LaneKind::road && l.centerline.project(g.location).distance <= 0.5 * l.width;
        });
        if (!on_road) {
            throw MapError("goal '" + g.id + "' does not lie within any lane corridor");
        }
    }
    for (const OccludedSiteDef& s : sites_) {
        if (!(s.length > 0.0) || !(s.width > 0.0)) {
            throw MapError("occlusion site '" + s.id + "': footprint must be positive");
        }
        if (const auto* cv = std::get_if<ConstantVelocity>(&s.behavior)) {
            if (!index_.contains(cv->lane)) {
                throw MapError("occlusion site '" + s.id + "' references missing lane id '" + cv->lane + "'");
            }
            if (!(cv->speed >= 0.0)) {
                throw MapError("occlusion site '" + s.id + "': speed must be nonnegative");
            }
        }
    }
    for (std::size_t i = 0; i < obstructions_.size(); ++i) {
        if (obstructions_[i].size() < 3) {
            throw MapError("obstruction " + std::to_string(i) + ": polygon needs at least 3 vertices");
        }
    }
}

std::size_t RoadMap::lane_index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
        throw MapError("unknown lane id '" + id + "'");
    }
    return it->second;
}

const GoalDef& RoadMap::goal(const std::string& id) const {
    for (const GoalDef& g : goals_) {
        if (g.id == id) {
            return g;
        }
    }
    throw MapError("unknown goal id '" + id + "'");
}

Frame RoadMap::lane_frame(const std::string& lane_id, double arclength) const {
    const Lane& l = lane(lane_id);
    if (arclength < 0.0 || arclength > l.length() + 1e-9) {
        std::ostringstream msg;
        msg << "arclength " << arclength << " outside lane '" << lane_id << "' of length " << l.length();
        throw std::out_of_range(msg.str());
    }
    return l.centerline.frame_at(arclength);
}

TurnKind RoadMap::turn_kind(std::size_t from, std::size_t to) const {
    const Lane& a = lanes_.at(from);
    const Lane& b = lanes_.at(to);
    const double h0 = a.centerline.heading_at(a.length());
    const double h1 = b.centerline.heading_at(b.length());
    const double delta = wrap_angle(h1 - h0);
    if (delta > kTurnThreshold) {
        return TurnKind::left;
    }
    if (delta < -kTurnThreshold) {
        return TurnKind::right;
    }
    return TurnKind::straight;
}

std::optional<std::size_t> RoadMap::straight_successor(std::size_t lane_idx) const {
    std::optional<std::size_t> best;
    for (const auto& s : lanes_.at(lane_idx).successors) {
        const std::size_t idx = lane_index(s);
        if (turn_kind(lane_idx, idx) == TurnKind::straight && !best) {
            best = idx;
        }
    }
    return best;
}

std::vector<std::size_t> RoadMap::turning_successors(std::size_t lane_idx, TurnKind kind) const {
    std::vector<std::size_t> out;
    for (const auto& s : lanes_.at(lane_idx).successors) {
        const std::size_t idx = lane_index(s);
        if (turn_kind(lane_idx, idx) == kind) {
            out.push_back(idx);
        }
    }
    return out;
}

std::optional<LanePosition> RoadMap::localize(Vec2 p, double heading, double lateral_slack) const {
    std::optional<LanePosition> best;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lanes_.size(); ++i) {
        const Lane& l = lanes_[i];
        if (l.kind != LaneKind::road) {
            continue;
        }
        const Projection pr = l.centerline.project(p);
        if (pr.distance > 0.5 * l.width + lateral_slack) {
            continue;
        }
        const double dh = std::abs(wrap_angle(l.centerline.heading_at(pr.arclength) - heading));
        if (dh > std::numbers::pi / 3.0) {
            continue;
        }
        // Points on a lane's terminal edge belong to its successor.
        double score = pr.distance;
        if (l.length() - pr.arclength < 0.25 && !l.successors.empty()) {
            score += 0.5;
        }
        if (score < best_score - 1e-9) {
            best_score = score;
            best = LanePosition{i, pr.arclength, pr.lateral};
        }
    }
    return best;
}

RoadMap parse_map(const std::string& text_in) {
    json root;
    try {
        root = json::parse(text_in);
    } catch (const json::parse_error& e) {
        throw MapError(std::string("map parse error: ") + e.what());
    }
    reject_unknown(root, {"lanes", "goals", "occlusion_sites", "obstructions"}, "map");
    std::vector<Lane> lanes;
    const json& jl = require(root, "lanes", "map");
    if (!jl.is_array()) {
        throw MapError("map.lanes: expected an array");
    }
    for (std::size_t i = 0; i < jl.size(); ++i) {
        lanes.push_back(parse_lane(jl[i], "lanes[" + std::to_string(i) + "]"));
    }
    std::vector<GoalDef> goals;
    if (auto it = root.find("goals"); it != root.end()) {
        for (std::size_t i = 0; i < it->size(); ++i) {
            goals.push_back(parse_goal((*it)[i], "goals[" + std::to_string(i) + "]"));
        }
    }
    std::vector<OccludedSiteDef> sites;
    if (auto it = root.find("occlusion_sites"); it != root.end()) {
        for (std::size_t i = 0; i < it->size(); ++i) {
            sites.push_back(parse_site((*it)[i], "occlusion_sites[" + std::to_string(i) + "]"));
        }
    }
    std::vector<Polygon> obstructions;
    if (auto it = root.find("obstructions"); it != root.end()) {
        for (std::size_t i = 0; i < it->size(); ++i) {
            obstructions.push_back(points((*it)[i], "obstructions[" + std::to_string(i) + "]"));
        }
    }
    return RoadMap(std::move(lanes), std::move(goals), std::move(sites), std::move(obstructions));
}

RoadMap load_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw MapError("cannot open map file '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_map(buf.str());
    } catch (const MapError& e) {
        throw MapError(path.string() + ": " + e.what());
    }
}

std::string map_to_json(const RoadMap& map) {
    json root;
    root["lanes"] = json::array();
    for (const Lane& l : map.lanes()) {
        json j;
        j["id"] = l.id;
        j["centerline"] = json::array();
        for (Vec2 p : l.centerline.points()) {
            j["centerline"].push_back(point_json(p));
        }
        j["width"] = l.width;
        j["successors"] = l.successors;
        j["left"] = l.left_neighbor ? json(*l.left_neighbor) : json(nullptr);
        j["right"] = l.right_neighbor ? json(*l.right_neighbor) : json(nullptr);
        j["speed_limit"] = l.speed_limit;
        j["kind"] = l.kind == LaneKind::road ? "road" : "crosswalk";
        root["lanes"].push_back(j);
    }
    root["goals"] = json::array();
    for (const GoalDef& g : map.goals()) {
        root["goals"].push_back(
            {{"id", g.id}, {"location", point_json(g.location)}, {"target_speed", g.target_speed}, {"radius", g.radius}});
    }
    root["occlusion_sites"] = json::array();
    for (const OccludedSiteDef& s : map.occlusion_sites()) {
        json b;
        if (const auto* cv = std::get_if<ConstantVelocity>(&s.behavior)) {
            b = {{"type", "constant_velocity"}, {"speed", cv->speed}, {"lane", cv->lane}};
        } else {
            b = {{"type", "stationary"}};
        }
        root["occlusion_sites"].push_back({{"id", s.id},
                                           {"pose", json::array({s.position.x, s.position.y, s.heading})},
                                           {"behavior", b},
                                           {"footprint", json::array({s.length, s.width})}});
    }
    root["obstructions"] = json::array();
    for (const Polygon& poly : map.obstructions()) {
        json jp = json::array();
        for (Vec2 p : poly) {
            jp.push_back(point_json(p));
        }
        root["obstructions"].push_back(jp);
    }
    return root.dump(2);
}

void save_map(const RoadMap& map, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw MapError("cannot write map file '" + path.string() + "'");
    }
    out << map_to_json(map) << '\n';
}

bool occludes(const RoadMap& map, Vec2 viewer, Vec2 target, const std::vector<Polygon>& vehicle_boxes) {
    // Shrink to the open segment so a box touching an endpoint does not count.
    const Vec2 d = target - viewer;
    const double len = d.norm();
    if (len < 1e-9) {
        return false;
    }
    const double eps = std::min(1e-6, 0.25 * len);
    const Vec2 a = viewer + d * (eps / len);
    const Vec2 b = target - d * (eps / len);
    for (const Polygon& poly : map.obstructions()) {
        if (segment_intersects_convex(a, b, poly)) {
            return true;
        }
    }
    for (const Polygon& box : vehicle_boxes) {
        if (segment_intersects_convex(a, b, box)) {
            return true;
        }
    }
    return false;
}

}  // namespace gofi
