#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gofi/geometry.hpp"
#include "gofi/polyline.hpp"

namespace gofi {

class MapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LaneKind { road, crosswalk };

struct Lane {
    std::string id;
    Polyline centerline;
    double width = 3.5;
    std::vector<std::string> successors;
    std::optional<std::string> left_neighbor;
    std::optional<std::string> right_neighbor;
    double speed_limit = 10.0;
    LaneKind kind = LaneKind::road;

    double length() const { return centerline.length(); }
};

struct GoalDef {
    std::string id;
    Vec2 location;
    double target_speed = 0.0;
    double radius = 2.0;
};

struct Stationary {};
struct ConstantVelocity {
    double speed = 0.0;
    std::string lane;
};
using SiteBehavior = std::variant<Stationary, ConstantVelocity>;

struct OccludedSiteDef {
    std::string id;
    Vec2 position;
    double heading = 0.0;
    SiteBehavior behavior;
    double length = 4.0;
    double width = 1.8;
};

enum class TurnKind { straight, left, right };

/// Where a point sits relative to a lane centerline.
struct LanePosition {
    std::size_t lane = 0;
    double arclength = 0.0;
    double lateral = 0.0;
};

/// Immutable road layout. Lanes are addressed by index internally and by id externally.
class RoadMap {
public:
    RoadMap() = default;
    RoadMap(std::vector<Lane> lanes, std::vector<GoalDef> goals, std::vector<OccludedSiteDef> sites,
            std::vector<Polygon> obstructions);

    const std::vector<Lane>& lanes() const { return lanes_; }
    const std::vector<GoalDef>& goals() const { return goals_; }
    const std::vector<OccludedSiteDef>& occlusion_sites() const { return sites_; }
    const std::vector<Polygon>& obstructions() const { return obstructions_; }
    std::size_t site_count() const { return sites_.size(); }

    std::size_t lane_index(const std::string& id) const;
    bool has_lane(const std::string& id) const { return index_.contains(id); }
    const Lane& lane(const std::string& id) const { return lanes_[lane_index(id)]; }
    const Lane& lane(std::size_t idx) const { return lanes_.at(idx); }
    const GoalDef& goal(const std::string& id) const;

    /// Point, tangent heading and curvature on a lane centerline.
    Frame lane_frame(const std::string& lane, double arclength) const;

    TurnKind turn_kind(std::size_t from, std::size_t to) const;
    /// Successor with the smallest heading change, when it is classified straight.
    std::optional<std::size_t> straight_successor(std::size_t lane) const;
    std::vector<std::size_t> turning_successors(std::size_t lane, TurnKind kind) const;

    /// Best road lane for a pose: heading within 60 degrees and lateral offset within
    /// half the lane width plus `lateral_slack`.
    std::optional<LanePosition> localize(Vec2 p, double heading, double lateral_slack = 2.0) const;

private:
    void validate() const;

    std::vector<Lane> lanes_;
    std::vector<GoalDef> goals_;
    std::vector<OccludedSiteDef> sites_;
    std::vector<Polygon> obstructions_;
    std::map<std::string, std::size_t> index_;
};

RoadMap parse_map(const std::string& text);
RoadMap load_map(const std::filesystem::path& path);
std::string map_to_json(const RoadMap& map);
void save_map(const RoadMap& map, const std::filesystem::path& path);

/// True iff the open segment viewer->target crosses an obstruction or any supplied box.
bool occludes(const RoadMap& map, Vec2 viewer, Vec2 target, const std::vector<Polygon>& vehicle_boxes);

/// Inflation applied to vehicle bodies when they act as occluders.
inline constexpr double kOccluderInflation = 0.2;

}  // namespace gofi
