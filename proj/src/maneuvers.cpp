#include "gofi/maneuvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gofi {
namespace {

constexpr double kSample = 0.5;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Remaining lane length below which a vehicle counts as being at the lane end.
constexpr double kAtEnd = 1.0;
// Path appended past the macro end so vehicles beyond it are still seen as leads.
constexpr double kSensingExtension = 40.0;
constexpr double kCorridorMargin = 0.3;
constexpr double kConflictStandoff = 1.0;
constexpr double kHoldStandoff = 0.3;
constexpr double kLeadBuffer = 0.25;
constexpr double kStoppedSpeed = 1e-3;

struct Cursor {
    std::size_t lane = 0;
    double s = 0.0;
};

std::optional<Cursor> advance(const RoadMap& map, Cursor c, double d) {
    double s = c.s + d;
    std::size_t lane = c.lane;
    while (s > map.lane(lane).length() + 1e-9) {
        const auto next = map.straight_successor(lane);
        if (!next) {
            return std::nullopt;
        }
        s -= map.lane(lane).length();
        lane = *next;
    }
    return Cursor{lane, s};
}

Vec2 left_normal(double heading) { return {-std::sin(heading), std::cos(heading)}; }

std::vector<std::string> watch_lanes_for(const RoadMap& map, std::size_t approach, std::size_t connector) {
    const Lane& c = map.lane(connector);
    std::vector<std::size_t> excluded{approach, connector};
    for (const auto& id : map.lane(approach).successors) {
        excluded.push_back(map.lane_index(id));
    }
    for (const auto& id : c.successors) {
        excluded.push_back(map.lane_index(id));
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < map.lanes().size(); ++i) {
        if (std::find(excluded.begin(), excluded.end(), i) != excluded.end()) {
            continue;
        }
        const Lane& l = map.lane(i);
        const Polyline samples = l.centerline.resampled(1.0);
        for (const Vec2& p : samples.points()) {
            const Projection pr = c.centerline.project(p);
            if (pr.arclength <= 0.5 || pr.arclength >= c.length() - 0.5) {
                continue;
            }
            if (pr.distance < 0.5 * (c.width + l.width)) {
                out.push_back(l.id);
                break;
            }
        }
    }
    return out;
}

Maneuver follow(const RoadMap& map, Cursor from, double to_s) {
    Maneuver m;
    m.kind = ManeuverKind::follow_lane;
    m.lane = map.lane(from.lane).id;
    m.from_s = from.s;
    m.to_s = to_s;
    m.distance = to_s - from.s;
    return m;
}

// Exit macros: follow to the lane end, optionally give way, turn, then follow the exit lane.
std::optional<MacroAction> exit_macro(const std::string& name, const RoadMap& map, Cursor cur,
                                      std::size_t connector, bool give_way) {
    MacroAction macro{name, {}};
    const Lane& approach = map.lane(cur.lane);
    if (approach.length() - cur.s > 0.01) {
        macro.maneuvers.push_back(follow(map, cur, approach.length()));
    }
    if (give_way) {
        Maneuver g;
        g.kind = ManeuverKind::give_way;
        g.lane = approach.id;
        g.from_s = g.to_s = approach.length();
        g.watch_lanes = watch_lanes_for(map, cur.lane, connector);
        macro.maneuvers.push_back(std::move(g));
    }
    const Lane& conn = map.lane(connector);
    Maneuver t;
    t.kind = ManeuverKind::turn;
    t.lane = conn.id;
    t.from_s = 0.0;
    t.to_s = conn.length();
    t.distance = conn.length();
    macro.maneuvers.push_back(std::move(t));
    if (!conn.successors.empty()) {
        const auto next = map.straight_successor(connector);
        const std::size_t exit_lane = next ? *next : map.lane_index(conn.successors.front());
        macro.maneuvers.push_back(follow(map, Cursor{exit_lane, 0.0}, map.lane(exit_lane).length()));
    }
    return macro;
}

struct Piece {
    std::size_t lane = 0;
    double s0 = 0.0;
    double s1 = 0.0;
    double sigma0 = 0.0;
};

struct Blend {
    double sigma0 = 0.0;
    double offset = 0.0;
    double length = 0.0;
    double phase = 0.0;  // smoothstep parameter at sigma0
};

// Phase at which a full-width blend has `distance` left to cover, capped so some blend remains.
double resume_phase(double distance, double width) {
    if (distance >= width) {
        return 0.0;
    }
    const double u = 0.5 - std::sin(std::asin(1.0 - 2.0 * (1.0 - distance / width)) / 3.0);
    return std::min(u, 0.75);
}

struct Span {
    ManeuverKind kind = ManeuverKind::follow_lane;
    double begin = 0.0;  // path arclength
    double end = 0.0;
    double conflict_end = 0.0;  // give_way: end of the junction crossing
    double duration = 0.0;
    std::vector<std::size_t> watch;
};

// A macro compiled into a sampled reference path with target speeds.
struct CompiledPath {
    Polyline path;
    std::vector<double> arclength;
    std::vector<double> v_target;
    std::vector<Span> spans;
    double macro_end = 0.0;
};

class RouteBuilder {
public:
    RouteBuilder(const RoadMap& map, const ManeuverParams& params) : map_(map), params_(params) {}

    // Appends a lane run, spilling over straight successors; returns the final cursor.
    Cursor append(std::size_t lane, double s0, double s1) {
        for (;;) {
            const double len = map_.lane(lane).length();
            if (s1 <= len + 1e-9) {
                push(lane, s0, std::min(s1, len));
                return Cursor{lane, std::min(s1, len)};
            }
            push(lane, s0, len);
            const auto next = map_.straight_successor(lane);
            if (!next) {
                throw ManeuverError("reference path runs off the end of lane '" + map_.lane(lane).id + "'");
            }
            s1 -= len;
            s0 = 0.0;
            lane = *next;
        }
    }

    // Extends along straight successors for up to `d` meters without failing at dead ends.
    void extend(Cursor c, double d) {
        double remaining = d;
        while (remaining > 1e-6) {
            const double len = map_.lane(c.lane).length();
            const double take = std::min(remaining, len - c.s);
            if (take > 1e-6) {
                push(c.lane, c.s, c.s + take);
                remaining -= take;
            }
            if (remaining <= 1e-6) {
                break;
            }
            const auto next = map_.straight_successor(c.lane);
            if (!next) {
                break;
            }
            c = Cursor{*next, 0.0};
        }
    }

    void blend_to_lane(std::size_t lane, double s, Vec2 actual, double length, double phase = 0.0) {
        const Frame f = map_.lane(lane).centerline.frame_at(s);
        const double offset = dot(actual - f.point, left_normal(f.heading));
        blends_.push_back(Blend{sigma_, offset, length, phase});
    }

    double sigma() const { return sigma_; }

    Vec2 point(double sigma) const {
        const Piece& pc = piece_at(sigma);
        const Lane& l = map_.lane(pc.lane);
        const double s = pc.s0 + (sigma - pc.sigma0);
        return l.centerline.point_at(s) + left_normal(l.centerline.heading_at(s)) * offset(sigma);
    }

    double speed_limit(double sigma) const { return map_.lane(piece_at(sigma).lane).speed_limit; }

    double offset(double sigma) const {
        const Blend* b = nullptr;
        for (const Blend& cand : blends_) {
            if (cand.sigma0 <= sigma + 1e-12) {
                b = &cand;
            }
        }
        if (b == nullptr) {
            return 0.0;
        }
        const double u = b->phase + (1.0 - b->phase) * (sigma - b->sigma0) / b->length;
        return b->offset * (1.0 - smoothstep(u)) / (1.0 - smoothstep(b->phase));
    }

private:
    void push(std::size_t lane, double s0, double s1) {
        pieces_.push_back(Piece{lane, s0, s1, sigma_});
        sigma_ += s1 - s0;
    }

    const Piece& piece_at(double sigma) const {
        std::size_t i = 0;
        while (i + 1 < pieces_.size() && pieces_[i + 1].sigma0 <= sigma) {
            ++i;
        }
        return pieces_.at(i);
    }

    const RoadMap& map_;
    const ManeuverParams& params_;
    std::vector<Piece> pieces_;
    std::vector<Blend> blends_;
    double sigma_ = 0.0;
};

double three_point_curvature(Vec2 a, Vec2 b, Vec2 c) {
    const double denom = distance(a, b) * distance(b, c) * distance(c, a);
    if (denom < 1e-12) {
        return 0.0;
    }
    return 2.0 * cross(b - a, c - a) / denom;
}

double curvature_cap(double limit, double curvature, double a_lat) {
    const double k = std::abs(curvature);
    return k > 1e-9 ? std::min(limit, std::sqrt(a_lat / k)) : limit;
}

// Backward pass limiting deceleration between consecutive samples.
void braking_envelope(const std::vector<double>& s, std::vector<double>& v, double decel) {
    for (std::size_t i = v.size(); i-- > 1;) {
        const double ds = s[i] - s[i - 1];
        v[i - 1] = std::min(v[i - 1], std::sqrt(v[i] * v[i] + 2.0 * decel * ds));
    }
}

CompiledPath compile(const MacroAction& macro, const VehicleState& start, const RoadMap& map,
                     const ManeuverParams& params) {
    RouteBuilder rb(map, params);
    struct SigmaSpan {
        ManeuverKind kind;
        double begin;
        double end;
        double duration;
        std::vector<std::size_t> watch;
    };
    std::vector<SigmaSpan> spans;
    Cursor cur{};
    bool started = false;
    for (std::size_t mi = 0; mi < macro.maneuvers.size(); ++mi) {
        const Maneuver& m = macro.maneuvers[mi];
        if (!map.has_lane(m.lane)) {
            throw ManeuverError("maneuver references missing lane '" + m.lane + "'");
        }
        const std::size_t lane = map.lane_index(m.lane);
        const double begin = rb.sigma();
        switch (m.kind) {
            case ManeuverKind::follow_lane:
            case ManeuverKind::turn:
            case ManeuverKind::stop: {
                if (!started) {
                    rb.blend_to_lane(lane, m.from_s, start.position, params.lane_change_length);
                }
                cur = rb.append(lane, m.from_s, m.to_s);
                break;
            }
            case ManeuverKind::lane_change: {
                const Vec2 here = started ? rb.point(rb.sigma()) : start.position;
                const double left = map.lane(lane).centerline.project(here).distance;
                rb.blend_to_lane(lane, m.from_s, here, m.to_s - m.from_s, resume_phase(left, map.lane(lane).width));
                cur = rb.append(lane, m.from_s, m.to_s);
                break;
            }
            case ManeuverKind::give_way:
                break;
        }
        started = started || m.kind != ManeuverKind::give_way;
        SigmaSpan sp{m.kind, begin, rb.sigma(), m.duration, {}};
        if (m.kind == ManeuverKind::give_way) {
            for (const auto& id : m.watch_lanes) {
                if (!map.has_lane(id)) {
                    throw ManeuverError("give_way watches missing lane '" + id + "'");
                }
                sp.watch.push_back(map.lane_index(id));
            }
            if (mi + 1 < macro.maneuvers.size()) {
                const Maneuver& next = macro.maneuvers[mi + 1];
                sp.end = begin + (next.to_s - next.from_s);
            }
        }
        spans.push_back(std::move(sp));
    }
    if (!started) {
        throw ManeuverError("macro '" + macro.name + "' has no path-bearing maneuver");
    }
    const double macro_sigma = rb.sigma();
    rb.extend(cur, kSensingExtension);
    const double total = rb.sigma();

    std::vector<double> sigmas;
    std::vector<Vec2> pts;
    std::vector<double> limits;
    const auto n = static_cast<std::size_t>(std::floor(total / kSample));
    for (std::size_t i = 0; i <= n + 1; ++i) {
        const double sg = std::min(static_cast<double>(i) * kSample, total);
        const Vec2 p = rb.point(sg);
        if (!pts.empty() && distance(p, pts.back()) < 1e-6) {
            continue;
        }
        sigmas.push_back(sg);
        pts.push_back(p);
        limits.push_back(rb.speed_limit(sg));
    }
    pts.front() = start.position;
    if (pts.size() < 2) {
        pts.push_back(start.position + unit_from_heading(start.heading) * 1e-3);
        sigmas.push_back(1e-3);
        limits.push_back(limits.front());
    }

    CompiledPath out;
    out.arclength.resize(pts.size());
    out.arclength[0] = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        out.arclength[i] = out.arclength[i - 1] + distance(pts[i - 1], pts[i]);
    }
    out.v_target.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double k = 0.0;
        if (pts.size() >= 3) {
            const std::size_t mid = std::clamp<std::size_t>(i, 1, pts.size() - 2);
            k = three_point_curvature(pts[mid - 1], pts[mid], pts[mid + 1]);
        }
        out.v_target[i] = curvature_cap(limits[i], k, params.lateral_accel_max);
    }
    braking_envelope(out.arclength, out.v_target, params.comfort_decel);

    auto to_s = [&](double sg) {
        auto it = std::lower_bound(sigmas.begin(), sigmas.end(), sg);
        if (it == sigmas.end()) {
            return out.arclength.back();
        }
        const auto j = static_cast<std::size_t>(it - sigmas.begin());
        if (j == 0) {
            return 0.0;
        }
        const double u = (sg - sigmas[j - 1]) / (sigmas[j] - sigmas[j - 1]);
        return out.arclength[j - 1] + u * (out.arclength[j] - out.arclength[j - 1]);
    };
    for (const SigmaSpan& sp : spans) {
        Span s;
        s.kind = sp.kind;
        s.begin = to_s(sp.begin);
        s.end = sp.kind == ManeuverKind::give_way ? s.begin : to_s(sp.end);
        s.conflict_end = to_s(sp.end);
        s.duration = sp.duration;
        s.watch = sp.watch;
        out.spans.push_back(std::move(s));
    }
    out.macro_end = to_s(macro_sigma);
    out.path = Polyline(std::move(pts));
    return out;
}

// Position of another agent relative to the ego reference path, evaluated lazily per sample.
class Track {
public:
    Track(const OtherAgent& agent, const CompiledPath& cp, double t0, const ManeuverParams& params)
        : agent_(agent), cp_(cp), params_(params) {
        const Trajectory& tr = agent.trajectory;
        offset_ = static_cast<long long>(std::llround((t0 - tr.start_time) / tr.dt));
        cache_.resize(tr.states.size());
        known_.assign(tr.states.size(), 0);
        const auto& pts = cp.path.points();
        lo_ = hi_ = pts.front();
        for (const Vec2& p : pts) {
            lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y)};
            hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y)};
        }
        const double pad = 0.5 * params.body.width + 0.5 * std::hypot(agent.box.length, agent.box.width) + 1.0;
        lo_ = lo_ - Vec2{pad, pad};
        hi_ = hi_ + Vec2{pad, pad};
    }

    struct Sample {
        bool present = false;
        bool in_corridor = false;
        double along = 0.0;
        double half_along = 0.0;
        double speed_along = 0.0;
        std::size_t segment = 0;
    };

    std::optional<std::size_t> index(std::size_t ego_step) const {
        const long long k = static_cast<long long>(ego_step) + offset_;
        if (k < 0 || k >= static_cast<long long>(cache_.size())) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(k);
    }

    std::size_t size() const { return cache_.size(); }
    const VehicleState& state(std::size_t k) const { return agent_.trajectory.states[k]; }
    const OtherAgent& agent() const { return agent_; }

    const Sample& at(std::size_t k) {
        if (known_[k] == 0) {
            cache_[k] = evaluate(k);
            known_[k] = 1;
        }
        return cache_[k];
    }

private:
    Sample evaluate(std::size_t k) {
        Sample out;
        out.present = true;
        const VehicleState& st = agent_.trajectory.states[k];
        const Vec2 p = st.position;
        if (p.x < lo_.x || p.y < lo_.y || p.x > hi_.x || p.y > hi_.y) {
            return out;
        }
        Projection pr;
        const std::size_t segs = cp_.path.segment_count();
        if (k > 0 && known_[k - 1] != 0 && cache_[k - 1].in_corridor) {
            const std::size_t prev = cache_[k - 1].segment;
            const std::size_t first = prev > 8 ? prev - 8 : 0;
            pr = cp_.path.project(p, first, std::min(prev + 8, segs - 1));
        } else {
            pr = cp_.path.project(p);
        }
        const double dh = wrap_angle(st.heading - cp_.path.heading_at(pr.arclength));
        const double c = std::abs(std::cos(dh));
        const double s = std::abs(std::sin(dh));
        const double half_lat = 0.5 * (s * agent_.box.length + c * agent_.box.width);
        out.half_along = 0.5 * (c * agent_.box.length + s * agent_.box.width);
        out.in_corridor = pr.distance < 0.5 * params_.body.width + half_lat + kCorridorMargin;
        out.along = pr.arclength;
        out.segment = pr.segment;
        out.speed_along = std::max(0.0, st.speed * std::cos(dh));
        return out;
    }

    const OtherAgent& agent_;
    const CompiledPath& cp_;
    const ManeuverParams& params_;
    long long offset_ = 0;
    std::vector<Sample> cache_;
    std::vector<char> known_;
    Vec2 lo_;
    Vec2 hi_;
};

class Controller {
public:
    Controller(const CompiledPath& cp, const ManeuverParams& params) : cp_(cp), params_(params) {}

    double target(double s) const {
        const auto& a = cp_.arclength;
        if (s >= a.back()) {
            return cp_.v_target.back();
        }
        const auto it = std::upper_bound(a.begin(), a.end(), s);
        const auto j = static_cast<std::size_t>(it - a.begin());
        if (j == 0) {
            return cp_.v_target.front();
        }
        return std::min(cp_.v_target[j - 1], cp_.v_target[j]);
    }

    double track(double s, double v) const { return params_.speed_gain * (target(s) - v); }

    // Earliest times (arrive, clear) to cover two distances under unconstrained tracking.
    std::pair<double, double> earliest(double s, double v, double d_arrive, double d_clear, double horizon) const {
        double t = 0.0;
        double travelled = 0.0;
        double arrive = d_arrive <= 0.0 ? 0.0 : kInf;
        const double dt = kDt;
        while (travelled < d_clear && t < horizon) {
            const double a = std::min(params_.limits.a_max, std::max(0.0, track(s + travelled, v)));
            const double v2 = std::min(v + a * dt, params_.limits.v_max);
            travelled += 0.5 * (v + v2) * dt;
            v = v2;
            t += dt;
            if (arrive == kInf && travelled >= d_arrive) {
                arrive = t;
            }
        }
        return {arrive, travelled >= d_clear ? t : kInf};
    }

    // Bound that brings the vehicle to rest `gap` meters ahead while the target moves at `v_lead`.
    double stop_bound(double v, double gap, double v_lead) const {
        const double free = std::max(gap, 0.0);
        const double v_allow = std::sqrt(v_lead * v_lead + 2.0 * params_.comfort_decel * free);
        double a = (v_allow - v) / kDt;
        if (v > v_lead) {
            const double req = (v * v - v_lead * v_lead) / (2.0 * std::max(gap, 0.1));
            if (req >= 0.9 * params_.comfort_decel) {
                a = std::min(a, -req);
            }
        }
        return a;
    }

    double acc(double v, double gap) const {
        const double tg = params_.time_headway;
        return params_.acc_gain * (gap - tg * v - params_.standstill_gap) / (tg * tg);
    }

private:
    const CompiledPath& cp_;
    const ManeuverParams& params_;
};

Vec2 path_point(const Polyline& path, double s) {
    if (s <= path.length()) {
        return path.point_at(s);
    }
    return path.points().back() + unit_from_heading(path.heading_at(path.length())) * (s - path.length());
}

}  // namespace

double smoothstep(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

const std::vector<std::string>& macro_library() {
    static const std::vector<std::string> names{"change_left", "change_right", "continue_lane", "exit_left",
                                                "exit_right", "follow_lane_to_exit", "stop_and_wait"};
    return names;
}

std::optional<MacroAction> instantiate_macro(std::string_view name, const VehicleState& state, const RoadMap& map,
                                             const ManeuverParams& params) {
    const auto loc = map.localize(state.position, state.heading);
    if (!loc) {
        return std::nullopt;
    }
    const Cursor cur{loc->lane, loc->arclength};
    const Lane& lane = map.lane(cur.lane);
    const double remaining = lane.length() - cur.s;
    const std::string n(name);

    if (n == "continue_lane") {
        MacroAction macro{n, {}};
        if (remaining >= kAtEnd) {
            macro.maneuvers.push_back(follow(map, cur, lane.length()));
            return macro;
        }
        const auto next = map.straight_successor(cur.lane);
        if (!next) {
            return std::nullopt;
        }
        macro.maneuvers.push_back(follow(map, cur, lane.length() + map.lane(*next).length()));
        return macro;
    }
    if (n == "change_left" || n == "change_right") {
        const auto& neighbor = n == "change_left" ? lane.left_neighbor : lane.right_neighbor;
        if (!neighbor || !map.has_lane(*neighbor)) {
            return std::nullopt;
        }
        const std::size_t target = map.lane_index(*neighbor);
        if (map.lane(target).kind != LaneKind::road) {
            return std::nullopt;
        }
        const Projection pr = map.lane(target).centerline.project(state.position);
        // A change already under way resumes its blend where the remaining offset puts it.
        const double length = params.lane_change_length * (1.0 - resume_phase(pr.distance, map.lane(target).width));
        const auto after = advance(map, Cursor{target, pr.arclength}, length);
        if (!after) {
            return std::nullopt;
        }
        MacroAction macro{n, {}};
        Maneuver lc;
        lc.kind = ManeuverKind::lane_change;
        lc.direction = n == "change_left" ? Side::left : Side::right;
        lc.lane = *neighbor;
        lc.from_s = pr.arclength;
        lc.to_s = pr.arclength + length;
        lc.distance = length;
        macro.maneuvers.push_back(std::move(lc));
        const double left = map.lane(after->lane).length() - after->s;
        if (left >= kAtEnd) {
            macro.maneuvers.push_back(follow(map, *after, map.lane(after->lane).length()));
        }
        return macro;
    }
    if (n == "exit_left" || n == "exit_right") {
        const TurnKind kind = n == "exit_left" ? TurnKind::left : TurnKind::right;
        auto lowest_id = [&](const std::vector<std::size_t>& exits) {
            std::size_t best = exits.front();
            for (std::size_t e : exits) {
                if (map.lane(e).id < map.lane(best).id) {
                    best = e;
                }
            }
            return best;
        };
        const auto exits = map.turning_successors(cur.lane, kind);
        if (!exits.empty()) {
            return exit_macro(n, map, cur, lowest_id(exits), true);
        }
        if (cur.s >= kAtEnd) {
            return std::nullopt;
        }
        // Just past the end of a lane: its exits are still open from where the vehicle stands.
        for (std::size_t i = 0; i < map.lanes().size(); ++i) {
            if (map.straight_successor(i) != cur.lane) {
                continue;
            }
            const auto behind = map.turning_successors(i, kind);
            if (behind.empty()) {
                continue;
            }
            const std::size_t conn = lowest_id(behind);
            auto macro = exit_macro(n, map, Cursor{i, map.lane(i).length()}, conn, false);
            macro->maneuvers.front().from_s = map.lane(conn).centerline.project(state.position).arclength;
            macro->maneuvers.front().distance = macro->maneuvers.front().to_s - macro->maneuvers.front().from_s;
            return macro;
        }
        return std::nullopt;
    }
    if (n == "follow_lane_to_exit") {
        auto exits = map.turning_successors(cur.lane, TurnKind::left);
        const auto rights = map.turning_successors(cur.lane, TurnKind::right);
        exits.insert(exits.end(), rights.begin(), rights.end());
        if (exits.size() != 1) {
            return std::nullopt;
        }
        return exit_macro(n, map, cur, exits.front(), false);
    }
    if (n == "stop_and_wait") {
        const double brake = state.speed * state.speed / (2.0 * params.stop_decel) + 0.5;
        double reach = brake;
        if (!advance(map, cur, brake)) {
            reach = remaining;
            Cursor c = cur;
            while (const auto next = map.straight_successor(c.lane)) {
                c = Cursor{*next, 0.0};
                reach += map.lane(c.lane).length();
            }
            if (reach < 0.01) {
                return std::nullopt;
            }
        }
        Maneuver st;
        st.kind = ManeuverKind::stop;
        st.lane = lane.id;
        st.from_s = cur.s;
        st.to_s = cur.s + reach;
        st.duration = params.stop_duration;
        return MacroAction{n, {std::move(st)}};
    }
    return std::nullopt;
}

bool applicable(const MacroAction& macro, const VehicleState& state, const RoadMap& map, const ManeuverParams& params) {
    if (macro.maneuvers.empty()) {
        return false;
    }
    const auto fresh = instantiate_macro(macro.name, state, map, params);
    if (fresh) {
        return true;
    }
    // Hand-built sequences: check that each maneuver's lane binding resolves and chains.
    const auto loc = map.localize(state.position, state.heading);
    if (!loc) {
        return false;
    }
    for (const Maneuver& m : macro.maneuvers) {
        if (!map.has_lane(m.lane)) {
            return false;
        }
        for (const auto& w : m.watch_lanes) {
            if (!map.has_lane(w)) {
                return false;
            }
        }
        if (m.kind == ManeuverKind::lane_change) {
            const Lane& from = map.lane(loc->lane);
            const auto& neighbor = m.direction == Side::left ? from.left_neighbor : from.right_neighbor;
            if (!neighbor || *neighbor != m.lane) {
                return false;
            }
        }
    }
    try {
        compile(macro, state, map, params);
    } catch (const ManeuverError&) {
        return false;
    }
    return true;
}

VelocityProfile velocity_profile(const Maneuver& maneuver, const RoadMap& map, const ManeuverParams& params) {
    if (!map.has_lane(maneuver.lane)) {
        throw ManeuverError("velocity_profile: unknown lane '" + maneuver.lane + "'");
    }
    VelocityProfile out;
    if (maneuver.kind == ManeuverKind::give_way) {
        out.samples.emplace_back(0.0, 0.0);
        return out;
    }
    const double length = maneuver.to_s - maneuver.from_s;
    if (!(length > 0.0)) {
        throw ManeuverError("velocity_profile: empty maneuver span on lane '" + maneuver.lane + "'");
    }
    std::vector<double> s;
    std::vector<double> v;
    const auto n = static_cast<std::size_t>(std::ceil(length / kSample - 1e-9));
    for (std::size_t i = 0; i <= n; ++i) {
        const double d = std::min(static_cast<double>(i) * kSample, length);
        const auto c = advance(map, Cursor{map.lane_index(maneuver.lane), maneuver.from_s}, d);
        if (!c) {
            throw ManeuverError("velocity_profile: lane '" + maneuver.lane + "' ends before the maneuver does");
        }
        const Lane& l = map.lane(c->lane);
        s.push_back(d);
        v.push_back(curvature_cap(l.speed_limit, l.centerline.curvature_at(c->s, kSample), params.lateral_accel_max));
    }
    if (maneuver.kind == ManeuverKind::stop) {
        v.back() = 0.0;
    }
    braking_envelope(s, v, params.comfort_decel);
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.samples.emplace_back(s[i], v[i]);
    }
    return out;
}

RolloutResult rollout(const MacroAction& macro, const VehicleState& start, const RoadMap& map,
                      const RolloutOptions& options) {
    const ManeuverParams& p = options.params;
    const CompiledPath cp = compile(macro, start, map, p);
    const Controller ctl(cp, p);
    std::vector<Track> tracks;
    tracks.reserve(options.others.size());
    for (const OtherAgent& o : options.others) {
        tracks.emplace_back(o, cp, options.start_time, p);
    }

    RolloutResult result;
    Trajectory& traj = result.trajectory;
    traj.vehicle_id = options.vehicle_id;
    traj.dt = kDt;
    traj.start_time = options.start_time;
    traj.states.push_back(start);

    const double half_len = 0.5 * p.body.length;
    const auto horizon_steps = static_cast<std::size_t>(std::llround(p.conflict_horizon / kDt));
    const auto max_steps = static_cast<std::size_t>(std::llround(p.max_duration / kDt));
    double s = 0.0;
    double v = start.speed;
    std::size_t span_idx = 0;
    double waited = 0.0;

    auto span_done = [&](const Span& sp) {
        switch (sp.kind) {
            case ManeuverKind::give_way:
                return s + half_len >= sp.begin;
            case ManeuverKind::stop:
                return waited >= sp.duration - 1e-9;
            default:
                return s >= sp.end - 1e-6;
        }
    };

    for (std::size_t step_i = 0;; ++step_i) {
        while (span_idx < cp.spans.size() && span_done(cp.spans[span_idx])) {
            ++span_idx;
        }
        if (span_idx >= cp.spans.size()) {
            break;
        }
        if (step_i >= max_steps) {
            result.status = RolloutStatus::timed_out;
            return result;
        }
        const Span& active = cp.spans[span_idx];
        double a = ctl.track(s, v);

        for (Track& tr : tracks) {
            const auto k0 = tr.index(step_i);
            if (k0) {
                const auto& cur = tr.at(*k0);
                if (cur.in_corridor && cur.along > s) {
                    const double gap = cur.along - s - half_len - cur.half_along;
                    a = std::min(a, ctl.acc(v, gap));
                    a = std::min(a, ctl.stop_bound(v, gap - p.standstill_gap - kLeadBuffer, cur.speed_along));
                    continue;
                }
            }
            // Future entry into the corridor ahead: yield unless the ego clearly passes first or after.
            std::optional<std::size_t> entry;
            std::size_t exit_k = 0;
            double s_lo = kInf;
            double s_hi = -kInf;
            double half = 0.0;
            for (std::size_t h = 1; h <= horizon_steps; ++h) {
                const auto k = tr.index(step_i + h);
                if (!k) {
                    if (entry) {
                        break;
                    }
                    continue;
                }
                const auto& smp = tr.at(*k);
                if (smp.in_corridor && smp.along > s) {
                    if (!entry) {
                        entry = h;
                    }
                    exit_k = h;
                    s_lo = std::min(s_lo, smp.along);
                    s_hi = std::max(s_hi, smp.along);
                    half = std::max(half, smp.half_along);
                } else if (entry) {
                    break;
                }
            }
            if (!entry) {
                continue;
            }
            const double gap = s_lo - half - s - half_len;
            if (gap <= 0.0) {
                continue;
            }
            const double tau_in = static_cast<double>(*entry) * kDt;
            const double tau_out = static_cast<double>(exit_k) * kDt;
            const auto [t_arrive, t_clear] =
                ctl.earliest(s, v, gap, s_hi + half + half_len - s, p.conflict_horizon + p.conflict_margin + 1.0);
            if (t_clear + p.conflict_margin <= tau_in) {
                continue;
            }
            if (t_arrive >= tau_out + p.conflict_margin) {
                continue;
            }
            const double room = gap - kConflictStandoff;
            if (v * v / (2.0 * -p.limits.a_min) > room + 0.5) {
                continue;
            }
            a = std::min(a, ctl.stop_bound(v, room, 0.0));
        }

        // Give way: hold at the entry line until every watched agent is far enough from the crossing.
        for (std::size_t si = span_idx; si < cp.spans.size(); ++si) {
            const Span& gw = cp.spans[si];
            if (gw.kind != ManeuverKind::give_way || s + half_len >= gw.begin) {
                continue;
            }
            double t_cross = ctl.earliest(s, v, 0.0, gw.conflict_end + half_len - s, 30.0).second;
            bool clear = true;
            for (Track& tr : tracks) {
                const auto k0 = tr.index(step_i);
                if (!k0) {
                    continue;
                }
                const Vec2 pos = tr.state(*k0).position;
                bool watched = false;
                for (std::size_t wl : gw.watch) {
                    const Lane& l = map.lane(wl);
                    if (l.centerline.project(pos).distance <= 0.5 * l.width + 0.5) {
                        watched = true;
                        break;
                    }
                }
                auto in_conflict = [&](std::size_t k) {
                    const auto& smp = tr.at(k);
                    return smp.in_corridor && smp.along >= gw.begin - smp.half_along &&
                           smp.along <= gw.conflict_end + smp.half_along;
                };
                if (!watched && !in_conflict(*k0)) {
                    continue;
                }
                double tau = kInf;
                const auto lookahead = static_cast<std::size_t>(std::llround((t_cross + p.give_way_margin) / kDt)) + 1;
                for (std::size_t h = 0; h <= lookahead; ++h) {
                    const auto k = tr.index(step_i + h);
                    if (!k) {
                        break;
                    }
                    if (in_conflict(*k)) {
                        tau = static_cast<double>(h) * kDt;
                        break;
                    }
                }
                if (tau <= t_cross + p.give_way_margin) {
                    clear = false;
                    break;
                }
            }
            if (!clear) {
                const double room = gw.begin - s - half_len - kHoldStandoff;
                if (v * v / (2.0 * -p.limits.a_min) <= room + 0.5) {
                    a = std::min(a, ctl.stop_bound(v, room, 0.0));
                }
            }
            break;
        }

        if (active.kind == ManeuverKind::stop) {
            a = std::min(a, std::max(-p.stop_decel, -v / kDt));
        }

        const double v_next = advance_speed(v, a, kDt, p.limits);
        VehicleState next;
        next.speed = v_next;
        next.acceleration = (v_next - v) / kDt;
        s += 0.5 * (v + v_next) * kDt;
        v = v_next;
        next.position = path_point(cp.path, s);
        next.heading = cp.path.heading_at(s);
        traj.states.push_back(next);
        if (active.kind == ManeuverKind::stop && v <= kStoppedSpeed) {
            waited += kDt;
        }

        const double t = options.start_time + kDt * static_cast<double>(traj.states.size() - 1);
        auto hit = [&](std::span<const OtherAgent> agents) {
            for (const OtherAgent& o : agents) {
                const auto k = o.trajectory.index_at(t);
                if (k && collides(next, p.body, o.trajectory.states[*k], o.box)) {
                    return true;
                }
            }
            return false;
        };
        if (options.stop_on_collision && (hit(options.others) || hit(options.hazards))) {
            result.status = RolloutStatus::collision;
            result.collision_index = traj.states.size() - 1;
            return result;
        }
        if (options.goal != nullptr && distance(next.position, options.goal->location) <= options.goal->radius) {
            result.status = RolloutStatus::goal_reached;
            return result;
        }
        if (options.step_limit > 0 && traj.states.size() > options.step_limit) {
            break;
        }
    }
    result.status = RolloutStatus::completed;
    return result;
}

Trajectory expand(const MacroAction& macro, const VehicleState& start, const RoadMap& map,
                  std::span<const OtherAgent> others, const ManeuverParams& params) {
    if (!applicable(macro, start, map, params)) {
        throw ManeuverError("macro '" + macro.name + "' is not applicable at the start state");
    }
    RolloutOptions opts;
    opts.others = others;
    opts.params = params;
    RolloutResult r = rollout(macro, start, map, opts);
    if (r.status == RolloutStatus::timed_out) {
        throw ManeuverError("macro '" + macro.name + "' did not terminate within " +
                            std::to_string(static_cast<int>(params.max_duration)) + " s");
    }
    return std::move(r.trajectory);
}

}  // namespace gofi
