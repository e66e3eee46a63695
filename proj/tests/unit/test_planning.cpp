#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "coopsim/planning.hpp"
#include "coopsim/rng.hpp"

using namespace coopsim;
using namespace coopsim::planning;
using perception::BoundingBox2D;

namespace {

constexpr double kInfD = std::numeric_limits<double>::infinity();

// Textbook O(n^2) Dijkstra, kept deliberately different from the routing
// implementation under test.
std::vector<double> dijkstra(const LaneGraph& g, int start) {
    const std::size_t n = g.nodes.size();
    std::vector<double> dist(n, kInfD);
    std::vector<bool> done(n, false);
    dist[static_cast<std::size_t>(start)] = 0.0;
    for (;;) {
        int v = -1;
        double best = kInfD;
        for (std::size_t i = 0; i < n; ++i) {
            if (!done[i] && dist[i] < best) {
                best = dist[i];
                v = static_cast<int>(i);
            }
        }
        if (v < 0) break;
        done[static_cast<std::size_t>(v)] = true;
        for (const auto& e : g.edges) {
            if (e.from != v) continue;
            const double cand = dist[static_cast<std::size_t>(v)] + e.length;
            if (cand < dist[static_cast<std::size_t>(e.to)])
                dist[static_cast<std::size_t>(e.to)] = cand;
        }
    }
    return dist;
}

// Random digraph with Euclidean edge lengths (the lane-graph invariant).
LaneGraph random_graph(RngStream& rng) {
    LaneGraph g;
    const int n = 2 + static_cast<int>(rng.uniform_index(49));  // 2..50 nodes
    for (int i = 0; i < n; ++i) g.nodes.push_back({rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)});
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            if (rng.uniform01() < 0.08) {
                g.edges.push_back({a, b, distance(g.nodes[static_cast<std::size_t>(a)],
                                                  g.nodes[static_cast<std::size_t>(b)])});
            }
        }
    }
    return g;
}

std::vector<Vec2> straight_path(double y = 0.0, double length = 200.0) {
    return {{0.0, y}, {length, y}};
}

BoundingBox2D car_at(double x, double y, double yaw = 0.0) {
    return {{x, y}, {2.4, 1.0}, yaw};
}

AgentState ego_at(double x, double y, double speed = 8.0, double yaw = 0.0) {
    AgentState a;
    a.pose = {x, y, yaw};
    a.speed = speed;
    return a;
}

PlanContext highway_ctx(bool with_adjacent = false) {
    PlanContext ctx;
    ctx.path = straight_path(0.0);
    if (with_adjacent) ctx.adjacent = straight_path(3.5);
    return ctx;
}

Behavior plan(const AgentState& ego, const std::vector<BoundingBox2D>& boxes, PlannerState& mem,
              const PlanContext& ctx, double now = 0.0,
              const std::optional<perception::ControlObservation>& control = std::nullopt,
              const std::vector<TriggerZone>& zones = {}) {
    const BehaviorConfig cfg;
    return plan_behavior(ego, boxes, control, zones, now, ctx, cfg, mem);
}

}  // namespace

TEST_CASE("a route to the current node is a single point") {
    LaneGraph g;
    g.nodes = {{0.0, 0.0}, {10.0, 0.0}};
    g.edges = {{0, 1, 10.0}};
    const Route r = plan_global(g, 1, 1);
    CHECK(r.nodes == std::vector<int>{1});
    CHECK(r.length() == 0.0);
}

TEST_CASE("routing picks the cheaper two-hop over an expensive direct edge") {
    LaneGraph g;
    g.nodes = {{0.0, 0.0}, {5.0, 0.0}, {2.0, 1.5}};
    g.edges = {{0, 1, 10.0},  // a winding direct road, longer than the crow flies
               {0, 2, 4.0},
               {2, 1, 4.0}};
    const Route r = plan_global(g, 0, 1);
    CHECK(r.nodes == std::vector<int>{0, 2, 1});
    // Graph cost of the chosen route: 4 + 4 beats the direct 10.
    double cost = 0.0;
    for (std::size_t i = 1; i < r.nodes.size(); ++i) {
        for (const auto& e : g.edges)
            if (e.from == r.nodes[i - 1] && e.to == r.nodes[i]) cost += e.length;
    }
    CHECK(cost == doctest::Approx(8.0));
}

TEST_CASE("routing honors edge direction") {
    LaneGraph g;
    g.nodes = {{0.0, 0.0}, {10.0, 0.0}};
    g.edges = {{0, 1, 10.0}};
    CHECK_THROWS_AS(plan_global(g, 1, 0), NoRouteError);
}

TEST_CASE("routing rejects endpoints outside the graph") {
    LaneGraph g;
    g.nodes = {{0.0, 0.0}};
    CHECK_THROWS_AS(plan_global(g, 0, 5), DomainError);
    CHECK_THROWS_AS(plan_global(g, -1, 0), DomainError);
}

TEST_CASE("routing matches Dijkstra on random graphs") {
    RngStream rng(31, StreamPurpose::Test, 0);
    int reachable = 0, unreachable = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const LaneGraph g = random_graph(rng);
        const int n = static_cast<int>(g.nodes.size());
        const int start = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n)));
        const int goal = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(n)));
        const auto dist = dijkstra(g, start);
        if (dist[static_cast<std::size_t>(goal)] == kInfD) {
            CHECK_THROWS_AS(plan_global(g, start, goal), NoRouteError);
            ++unreachable;
        } else {
            const Route r = plan_global(g, start, goal);
            REQUIRE_FALSE(r.nodes.empty());
            CHECK(r.nodes.front() == start);
            CHECK(r.nodes.back() == goal);
            CHECK(r.length() ==
                  doctest::Approx(dist[static_cast<std::size_t>(goal)]).epsilon(1e-9));
            ++reachable;
        }
    }
    // both branches must actually have been exercised
    CHECK(reachable > 50);
    CHECK(unreachable > 5);
}

TEST_CASE("a polyline's first entry into a rectangle is found by arc") {
    const auto path = straight_path();
    CHECK(polyline_entry_arc(path, {{50.0, -2.0}, {70.0, 2.0}}) == doctest::Approx(50.0));
    CHECK(polyline_entry_arc(path, {{-10.0, 5.0}, {300.0, 8.0}}) == kInfD);
}

TEST_CASE("an empty scene cruises") {
    PlannerState mem;
    const Behavior b = plan(ego_at(20.0, 0.0), {}, mem, highway_ctx());
    CHECK(b.kind == BehaviorKind::LaneFollow);
}

TEST_CASE("a box close ahead forces an emergency brake") {
    PlannerState mem;
    // center 10 m ahead; bumper gap 10 - 2.4 - 2.4 = 5.2 < 6
    const Behavior b = plan(ego_at(20.0, 0.0), {car_at(30.0, 0.0)}, mem, highway_ctx());
    CHECK(b.kind == BehaviorKind::EmergencyBrake);
}

TEST_CASE("oncoming traffic in the opposite lane is not an emergency") {
    PlannerState mem;
    const Behavior b = plan(ego_at(20.0, 0.0), {car_at(30.0, 3.5, kPi)}, mem, highway_ctx());
    CHECK(b.kind != BehaviorKind::EmergencyBrake);
}

TEST_CASE("a car one lane over but within the corridor width still matters") {
    PlannerState mem;
    // |lateral| = 1.0 <= corridor half width 1.75: treated as in-lane
    const Behavior b = plan(ego_at(20.0, 0.0), {car_at(30.0, 1.0)}, mem, highway_ctx());
    CHECK(b.kind == BehaviorKind::EmergencyBrake);
}

TEST_CASE("a lead inside follow range is followed, with its speed estimated") {
    PlannerState mem;
    const auto ctx = highway_ctx();
    // First sight: unmatched boxes borrow the ego speed.
    Behavior b = plan(ego_at(20.0, 0.0), {car_at(39.8, 0.0)}, mem, ctx, 0.0);
    CHECK(b.kind == BehaviorKind::CarFollow);
    CHECK(b.gap == doctest::Approx(15.0).epsilon(1e-9));
    CHECK(b.lead_speed == doctest::Approx(8.0));
    // One tick later the displacement pins the lead speed: 0.2 m / 0.05 s.
    b = plan(ego_at(20.0, 0.0), {car_at(40.0, 0.0)}, mem, ctx, 0.05);
    CHECK(b.kind == BehaviorKind::CarFollow);
    CHECK(b.lead_speed == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("a lead beyond follow range is ignored") {
    PlannerState mem;
    const Behavior b = plan(ego_at(20.0, 0.0), {car_at(60.0, 0.0)}, mem, highway_ctx());
    // bumper gap 35.2 > 25
    CHECK(b.kind == BehaviorKind::LaneFollow);
}

TEST_CASE("a slow lead with a free adjacent lane starts an overtake") {
    PlannerState mem;
    const auto ctx = highway_ctx(true);
    plan(ego_at(20.0, 0.0), {car_at(39.9, 0.0)}, mem, ctx, 0.0);
    const Behavior b = plan(ego_at(20.4, 0.0), {car_at(40.0, 0.0)}, mem, ctx, 0.05);
    // lead speed 2 m/s < v_des - 2, gap under 20: shift out
    CHECK(b.kind == BehaviorKind::Overtake);
    CHECK(b.phase == OvertakePhase::ShiftOut);
}

TEST_CASE("an occupied adjacent lane suppresses the overtake") {
    PlannerState mem;
    const auto ctx = highway_ctx(true);
    plan(ego_at(20.0, 0.0), {car_at(39.9, 0.0), car_at(30.0, 3.5)}, mem, ctx, 0.0);
    const Behavior b =
        plan(ego_at(20.4, 0.0), {car_at(40.0, 0.0), car_at(30.0, 3.5)}, mem, ctx, 0.05);
    CHECK(b.kind == BehaviorKind::CarFollow);
}

TEST_CASE("a fast lead is followed rather than overtaken") {
    PlannerState mem;
    const auto ctx = highway_ctx(true);
    plan(ego_at(20.0, 0.0), {car_at(39.65, 0.0)}, mem, ctx, 0.0);
    const Behavior b = plan(ego_at(20.4, 0.0), {car_at(40.0, 0.0)}, mem, ctx, 0.05);
    // displacement 0.35 m / 0.05 s = 7 m/s > v_des - dv_overtake
    CHECK(b.kind == BehaviorKind::CarFollow);
    CHECK(b.lead_speed == doctest::Approx(7.0).epsilon(1e-9));
}

TEST_CASE("the pass phase needs several consecutive clear ticks to finish") {
    const auto ctx = highway_ctx(true);
    PlannerState mem;
    mem.phase = OvertakePhase::Pass;
    const AgentState ego = ego_at(50.0, 3.5);  // riding the adjacent lane

    // Four clear ticks: still passing.
    for (int i = 0; i < 4; ++i) {
        const Behavior b = plan(ego, {}, mem, ctx, 0.05 * i);
        CHECK(b.kind == BehaviorKind::Overtake);
        CHECK(b.phase == OvertakePhase::Pass);
    }
    // The fifth consecutive clear tick completes the pass.
    const Behavior done = plan(ego, {}, mem, ctx, 0.25);
    CHECK(done.kind == BehaviorKind::Overtake);
    CHECK(done.phase == OvertakePhase::ShiftIn);
}

TEST_CASE("a reappearing car in the original lane resets the merge countdown") {
    const auto ctx = highway_ctx(true);
    PlannerState mem;
    mem.phase = OvertakePhase::Pass;
    const AgentState ego = ego_at(50.0, 3.5);

    plan(ego, {}, mem, ctx, 0.00);
    plan(ego, {}, mem, ctx, 0.05);
    plan(ego, {}, mem, ctx, 0.10);
    // Tick 4: the passed car is still alongside in the original lane.
    const Behavior blocked = plan(ego, {car_at(48.0, 0.0)}, mem, ctx, 0.15);
    CHECK(blocked.phase == OvertakePhase::Pass);
    CHECK(mem.pass_clear_streak == 0);
    // Two more clear ticks are not enough; the count restarted.
    plan(ego, {}, mem, ctx, 0.20);
    const Behavior still = plan(ego, {}, mem, ctx, 0.25);
    CHECK(still.phase == OvertakePhase::Pass);
}

TEST_CASE("a car far enough behind in the original lane does not hold the pass open") {
    const auto ctx = highway_ctx(true);
    PlannerState mem;
    mem.phase = OvertakePhase::Pass;
    const AgentState ego = ego_at(50.0, 3.5);
    for (int i = 0; i < 4; ++i) plan(ego, {car_at(40.0, 0.0)}, mem, ctx, 0.05 * i);
    // 10 m behind is beyond the 6 m merge-back window
    const Behavior b = plan(ego, {car_at(40.0, 0.0)}, mem, ctx, 0.20);
    CHECK(b.phase == OvertakePhase::ShiftIn);
}

TEST_CASE("during the pass, emergencies are judged on the lane being driven") {
    const auto ctx = highway_ctx(true);
    PlannerState mem;
    mem.phase = OvertakePhase::Pass;
    const AgentState ego = ego_at(50.0, 3.5);

    // A close car in the original lane is not in the way while passing...
    PlannerState m1 = mem;
    const Behavior side = plan(ego, {car_at(55.0, 0.0)}, m1, ctx);
    CHECK(side.kind != BehaviorKind::EmergencyBrake);

    // ...but one dead ahead in the adjacent lane is.
    PlannerState m2 = mem;
    const Behavior ahead = plan(ego, {car_at(60.0, 3.5)}, m2, ctx);
    CHECK(ahead.kind == BehaviorKind::EmergencyBrake);
}

TEST_CASE("the shift back in ends once the route centerline is recaptured") {
    const auto ctx = highway_ctx(true);
    PlannerState mem;
    mem.phase = OvertakePhase::ShiftIn;
    const Behavior merging = plan(ego_at(80.0, 1.2), {}, mem, ctx);
    CHECK(merging.kind == BehaviorKind::Overtake);
    CHECK(merging.phase == OvertakePhase::ShiftIn);

    mem.phase = OvertakePhase::ShiftIn;
    const Behavior back = plan(ego_at(82.0, 0.3), {}, mem, ctx);
    CHECK(back.kind == BehaviorKind::LaneFollow);
    CHECK(mem.phase == OvertakePhase::None);
}

TEST_CASE("a box inside an armed trigger zone stops the vehicle short of it") {
    PlanContext ctx = highway_ctx();
    TriggerZone zone;
    zone.rect = {{50.0, -2.0}, {70.0, 2.0}};
    ctx.zone_entry_arc = {polyline_entry_arc(ctx.path, zone.rect)};
    PlannerState mem;
    const Behavior b = plan(ego_at(20.0, 0.0), {car_at(60.0, 0.0)}, mem, ctx, 0.0, std::nullopt,
                            {zone});
    CHECK(b.kind == BehaviorKind::TriggerStop);
    CHECK(b.stop_arc == doctest::Approx(48.0));  // zone entry minus the 2 m margin
}

TEST_CASE("an unarmed zone or an empty zone does not trigger") {
    PlanContext ctx = highway_ctx();
    TriggerZone zone;
    zone.rect = {{50.0, -2.0}, {70.0, 2.0}};
    zone.t_on = 10.0;
    ctx.zone_entry_arc = {polyline_entry_arc(ctx.path, zone.rect)};
    PlannerState mem;
    // armed later: the box inside it is far enough to be ignored otherwise
    Behavior b = plan(ego_at(20.0, 0.0), {car_at(60.0, 0.0)}, mem, ctx, 0.0, std::nullopt, {zone});
    CHECK(b.kind == BehaviorKind::LaneFollow);
    // armed now but empty
    TriggerZone armed;
    armed.rect = zone.rect;
    ctx.zone_entry_arc = {polyline_entry_arc(ctx.path, armed.rect)};
    PlannerState mem2;
    b = plan(ego_at(20.0, 0.0), {}, mem2, ctx, 0.0, std::nullopt, {armed});
    CHECK(b.kind == BehaviorKind::LaneFollow);
}

TEST_CASE("a red light within range sets a stop point short of the line") {
    PlannerState mem;
    perception::ControlObservation obs;
    obs.kind = perception::ControlKind::TrafficLight;
    obs.light = perception::LightState::Red;
    obs.distance = 20.0;
    const Behavior b = plan(ego_at(20.0, 0.0), {}, mem, highway_ctx(), 0.0, obs);
    CHECK(b.kind == BehaviorKind::StopAtControl);
    CHECK(b.stop_arc == doctest::Approx(38.5));  // 20 + 20 - 1.5
}

TEST_CASE("a green light is driven through") {
    PlannerState mem;
    perception::ControlObservation obs;
    obs.kind = perception::ControlKind::TrafficLight;
    obs.light = perception::LightState::Green;
    obs.distance = 20.0;
    const Behavior b = plan(ego_at(20.0, 0.0), {}, mem, highway_ctx(), 0.0, obs);
    CHECK(b.kind == BehaviorKind::LaneFollow);
}

TEST_CASE("a distant red light is not acted on yet") {
    PlannerState mem;
    perception::ControlObservation obs;
    obs.kind = perception::ControlKind::TrafficLight;
    obs.light = perception::LightState::Red;
    obs.distance = 31.0;  // beyond the 30 m control horizon
    const Behavior b = plan(ego_at(20.0, 0.0), {}, mem, highway_ctx(), 0.0, obs);
    CHECK(b.kind == BehaviorKind::LaneFollow);
}

TEST_CASE("a stop sign is served once and then released") {
    PlannerState mem;
    perception::ControlObservation obs;
    obs.kind = perception::ControlKind::StopSign;
    obs.distance = 20.0;
    obs.control_index = 3;

    // Approaching at speed: stop demanded.
    Behavior b = plan(ego_at(20.0, 0.0, 8.0), {}, mem, highway_ctx(), 0.0, obs);
    CHECK(b.kind == BehaviorKind::StopAtControl);

    // Standing nearly still close to the line: the sign is satisfied.
    obs.distance = 4.0;
    b = plan(ego_at(36.0, 0.0, 0.01), {}, mem, highway_ctx(), 1.0, obs);
    CHECK(b.kind == BehaviorKind::LaneFollow);

    // The same sign no longer demands a stop on the way through.
    obs.distance = 2.0;
    b = plan(ego_at(38.0, 0.0, 5.0), {}, mem, highway_ctx(), 2.0, obs);
    CHECK(b.kind == BehaviorKind::LaneFollow);
}

TEST_CASE("a crawl far from the line does not serve the sign") {
    PlannerState mem;
    perception::ControlObservation obs;
    obs.kind = perception::ControlKind::StopSign;
    obs.distance = 15.0;  // outside the 6 m hold window
    const Behavior b = plan(ego_at(20.0, 0.0, 0.01), {}, mem, highway_ctx(), 0.0, obs);
    CHECK(b.kind == BehaviorKind::StopAtControl);
}

TEST_CASE("emergencies outrank zones, lights and following") {
    PlanContext ctx = highway_ctx();
    TriggerZone zone;
    zone.rect = {{25.0, -2.0}, {70.0, 2.0}};
    ctx.zone_entry_arc = {polyline_entry_arc(ctx.path, zone.rect)};
    perception::ControlObservation obs;
    obs.kind = perception::ControlKind::TrafficLight;
    obs.light = perception::LightState::Red;
    obs.distance = 20.0;
    PlannerState mem;
    const Behavior b = plan(ego_at(20.0, 0.0), {car_at(30.0, 0.0)}, mem, ctx, 0.0, obs, {zone});
    CHECK(b.kind == BehaviorKind::EmergencyBrake);
}

TEST_CASE("trigger zones outrank traffic controls") {
    PlanContext ctx = highway_ctx();
    TriggerZone zone;
    zone.rect = {{50.0, -2.0}, {70.0, 2.0}};
    ctx.zone_entry_arc = {polyline_entry_arc(ctx.path, zone.rect)};
    perception::ControlObservation obs;
    obs.kind = perception::ControlKind::TrafficLight;
    obs.light = perception::LightState::Red;
    obs.distance = 25.0;
    PlannerState mem;
    const Behavior b = plan(ego_at(20.0, 0.0), {car_at(60.0, 0.0)}, mem, ctx, 0.0, obs, {zone});
    CHECK(b.kind == BehaviorKind::TriggerStop);
}

TEST_CASE("cruise waypoints ride the route at the desired speed") {
    const auto ctx = highway_ctx();
    const BehaviorConfig cfg;
    const Trajectory t = plan_trajectory(ctx, Behavior{}, ego_at(20.0, 1.0), cfg);
    REQUIRE(t.points.size() == 25);
    for (std::size_t i = 0; i < t.points.size(); ++i) {
        CHECK(t.points[i].x == doctest::Approx(20.0 + 2.0 * static_cast<double>(i)));
        CHECK(t.points[i].y == doctest::Approx(0.0));  // projected back onto the lane
        CHECK(t.headings[i] == doctest::Approx(0.0));
        CHECK(t.speeds[i] == doctest::Approx(cfg.v_des));
    }
}

TEST_CASE("a stop ramp decays like a comfortable braking parabola and parks") {
    const auto ctx = highway_ctx();
    const BehaviorConfig cfg;
    Behavior stop;
    stop.kind = BehaviorKind::StopAtControl;
    stop.stop_arc = 38.5;
    const Trajectory t = plan_trajectory(ctx, stop, ego_at(20.0, 0.0), cfg);
    REQUIRE(t.points.size() == 25);
    for (std::size_t i = 1; i < t.speeds.size(); ++i) CHECK(t.speeds[i] <= t.speeds[i - 1] + 1e-12);
    CHECK(t.speeds[0] == doctest::Approx(cfg.v_des));  // sqrt(2*2.5*18.5) > v_des, clamped
    CHECK(t.speeds[5] == doctest::Approx(std::sqrt(2.0 * 2.5 * 8.5)));  // 30 m mark
    CHECK(t.speeds[10] == 0.0);  // past the stop point
    CHECK(t.speeds[24] == 0.0);
}

TEST_CASE("following speed law: tight gaps match the lead, loose gaps close in") {
    const auto ctx = highway_ctx();
    const BehaviorConfig cfg;
    Behavior follow;
    follow.kind = BehaviorKind::CarFollow;
    follow.lead_speed = 6.0;

    // desired headway at 10 m/s is 15 m; a 12 m gap means match the lead
    follow.gap = 12.0;
    const Trajectory tight = plan_trajectory(ctx, follow, ego_at(20.0, 0.0, 10.0), cfg);
    CHECK(tight.speeds[0] == doctest::Approx(6.0));

    // a 20 m gap closes in at lead + half the surplus, capped by v_des
    follow.gap = 20.0;
    const Trajectory loose = plan_trajectory(ctx, follow, ego_at(20.0, 0.0, 10.0), cfg);
    CHECK(loose.speeds[0] == doctest::Approx(std::min(cfg.v_des, 6.0 + 0.5 * 5.0)));
}

TEST_CASE("emergency trajectories demand zero speed immediately") {
    const auto ctx = highway_ctx();
    Behavior em;
    em.kind = BehaviorKind::EmergencyBrake;
    const Trajectory t = plan_trajectory(ctx, em, ego_at(20.0, 0.0), BehaviorConfig{});
    for (double v : t.speeds) CHECK(v == 0.0);
}

TEST_CASE("overtake waypoints come from the adjacent lane while shifted out") {
    const auto ctx = highway_ctx(true);
    Behavior b;
    b.kind = BehaviorKind::Overtake;
    b.phase = OvertakePhase::ShiftOut;
    const Trajectory t = plan_trajectory(ctx, b, ego_at(20.0, 0.5), BehaviorConfig{});
    for (const auto& p : t.points) CHECK(p.y == doctest::Approx(3.5));

    b.phase = OvertakePhase::ShiftIn;  // back on the route source
    const Trajectory back = plan_trajectory(ctx, b, ego_at(20.0, 3.0), BehaviorConfig{});
    for (const auto& p : back.points) CHECK(p.y == doctest::Approx(0.0));
}
