#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hoi/scene.hpp"
#include "hoi/traj.hpp"

namespace hoi {

struct CollisionReport {
    std::string moving_name;
    std::vector<std::pair<std::string, ObjectState>> colliding_objects;  // name-sorted
    std::vector<std::pair<int, int>> time_segments;                      // [start, end] frames
    bool collided = false;
};

// Exact separating-axis test for a pair of oriented boxes (15 axes).
bool boxes_intersect(const OrientedBox& a, const OrientedBox& b);

// True iff `box`, translated from `from` to `to` with orientation fixed,
// intersects `obstacle`. Conservative sampling at step <= min obstacle
// half-extent / 2, plus both endpoints.
bool segment_swept_box(const OrientedBox& box, const Vec3& from, const Vec3& to,
                       const OrientedBox& obstacle);

struct ValidateOptions {
    double margin = 0.2;
    // The effective margin ramps down to 0 near the track's first and last
    // waypoints (min(margin, dist_to_endpoint - radius), floored at 0):
    // objects may rest in contact at grasp and place points. Ignored when
    // margin is negative; a negative margin is a constant interpenetration
    // tolerance.
    double endpoint_relax_radius = 0.2;
    int merge_gap_frames = 5;  // colliding segments closer than this merge
    std::set<std::string> ignore;
};

// Checks every inter-waypoint segment of `track` against every scene object
// (inflated by the effective margin) not in `ignore`.
CollisionReport validate_track(const OrientedBox& moving, const ControlTrack& track,
                               const SceneState& scene, const ValidateOptions& opts);

CollisionReport validate_track(const OrientedBox& moving, const ControlTrack& track,
                               const SceneState& scene, double margin,
                               const std::set<std::string>& ignore = {});

// Planner-facing error text; requires report.collided.
std::string format_collision_error(const CollisionReport& report);

}  // namespace hoi
