#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoi/collide.hpp"
#include "hoi/scene.hpp"
#include "hoi/traj.hpp"

namespace hoi {

// Error whose text is fed back to the planner for a replan attempt.
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FramePose {
    Vec3 pelvis;
    Vec3 left_hand;
    Vec3 right_hand;
    Quat orientation;
};

struct GraspEvent {
    std::string object;
    int frame = 0;
    Vec3 contact_local_left;
    Vec3 contact_local_right;
};

struct MotionClip {
    double fps = 30.0;
    int start_frame = 0;
    std::vector<FramePose> frames;
    std::map<std::string, DenseTrack> object_tracks;
    std::vector<GraspEvent> grasp_events;
    std::string backend = "kinematic";

    int end_frame() const { return start_frame + static_cast<int>(frames.size()) - 1; }
    const FramePose& at(int frame) const { return frames.at(frame - start_frame); }
};

struct ExecutionResult {
    MotionClip clip;
    SceneState final_scene;
    // Clearance checks at the safety margin, reported back to the planner.
    std::vector<CollisionReport> collision_reports;
    // Interpenetration checks at the hard margin; these gate acceptance.
    std::vector<CollisionReport> hard_collision_reports;
    // Control tracks actually followed (after placement adjustment), keyed by
    // joint or object name; the clip interpolates these exactly.
    std::vector<ControlTrack> control_tracks;

    bool any_collision() const {
        for (const auto& r : collision_reports)
            if (r.collided) return true;
        return false;
    }
    bool any_hard_collision(const std::string& moving_name) const {
        for (const auto& r : hard_collision_reports)
            if (r.collided && r.moving_name == moving_name) return true;
        return false;
    }
};

struct ExecOptions {
    double fps = 30.0;
    double safety_margin = 0.2;
    // Interpenetration tolerance; waypoints are grid-quantized at 0.05 m so
    // overlaps up to one cell are treated as contact, not collision.
    double hard_margin = -0.05;
    // Horizontal stand-off between the pelvis and a just-placed object.
    double place_standoff = 0.5;
    // Surface sampling step for contact-point selection on object boxes.
    double surface_step = 0.05;
};

// Deterministic kinematic stand-in for the learned motion generator.
ExecutionResult generate_motion(const SceneState& scene,
                                const std::vector<std::string>& control_joints,
                                const std::vector<ControlTrack>& control_points,
                                const std::string& text, int number_frames,
                                int task_index, const ExecOptions& opts = {});

ExecutionResult generate_interaction(const SceneState& scene,
                                     const std::vector<std::string>& control_joints,
                                     const std::vector<ControlTrack>& control_points,
                                     const std::string& text, int number_frames,
                                     int task_index,
                                     const std::vector<std::string>& object_name,
                                     const std::vector<ControlTrack>& object_points,
                                     const ExecOptions& opts = {});

SceneState apply_result(const SceneState& scene, const ExecutionResult& result);

// Deterministic point sampling of an oriented box's surface (world frame).
std::vector<Vec3> box_surface_points(const OrientedBox& box, double step);

// Line-oriented clip file, 6-decimal fixed point.
void save_clip(const MotionClip& clip, const std::string& path);
MotionClip load_clip(const std::string& path);

}  // namespace hoi
