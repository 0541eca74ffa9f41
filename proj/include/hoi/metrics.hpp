#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hoi/executor.hpp"
#include "hoi/planner.hpp"
#include "hoi/scene.hpp"

namespace hoi {

struct ContactSeries {
    std::vector<uint8_t> predicted;
    std::vector<uint8_t> reference;  // same length as predicted
};

struct ContactScores {
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
    double percent = 0.0;  // fraction of frames with predicted contact
};

struct TrajScores {
    double succ_05 = 0.0;
    double succ_02 = 0.0;
    double traj_err_05 = 0.0;  // 1 - succ
    double traj_err_02 = 0.0;
    double mpjpe_mm = 0.0;
    double max_keyframe_error_m = 0.0;
};

struct FootScores {
    double fs = 0.0;      // mean horizontal slide per contact frame, meters
    double h_feet = 0.0;  // mean lowest-foot height above ground, meters
};

struct MetricsReport {
    ContactScores contact;
    double p_hand = 0.0;  // penetration: fraction of frames with a violation
    FootScores foot;
    TrajScores traj;
    std::string to_table() const;  // flat key/value text
};

// True per frame iff the minimum hand-to-vertex distance is <= threshold.
std::vector<uint8_t> contact_labels(
    const DenseTrack& hand_track,
    const std::vector<std::vector<Vec3>>& object_vertices_per_frame,
    double threshold = 0.05);

// Per-sequence precision/recall/F1 from frame-level TP/FP/FN counts.
ContactScores contact_prf(const ContactSeries& series);
// Multi-sequence aggregation: average of per-sequence scores.
ContactScores contact_prf(const std::vector<ContactSeries>& sequences);

using SdfFn = std::function<double(const Vec3&)>;

// Exact signed distance to an oriented box (negative inside).
SdfFn box_sdf(const OrientedBox& box);

// Voxelized SDF over an axis-aligned bound, trilinear interpolation between
// samples; adequate for the thresholded penetration rule.
struct VoxelSdf {
    Vec3 min_corner, max_corner;
    int resolution = 64;
    std::vector<double> values;  // (resolution+1)^3 grid samples

    double operator()(const Vec3& p) const;
    static VoxelSdf bake(const SdfFn& exact, const Vec3& min_corner,
                         const Vec3& max_corner, int resolution = 64);
};

// Fraction of frames containing at least one vertex with d < 0 and |d| >
// magnitude_threshold.
double penetration_score(const std::vector<std::vector<Vec3>>& human_vertices_per_frame,
                         const SdfFn& object_sdf, double magnitude_threshold = 0.04);

// Max-keyframe-error success at 0.5 m / 0.2 m plus MPJPE over all controlled
// keyframes; control joint or object missing from the clip is an error.
TrajScores traj_metrics(const MotionClip& clip, const std::vector<ControlTrack>& control);
TrajScores traj_metrics_batch(const std::vector<TrajScores>& sequences);

// Foot proxy for kinematic clips: a point a fixed pelvis-to-sole drop below
// the pelvis (0.89 m, the resting pelvis height of the reference human).
FootScores foot_metrics(const MotionClip& clip, double ground_z = 0.0,
                        double contact_height = 0.05, double pelvis_drop = 0.89);

struct TargetPose {
    std::string object;
    Vec3 position;
    std::optional<Orientation> orientation;
};

// Episode success: completed outcome, object within tolerances, and the
// kinematic upright proxy (final pelvis height within [0.6, 1.2] m).
bool agent_success(const EpisodeLog& log, const SceneState& final_scene,
                   const TargetPose& target, double pos_tol = 0.05,
                   double ori_tol = 0.1);

double success_rate(const std::vector<bool>& episode_outcomes);

}  // namespace hoi
