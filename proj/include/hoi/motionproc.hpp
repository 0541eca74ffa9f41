#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hoi/geom.hpp"

namespace hoi {

// Pre-extracted per-frame pose estimate for one person in one clip.
struct PoseStream {
    double fps = 30.0;
    std::vector<Vec3> root_translation;            // per frame
    std::vector<Quat> root_orientation;            // per frame
    std::vector<std::vector<Vec3>> joints;         // per frame, fixed joint count
    std::vector<double> bbox_area;                 // optional channel, pixels
    std::vector<std::vector<double>> confidences;  // optional per-keypoint channel
    std::vector<uint8_t> full_body_visible;        // optional channel

    size_t frame_count() const { return root_translation.size(); }
    void validate() const;
};

PoseStream load_pose_stream(const std::string& path);
void save_pose_stream(const PoseStream& stream, const std::string& path);

enum class FilterReason {
    none,
    short_clip,
    low_res,
    small_bbox,
    low_confidence,
    abrupt_motion,
    static_motion,
};

struct FilterVerdict {
    bool kept = true;
    FilterReason reason = FilterReason::none;
};

std::string filter_reason_name(FilterReason reason);

// Shot list (seconds) to clip frame ranges [start, end): shots shorter than
// min_len are dropped, longer ones split into chunks of at most max_len with
// the remainder kept when it is itself long enough.
std::vector<std::pair<int, int>> segment_clips(
    const std::vector<std::pair<double, double>>& shot_boundaries,
    double min_len = 2.0, double max_len = 30.0, double fps = 30.0);

FilterVerdict bbox_confidence_filter(const PoseStream& stream,
                                     double area_min = 5000.0,
                                     double conf_min = 0.5,
                                     double full_body_ratio_min = 0.8);

FilterVerdict motion_sanity_filter(const PoseStream& stream,
                                   double jump_translation_max = 0.5,
                                   double static_speed_min = 0.05,
                                   double jump_rotation_max = 1.0);

// Frames whose displacement from the last trusted frame exceeds the per-frame
// threshold (scaled by the gap) are re-synthesized from the flanking trusted
// frames: PCHIP on positions, Slerp on orientations.
PoseStream jitter_repair(const PoseStream& stream,
                         double discontinuity_threshold = 0.15);

// Centered moving average (positions) and hemisphere-aligned normalized
// quaternion mean (orientations); endpoints use shrunken windows.
PoseStream smooth_stream(const PoseStream& stream, int window = 5);

}  // namespace hoi
