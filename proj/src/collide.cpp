#include "hoi/collide.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hoi {

bool boxes_intersect(const OrientedBox& a, const OrientedBox& b) {
    a.validate();
    b.validate();
    const Mat3 ra = a.axes();
    const Mat3 rb = b.axes();
    const Vec3 axes_a[3] = {ra.col0, ra.col1, ra.col2};
    const Vec3 axes_b[3] = {rb.col0, rb.col1, rb.col2};
    const Vec3 ha = a.half();
    const Vec3 hb = b.half();
    const double ea[3] = {ha.x, ha.y, ha.z};
    const double eb[3] = {hb.x, hb.y, hb.z};
    const Vec3 d = b.center - a.center;

    auto separated = [&](const Vec3& axis) {
        double len2 = axis.dot(axis);
        if (len2 < 1e-12) return false;  // degenerate cross product, skip
        double ra_proj = 0, rb_proj = 0;
        for (int i = 0; i < 3; ++i) {
            ra_proj += ea[i] * std::fabs(axis.dot(axes_a[i]));
            rb_proj += eb[i] * std::fabs(axis.dot(axes_b[i]));
        }
        return std::fabs(axis.dot(d)) > ra_proj + rb_proj;
    };

    for (int i = 0; i < 3; ++i) {
        if (separated(axes_a[i])) return false;
        if (separated(axes_b[i])) return false;
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (separated(axes_a[i].cross(axes_b[j]))) return false;
    return true;
}

namespace {

double min_half_extent(const OrientedBox& box) {
    Vec3 h = box.half();
    return std::min({h.x, h.y, h.z});
}

}  // namespace

bool segment_swept_box(const OrientedBox& box, const Vec3& from, const Vec3& to,
                       const OrientedBox& obstacle) {
    double len = (to - from).norm();
    double step = min_half_extent(obstacle) * 0.5;
    int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    OrientedBox probe = box;
    for (int i = 0; i <= n; ++i) {
        double t = static_cast<double>(i) / n;
        probe.center = from + (to - from) * t;
        if (boxes_intersect(probe, obstacle)) return true;
    }
    return false;
}

CollisionReport validate_track(const OrientedBox& moving, const ControlTrack& track,
                               const SceneState& scene, const ValidateOptions& opts) {
    track.validate();

    // Ramped endpoint relaxation: zero clearance demanded within the contact
    // radius of the grasp and place points, then the requirement grows with
    // distance (slope 1) up to the full margin. A negative margin shrinks
    // obstacles uniformly instead (interpenetration-tolerant hard check).
    const Vec3 track_start = track.waypoints.front().position;
    const Vec3 track_end = track.waypoints.back().position;
    auto effective_margin = [&](const Vec3& p) {
        if (opts.margin <= 0.0) return opts.margin;
        double d = std::min((p - track_start).norm(), (p - track_end).norm());
        return std::min(opts.margin, std::max(0.0, d - opts.endpoint_relax_radius));
    };

    CollisionReport report;
    report.moving_name = track.joint_or_object;
    std::map<std::string, const ObjectState*> hits;
    std::vector<int> colliding_frames;

    // Sampling step: conservative against the smallest obstacle in the scene.
    double step = 1e9;
    for (const auto& obj : scene.objects) {
        if (opts.ignore.count(obj.name)) continue;
        step = std::min(step, min_half_extent(obj.box) * 0.5);
    }

    OrientedBox probe = moving;
    for (size_t s = 0; s + 1 < track.waypoints.size(); ++s) {
        const Waypoint& w0 = track.waypoints[s];
        const Waypoint& w1 = track.waypoints[s + 1];
        if (w0.orientation) probe.orientation = *w0.orientation;
        double len = (w1.position - w0.position).norm();
        int n = std::max(1, static_cast<int>(std::ceil(len / step)));
        for (int i = 0; i <= n; ++i) {
            double t = static_cast<double>(i) / n;
            probe.center = w0.position + (w1.position - w0.position) * t;
            double m = effective_margin(probe.center);
            bool frame_hit = false;
            for (const auto& obj : scene.objects) {
                if (opts.ignore.count(obj.name)) continue;
                if (boxes_intersect(probe, inflate_box(obj.box, m))) {
                    hits.emplace(obj.name, &obj);
                    frame_hit = true;
                }
            }
            if (frame_hit) {
                int frame = static_cast<int>(std::lround(w0.frame + t * (w1.frame - w0.frame)));
                colliding_frames.push_back(frame);
            }
        }
    }

    for (const auto& [name, obj] : hits)
        report.colliding_objects.emplace_back(name, *obj);
    report.collided = !report.colliding_objects.empty();

    std::sort(colliding_frames.begin(), colliding_frames.end());
    colliding_frames.erase(std::unique(colliding_frames.begin(), colliding_frames.end()),
                           colliding_frames.end());
    for (int f : colliding_frames) {
        if (!report.time_segments.empty() &&
            f - report.time_segments.back().second < opts.merge_gap_frames)
            report.time_segments.back().second = f;
        else
            report.time_segments.emplace_back(f, f);
    }
    return report;
}

CollisionReport validate_track(const OrientedBox& moving, const ControlTrack& track,
                               const SceneState& scene, double margin,
                               const std::set<std::string>& ignore) {
    ValidateOptions opts;
    opts.margin = margin;
    opts.endpoint_relax_radius = margin;
    opts.ignore = ignore;
    return validate_track(moving, track, scene, opts);
}

std::string format_collision_error(const CollisionReport& report) {
    if (!report.collided)
        throw std::invalid_argument("format_collision_error on a clean report");
    std::ostringstream out;
    out << report.moving_name << " was detected to collide in "
        << report.time_segments.size() << " time segment(s).\n";
    out << "Objects involved in collision:\n";
    for (const auto& [name, obj] : report.colliding_objects)
        out << "- " << name << " at position " << format_vec(obj.box.center)
            << " with size " << format_vec(obj.box.sizes) << "\n";
    return out.str();
}

}  // namespace hoi
