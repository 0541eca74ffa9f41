#include "hoi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hoi {

std::vector<uint8_t> contact_labels(
    const DenseTrack& hand_track,
    const std::vector<std::vector<Vec3>>& object_vertices_per_frame,
    double threshold) {
    if (hand_track.positions.size() != object_vertices_per_frame.size())
        throw std::invalid_argument("hand track and object vertices must cover "
                                    "the same frames");
    std::vector<uint8_t> labels(hand_track.positions.size(), 0);
    for (size_t f = 0; f < labels.size(); ++f) {
        const auto& verts = object_vertices_per_frame[f];
        if (verts.empty())
            throw std::invalid_argument("object mesh is empty at frame " +
                                        std::to_string(f));
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& v : verts)
            best = std::min(best, (hand_track.positions[f] - v).norm());
        labels[f] = best <= threshold ? 1 : 0;
    }
    return labels;
}

ContactScores contact_prf(const ContactSeries& series) {
    if (series.predicted.size() != series.reference.size())
        throw std::invalid_argument("contact series lengths differ");
    size_t tp = 0, fp = 0, fn = 0, pred_pos = 0;
    for (size_t i = 0; i < series.predicted.size(); ++i) {
        bool p = series.predicted[i] != 0, r = series.reference[i] != 0;
        if (p) ++pred_pos;
        if (p && r) ++tp;
        else if (p && !r) ++fp;
        else if (!p && r) ++fn;
    }
    ContactScores s;
    // Degenerate conventions: no predicted positives gives precision 1; no
    // reference positives gives recall 1; both empty scores a perfect 1/1/1.
    s.precision = (tp + fp) == 0 ? 1.0 : double(tp) / double(tp + fp);
    s.recall = (tp + fn) == 0 ? 1.0 : double(tp) / double(tp + fn);
    s.f1 = (s.precision + s.recall) == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    s.percent = series.predicted.empty()
                    ? 0.0
                    : double(pred_pos) / double(series.predicted.size());
    return s;
}

ContactScores contact_prf(const std::vector<ContactSeries>& sequences) {
    if (sequences.empty()) throw std::invalid_argument("no sequences to score");
    ContactScores acc{0, 0, 0, 0};
    for (const auto& seq : sequences) {
        ContactScores s = contact_prf(seq);
        acc.precision += s.precision;
        acc.recall += s.recall;
        acc.f1 += s.f1;
        acc.percent += s.percent;
    }
    double n = double(sequences.size());
    return {acc.precision / n, acc.recall / n, acc.f1 / n, acc.percent / n};
}

SdfFn box_sdf(const OrientedBox& box) {
    Mat3 axes = box.axes();
    Vec3 h = box.half();
    Vec3 center = box.center;
    return [axes, h, center](const Vec3& p) {
        Vec3 d = p - center;
        Vec3 local{d.dot(axes.col0), d.dot(axes.col1), d.dot(axes.col2)};
        Vec3 q{std::fabs(local.x) - h.x, std::fabs(local.y) - h.y,
               std::fabs(local.z) - h.z};
        Vec3 outside{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
        double inside = std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
        return outside.norm() + inside;
    };
}

double VoxelSdf::operator()(const Vec3& p) const {
    Vec3 span = max_corner - min_corner;
    auto clamp01 = [](double v) { return std::min(std::max(v, 0.0), 1.0); };
    double fx = clamp01((p.x - min_corner.x) / span.x) * resolution;
    double fy = clamp01((p.y - min_corner.y) / span.y) * resolution;
    double fz = clamp01((p.z - min_corner.z) / span.z) * resolution;
    int ix = std::min(int(fx), resolution - 1);
    int iy = std::min(int(fy), resolution - 1);
    int iz = std::min(int(fz), resolution - 1);
    double tx = fx - ix, ty = fy - iy, tz = fz - iz;
    int n = resolution + 1;
    auto at = [&](int x, int y, int z) {
        return values[(size_t(z) * n + y) * n + x];
    };
    double c00 = at(ix, iy, iz) * (1 - tx) + at(ix + 1, iy, iz) * tx;
    double c10 = at(ix, iy + 1, iz) * (1 - tx) + at(ix + 1, iy + 1, iz) * tx;
    double c01 = at(ix, iy, iz + 1) * (1 - tx) + at(ix + 1, iy, iz + 1) * tx;
    double c11 = at(ix, iy + 1, iz + 1) * (1 - tx) + at(ix + 1, iy + 1, iz + 1) * tx;
    double c0 = c00 * (1 - ty) + c10 * ty;
    double c1 = c01 * (1 - ty) + c11 * ty;
    return c0 * (1 - tz) + c1 * tz;
}

VoxelSdf VoxelSdf::bake(const SdfFn& exact, const Vec3& min_corner,
                        const Vec3& max_corner, int resolution) {
    if (resolution < 1) throw std::invalid_argument("voxel resolution must be >= 1");
    VoxelSdf grid;
    grid.min_corner = min_corner;
    grid.max_corner = max_corner;
    grid.resolution = resolution;
    int n = resolution + 1;
    grid.values.resize(size_t(n) * n * n);
    Vec3 span = max_corner - min_corner;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                grid.values[(size_t(z) * n + y) * n + x] = exact(
                    {min_corner.x + span.x * x / resolution,
                     min_corner.y + span.y * y / resolution,
                     min_corner.z + span.z * z / resolution});
    return grid;
}

double penetration_score(const std::vector<std::vector<Vec3>>& human_vertices_per_frame,
                         const SdfFn& object_sdf, double magnitude_threshold) {
    if (human_vertices_per_frame.empty()) return 0.0;
    size_t violating = 0;
    for (const auto& verts : human_vertices_per_frame) {
        for (const Vec3& v : verts) {
            double d = object_sdf(v);
            if (d < 0.0 && std::fabs(d) > magnitude_threshold) {
                ++violating;
                break;
            }
        }
    }
    return double(violating) / double(human_vertices_per_frame.size());
}

namespace {

Vec3 clip_point(const MotionClip& clip, const std::string& name, int frame) {
    if (name == "pelvis") return clip.at(frame).pelvis;
    if (name == "left_hand") return clip.at(frame).left_hand;
    if (name == "right_hand") return clip.at(frame).right_hand;
    auto it = clip.object_tracks.find(name);
    if (it == clip.object_tracks.end())
        throw std::invalid_argument("control target '" + name +
                                    "' is not present in the clip");
    return it->second.position_at(frame);
}

}  // namespace

TrajScores traj_metrics(const MotionClip& clip, const std::vector<ControlTrack>& control) {
    TrajScores s;
    double max_err = 0.0;
    double err_sum = 0.0;
    size_t count = 0;
    for (const auto& track : control) {
        for (const auto& w : track.waypoints) {
            if (w.frame < clip.start_frame || w.frame > clip.end_frame())
                throw std::invalid_argument("control keyframe outside clip range");
            double err = (clip_point(clip, track.joint_or_object, w.frame) -
                          w.position).norm();
            max_err = std::max(max_err, err);
            err_sum += err;
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("no control keyframes to score");
    s.max_keyframe_error_m = max_err;
    s.succ_05 = max_err < 0.5 ? 1.0 : 0.0;
    s.succ_02 = max_err < 0.2 ? 1.0 : 0.0;
    s.traj_err_05 = 1.0 - s.succ_05;
    s.traj_err_02 = 1.0 - s.succ_02;
    s.mpjpe_mm = err_sum / double(count) * 1000.0;
    return s;
}

TrajScores traj_metrics_batch(const std::vector<TrajScores>& sequences) {
    if (sequences.empty()) throw std::invalid_argument("no sequences to score");
    TrajScores acc;
    for (const auto& s : sequences) {
        acc.succ_05 += s.succ_05;
        acc.succ_02 += s.succ_02;
        acc.mpjpe_mm += s.mpjpe_mm;
        acc.max_keyframe_error_m =
            std::max(acc.max_keyframe_error_m, s.max_keyframe_error_m);
    }
    double n = double(sequences.size());
    acc.succ_05 /= n;
    acc.succ_02 /= n;
    acc.mpjpe_mm /= n;
    acc.traj_err_05 = 1.0 - acc.succ_05;
    acc.traj_err_02 = 1.0 - acc.succ_02;
    return acc;
}

FootScores foot_metrics(const MotionClip& clip, double ground_z,
                        double contact_height, double pelvis_drop) {
    FootScores s;
    if (clip.frames.empty()) return s;
    double slide_sum = 0.0;
    size_t contact_frames = 0;
    double height_sum = 0.0;
    for (size_t i = 0; i < clip.frames.size(); ++i) {
        Vec3 foot = clip.frames[i].pelvis - Vec3{0, 0, pelvis_drop};
        double height = foot.z - ground_z;
        height_sum += height;
        if (i > 0 && height < contact_height) {
            Vec3 prev = clip.frames[i - 1].pelvis - Vec3{0, 0, pelvis_drop};
            slide_sum += (Vec3{foot.x, foot.y, 0} - Vec3{prev.x, prev.y, 0}).norm();
            ++contact_frames;
        }
    }
    s.fs = contact_frames == 0 ? 0.0 : slide_sum / double(contact_frames);
    s.h_feet = height_sum / double(clip.frames.size());
    return s;
}

bool agent_success(const EpisodeLog& log, const SceneState& final_scene,
                   const TargetPose& target, double pos_tol, double ori_tol) {
    if (log.outcome != "completed") return false;
    const ObjectState* obj = final_scene.find(target.object);
    if (!obj) return false;
    if ((obj->box.center - target.position).norm() > pos_tol) return false;
    if (target.orientation &&
        quat_angle(obj->box.orientation.quat, target.orientation->quat) > ori_tol)
        return false;
    double pelvis_z = final_scene.human.pelvis.z;
    return pelvis_z >= 0.6 && pelvis_z <= 1.2;
}

double success_rate(const std::vector<bool>& episode_outcomes) {
    if (episode_outcomes.empty()) return 0.0;
    size_t wins = 0;
    for (bool b : episode_outcomes)
        if (b) ++wins;
    return double(wins) / double(episode_outcomes.size());
}

std::string MetricsReport::to_table() const {
    std::ostringstream out;
    out << "C_prec " << contact.precision << "\n"
        << "C_rec " << contact.recall << "\n"
        << "C_F1 " << contact.f1 << "\n"
        << "C_percent " << contact.percent << "\n"
        << "P_hand " << p_hand << "\n"
        << "FS " << foot.fs << "\n"
        << "H_feet " << foot.h_feet << "\n"
        << "Succ@0.5 " << traj.succ_05 << "\n"
        << "TrajErr@0.5 " << traj.traj_err_05 << "\n"
        << "Succ@0.2 " << traj.succ_02 << "\n"
        << "TrajErr@0.2 " << traj.traj_err_02 << "\n"
        << "MPJPE " << traj.mpjpe_mm << "\n";
    return out.str();
}

}  // namespace hoi
