#include "hoi/motionproc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hoi/traj.hpp"

namespace hoi {

void PoseStream::validate() const {
    if (fps <= 0) throw std::invalid_argument("pose stream fps must be > 0");
    size_t n = frame_count();
    if (n < 1) throw std::invalid_argument("pose stream needs at least one frame");
    if (root_orientation.size() != n)
        throw std::invalid_argument("root orientation channel length mismatch");
    if (!joints.empty() && joints.size() != n)
        throw std::invalid_argument("joint channel length mismatch");
    for (size_t i = 1; i < joints.size(); ++i)
        if (joints[i].size() != joints[0].size())
            throw std::invalid_argument("joint count varies between frames");
    if (!bbox_area.empty() && bbox_area.size() != n)
        throw std::invalid_argument("bbox channel length mismatch");
    if (!confidences.empty() && confidences.size() != n)
        throw std::invalid_argument("confidence channel length mismatch");
    if (!full_body_visible.empty() && full_body_visible.size() != n)
        throw std::invalid_argument("visibility channel length mismatch");
}

std::string filter_reason_name(FilterReason reason) {
    switch (reason) {
        case FilterReason::none: return "none";
        case FilterReason::short_clip: return "short_clip";
        case FilterReason::low_res: return "low_res";
        case FilterReason::small_bbox: return "small_bbox";
        case FilterReason::low_confidence: return "low_confidence";
        case FilterReason::abrupt_motion: return "abrupt_motion";
        case FilterReason::static_motion: return "static_motion";
    }
    return "unknown";
}

std::vector<std::pair<int, int>> segment_clips(
    const std::vector<std::pair<double, double>>& shot_boundaries, double min_len,
    double max_len, double fps) {
    std::vector<std::pair<int, int>> clips;
    double prev_end = -std::numeric_limits<double>::infinity();
    for (const auto& [start, end] : shot_boundaries) {
        if (end < start || start < prev_end)
            throw std::invalid_argument("shot boundaries must be sorted and "
                                        "non-overlapping");
        prev_end = end;
        double at = start;
        while (end - at >= min_len) {
            double len = std::min(max_len, end - at);
            clips.emplace_back(int(std::lround(at * fps)),
                               int(std::lround((at + len) * fps)));
            at += len;
        }
    }
    return clips;
}

FilterVerdict bbox_confidence_filter(const PoseStream& stream, double area_min,
                                     double conf_min, double full_body_ratio_min) {
    stream.validate();
    if (stream.bbox_area.empty() || stream.confidences.empty())
        throw std::invalid_argument("stream lacks bbox or confidence channels");
    std::vector<double> areas = stream.bbox_area;
    std::nth_element(areas.begin(), areas.begin() + areas.size() / 2, areas.end());
    double median = areas[areas.size() / 2];
    if (median < area_min) return {false, FilterReason::small_bbox};

    double conf_sum = 0.0;
    size_t conf_count = 0;
    for (const auto& frame : stream.confidences)
        for (double c : frame) {
            conf_sum += c;
            ++conf_count;
        }
    double mean_conf = conf_count == 0 ? 0.0 : conf_sum / double(conf_count);
    if (mean_conf < conf_min) return {false, FilterReason::low_confidence};

    if (!stream.full_body_visible.empty()) {
        size_t visible = 0;
        for (uint8_t v : stream.full_body_visible)
            if (v) ++visible;
        if (double(visible) / double(stream.full_body_visible.size()) <
            full_body_ratio_min)
            return {false, FilterReason::low_res};
    }
    return {true, FilterReason::none};
}

FilterVerdict motion_sanity_filter(const PoseStream& stream,
                                   double jump_translation_max,
                                   double static_speed_min,
                                   double jump_rotation_max) {
    stream.validate();
    size_t n = stream.frame_count();
    if (n < 2) throw std::invalid_argument("sanity filter needs >= 2 frames");
    for (size_t i = 1; i < n; ++i) {
        double step = (stream.root_translation[i] - stream.root_translation[i - 1]).norm();
        if (step > jump_translation_max) return {false, FilterReason::abrupt_motion};
        double turn = quat_angle(stream.root_orientation[i], stream.root_orientation[i - 1]);
        if (turn > jump_rotation_max) return {false, FilterReason::abrupt_motion};
    }
    double speed_sum = 0.0;
    size_t samples = 0;
    for (size_t i = 1; i < n; ++i) {
        speed_sum += (stream.root_translation[i] - stream.root_translation[i - 1]).norm() *
                     stream.fps;
        ++samples;
        if (!stream.joints.empty())
            for (size_t j = 0; j < stream.joints[i].size(); ++j) {
                speed_sum += (stream.joints[i][j] - stream.joints[i - 1][j]).norm() *
                             stream.fps;
                ++samples;
            }
    }
    if (speed_sum / double(samples) < static_speed_min)
        return {false, FilterReason::static_motion};
    return {true, FilterReason::none};
}

namespace {

double frame_displacement(const PoseStream& s, size_t a, size_t b) {
    double d = (s.root_translation[a] - s.root_translation[b]).norm();
    if (!s.joints.empty())
        for (size_t j = 0; j < s.joints[a].size(); ++j)
            d = std::max(d, (s.joints[a][j] - s.joints[b][j]).norm());
    return d;
}

}  // namespace

PoseStream jitter_repair(const PoseStream& stream, double discontinuity_threshold) {
    stream.validate();
    size_t n = stream.frame_count();
    if (n < 3) throw std::invalid_argument("jitter repair needs >= 3 frames");

    // Trust walk: a frame is valid when its displacement from the last valid
    // frame fits within the per-frame threshold scaled by the gap, so a spike
    // invalidates only itself while its neighbors stay trusted.
    std::vector<uint8_t> valid(n, 0);
    valid[0] = 1;
    size_t last_valid = 0;
    for (size_t i = 1; i < n; ++i) {
        double limit = discontinuity_threshold * double(i - last_valid);
        if (frame_displacement(stream, i, last_valid) <= limit) {
            valid[i] = 1;
            last_valid = i;
        }
    }
    std::vector<size_t> knots;
    for (size_t i = 0; i < n; ++i)
        if (valid[i]) knots.push_back(i);
    if (knots.size() < 2)
        throw std::runtime_error("jitter repair failed: stream has no stretch of "
                                 "mutually consistent frames");
    if (knots.size() == n) return stream;

    PoseStream out = stream;
    std::vector<double> t(knots.begin(), knots.end());
    size_t joint_count = stream.joints.empty() ? 0 : stream.joints[0].size();
    auto repair_channel = [&](auto get, auto set) {
        std::vector<double> v(knots.size());
        for (size_t k = 0; k < knots.size(); ++k) v[k] = get(knots[k]);
        std::vector<double> d = pchip_derivatives(t, v);
        for (size_t i = 0; i < n; ++i)
            if (!valid[i]) set(i, pchip_eval(t, v, d, std::min(double(i), t.back())));
    };
    for (int axis = 0; axis < 3; ++axis) {
        repair_channel(
            [&](size_t f) {
                const Vec3& p = stream.root_translation[f];
                return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
            },
            [&](size_t f, double val) {
                Vec3& p = out.root_translation[f];
                (axis == 0 ? p.x : axis == 1 ? p.y : p.z) = val;
            });
        for (size_t j = 0; j < joint_count; ++j)
            repair_channel(
                [&](size_t f) {
                    const Vec3& p = stream.joints[f][j];
                    return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
                },
                [&](size_t f, double val) {
                    Vec3& p = out.joints[f][j];
                    (axis == 0 ? p.x : axis == 1 ? p.y : p.z) = val;
                });
    }
    // Orientations: Slerp across each invalid span between its flanking knots.
    for (size_t k = 0; k + 1 < knots.size(); ++k) {
        size_t l = knots[k], r = knots[k + 1];
        for (size_t i = l + 1; i < r; ++i) {
            double u = double(i - l) / double(r - l);
            out.root_orientation[i] =
                slerp(stream.root_orientation[l], stream.root_orientation[r], u);
        }
    }
    for (size_t i = knots.back() + 1; i < n; ++i) {
        out.root_orientation[i] = stream.root_orientation[knots.back()];
    }
    return out;
}

namespace {

Quat window_mean(const std::vector<Quat>& qs, size_t lo, size_t hi, size_t center) {
    const Quat& ref = qs[center];
    double w = 0, x = 0, y = 0, z = 0;
    for (size_t i = lo; i <= hi; ++i) {
        Quat q = qs[i];
        if (q.dot(ref) < 0) q = {-q.w, -q.x, -q.y, -q.z};
        w += q.w;
        x += q.x;
        y += q.y;
        z += q.z;
    }
    return Quat{w, x, y, z}.normalized();
}

}  // namespace

PoseStream smooth_stream(const PoseStream& stream, int window) {
    stream.validate();
    if (window < 3 || window % 2 == 0)
        throw std::invalid_argument("smoothing window must be odd and >= 3");
    size_t n = stream.frame_count();
    int half = window / 2;
    PoseStream out = stream;
    for (size_t i = 0; i < n; ++i) {
        int shrink = std::min<int>({half, int(i), int(n - 1 - i)});
        size_t lo = i - shrink, hi = i + shrink;
        double count = double(hi - lo + 1);
        Vec3 root{0, 0, 0};
        for (size_t k = lo; k <= hi; ++k) root += stream.root_translation[k];
        out.root_translation[i] = root / count;
        for (size_t j = 0; j < (stream.joints.empty() ? 0 : stream.joints[0].size()); ++j) {
            Vec3 acc{0, 0, 0};
            for (size_t k = lo; k <= hi; ++k) acc += stream.joints[k][j];
            out.joints[i][j] = acc / count;
        }
        out.root_orientation[i] = window_mean(stream.root_orientation, lo, hi, i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// File format

void save_pose_stream(const PoseStream& stream, const std::string& path) {
    stream.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write pose stream: " + path);
    size_t joint_count = stream.joints.empty() ? 0 : stream.joints[0].size();
    size_t conf_count = stream.confidences.empty() ? 0 : stream.confidences[0].size();
    out << "HOI-POSE 1\n";
    out << "fps " << stream.fps << "\n";
    out << "frames " << stream.frame_count() << "\n";
    out << "joints " << joint_count << "\n";
    out << "confidences " << conf_count << "\n";
    out << "channels" << (stream.bbox_area.empty() ? "" : " bbox")
        << (stream.full_body_visible.empty() ? "" : " visible") << "\n";
    out.precision(9);
    for (size_t i = 0; i < stream.frame_count(); ++i) {
        const Vec3& r = stream.root_translation[i];
        const Quat& q = stream.root_orientation[i];
        out << r.x << " " << r.y << " " << r.z << " " << q.w << " " << q.x << " "
            << q.y << " " << q.z;
        for (size_t j = 0; j < joint_count; ++j)
            out << " " << stream.joints[i][j].x << " " << stream.joints[i][j].y
                << " " << stream.joints[i][j].z;
        for (size_t c = 0; c < conf_count; ++c) out << " " << stream.confidences[i][c];
        if (!stream.bbox_area.empty()) out << " " << stream.bbox_area[i];
        if (!stream.full_body_visible.empty())
            out << " " << int(stream.full_body_visible[i]);
        out << "\n";
    }
}

PoseStream load_pose_stream(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pose stream: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "HOI-POSE 1")
        throw std::runtime_error("not a pose stream file: " + path);
    PoseStream s;
    size_t frames = 0, joint_count = 0, conf_count = 0;
    bool has_bbox = false, has_visible = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "fps") ls >> s.fps;
        else if (tag == "frames") ls >> frames;
        else if (tag == "joints") ls >> joint_count;
        else if (tag == "confidences") ls >> conf_count;
        else if (tag == "channels") {
            std::string ch;
            while (ls >> ch) {
                if (ch == "bbox") has_bbox = true;
                if (ch == "visible") has_visible = true;
            }
            break;
        } else {
            throw std::runtime_error("unexpected pose stream header line: " + line);
        }
    }
    for (size_t i = 0; i < frames; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("pose stream truncated at frame " +
                                     std::to_string(i));
        std::istringstream ls(line);
        Vec3 r;
        Quat q;
        ls >> r.x >> r.y >> r.z >> q.w >> q.x >> q.y >> q.z;
        s.root_translation.push_back(r);
        s.root_orientation.push_back(q);
        if (joint_count) {
            std::vector<Vec3> js(joint_count);
            for (auto& j : js) ls >> j.x >> j.y >> j.z;
            s.joints.push_back(std::move(js));
        }
        if (conf_count) {
            std::vector<double> cs(conf_count);
            for (auto& c : cs) ls >> c;
            s.confidences.push_back(std::move(cs));
        }
        if (has_bbox) {
            double a;
            ls >> a;
            s.bbox_area.push_back(a);
        }
        if (has_visible) {
            int v;
            ls >> v;
            s.full_body_visible.push_back(uint8_t(v));
        }
        if (!ls) throw std::runtime_error("malformed pose stream record at frame " +
                                          std::to_string(i));
    }
    s.validate();
    return s;
}

}  // namespace hoi
