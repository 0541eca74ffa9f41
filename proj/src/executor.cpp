#include "hoi/executor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hoi {

namespace {

const std::set<std::string> kJoints = {"pelvis", "left_hand", "right_hand"};

void check_joints(const SceneState& scene, const std::vector<std::string>& joints,
                  const std::vector<ControlTrack>& points) {
    for (const auto& j : joints) {
        if (kJoints.count(j)) continue;
        if (scene.find(j))
            throw ProtocolError("'" + j +
                                "' is an object. Do not put object name in "
                                "control_joints; use object_name instead.");
        throw ProtocolError("unknown control joint '" + j +
                            "'; control_joints must be a subset of "
                            "['pelvis','left_hand','right_hand']");
    }
    if (joints.size() != points.size())
        throw ProtocolError("control_points must provide one waypoint list per "
                            "control joint");
}

void check_frames(const ControlTrack& track, int number_frames) {
    for (const auto& w : track.waypoints)
        if (w.frame < 0 || w.frame > number_frames)
            throw ProtocolError(
                "waypoint frame " + std::to_string(w.frame) + " out of range: "
                "number_frames should be larger or equal to the largest frame_id");
}

// Extends a waypoint list to cover [0, number_frames], holding the boundary
// poses, so every densified channel spans the whole clip.
ControlTrack pad_track(const ControlTrack& in, const Vec3& rest_position,
                       int number_frames) {
    ControlTrack out = in;
    if (out.waypoints.empty())
        out.waypoints.push_back({0, rest_position, std::nullopt});
    if (out.waypoints.front().frame > 0)
        out.waypoints.insert(out.waypoints.begin(),
                             {0, out.waypoints.front().position, std::nullopt});
    if (out.waypoints.back().frame < number_frames)
        out.waypoints.push_back(
            {number_frames, out.waypoints.back().position, std::nullopt});
    if (out.waypoints.size() == 1) {
        Waypoint w = out.waypoints.front();
        w.frame = number_frames > 0 ? number_frames : 1;
        out.waypoints.push_back(w);
    }
    return out;
}

std::vector<double> yaw_channel(const DenseTrack& pelvis, double initial_yaw) {
    size_t n = pelvis.positions.size();
    std::vector<double> yaw(n, initial_yaw);
    double current = initial_yaw;
    bool moved = false;
    for (size_t i = 0; i < n; ++i) {
        if (i + 1 < n) {
            Vec3 v = pelvis.positions[i + 1] - pelvis.positions[i];
            if (v.norm_xy() > 1e-9) {
                current = std::atan2(v.y, v.x);
                moved = true;
            }
        }
        yaw[i] = moved ? current : initial_yaw;
    }
    return yaw;
}

Vec3 rotate_z(const Vec3& v, double yaw) {
    double c = std::cos(yaw), s = std::sin(yaw);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

}  // namespace

std::vector<Vec3> box_surface_points(const OrientedBox& box, double step) {
    if (step <= 0) throw std::invalid_argument("surface step must be > 0");
    Mat3 axes = box.axes();
    Vec3 h = box.half();
    std::vector<Vec3> pts;
    auto emit_face = [&](int fixed_axis, double side) {
        double he[3] = {h.x, h.y, h.z};
        int a = (fixed_axis + 1) % 3, b = (fixed_axis + 2) % 3;
        int na = std::max(1, static_cast<int>(std::ceil(2 * he[a] / step)));
        int nb = std::max(1, static_cast<int>(std::ceil(2 * he[b] / step)));
        for (int i = 0; i <= na; ++i) {
            for (int j = 0; j <= nb; ++j) {
                double local[3];
                local[fixed_axis] = side * he[fixed_axis];
                local[a] = -he[a] + 2 * he[a] * i / na;
                local[b] = -he[b] + 2 * he[b] * j / nb;
                pts.push_back(box.center +
                              axes.apply({local[0], local[1], local[2]}));
            }
        }
    };
    for (int axis = 0; axis < 3; ++axis) {
        emit_face(axis, -1.0);
        emit_face(axis, 1.0);
    }
    return pts;
}

namespace {

struct BodyChannels {
    DenseTrack pelvis, left, right;
    std::vector<double> yaw;
    bool left_controlled = false, right_controlled = false;
};

BodyChannels build_body(const SceneState& scene,
                        const std::vector<std::string>& joints,
                        const std::vector<ControlTrack>& points, int number_frames) {
    const HumanState& h = scene.human;
    BodyChannels body;
    const ControlTrack* pelvis_in = nullptr;
    const ControlTrack* left_in = nullptr;
    const ControlTrack* right_in = nullptr;
    for (size_t i = 0; i < joints.size(); ++i) {
        if (joints[i] == "pelvis") pelvis_in = &points[i];
        if (joints[i] == "left_hand") left_in = &points[i], body.left_controlled = true;
        if (joints[i] == "right_hand") right_in = &points[i], body.right_controlled = true;
    }
    ControlTrack pelvis_track =
        pad_track(pelvis_in ? *pelvis_in : ControlTrack{}, h.pelvis, number_frames);
    body.pelvis = pchip_densify(pelvis_track);
    body.yaw = yaw_channel(body.pelvis, h.orientation.yaw());

    auto ride = [&](const Vec3& hand0) {
        DenseTrack t;
        t.start_frame = 0;
        Vec3 offset_local = rotate_z(hand0 - h.pelvis, -h.orientation.yaw());
        size_t n = body.pelvis.positions.size();
        t.positions.resize(n);
        t.orientations.assign(n, Quat{});
        for (size_t i = 0; i < n; ++i)
            t.positions[i] = body.pelvis.positions[i] +
                             rotate_z(offset_local, body.yaw[i]);
        return t;
    };
    body.left = left_in ? pchip_densify(pad_track(*left_in, h.left_hand, number_frames))
                        : ride(h.left_hand);
    body.right = right_in
                     ? pchip_densify(pad_track(*right_in, h.right_hand, number_frames))
                     : ride(h.right_hand);
    return body;
}

MotionClip assemble_clip(const SceneState& scene, const BodyChannels& body,
                         int number_frames) {
    MotionClip clip;
    clip.start_frame = 0;
    clip.frames.resize(number_frames + 1);
    for (int f = 0; f <= number_frames; ++f) {
        FramePose& p = clip.frames[f];
        p.pelvis = body.pelvis.positions[f];
        p.left_hand = body.left.positions[f];
        p.right_hand = body.right.positions[f];
        bool still = std::fabs(body.yaw[f] - scene.human.orientation.yaw()) < 1e-12;
        p.orientation = still ? scene.human.orientation.quat
                              : Quat::yaw(body.yaw[f]);
    }
    return clip;
}

SceneState final_scene_from(const SceneState& scene, const MotionClip& clip) {
    SceneState out = scene;
    const FramePose& last = clip.frames.back();
    out.human.pelvis = last.pelvis;
    out.human.left_hand = last.left_hand;
    out.human.right_hand = last.right_hand;
    // Hands can end beyond the resting-pose sanity bound while attached to a
    // placed object; clamp is not applied, so skip HumanState::validate here.
    double yaw = 2.0 * std::atan2(last.orientation.z, last.orientation.w);
    out.human.orientation = Orientation(0.0, 0.0, yaw);
    for (auto& obj : out.objects) {
        auto it = clip.object_tracks.find(obj.name);
        if (it == clip.object_tracks.end()) continue;
        obj.box.center = it->second.positions.back();
        const Quat& q = it->second.orientations.back();
        double oyaw = 2.0 * std::atan2(q.z, q.w);
        bool turned = quat_angle(q, obj.box.orientation.quat) > 1e-9;
        if (turned) obj.box.orientation = Orientation(0.0, 0.0, oyaw);
    }
    return out;
}

CollisionReport validate_human(const SceneState& scene, const ControlTrack& pelvis,
                               const std::set<std::string>& ignore, double margin,
                               double relax) {
    ValidateOptions vo;
    vo.margin = margin;
    vo.endpoint_relax_radius = relax;
    vo.ignore = ignore;
    ControlTrack named = pelvis;
    named.joint_or_object = "human";
    return validate_track(human_box(scene.human, 0.0), named, scene, vo);
}

}  // namespace

ExecutionResult generate_motion(const SceneState& scene,
                                const std::vector<std::string>& control_joints,
                                const std::vector<ControlTrack>& control_points,
                                const std::string& text, int number_frames,
                                int task_index, const ExecOptions& opts) {
    (void)text;
    (void)task_index;
    scene.validate();
    if (number_frames < 1) throw ProtocolError("number_frames must be >= 1");
    check_joints(scene, control_joints, control_points);
    for (const auto& t : control_points) check_frames(t, number_frames);

    BodyChannels body = build_body(scene, control_joints, control_points, number_frames);
    ExecutionResult result;
    result.clip = assemble_clip(scene, body, number_frames);
    result.final_scene = final_scene_from(scene, result.clip);

    for (size_t i = 0; i < control_joints.size(); ++i) {
        ControlTrack t = control_points[i];
        t.joint_or_object = control_joints[i];
        result.control_tracks.push_back(t);
        if (control_joints[i] == "pelvis" && t.waypoints.size() >= 2) {
            result.collision_reports.push_back(
                validate_human(scene, t, {}, opts.safety_margin, opts.safety_margin));
            result.hard_collision_reports.push_back(
                validate_human(scene, t, {}, opts.hard_margin, 0.0));
        }
    }
    return result;
}

ExecutionResult generate_interaction(const SceneState& scene,
                                     const std::vector<std::string>& control_joints,
                                     const std::vector<ControlTrack>& control_points,
                                     const std::string& text, int number_frames,
                                     int task_index,
                                     const std::vector<std::string>& object_name,
                                     const std::vector<ControlTrack>& object_points,
                                     const ExecOptions& opts) {
    (void)text;
    (void)task_index;
    scene.validate();
    if (number_frames < 1) throw ProtocolError("number_frames must be >= 1");
    check_joints(scene, control_joints, control_points);
    if (object_name.empty()) throw ProtocolError("object_name must not be empty");
    if (object_name.size() != object_points.size())
        throw ProtocolError("object_points must provide one waypoint list per object");
    for (const auto& name : object_name)
        if (!scene.find(name))
            throw ProtocolError("unknown object '" + name + "' in object_name");
    for (const auto& t : control_points) check_frames(t, number_frames);
    for (const auto& t : object_points) check_frames(t, number_frames);
    for (const auto& t : object_points)
        if (t.waypoints.empty())
            throw ProtocolError("each manipulated object needs waypoints");

    std::set<std::string> manipulated(object_name.begin(), object_name.end());

    // Placement stand-off: a pelvis waypoint that lands on top of the placed
    // object is moved to arm's reach behind it, along the approach direction.
    std::vector<ControlTrack> joints_adjusted = control_points;
    const ControlTrack& obj0 = object_points[0];
    for (size_t i = 0; i < control_joints.size(); ++i) {
        if (control_joints[i] != "pelvis" || joints_adjusted[i].waypoints.empty())
            continue;
        Waypoint& final_wp = joints_adjusted[i].waypoints.back();
        if (obj0.waypoints.size() < 2) continue;
        const Vec3 obj_final = obj0.waypoints.back().position;
        const Vec3 obj_prev = obj0.waypoints[obj0.waypoints.size() - 2].position;
        Vec3 approach = obj_final - obj_prev;
        approach.z = 0;
        double horiz = std::hypot(final_wp.position.x - obj_final.x,
                                  final_wp.position.y - obj_final.y);
        if (horiz < opts.place_standoff && approach.norm_xy() > 1e-9) {
            Vec3 dir = approach / approach.norm_xy();
            final_wp.position.x = obj_final.x - opts.place_standoff * dir.x;
            final_wp.position.y = obj_final.y - opts.place_standoff * dir.y;
        }
    }

    BodyChannels body = build_body(scene, control_joints, joints_adjusted, number_frames);
    MotionClip clip = assemble_clip(scene, body, number_frames);

    ExecutionResult result;
    for (size_t i = 0; i < control_joints.size(); ++i) {
        ControlTrack t = joints_adjusted[i];
        t.joint_or_object = control_joints[i];
        result.control_tracks.push_back(t);
    }

    for (size_t oi = 0; oi < object_name.size(); ++oi) {
        const ObjectState& obj = *scene.find(object_name[oi]);
        ControlTrack track = object_points[oi];
        track.joint_or_object = object_name[oi];
        int grasp_frame = track.waypoints.front().frame;

        ControlTrack dense_in = track;
        if (!dense_in.waypoints.front().orientation)
            dense_in.waypoints.front().orientation = obj.box.orientation;
        if (dense_in.waypoints.size() == 1) {
            Waypoint w = dense_in.waypoints.front();
            w.frame = number_frames > grasp_frame ? number_frames : grasp_frame + 1;
            dense_in.waypoints.push_back(w);
        }
        DenseTrack moved = pchip_densify(dense_in);

        // Full-clip object channel: static at the initial pose before the
        // grasp, tracked while controlled, held at the final pose afterwards.
        DenseTrack full;
        full.start_frame = 0;
        full.positions.resize(number_frames + 1);
        full.orientations.resize(number_frames + 1);
        for (int f = 0; f <= number_frames; ++f) {
            if (f < grasp_frame) {
                full.positions[f] = obj.box.center;
                full.orientations[f] = obj.box.orientation.quat;
            } else if (f <= moved.end_frame()) {
                full.positions[f] = moved.position_at(f);
                full.orientations[f] = moved.orientation_at(f);
            } else {
                full.positions[f] = moved.positions.back();
                full.orientations[f] = moved.orientations.back();
            }
        }

        // Contact points frozen in the object frame at the grasp moment.
        OrientedBox grasp_box = obj.box;
        grasp_box.center = full.positions[grasp_frame];
        auto surface = box_surface_points(grasp_box, opts.surface_step);
        std::pair<Vec3, Vec3> hands_at_grasp = {
            body.left.positions[grasp_frame], body.right.positions[grasp_frame]};
        auto contacts = sample_contact_points(surface, hands_at_grasp);
        Mat3 axes = grasp_box.axes();
        auto to_local = [&](const Vec3& world) {
            Vec3 d = world - grasp_box.center;
            return Vec3{d.dot(axes.col0), d.dot(axes.col1), d.dot(axes.col2)};
        };
        GraspEvent ev;
        ev.object = object_name[oi];
        ev.frame = grasp_frame;
        ev.contact_local_left = to_local(contacts.first);
        ev.contact_local_right = to_local(contacts.second);
        clip.grasp_events.push_back(ev);

        auto [left_track, right_track] = hand_tracks_from_object(
            full, {ev.contact_local_left, ev.contact_local_right});
        // One object: both hands grasp it. Several: hand oi rides object oi.
        bool attach_left = object_name.size() == 1 || oi % 2 == 0;
        bool attach_right = object_name.size() == 1 || oi % 2 == 1;
        for (int f = grasp_frame; f <= number_frames; ++f) {
            if (attach_left && !body.left_controlled)
                clip.frames[f].left_hand = left_track.positions[f];
            if (attach_right && !body.right_controlled)
                clip.frames[f].right_hand = right_track.positions[f];
        }

        clip.object_tracks[object_name[oi]] = full;
        result.control_tracks.push_back(track);

        ValidateOptions vo;
        vo.margin = opts.safety_margin;
        vo.endpoint_relax_radius = opts.safety_margin;
        vo.ignore = manipulated;
        result.collision_reports.push_back(
            validate_track(obj.box, track, scene, vo));
        vo.margin = opts.hard_margin;
        vo.endpoint_relax_radius = 0.0;
        result.hard_collision_reports.push_back(
            validate_track(obj.box, track, scene, vo));
    }

    for (size_t i = 0; i < control_joints.size(); ++i) {
        if (control_joints[i] == "pelvis" && joints_adjusted[i].waypoints.size() >= 2) {
            result.collision_reports.push_back(validate_human(
                scene, joints_adjusted[i], manipulated, opts.safety_margin,
                opts.safety_margin));
            result.hard_collision_reports.push_back(validate_human(
                scene, joints_adjusted[i], manipulated, opts.hard_margin, 0.0));
        }
    }

    result.clip = std::move(clip);
    result.final_scene = final_scene_from(scene, result.clip);
    return result;
}

SceneState apply_result(const SceneState& scene, const ExecutionResult& result) {
    (void)scene;
    return result.final_scene;
}

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt6(const Vec3& v) {
    return fmt6(v.x) + " " + fmt6(v.y) + " " + fmt6(v.z);
}

std::string fmt6(const Quat& q) {
    return fmt6(q.w) + " " + fmt6(q.x) + " " + fmt6(q.y) + " " + fmt6(q.z);
}

}  // namespace

void save_clip(const MotionClip& clip, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write clip file: " + path);
    out << "HOI-CLIP 1 " << clip.backend << "\n";
    out << "fps " << clip.fps << "\n";
    out << "frames " << clip.start_frame << " " << clip.end_frame() << "\n";
    out << "objects";
    for (const auto& [name, track] : clip.object_tracks) out << " " << name;
    out << "\n";
    for (const auto& ev : clip.grasp_events)
        out << "grasp " << ev.object << " " << ev.frame << " "
            << fmt6(ev.contact_local_left) << " " << fmt6(ev.contact_local_right)
            << "\n";
    for (int f = clip.start_frame; f <= clip.end_frame(); ++f) {
        const FramePose& p = clip.at(f);
        out << "F " << f << " " << fmt6(p.pelvis) << " " << fmt6(p.left_hand)
            << " " << fmt6(p.right_hand) << " " << fmt6(p.orientation) << "\n";
    }
    for (const auto& [name, track] : clip.object_tracks)
        for (int f = track.start_frame; f <= track.end_frame(); ++f)
            out << "O " << f << " " << name << " " << fmt6(track.position_at(f))
                << " " << fmt6(track.orientation_at(f)) << "\n";
}

MotionClip load_clip(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open clip file: " + path);
    MotionClip clip;
    std::string line;
    if (!std::getline(in, line) || line.rfind("HOI-CLIP 1", 0) != 0)
        throw std::runtime_error("not a clip file: " + path);
    {
        std::istringstream h(line);
        std::string magic, version;
        h >> magic >> version >> clip.backend;
    }
    int start = 0, end = -1;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "fps") {
            ls >> clip.fps;
        } else if (tag == "frames") {
            ls >> start >> end;
            clip.start_frame = start;
            clip.frames.resize(end - start + 1);
        } else if (tag == "objects") {
            std::string name;
            while (ls >> name) clip.object_tracks[name] = DenseTrack{};
        } else if (tag == "grasp") {
            GraspEvent ev;
            ls >> ev.object >> ev.frame >> ev.contact_local_left.x >>
                ev.contact_local_left.y >> ev.contact_local_left.z >>
                ev.contact_local_right.x >> ev.contact_local_right.y >>
                ev.contact_local_right.z;
            clip.grasp_events.push_back(ev);
        } else if (tag == "F") {
            int f;
            FramePose p;
            ls >> f >> p.pelvis.x >> p.pelvis.y >> p.pelvis.z >> p.left_hand.x >>
                p.left_hand.y >> p.left_hand.z >> p.right_hand.x >>
                p.right_hand.y >> p.right_hand.z >> p.orientation.w >>
                p.orientation.x >> p.orientation.y >> p.orientation.z;
            clip.frames.at(f - start) = p;
        } else if (tag == "O") {
            int f;
            std::string name;
            Vec3 pos;
            Quat q;
            ls >> f >> name >> pos.x >> pos.y >> pos.z >> q.w >> q.x >> q.y >> q.z;
            DenseTrack& t = clip.object_tracks.at(name);
            if (t.positions.empty()) t.start_frame = f;
            t.positions.push_back(pos);
            t.orientations.push_back(q);
        } else if (!tag.empty()) {
            throw std::runtime_error("unknown clip record: " + tag);
        }
    }
    if (end < start) throw std::runtime_error("clip file missing frame range");
    return clip;
}

}  // namespace hoi
