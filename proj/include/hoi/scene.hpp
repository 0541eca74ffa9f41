#pragma once

#include <string>
#include <vector>

#include "hoi/geom.hpp"

namespace hoi {

// Cuboid with arbitrary rotation; sizes are full extents (x width, y length, z height).
struct OrientedBox {
    Vec3 center;
    Orientation orientation;
    Vec3 sizes;

    Vec3 half() const { return sizes * 0.5; }
    Mat3 axes() const { return Mat3::from_quat(orientation.quat); }
    void validate() const;
};

struct ObjectState {
    std::string name;
    OrientedBox box;
};

struct HumanState {
    Vec3 pelvis;
    Vec3 left_hand;
    Vec3 right_hand;
    Orientation orientation;
    Vec3 body_volume{0.5, 0.4, 1.7};

    void validate() const;
};

struct SceneState {
    HumanState human;
    std::vector<ObjectState> objects;

    const ObjectState* find(const std::string& name) const;
    void validate() const;
};

// Environment-state text block format, as exchanged with the planner.
SceneState parse_scene_text(const std::string& text);
std::string emit_scene_text(const SceneState& scene);

// Fixed-point number formatting used by the environment text (3 decimals,
// trailing zeros trimmed down to one decimal digit, matching the planner log).
std::string format_coord(double v);
std::string format_vec(const Vec3& v);

// Grows each full extent by 2*margin (negative margin shrinks, clamped above
// zero); center and orientation unchanged.
OrientedBox inflate_box(const OrientedBox& box, double margin);

// Upright body volume standing on the ground plane at the pelvis's horizontal
// position, inflated by margin. Pelvis z is ignored for vertical placement.
OrientedBox human_box(const HumanState& human, double margin);

// Structured scene file (JSON) mirroring the same fields, for programmatic use.
SceneState load_scene_file(const std::string& path);
void save_scene_file(const SceneState& scene, const std::string& path);

}  // namespace hoi
