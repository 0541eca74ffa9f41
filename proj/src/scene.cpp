#include "hoi/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace hoi {

void OrientedBox::validate() const {
    if (!center.finite() || !sizes.finite())
        throw std::invalid_argument("box has non-finite components");
    if (sizes.x <= 0 || sizes.y <= 0 || sizes.z <= 0)
        throw std::invalid_argument("box sizes must be positive");
}

void HumanState::validate() const {
    if (body_volume.x <= 0 || body_volume.y <= 0 || body_volume.z <= 0)
        throw std::invalid_argument("human body volume must be positive");
    if ((left_hand - pelvis).norm() >= 1.5 || (right_hand - pelvis).norm() >= 1.5)
        throw std::invalid_argument("hand-to-pelvis distance exceeds sanity bound");
}

const ObjectState* SceneState::find(const std::string& name) const {
    for (const auto& o : objects)
        if (o.name == name) return &o;
    return nullptr;
}

void SceneState::validate() const {
    human.validate();
    std::unordered_set<std::string> seen;
    for (const auto& o : objects) {
        if (o.name.empty()) throw std::invalid_argument("object name empty");
        if (!seen.insert(o.name).second)
            throw std::invalid_argument("duplicate object name: " + o.name);
        o.box.validate();
    }
}

std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    std::string s(buf);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.push_back('0');
    return s;
}

std::string format_vec(const Vec3& v) {
    return "[" + format_coord(v.x) + ", " + format_coord(v.y) + ", " +
           format_coord(v.z) + "]";
}

namespace {

struct LineReader {
    std::istringstream in;
    std::string line;
    int lineno = 0;
    bool pending = false;

    explicit LineReader(const std::string& text) : in(text) {}

    bool next() {
        if (pending) {
            pending = false;
            return true;
        }
        while (std::getline(in, line)) {
            ++lineno;
            // trim
            size_t a = line.find_first_not_of(" \t\r\"");
            size_t b = line.find_last_not_of(" \t\r\"");
            line = (a == std::string::npos) ? "" : line.substr(a, b - a + 1);
            if (!line.empty()) return true;
        }
        return false;
    }

    void push_back() { pending = true; }

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error("scene text line " + std::to_string(lineno) +
                                 ": " + what + ": " + line);
    }
};

Vec3 parse_bracket_vec(LineReader& r, const std::string& after_key) {
    size_t open = after_key.find('[');
    size_t close = after_key.find(']');
    if (open == std::string::npos || close == std::string::npos || close < open)
        r.fail("expected [x, y, z]");
    std::string body = after_key.substr(open + 1, close - open - 1);
    for (auto& c : body)
        if (c == ',') c = ' ';
    std::istringstream vs(body);
    Vec3 v;
    if (!(vs >> v.x >> v.y >> v.z)) r.fail("could not parse three numbers");
    double extra;
    if (vs >> extra) r.fail("more than three numbers");
    return v;
}

// Returns the remainder of the line after a "key:" prefix, or nullopt.
bool strip_key(const std::string& line, const std::string& key, std::string* rest) {
    if (line.rfind(key, 0) != 0) return false;
    *rest = line.substr(key.size());
    return true;
}

}  // namespace

SceneState parse_scene_text(const std::string& text) {
    SceneState scene;
    bool have_human = false;
    LineReader r(text);
    while (r.next()) {
        const std::string& l = r.line;
        if (l.rfind("***", 0) != 0) {
            // Tolerate the log's surrounding prose (e.g. "<CURRENT ENVIRONMENT STATE>:").
            if (l.find("ENVIRONMENT STATE") != std::string::npos) continue;
            if (l.rfind("...", 0) == 0) continue;
            r.fail("expected a ***name***: block header");
        }
        size_t end = l.find("***", 3);
        if (end == std::string::npos || l.find(':', end) == std::string::npos)
            r.fail("malformed block header");
        std::string name = l.substr(3, end - 3);
        if (name.empty()) r.fail("empty block name");

        std::string rest;
        if (name == "human") {
            HumanState h;
            bool saw_ori = false;
            int fields = 0;
            while (r.next()) {
                if (r.line.rfind("***", 0) == 0) {
                    r.push_back();
                    break;
                }
                if (strip_key(r.line, "pelvis position:", &rest))
                    h.pelvis = parse_bracket_vec(r, rest), ++fields;
                else if (strip_key(r.line, "left hand position:", &rest))
                    h.left_hand = parse_bracket_vec(r, rest), ++fields;
                else if (strip_key(r.line, "right hand position:", &rest))
                    h.right_hand = parse_bracket_vec(r, rest), ++fields;
                else if (strip_key(r.line, "orientation:", &rest)) {
                    Vec3 e = parse_bracket_vec(r, rest);
                    h.orientation = Orientation(e.x, e.y, e.z);
                    saw_ori = true;
                } else
                    r.fail("unknown human field");
            }
            if (fields != 3 || !saw_ori) r.fail("incomplete human block");
            scene.human = h;
            have_human = true;
        } else {
            ObjectState obj;
            obj.name = name;
            bool pos = false, ori = false, siz = false;
            while (r.next()) {
                if (r.line.rfind("***", 0) == 0) {
                    r.push_back();
                    break;
                }
                if (strip_key(r.line, "position:", &rest))
                    obj.box.center = parse_bracket_vec(r, rest), pos = true;
                else if (strip_key(r.line, "orientation:", &rest)) {
                    Vec3 e = parse_bracket_vec(r, rest);
                    obj.box.orientation = Orientation(e.x, e.y, e.z);
                    ori = true;
                } else if (strip_key(r.line, "sizes:", &rest))
                    obj.box.sizes = parse_bracket_vec(r, rest), siz = true;
                else
                    r.fail("unknown object field");
            }
            if (!pos || !ori || !siz) r.fail("incomplete object block for " + name);
            if (scene.find(obj.name))
                throw std::runtime_error("duplicate object name: " + obj.name);
            scene.objects.push_back(obj);
        }
    }
    if (!have_human) throw std::runtime_error("scene text has no human block");
    scene.validate();
    return scene;
}

std::string emit_scene_text(const SceneState& scene) {
    std::ostringstream out;
    out << "***human***:\n";
    out << "pelvis position: " << format_vec(scene.human.pelvis) << "\n";
    out << "left hand position: " << format_vec(scene.human.left_hand) << "\n";
    out << "right hand position: " << format_vec(scene.human.right_hand) << "\n";
    out << "orientation: "
        << format_vec({scene.human.orientation.rx, scene.human.orientation.ry,
                       scene.human.orientation.rz})
        << "\n";
    for (const auto& o : scene.objects) {
        out << "***" << o.name << "***:\n";
        out << "position: " << format_vec(o.box.center) << "\n";
        out << "orientation: "
            << format_vec({o.box.orientation.rx, o.box.orientation.ry,
                           o.box.orientation.rz})
            << "\n";
        out << "sizes: " << format_vec(o.box.sizes) << "\n";
    }
    return out.str();
}

OrientedBox inflate_box(const OrientedBox& box, double margin) {
    OrientedBox out = box;
    out.sizes = box.sizes + Vec3{2 * margin, 2 * margin, 2 * margin};
    // A negative margin shrinks the box; extents never cross zero.
    out.sizes.x = std::max(out.sizes.x, 1e-9);
    out.sizes.y = std::max(out.sizes.y, 1e-9);
    out.sizes.z = std::max(out.sizes.z, 1e-9);
    return out;
}

OrientedBox human_box(const HumanState& human, double margin) {
    OrientedBox box;
    box.center = {human.pelvis.x, human.pelvis.y, human.body_volume.z * 0.5};
    box.orientation = Orientation(0.0, 0.0, human.orientation.yaw());
    box.sizes = human.body_volume + Vec3{2 * margin, 2 * margin, 2 * margin};
    return box;
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return {v.x, v.y, v.z}; }

Vec3 vec_from_json(const nlohmann::json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

SceneState load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file: " + path);
    nlohmann::json j;
    in >> j;
    SceneState scene;
    const auto& h = j.at("human");
    scene.human.pelvis = vec_from_json(h.at("pelvis"));
    scene.human.left_hand = vec_from_json(h.at("left_hand"));
    scene.human.right_hand = vec_from_json(h.at("right_hand"));
    Vec3 e = vec_from_json(h.at("orientation"));
    scene.human.orientation = Orientation(e.x, e.y, e.z);
    if (h.contains("body_volume"))
        scene.human.body_volume = vec_from_json(h.at("body_volume"));
    for (const auto& oj : j.at("objects")) {
        ObjectState o;
        o.name = oj.at("name").get<std::string>();
        o.box.center = vec_from_json(oj.at("position"));
        Vec3 oe = vec_from_json(oj.at("orientation"));
        o.box.orientation = Orientation(oe.x, oe.y, oe.z);
        o.box.sizes = vec_from_json(oj.at("sizes"));
        scene.objects.push_back(o);
    }
    scene.validate();
    return scene;
}

void save_scene_file(const SceneState& scene, const std::string& path) {
    nlohmann::json j;
    j["human"] = {
        {"pelvis", vec_json(scene.human.pelvis)},
        {"left_hand", vec_json(scene.human.left_hand)},
        {"right_hand", vec_json(scene.human.right_hand)},
        {"orientation", vec_json({scene.human.orientation.rx,
                                  scene.human.orientation.ry,
                                  scene.human.orientation.rz})},
        {"body_volume", vec_json(scene.human.body_volume)},
    };
    j["objects"] = nlohmann::json::array();
    for (const auto& o : scene.objects) {
        j["objects"].push_back({
            {"name", o.name},
            {"position", vec_json(o.box.center)},
            {"orientation", vec_json({o.box.orientation.rx, o.box.orientation.ry,
                                      o.box.orientation.rz})},
            {"sizes", vec_json(o.box.sizes)},
        });
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scene file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace hoi
