#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hoi/executor.hpp"
#include "hoi/scene.hpp"

using namespace hoi;

namespace {

SceneState load_fixture_scene() {
    std::ifstream f("fixtures/floorlamp_scene.txt");
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_scene_text(ss.str());
}

ControlTrack make_track(std::vector<std::pair<int, Vec3>> rows) {
    ControlTrack t;
    for (auto& [f, p] : rows) t.waypoints.push_back({f, p, std::nullopt});
    return t;
}

SceneState simple_scene() {
    SceneState scene;
    scene.human.pelvis = {0, 0, 0.89};
    scene.human.left_hand = {0.25, 0.1, 0.9};
    scene.human.right_hand = {-0.25, 0.1, 0.9};
    ObjectState box;
    box.name = "crate";
    box.box.center = {1.5, 0.0, 0.3};
    box.box.sizes = {0.4, 0.4, 0.6};
    scene.objects.push_back(box);
    return scene;
}

}  // namespace

TEST_CASE("the sixty-frame walk reaches its target exactly") {
    SceneState scene = load_fixture_scene();
    scene.human.pelvis = {5.0427, -3.9485, 0.8897};
    ControlTrack pelvis = make_track(
        {{0, {5.0427, -3.9485, 0.8897}}, {60, {4.8350, -3.8000, 0.8897}}});
    ExecutionResult result =
        generate_motion(scene, {"pelvis"}, {pelvis}, "walk", 60, 0);
    REQUIRE(result.clip.frames.size() == 61);
    CHECK((result.clip.frames.back().pelvis - Vec3{4.8350, -3.8000, 0.8897}).norm() <
          1e-9);
    CHECK((result.clip.frames.front().pelvis - scene.human.pelvis).norm() < 1e-9);
    CHECK(result.final_scene.human.pelvis.x == doctest::Approx(4.8350));
}

TEST_CASE("controlled joints pass through every waypoint exactly") {
    SceneState scene = simple_scene();
    ControlTrack pelvis = make_track({{0, {0, 0, 0.89}},
                                      {25, {0.7, 0.4, 0.89}},
                                      {60, {1.3, -0.2, 0.89}},
                                      {90, {0.4, -0.9, 0.89}}});
    ExecutionResult result =
        generate_motion(scene, {"pelvis"}, {pelvis}, "walk around", 90, 0);
    for (const auto& w : pelvis.waypoints)
        CHECK((result.clip.at(w.frame).pelvis - w.position).norm() < 1e-12);
    CHECK(result.clip.frames.size() == 91);
}

TEST_CASE("a repeated single pose yields a stationary clip") {
    SceneState scene = simple_scene();
    ControlTrack pelvis = make_track({{0, {0, 0, 0.89}}, {40, {0, 0, 0.89}}});
    ExecutionResult result = generate_motion(scene, {"pelvis"}, {pelvis}, "", 40, 0);
    for (const auto& frame : result.clip.frames)
        CHECK((frame.pelvis - Vec3{0, 0, 0.89}).norm() < 1e-12);
}

TEST_CASE("a 1.2 m straight move over 30 frames averages 1.2 m/s") {
    SceneState scene = simple_scene();
    ControlTrack pelvis = make_track({{0, {0, 0, 0.89}}, {30, {0, 1.2, 0.89}}});
    ExecutionResult result = generate_motion(scene, {"pelvis"}, {pelvis}, "", 30, 0);
    double dist = 0;
    for (size_t f = 1; f < result.clip.frames.size(); ++f)
        dist += (result.clip.frames[f].pelvis - result.clip.frames[f - 1].pelvis).norm();
    double speed = dist / (30.0 / result.clip.fps);
    CHECK(speed == doctest::Approx(1.2).epsilon(0.02));
}

TEST_CASE("protocol errors carry the planner-facing messages") {
    SceneState scene = simple_scene();
    ControlTrack t = make_track({{0, {0, 0, 0.89}}, {40, {1, 0, 0.89}}});

    CHECK_THROWS_WITH_AS(
        generate_motion(scene, {"crate"}, {t}, "", 40, 0),
        "'crate' is an object. Do not put object name in control_joints; use "
        "object_name instead.",
        ProtocolError);

    CHECK_THROWS_AS(generate_motion(scene, {"elbow"}, {t}, "", 40, 0), ProtocolError);

    try {
        generate_motion(scene, {"pelvis"}, {t}, "", 20, 0);
        FAIL("expected a frame-range error");
    } catch (const ProtocolError& e) {
        CHECK(std::string(e.what()).find(
                  "number_frames should be larger or equal to the largest "
                  "frame_id") != std::string::npos);
    }

    CHECK_THROWS_AS(generate_motion(scene, {"pelvis"}, {t}, "", 0, 0), ProtocolError);
}

TEST_CASE("interaction clips carry the object rigidly with its hands") {
    SceneState scene = simple_scene();
    ControlTrack pelvis = make_track({{0, {0, 0, 0.89}}, {30, {1.0, 0, 0.89}},
                                      {90, {1.0, 2.0, 0.89}}});
    ControlTrack crate = make_track({{30, {1.5, 0, 0.3}}, {90, {1.5, 2.0, 0.3}}});
    ExecutionResult result = generate_interaction(
        scene, {"pelvis"}, {pelvis}, "carry the crate", 90, 1, {"crate"}, {crate});

    REQUIRE(result.clip.grasp_events.size() == 1);
    const GraspEvent& grasp = result.clip.grasp_events[0];
    CHECK(grasp.object == "crate");
    CHECK(grasp.frame == 30);

    const DenseTrack& obj = result.clip.object_tracks.at("crate");
    // Before the grasp the object rests; afterwards it follows its waypoints.
    CHECK((obj.positions[0] - Vec3{1.5, 0, 0.3}).norm() < 1e-12);
    CHECK((obj.positions[90] - Vec3{1.5, 2.0, 0.3}).norm() < 1e-12);

    // Hand-to-object distance stays constant from grasp to the final frame.
    double dl0 = (result.clip.at(30).left_hand - obj.positions[30]).norm();
    double dr0 = (result.clip.at(30).right_hand - obj.positions[30]).norm();
    for (int f = 30; f <= 90; ++f) {
        CHECK(std::fabs((result.clip.at(f).left_hand - obj.positions[f]).norm() - dl0) <
              1e-9);
        CHECK(std::fabs((result.clip.at(f).right_hand - obj.positions[f]).norm() - dr0) <
              1e-9);
    }

    // Final scene reflects the object's last pose.
    CHECK((result.final_scene.find("crate")->box.center - Vec3{1.5, 2.0, 0.3}).norm() <
          1e-12);
}

TEST_CASE("interaction validation reports both clearance and hard tiers") {
    SceneState scene = simple_scene();
    ObjectState wall;
    wall.name = "wall";
    wall.box.center = {1.5, 1.0, 1.0};
    wall.box.sizes = {3.0, 0.1, 2.0};
    scene.objects.push_back(wall);

    ControlTrack pelvis = make_track({{0, {0, 0, 0.89}}, {90, {0.4, 0, 0.89}}});
    ControlTrack crate = make_track({{0, {1.5, 0, 0.3}}, {90, {1.5, 2.0, 0.3}}});
    ExecutionResult result = generate_interaction(
        scene, {"pelvis"}, {pelvis}, "push through the wall", 90, 1, {"crate"},
        {crate});
    CHECK(result.any_collision());
    CHECK(result.any_hard_collision("crate"));
    CHECK_FALSE(result.any_hard_collision("human"));
}

TEST_CASE("execution is deterministic") {
    SceneState scene = simple_scene();
    ControlTrack pelvis = make_track({{0, {0, 0, 0.89}}, {60, {1.0, 0.5, 0.89}}});
    ControlTrack crate = make_track({{20, {1.5, 0, 0.3}}, {60, {1.0, 1.0, 0.5}}});
    auto run = [&] {
        return generate_interaction(scene, {"pelvis"}, {pelvis}, "", 60, 1, {"crate"},
                                    {crate});
    };
    ExecutionResult a = run(), b = run();
    REQUIRE(a.clip.frames.size() == b.clip.frames.size());
    for (size_t f = 0; f < a.clip.frames.size(); ++f) {
        CHECK((a.clip.frames[f].pelvis - b.clip.frames[f].pelvis).norm() == 0.0);
        CHECK((a.clip.frames[f].left_hand - b.clip.frames[f].left_hand).norm() == 0.0);
    }
}

TEST_CASE("apply_result yields the execution's final scene") {
    SceneState scene = simple_scene();
    ControlTrack pelvis = make_track({{0, {0, 0, 0.89}}, {40, {0.5, 0.5, 0.89}}});
    ExecutionResult result = generate_motion(scene, {"pelvis"}, {pelvis}, "", 40, 0);
    SceneState next = apply_result(scene, result);
    CHECK((next.human.pelvis - result.final_scene.human.pelvis).norm() == 0.0);

    // A stationary clip leaves the scene unchanged.
    ControlTrack still = make_track({{0, {0, 0, 0.89}}, {10, {0, 0, 0.89}}});
    ExecutionResult idle = generate_motion(scene, {"pelvis"}, {still}, "", 10, 0);
    CHECK((apply_result(scene, idle).human.pelvis - scene.human.pelvis).norm() < 1e-12);
}

TEST_CASE("box surface sampling is deterministic and covers all faces") {
    OrientedBox box;
    box.center = {1, 2, 3};
    box.sizes = {0.4, 0.6, 0.8};
    auto points = box_surface_points(box, 0.1);
    auto again = box_surface_points(box, 0.1);
    REQUIRE(points.size() == again.size());
    CHECK(points.size() > 50);
    for (size_t i = 0; i < points.size(); ++i)
        CHECK((points[i] - again[i]).norm() == 0.0);
    Vec3 h = box.half();
    for (const auto& p : points) {
        Vec3 d = p - box.center;
        bool on_face = std::fabs(std::fabs(d.x) - h.x) < 1e-9 ||
                       std::fabs(std::fabs(d.y) - h.y) < 1e-9 ||
                       std::fabs(std::fabs(d.z) - h.z) < 1e-9;
        CHECK(on_face);
    }
}

TEST_CASE("clip files round-trip bit-exactly at print precision") {
    SceneState scene = simple_scene();
    ControlTrack pelvis = make_track({{0, {0, 0, 0.89}}, {30, {1.0, 0, 0.89}},
                                      {60, {1.0, 1.0, 0.89}}});
    ControlTrack crate = make_track({{30, {1.5, 0, 0.3}}, {60, {1.2, 1.0, 0.4}}});
    ExecutionResult result = generate_interaction(scene, {"pelvis"}, {pelvis}, "", 60,
                                                  1, {"crate"}, {crate});
    std::string path = "/tmp/hoi_test_clip.txt";
    save_clip(result.clip, path);
    MotionClip loaded = load_clip(path);

    CHECK(loaded.fps == result.clip.fps);
    CHECK(loaded.backend == result.clip.backend);
    REQUIRE(loaded.frames.size() == result.clip.frames.size());
    REQUIRE(loaded.grasp_events.size() == 1);
    CHECK(loaded.grasp_events[0].frame == result.clip.grasp_events[0].frame);
    for (size_t f = 0; f < loaded.frames.size(); ++f)
        CHECK((loaded.frames[f].pelvis - result.clip.frames[f].pelvis).norm() < 1e-6);
    REQUIRE(loaded.object_tracks.count("crate"));

    // A second save of the loaded clip is byte-identical.
    std::string path2 = "/tmp/hoi_test_clip2.txt";
    save_clip(loaded, path2);
    std::ifstream f1(path), f2(path2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    std::remove(path.c_str());
    std::remove(path2.c_str());
}
