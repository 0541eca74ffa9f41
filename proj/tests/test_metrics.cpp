#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hoi/executor.hpp"
#include "hoi/metrics.hpp"
#include "hoi/scene.hpp"

using namespace hoi;

namespace {

DenseTrack hand_at(std::vector<Vec3> positions) {
    DenseTrack t;
    t.positions = std::move(positions);
    t.orientations.assign(t.positions.size(), Quat{});
    return t;
}

MotionClip flat_walk_clip(int frames, double pelvis_z, double step_x) {
    MotionClip clip;
    for (int i = 0; i < frames; ++i) {
        FramePose p;
        p.pelvis = {step_x * i, 0.0, pelvis_z};
        p.left_hand = p.pelvis + Vec3{0.25, 0.1, 0.0};
        p.right_hand = p.pelvis + Vec3{-0.25, 0.1, 0.0};
        clip.frames.push_back(p);
    }
    return clip;
}

}  // namespace

// ---------------------------------------------------------------------------
// Contact labels and precision/recall

TEST_CASE("contact labels flip at the five-centimeter threshold") {
    std::vector<std::vector<Vec3>> mesh = {{{0, 0, 0}}, {{0, 0, 0}}, {{0, 0, 0}}};
    DenseTrack hand = hand_at({{0.03, 0, 0}, {0.07, 0, 0}, {0.05, 0, 0}});
    auto labels = contact_labels(hand, mesh);
    REQUIRE(labels.size() == 3);
    CHECK(labels[0] == 1);
    CHECK(labels[1] == 0);
    CHECK(labels[2] == 1);
}

TEST_CASE("a hand exactly on a vertex is contact even at threshold zero") {
    std::vector<std::vector<Vec3>> mesh = {{{1, 2, 3}, {4, 5, 6}}};
    auto labels = contact_labels(hand_at({{4, 5, 6}}), mesh, 0.0);
    CHECK(labels[0] == 1);
}

TEST_CASE("contact labelling rejects bad inputs") {
    CHECK_THROWS(contact_labels(hand_at({{0, 0, 0}}), {{}}));
    CHECK_THROWS(contact_labels(hand_at({{0, 0, 0}}), {{{0, 0, 0}}, {{0, 0, 0}}}));
}

TEST_CASE("the four-frame confusion example scores one half across the board") {
    ContactSeries s;
    s.predicted = {1, 1, 0, 0};
    s.reference = {1, 0, 1, 0};
    ContactScores sc = contact_prf(s);
    CHECK(sc.precision == doctest::Approx(0.5));
    CHECK(sc.recall == doctest::Approx(0.5));
    CHECK(sc.f1 == doctest::Approx(0.5));
    CHECK(sc.percent == doctest::Approx(0.5));
}

TEST_CASE("identical series with positives score a perfect one") {
    ContactSeries s;
    s.predicted = {0, 1, 1, 0, 1};
    s.reference = s.predicted;
    ContactScores sc = contact_prf(s);
    CHECK(sc.precision == 1.0);
    CHECK(sc.recall == 1.0);
    CHECK(sc.f1 == 1.0);
    CHECK(sc.percent == doctest::Approx(0.6));
}

TEST_CASE("empty-positive conventions default the undefined scores to one") {
    ContactSeries none;
    none.predicted = {0, 0, 0};
    none.reference = {0, 0, 0};
    ContactScores sc = contact_prf(none);
    CHECK(sc.precision == 1.0);
    CHECK(sc.recall == 1.0);
    CHECK(sc.f1 == 1.0);
    CHECK(sc.percent == 0.0);

    ContactSeries no_pred;
    no_pred.predicted = {0, 0};
    no_pred.reference = {1, 0};
    CHECK(contact_prf(no_pred).precision == 1.0);
    CHECK(contact_prf(no_pred).recall == doctest::Approx(0.0));

    ContactSeries no_ref;
    no_ref.predicted = {1, 0};
    no_ref.reference = {0, 0};
    CHECK(contact_prf(no_ref).recall == 1.0);
    CHECK(contact_prf(no_ref).precision == doctest::Approx(0.0));
}

TEST_CASE("random contact series match a direct confusion count") {
    std::mt19937 rng(301);
    std::bernoulli_distribution coin(0.3);
    for (int trial = 0; trial < 500; ++trial) {
        size_t n = 1 + rng() % 40;
        ContactSeries s;
        for (size_t i = 0; i < n; ++i) {
            s.predicted.push_back(coin(rng) ? 1 : 0);
            s.reference.push_back(coin(rng) ? 1 : 0);
        }
        double tp = 0, fp = 0, fn = 0, pos = 0;
        for (size_t i = 0; i < n; ++i) {
            if (s.predicted[i]) ++pos;
            if (s.predicted[i] && s.reference[i]) ++tp;
            if (s.predicted[i] && !s.reference[i]) ++fp;
            if (!s.predicted[i] && s.reference[i]) ++fn;
        }
        ContactScores sc = contact_prf(s);
        double prec = (tp + fp) == 0 ? 1.0 : tp / (tp + fp);
        double rec = (tp + fn) == 0 ? 1.0 : tp / (tp + fn);
        CHECK(sc.precision == doctest::Approx(prec));
        CHECK(sc.recall == doctest::Approx(rec));
        if (prec + rec > 0)
            CHECK(sc.f1 == doctest::Approx(2 * prec * rec / (prec + rec)));
        CHECK(sc.percent == doctest::Approx(pos / double(n)));
    }
}

TEST_CASE("multi-sequence scores average per sequence, not per frame") {
    ContactSeries a;  // perfect, short
    a.predicted = {1};
    a.reference = {1};
    ContactSeries b;  // precision 0.5, long
    b.predicted = std::vector<uint8_t>(100, 1);
    b.reference = std::vector<uint8_t>(100, 0);
    b.reference[0] = 1;
    for (size_t i = 1; i < 50; ++i) b.reference[i] = 1;
    ContactScores sb = contact_prf(b);
    ContactScores avg = contact_prf(std::vector<ContactSeries>{a, b});
    CHECK(avg.precision == doctest::Approx((1.0 + sb.precision) / 2));
    CHECK(avg.recall == doctest::Approx((1.0 + sb.recall) / 2));
    CHECK(avg.f1 == doctest::Approx((1.0 + sb.f1) / 2));
    CHECK(avg.percent == doctest::Approx((1.0 + sb.percent) / 2));
    CHECK_THROWS(contact_prf(std::vector<ContactSeries>{}));
}

// ---------------------------------------------------------------------------
// Signed distance and penetration

TEST_CASE("the box signed distance is exact for an axis-aligned cube") {
    OrientedBox box;
    box.center = {0, 0, 0};
    box.sizes = {2, 2, 2};
    SdfFn d = box_sdf(box);
    CHECK(d({2, 0, 0}) == doctest::Approx(1.0));
    CHECK(d({0, 0, 0}) == doctest::Approx(-1.0));
    CHECK(d({1, 0, 0}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d({0.5, 0.5, 0.5}) == doctest::Approx(-0.5));
    CHECK(d({2, 2, 0}) == doctest::Approx(std::sqrt(2.0)));
    CHECK(d({2, 2, 2}) == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("rotating box and query point together leaves the distance unchanged") {
    OrientedBox plain;
    plain.center = {1, 2, 0.5};
    plain.sizes = {0.8, 0.4, 1.2};
    OrientedBox turned = plain;
    turned.orientation = Orientation(0.3, -0.2, 1.1);
    Mat3 axes = turned.axes();
    SdfFn d0 = box_sdf(plain);
    SdfFn d1 = box_sdf(turned);
    std::mt19937 rng(311);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        Vec3 local{u(rng), u(rng), u(rng)};
        Vec3 plain_point = plain.center + local;
        Vec3 turned_point = turned.center + axes.col0 * local.x +
                            axes.col1 * local.y + axes.col2 * local.z;
        CHECK(d1(turned_point) == doctest::Approx(d0(plain_point)).epsilon(1e-9));
    }
}

TEST_CASE("the voxel grid reproduces the exact distance away from corners") {
    OrientedBox box;
    box.center = {0, 0, 0};
    box.sizes = {1, 1, 1};
    VoxelSdf grid = VoxelSdf::bake(box_sdf(box), {-1, -1, -1}, {1, 1, 1}, 64);
    std::mt19937 rng(317);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    for (int i = 0; i < 500; ++i) {
        Vec3 p{u(rng), u(rng), u(rng)};
        double exact = box_sdf(box)(p);
        CHECK(std::fabs(grid(p) - exact) < 0.01);
    }
    CHECK_THROWS(VoxelSdf::bake(box_sdf(box), {-1, -1, -1}, {1, 1, 1}, 0));
}

TEST_CASE("only penetration deeper than four centimeters counts") {
    OrientedBox box;
    box.center = {0, 0, 0};
    box.sizes = {2, 2, 2};
    SdfFn d = box_sdf(box);
    Vec3 deep = {0.95, 0, 0};     // d = -0.05
    Vec3 shallow = {0.97, 0, 0};  // d = -0.03
    Vec3 outside = {1.1, 0, 0};   // d = +0.1
    CHECK(penetration_score({{deep}}, d) == doctest::Approx(1.0));
    CHECK(penetration_score({{shallow}}, d) == doctest::Approx(0.0));
    CHECK(penetration_score({{outside}}, d) == doctest::Approx(0.0));
    // One violating frame out of four; extra clean vertices do not dilute it.
    CHECK(penetration_score({{deep, outside}, {shallow}, {outside}, {outside}}, d) ==
          doctest::Approx(0.25));
    CHECK(penetration_score({}, d) == 0.0);
}

TEST_CASE("the voxel grid agrees with the exact field on the four-centimeter rule") {
    OrientedBox box;
    box.center = {0, 0, 0};
    box.sizes = {2, 2, 2};
    VoxelSdf grid = VoxelSdf::bake(box_sdf(box), {-1.5, -1.5, -1.5}, {1.5, 1.5, 1.5});
    SdfFn gridded = [&grid](const Vec3& p) { return grid(p); };
    CHECK(penetration_score({{{0.9, 0, 0}}}, gridded) == doctest::Approx(1.0));
    CHECK(penetration_score({{{1.2, 0, 0}}}, gridded) == doctest::Approx(0.0));
}

// ---------------------------------------------------------------------------
// Trajectory metrics

TEST_CASE("success thresholds key off the maximum keyframe error") {
    MotionClip clip = flat_walk_clip(31, 0.89, 0.0);
    ControlTrack t;
    t.joint_or_object = "pelvis";
    t.waypoints.push_back({0, {0, 0, 0.89}, std::nullopt});
    t.waypoints.push_back({30, {0.3, 0, 0.89}, std::nullopt});  // 0.3 m off
    TrajScores s = traj_metrics(clip, {t});
    CHECK(s.max_keyframe_error_m == doctest::Approx(0.3));
    CHECK(s.succ_05 == 1.0);
    CHECK(s.succ_02 == 0.0);
    CHECK(s.traj_err_05 == 0.0);
    CHECK(s.traj_err_02 == 1.0);
    CHECK(s.mpjpe_mm == doctest::Approx(150.0));  // mean of 0 and 300 mm
}

TEST_CASE("a uniform centimeter offset shows up directly in millimeters") {
    MotionClip clip = flat_walk_clip(11, 0.89, 0.0);
    ControlTrack t;
    t.joint_or_object = "pelvis";
    t.waypoints.push_back({0, {0, 0.01, 0.89}, std::nullopt});
    t.waypoints.push_back({10, {0, 0.01, 0.89}, std::nullopt});
    TrajScores s = traj_metrics(clip, {t});
    CHECK(s.mpjpe_mm == doctest::Approx(10.0));
    CHECK(s.succ_02 == 1.0);
}

TEST_CASE("trajectory scoring validates its inputs") {
    MotionClip clip = flat_walk_clip(11, 0.89, 0.0);
    ControlTrack missing;
    missing.joint_or_object = "bookcase";
    missing.waypoints.push_back({0, {0, 0, 0}, std::nullopt});
    CHECK_THROWS(traj_metrics(clip, {missing}));

    ControlTrack out_of_range;
    out_of_range.joint_or_object = "pelvis";
    out_of_range.waypoints.push_back({99, {0, 0, 0}, std::nullopt});
    CHECK_THROWS(traj_metrics(clip, {out_of_range}));

    CHECK_THROWS(traj_metrics(clip, {}));
}

TEST_CASE("executor clips score a zero error against their own control tracks") {
    SceneState scene;
    scene.human.pelvis = {0, 0, 0.89};
    scene.human.left_hand = {0.25, 0.1, 0.9};
    scene.human.right_hand = {-0.25, 0.1, 0.9};
    ControlTrack pelvis;
    pelvis.waypoints.push_back({0, {0, 0, 0.89}, std::nullopt});
    pelvis.waypoints.push_back({40, {1.2, 0.5, 0.89}, std::nullopt});
    ExecutionResult result =
        generate_motion(scene, {"pelvis"}, {pelvis}, "walk", 40, 0);
    TrajScores s = traj_metrics(result.clip, result.control_tracks);
    CHECK(s.mpjpe_mm == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(s.succ_02 == 1.0);
    CHECK(s.max_keyframe_error_m < 1e-9);
}

TEST_CASE("batch trajectory scores average successes across sequences") {
    TrajScores a;
    a.succ_05 = 1.0;
    a.succ_02 = 1.0;
    a.mpjpe_mm = 10.0;
    a.max_keyframe_error_m = 0.1;
    TrajScores b;
    b.succ_05 = 1.0;
    b.succ_02 = 0.0;
    b.mpjpe_mm = 30.0;
    b.max_keyframe_error_m = 0.3;
    TrajScores avg = traj_metrics_batch({a, b});
    CHECK(avg.succ_05 == doctest::Approx(1.0));
    CHECK(avg.succ_02 == doctest::Approx(0.5));
    CHECK(avg.traj_err_02 == doctest::Approx(0.5));
    CHECK(avg.mpjpe_mm == doctest::Approx(20.0));
    CHECK(avg.max_keyframe_error_m == doctest::Approx(0.3));
    CHECK_THROWS(traj_metrics_batch({}));
}

// ---------------------------------------------------------------------------
// Foot metrics

TEST_CASE("grounded walking accrues slide, floating accrues height") {
    // Pelvis at the resting height puts the foot proxy on the ground; each
    // frame advances one centimeter, all of it counted as slide.
    MotionClip grounded = flat_walk_clip(50, 0.89, 0.01);
    FootScores g = foot_metrics(grounded);
    CHECK(g.fs == doctest::Approx(0.01));
    CHECK(g.h_feet == doctest::Approx(0.0).epsilon(1e-12));

    // Three centimeters of float keeps the foot above the contact band, so
    // no slide is charged and the mean height is the float itself.
    MotionClip floating = flat_walk_clip(50, 0.97, 0.01);
    FootScores f = foot_metrics(floating);
    CHECK(f.fs == 0.0);
    CHECK(f.h_feet == doctest::Approx(0.08));

    // A custom ground plane shifts heights accordingly.
    FootScores shifted = foot_metrics(floating, 0.08);
    CHECK(shifted.h_feet == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(shifted.fs == doctest::Approx(0.01));

    CHECK(foot_metrics(MotionClip{}).fs == 0.0);
}

TEST_CASE("a stationary grounded clip has no sliding at all") {
    MotionClip still = flat_walk_clip(30, 0.89, 0.0);
    FootScores s = foot_metrics(still);
    CHECK(s.fs == doctest::Approx(0.0).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// Episode success

namespace {

SceneState lamp_scene(Vec3 lamp_pos, double pelvis_z = 0.89,
                      Orientation lamp_ori = {}) {
    SceneState scene;
    scene.human.pelvis = {3.25, -7.61, pelvis_z};
    scene.human.left_hand = {3.0, -7.5, 0.9};
    scene.human.right_hand = {3.5, -7.5, 0.9};
    ObjectState lamp;
    lamp.name = "floorlamp";
    lamp.box.center = lamp_pos;
    lamp.box.sizes = {0.252, 0.269, 1.761};
    lamp.box.orientation = lamp_ori;
    scene.objects.push_back(lamp);
    return scene;
}

}  // namespace

TEST_CASE("episode success needs completion, placement, and an upright human") {
    EpisodeLog done;
    done.outcome = "completed";
    EpisodeLog bailed;
    bailed.outcome = "error_budget_exhausted";
    TargetPose target{"floorlamp", {2.793, -7.81, 0.899}, std::nullopt};

    CHECK(agent_success(done, lamp_scene({2.793, -7.81, 0.899}), target));
    CHECK(agent_success(done, lamp_scene({2.793 + 0.04, -7.81, 0.899}), target));
    CHECK(!agent_success(done, lamp_scene({2.793 + 0.06, -7.81, 0.899}), target));
    CHECK(!agent_success(bailed, lamp_scene({2.793, -7.81, 0.899}), target));
    CHECK(!agent_success(done, lamp_scene({2.793, -7.81, 0.899}, 0.5), target));
    CHECK(!agent_success(done, lamp_scene({2.793, -7.81, 0.899}, 1.3), target));

    SceneState wrong_object = lamp_scene({2.793, -7.81, 0.899});
    wrong_object.objects[0].name = "torchiere";
    CHECK(!agent_success(done, wrong_object, target));
}

TEST_CASE("orientation tolerance is a tenth of a radian when requested") {
    EpisodeLog done;
    done.outcome = "completed";
    TargetPose target{"floorlamp", {2.793, -7.81, 0.899}, Orientation{}};
    CHECK(agent_success(done,
                        lamp_scene({2.793, -7.81, 0.899}, 0.89,
                                   Orientation(0, 0, 0.05)),
                        target));
    CHECK(!agent_success(done,
                         lamp_scene({2.793, -7.81, 0.899}, 0.89,
                                    Orientation(0, 0, 0.2)),
                         target));
}

TEST_CASE("thirteen wins in twenty episodes is a sixty-five percent rate") {
    std::vector<bool> outcomes(20, false);
    for (int i = 0; i < 13; ++i) outcomes[i] = true;
    CHECK(success_rate(outcomes) == doctest::Approx(0.65));
    CHECK(success_rate({}) == 0.0);
    CHECK(success_rate({true}) == 1.0);
}

TEST_CASE("the report table lists every metric once") {
    MetricsReport report;
    report.traj.mpjpe_mm = 12.5;
    std::string table = report.to_table();
    for (const char* key : {"C_prec", "C_rec", "C_F1", "C_percent", "P_hand",
                            "FS", "H_feet", "Succ@0.5", "TrajErr@0.5",
                            "Succ@0.2", "TrajErr@0.2", "MPJPE"})
        CHECK_MESSAGE(table.find(key) != std::string::npos, key);
    CHECK(table.find("12.5") != std::string::npos);
}
