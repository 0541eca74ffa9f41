#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "hoi/motionproc.hpp"

using namespace hoi;

namespace {

// Steady 0.02 m per frame walk with a gentle turn, all channels populated.
PoseStream walking_stream(size_t frames, double step = 0.02) {
    PoseStream s;
    for (size_t i = 0; i < frames; ++i) {
        s.root_translation.push_back({step * double(i), 0.0, 0.9});
        double yaw = 0.005 * double(i);
        s.root_orientation.push_back(
            {std::cos(yaw / 2), 0.0, 0.0, std::sin(yaw / 2)});
        s.joints.push_back({{step * double(i), 0.1, 1.4},
                            {step * double(i), -0.1, 1.4}});
        s.bbox_area.push_back(9000.0);
        s.confidences.push_back({0.9, 0.85});
        s.full_body_visible.push_back(1);
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Shot segmentation

TEST_CASE("a long shot splits into thirty-second chunks plus the remainder") {
    auto clips = segment_clips({{0.0, 75.0}});
    REQUIRE(clips.size() == 3);
    CHECK(clips[0] == std::pair<int, int>{0, 900});
    CHECK(clips[1] == std::pair<int, int>{900, 1800});
    CHECK(clips[2] == std::pair<int, int>{1800, 2250});
}

TEST_CASE("shots and remainders below two seconds are dropped") {
    CHECK(segment_clips({{0.0, 1.5}}).empty());
    auto clips = segment_clips({{0.0, 31.0}});
    REQUIRE(clips.size() == 1);
    CHECK(clips[0] == std::pair<int, int>{0, 900});
}

TEST_CASE("a shot exactly at the minimum length survives") {
    auto clips = segment_clips({{0.0, 2.0}});
    REQUIRE(clips.size() == 1);
    CHECK(clips[0] == std::pair<int, int>{0, 60});
}

TEST_CASE("multiple shots segment independently and respect offsets") {
    auto clips = segment_clips({{0.0, 3.0}, {10.0, 14.5}});
    REQUIRE(clips.size() == 2);
    CHECK(clips[0] == std::pair<int, int>{0, 90});
    CHECK(clips[1] == std::pair<int, int>{300, 435});
}

TEST_CASE("unsorted or overlapping shot lists are rejected") {
    CHECK_THROWS(segment_clips({{5.0, 10.0}, {0.0, 4.0}}));
    CHECK_THROWS(segment_clips({{0.0, 10.0}, {8.0, 12.0}}));
    CHECK_THROWS(segment_clips({{4.0, 3.0}}));
}

// ---------------------------------------------------------------------------
// Detection-quality filtering

TEST_CASE("a healthy stream passes the detection filters") {
    FilterVerdict v = bbox_confidence_filter(walking_stream(60));
    CHECK(v.kept);
    CHECK(v.reason == FilterReason::none);
}

TEST_CASE("a median bounding box below five thousand pixels is too small") {
    PoseStream s = walking_stream(60);
    for (double& a : s.bbox_area) a = 4000.0;
    FilterVerdict v = bbox_confidence_filter(s);
    CHECK(!v.kept);
    CHECK(v.reason == FilterReason::small_bbox);

    // The median is robust: a minority of small boxes does not reject.
    PoseStream mixed = walking_stream(60);
    for (size_t i = 0; i < 20; ++i) mixed.bbox_area[i] = 100.0;
    CHECK(bbox_confidence_filter(mixed).kept);
}

TEST_CASE("mean keypoint confidence at exactly one half is kept") {
    PoseStream s = walking_stream(60);
    for (auto& frame : s.confidences) frame = {0.5, 0.5};
    CHECK(bbox_confidence_filter(s).kept);
    for (auto& frame : s.confidences) frame = {0.5, 0.49};
    FilterVerdict v = bbox_confidence_filter(s);
    CHECK(!v.kept);
    CHECK(v.reason == FilterReason::low_confidence);
}

TEST_CASE("losing the full body in more than a fifth of frames is low-res") {
    PoseStream s = walking_stream(100);
    for (size_t i = 0; i < 21; ++i) s.full_body_visible[i] = 0;
    FilterVerdict v = bbox_confidence_filter(s);
    CHECK(!v.kept);
    CHECK(v.reason == FilterReason::low_res);
    s = walking_stream(100);
    for (size_t i = 0; i < 20; ++i) s.full_body_visible[i] = 0;
    CHECK(bbox_confidence_filter(s).kept);
}

TEST_CASE("streams without quality channels cannot be quality-filtered") {
    PoseStream s = walking_stream(10);
    s.bbox_area.clear();
    CHECK_THROWS(bbox_confidence_filter(s));
}

// ---------------------------------------------------------------------------
// Motion sanity

TEST_CASE("a translation jump beyond half a meter fails the sanity check") {
    PoseStream s = walking_stream(60);
    s.root_translation[30].x += 0.6;
    FilterVerdict v = motion_sanity_filter(s);
    CHECK(!v.kept);
    CHECK(v.reason == FilterReason::abrupt_motion);
}

TEST_CASE("a rotation jump beyond one radian fails the sanity check") {
    PoseStream s = walking_stream(60);
    s.root_orientation[30] = {std::cos(0.6), 0.0, 0.0, std::sin(0.6)};  // 1.2 rad
    FilterVerdict v = motion_sanity_filter(s);
    CHECK(!v.kept);
    CHECK(v.reason == FilterReason::abrupt_motion);
}

TEST_CASE("a nearly motionless stream is rejected as static") {
    PoseStream s = walking_stream(60, 0.0001);
    FilterVerdict v = motion_sanity_filter(s);
    CHECK(!v.kept);
    CHECK(v.reason == FilterReason::static_motion);
}

TEST_CASE("ordinary walking passes the sanity check") {
    CHECK(motion_sanity_filter(walking_stream(60)).kept);
    PoseStream one = walking_stream(1);
    CHECK_THROWS(motion_sanity_filter(one));
}

// ---------------------------------------------------------------------------
// Jitter repair

TEST_CASE("a clean stream comes back from repair untouched") {
    PoseStream s = walking_stream(40);
    PoseStream r = jitter_repair(s);
    REQUIRE(r.frame_count() == s.frame_count());
    for (size_t i = 0; i < s.frame_count(); ++i) {
        CHECK((r.root_translation[i] - s.root_translation[i]).norm() == 0.0);
        CHECK(r.root_orientation[i].dot(s.root_orientation[i]) ==
              doctest::Approx(1.0));
    }
}

TEST_CASE("a meter spike is re-synthesized from its trusted neighbors") {
    PoseStream s = walking_stream(40);
    PoseStream spiked = s;
    spiked.root_translation[20].y += 1.0;
    spiked.joints[20][0].y += 1.0;

    PoseStream repaired = jitter_repair(spiked);
    CHECK((repaired.root_translation[20] - s.root_translation[20]).norm() < 0.02);
    CHECK((repaired.joints[20][0] - s.joints[20][0]).norm() < 0.02);
    // Trusted frames are passed through exactly.
    CHECK((repaired.root_translation[19] - spiked.root_translation[19]).norm() == 0.0);
    CHECK((repaired.root_translation[21] - spiked.root_translation[21]).norm() == 0.0);
}

TEST_CASE("repair rescues a clip the sanity filter would reject") {
    PoseStream spiked = walking_stream(60);
    spiked.root_translation[30].x += 1.0;
    CHECK(!motion_sanity_filter(spiked).kept);
    PoseStream repaired = jitter_repair(spiked);
    CHECK(motion_sanity_filter(repaired).kept);
}

TEST_CASE("repair refuses streams it cannot anchor") {
    PoseStream two = walking_stream(2);
    CHECK_THROWS(jitter_repair(two));

    // Every later frame is flung far from frame zero and from its peers, so
    // the trust walk never finds a second anchor.
    PoseStream chaos = walking_stream(10);
    for (size_t i = 1; i < 10; ++i)
        chaos.root_translation[i] = {(i % 2 ? 1.0 : -1.0) * (100.0 + 10.0 * i),
                                     0.0, 0.9};
    CHECK_THROWS(jitter_repair(chaos));
}

// ---------------------------------------------------------------------------
// Smoothing

TEST_CASE("a constant stream is a fixed point of smoothing") {
    PoseStream s = walking_stream(30, 0.0);
    for (auto& q : s.root_orientation) q = {1, 0, 0, 0};
    PoseStream out = smooth_stream(s);
    for (size_t i = 0; i < 30; ++i) {
        CHECK((out.root_translation[i] - s.root_translation[i]).norm() < 1e-12);
        CHECK(out.root_orientation[i].dot(s.root_orientation[i]) ==
              doctest::Approx(1.0));
    }
}

TEST_CASE("alternating noise is attenuated five-fold by a five-frame window") {
    const double eps = 0.01;
    PoseStream s = walking_stream(41, 0.0);
    for (size_t i = 0; i < 41; ++i)
        s.root_translation[i].z = 0.9 + (i % 2 ? eps : -eps);
    PoseStream out = smooth_stream(s, 5);
    for (size_t i = 2; i < 39; ++i)
        CHECK(std::fabs(out.root_translation[i].z - 0.9) ==
              doctest::Approx(eps / 5).epsilon(1e-9));
}

TEST_CASE("wider windows smooth alternating noise harder") {
    const double eps = 0.01;
    PoseStream s = walking_stream(61, 0.0);
    for (size_t i = 0; i < 61; ++i)
        s.root_translation[i].y = (i % 2 ? eps : -eps);
    auto residual = [](const PoseStream& p) {
        double m = 0;
        for (size_t i = 10; i < 50; ++i)
            m = std::max(m, std::fabs(p.root_translation[i].y));
        return m;
    };
    double r3 = residual(smooth_stream(s, 3));
    double r9 = residual(smooth_stream(s, 9));
    CHECK(r9 < r3);
    CHECK(r3 < eps);
}

TEST_CASE("smoothing keeps endpoints anchored by shrinking the window") {
    PoseStream s = walking_stream(20);
    PoseStream out = smooth_stream(s, 5);
    CHECK((out.root_translation.front() - s.root_translation.front()).norm() == 0.0);
    CHECK((out.root_translation.back() - s.root_translation.back()).norm() == 0.0);
}

TEST_CASE("even or degenerate window sizes are rejected") {
    PoseStream s = walking_stream(10);
    CHECK_THROWS(smooth_stream(s, 4));
    CHECK_THROWS(smooth_stream(s, 1));
    CHECK_THROWS(smooth_stream(s, 0));
}

// ---------------------------------------------------------------------------
// Persistence

TEST_CASE("a pose stream survives a save and load round-trip") {
    PoseStream s = walking_stream(25);
    const char* path = "build_test_pose_roundtrip.txt";
    save_pose_stream(s, path);
    PoseStream back = load_pose_stream(path);

    REQUIRE(back.frame_count() == s.frame_count());
    CHECK(back.fps == s.fps);
    for (size_t i = 0; i < s.frame_count(); ++i) {
        CHECK((back.root_translation[i] - s.root_translation[i]).norm() < 1e-7);
        CHECK(back.root_orientation[i].dot(s.root_orientation[i]) ==
              doctest::Approx(1.0));
        REQUIRE(back.joints[i].size() == s.joints[i].size());
        for (size_t j = 0; j < s.joints[i].size(); ++j)
            CHECK((back.joints[i][j] - s.joints[i][j]).norm() < 1e-7);
        CHECK(back.bbox_area[i] == doctest::Approx(s.bbox_area[i]));
        CHECK(back.confidences[i] == s.confidences[i]);
        CHECK(back.full_body_visible[i] == s.full_body_visible[i]);
    }

    // Saving the loaded stream again produces an identical file.
    const char* path2 = "build_test_pose_roundtrip2.txt";
    save_pose_stream(back, path2);
    std::ifstream a(path), b(path2);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    std::remove(path);
    std::remove(path2);
}

TEST_CASE("loading a missing or foreign file fails cleanly") {
    CHECK_THROWS(load_pose_stream("no_such_pose_stream.txt"));
    const char* path = "build_test_not_a_pose.txt";
    {
        std::ofstream out(path);
        out << "something else\n";
    }
    CHECK_THROWS(load_pose_stream(path));
    std::remove(path);
}
