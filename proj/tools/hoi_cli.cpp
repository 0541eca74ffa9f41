#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hoi/collide.hpp"
#include "hoi/executor.hpp"
#include "hoi/metrics.hpp"
#include "hoi/motionproc.hpp"
#include "hoi/pathfind.hpp"
#include "hoi/planner.hpp"
#include "hoi/scene.hpp"

namespace fs = std::filesystem;
using namespace hoi;

namespace {

Vec3 parse_vec3(const std::string& text) {
    Vec3 v;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> v.x >> c1 >> v.y >> c2 >> v.z) || c1 != ',' || c2 != ',')
        throw std::runtime_error("expected x,y,z but got '" + text + "'");
    return v;
}

// Track file: "HOI-TRACK 1" header, "moving <name>" line, then
// "wp <frame> <x> <y> <z> [<ex> <ey> <ez>]" rows.
ControlTrack load_track_file(const std::string& path, std::string* moving_name) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open track file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("HOI-TRACK 1", 0) != 0)
        throw std::runtime_error("not a track file (missing HOI-TRACK 1 header): " + path);
    ControlTrack track;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string tag;
        row >> tag;
        if (tag == "moving") {
            row >> track.joint_or_object;
        } else if (tag == "wp") {
            Waypoint w;
            if (!(row >> w.frame >> w.position.x >> w.position.y >> w.position.z))
                throw std::runtime_error("bad waypoint row: " + line);
            double ex, ey, ez;
            if (row >> ex >> ey >> ez) w.orientation = Orientation(ex, ey, ez);
            track.waypoints.push_back(w);
        } else {
            throw std::runtime_error("unknown track row: " + line);
        }
    }
    if (moving_name) *moving_name = track.joint_or_object;
    return track;
}

void save_track_file(const ControlTrack& track, std::ostream& out) {
    out << "HOI-TRACK 1\n";
    if (!track.joint_or_object.empty()) out << "moving " << track.joint_or_object << "\n";
    char buf[160];
    for (const auto& w : track.waypoints) {
        std::snprintf(buf, sizeof(buf), "wp %d %.6f %.6f %.6f", w.frame,
                      w.position.x, w.position.y, w.position.z);
        out << buf;
        if (w.orientation) {
            std::snprintf(buf, sizeof(buf), " %.6f %.6f %.6f", w.orientation->rx,
                          w.orientation->ry, w.orientation->rz);
            out << buf;
        }
        out << "\n";
    }
}

OrientedBox moving_box_for(const SceneState& scene, const std::string& name) {
    if (name == "human" || name == "pelvis") return human_box(scene.human, 0.0);
    const ObjectState* obj = scene.find(name);
    if (!obj) throw std::runtime_error("no object named '" + name + "' in scene");
    return obj->box;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Scenes come either as JSON files or as environment-state text blocks.
SceneState load_scene_any(const std::string& path) {
    std::string text = read_file(path);
    size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') return load_scene_file(path);
    return parse_scene_text(text);
}

void save_episode_outputs(const EpisodeResult& result, const std::string& out_dir) {
    if (out_dir.empty()) return;
    fs::create_directories(out_dir);
    result.log.save((fs::path(out_dir) / "episode.jsonl").string());
    save_scene_file(result.final_scene, (fs::path(out_dir) / "final_scene.txt").string());
    for (size_t i = 0; i < result.clips.size(); ++i)
        save_clip(result.clips[i],
                  (fs::path(out_dir) / ("clip_" + std::to_string(i) + ".txt")).string());
}

int run_episode_cmd(const std::string& scene_path, const std::string& instruction,
                    const std::string& transcript_path, const std::string& log_path,
                    const std::string& out_dir, int max_steps) {
    SceneState scene = load_scene_any(scene_path);
    std::unique_ptr<PlannerBackend> backend;
    PlannerConfig config = PlannerConfig::from_env();
    if (!transcript_path.empty()) {
        backend = std::make_unique<ReplayPlanner>(ReplayPlanner::from_file(transcript_path));
    } else if (!log_path.empty()) {
        ReplayPlanner rp;
        for (const auto& e : EpisodeLog::load(log_path).entries)
            if (e.role == "assistant") rp.messages.push_back(e.message);
        backend = std::make_unique<ReplayPlanner>(std::move(rp));
    } else if (!config.endpoint.empty()) {
        backend = std::make_unique<HttpPlanner>(config);
    } else {
        throw std::runtime_error(
            "no planner: pass --mock-transcript/--log or set PLANNER_ENDPOINT");
    }
    EpisodeResult result = run_episode(*backend, config, scene, instruction, max_steps);
    save_episode_outputs(result, out_dir);
    std::cout << "outcome: " << result.log.outcome << "\n"
              << emit_scene_text(result.final_scene);
    return result.log.outcome == "completed" ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HOI scene-interaction engine"};
    app.require_subcommand(1);

    std::string scene_path, track_path, instruction, transcript_path, log_path;
    std::string out_path, commands_path, input_dir, moving = "human";
    std::vector<std::string> clip_paths, ref_paths, track_paths;
    std::string from_text, to_text;
    double margin = 0.2, resolution = 0.05;
    int max_steps = 20, window = 5;

    auto* validate = app.add_subcommand(
        "validate", "Collision-check a waypoint track against a scene");
    validate->add_option("--scene", scene_path)->required();
    validate->add_option("--track", track_path)->required();
    validate->add_option("--margin", margin);

    auto* plan = app.add_subcommand(
        "plan", "A* with smoothing and scheduling between two points");
    plan->add_option("--scene", scene_path)->required();
    plan->add_option("--from", from_text)->required();
    plan->add_option("--to", to_text)->required();
    plan->add_option("--moving", moving);
    plan->add_option("--margin", margin);
    plan->add_option("--resolution", resolution);
    plan->add_option("--out", out_path);

    auto* exec = app.add_subcommand(
        "exec", "Execute a scripted command file against a scene");
    exec->add_option("--scene", scene_path)->required();
    exec->add_option("--commands", commands_path)->required();
    exec->add_option("--out", out_path);

    auto* run = app.add_subcommand("run", "Run a full planner episode");
    run->add_option("--scene", scene_path)->required();
    run->add_option("--instruction", instruction)->required();
    run->add_option("--mock-transcript", transcript_path);
    run->add_option("--out", out_path);
    run->add_option("--max-steps", max_steps);

    auto* replay = app.add_subcommand(
        "replay", "Deterministically re-execute a recorded episode");
    replay->add_option("--scene", scene_path)->required();
    replay->add_option("--instruction", instruction)->required();
    replay->add_option("--log", log_path);
    replay->add_option("--mock-transcript", transcript_path);
    replay->add_option("--out", out_path);
    replay->add_option("--max-steps", max_steps);

    auto* metrics = app.add_subcommand("metrics", "Score motion clips");
    metrics->add_option("--clips", clip_paths)->required();
    metrics->add_option("--track", track_paths);
    metrics->add_option("--ref", ref_paths);
    metrics->add_option("--scene", scene_path);

    auto* process = app.add_subcommand(
        "process", "Filter, repair, and smooth pose streams in a directory");
    process->add_option("--input", input_dir)->required();
    process->add_option("--out", out_path)->required();
    process->add_option("--window", window);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*validate) {
            SceneState scene = load_scene_any(scene_path);
            std::string name;
            ControlTrack track = load_track_file(track_path, &name);
            if (name.empty())
                throw std::runtime_error("track file must name what moves ('moving <name>')");
            ValidateOptions vo;
            vo.margin = margin;
            vo.endpoint_relax_radius = std::max(margin, 0.0);
            if (name != "human" && name != "pelvis") vo.ignore.insert(name);
            CollisionReport report =
                validate_track(moving_box_for(scene, name), track, scene, vo);
            if (report.collided) {
                std::cerr << format_collision_error(report) << "\n";
                return 1;
            }
            std::cout << "no collision\n";
            return 0;
        }
        if (*plan) {
            SceneState scene = load_scene_any(scene_path);
            std::set<std::string> ignore;
            if (moving != "human" && moving != "pelvis") ignore.insert(moving);
            RepairResult repair =
                repair_track(scene, moving_box_for(scene, moving), parse_vec3(from_text),
                             parse_vec3(to_text), margin, ignore, resolution);
            repair.track.joint_or_object = moving;
            if (!out_path.empty()) {
                std::ofstream out(out_path);
                save_track_file(repair.track, out);
            }
            save_track_file(repair.track, std::cout);
            std::cout << "achieved_margin " << repair.achieved_margin << "\n";
            return 0;
        }
        if (*exec) {
            SceneState scene = load_scene_any(scene_path);
            ParseResult parsed = parse_commands(read_file(commands_path));
            if (parsed.error) throw std::runtime_error(*parsed.error);
            std::vector<MotionClip> clips;
            for (const AgentCommand& cmd : parsed.commands) {
                if (cmd.kind == CommandKind::TaskCompleted) continue;
                ExecutionResult result =
                    cmd.kind == CommandKind::GenerateMotion
                        ? generate_motion(scene, cmd.control_joints, cmd.control_points,
                                          cmd.text, cmd.number_frames, cmd.task_index)
                        : generate_interaction(scene, cmd.control_joints,
                                               cmd.control_points, cmd.text,
                                               cmd.number_frames, cmd.task_index,
                                               cmd.object_name, cmd.object_points);
                for (const auto& report : result.hard_collision_reports)
                    if (report.collided && report.moving_name != "human")
                        throw std::runtime_error(format_collision_error(report));
                scene = result.final_scene;
                clips.push_back(result.clip);
            }
            if (!out_path.empty()) {
                fs::create_directories(out_path);
                for (size_t i = 0; i < clips.size(); ++i)
                    save_clip(clips[i], (fs::path(out_path) /
                                         ("clip_" + std::to_string(i) + ".txt"))
                                            .string());
            }
            std::cout << emit_scene_text(scene);
            return 0;
        }
        if (*run)
            return run_episode_cmd(scene_path, instruction, transcript_path, "",
                                   out_path, max_steps);
        if (*replay) {
            if (log_path.empty() && transcript_path.empty())
                throw std::runtime_error("replay needs --log or --mock-transcript");
            return run_episode_cmd(scene_path, instruction, transcript_path, log_path,
                                   out_path, max_steps);
        }
        if (*metrics) {
            std::vector<TrajScores> traj_all;
            double fs_sum = 0, hf_sum = 0, pen_sum = 0;
            std::vector<ContactSeries> contact_all;
            SceneState scene;
            bool have_scene = !scene_path.empty();
            if (have_scene) scene = load_scene_any(scene_path);
            for (size_t i = 0; i < clip_paths.size(); ++i) {
                MotionClip clip = load_clip(clip_paths[i]);
                if (i < track_paths.size()) {
                    ControlTrack control = load_track_file(track_paths[i], nullptr);
                    traj_all.push_back(traj_metrics(clip, {control}));
                }
                FootScores foot = foot_metrics(clip);
                fs_sum += foot.fs;
                hf_sum += foot.h_feet;
                if (have_scene) {
                    // Static furniture only; manipulated objects are excluded.
                    std::vector<SdfFn> sdfs;
                    for (const auto& obj : scene.objects)
                        if (!clip.object_tracks.count(obj.name))
                            sdfs.push_back(box_sdf(obj.box));
                    std::vector<std::vector<Vec3>> hands(clip.frames.size());
                    for (size_t f = 0; f < clip.frames.size(); ++f)
                        hands[f] = {clip.frames[f].left_hand, clip.frames[f].right_hand};
                    SdfFn scene_sdf = [sdfs](const Vec3& p) {
                        double d = 1e9;
                        for (const auto& fn : sdfs) d = std::min(d, fn(p));
                        return d;
                    };
                    pen_sum += penetration_score(hands, scene_sdf);
                }
                if (i < ref_paths.size() && !clip.object_tracks.empty()) {
                    MotionClip ref = load_clip(ref_paths[i]);
                    const auto& obj_track = clip.object_tracks.begin()->second;
                    auto labels = [&](const MotionClip& c) {
                        DenseTrack hand;
                        hand.start_frame = c.start_frame;
                        for (const auto& f : c.frames) hand.positions.push_back(f.right_hand);
                        hand.orientations.assign(hand.positions.size(), Quat{});
                        std::vector<std::vector<Vec3>> verts(c.frames.size());
                        for (size_t f = 0; f < c.frames.size(); ++f)
                            verts[f] = {obj_track.positions[std::min(
                                f, obj_track.positions.size() - 1)]};
                        return contact_labels(hand, verts);
                    };
                    ContactSeries series;
                    series.predicted = labels(clip);
                    series.reference = labels(ref);
                    series.reference.resize(series.predicted.size(), 0);
                    contact_all.push_back(series);
                }
            }
            MetricsReport report;
            if (!traj_all.empty()) report.traj = traj_metrics_batch(traj_all);
            if (!clip_paths.empty()) {
                report.foot.fs = fs_sum / clip_paths.size();
                report.foot.h_feet = hf_sum / clip_paths.size();
                if (have_scene) report.p_hand = pen_sum / clip_paths.size();
            }
            if (!contact_all.empty()) report.contact = contact_prf(contact_all);
            std::cout << report.to_table();
            return 0;
        }
        if (*process) {
            fs::create_directories(out_path);
            std::vector<fs::path> inputs;
            for (const auto& entry : fs::directory_iterator(input_dir))
                if (entry.path().extension() == ".txt") inputs.push_back(entry.path());
            std::sort(inputs.begin(), inputs.end());
            std::ofstream manifest(fs::path(out_path) / "manifest.txt");
            for (const auto& path : inputs) {
                PoseStream stream = load_pose_stream(path.string());
                FilterVerdict verdict = bbox_confidence_filter(stream);
                if (verdict.kept) {
                    verdict = motion_sanity_filter(stream);
                    if (!verdict.kept && verdict.reason == FilterReason::abrupt_motion) {
                        stream = jitter_repair(stream);
                        verdict = motion_sanity_filter(stream);
                    }
                }
                std::string name = path.filename().string();
                if (verdict.kept) {
                    PoseStream smoothed = smooth_stream(stream, window);
                    save_pose_stream(smoothed, (fs::path(out_path) / name).string());
                    manifest << name << " kept\n";
                } else {
                    manifest << name << " dropped " << filter_reason_name(verdict.reason)
                             << "\n";
                }
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
