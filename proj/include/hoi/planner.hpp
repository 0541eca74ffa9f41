#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hoi/executor.hpp"
#include "hoi/scene.hpp"
#include "hoi/traj.hpp"

namespace hoi {

struct PlannerConfig {
    std::string endpoint;  // chat-completion URL, e.g. http://host:1234/v1/chat/completions
    std::string model;
    std::string api_key;
    int max_consecutive_errors = 5;
    double timeout_seconds = 60.0;
    double temperature = 0.0;
    int max_retries = 3;
    double backoff_base_seconds = 0.5;

    // Reads PLANNER_ENDPOINT, PLANNER_MODEL, PLANNER_API_KEY.
    static PlannerConfig from_env();
};

enum class CommandKind { GenerateMotion, GenerateInteraction, TaskCompleted };

struct AgentCommand {
    CommandKind kind = CommandKind::TaskCompleted;
    std::vector<std::string> control_joints;
    std::vector<ControlTrack> control_points;
    std::string text;
    int number_frames = 0;
    int task_index = 0;
    std::vector<std::string> object_name;
    std::vector<ControlTrack> object_points;
};

bool operator==(const AgentCommand& a, const AgentCommand& b);

// Restricted literal parser over fenced code blocks: assignments of list,
// number, and string literals followed by a single call to generate_motion,
// generate_interaction (alias model.generate_human_object), or
// task_completed. Anything else is a parse error returned as a value.
struct ParseResult {
    std::vector<AgentCommand> commands;
    std::optional<std::string> error;
};

ParseResult parse_commands(const std::string& message);

// Inverse of parse_commands for a single command: a fenced python block that
// reparses to an equal command.
std::string serialize_command(const AgentCommand& cmd);

struct LogEntry {
    std::string role;  // system | assistant | user
    std::string message;
};

struct EpisodeLog {
    std::vector<LogEntry> entries;
    std::string outcome;  // completed | error_budget_exhausted | step_budget_exhausted | planner_unavailable

    void append(std::string role, std::string message) {
        entries.push_back({std::move(role), std::move(message)});
    }
    void save(const std::string& path) const;
    static EpisodeLog load(const std::string& path);
};

std::string build_system_prompt(const SceneState& scene, const std::string& instruction);

struct PlannerUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One assistant message via the chat-completion protocol; retries transport
// and 5xx failures with exponential backoff before giving up.
std::string request_step(const PlannerConfig& config, const EpisodeLog& transcript);

struct PlannerBackend {
    virtual ~PlannerBackend() = default;
    virtual std::string next(const EpisodeLog& transcript) = 0;
};

struct HttpPlanner : PlannerBackend {
    PlannerConfig config;
    explicit HttpPlanner(PlannerConfig c) : config(std::move(c)) {}
    std::string next(const EpisodeLog& transcript) override;
};

// Replays canned assistant messages; the bundled transcript fixtures use
// one "<<<ASSISTANT>>>" delimiter line before each message.
struct ReplayPlanner : PlannerBackend {
    std::vector<std::string> messages;
    size_t cursor = 0;
    std::string next(const EpisodeLog& transcript) override;
    static ReplayPlanner from_file(const std::string& path);
};

struct EpisodeResult {
    EpisodeLog log;
    SceneState final_scene;
    std::vector<MotionClip> clips;
};

EpisodeResult run_episode(PlannerBackend& backend, const PlannerConfig& config,
                          const SceneState& scene, const std::string& instruction,
                          int max_steps = 20, const ExecOptions& exec_opts = {});

}  // namespace hoi
