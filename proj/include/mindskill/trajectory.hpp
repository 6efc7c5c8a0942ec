#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mindskill {

class EnvRegistry;

struct TaskSpec {
    std::string task_id;
    std::string instruction;
    std::string env_id;
    uint64_t scenario_seed = 0;
    std::string checker_ref;

    bool operator==(const TaskSpec&) const = default;
};

enum class TrajOrigin {
    rollout,
    ground_truth_wrapped,
    reconstruction,
};

const char* origin_name(TrajOrigin origin);
TrajOrigin parse_origin(const std::string& name);

// Observations longer than this are cut at construction time; judges should
// never see megabyte environment dumps.
inline constexpr size_t kObservationLimit = 4000;
inline constexpr std::string_view kTruncationMarker = "\n[observation truncated]";

std::string truncate_observation(std::string observation);

struct TrajectoryStep {
    std::string thought;
    std::string action; // never empty
    std::string observation;

    bool operator==(const TrajectoryStep&) const = default;
};

struct Trajectory {
    std::string task_id;
    std::vector<TrajectoryStep> steps; // never empty
    TrajOrigin origin = TrajOrigin::rollout;
    std::optional<bool> succeeded;

    bool operator==(const Trajectory&) const = default;
};

// Throws on invariant violations; called by save/load and the agents.
void validate_trajectory(const Trajectory& traj);

inline constexpr std::string_view kWrappedThought = "Executing ground-truth step.";

// Replays a known-good solution through a fresh environment so the wrapped
// trajectory carries real observations. Throws ExecutionFailed if any action
// errors, CheckerFailed if the terminal state does not satisfy the task
// checker; on return succeeded is always true.
Trajectory wrap_solution(const TaskSpec& task, const std::vector<std::string>& solution_actions,
                         EnvRegistry& registry);

// Deterministic numbered Thought/Action/Observation rendering for prompts.
std::string render_trajectory(const Trajectory& traj);

std::string traj_filename(const std::string& task_id, TrajOrigin origin);
void save_trajectory(const Trajectory& traj, const std::filesystem::path& path);
Trajectory load_trajectory(const std::filesystem::path& path);

} // namespace mindskill
