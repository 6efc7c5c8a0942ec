#include "mindskill/trajectory.hpp"

#include "mindskill/environment.hpp"
#include "mindskill/errors.hpp"
#include "mindskill/util.hpp"

#include <json.hpp>

#include <sstream>

namespace mindskill {

using nlohmann::json;

const char* origin_name(TrajOrigin origin) {
    switch (origin) {
    case TrajOrigin::rollout: return "rollout";
    case TrajOrigin::ground_truth_wrapped: return "ground_truth_wrapped";
    case TrajOrigin::reconstruction: return "reconstruction";
    }
    return "rollout";
}

TrajOrigin parse_origin(const std::string& name) {
    if (name == "rollout")
        return TrajOrigin::rollout;
    if (name == "ground_truth_wrapped")
        return TrajOrigin::ground_truth_wrapped;
    if (name == "reconstruction")
        return TrajOrigin::reconstruction;
    fail(Errc::io_error, "unknown trajectory origin: " + name);
}

std::string truncate_observation(std::string observation) {
    if (observation.size() <= kObservationLimit)
        return observation;
    observation.resize(kObservationLimit);
    observation += kTruncationMarker;
    return observation;
}

void validate_trajectory(const Trajectory& traj) {
    require(!traj.task_id.empty(), "trajectory task_id is empty");
    require(!traj.steps.empty(), "trajectory has no steps");
    for (size_t i = 0; i < traj.steps.size(); ++i)
        require(!traj.steps[i].action.empty(),
                "trajectory step " + std::to_string(i) + " has an empty action");
    if (traj.origin == TrajOrigin::ground_truth_wrapped)
        require(!(traj.succeeded.has_value() && !*traj.succeeded),
                "a wrapped ground-truth trajectory cannot be marked failed");
}

Trajectory wrap_solution(const TaskSpec& task, const std::vector<std::string>& solution_actions,
                         EnvRegistry& registry) {
    require(!solution_actions.empty(), "wrap_solution needs at least one action");

    auto session = registry.open(task);
    Trajectory traj;
    traj.task_id = task.task_id;
    traj.origin = TrajOrigin::ground_truth_wrapped;

    for (size_t i = 0; i < solution_actions.size(); ++i) {
        const std::string& action = solution_actions[i];
        ToolResult result;
        try {
            result = session->exec(parse_action(action));
        } catch (const Error& e) {
            fail(Errc::execution_failed,
                 "ground-truth step " + std::to_string(i + 1) + ": " + e.what());
        }
        if (!result.ok)
            fail(Errc::execution_failed,
                 "ground-truth step " + std::to_string(i + 1) + ": " + result.error);
        traj.steps.push_back({std::string(kWrappedThought), action,
                              truncate_observation(result.observation())});
    }

    OutcomeGrade grade = session->evaluate(task);
    if (!grade.passed())
        fail(Errc::checker_failed,
             "ground-truth solution for " + task.task_id + " does not satisfy its checker: " +
                 grade.summary());
    traj.succeeded = true;
    validate_trajectory(traj);
    return traj;
}

std::string render_trajectory(const Trajectory& traj) {
    std::string out;
    for (size_t i = 0; i < traj.steps.size(); ++i) {
        const TrajectoryStep& step = traj.steps[i];
        if (i)
            out += "\n\n";
        out += "Step " + std::to_string(i + 1) + "\n";
        out += "Thought: " + step.thought + "\n";
        out += "Action: " + step.action + "\n";
        out += "Observation: " + step.observation;
    }
    return out;
}

std::string traj_filename(const std::string& task_id, TrajOrigin origin) {
    return task_id + "." + origin_name(origin) + ".traj";
}

void save_trajectory(const Trajectory& traj, const std::filesystem::path& path) {
    validate_trajectory(traj);
    json header;
    header["task_id"] = traj.task_id;
    header["origin"] = origin_name(traj.origin);
    if (traj.succeeded.has_value())
        header["succeeded"] = *traj.succeeded;
    else
        header["succeeded"] = nullptr;

    std::string out = header.dump() + "\n";
    for (size_t i = 0; i < traj.steps.size(); ++i) {
        const TrajectoryStep& step = traj.steps[i];
        json rec;
        rec["index"] = i;
        rec["thought"] = step.thought;
        rec["action"] = step.action;
        rec["observation"] = step.observation;
        out += rec.dump() + "\n";
    }
    atomic_write_file(path, out);
}

Trajectory load_trajectory(const std::filesystem::path& path) {
    std::vector<std::string> lines = split_lines(read_file(path));
    while (!lines.empty() && trim(lines.back()).empty())
        lines.pop_back();
    if (lines.empty())
        fail(Errc::io_error, "trajectory file is empty: " + path.string());

    Trajectory traj;
    try {
        json header = json::parse(lines[0]);
        traj.task_id = header.at("task_id").get<std::string>();
        traj.origin = parse_origin(header.at("origin").get<std::string>());
        if (!header.at("succeeded").is_null())
            traj.succeeded = header.at("succeeded").get<bool>();
        for (size_t i = 1; i < lines.size(); ++i) {
            json rec = json::parse(lines[i]);
            if (rec.at("index").get<size_t>() != i - 1)
                fail(Errc::io_error, "trajectory step index out of order at line " +
                                         std::to_string(i + 1));
            traj.steps.push_back({rec.at("thought").get<std::string>(),
                                  rec.at("action").get<std::string>(),
                                  rec.at("observation").get<std::string>()});
        }
    } catch (const json::exception& e) {
        fail(Errc::io_error, "bad trajectory file " + path.string() + ": " + e.what());
    }
    validate_trajectory(traj);
    return traj;
}

} // namespace mindskill
