#pragma once

#include "mindskill/trajectory.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mindskill {

// ============================================================================
// Action language
//
// Grammar (bit-exact, single line):
//   action  := api '(' [arg (',' arg)*] ')'
//   arg     := name '=' value
//   value   := string | integer | boolean | list
//   string  := '"' chars '"'          escapes: \\  \"  \n
//   integer := ['-'] digit+
//   boolean := 'true' | 'false'
//   list    := '[' [scalar (',' scalar)*] ']'   (flat; no nested lists)
// Whitespace is allowed between tokens. api and name are C identifiers.
// ============================================================================

struct ToolCall {
    std::string api;
    nlohmann::json args = nlohmann::json::object(); // flat values only

    bool operator==(const ToolCall&) const = default;
};

// Throws ActionParseError with a position-bearing message.
ToolCall parse_action(const std::string& text);
// Canonical single-line rendering; args in key order.
std::string render_action(const ToolCall& call);

struct ToolResult {
    bool ok = false;
    nlohmann::json payload; // meaningful iff ok
    std::string error;      // meaningful iff !ok

    static ToolResult success(nlohmann::json payload);
    static ToolResult failure(std::string message);

    // What the agent sees: compact payload JSON, or "ERROR: <message>".
    std::string observation() const;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct OutcomeGrade {
    double loss = 1.0; // 1 - passed/total
    std::string feedback;
    std::vector<CheckResult> checks;

    static OutcomeGrade from_checks(std::vector<CheckResult> checks);
    bool passed() const { return loss == 0.0; }
    std::string summary() const;
};

class EnvSession {
public:
    EnvSession(std::string env_id, uint64_t scenario_seed)
        : env_id_(std::move(env_id)), scenario_seed_(scenario_seed) {}
    virtual ~EnvSession() = default;

    const std::string& env_id() const { return env_id_; }
    uint64_t scenario_seed() const { return scenario_seed_; }
    int step_count() const { return step_count_; }

    // Failures are in-band ToolResults; exec never throws for unknown apis or
    // bad arguments, so the agent can react.
    ToolResult exec(const ToolCall& call) {
        ++step_count_;
        return do_exec(call);
    }

    // Runs the task's checker over the final state. Throws UnknownChecker.
    virtual OutcomeGrade evaluate(const TaskSpec& task) = 0;

    // Deterministic full-state dump, for determinism checks and oracles.
    virtual std::string serialize_state() const = 0;

protected:
    virtual ToolResult do_exec(const ToolCall& call) = 0;

private:
    std::string env_id_;
    uint64_t scenario_seed_ = 0;
    int step_count_ = 0;
};

class EnvRegistry {
public:
    using Factory =
        std::function<std::unique_ptr<EnvSession>(const std::string& env_id, uint64_t seed)>;

    void register_env(const std::string& env_id, Factory factory);

    // Deterministic: same (env_id, seed) yields an identical initial state.
    // Throws UnknownEnv for unregistered ids.
    std::unique_ptr<EnvSession> reset(const std::string& env_id, uint64_t scenario_seed);
    std::unique_ptr<EnvSession> open(const TaskSpec& task) {
        return reset(task.env_id, task.scenario_seed);
    }

    bool has(const std::string& env_id) const;

    // Registry with all built-in environments (toyworld).
    static EnvRegistry& builtin();

private:
    std::vector<std::pair<std::string, Factory>> factories_;
};

// --- scenario files ---------------------------------------------------------
// Line-delimited records: {type:"dataset", name}, then per task
// {type:"task", task_id, instruction, env_id, scenario_seed, checker_ref, split}
// and {type:"items", task_id, items:[...]} carrying the seeded inventory the
// loader re-verifies against the environment.

struct DatasetTask {
    TaskSpec task;
    std::string split; // "train" | "eval"

    bool operator==(const DatasetTask&) const = default;
};

struct Dataset {
    std::string name;
    std::vector<DatasetTask> tasks;

    std::vector<TaskSpec> split_tasks(const std::string& split) const;
};

void save_scenario(const Dataset& dataset, const std::filesystem::path& path,
                   EnvRegistry& registry);
Dataset load_scenario(const std::filesystem::path& path, EnvRegistry& registry);

} // namespace mindskill
