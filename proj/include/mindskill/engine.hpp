#pragma once

#include "mindskill/config.hpp"
#include "mindskill/library.hpp"
#include "mindskill/textgrad.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace mindskill {

struct CommandResult {
    int exit_code = 0;
    std::string output;
};

// Ties the modules together behind the four operator commands. Inputs come
// from the config; outputs land under the working directory.
class Engine {
public:
    Engine(AppConfig config, std::filesystem::path workdir);

    AppConfig& config() { return config_; } // option overrides before a command

    // Mines a skill per train task (recorded rollout or wrapped ground-truth
    // solution) and folds bests into the library. Exit 0 iff every requested
    // task produced a best skill.
    CommandResult mine(const std::vector<std::string>& task_filter);

    // Retrieval + injected deduction + grading over eval tasks; writes the
    // results file. Task failures are results; only infrastructure errors
    // throw.
    CommandResult eval(const std::vector<std::string>& task_filter, bool baseline);

    // target: "library" | "run:<task_id>" | "skill:<task_id>"
    CommandResult inspect(const std::string& target);

    // The shipped scripted pipeline: mine every train task, then eval every
    // eval task.
    CommandResult demo();

    const Dataset& dataset() const { return dataset_; }
    AuditLog& audit() { return *audit_; }

private:
    std::vector<TaskSpec> pick_tasks(const std::string& split,
                                     const std::vector<std::string>& filter) const;
    Trajectory obtain_trajectory(const TaskSpec& task) const;
    RunConfig make_run_config() const;
    SkillLibrary load_library() const;

    AppConfig config_;
    std::filesystem::path workdir_;
    PromptSet prompts_;
    Dataset dataset_;
    std::shared_ptr<AuditLog> audit_;
    std::unique_ptr<ChatClient> client_;
};

} // namespace mindskill
