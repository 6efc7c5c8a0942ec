#pragma once

#include "mindskill/environment.hpp"
#include "mindskill/provider.hpp"
#include "mindskill/skilldoc.hpp"
#include "mindskill/trajectory.hpp"

#include <span>
#include <string>

namespace mindskill {

// A system prompt under optimization (induction) or frozen (deduction).
struct PromptState {
    std::string text;
    int version = 0;
    bool frozen = false;
    std::string digest; // fnv1a64 of text

    static PromptState make(std::string text, bool frozen = false);

    // version + 1, fresh digest; rejects updates to frozen prompts.
    PromptState bumped(std::string new_text) const;
};

struct DeductionConfig {
    int max_steps = 15;
    std::string stop_marker = "TASK_COMPLETE";
};

// Placeholders the deduction template must contain exactly once each.
inline constexpr std::string_view kSkillsPlaceholder = "{{skills}}";
inline constexpr std::string_view kInstructionPlaceholder = "{{instruction}}";

// Replaces both placeholders; throws BadTemplate unless each occurs exactly
// once. The skills block is render_skills_block over the given docs.
std::string fill_deduction_template(const std::string& template_text,
                                    std::span<const SkillDoc> skills,
                                    const std::string& instruction);

// Single induction call (tag=induction): system = prompt_I, user = instruction
// plus the rendered trajectory; output must be a valid SKILL.md document.
// ValidationExhausted surfaces as InductionFailed.
SkillDoc induce(const TaskSpec& task, const Trajectory& traj, const PromptState& prompt_I,
                ChatClient& client, const CallSettings& settings);

// The frozen ReAct loop: the deduction agent sees only the skill documents and
// the instruction, never the source trajectory. Returns origin=reconstruction
// with succeeded unset; the caller grades the terminal session.
Trajectory run_deduction(const TaskSpec& task, std::span<const SkillDoc> skills,
                         const PromptState& prompt_D, EnvSession& session,
                         const DeductionConfig& cfg, ChatClient& client,
                         const CallSettings& settings, const std::string& template_text);

inline Trajectory deduce(const TaskSpec& task, const SkillDoc& skill, const PromptState& prompt_D,
                         EnvSession& session, const DeductionConfig& cfg, ChatClient& client,
                         const CallSettings& settings, const std::string& template_text) {
    return run_deduction(task, std::span<const SkillDoc>(&skill, 1), prompt_D, session, cfg,
                         client, settings, template_text);
}

// Splits a deduction response into (thought, action). The action is the text
// after the first line starting with "Action:"; absent that line, the whole
// response is treated as an unlabeled action attempt.
struct ParsedTurn {
    std::string thought;
    std::string action;
    bool labeled = false;
};
ParsedTurn parse_deduction_turn(const std::string& content);

} // namespace mindskill
