#pragma once

#include "mindskill/agents.hpp"
#include "mindskill/losses.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mindskill {

// Natural-language diagnosis of the induction prompt's weaknesses.
struct GradientText {
    std::string text;
    int iteration = 0;
};

inline constexpr std::string_view kImprovedOpenTag = "<IMPROVED_VARIABLE>";
inline constexpr std::string_view kImprovedCloseTag = "</IMPROVED_VARIABLE>";

struct RolePrompts {
    std::string judge_recon_system;
    std::string judge_rubric_system;
    std::string gradient_system;
    std::string optimizer_system;
    std::string deduction_template;
};

struct RunConfig {
    int max_iterations = 8; // Q
    DeductionConfig deduction;
    CallSettings induction_call;
    CallSettings deduction_call;
    CallSettings judge_recon_call;
    CallSettings judge_rubric_call;
    CallSettings gradient_call;
    CallSettings optimizer_call;
    RolePrompts prompts;
    // runs/<task_id>/... written when set; omitted for speed-sensitive runs
    std::optional<std::filesystem::path> persist_dir;
};

struct RunRecord {
    int iteration = 0;
    std::optional<SkillDoc> skill;     // absent on induction failure
    std::optional<Trajectory> recon;
    LossReport report;
    std::optional<GradientText> gradient;
    std::string prompt_text; // induction prompt in force this iteration
    int prompt_version_before = 0;
    int prompt_version_after = 0;
    bool is_best = false; // strict lexicographic improvement over all before
    std::string note;     // failure diagnostics, empty on clean iterations
};

struct OptimizeResult {
    SkillDoc best;
    LossTriple best_triple;
    int best_iteration = -1;
    std::vector<RunRecord> records;
};

// Extracts the text between the improved-variable tags; nullopt unless both
// tags occur exactly once and in order.
std::optional<std::string> extract_improved_variable(const std::string& content);

// One call (tag=gradient). The gradient model sees the prompt, the task, the
// skill, the reconstruction, and the three feedback strings; the source
// trajectory reaches it only through the recon feedback. Free-text diagnosis;
// a response proposing a prompt (improved-variable tags) is invalid.
// ValidationExhausted surfaces as GradientFailed.
GradientText compute_gradient(const PromptState& prompt_I, const TaskSpec& task,
                              const SkillDoc& skill, const Trajectory& recon,
                              const LossReport& report, int iteration, ChatClient& client,
                              const CallSettings& settings, const std::string& system_prompt);

// One call (tag=optimizer): rewrites the prompt per the gradient. The improved
// prompt must keep the SKILL.md format specification block. Returns the bumped
// prompt state. ValidationExhausted surfaces as UpdateRejected.
PromptState apply_gradient(const PromptState& prompt_I, const GradientText& gradient,
                           ChatClient& client, const CallSettings& settings,
                           const std::string& system_prompt);

// The full per-task optimization loop: induce, fresh-reset deduce, three
// losses, lexicographic best tracking, gradient + prompt update (skipped after
// the final iteration). Induction/gradient/optimizer failures cost their
// iteration, never the run; provider and environment failures are fatal and
// leave partial records persisted. Throws BestUnavailable when every iteration
// failed induction.
OptimizeResult optimize_skill(const TaskSpec& task, const Trajectory& traj,
                              const PromptState& prompt_I0, const PromptState& prompt_D,
                              const RunConfig& cfg, EnvRegistry& registry, ChatClient& client);

} // namespace mindskill
