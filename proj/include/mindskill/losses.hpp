#pragma once

#include "mindskill/environment.hpp"
#include "mindskill/provider.hpp"
#include "mindskill/skilldoc.hpp"
#include "mindskill/trajectory.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mindskill {

// Loss triple ordered (outcome, recon, rubric); minimized lexicographically.
struct LossTriple {
    double outcome = 1.0; // [0, 1]
    double recon = 10.0;  // [0, 10]
    double rubric = 10.0; // [0, 10]

    static LossTriple worst() { return {1.0, 10.0, 10.0}; }

    bool operator==(const LossTriple&) const = default;
};

// Throws on NaN or out-of-range components.
void validate_triple(const LossTriple& t);

// Strict lexicographic order, component priority outcome > recon > rubric.
bool lex_less(const LossTriple& a, const LossTriple& b);

std::string render_triple(const LossTriple& t);

// Judge verdict on procedural alignment between source and reconstruction.
struct ReconJudgment {
    int alignment_score = 0; // [0, 10]
    bool api_sequence_match = false;
    bool control_flow_match = false;
    bool final_state_match = false;
    std::vector<std::string> mismatches;
};

struct RubricScores {
    int gt_independence = 0; // each [0, 10]
    int actionability = 0;
    int transferability = 0;
    int completeness = 0;
    int conciseness = 0;
    std::vector<std::string> leaked_claims;
    std::string issues;
};

// overall = min(gt_independence, mean of all five); a leaky skill cannot
// score well no matter how polished.
double rubric_overall(const RubricScores& s);

struct ReconResult {
    double loss = 10.0;
    std::string feedback;
    std::optional<ReconJudgment> detail; // absent when the judge failed
};

struct OutcomeResult {
    double loss = 1.0;
    std::string feedback;
    OutcomeGrade grade;
};

struct RubricResult {
    double loss = 10.0;
    std::string feedback;
    std::optional<RubricScores> detail;
};

struct LossReport {
    LossTriple triple;
    std::string f_outcome;
    std::string f_recon;
    std::string f_rubric;
    std::optional<ReconJudgment> recon_detail;
    std::optional<RubricScores> rubric_detail;
};

// First balanced {...} block in free text; judges may wrap JSON in prose.
std::optional<std::string> extract_json_block(const std::string& text);

// Validators for complete_validated; empty result means the content parses
// into the expected record shape.
std::vector<std::string> validate_recon_judgment(const std::string& content);
std::vector<std::string> validate_rubric_scores(const std::string& content);

ReconJudgment parse_recon_judgment(const std::string& content); // pre: validator passed
RubricScores parse_rubric_scores(const std::string& content);   // pre: validator passed

// One judge call (tag=judge_recon); loss = 10 - alignment_score. A judge that
// stays invalid after retries scores worst (10) with diagnostic feedback
// instead of raising.
ReconResult recon_loss(const Trajectory& source, const Trajectory& recon, const TaskSpec& task,
                       ChatClient& client, const CallSettings& settings,
                       const std::string& system_prompt);

// Grades the terminal state of the session deduce() ran in; no re-execution.
OutcomeResult outcome_loss(const Trajectory& recon, const TaskSpec& task,
                           EnvSession& terminal_session);

// One judge call (tag=judge_rubric) over (instruction, skill) only; the source
// trajectory is never an input. loss = 10 - rubric_overall.
RubricResult rubric_loss(const SkillDoc& skill, const TaskSpec& task, ChatClient& client,
                         const CallSettings& settings, const std::string& system_prompt);

} // namespace mindskill
