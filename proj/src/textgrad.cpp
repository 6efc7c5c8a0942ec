#include "mindskill/textgrad.hpp"

#include "mindskill/errors.hpp"
#include "mindskill/util.hpp"

#include <json.hpp>

namespace mindskill {

using nlohmann::json;

std::optional<std::string> extract_improved_variable(const std::string& content) {
    size_t open = content.find(kImprovedOpenTag);
    if (open == std::string::npos)
        return std::nullopt;
    if (content.find(kImprovedOpenTag, open + kImprovedOpenTag.size()) != std::string::npos)
        return std::nullopt;
    size_t close = content.find(kImprovedCloseTag);
    if (close == std::string::npos || close < open)
        return std::nullopt;
    if (content.find(kImprovedCloseTag, close + kImprovedCloseTag.size()) != std::string::npos)
        return std::nullopt;
    size_t begin = open + kImprovedOpenTag.size();
    return trim(content.substr(begin, close - begin));
}

GradientText compute_gradient(const PromptState& prompt_I, const TaskSpec& task,
                              const SkillDoc& skill, const Trajectory& recon,
                              const LossReport& report, int iteration, ChatClient& client,
                              const CallSettings& settings, const std::string& system_prompt) {
    require(recon.origin == TrajOrigin::reconstruction,
            "the gradient model observes the reconstruction, not the source");
    require(!system_prompt.empty(), "gradient model needs a system prompt");

    std::string user =
        "Current induction prompt (the variable under optimization):\n<<<PROMPT\n" +
        prompt_I.text + "\nPROMPT>>>\n\nTask instruction:\n" + task.instruction +
        "\n\nInduced skill document:\n" + serialize_skill(skill) +
        "\nReconstructed trajectory (produced from the skill alone):\n" +
        render_trajectory(recon) + "\n\nOutcome feedback:\n" + report.f_outcome +
        "\n\nReconstruction feedback:\n" + report.f_recon + "\n\nRubric feedback:\n" +
        report.f_rubric + "\n\nDiagnose the prompt now.";

    ChatRequest req = make_request(kTagGradient, settings,
                                   {{Role::system, system_prompt}, {Role::user, user}});
    ChatResponse resp;
    try {
        resp = client.complete_validated(std::move(req), [](const std::string& content) {
            std::vector<std::string> violations;
            if (contains(content, kImprovedOpenTag))
                violations.push_back(
                    "do not propose a new prompt; output only the diagnosis text");
            return violations;
        });
    } catch (const ValidationError& e) {
        fail(Errc::gradient_failed, e.what());
    }
    GradientText g;
    g.text = trim(resp.content);
    g.iteration = iteration;
    return g;
}

namespace {

// The rewritten prompt must still specify the output format; these markers
// detect the format block without parsing prose.
const char* kFormatMarkers[4] = {"SKILL.md", "frontmatter", "name", "description"};

std::vector<std::string> validate_optimizer_response(const std::string& content) {
    std::vector<std::string> violations;
    std::optional<std::string> improved = extract_improved_variable(content);
    if (!improved) {
        violations.push_back("wrap the full improved prompt in exactly one "
                             "<IMPROVED_VARIABLE>...</IMPROVED_VARIABLE> block");
        return violations;
    }
    if (improved->empty()) {
        violations.push_back("the improved prompt is empty");
        return violations;
    }
    for (const char* marker : kFormatMarkers)
        if (!contains(*improved, marker))
            violations.push_back(std::string("the improved prompt must keep the SKILL.md "
                                             "format specification (missing \"") +
                                 marker + "\")");
    return violations;
}

} // namespace

PromptState apply_gradient(const PromptState& prompt_I, const GradientText& gradient,
                           ChatClient& client, const CallSettings& settings,
                           const std::string& system_prompt) {
    require(!prompt_I.frozen, "cannot optimize a frozen prompt");
    require(!trim(gradient.text).empty(), "gradient text is empty");
    require(!system_prompt.empty(), "optimizer model needs a system prompt");

    std::string user = "Current prompt:\n<<<PROMPT\n" + prompt_I.text +
                       "\nPROMPT>>>\n\nFeedback on the prompt:\n" + gradient.text +
                       "\n\nRewrite the prompt now.";
    ChatRequest req = make_request(kTagOptimizer, settings,
                                   {{Role::system, system_prompt}, {Role::user, user}});
    ChatResponse resp;
    try {
        resp = client.complete_validated(std::move(req), validate_optimizer_response);
    } catch (const ValidationError& e) {
        fail(Errc::update_rejected, e.what());
    }
    return prompt_I.bumped(*extract_improved_variable(resp.content));
}

namespace {

void persist_record(const RunConfig& cfg, const TaskSpec& task, const RunRecord& rec) {
    if (!cfg.persist_dir)
        return;
    std::filesystem::path dir =
        *cfg.persist_dir / task.task_id / ("iter_" + std::to_string(rec.iteration));
    ensure_dir(dir);
    atomic_write_file(dir / "prompt.txt", rec.prompt_text);
    if (rec.skill)
        atomic_write_file(dir / "skill.md", serialize_skill(*rec.skill));
    if (rec.recon)
        save_trajectory(*rec.recon, dir / "recon.traj");
    if (rec.gradient)
        atomic_write_file(dir / "gradient.txt", rec.gradient->text);

    json losses;
    losses["outcome"] = rec.report.triple.outcome;
    losses["recon"] = rec.report.triple.recon;
    losses["rubric"] = rec.report.triple.rubric;
    losses["f_outcome"] = rec.report.f_outcome;
    losses["f_recon"] = rec.report.f_recon;
    losses["f_rubric"] = rec.report.f_rubric;
    if (!rec.note.empty())
        losses["note"] = rec.note;
    atomic_write_file(dir / "losses.rec", losses.dump(2) + "\n");
}

void persist_index(const RunConfig& cfg, const TaskSpec& task,
                   const std::vector<RunRecord>& records) {
    if (!cfg.persist_dir)
        return;
    std::filesystem::path dir = *cfg.persist_dir / task.task_id;
    ensure_dir(dir);
    std::string out;
    for (const RunRecord& rec : records) {
        json row;
        row["iteration"] = rec.iteration;
        row["outcome"] = rec.report.triple.outcome;
        row["recon"] = rec.report.triple.recon;
        row["rubric"] = rec.report.triple.rubric;
        row["is_best"] = rec.is_best;
        row["prompt_version_before"] = rec.prompt_version_before;
        row["prompt_version_after"] = rec.prompt_version_after;
        row["note"] = rec.note;
        out += row.dump() + "\n";
    }
    atomic_write_file(dir / "index.rec", out);
}

LossReport failed_induction_report(const std::string& why) {
    LossReport report;
    report.triple = LossTriple::worst();
    report.f_outcome = "no reconstruction: " + why;
    report.f_recon = "no reconstruction: " + why;
    report.f_rubric = "no skill document: " + why;
    return report;
}

} // namespace

OptimizeResult optimize_skill(const TaskSpec& task, const Trajectory& traj,
                              const PromptState& prompt_I0, const PromptState& prompt_D,
                              const RunConfig& cfg, EnvRegistry& registry, ChatClient& client) {
    require(traj.succeeded.has_value() && *traj.succeeded,
            "optimization starts from a successful source trajectory");
    require(traj.origin != TrajOrigin::reconstruction,
            "the source trajectory cannot be a reconstruction");
    require(prompt_D.frozen, "the deduction prompt must be frozen");
    require(prompt_I0.version == 0, "the induction prompt starts at version 0");
    require(!prompt_I0.frozen, "the induction prompt is the optimization variable");
    require(cfg.max_iterations >= 1, "need at least one iteration");

    OptimizeResult result;
    PromptState prompt = prompt_I0;
    std::optional<size_t> best_idx;

    try {
        for (int q = 0; q < cfg.max_iterations; ++q) {
            RunRecord rec;
            rec.iteration = q;
            rec.prompt_text = prompt.text;
            rec.prompt_version_before = prompt.version;

            SkillDoc skill;
            bool have_skill = false;
            try {
                skill = induce(task, traj, prompt, client, cfg.induction_call);
                have_skill = true;
            } catch (const Error& e) {
                if (e.code() != Errc::induction_failed)
                    throw;
                rec.note = e.what();
                rec.report = failed_induction_report(e.what());
            }

            if (have_skill) {
                rec.skill = skill;
                auto session = registry.open(task); // fresh state every iteration
                Trajectory recon = run_deduction(task, std::span<const SkillDoc>(&skill, 1),
                                                 prompt_D, *session, cfg.deduction, client,
                                                 cfg.deduction_call,
                                                 cfg.prompts.deduction_template);

                OutcomeResult oc = outcome_loss(recon, task, *session);
                recon.succeeded = oc.grade.passed();
                rec.recon = recon;

                ReconResult rc = recon_loss(traj, recon, task, client, cfg.judge_recon_call,
                                            cfg.prompts.judge_recon_system);
                RubricResult rb = rubric_loss(skill, task, client, cfg.judge_rubric_call,
                                              cfg.prompts.judge_rubric_system);

                rec.report.triple = {oc.loss, rc.loss, rb.loss};
                validate_triple(rec.report.triple);
                rec.report.f_outcome = oc.feedback;
                rec.report.f_recon = rc.feedback;
                rec.report.f_rubric = rb.feedback;
                rec.report.recon_detail = rc.detail;
                rec.report.rubric_detail = rb.detail;

                // strict improvement only; ties keep the earlier best
                if (!best_idx ||
                    lex_less(rec.report.triple, result.records[*best_idx].report.triple)) {
                    rec.is_best = true;
                    best_idx = result.records.size();
                }

                // the final iteration's updated prompt would never be used
                if (q + 1 < cfg.max_iterations) {
                    try {
                        GradientText g =
                            compute_gradient(prompt, task, skill, recon, rec.report, q,
                                             client, cfg.gradient_call,
                                             cfg.prompts.gradient_system);
                        rec.gradient = g;
                        prompt = apply_gradient(prompt, g, client, cfg.optimizer_call,
                                                cfg.prompts.optimizer_system);
                    } catch (const Error& e) {
                        if (e.code() != Errc::gradient_failed &&
                            e.code() != Errc::update_rejected)
                            throw;
                        rec.note = e.what(); // prompt stays as-is
                    }
                }
            }

            rec.prompt_version_after = prompt.version;
            result.records.push_back(std::move(rec));
            persist_record(cfg, task, result.records.back());
        }
    } catch (const Error&) {
        persist_index(cfg, task, result.records);
        throw;
    }

    persist_index(cfg, task, result.records);
    if (!best_idx)
        fail(Errc::best_unavailable,
             "every iteration failed induction for task " + task.task_id);

    const RunRecord& best = result.records[*best_idx];
    result.best = *best.skill;
    result.best_triple = best.report.triple;
    result.best_iteration = best.iteration;
    if (cfg.persist_dir)
        atomic_write_file(*cfg.persist_dir / task.task_id / "best.md",
                          serialize_skill(result.best));
    return result;
}

} // namespace mindskill
