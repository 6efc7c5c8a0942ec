#include "mindskill/agents.hpp"

#include "mindskill/errors.hpp"
#include "mindskill/util.hpp"

namespace mindskill {

PromptState PromptState::make(std::string text, bool frozen) {
    require(!trim(text).empty(), "a prompt cannot be empty");
    PromptState p;
    p.digest = fnv1a64_hex(text);
    p.text = std::move(text);
    p.version = 0;
    p.frozen = frozen;
    return p;
}

PromptState PromptState::bumped(std::string new_text) const {
    require(!frozen, "cannot update a frozen prompt");
    require(!trim(new_text).empty(), "a prompt cannot be empty");
    PromptState p;
    p.digest = fnv1a64_hex(new_text);
    p.text = std::move(new_text);
    p.version = version + 1;
    p.frozen = false;
    return p;
}

namespace {

size_t count_occurrences(const std::string& text, std::string_view needle) {
    size_t count = 0;
    size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

std::string replace_once(std::string text, std::string_view needle, const std::string& with) {
    size_t pos = text.find(needle);
    text.replace(pos, needle.size(), with);
    return text;
}

} // namespace

std::string fill_deduction_template(const std::string& template_text,
                                    std::span<const SkillDoc> skills,
                                    const std::string& instruction) {
    if (count_occurrences(template_text, kSkillsPlaceholder) != 1)
        fail(Errc::bad_template,
             "template must contain {{skills}} exactly once");
    if (count_occurrences(template_text, kInstructionPlaceholder) != 1)
        fail(Errc::bad_template,
             "template must contain {{instruction}} exactly once");
    std::string out = replace_once(template_text, kSkillsPlaceholder,
                                   render_skills_block(skills));
    return replace_once(std::move(out), kInstructionPlaceholder, instruction);
}

SkillDoc induce(const TaskSpec& task, const Trajectory& traj, const PromptState& prompt_I,
                ChatClient& client, const CallSettings& settings) {
    require(traj.origin != TrajOrigin::reconstruction,
            "induction input must be a source trajectory, not a reconstruction");
    require(traj.succeeded.has_value() && *traj.succeeded,
            "induction input trajectory must have succeeded");
    validate_trajectory(traj);

    std::string user = "Task instruction:\n" + task.instruction +
                       "\n\nRecorded trajectory:\n" + render_trajectory(traj) +
                       "\n\nWrite the SKILL.md document now. Output only the document.";
    ChatRequest req = make_request(kTagInduction, settings,
                                   {{Role::system, prompt_I.text}, {Role::user, user}});
    ChatResponse resp;
    try {
        resp = client.complete_validated(std::move(req), [](const std::string& content) {
            return render_violations(validate_skill_format(content));
        });
    } catch (const ValidationError& e) {
        fail(Errc::induction_failed,
             "no valid skill document for " + task.task_id + ": " + e.what());
    }
    return parse_skill(resp.content);
}

ParsedTurn parse_deduction_turn(const std::string& content) {
    ParsedTurn turn;
    std::vector<std::string> lines = split_lines(content);
    size_t offset = 0;
    for (const std::string& line : lines) {
        std::string trimmed = trim(line);
        if (starts_with(trimmed, "Action:")) {
            turn.labeled = true;
            turn.action = trim(trimmed.substr(7));
            std::string thought = trim(content.substr(0, offset));
            if (starts_with(thought, "Thought:"))
                thought = trim(thought.substr(8));
            turn.thought = std::move(thought);
            return turn;
        }
        offset += line.size() + 1;
    }
    turn.thought.clear();
    turn.action = trim(content);
    return turn;
}

Trajectory run_deduction(const TaskSpec& task, std::span<const SkillDoc> skills,
                         const PromptState& prompt_D, EnvSession& session,
                         const DeductionConfig& cfg, ChatClient& client,
                         const CallSettings& settings, const std::string& template_text) {
    require(prompt_D.frozen, "the deduction prompt must be frozen");
    require(session.step_count() == 0, "deduction needs a freshly reset session");
    require(cfg.max_steps >= 1, "max_steps must be positive");
    require(!cfg.stop_marker.empty(), "stop marker cannot be empty");

    std::vector<ChatMessage> messages;
    messages.push_back({Role::system, prompt_D.text});
    messages.push_back({Role::user, fill_deduction_template(template_text, skills,
                                                            task.instruction)});

    Trajectory traj;
    traj.task_id = task.task_id;
    traj.origin = TrajOrigin::reconstruction;

    for (int step = 0; step < cfg.max_steps; ++step) {
        ChatResponse resp = client.complete(make_request(kTagDeduction, settings, messages));
        ParsedTurn turn = parse_deduction_turn(resp.content);
        if (turn.action.empty())
            turn.action = "(empty action)";

        if (turn.labeled && turn.action == cfg.stop_marker) {
            traj.steps.push_back({turn.thought, turn.action, "(task marked complete)"});
            break;
        }

        std::string observation;
        if (!turn.labeled) {
            observation =
                "ERROR: could not parse action: no line starting with \"Action:\" found";
        } else {
            try {
                ToolCall call = parse_action(turn.action);
                observation = session.exec(call).observation();
            } catch (const Error& e) {
                observation = std::string("ERROR: could not parse action: ") + e.what();
            }
        }
        observation = truncate_observation(std::move(observation));
        traj.steps.push_back({turn.thought, turn.action, observation});

        messages.push_back({Role::assistant, resp.content});
        messages.push_back({Role::user, "Observation: " + observation});
    }

    validate_trajectory(traj);
    return traj;
}

} // namespace mindskill
