#include "mindskill/agents.hpp"

#include "mindskill/environment.hpp"
#include "mindskill/errors.hpp"
#include "mindskill/provider.hpp"
#include "mindskill/skilldoc.hpp"
#include "mindskill/toyworld.hpp"
#include "mindskill/trajectory.hpp"
#include "mindskill/util.hpp"

#include <doctest.h>

#include <memory>

using namespace mindskill;

namespace {

constexpr const char* kTemplate =
    "You operate the tracker app.\n\n{{skills}}\n\nTask: {{instruction}}\n";

ChatClient scripted_client(std::vector<ScriptEntry> entries,
                           std::shared_ptr<AuditLog> audit = nullptr) {
    if (!audit)
        audit = std::make_shared<AuditLog>();
    return ChatClient(std::make_shared<ScriptedBackend>(std::move(entries)), audit,
                      RetryPolicy{3, 0});
}

TaskSpec agents_task() {
    return toyworld::make_dataset("agent-tests", 7300, 1, 0).split_tasks("train").at(0);
}

Trajectory source_trajectory(const TaskSpec& task) {
    EnvRegistry registry = EnvRegistry::builtin();
    return wrap_solution(task, toyworld::solution_actions(task), registry);
}

SkillDoc demo_skill() {
    return make_skill_doc("tracker-routine", "log in, then walk every page",
                          {{"Overview", "Authenticate before touching items."},
                           {"Procedure", "1. login\n2. list_items per page\n3. update_item"}});
}

std::string valid_skill_text() {
    return serialize_skill(make_skill_doc(
        "induced", "what the model would produce",
        {{"Overview", "O."},
         {"When to Apply", "W."},
         {"Procedure", "Do each step."},
         {"Key Patterns", "K."},
         {"Common Pitfalls", "Careful."}}));
}

// deduction responses for a scripted full solution
std::vector<ScriptEntry> deduction_script(const TaskSpec& task) {
    std::vector<ScriptEntry> entries;
    for (const std::string& action : toyworld::solution_actions(task))
        entries.push_back({std::string(kTagDeduction), std::nullopt,
                           "Thought: next step.\nAction: " + action});
    entries.push_back(
        {std::string(kTagDeduction), std::nullopt, "Thought: done.\nAction: TASK_COMPLETE"});
    return entries;
}

} // namespace

TEST_CASE("PromptState tracks version, digest and frozen flag") {
    PromptState p = PromptState::make("be concise");
    CHECK(p.version == 0);
    CHECK(!p.frozen);
    CHECK(p.digest == fnv1a64_hex("be concise"));

    PromptState next = p.bumped("be verbose");
    CHECK(next.version == 1);
    CHECK(next.text == "be verbose");
    CHECK(next.digest == fnv1a64_hex("be verbose"));
    CHECK(next.digest != p.digest);
    // the original is untouched
    CHECK(p.version == 0);
    CHECK(p.text == "be concise");

    CHECK(next.bumped("third").version == 2);

    PromptState frozen = PromptState::make("never changes", true);
    CHECK(frozen.frozen);
    CHECK_THROWS_AS(frozen.bumped("attempt"), Error);

    CHECK_THROWS_AS(PromptState::make(""), Error);
    CHECK_THROWS_AS(PromptState::make("  \n "), Error);
    CHECK_THROWS_AS(p.bumped("   "), Error);
}

TEST_CASE("fill_deduction_template substitutes each placeholder exactly once") {
    SkillDoc skill = demo_skill();
    std::string filled =
        fill_deduction_template(kTemplate, std::span<const SkillDoc>(&skill, 1), "do the thing");
    CHECK(filled.find("{{skills}}") == std::string::npos);
    CHECK(filled.find("{{instruction}}") == std::string::npos);
    CHECK(filled.find("tracker-routine") != std::string::npos);
    CHECK(filled.find("Task: do the thing") != std::string::npos);

    // no skills: the block renders its empty notice rather than vanishing
    std::string bare =
        fill_deduction_template(kTemplate, std::span<const SkillDoc>(), "do the thing");
    CHECK(bare.find(render_skills_block({})) != std::string::npos);

    auto check_bad = [&](const std::string& tpl) {
        try {
            fill_deduction_template(tpl, std::span<const SkillDoc>(), "x");
            FAIL("expected BadTemplate for: " << tpl);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::bad_template);
        }
    };
    check_bad("no placeholders");
    check_bad("only {{skills}}");
    check_bad("only {{instruction}}");
    check_bad("{{skills}} twice {{skills}} with {{instruction}}");
    check_bad("{{skills}} and {{instruction}} twice {{instruction}}");
}

TEST_CASE("parse_deduction_turn splits thought from action") {
    ParsedTurn t = parse_deduction_turn("Thought: log in first.\nAction: login(user=\"u\")");
    CHECK(t.labeled);
    CHECK(t.thought == "log in first.");
    CHECK(t.action == "login(user=\"u\")");

    // multi-line thought, label stripped once
    t = parse_deduction_turn("Thought: part one\nstill thinking\nAction: list_items(page=1)");
    CHECK(t.labeled);
    CHECK(t.thought == "part one\nstill thinking");
    CHECK(t.action == "list_items(page=1)");

    // indented action line still counts
    t = parse_deduction_turn("Thought: hm\n  Action: update_item(id=1)");
    CHECK(t.labeled);
    CHECK(t.action == "update_item(id=1)");

    // no action label: whole content treated as an unlabeled attempt
    t = parse_deduction_turn("login(user=\"u\", pass=\"p\")");
    CHECK(!t.labeled);
    CHECK(t.thought.empty());
    CHECK(t.action == "login(user=\"u\", pass=\"p\")");

    // bare action label with empty rest
    t = parse_deduction_turn("Thought: confused\nAction:");
    CHECK(t.labeled);
    CHECK(t.action.empty());

    // only the first Action line splits
    t = parse_deduction_turn("Thought: a\nAction: first()\nAction: second()");
    CHECK(t.action == "first()");

    // thought without label survives as-is
    t = parse_deduction_turn("just reasoning\nAction: noop()");
    CHECK(t.thought == "just reasoning");
}

TEST_CASE("induce turns a trajectory into a validated skill document") {
    TaskSpec task = agents_task();
    Trajectory traj = source_trajectory(task);
    PromptState prompt = PromptState::make("You write skills.");

    auto audit = std::make_shared<AuditLog>();
    ChatClient client = scripted_client(
        {{std::string(kTagInduction), std::nullopt, valid_skill_text()}}, audit);
    SkillDoc doc = induce(task, traj, prompt, client, CallSettings{});
    CHECK(doc.name == "induced");
    CHECK(doc.sections.size() == 5);

    std::vector<AuditEntry> entries = audit->entries();
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].tag == kTagInduction);
    std::string request = render_request_text(entries[0].request);
    CHECK(request.find(prompt.text) != std::string::npos);
    CHECK(request.find(task.instruction) != std::string::npos);
    CHECK(request.find(traj.steps.at(0).action) != std::string::npos);
}

TEST_CASE("induce repairs an invalid response through the fix loop") {
    TaskSpec task = agents_task();
    Trajectory traj = source_trajectory(task);
    PromptState prompt = PromptState::make("You write skills.");

    auto audit = std::make_shared<AuditLog>();
    ChatClient client = scripted_client({{std::string(kTagInduction), std::nullopt, "not a skill"},
                                         {std::string(kTagInduction), std::nullopt, valid_skill_text()}},
                                        audit);
    SkillDoc doc = induce(task, traj, prompt, client, CallSettings{});
    CHECK(doc.name == "induced");

    std::vector<AuditEntry> entries = audit->entries();
    REQUIRE(entries.size() == 2);
    // the retry carries the rejected draft and a fix instruction
    REQUIRE(entries[1].request.messages.size() == 4);
    CHECK(entries[1].request.messages[2].role == Role::assistant);
    CHECK(entries[1].request.messages[2].content == "not a skill");
    CHECK(entries[1].request.messages[3].role == Role::user);
}

TEST_CASE("induce surfaces exhausted validation as an induction failure") {
    TaskSpec task = agents_task();
    Trajectory traj = source_trajectory(task);
    PromptState prompt = PromptState::make("You write skills.");

    std::vector<ScriptEntry> entries;
    for (int i = 0; i < 3; ++i)
        entries.push_back({std::string(kTagInduction), std::nullopt, "still not a skill"});
    ChatClient client = scripted_client(std::move(entries));
    try {
        induce(task, traj, prompt, client, CallSettings{});
        FAIL("expected InductionFailed");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::induction_failed);
        CHECK(std::string(e.what()).find(task.task_id) != std::string::npos);
    }
}

TEST_CASE("induce rejects unusable source trajectories") {
    TaskSpec task = agents_task();
    PromptState prompt = PromptState::make("You write skills.");
    ChatClient client = scripted_client({});

    Trajectory recon;
    recon.task_id = task.task_id;
    recon.origin = TrajOrigin::reconstruction;
    recon.steps.push_back({"t", "a()", "o"});
    CHECK_THROWS_AS(induce(task, recon, prompt, client, CallSettings{}), Error);

    Trajectory failed = source_trajectory(task);
    failed.origin = TrajOrigin::rollout;
    failed.succeeded = false;
    CHECK_THROWS_AS(induce(task, failed, prompt, client, CallSettings{}), Error);

    Trajectory unset = source_trajectory(task);
    unset.succeeded.reset();
    CHECK_THROWS_AS(induce(task, unset, prompt, client, CallSettings{}), Error);
}

TEST_CASE("run_deduction replays a task from skills alone") {
    TaskSpec task = agents_task();
    SkillDoc skill = demo_skill();
    PromptState prompt_D = PromptState::make("You are the deduction agent.", true);
    auto session = EnvRegistry::builtin().open(task);

    auto audit = std::make_shared<AuditLog>();
    ChatClient client = scripted_client(deduction_script(task), audit);
    Trajectory traj = deduce(task, skill, prompt_D, *session, DeductionConfig{}, client,
                             CallSettings{}, kTemplate);

    std::vector<std::string> actions = toyworld::solution_actions(task);
    CHECK(traj.origin == TrajOrigin::reconstruction);
    CHECK(!traj.succeeded.has_value()); // grading is the caller's job
    REQUIRE(traj.steps.size() == actions.size() + 1);
    for (size_t i = 0; i < actions.size(); ++i) {
        CHECK(traj.steps[i].action == actions[i]);
        CHECK(!traj.steps[i].observation.empty());
        CHECK(traj.steps[i].observation.find("ERROR") == std::string::npos);
    }
    CHECK(traj.steps.back().action == "TASK_COMPLETE");
    CHECK(traj.steps.back().observation == "(task marked complete)");

    // the environment actually reached the goal state
    CHECK(session->evaluate(task).passed());

    // conversation structure: system prompt, filled template, then one
    // assistant/user pair per executed action
    std::vector<AuditEntry> entries = audit->entries();
    REQUIRE(entries.size() == actions.size() + 1);
    const ChatRequest& first = entries.front().request;
    REQUIRE(first.messages.size() == 2);
    CHECK(first.messages[0].role == Role::system);
    CHECK(first.messages[0].content == prompt_D.text);
    CHECK(first.messages[1].content.find("tracker-routine") != std::string::npos);
    CHECK(first.messages[1].content.find(task.instruction) != std::string::npos);
    const ChatRequest& last = entries.back().request;
    CHECK(last.messages.size() == 2 + 2 * actions.size());
    CHECK(last.messages.back().role == Role::user);
    CHECK(last.messages.back().content.find("Observation: ") == 0);

    // the source trajectory text never leaks into any deduction request; the
    // marker thought only exists inside wrapped ground-truth trajectories
    for (const AuditEntry& e : entries)
        CHECK(render_request_text(e.request).find(kWrappedThought) == std::string::npos);
}

TEST_CASE("run_deduction enforces its preconditions") {
    TaskSpec task = agents_task();
    SkillDoc skill = demo_skill();
    ChatClient client = scripted_client({});
    auto session = EnvRegistry::builtin().open(task);

    PromptState thawed = PromptState::make("not frozen");
    CHECK_THROWS_AS(deduce(task, skill, thawed, *session, DeductionConfig{}, client,
                           CallSettings{}, kTemplate),
                    Error);

    PromptState frozen = PromptState::make("frozen", true);
    DeductionConfig bad_steps;
    bad_steps.max_steps = 0;
    CHECK_THROWS_AS(
        deduce(task, skill, frozen, *session, bad_steps, client, CallSettings{}, kTemplate),
        Error);

    DeductionConfig bad_marker;
    bad_marker.stop_marker.clear();
    CHECK_THROWS_AS(
        deduce(task, skill, frozen, *session, bad_marker, client, CallSettings{}, kTemplate),
        Error);

    // a session that already executed steps is not fresh
    session->exec(parse_action("list_items(page=1)"));
    CHECK_THROWS_AS(deduce(task, skill, frozen, *session, DeductionConfig{}, client,
                           CallSettings{}, kTemplate),
                    Error);
}

TEST_CASE("deduction failures stay in-band as observations") {
    TaskSpec task = agents_task();
    SkillDoc skill = demo_skill();
    PromptState prompt_D = PromptState::make("deduction", true);
    auto session = EnvRegistry::builtin().open(task);

    DeductionConfig cfg;
    cfg.max_steps = 4;
    ChatClient client = scripted_client({
        // no Action label at all
        {std::string(kTagDeduction), std::nullopt, "I will just describe my plan."},
        // malformed action grammar
        {std::string(kTagDeduction), std::nullopt, "Thought: try\nAction: login(user="},
        // valid grammar, unknown api: env reports in-band
        {std::string(kTagDeduction), std::nullopt, "Thought: try\nAction: frobnicate()"},
        {std::string(kTagDeduction), std::nullopt, "Thought: stop\nAction: TASK_COMPLETE"},
    });
    Trajectory traj =
        deduce(task, skill, prompt_D, *session, cfg, client, CallSettings{}, kTemplate);

    REQUIRE(traj.steps.size() == 4);
    CHECK(traj.steps[0].observation.find("could not parse action") != std::string::npos);
    CHECK(traj.steps[0].observation.find("Action:") != std::string::npos);
    CHECK(traj.steps[1].observation.find("ERROR") != std::string::npos);
    CHECK(traj.steps[2].observation.find("unknown api") != std::string::npos);
    CHECK(traj.steps.back().action == "TASK_COMPLETE");
}

TEST_CASE("run_deduction stops at max_steps without a completion marker") {
    TaskSpec task = agents_task();
    SkillDoc skill = demo_skill();
    PromptState prompt_D = PromptState::make("deduction", true);
    auto session = EnvRegistry::builtin().open(task);

    DeductionConfig cfg;
    cfg.max_steps = 3;
    std::vector<ScriptEntry> entries;
    for (int i = 0; i < 5; ++i)
        entries.push_back(
            {std::string(kTagDeduction), std::nullopt, "Thought: look\nAction: list_items(page=1)"});
    ChatClient client = scripted_client(std::move(entries));
    Trajectory traj =
        deduce(task, skill, prompt_D, *session, cfg, client, CallSettings{}, kTemplate);
    CHECK(traj.steps.size() == 3);

    // an unlabeled TASK_COMPLETE is not a stop signal
    auto session2 = EnvRegistry::builtin().open(task);
    DeductionConfig one;
    one.max_steps = 1;
    ChatClient client2 =
        scripted_client({{std::string(kTagDeduction), std::nullopt, "TASK_COMPLETE"}});
    Trajectory t2 =
        deduce(task, skill, prompt_D, *session2, one, client2, CallSettings{}, kTemplate);
    REQUIRE(t2.steps.size() == 1);
    CHECK(t2.steps[0].observation.find("could not parse action") != std::string::npos);
}

namespace {

// minimal environment whose observations exceed the trajectory cap
class NoisySession : public EnvSession {
public:
    NoisySession() : EnvSession("noisy", 0) {}

    OutcomeGrade evaluate(const TaskSpec&) override { return OutcomeGrade{}; }
    std::string serialize_state() const override { return "{}"; }

protected:
    ToolResult do_exec(const ToolCall&) override {
        ToolResult r;
        r.ok = true;
        r.payload["blob"] = std::string(2 * kObservationLimit, 'x');
        return r;
    }
};

} // namespace

TEST_CASE("oversized observations are truncated inside the loop") {
    TaskSpec task = agents_task();
    SkillDoc skill = demo_skill();
    PromptState prompt_D = PromptState::make("deduction", true);
    NoisySession session;

    DeductionConfig cfg;
    cfg.max_steps = 1;
    ChatClient client = scripted_client(
        {{std::string(kTagDeduction), std::nullopt, "Thought: read\nAction: anything()"}});
    Trajectory traj =
        deduce(task, skill, prompt_D, session, cfg, client, CallSettings{}, kTemplate);

    REQUIRE(traj.steps.size() == 1);
    const std::string& obs = traj.steps[0].observation;
    CHECK(obs.size() < 2 * kObservationLimit);
    CHECK(obs == truncate_observation(session.exec(ToolCall{"anything", {}}).observation()));
}
