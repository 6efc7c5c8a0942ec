#include "mindskill/losses.hpp"

#include "mindskill/environment.hpp"
#include "mindskill/errors.hpp"
#include "mindskill/provider.hpp"
#include "mindskill/toyworld.hpp"
#include "mindskill/trajectory.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <memory>
#include <random>

using namespace mindskill;
using nlohmann::json;

namespace {

ChatClient scripted_client(std::vector<ScriptEntry> entries,
                           std::shared_ptr<AuditLog> audit = nullptr) {
    if (!audit)
        audit = std::make_shared<AuditLog>();
    return ChatClient(std::make_shared<ScriptedBackend>(std::move(entries)), audit,
                      RetryPolicy{3, 0});
}

std::string recon_json(int score, bool api, bool flow, bool state,
                       std::vector<std::string> mismatches = {}) {
    json j;
    j["alignment_score"] = score;
    j["api_sequence_match"] = api;
    j["control_flow_match"] = flow;
    j["final_state_match"] = state;
    j["mismatches"] = mismatches;
    return j.dump();
}

std::string rubric_json(int gt, int act, int trans, int comp, int conc,
                        std::vector<std::string> leaked = {}, std::string issues = "") {
    json j;
    j["gt_independence"] = gt;
    j["actionability"] = act;
    j["transferability"] = trans;
    j["completeness"] = comp;
    j["conciseness"] = conc;
    j["leaked_claims"] = leaked;
    j["issues"] = issues;
    return j.dump();
}

TaskSpec losses_task() {
    return toyworld::make_dataset("loss-tests", 7100, 1, 0).split_tasks("train").at(0);
}

Trajectory ground_truth(const TaskSpec& task) {
    EnvRegistry registry = EnvRegistry::builtin();
    return wrap_solution(task, toyworld::solution_actions(task), registry);
}

Trajectory fake_recon(const TaskSpec& task) {
    Trajectory t;
    t.task_id = task.task_id;
    t.origin = TrajOrigin::reconstruction;
    t.steps.push_back({"log in first", "login(user=\"u\", pass=\"p\")", "{\"token\":\"x\"}"});
    t.succeeded = true;
    return t;
}

SkillDoc tiny_skill() {
    return make_skill_doc("sample", "a sample skill",
                          {{"Overview", "Do the thing."}, {"Procedure", "1. Act."}});
}

} // namespace

TEST_CASE("lex_less orders triples by outcome, then recon, then rubric") {
    CHECK(lex_less({0.0, 10.0, 10.0}, {0.25, 0.0, 0.0}));
    CHECK(lex_less({0.5, 2.0, 9.0}, {0.5, 3.0, 0.0}));
    CHECK(lex_less({0.5, 3.0, 1.0}, {0.5, 3.0, 2.0}));
    CHECK(!lex_less({0.5, 3.0, 2.0}, {0.5, 3.0, 2.0})); // strict
    CHECK(!lex_less({1.0, 0.0, 0.0}, {0.0, 10.0, 10.0}));

    LossTriple w = LossTriple::worst();
    CHECK(w.outcome == 1.0);
    CHECK(w.recon == 10.0);
    CHECK(w.rubric == 10.0);
    CHECK(!lex_less(w, w));
}

TEST_CASE("validate_triple rejects NaN and out-of-range components") {
    validate_triple({0.0, 0.0, 0.0});
    validate_triple({1.0, 10.0, 10.0});
    validate_triple({0.25, 4.0, 3.5});

    CHECK_THROWS_AS(validate_triple({-0.1, 0.0, 0.0}), Error);
    CHECK_THROWS_AS(validate_triple({1.1, 0.0, 0.0}), Error);
    CHECK_THROWS_AS(validate_triple({0.0, -1.0, 0.0}), Error);
    CHECK_THROWS_AS(validate_triple({0.0, 10.5, 0.0}), Error);
    CHECK_THROWS_AS(validate_triple({0.0, 0.0, 11.0}), Error);
    CHECK_THROWS_AS(validate_triple({std::nan(""), 0.0, 0.0}), Error);
    CHECK_THROWS_AS(validate_triple({0.0, std::nan(""), 0.0}), Error);
    CHECK_THROWS_AS(validate_triple({0.0, 0.0, std::nan("")}), Error);
}

TEST_CASE("render_triple prints integers bare and fractions compactly") {
    CHECK(render_triple({0.0, 10.0, 10.0}) == "(0, 10, 10)");
    CHECK(render_triple({0.25, 4.0, 3.0}) == "(0.25, 4, 3)");
    CHECK(render_triple({1.0, 2.5, 0.0}) == "(1, 2.5, 0)");
}

TEST_CASE("rubric_overall gates on gt_independence") {
    // a leaky skill cannot be rescued by high style scores
    RubricScores leaky{4, 10, 10, 10, 10, {}, ""};
    CHECK(rubric_overall(leaky) == doctest::Approx(4.0));

    // a clean but weak skill is held back by the mean
    RubricScores weak{10, 5, 5, 5, 5, {}, ""};
    CHECK(rubric_overall(weak) == doctest::Approx(6.0));

    RubricScores perfect{10, 10, 10, 10, 10, {}, ""};
    CHECK(rubric_overall(perfect) == doctest::Approx(10.0));

    RubricScores zero{0, 0, 0, 0, 0, {}, ""};
    CHECK(rubric_overall(zero) == doctest::Approx(0.0));
}

TEST_CASE("judge scores map onto losses as 10 minus the score") {
    // spot scores across the range
    for (int score : {0, 3, 8, 10}) {
        ChatClient client = scripted_client(
            {{std::string(kTagJudgeRecon), std::nullopt, recon_json(score, true, true, true)}});
        ReconResult r = recon_loss(ground_truth(losses_task()), fake_recon(losses_task()),
                                   losses_task(), client, CallSettings{},
                                   "You judge procedural alignment.");
        CHECK(r.loss == doctest::Approx(10.0 - score));
    }
}

TEST_CASE("extract_json_block finds the first balanced object") {
    CHECK(extract_json_block("{\"a\":1}") == "{\"a\":1}");
    CHECK(extract_json_block("prose before {\"a\": {\"b\": 2}} prose after") ==
          "{\"a\": {\"b\": 2}}");
    CHECK(extract_json_block("text {\"s\": \"braces } in { string\"} tail") ==
          "{\"s\": \"braces } in { string\"}");
    CHECK(extract_json_block("escaped {\"s\": \"quote \\\" then } brace\"} end") ==
          "{\"s\": \"quote \\\" then } brace\"}");
    CHECK(extract_json_block("first {\"a\":1} second {\"b\":2}") == "{\"a\":1}");
    CHECK(!extract_json_block("no object here"));
    CHECK(!extract_json_block("unclosed {\"a\": 1"));
    CHECK(!extract_json_block(""));
}

TEST_CASE("validate_recon_judgment reports each schema violation") {
    CHECK(validate_recon_judgment(recon_json(7, true, false, true, {"m1"})).empty());
    CHECK(validate_recon_judgment("verdict follows " + recon_json(0, false, false, false) +
                                  " end")
              .empty());

    auto v = validate_recon_judgment("no json at all");
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("JSON object") != std::string::npos);

    v = validate_recon_judgment("{\"alignment_score\": 3,}");
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("parse") != std::string::npos);

    v = validate_recon_judgment("{}");
    CHECK(v.size() == 5); // every field missing

    v = validate_recon_judgment(
        "{\"alignment_score\": 11, \"api_sequence_match\": true, "
        "\"control_flow_match\": true, \"final_state_match\": true, \"mismatches\": []}");
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("between 0 and 10") != std::string::npos);

    v = validate_recon_judgment(
        "{\"alignment_score\": 2.5, \"api_sequence_match\": true, "
        "\"control_flow_match\": true, \"final_state_match\": true, \"mismatches\": []}");
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("integer") != std::string::npos);

    v = validate_recon_judgment(
        "{\"alignment_score\": 5, \"api_sequence_match\": \"yes\", "
        "\"control_flow_match\": true, \"final_state_match\": true, \"mismatches\": []}");
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("true or false") != std::string::npos);

    v = validate_recon_judgment(
        "{\"alignment_score\": 5, \"api_sequence_match\": true, "
        "\"control_flow_match\": true, \"final_state_match\": true, \"mismatches\": [1, 2]}");
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("only strings") != std::string::npos);
}

TEST_CASE("validate_rubric_scores reports each schema violation") {
    CHECK(validate_rubric_scores(rubric_json(8, 7, 6, 5, 4, {"claim"}, "fine")).empty());

    auto v = validate_rubric_scores("{}");
    CHECK(v.size() == 7);

    std::string missing_issues =
        "{\"gt_independence\": 1, \"actionability\": 1, \"transferability\": 1, "
        "\"completeness\": 1, \"conciseness\": 1, \"leaked_claims\": []}";
    v = validate_rubric_scores(missing_issues);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("issues") != std::string::npos);

    std::string bad_issues =
        "{\"gt_independence\": 1, \"actionability\": 1, \"transferability\": 1, "
        "\"completeness\": 1, \"conciseness\": 1, \"leaked_claims\": [], \"issues\": 9}";
    v = validate_rubric_scores(bad_issues);
    REQUIRE(v.size() == 1);
    CHECK(v[0].find("must be a string") != std::string::npos);
}

TEST_CASE("parse functions recover every field") {
    ReconJudgment j =
        parse_recon_judgment("prose " + recon_json(6, true, false, true, {"a", "b"}));
    CHECK(j.alignment_score == 6);
    CHECK(j.api_sequence_match);
    CHECK(!j.control_flow_match);
    CHECK(j.final_state_match);
    REQUIRE(j.mismatches.size() == 2);
    CHECK(j.mismatches[1] == "b");

    RubricScores s = parse_rubric_scores(rubric_json(9, 8, 7, 6, 5, {"x"}, "tight"));
    CHECK(s.gt_independence == 9);
    CHECK(s.actionability == 8);
    CHECK(s.transferability == 7);
    CHECK(s.completeness == 6);
    CHECK(s.conciseness == 5);
    REQUIRE(s.leaked_claims.size() == 1);
    CHECK(s.leaked_claims[0] == "x");
    CHECK(s.issues == "tight");

    CHECK_THROWS_AS(parse_recon_judgment("{}"), Error);
    CHECK_THROWS_AS(parse_rubric_scores("not json"), Error);
}

TEST_CASE("recon_loss sends source and reconstruction to a judge_recon call") {
    TaskSpec task = losses_task();
    Trajectory src = ground_truth(task);
    Trajectory rec = fake_recon(task);

    auto audit = std::make_shared<AuditLog>();
    ChatClient client = scripted_client(
        {{std::string(kTagJudgeRecon), std::nullopt, recon_json(8, true, true, false, {"stops early"})}},
        audit);
    ReconResult r = recon_loss(src, rec, task, client, CallSettings{}, "judge system prompt");

    CHECK(r.loss == doctest::Approx(2.0));
    REQUIRE(r.detail.has_value());
    CHECK(r.detail->alignment_score == 8);
    CHECK(!r.detail->final_state_match);
    CHECK(r.feedback.find("alignment score 8/10") != std::string::npos);
    CHECK(r.feedback.find("stops early") != std::string::npos);

    std::vector<AuditEntry> entries = audit->entries();
    REQUIRE(entries.size() == 1);
    const AuditEntry& e = entries[0];
    CHECK(e.tag == kTagJudgeRecon);
    CHECK(render_request_text(e.request).find(task.instruction) != std::string::npos);
    CHECK(render_request_text(e.request).find(src.steps[0].action) != std::string::npos);
    CHECK(render_request_text(e.request).find(rec.steps[0].action) != std::string::npos);
}

TEST_CASE("recon_loss insists on trajectory roles") {
    TaskSpec task = losses_task();
    Trajectory src = ground_truth(task);
    Trajectory rec = fake_recon(task);
    ChatClient client = scripted_client({});

    // arguments swapped
    CHECK_THROWS_AS(recon_loss(rec, src, task, client, CallSettings{}, "sys"), Error);
    // reconstruction passed twice
    CHECK_THROWS_AS(recon_loss(rec, rec, task, client, CallSettings{}, "sys"), Error);
    // missing system prompt
    CHECK_THROWS_AS(recon_loss(src, rec, task, client, CallSettings{}, ""), Error);
}

TEST_CASE("a judge that never validates yields worst loss with a diagnostic") {
    TaskSpec task = losses_task();
    // three invalid responses exhaust the validated retry budget
    std::vector<ScriptEntry> entries;
    for (int i = 0; i < 3; ++i)
        entries.push_back({std::string(kTagJudgeRecon), std::nullopt, "gibberish " + std::to_string(i)});
    ChatClient client = scripted_client(std::move(entries));

    ReconResult r =
        recon_loss(ground_truth(task), fake_recon(task), task, client, CallSettings{}, "sys");
    CHECK(r.loss == doctest::Approx(10.0));
    CHECK(!r.detail.has_value());
    CHECK(r.feedback.find("no valid verdict") != std::string::npos);

    std::vector<ScriptEntry> rubric_entries;
    for (int i = 0; i < 3; ++i)
        rubric_entries.push_back({std::string(kTagJudgeRubric), std::nullopt, "not a record"});
    ChatClient rubric_client = scripted_client(std::move(rubric_entries));
    RubricResult rr = rubric_loss(tiny_skill(), task, rubric_client, CallSettings{}, "sys");
    CHECK(rr.loss == doctest::Approx(10.0));
    CHECK(!rr.detail.has_value());
    CHECK(rr.feedback.find("no valid verdict") != std::string::npos);
}

TEST_CASE("an invalid judge response is repaired through the fix loop") {
    TaskSpec task = losses_task();
    ChatClient client = scripted_client({
        {std::string(kTagJudgeRecon), std::nullopt, "half a verdict"},
        {std::string(kTagJudgeRecon), std::nullopt, recon_json(9, true, true, true)},
    });
    ReconResult r =
        recon_loss(ground_truth(task), fake_recon(task), task, client, CallSettings{}, "sys");
    CHECK(r.loss == doctest::Approx(1.0));
    REQUIRE(r.detail.has_value());
    CHECK(r.detail->alignment_score == 9);
}

TEST_CASE("rubric_loss judges the skill without ever seeing the trajectory") {
    TaskSpec task = losses_task();
    Trajectory src = ground_truth(task);
    SkillDoc skill = tiny_skill();

    auto audit = std::make_shared<AuditLog>();
    ChatClient client = scripted_client(
        {{std::string(kTagJudgeRubric), std::nullopt, rubric_json(4, 10, 10, 10, 10, {"leak"}, "leaked")}},
        audit);
    RubricResult r = rubric_loss(skill, task, client, CallSettings{}, "rubric system prompt");

    CHECK(r.loss == doctest::Approx(6.0)); // gated by gt_independence
    REQUIRE(r.detail.has_value());
    CHECK(r.detail->gt_independence == 4);
    CHECK(r.feedback.find("gt_independence 4") != std::string::npos);
    CHECK(r.feedback.find("leak") != std::string::npos);

    std::vector<AuditEntry> entries = audit->entries();
    REQUIRE(entries.size() == 1);
    const AuditEntry& e = entries[0];
    CHECK(e.tag == kTagJudgeRubric);
    CHECK(render_request_text(e.request).find(task.instruction) != std::string::npos);
    CHECK(render_request_text(e.request).find("sample skill") != std::string::npos);
    // source trajectory content never reaches the rubric judge
    for (const TrajectoryStep& step : src.steps)
        CHECK(render_request_text(e.request).find(step.observation) == std::string::npos);
}

TEST_CASE("outcome_loss grades the terminal session state") {
    TaskSpec task = losses_task();
    auto session = EnvRegistry::builtin().open(task);
    for (const std::string& action : toyworld::solution_actions(task))
        REQUIRE(session->exec(parse_action(action)).ok);

    Trajectory rec = fake_recon(task);
    OutcomeResult r = outcome_loss(rec, task, *session);
    CHECK(r.loss == doctest::Approx(0.0));
    CHECK(r.grade.passed());
    CHECK(!r.feedback.empty());

    // untouched session fails the mutation checks (count survives)
    auto fresh = EnvRegistry::builtin().open(task);
    OutcomeResult worst = outcome_loss(rec, task, *fresh);
    CHECK(worst.loss > 0.0);
    CHECK(!worst.grade.passed());
    CHECK(worst.feedback.find("Failed checks:") != std::string::npos);

    // grading a ground-truth trajectory is a caller bug
    Trajectory gt = ground_truth(task);
    CHECK_THROWS_AS(outcome_loss(gt, task, *session), Error);
}

TEST_CASE("partial completion produces a fractional outcome loss") {
    TaskSpec task = losses_task();
    auto session = EnvRegistry::builtin().open(task);
    // log in but change nothing; graded checks fail while count survives
    std::string login = toyworld::solution_actions(task).at(0);
    REQUIRE(session->exec(parse_action(login)).ok);

    OutcomeResult r = outcome_loss(fake_recon(task), task, *session);
    CHECK(r.loss > 0.0);
    CHECK(r.loss < 1.0);
    int failed = 0;
    for (const CheckResult& c : r.grade.checks)
        if (!c.passed)
            ++failed;
    CHECK(r.loss == doctest::Approx(static_cast<double>(failed) / r.grade.checks.size()));
}
