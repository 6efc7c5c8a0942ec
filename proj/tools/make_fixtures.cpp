// Regenerates fixtures/demo: scenario, provider script, response files, and
// config. Every scripted action sequence is executed against the real
// environment first and its grade asserted, so the committed fixture encodes
// verified outcomes. Rerun after changing the environment or dataset layout:
//   make_fixtures [fixtures_dir]

#include "mindskill/environment.hpp"
#include "mindskill/errors.hpp"
#include "mindskill/provider.hpp"
#include "mindskill/skilldoc.hpp"
#include "mindskill/toyworld.hpp"
#include "mindskill/util.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

using namespace mindskill;
using nlohmann::json;

namespace {

constexpr uint64_t kBaseSeed = 9000;
constexpr int kTrainCount = 3;
constexpr int kEvalCount = 3;
constexpr int kIterations = 4;

struct IterPlan {
    bool full;     // full solution vs one deliberately skipped mutation
    int alignment; // recon judge score
    int rubric;    // all five rubric dimensions
};

// Triples: (0.25, 4, 3) -> (0.25, 2, 2) -> (0, 1, 1) best -> (0, 2, 1).
const IterPlan kPlan[kIterations] = {
    {false, 6, 7},
    {false, 8, 8},
    {true, 9, 9},
    {true, 8, 9},
};

std::string checker_api(const TaskSpec& task) { return parse_action(task.checker_ref).api; }

// Full solution minus the signature mutation on the target item: the shift
// variant skips the time change, the relabel variant skips the new label.
// Either way exactly one of the four checks fails (loss 0.25).
std::vector<std::string> partial_actions(const TaskSpec& task) {
    std::vector<std::string> actions = toyworld::solution_actions(task);
    std::string drop = checker_api(task) == "shift_and_disable" ? "time" : "label";
    for (std::string& text : actions) {
        ToolCall call = parse_action(text);
        if (call.api != "update_item")
            continue;
        call.args.erase(drop);
        text = render_action(call);
        break; // the first update targets the named item
    }
    return actions;
}

OutcomeGrade run_and_grade(const TaskSpec& task, const std::vector<std::string>& actions) {
    auto session = EnvRegistry::builtin().open(task);
    for (const std::string& text : actions) {
        ToolResult r = session->exec(parse_action(text));
        require(r.ok, "fixture action failed: " + text + ": " + r.error);
    }
    return session->evaluate(task);
}

std::string thought_for(const ToolCall& call, bool first_update) {
    if (call.api == "login")
        return "Logging in with the credentials from the task.";
    if (call.api == "list_items")
        return "Fetching page " + call.args.at("page").dump() + " to collect the inventory.";
    if (call.api == "update_item")
        return first_update ? "Applying the required change to the target item."
                            : "Updating one of the remaining items.";
    return "Executing the next step.";
}

json entry(const std::string& tag, const std::string& substring, const std::string& response) {
    json e;
    e["tag"] = tag;
    if (!substring.empty())
        e["substring"] = substring;
    e["response"] = response;
    return e;
}

json file_entry(const std::string& tag, const std::string& substring, const std::string& file) {
    json e;
    e["tag"] = tag;
    if (!substring.empty())
        e["substring"] = substring;
    e["response_file"] = file;
    return e;
}

void append_deduction(std::vector<json>& script, const std::string& password,
                      const std::vector<std::string>& actions) {
    bool first_update = true;
    for (const std::string& text : actions) {
        ToolCall call = parse_action(text);
        std::string thought = thought_for(call, first_update);
        if (call.api == "update_item")
            first_update = false;
        script.push_back(entry(std::string(kTagDeduction), password,
                               "Thought: " + thought + "\nAction: " + text));
    }
    script.push_back(entry(std::string(kTagDeduction), password,
                           "Thought: Every requirement is satisfied.\nAction: TASK_COMPLETE"));
}

std::string recon_response(const IterPlan& plan) {
    json verdict;
    verdict["alignment_score"] = plan.alignment;
    verdict["api_sequence_match"] = true;
    verdict["control_flow_match"] = plan.alignment >= 8;
    verdict["final_state_match"] = plan.full;
    json mismatches = json::array();
    if (!plan.full)
        mismatches.push_back("the target item's required mutation never happened");
    if (plan.alignment < 8)
        mismatches.push_back("reconstruction stopped paginating before the empty page");
    verdict["mismatches"] = mismatches;
    return verdict.dump();
}

std::string rubric_response(const IterPlan& plan) {
    json verdict;
    verdict["gt_independence"] = plan.rubric;
    verdict["actionability"] = plan.rubric;
    verdict["transferability"] = plan.rubric;
    verdict["completeness"] = plan.rubric;
    verdict["conciseness"] = plan.rubric;
    verdict["leaked_claims"] = json::array();
    verdict["issues"] = plan.rubric >= 9 ? "clean procedural abstraction"
                                         : "procedure steps could be more explicit";
    return verdict.dump();
}

std::string gradient_response(int iteration) {
    switch (iteration) {
    case 0:
        return "The induced skill names the mutation too vaguely, so the deduction agent "
               "never applies the required change to the target item. Strengthen the rule "
               "that the Procedure section must spell out the per-item state change as an "
               "ordered step, and require a verification pass after the bulk update.";
    case 1:
        return "Pagination guidance is implicit; the skill should state that listing "
               "continues until an empty page. Ask for an explicit loop-termination "
               "pattern under Key Patterns instead of burying it in prose.";
    default:
        return "The skill is close; tighten conciseness by folding duplicate pitfall "
               "bullets together while keeping the verification step intact.";
    }
}

// name/description per train ordinal (1-based); bodies grow in quality per
// iteration. All docs are emitted through the canonical serializer.
struct DocPlan {
    const char* name;
    const char* description;
};

const DocPlan kDocPlans[kTrainCount] = {
    {"paginated-shift-and-disable",
     "Shift one timed item found by label, then disable every other item."},
    {"relabel-then-enable-sweep",
     "Rename a labeled item and sweep the rest of the inventory to enabled."},
    {"target-update-bulk-disable",
     "Apply a targeted field update, then push a uniform state to all other items."},
};

std::string skill_doc_text(int train_index, int iteration) {
    const DocPlan& plan = kDocPlans[train_index];
    std::vector<SkillSection> sections;
    if (iteration == 0) {
        sections = {
            {"Overview", "Log in, list the items, and update what the task names."},
            {"When to Apply", "Tasks that mention items in the tracker app."},
            {"Procedure", "1. Log in.\n2. List items.\n3. Update the items the task asks "
                          "about."},
            {"Key Patterns", "Use the token from login on every call."},
            {"Common Pitfalls", "Forgetting to log in first."},
        };
    } else if (iteration == 1) {
        sections = {
            {"Overview",
             "Authenticate, collect the full inventory page by page, then change the "
             "target item and the rest separately."},
            {"When to Apply",
             "One item is singled out by its label and every other item needs a uniform "
             "state change."},
            {"Procedure", "1. Log in with the given credentials to obtain a token.\n"
                          "2. List items page by page until a page comes back empty.\n"
                          "3. Find the item the task names and update it as asked.\n"
                          "4. Update the remaining items to the uniform state."},
            {"Key Patterns", "Pagination loop: stop on the first empty page.\n"
                             "Selective mutation: one update for the target, uniform "
                             "updates for the rest."},
            {"Common Pitfalls", "Stopping at the first page and missing items.\n"
                                "Applying the bulk change to the target too."},
        };
    } else {
        sections = {
            {"Overview",
             "Authenticate once, paginate to a complete inventory, apply the named "
             "change to the target item, then sweep a uniform state change over every "
             "remaining item."},
            {"When to Apply",
             "The target API requires an auth token from a separate login step.\n"
             "A list endpoint returns data in pages, requiring a loop.\n"
             "The task identifies one item by a label or attribute, modifies it, and "
             "applies a different state change to all remaining items."},
            {"Procedure",
             "1. Authenticate: exchange the provided credentials for a token.\n"
             "2. Paginate and collect: loop over pages until an empty page, keeping "
             "every item seen.\n"
             "3. Identify the target: find the item matching the given label.\n"
             "4. Apply the specific update: change exactly the fields the task names.\n"
             "5. Apply the bulk update: set the uniform state on every other item.\n"
             "6. Verify: the final listing should reflect both updates."},
            {"Key Patterns",
             "Pagination loop: while-loop, break on empty page.\n"
             "Selective mutation: unique update for the target, uniform for the rest.\n"
             "State verification: post-update re-fetch to validate."},
            {"Common Pitfalls",
             "Failing to loop through all pages and missing items.\n"
             "Updating the target incorrectly or failing to exclude it from the bulk "
             "update."},
        };
        if (iteration == 3)
            sections[4].body += "\nRe-sending an identical call after an error instead of "
                                "adjusting the arguments.";
    }
    std::string text = serialize_skill(make_skill_doc(plan.name, plan.description, sections));
    require(validate_skill_format(text).empty(), "generated skill doc is not valid");
    return text;
}

std::string optimizer_response(const std::filesystem::path& prompts_dir, int revision) {
    std::string base = read_file(prompts_dir / "induction_system.txt");
    std::string addition;
    switch (revision) {
    case 1:
        addition = "Spell out the per-item state change as an ordered Procedure step and "
                   "end the Procedure with a verification pass.";
        break;
    case 2:
        addition = "State the pagination termination condition explicitly: keep listing "
                   "until a page comes back empty, and name that loop under Key Patterns.";
        break;
    default:
        addition = "Fold duplicate pitfall bullets together; every Common Pitfalls entry "
                   "must name a distinct failure mode.";
        break;
    }
    return "<IMPROVED_VARIABLE>\n" + trim(base) + "\n\nRevision " + std::to_string(revision) +
           ": " + addition + "\n</IMPROVED_VARIABLE>";
}

} // namespace

int main(int argc, char** argv) {
    std::filesystem::path fixtures = argc > 1 ? argv[1] : "fixtures";
    std::filesystem::path demo = fixtures / "demo";
    std::filesystem::path responses = demo / "responses";
    ensure_dir(responses);

    // prompts_dir must match the path stored in config.json below
    std::filesystem::path prompts_dir =
        std::filesystem::absolute(fixtures).parent_path() / "prompts";

    Dataset dataset =
        toyworld::make_dataset("demo", kBaseSeed, kTrainCount, kEvalCount);

    std::set<std::string> passwords;
    for (const DatasetTask& dt : dataset.tasks)
        passwords.insert(toyworld::password(dt.task.scenario_seed));
    require(passwords.size() == dataset.tasks.size(),
            "task passwords collide; pick a different base seed");

    save_scenario(dataset, demo / "scenario.scn", EnvRegistry::builtin());

    std::vector<json> script;
    std::vector<TaskSpec> train = dataset.split_tasks("train");
    for (size_t i = 0; i < train.size(); ++i) {
        const TaskSpec& task = train[i];
        std::string password = toyworld::password(task.scenario_seed);

        std::vector<std::string> full = toyworld::solution_actions(task);
        std::vector<std::string> partial = partial_actions(task);
        OutcomeGrade full_grade = run_and_grade(task, full);
        OutcomeGrade partial_grade = run_and_grade(task, partial);
        require(full_grade.loss == 0.0,
                task.task_id + ": full solution must pass, got " + full_grade.summary());
        require(partial_grade.loss == 0.25, task.task_id + ": partial variant must fail "
                                            "exactly one check, got " +
                                            partial_grade.summary());

        for (int q = 0; q < kIterations; ++q) {
            const IterPlan& plan = kPlan[q];
            std::string doc_file =
                "responses/" + task.task_id + "_iter" + std::to_string(q) + ".skill.md";
            atomic_write_file(demo / doc_file,
                              skill_doc_text(static_cast<int>(i), q));
            script.push_back(file_entry(std::string(kTagInduction), password, doc_file));
            append_deduction(script, password, plan.full ? full : partial);
            script.push_back(
                entry(std::string(kTagJudgeRecon), password, recon_response(plan)));
            script.push_back(
                entry(std::string(kTagJudgeRubric), password, rubric_response(plan)));
            if (q + 1 < kIterations) {
                script.push_back(
                    entry(std::string(kTagGradient), password, gradient_response(q)));
                std::string opt_file = "responses/optimizer_rev" + std::to_string(q + 1) + ".txt";
                atomic_write_file(demo / opt_file, optimizer_response(prompts_dir, q + 1));
                script.push_back(file_entry(std::string(kTagOptimizer), "", opt_file));
            }
        }
    }

    // eval: model retrieval picks all three library skills, then the full
    // solution passes every check
    const char* rankings[kEvalCount] = {"[s2, s1, s3]", "[s1, s3, s2]", "[s3, s2, s1]"};
    std::vector<TaskSpec> eval_tasks = dataset.split_tasks("eval");
    for (size_t i = 0; i < eval_tasks.size(); ++i) {
        const TaskSpec& task = eval_tasks[i];
        std::string password = toyworld::password(task.scenario_seed);
        std::vector<std::string> full = toyworld::solution_actions(task);
        OutcomeGrade grade = run_and_grade(task, full);
        require(grade.loss == 0.0,
                task.task_id + ": eval solution must pass, got " + grade.summary());
        script.push_back(entry(std::string(kTagRetrieval), password, rankings[i]));
        append_deduction(script, password, full);
    }

    std::string script_text;
    for (const json& e : script)
        script_text += e.dump() + "\n";
    atomic_write_file(demo / "script.jsonl", script_text);

    json config;
    config["provider"] = {{"backend", "scripted"}, {"script", "script.jsonl"}};
    config["run"] = {{"q", kIterations}, {"max_steps", 15}, {"persist_runs", true}};
    config["retrieval"] = {{"k", 3}, {"mode", "model"}};
    config["paths"] = {{"scenario", "scenario.scn"}, {"prompts_dir", "../../prompts"}};
    config["parallel"] = 1;
    atomic_write_file(demo / "config.json", config.dump(2) + "\n");

    std::printf("wrote %s: %d train tasks, %d eval tasks, %zu script entries\n",
                demo.string().c_str(), kTrainCount, kEvalCount, script.size());
    return 0;
}
