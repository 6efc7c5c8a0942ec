#include "mindskill/engine.hpp"

#include "mindskill/errors.hpp"
#include "mindskill/toyworld.hpp"
#include "mindskill/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <thread>

namespace mindskill {

using nlohmann::json;

namespace {

std::string pad(std::string s, size_t width) {
    if (s.size() < width)
        s.append(width - s.size(), ' ');
    return s;
}

// index-parallel task runner; f must not throw when parallel > 1 callers
// expect error capture, so wrap here and rethrow the first failure after join
template <typename F>
void for_each_index(size_t count, int parallel, F&& f) {
    if (parallel <= 1) {
        for (size_t i = 0; i < count; ++i)
            f(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    size_t workers = std::min(static_cast<size_t>(parallel), count);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= count)
                    return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!first_error)
                        first_error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : threads)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

} // namespace

Engine::Engine(AppConfig config, std::filesystem::path workdir)
    : config_(std::move(config)), workdir_(std::move(workdir)) {
    prompts_ = load_prompts(config_.prompts_dir);
    dataset_ = load_scenario(config_.scenario, EnvRegistry::builtin());
    audit_ = std::make_shared<AuditLog>();

    std::shared_ptr<Backend> backend;
    if (config_.backend == "scripted") {
        backend = std::make_shared<ScriptedBackend>(load_script(config_.script));
    } else {
        HttpBackendConfig http;
        http.base_url = config_.base_url;
        backend = std::shared_ptr<Backend>(make_http_backend(std::move(http)));
    }
    client_ = std::make_unique<ChatClient>(std::move(backend), audit_,
                                           RetryPolicy{3, config_.retry_backoff_ms});
}

std::vector<TaskSpec> Engine::pick_tasks(const std::string& split,
                                         const std::vector<std::string>& filter) const {
    std::vector<TaskSpec> all = dataset_.split_tasks(split);
    if (filter.empty())
        return all;
    std::vector<TaskSpec> out;
    for (const std::string& id : filter) {
        auto it = std::find_if(all.begin(), all.end(),
                               [&](const TaskSpec& t) { return t.task_id == id; });
        if (it == all.end())
            fail(Errc::unknown_target,
                 "task '" + id + "' is not in the " + split + " split");
        out.push_back(*it);
    }
    return out;
}

Trajectory Engine::obtain_trajectory(const TaskSpec& task) const {
    if (config_.trajectories_dir) {
        std::filesystem::path p =
            *config_.trajectories_dir / traj_filename(task.task_id, TrajOrigin::rollout);
        if (std::filesystem::is_regular_file(p)) {
            Trajectory t = load_trajectory(p);
            require(t.task_id == task.task_id,
                    "trajectory file " + p.string() + " belongs to task " + t.task_id);
            if (t.succeeded.has_value() && *t.succeeded)
                return t;
            // a failed rollout is unusable; fall through to the wrap fallback
        }
    }
    if (task.env_id == toyworld::kEnvId)
        return wrap_solution(task, toyworld::solution_actions(task), EnvRegistry::builtin());
    fail(Errc::io_error, "no successful rollout recorded for " + task.task_id +
                             " and no ground-truth solution source for env '" + task.env_id +
                             "'");
}

RunConfig Engine::make_run_config() const {
    RunConfig rc;
    rc.max_iterations = config_.q;
    rc.deduction.max_steps = config_.max_steps;
    rc.deduction.stop_marker = config_.stop_marker;
    rc.induction_call = config_.call_settings(kTagInduction);
    rc.deduction_call = config_.call_settings(kTagDeduction);
    rc.judge_recon_call = config_.call_settings(kTagJudgeRecon);
    rc.judge_rubric_call = config_.call_settings(kTagJudgeRubric);
    rc.gradient_call = config_.call_settings(kTagGradient);
    rc.optimizer_call = config_.call_settings(kTagOptimizer);
    rc.prompts = prompts_.roles;
    if (config_.persist_runs)
        rc.persist_dir = workdir_ / config_.runs_dir;
    return rc;
}

SkillLibrary Engine::load_library() const {
    std::filesystem::path dir = workdir_ / config_.library_dir;
    if (std::filesystem::is_regular_file(dir / "index.rec"))
        return SkillLibrary::load(dir);
    return {};
}

CommandResult Engine::mine(const std::vector<std::string>& task_filter) {
    std::vector<TaskSpec> tasks = pick_tasks("train", task_filter);
    require(!tasks.empty(), "nothing to mine: the train split is empty");

    struct TaskOutcome {
        bool ok = false;
        LossTriple best;
        int best_iteration = -1;
        int iterations = 0;
        int final_prompt_version = 0;
        std::string error;
    };
    std::vector<TaskOutcome> outcomes(tasks.size());

    SkillLibrary library = load_library();
    std::mutex library_mu;
    RunConfig rc = make_run_config();
    PromptState prompt_D = PromptState::make(prompts_.deduction_system, /*frozen=*/true);

    for_each_index(tasks.size(), config_.parallel, [&](size_t i) {
        const TaskSpec& task = tasks[i];
        TaskOutcome& out = outcomes[i];
        try {
            Trajectory traj = obtain_trajectory(task);
            PromptState prompt_I0 = PromptState::make(prompts_.induction_system);
            OptimizeResult run = optimize_skill(task, traj, prompt_I0, prompt_D, rc,
                                                EnvRegistry::builtin(), *client_);
            out.ok = true;
            out.best = run.best_triple;
            out.best_iteration = run.best_iteration;
            out.iterations = static_cast<int>(run.records.size());
            out.final_prompt_version = run.records.back().prompt_version_after;

            LibraryEntry entry;
            entry.skill = run.best;
            entry.source_task_id = task.task_id;
            entry.best_triple = run.best_triple;
            entry.created_iteration = run.best_iteration;
            std::lock_guard lock(library_mu);
            library.add_or_replace(std::move(entry));
        } catch (const Error& e) {
            out.ok = false;
            out.error = e.what();
        }
    });

    library.save(workdir_ / config_.library_dir);

    CommandResult result;
    result.output += pad("task", 12) + pad("status", 8) + pad("best", 16) +
                     pad("best_iter", 11) + pad("iters", 7) + "prompt\n";
    size_t mined = 0;
    for (size_t i = 0; i < tasks.size(); ++i) {
        const TaskOutcome& out = outcomes[i];
        std::string row = pad(tasks[i].task_id, 12);
        if (out.ok) {
            ++mined;
            row += pad("ok", 8) + pad(render_triple(out.best), 16) +
                   pad(std::to_string(out.best_iteration), 11) +
                   pad(std::to_string(out.iterations), 7) + "v0 -> v" +
                   std::to_string(out.final_prompt_version);
        } else {
            row += pad("FAILED", 8) + pad("-", 16) + pad("-", 11) + pad("-", 7) + "-";
            row += "\n    error: " + out.error;
        }
        result.output += row + "\n";
    }
    result.output += "mined " + std::to_string(mined) + "/" + std::to_string(tasks.size()) +
                     " tasks; library now holds " + std::to_string(library.size()) +
                     " skills\n";
    result.exit_code = mined == tasks.size() ? 0 : 1;
    return result;
}

CommandResult Engine::eval(const std::vector<std::string>& task_filter, bool baseline) {
    SkillLibrary library = load_library();
    if (library.empty())
        fail(Errc::empty_library, "library empty: run mine first");

    std::vector<TaskSpec> tasks = pick_tasks("eval", task_filter);
    require(!tasks.empty(), "nothing to evaluate: the eval split is empty");

    RetrievalConfig retrieval;
    retrieval.k = config_.k;
    retrieval.mode = config_.retrieval_mode == "model" ? RetrievalConfig::Mode::model
                                                       : RetrievalConfig::Mode::lexical;
    CallSettings retrieval_call = config_.call_settings(kTagRetrieval);
    CallSettings deduction_call = config_.call_settings(kTagDeduction);
    DeductionConfig ded_cfg{config_.max_steps, config_.stop_marker};
    PromptState prompt_D = PromptState::make(prompts_.deduction_system, /*frozen=*/true);

    struct TaskResult {
        bool passed = false;
        double loss = 1.0;
        size_t injected_tokens = 0;
        std::vector<std::string> retrieved_ids;
        std::string warning;
        bool baseline_passed = false;
    };
    std::vector<TaskResult> results(tasks.size());

    for_each_index(tasks.size(), config_.parallel, [&](size_t i) {
        const TaskSpec& task = tasks[i];
        TaskResult& r = results[i];

        RetrievalOutcome retrieved =
            library.retrieve(task, retrieval, client_.get(), &retrieval_call);
        r.warning = retrieved.warning;
        for (const LibraryEntry& e : retrieved.entries)
            r.retrieved_ids.push_back(e.source_task_id);
        std::vector<SkillDoc> docs = entry_docs(retrieved.entries);
        r.injected_tokens = count_ws_tokens(
            render_skills_block(std::span<const SkillDoc>(docs.data(), docs.size())));

        auto session = EnvRegistry::builtin().open(task);
        run_deduction(task, std::span<const SkillDoc>(docs.data(), docs.size()), prompt_D,
                      *session, ded_cfg, *client_, deduction_call,
                      prompts_.roles.deduction_template);
        OutcomeGrade grade = session->evaluate(task);
        r.passed = grade.passed();
        r.loss = grade.loss;

        if (baseline) {
            auto bare = EnvRegistry::builtin().open(task);
            run_deduction(task, std::span<const SkillDoc>(), prompt_D, *bare, ded_cfg,
                          *client_, deduction_call, prompts_.roles.deduction_template);
            r.baseline_passed = bare->evaluate(task).passed();
        }
    });

    std::string records;
    size_t passed = 0;
    CommandResult result;
    result.output += pad("task", 12) + pad("result", 8) + pad("loss", 8) +
                     pad("injected", 10) + (baseline ? pad("baseline", 10) : "") +
                     "retrieved\n";
    for (size_t i = 0; i < tasks.size(); ++i) {
        const TaskResult& r = results[i];
        if (r.passed)
            ++passed;
        std::string row = pad(tasks[i].task_id, 12) + pad(r.passed ? "PASS" : "FAIL", 8);
        char loss_buf[16];
        std::snprintf(loss_buf, sizeof(loss_buf), "%.2f", r.loss);
        row += pad(loss_buf, 8) + pad(std::to_string(r.injected_tokens), 10);
        if (baseline)
            row += pad(r.baseline_passed ? "PASS" : "FAIL", 10);
        row += "[" + join(r.retrieved_ids, ", ") + "]";
        result.output += row + "\n";
        if (!r.warning.empty())
            result.output += "    warning: " + r.warning + "\n";

        json rec;
        rec["task_id"] = tasks[i].task_id;
        rec["k"] = config_.k;
        rec["passed"] = r.passed;
        rec["loss"] = r.loss;
        rec["injected_tokens"] = r.injected_tokens;
        rec["retrieved_ids"] = r.retrieved_ids;
        records += rec.dump() + "\n";
    }
    char rate_buf[16];
    std::snprintf(rate_buf, sizeof(rate_buf), "%.2f",
                  static_cast<double>(passed) / static_cast<double>(tasks.size()));
    result.output += "passed " + std::to_string(passed) + "/" + std::to_string(tasks.size()) +
                     " (" + rate_buf + ")\n";
    if (baseline) {
        size_t base_passed = 0;
        for (const TaskResult& r : results)
            if (r.baseline_passed)
                ++base_passed;
        result.output += "baseline passed " + std::to_string(base_passed) + "/" +
                         std::to_string(tasks.size()) + "\n";
    }

    atomic_write_file(workdir_ / config_.results, records);
    result.exit_code = 0;
    return result;
}

CommandResult Engine::inspect(const std::string& target) {
    CommandResult result;
    if (target == "library") {
        SkillLibrary library = load_library();
        result.output += pad("task", 12) + pad("best", 18) + pad("name", 28) + "description\n";
        for (const LibraryEntry& e : library.entries())
            result.output += pad(e.source_task_id, 12) + pad(render_triple(e.best_triple), 18) +
                             pad(e.skill.name, 28) + e.skill.description + "\n";
        result.output += std::to_string(library.size()) + " entries\n";
        return result;
    }
    if (starts_with(target, "run:")) {
        std::string task_id = target.substr(4);
        std::filesystem::path index = workdir_ / config_.runs_dir / task_id / "index.rec";
        if (!std::filesystem::is_regular_file(index))
            fail(Errc::unknown_target, "no recorded run for task '" + task_id + "'");
        result.output += pad("iter", 6) + pad("triple", 20) + pad("best", 6) +
                         pad("prompt", 12) + "note\n";
        for (const std::string& line : split_lines(read_file(index))) {
            if (trim(line).empty())
                continue;
            json row = json::parse(line);
            LossTriple t{row.at("outcome").get<double>(), row.at("recon").get<double>(),
                         row.at("rubric").get<double>()};
            result.output +=
                pad(std::to_string(row.at("iteration").get<int>()), 6) +
                pad(render_triple(t), 20) + pad(row.at("is_best").get<bool>() ? "*" : "", 6) +
                pad("v" + std::to_string(row.at("prompt_version_before").get<int>()) + " -> v" +
                        std::to_string(row.at("prompt_version_after").get<int>()),
                    12) +
                row.at("note").get<std::string>() + "\n";
        }
        return result;
    }
    if (starts_with(target, "skill:")) {
        std::string task_id = target.substr(6);
        SkillLibrary library = load_library();
        const LibraryEntry* entry = library.find(task_id);
        if (!entry)
            fail(Errc::unknown_target, "no library skill for task '" + task_id + "'");
        result.output = serialize_skill(entry->skill);
        return result;
    }
    fail(Errc::unknown_target,
         "inspect target must be 'library', 'run:<task_id>', or 'skill:<task_id>'");
}

CommandResult Engine::demo() {
    CommandResult mined = mine({});
    CommandResult evaluated = eval({}, false);
    CommandResult result;
    result.output = "== mine ==\n" + mined.output + "\n== eval ==\n" + evaluated.output;
    result.exit_code = mined.exit_code != 0 ? mined.exit_code : evaluated.exit_code;
    return result;
}

} // namespace mindskill
