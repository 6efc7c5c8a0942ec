// Operator CLI. Talks to the engine exclusively through the C API in
// mindskill.h so the shared library stays the only contract surface.

#include <mindskill.h>

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <string>

namespace {

struct EngineCloser {
    void operator()(mindskill_engine* e) const { mindskill_engine_close(e); }
};
using EnginePtr = std::unique_ptr<mindskill_engine, EngineCloser>;

struct StringFreer {
    void operator()(char* s) const { mindskill_string_free(s); }
};
using OutPtr = std::unique_ptr<char, StringFreer>;

int fail_status(const char* what) {
    std::fprintf(stderr, "mindskill: %s: %s\n", what, mindskill_last_error());
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mine reusable skills from agent trajectories and evaluate them"};
    app.require_subcommand(1);

    std::string config_path = "config.json";
    std::string tasks;
    std::string inspect_target;
    int k = 0;
    int q = 0;
    int parallel = 0;
    bool baseline = false;

    app.add_option("--config", config_path, "Config file")->capture_default_str();

    CLI::App* mine = app.add_subcommand("mine", "Mine one skill per training task");
    mine->add_option("--tasks", tasks, "Comma-separated task ids (default: all)");
    mine->add_option("--q", q, "Optimization iterations per task");
    mine->add_option("--parallel", parallel, "Concurrent tasks");

    CLI::App* eval = app.add_subcommand("eval", "Evaluate held-out tasks with retrieval");
    eval->add_option("--tasks", tasks, "Comma-separated task ids (default: all)");
    eval->add_option("--k", k, "Skills to retrieve per task");
    eval->add_option("--parallel", parallel, "Concurrent tasks");
    eval->add_flag("--baseline", baseline, "Also run and report a no-skill baseline");

    CLI::App* inspect = app.add_subcommand("inspect", "Show library, run, or skill details");
    inspect->add_option("target", inspect_target, "library | run:<task_id> | skill:<task_id>")
        ->required();

    CLI::App* demo = app.add_subcommand("demo", "Run the bundled mine-then-eval pipeline");

    CLI11_PARSE(app, argc, argv);

    mindskill_engine* raw = nullptr;
    if (mindskill_engine_open(config_path.c_str(), nullptr, &raw) != MINDSKILL_OK)
        return fail_status("cannot start");
    EnginePtr engine(raw);

    auto set_int_option = [&](const char* key, int value) {
        return value <= 0 ||
               mindskill_engine_set_option(engine.get(), key, std::to_string(value).c_str()) ==
                   MINDSKILL_OK;
    };
    if (!set_int_option("k", k) || !set_int_option("q", q) ||
        !set_int_option("parallel", parallel))
        return fail_status("bad option");

    int exit_code = 0;
    char* raw_output = nullptr;
    mindskill_status status = MINDSKILL_OK;
    if (mine->parsed())
        status = mindskill_engine_mine(engine.get(), tasks.c_str(), &exit_code, &raw_output);
    else if (eval->parsed())
        status = mindskill_engine_eval(engine.get(), tasks.c_str(), baseline ? 1 : 0,
                                       &exit_code, &raw_output);
    else if (inspect->parsed())
        status = mindskill_engine_inspect(engine.get(), inspect_target.c_str(), &exit_code,
                                          &raw_output);
    else if (demo->parsed())
        status = mindskill_engine_demo(engine.get(), &exit_code, &raw_output);

    if (status != MINDSKILL_OK)
        return fail_status("command failed");
    OutPtr output(raw_output);
    std::fputs(output.get(), stdout);
    return exit_code;
}
