#include "mindskill/toyworld.hpp"

#include "mindskill/errors.hpp"
#include "mindskill/util.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <optional>

namespace mindskill::toyworld {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 12> kLabelPool = {
    "gym",  "standup", "review",   "lunch", "yoga",    "backup",
    "sync", "planning", "retro",   "focus", "commute", "reading"};

std::string hex8(uint64_t v) {
    char buf[9];
    std::snprintf(buf, sizeof(buf), "%08x", static_cast<unsigned>(v & 0xffffffffu));
    return buf;
}

struct WorldContent {
    std::string password;
    std::string token;
    std::vector<Item> items;
};

// Draw order is load-bearing: password, token, then per item label/enabled/time.
WorldContent generate_world(uint64_t seed) {
    Rng rng(seed);
    WorldContent w;
    w.password = "pw-" + std::to_string(1000 + rng.below(9000));
    w.token = "tok-" + hex8(rng.next());
    size_t count = 5 + seed % 4;
    std::vector<std::string> pool(kLabelPool.begin(), kLabelPool.end());
    for (size_t i = 0; i < count; ++i) {
        size_t idx = static_cast<size_t>(rng.below(pool.size()));
        std::string label = pool[idx];
        pool.erase(pool.begin() + static_cast<ptrdiff_t>(idx));
        bool enabled = rng.chance_half();
        int time = 15 * (1 + static_cast<int>(rng.below(16)));
        w.items.push_back({static_cast<int>(101 + i), std::move(label), enabled, time});
    }
    return w;
}

json item_json(const Item& item) {
    json j;
    j["id"] = item.id;
    j["label"] = item.label;
    j["enabled"] = item.enabled;
    j["time"] = item.time;
    return j;
}

bool contains_name(std::initializer_list<const char*> names, const std::string& name) {
    return std::any_of(names.begin(), names.end(),
                       [&](const char* n) { return name == n; });
}

// nullopt when the shape is fine, otherwise the in-band error message
std::optional<std::string> expect_args(const json& args,
                                       std::initializer_list<const char*> required,
                                       std::initializer_list<const char*> optional) {
    for (const auto& [key, value] : args.items()) {
        (void)value;
        if (!contains_name(required, key) && !contains_name(optional, key))
            return "unexpected argument '" + key + "'";
    }
    for (const char* name : required)
        if (!args.contains(name))
            return std::string("missing argument '") + name + "'";
    return std::nullopt;
}

std::optional<std::string> want_string(const json& args, const char* name, std::string& out) {
    if (!args.at(name).is_string())
        return std::string("argument '") + name + "' must be a string";
    out = args.at(name).get<std::string>();
    return std::nullopt;
}

std::optional<std::string> want_int(const json& args, const char* name, int64_t& out) {
    if (!args.at(name).is_number_integer())
        return std::string("argument '") + name + "' must be an integer";
    out = args.at(name).get<int64_t>();
    return std::nullopt;
}

std::optional<std::string> want_bool(const json& args, const char* name, bool& out) {
    if (!args.at(name).is_boolean())
        return std::string("argument '") + name + "' must be true or false";
    out = args.at(name).get<bool>();
    return std::nullopt;
}

class ToyWorldSession final : public EnvSession {
public:
    ToyWorldSession(const std::string& env_id, uint64_t seed) : EnvSession(env_id, seed) {
        WorldContent w = generate_world(seed);
        password_ = std::move(w.password);
        token_ = std::move(w.token);
        items_ = w.items;
        initial_items_ = std::move(w.items);
        next_id_ = items_.empty() ? 101 : items_.back().id + 1;
    }

    OutcomeGrade evaluate(const TaskSpec& task) override;

    std::string serialize_state() const override {
        json state;
        state["app"] = "tracker";
        json arr = json::array();
        for (const Item& item : items_)
            arr.push_back(item_json(item));
        state["items"] = arr;
        return state.dump();
    }

protected:
    ToolResult do_exec(const ToolCall& call) override {
        if (call.api == "login")
            return api_login(call.args);
        if (call.api == "list_items")
            return api_list_items(call.args);
        if (call.api == "update_item")
            return api_update_item(call.args);
        if (call.api == "delete_item")
            return api_delete_item(call.args);
        if (call.api == "create_item")
            return api_create_item(call.args);
        return ToolResult::failure("unknown api: " + call.api);
    }

private:
    Item* find_item(int64_t id) {
        auto it = std::find_if(items_.begin(), items_.end(),
                               [&](const Item& i) { return i.id == id; });
        return it == items_.end() ? nullptr : &*it;
    }

    std::optional<ToolResult> check_auth(const json& args) {
        if (!args.contains("token") || !args.at("token").is_string() ||
            args.at("token").get<std::string>() != token_)
            return ToolResult::failure(
                "authentication required: call login and pass its token");
        return std::nullopt;
    }

    ToolResult api_login(const json& args) {
        if (auto e = expect_args(args, {"user", "pass"}, {}))
            return ToolResult::failure(*e);
        std::string user, pass;
        if (auto e = want_string(args, "user", user))
            return ToolResult::failure(*e);
        if (auto e = want_string(args, "pass", pass))
            return ToolResult::failure(*e);
        if (user != kUser || pass != password_)
            return ToolResult::failure("invalid credentials");
        json payload;
        payload["token"] = token_;
        return ToolResult::success(payload);
    }

    ToolResult api_list_items(const json& args) {
        if (auto f = check_auth(args))
            return *f;
        if (auto e = expect_args(args, {"page", "token"}, {}))
            return ToolResult::failure(*e);
        int64_t page = 0;
        if (auto e = want_int(args, "page", page))
            return ToolResult::failure(*e);
        if (page < 1)
            return ToolResult::failure("page must be a positive integer (pages start at 1)");
        json arr = json::array();
        size_t begin = static_cast<size_t>(page - 1) * kPageSize;
        for (size_t i = begin; i < items_.size() && i < begin + kPageSize; ++i)
            arr.push_back(item_json(items_[i]));
        json payload;
        payload["page"] = page;
        payload["items"] = arr;
        return ToolResult::success(payload);
    }

    ToolResult api_update_item(const json& args) {
        if (auto f = check_auth(args))
            return *f;
        if (auto e = expect_args(args, {"id", "token"}, {"label", "enabled", "time"}))
            return ToolResult::failure(*e);
        int64_t id = 0;
        if (auto e = want_int(args, "id", id))
            return ToolResult::failure(*e);
        Item* item = find_item(id);
        if (!item)
            return ToolResult::failure("no item with id " + std::to_string(id));
        if (!args.contains("label") && !args.contains("enabled") && !args.contains("time"))
            return ToolResult::failure("nothing to update: pass label, enabled, or time");
        std::string label;
        bool enabled = false;
        int64_t time = 0;
        if (args.contains("label")) {
            if (auto e = want_string(args, "label", label))
                return ToolResult::failure(*e);
        }
        if (args.contains("enabled")) {
            if (auto e = want_bool(args, "enabled", enabled))
                return ToolResult::failure(*e);
        }
        if (args.contains("time")) {
            if (auto e = want_int(args, "time", time))
                return ToolResult::failure(*e);
            if (time < 0)
                return ToolResult::failure("time must be non-negative minutes");
        }
        if (args.contains("label"))
            item->label = label;
        if (args.contains("enabled"))
            item->enabled = enabled;
        if (args.contains("time"))
            item->time = static_cast<int>(time);
        return ToolResult::success(item_json(*item));
    }

    ToolResult api_delete_item(const json& args) {
        if (auto f = check_auth(args))
            return *f;
        if (auto e = expect_args(args, {"id", "token"}, {}))
            return ToolResult::failure(*e);
        int64_t id = 0;
        if (auto e = want_int(args, "id", id))
            return ToolResult::failure(*e);
        auto it = std::find_if(items_.begin(), items_.end(),
                               [&](const Item& i) { return i.id == id; });
        if (it == items_.end())
            return ToolResult::failure("no item with id " + std::to_string(id));
        items_.erase(it);
        json payload;
        payload["deleted"] = id;
        return ToolResult::success(payload);
    }

    ToolResult api_create_item(const json& args) {
        if (auto f = check_auth(args))
            return *f;
        if (auto e = expect_args(args, {"label", "enabled", "time", "token"}, {}))
            return ToolResult::failure(*e);
        std::string label;
        bool enabled = false;
        int64_t time = 0;
        if (auto e = want_string(args, "label", label))
            return ToolResult::failure(*e);
        if (auto e = want_bool(args, "enabled", enabled))
            return ToolResult::failure(*e);
        if (auto e = want_int(args, "time", time))
            return ToolResult::failure(*e);
        if (time < 0)
            return ToolResult::failure("time must be non-negative minutes");
        Item item{next_id_++, label, enabled, static_cast<int>(time)};
        items_.push_back(item);
        return ToolResult::success(item_json(item));
    }

    // --- checkers ---

    const Item* initial_by_label(const std::string& label) const {
        auto it = std::find_if(initial_items_.begin(), initial_items_.end(),
                               [&](const Item& i) { return i.label == label; });
        return it == initial_items_.end() ? nullptr : &*it;
    }

    const Item* current_by_id(int id) const {
        auto it = std::find_if(items_.begin(), items_.end(),
                               [&](const Item& i) { return i.id == id; });
        return it == items_.end() ? nullptr : &*it;
    }

    CheckResult check_count_preserved() const {
        CheckResult c{"count_preserved", items_.size() == initial_items_.size(), ""};
        c.detail = c.passed ? "item count unchanged"
                            : "expected " + std::to_string(initial_items_.size()) +
                                  " items, found " + std::to_string(items_.size());
        return c;
    }

    std::vector<CheckResult> checks_shift_and_disable(const Item& target, int64_t delta) const {
        std::vector<CheckResult> checks;
        const Item* cur = current_by_id(target.id);
        int64_t wanted = target.time + delta;

        CheckResult shifted{"target_time_shifted", false, ""};
        if (!cur)
            shifted.detail = "target item (id " + std::to_string(target.id) + ") no longer exists";
        else if (cur->time != wanted)
            shifted.detail = "expected time " + std::to_string(wanted) + ", found " +
                             std::to_string(cur->time);
        else {
            shifted.passed = true;
            shifted.detail = "time is " + std::to_string(wanted);
        }
        checks.push_back(std::move(shifted));

        CheckResult others{"others_disabled", true, "all other items disabled"};
        std::string offenders;
        for (const Item& item : items_) {
            if (item.id != target.id && item.enabled) {
                others.passed = false;
                if (!offenders.empty())
                    offenders += ", ";
                offenders += item.label;
            }
        }
        if (!others.passed)
            others.detail = "still enabled: " + offenders;
        checks.push_back(std::move(others));

        checks.push_back(check_count_preserved());

        CheckResult enabled{"target_enabled", false, ""};
        if (!cur)
            enabled.detail = "target item no longer exists";
        else if (!cur->enabled)
            enabled.detail = "target item is disabled";
        else {
            enabled.passed = true;
            enabled.detail = "target item enabled";
        }
        checks.push_back(std::move(enabled));
        return checks;
    }

    std::vector<CheckResult> checks_relabel_and_enable(const Item& target,
                                                       const std::string& new_label) const {
        std::vector<CheckResult> checks;
        const Item* cur = current_by_id(target.id);

        CheckResult relabeled{"target_relabeled", false, ""};
        if (!cur)
            relabeled.detail = "target item (id " + std::to_string(target.id) + ") no longer exists";
        else if (cur->label != new_label)
            relabeled.detail = "expected label \"" + new_label + "\", found \"" + cur->label + "\"";
        else {
            relabeled.passed = true;
            relabeled.detail = "label is \"" + new_label + "\"";
        }
        checks.push_back(std::move(relabeled));

        CheckResult all_enabled{"all_enabled", true, "every item enabled"};
        std::string disabled;
        for (const Item& item : items_) {
            if (!item.enabled) {
                all_enabled.passed = false;
                if (!disabled.empty())
                    disabled += ", ";
                disabled += item.label;
            }
        }
        if (!all_enabled.passed)
            all_enabled.detail = "still disabled: " + disabled;
        checks.push_back(std::move(all_enabled));

        checks.push_back(check_count_preserved());

        CheckResult times{"times_unchanged", true, "all times match the initial state"};
        std::string changed;
        for (const Item& item : items_) {
            auto it = std::find_if(initial_items_.begin(), initial_items_.end(),
                                   [&](const Item& i) { return i.id == item.id; });
            std::string offence;
            if (it == initial_items_.end())
                offence = item.label + " (new item)";
            else if (it->time != item.time)
                offence = item.label + " (" + std::to_string(it->time) + " -> " +
                          std::to_string(item.time) + ")";
            if (!offence.empty()) {
                times.passed = false;
                if (!changed.empty())
                    changed += ", ";
                changed += offence;
            }
        }
        if (!times.passed)
            times.detail = "changed times: " + changed;
        checks.push_back(std::move(times));
        return checks;
    }

    std::string password_;
    std::string token_;
    std::vector<Item> items_; // sorted by id
    std::vector<Item> initial_items_;
    int next_id_ = 101;
};

std::vector<CheckResult> collapse_binary(const std::vector<CheckResult>& checks) {
    bool all = std::all_of(checks.begin(), checks.end(),
                           [](const CheckResult& c) { return c.passed; });
    std::string detail;
    for (const CheckResult& c : checks) {
        if (!detail.empty())
            detail += "; ";
        detail += c.name + (c.passed ? ": pass" : ": fail (" + c.detail + ")");
    }
    return {{"task_complete", all, detail}};
}

struct CheckerSpec {
    ToolCall call;
    bool binary = false;
};

CheckerSpec parse_checker(const TaskSpec& task) {
    CheckerSpec spec;
    try {
        spec.call = parse_action(task.checker_ref);
    } catch (const Error& e) {
        fail(Errc::unknown_checker,
             "unparseable checker_ref for " + task.task_id + ": " + e.what());
    }
    if (spec.call.args.contains("binary")) {
        if (!spec.call.args.at("binary").is_boolean())
            fail(Errc::unknown_checker, "checker arg 'binary' must be true or false");
        spec.binary = spec.call.args.at("binary").get<bool>();
        spec.call.args.erase("binary");
    }
    return spec;
}

std::string checker_string_arg(const ToolCall& call, const char* name) {
    if (!call.args.contains(name) || !call.args.at(name).is_string())
        fail(Errc::unknown_checker,
             "checker " + call.api + " needs string arg '" + name + "'");
    return call.args.at(name).get<std::string>();
}

int64_t checker_int_arg(const ToolCall& call, const char* name) {
    if (!call.args.contains(name) || !call.args.at(name).is_number_integer())
        fail(Errc::unknown_checker,
             "checker " + call.api + " needs integer arg '" + name + "'");
    return call.args.at(name).get<int64_t>();
}

} // namespace

OutcomeGrade ToyWorldSession::evaluate(const TaskSpec& task) {
    require(task.env_id == env_id(), "task " + task.task_id + " targets env '" + task.env_id +
                                         "', session is '" + env_id() + "'");
    CheckerSpec spec = parse_checker(task);

    std::vector<CheckResult> checks;
    if (spec.call.api == "shift_and_disable") {
        std::string label = checker_string_arg(spec.call, "label");
        int64_t delta = checker_int_arg(spec.call, "delta");
        const Item* target = initial_by_label(label);
        if (!target)
            fail(Errc::unknown_checker,
                 "checker target label \"" + label + "\" not in the initial inventory");
        checks = checks_shift_and_disable(*target, delta);
    } else if (spec.call.api == "relabel_and_enable") {
        std::string label = checker_string_arg(spec.call, "label");
        std::string new_label = checker_string_arg(spec.call, "new_label");
        const Item* target = initial_by_label(label);
        if (!target)
            fail(Errc::unknown_checker,
                 "checker target label \"" + label + "\" not in the initial inventory");
        checks = checks_relabel_and_enable(*target, new_label);
    } else {
        fail(Errc::unknown_checker, "no checker named '" + spec.call.api + "'");
    }

    if (spec.binary)
        checks = collapse_binary(checks);
    return OutcomeGrade::from_checks(checks);
}

std::vector<Item> generate_items(uint64_t seed) {
    return generate_world(seed).items;
}

std::string password(uint64_t seed) {
    return generate_world(seed).password;
}

std::string session_token(uint64_t seed) {
    return generate_world(seed).token;
}

void register_toyworld(EnvRegistry& registry) {
    registry.register_env(std::string(kEnvId),
                          [](const std::string& env_id, uint64_t seed) {
                              return std::make_unique<ToyWorldSession>(env_id, seed);
                          });
}

std::vector<std::string> solution_actions(const TaskSpec& task) {
    CheckerSpec spec = parse_checker(task);
    WorldContent w = generate_world(task.scenario_seed);

    std::string label = checker_string_arg(spec.call, "label");
    auto target_it = std::find_if(w.items.begin(), w.items.end(),
                                  [&](const Item& i) { return i.label == label; });
    if (target_it == w.items.end())
        fail(Errc::unknown_checker,
             "checker target label \"" + label + "\" not in the initial inventory");
    const Item& target = *target_it;

    std::vector<std::string> actions;
    {
        ToolCall login{"login", json::object()};
        login.args["user"] = std::string(kUser);
        login.args["pass"] = w.password;
        actions.push_back(render_action(login));
    }
    int full_pages = static_cast<int>((w.items.size() + kPageSize - 1) / kPageSize);
    for (int page = 1; page <= full_pages + 1; ++page) {
        ToolCall list{"list_items", json::object()};
        list.args["page"] = page;
        list.args["token"] = w.token;
        actions.push_back(render_action(list));
    }

    auto update = [&](json args) {
        ToolCall call{"update_item", std::move(args)};
        call.args["token"] = w.token;
        actions.push_back(render_action(call));
    };

    if (spec.call.api == "shift_and_disable") {
        int64_t delta = checker_int_arg(spec.call, "delta");
        json args;
        args["id"] = target.id;
        args["time"] = target.time + delta;
        args["enabled"] = true;
        update(std::move(args));
        for (const Item& item : w.items) {
            if (item.id == target.id)
                continue;
            json other;
            other["id"] = item.id;
            other["enabled"] = false;
            update(std::move(other));
        }
    } else if (spec.call.api == "relabel_and_enable") {
        std::string new_label = checker_string_arg(spec.call, "new_label");
        json args;
        args["id"] = target.id;
        args["label"] = new_label;
        args["enabled"] = true;
        update(std::move(args));
        for (const Item& item : w.items) {
            if (item.id == target.id)
                continue;
            json other;
            other["id"] = item.id;
            other["enabled"] = true;
            update(std::move(other));
        }
    } else {
        fail(Errc::unknown_checker, "no solution template for checker '" + spec.call.api + "'");
    }
    return actions;
}

Dataset make_dataset(const std::string& name, uint64_t base_seed, int train_count,
                     int eval_count) {
    require(train_count >= 0 && eval_count >= 0 && train_count + eval_count > 0,
            "dataset needs at least one task");
    Dataset dataset;
    dataset.name = name;
    int total = train_count + eval_count;
    for (int k = 0; k < total; ++k) {
        bool is_train = k < train_count;
        int ordinal = is_train ? k + 1 : k - train_count + 1;
        char id_buf[32];
        std::snprintf(id_buf, sizeof(id_buf), "%s_%02d", is_train ? "train" : "eval", ordinal);

        uint64_t seed = base_seed + static_cast<uint64_t>(k);
        WorldContent w = generate_world(seed);
        Rng pick(seed ^ 0x705eba11c0ffee00ull);
        const Item& target = w.items[pick.below(w.items.size())];

        DatasetTask dt;
        dt.split = is_train ? "train" : "eval";
        TaskSpec& t = dt.task;
        t.task_id = id_buf;
        t.env_id = std::string(kEnvId);
        t.scenario_seed = seed;

        std::string login_part = "You manage the \"tracker\" app. Log in as user \"" +
                                 std::string(kUser) + "\" with password \"" + w.password +
                                 "\". ";
        if (k % 2 == 0) {
            constexpr std::array<int, 4> kDeltas = {30, 45, 60, 90};
            int delta = kDeltas[pick.below(kDeltas.size())];
            ToolCall checker{"shift_and_disable", json::object()};
            checker.args["label"] = target.label;
            checker.args["delta"] = delta;
            t.checker_ref = render_action(checker);
            t.instruction = login_part + "Shift the item labeled \"" + target.label +
                            "\" by +" + std::to_string(delta) +
                            " minutes, keep it enabled, and disable every other item.";
        } else {
            std::vector<std::string> unused;
            for (std::string_view candidate : kLabelPool) {
                bool taken = std::any_of(w.items.begin(), w.items.end(), [&](const Item& i) {
                    return i.label == candidate;
                });
                if (!taken)
                    unused.emplace_back(candidate);
            }
            std::string new_label = unused[pick.below(unused.size())];
            ToolCall checker{"relabel_and_enable", json::object()};
            checker.args["label"] = target.label;
            checker.args["new_label"] = new_label;
            t.checker_ref = render_action(checker);
            t.instruction = login_part + "Rename the item labeled \"" + target.label +
                            "\" to \"" + new_label +
                            "\" and make sure every item ends up enabled.";
        }
        dataset.tasks.push_back(std::move(dt));
    }
    return dataset;
}

} // namespace mindskill::toyworld
