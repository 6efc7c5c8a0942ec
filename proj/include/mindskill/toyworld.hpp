#pragma once

#include "mindskill/environment.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mindskill::toyworld {

inline constexpr std::string_view kEnvId = "toyworld";
inline constexpr std::string_view kUser = "admin";
inline constexpr int kPageSize = 3;

struct Item {
    int id = 0;
    std::string label;
    bool enabled = false;
    int time = 0; // minutes

    bool operator==(const Item&) const = default;
};

// Seed-derived world content. Generation order is a frozen contract: password,
// token, then per item (label draw, enabled, time). Item count = 5 + seed % 4.
std::vector<Item> generate_items(uint64_t seed);
std::string password(uint64_t seed);
std::string session_token(uint64_t seed);

void register_toyworld(EnvRegistry& registry);

// Known-good action sequence for a generated task: login, paginate until the
// first empty page, then the targeted and bulk updates the checker expects.
std::vector<std::string> solution_actions(const TaskSpec& task);

// Seeded task generation over two templates (shift_and_disable,
// relabel_and_enable), alternating; task seeds derive from base_seed.
Dataset make_dataset(const std::string& name, uint64_t base_seed, int train_count,
                     int eval_count);

} // namespace mindskill::toyworld
