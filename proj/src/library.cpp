#include "mindskill/library.hpp"

#include "mindskill/agents.hpp"
#include "mindskill/errors.hpp"
#include "mindskill/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace mindskill {

using nlohmann::json;

bool SkillLibrary::add_or_replace(LibraryEntry entry) {
    require(!entry.source_task_id.empty(), "library entry needs a source task id");
    validate_triple(entry.best_triple);
    std::vector<SkillViolation> violations = validate_skill_format(serialize_skill(entry.skill));
    if (!violations.empty())
        fail(Errc::invalid_skill, "entry for " + entry.source_task_id + ": " +
                                      join(render_violations(violations), "; "));

    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const LibraryEntry& e) {
        return e.source_task_id == entry.source_task_id;
    });
    if (it == entries_.end()) {
        entries_.push_back(std::move(entry));
        std::sort(entries_.begin(), entries_.end(),
                  [](const LibraryEntry& a, const LibraryEntry& b) {
                      return a.source_task_id < b.source_task_id;
                  });
        return true;
    }
    if (!lex_less(entry.best_triple, it->best_triple))
        return false;
    *it = std::move(entry);
    return true;
}

const LibraryEntry* SkillLibrary::find(const std::string& task_id) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const LibraryEntry& e) {
        return e.source_task_id == task_id;
    });
    return it == entries_.end() ? nullptr : &*it;
}

std::string SkillLibrary::render_listing() const {
    std::string out;
    for (size_t i = 0; i < entries_.size(); ++i) {
        const LibraryEntry& e = entries_[i];
        out += "s" + std::to_string(i + 1) + ": " + e.skill.name + " — " +
               e.skill.description + "\n";
    }
    return out;
}

namespace {

// id tokens are s1..sN; tokenize_words keeps them intact
bool is_id_token(const std::string& token) {
    if (token.size() < 2 || token[0] != 's')
        return false;
    return std::all_of(token.begin() + 1, token.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
}

std::vector<size_t> extract_ids(const std::string& content, size_t library_size,
                                std::vector<std::string>& violations) {
    std::vector<size_t> picked;
    std::set<size_t> seen;
    for (const std::string& token : tokenize_words(content)) {
        if (!is_id_token(token))
            continue;
        size_t n = std::stoul(token.substr(1));
        if (n < 1 || n > library_size) {
            violations.push_back("unknown skill id '" + token + "'");
            continue;
        }
        if (!seen.insert(n).second) {
            violations.push_back("duplicate skill id '" + token + "'");
            continue;
        }
        picked.push_back(n - 1);
    }
    return picked;
}

} // namespace

std::vector<LibraryEntry> SkillLibrary::retrieve_lexical(const std::string& instruction,
                                                         int k) const {
    require(k >= 1, "retrieval k must be positive");
    if (entries_.empty())
        fail(Errc::empty_library, "cannot retrieve from an empty library");

    std::vector<std::string> wanted = tokenize_words(instruction);
    std::set<std::string> instruction_tokens(wanted.begin(), wanted.end());

    struct Scored {
        size_t index;
        size_t score;
    };
    std::vector<Scored> scored;
    for (size_t i = 0; i < entries_.size(); ++i) {
        std::set<std::string> entry_tokens;
        for (const std::string& t :
             tokenize_words(entries_[i].skill.name + " " + entries_[i].skill.description))
            entry_tokens.insert(t);
        size_t overlap = 0;
        for (const std::string& t : entry_tokens)
            if (instruction_tokens.count(t))
                ++overlap;
        scored.push_back({i, overlap});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score)
            return a.score > b.score;
        return a.index < b.index;
    });
    size_t take = std::min(static_cast<size_t>(k), entries_.size());
    std::vector<LibraryEntry> out;
    for (size_t i = 0; i < take; ++i)
        out.push_back(entries_[scored[i].index]);
    return out;
}

RetrievalOutcome SkillLibrary::retrieve(const TaskSpec& task, const RetrievalConfig& cfg,
                                        ChatClient* client,
                                        const CallSettings* settings) const {
    require(cfg.k >= 1, "retrieval k must be positive");
    if (entries_.empty())
        fail(Errc::empty_library, "cannot retrieve from an empty library");

    RetrievalOutcome out;
    if (cfg.mode == RetrievalConfig::Mode::lexical) {
        out.entries = retrieve_lexical(task.instruction, cfg.k);
        return out;
    }

    require(client != nullptr && settings != nullptr,
            "model-mode retrieval needs a provider client");
    size_t want = std::min(static_cast<size_t>(cfg.k), entries_.size());
    std::string user = "Task instruction:\n" + task.instruction + "\n\nAvailable skills:\n" +
                       render_listing() + "\nSelect exactly " + std::to_string(want) +
                       " skills most relevant to the task. Reply with only their ids in "
                       "ranked order, most relevant first, like [s2, s1].";

    ChatRequest req = make_request(kTagRetrieval, *settings, {{Role::user, user}});
    auto validator = [&](const std::string& content) {
        std::vector<std::string> violations;
        std::vector<size_t> picked = extract_ids(content, entries_.size(), violations);
        if (picked.size() != want)
            violations.push_back("expected exactly " + std::to_string(want) +
                                 " distinct ids, found " + std::to_string(picked.size()));
        return violations;
    };

    try {
        ChatResponse resp = client->complete_validated(std::move(req), validator);
        std::vector<std::string> ignored;
        for (size_t idx : extract_ids(resp.content, entries_.size(), ignored))
            out.entries.push_back(entries_[idx]);
        return out;
    } catch (const ValidationError& e) {
        out.entries = retrieve_lexical(task.instruction, cfg.k);
        out.used_fallback = true;
        out.warning = std::string("model retrieval failed, using lexical fallback: ") +
                      e.what();
        return out;
    }
}

void SkillLibrary::save(const std::filesystem::path& dir) const {
    ensure_dir(dir);
    std::string index;
    for (const LibraryEntry& e : entries_) {
        std::string filename = e.source_task_id + ".skill.md";
        atomic_write_file(dir / filename, serialize_skill(e.skill));
        json row;
        row["task_id"] = e.source_task_id;
        row["name"] = e.skill.name;
        row["description"] = e.skill.description;
        row["outcome"] = e.best_triple.outcome;
        row["recon"] = e.best_triple.recon;
        row["rubric"] = e.best_triple.rubric;
        row["file"] = filename;
        index += row.dump() + "\n";
    }
    atomic_write_file(dir / "index.rec", index);
}

SkillLibrary SkillLibrary::load(const std::filesystem::path& dir) {
    SkillLibrary lib;
    std::filesystem::path index_path = dir / "index.rec";
    std::vector<std::string> lines = split_lines(read_file(index_path));
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty())
            continue;
        try {
            json row = json::parse(lines[i]);
            LibraryEntry e;
            e.source_task_id = row.at("task_id").get<std::string>();
            e.best_triple.outcome = row.at("outcome").get<double>();
            e.best_triple.recon = row.at("recon").get<double>();
            e.best_triple.rubric = row.at("rubric").get<double>();
            std::filesystem::path file = dir / row.at("file").get<std::string>();
            e.skill = parse_skill(read_file(file));
            if (e.skill.name != row.at("name").get<std::string>() ||
                e.skill.description != row.at("description").get<std::string>())
                fail(Errc::io_error, "index row for " + e.source_task_id +
                                         " does not match its skill file");
            if (!lib.add_or_replace(std::move(e)))
                fail(Errc::io_error, "duplicate task_id in library index");
        } catch (const json::exception& ex) {
            fail(Errc::io_error, "bad library index at " + index_path.string() + ":" +
                                     std::to_string(i + 1) + ": " + ex.what());
        }
    }
    return lib;
}

std::vector<SkillDoc> entry_docs(const std::vector<LibraryEntry>& entries) {
    std::vector<SkillDoc> docs;
    docs.reserve(entries.size());
    for (const LibraryEntry& e : entries)
        docs.push_back(e.skill);
    return docs;
}

std::string inject(const std::string& template_text,
                   const std::vector<LibraryEntry>& entries) {
    size_t first = template_text.find(kSkillsPlaceholder);
    if (first == std::string::npos ||
        template_text.find(kSkillsPlaceholder, first + 1) != std::string::npos)
        fail(Errc::bad_template, "template must contain {{skills}} exactly once");
    std::vector<SkillDoc> docs = entry_docs(entries);
    std::string out = template_text;
    out.replace(first, std::string_view(kSkillsPlaceholder).size(),
                render_skills_block(docs));
    return out;
}

} // namespace mindskill
