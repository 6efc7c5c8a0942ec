#pragma once

#include "mindskill/losses.hpp"
#include "mindskill/provider.hpp"
#include "mindskill/skilldoc.hpp"
#include "mindskill/trajectory.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mindskill {

struct LibraryEntry {
    SkillDoc skill;
    std::string source_task_id;
    LossTriple best_triple;
    int created_iteration = -1; // unknown when loaded from disk

    bool operator==(const LibraryEntry&) const = default;
};

struct RetrievalConfig {
    int k = 3;
    enum class Mode { model, lexical } mode = Mode::model;
};

struct RetrievalOutcome {
    std::vector<LibraryEntry> entries; // model ranking order, or lexical order
    bool used_fallback = false;
    std::string warning; // non-empty iff fallback happened
};

// One skill per source task; replacement only on strict lexicographic
// improvement, so stored triples never worsen.
class SkillLibrary {
public:
    // true when stored (new task or strictly better). Throws InvalidSkill.
    bool add_or_replace(LibraryEntry entry);

    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const LibraryEntry* find(const std::string& task_id) const;
    // sorted by source_task_id; this order defines retrieval listing ids s1..sN
    const std::vector<LibraryEntry>& entries() const { return entries_; }

    // Model mode: one call (tag=retrieval) listing `<id>: <name> — <description>`
    // per entry, never section bodies; demands exactly min(k, size) distinct
    // ids. Falls back to lexical scoring when validation exhausts. Lexical
    // mode: distinct-shared-token overlap between instruction and
    // name+description, ties by listing id. Throws EmptyLibrary.
    RetrievalOutcome retrieve(const TaskSpec& task, const RetrievalConfig& cfg,
                              ChatClient* client, const CallSettings* settings) const;

    std::vector<LibraryEntry> retrieve_lexical(const std::string& instruction, int k) const;

    // The exact listing text a model-mode request carries; exposed for tests.
    std::string render_listing() const;

    void save(const std::filesystem::path& dir) const;
    static SkillLibrary load(const std::filesystem::path& dir);

private:
    std::vector<LibraryEntry> entries_; // kept sorted by source_task_id
};

// Replaces the single {{skills}} placeholder with the marker-wrapped canonical
// documents of the given entries. Throws BadTemplate.
std::string inject(const std::string& template_text,
                   const std::vector<LibraryEntry>& entries);

std::vector<SkillDoc> entry_docs(const std::vector<LibraryEntry>& entries);

} // namespace mindskill
