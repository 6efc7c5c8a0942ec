#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mindskill {

// The five section titles every complete skill carries, in canonical order.
inline constexpr std::array<std::string_view, 5> kStandardSections = {
    "Overview", "When to Apply", "Procedure", "Key Patterns", "Common Pitfalls"};

struct SkillSection {
    std::string title;
    std::string body; // trimmed of leading/trailing blank lines, inner whitespace intact

    bool operator==(const SkillSection&) const = default;
};

// A SKILL.md document: `---` frontmatter with exactly `name` and `description`,
// followed by `## ` sections. `raw` holds the exact text the doc came from and
// does not participate in structural equality.
struct SkillDoc {
    std::string name;
    std::string description;
    std::vector<SkillSection> sections;
    std::string raw;

    bool operator==(const SkillDoc& other) const {
        return name == other.name && description == other.description &&
               sections == other.sections;
    }
};

enum class SkillViolationKind {
    missing_frontmatter,
    malformed_frontmatter,
    missing_field,
    empty_body,
    loose_content,
    missing_section,
};

struct SkillViolation {
    SkillViolationKind kind;
    std::string detail;

    bool operator==(const SkillViolation&) const = default;
};

std::string render_violation(const SkillViolation& v);

// Throws Error(missing_frontmatter | missing_field | empty_body | malformed_skill).
SkillDoc parse_skill(const std::string& text);

// Canonical form: frontmatter (name before description), sections in stored
// order, one blank line between blocks, trailing newline.
std::string serialize_skill(const SkillDoc& doc);

// Constructs a doc from parts, trims fields, enforces invariants, and fills
// `raw` with the canonical serialization.
SkillDoc make_skill_doc(std::string name, std::string description,
                        std::vector<SkillSection> sections);

// Empty result iff parse_skill succeeds and all five standard sections exist.
std::vector<SkillViolation> validate_skill_format(const std::string& text);
std::vector<std::string> render_violations(const std::vector<SkillViolation>& violations);

// `### SKILLS BEGIN` block used wherever skills enter an agent prompt: full
// canonical documents separated by a horizontal rule.
std::string render_skills_block(std::span<const SkillDoc> docs);

inline constexpr std::string_view kSkillsBeginMarker = "### SKILLS BEGIN";
inline constexpr std::string_view kSkillsEndMarker = "### SKILLS END";

} // namespace mindskill
