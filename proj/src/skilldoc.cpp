#include "mindskill/skilldoc.hpp"

#include "mindskill/errors.hpp"
#include "mindskill/util.hpp"

#include <algorithm>
#include <optional>

namespace mindskill {

namespace {

bool is_blank(const std::string& line) {
    return trim(line).empty();
}

bool valid_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

// Strips leading/trailing blank lines from a body, keeps inner lines verbatim.
std::string trim_body(const std::vector<std::string>& lines) {
    size_t b = 0;
    size_t e = lines.size();
    while (b < e && is_blank(lines[b]))
        ++b;
    while (e > b && is_blank(lines[e - 1]))
        --e;
    std::string out;
    for (size_t i = b; i < e; ++i) {
        if (i > b)
            out += '\n';
        out += lines[i];
    }
    return out;
}

struct ParseOutcome {
    std::optional<SkillDoc> doc;
    std::vector<SkillViolation> violations;
};

ParseOutcome parse_internal(const std::string& text) {
    ParseOutcome out;
    auto bad = [&](SkillViolationKind kind, std::string detail) {
        out.violations.push_back({kind, std::move(detail)});
    };

    std::string body_text = text;
    // tolerate a UTF-8 BOM
    if (starts_with(body_text, "\xEF\xBB\xBF"))
        body_text.erase(0, 3);

    std::vector<std::string> lines = split_lines(body_text);
    size_t i = 0;
    while (i < lines.size() && is_blank(lines[i]))
        ++i;
    if (i >= lines.size() || trim(lines[i]) != "---") {
        bad(SkillViolationKind::missing_frontmatter, "document does not start with a `---` block");
        return out;
    }
    ++i;

    std::string name;
    std::string description;
    bool saw_name = false;
    bool saw_description = false;
    bool closed = false;
    for (; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (trim(line) == "---") {
            closed = true;
            ++i;
            break;
        }
        if (is_blank(line))
            continue;
        size_t colon = line.find(':');
        if (colon == std::string::npos || colon == 0) {
            bad(SkillViolationKind::malformed_frontmatter, "not a `key: value` line: " + trim(line));
            continue;
        }
        std::string key = trim(line.substr(0, colon));
        std::string value = trim(line.substr(colon + 1));
        if (key.empty() || !std::all_of(key.begin(), key.end(), valid_key_char)) {
            bad(SkillViolationKind::malformed_frontmatter, "invalid frontmatter key: " + key);
            continue;
        }
        if (key == "name") {
            if (saw_name)
                bad(SkillViolationKind::malformed_frontmatter, "duplicate frontmatter key: name");
            saw_name = true;
            name = value;
        } else if (key == "description") {
            if (saw_description)
                bad(SkillViolationKind::malformed_frontmatter, "duplicate frontmatter key: description");
            saw_description = true;
            description = value;
        } else {
            bad(SkillViolationKind::malformed_frontmatter, "unexpected frontmatter key: " + key);
        }
    }
    if (!closed) {
        bad(SkillViolationKind::malformed_frontmatter, "frontmatter block is not closed by `---`");
        return out;
    }
    if (!saw_name || name.empty())
        bad(SkillViolationKind::missing_field, "name");
    if (!saw_description || description.empty())
        bad(SkillViolationKind::missing_field, "description");

    std::vector<SkillSection> sections;
    std::vector<std::string> body_lines;
    std::optional<std::string> current_title;
    auto flush = [&] {
        if (current_title) {
            std::string body = trim_body(body_lines);
            if (body.empty())
                bad(SkillViolationKind::empty_body,
                    "section '" + *current_title + "' has an empty body");
            sections.push_back({*current_title, std::move(body)});
        }
        body_lines.clear();
    };
    for (; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (starts_with(line, "## ")) {
            std::string title = trim(line.substr(3));
            if (title.empty()) {
                bad(SkillViolationKind::loose_content, "section heading with empty title");
                continue;
            }
            flush();
            current_title = title;
        } else if (!current_title) {
            if (!is_blank(line))
                bad(SkillViolationKind::loose_content, "content before the first section heading: " + trim(line));
        } else {
            body_lines.push_back(line);
        }
    }
    flush();

    if (sections.empty())
        bad(SkillViolationKind::empty_body, "no sections after frontmatter");

    if (!out.violations.empty())
        return out;

    SkillDoc doc;
    doc.name = std::move(name);
    doc.description = std::move(description);
    doc.sections = std::move(sections);
    doc.raw = text;
    out.doc = std::move(doc);
    return out;
}

Errc errc_for(SkillViolationKind kind) {
    switch (kind) {
    case SkillViolationKind::missing_frontmatter: return Errc::missing_frontmatter;
    case SkillViolationKind::missing_field: return Errc::missing_field;
    case SkillViolationKind::empty_body: return Errc::empty_body;
    default: return Errc::malformed_skill;
    }
}

} // namespace

std::string render_violation(const SkillViolation& v) {
    switch (v.kind) {
    case SkillViolationKind::missing_frontmatter:
        return "missing frontmatter: " + v.detail;
    case SkillViolationKind::malformed_frontmatter:
        return "malformed frontmatter: " + v.detail;
    case SkillViolationKind::missing_field:
        return "missing or empty frontmatter field: " + v.detail;
    case SkillViolationKind::empty_body:
        return "empty body: " + v.detail;
    case SkillViolationKind::loose_content:
        return "loose content: " + v.detail;
    case SkillViolationKind::missing_section:
        return "missing required section: " + v.detail;
    }
    return v.detail;
}

SkillDoc parse_skill(const std::string& text) {
    ParseOutcome out = parse_internal(text);
    if (out.doc)
        return std::move(*out.doc);
    const SkillViolation& first = out.violations.front();
    throw Error(errc_for(first.kind), render_violation(first));
}

std::string serialize_skill(const SkillDoc& doc) {
    std::string out;
    out += "---\n";
    out += "name: " + doc.name + "\n";
    out += "description: " + doc.description + "\n";
    out += "---\n";
    for (const SkillSection& section : doc.sections) {
        out += "\n## " + section.title + "\n";
        if (!section.body.empty())
            out += "\n" + section.body + "\n";
    }
    return out;
}

SkillDoc make_skill_doc(std::string name, std::string description,
                        std::vector<SkillSection> sections) {
    SkillDoc doc;
    doc.name = trim(name);
    doc.description = trim(description);
    if (doc.name.empty())
        fail(Errc::missing_field, "name");
    if (doc.description.empty())
        fail(Errc::missing_field, "description");
    if (sections.empty())
        fail(Errc::empty_body, "a skill needs at least one section");
    for (SkillSection& s : sections) {
        s.title = trim(s.title);
        if (s.title.empty())
            fail(Errc::malformed_skill, "section with empty title");
        s.body = trim_body(split_lines(s.body));
        if (s.body.empty())
            fail(Errc::empty_body, "section '" + s.title + "' has an empty body");
    }
    doc.sections = std::move(sections);
    doc.raw = serialize_skill(doc);
    return doc;
}

std::vector<SkillViolation> validate_skill_format(const std::string& text) {
    ParseOutcome out = parse_internal(text);
    std::vector<SkillViolation> violations = std::move(out.violations);
    if (out.doc) {
        for (std::string_view wanted : kStandardSections) {
            bool found = std::any_of(out.doc->sections.begin(), out.doc->sections.end(),
                                     [&](const SkillSection& s) { return s.title == wanted; });
            if (!found)
                violations.push_back({SkillViolationKind::missing_section, std::string(wanted)});
        }
    }
    return violations;
}

std::vector<std::string> render_violations(const std::vector<SkillViolation>& violations) {
    std::vector<std::string> lines;
    lines.reserve(violations.size());
    for (const SkillViolation& v : violations)
        lines.push_back(render_violation(v));
    return lines;
}

std::string render_skills_block(std::span<const SkillDoc> docs) {
    std::string out;
    out += kSkillsBeginMarker;
    out += "\n\n";
    if (docs.empty()) {
        out += "(no skills available for this task)\n";
    } else {
        for (size_t i = 0; i < docs.size(); ++i) {
            if (i)
                out += "\n---\n\n";
            out += serialize_skill(docs[i]);
        }
    }
    out += "\n";
    out += kSkillsEndMarker;
    return out;
}

} // namespace mindskill
