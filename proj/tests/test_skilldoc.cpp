#include "mindskill/errors.hpp"
#include "mindskill/skilldoc.hpp"
#include "mindskill/util.hpp"

#include <doctest.h>

#include <filesystem>

using namespace mindskill;

namespace {

const char* kValidDoc =
    "---\n"
    "name: paginated-update\n"
    "description: Walk every page, then update the target.\n"
    "---\n"
    "\n"
    "## Overview\n"
    "\n"
    "Collect first, mutate second.\n"
    "\n"
    "## When to Apply\n"
    "\n"
    "A list endpoint pages its results.\n"
    "\n"
    "## Procedure\n"
    "\n"
    "1. Authenticate.\n"
    "2. Page until empty.\n"
    "3. Update the target.\n"
    "\n"
    "## Key Patterns\n"
    "\n"
    "Pagination loop with an empty-page exit.\n"
    "\n"
    "## Common Pitfalls\n"
    "\n"
    "Stopping after the first page.\n";

SkillDoc sample_doc() {
    return make_skill_doc(
        "paginated-update", "Walk every page, then update the target.",
        {{"Overview", "Collect first, mutate second."},
         {"When to Apply", "A list endpoint pages its results."},
         {"Procedure", "1. Authenticate.\n2. Page until empty.\n3. Update the target."},
         {"Key Patterns", "Pagination loop with an empty-page exit."},
         {"Common Pitfalls", "Stopping after the first page."}});
}

bool has_kind(const std::vector<SkillViolation>& vs, SkillViolationKind kind) {
    for (const SkillViolation& v : vs)
        if (v.kind == kind)
            return true;
    return false;
}

} // namespace

TEST_CASE("parse extracts frontmatter and sections") {
    SkillDoc doc = parse_skill(kValidDoc);
    CHECK(doc.name == "paginated-update");
    CHECK(doc.description == "Walk every page, then update the target.");
    REQUIRE(doc.sections.size() == 5);
    CHECK(doc.sections[0].title == "Overview");
    CHECK(doc.sections[2].body == "1. Authenticate.\n2. Page until empty.\n3. Update the target.");
    CHECK(doc.raw == kValidDoc);
}

TEST_CASE("serialize(parse) is the identity on canonical text") {
    CHECK(serialize_skill(parse_skill(kValidDoc)) == kValidDoc);
}

TEST_CASE("serialization is a fixpoint") {
    std::string once = serialize_skill(sample_doc());
    CHECK(serialize_skill(parse_skill(once)) == once);
}

TEST_CASE("make_skill_doc equals its parsed serialization") {
    SkillDoc doc = sample_doc();
    CHECK(parse_skill(serialize_skill(doc)) == doc);
    CHECK(doc.raw == serialize_skill(doc));
}

TEST_CASE("golden canonical document is byte-stable") {
    std::filesystem::path golden =
        std::filesystem::path(__FILE__).parent_path() / "golden" / "skill_canonical.md";
    CHECK(serialize_skill(sample_doc()) == read_file(golden));
}

TEST_CASE("parse tolerates a UTF-8 BOM and CRLF input") {
    std::string text = "\xEF\xBB\xBF";
    for (char c : std::string(kValidDoc)) {
        if (c == '\n')
            text += "\r\n";
        else
            text += c;
    }
    SkillDoc doc = parse_skill(text);
    CHECK(doc.name == "paginated-update");
    CHECK(doc.sections.size() == 5);
}

TEST_CASE("parse rejects documents without frontmatter") {
    CHECK_THROWS_WITH_AS(parse_skill("## Overview\n\nBody.\n"),
                         doctest::Contains("frontmatter"), Error);
    try {
        parse_skill("no structure at all");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::missing_frontmatter);
    }
}

TEST_CASE("parse rejects missing fields") {
    try {
        parse_skill("---\nname: x\n---\n\n## Overview\n\nBody.\n");
        FAIL("expected a missing-field error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::missing_field);
    }
}

TEST_CASE("parse rejects empty section bodies") {
    std::string text = "---\nname: x\ndescription: y\n---\n\n## Overview\n\n## Procedure\n\nBody.\n";
    try {
        parse_skill(text);
        FAIL("expected an empty-body error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_body);
    }
}

TEST_CASE("validate reports every standard section that is missing") {
    std::string text = "---\nname: x\ndescription: y\n---\n\n## Overview\n\nBody.\n";
    std::vector<SkillViolation> vs = validate_skill_format(text);
    int missing = 0;
    for (const SkillViolation& v : vs)
        if (v.kind == SkillViolationKind::missing_section)
            ++missing;
    CHECK(missing == 4);
}

TEST_CASE("validate flags loose content between frontmatter and first section") {
    std::string text =
        "---\nname: x\ndescription: y\n---\n\nstray prose\n\n## Overview\n\nBody.\n";
    CHECK(has_kind(validate_skill_format(text), SkillViolationKind::loose_content));
}

TEST_CASE("validate flags duplicate and unknown frontmatter keys") {
    CHECK(has_kind(validate_skill_format(
                       "---\nname: a\nname: b\ndescription: y\n---\n\n## Overview\n\nB.\n"),
                   SkillViolationKind::malformed_frontmatter));
    CHECK(has_kind(validate_skill_format(
                       "---\nname: a\ndescription: y\nowner: z\n---\n\n## Overview\n\nB.\n"),
                   SkillViolationKind::malformed_frontmatter));
}

TEST_CASE("validate accepts extra non-standard sections") {
    std::string text = serialize_skill(make_skill_doc(
        "x", "y",
        {{"Overview", "a"},
         {"When to Apply", "b"},
         {"Procedure", "c"},
         {"Key Patterns", "d"},
         {"Common Pitfalls", "e"},
         {"Worked Example", "extra material survives"}}));
    CHECK(validate_skill_format(text).empty());
    CHECK(parse_skill(text).sections.size() == 6);
}

TEST_CASE("random documents round-trip through parse and serialize") {
    Rng rng(0x5eedf00d);
    const std::string pool[] = {"alpha", "beta", "gamma one", "x: y", "- item", "a \"quoted\" bit"};
    for (int i = 0; i < 100; ++i) {
        std::vector<SkillSection> sections;
        for (std::string_view title : kStandardSections) {
            std::string body;
            size_t lines = 1 + rng.below(3);
            for (size_t l = 0; l < lines; ++l) {
                if (l)
                    body += "\n";
                body += pool[rng.below(6)];
            }
            sections.push_back({std::string(title), body});
        }
        SkillDoc doc = make_skill_doc("skill-" + std::to_string(i),
                                      "case " + std::to_string(i), std::move(sections));
        std::string text = serialize_skill(doc);
        CHECK(parse_skill(text) == doc);
        CHECK(serialize_skill(parse_skill(text)) == text);
        CHECK(validate_skill_format(text).empty());
    }
}

TEST_CASE("make_skill_doc enforces invariants") {
    CHECK_THROWS_AS(make_skill_doc("", "desc", {{"Overview", "b"}}), Error);
    CHECK_THROWS_AS(make_skill_doc("name", "desc", {}), Error);
    CHECK_THROWS_AS(make_skill_doc("name", "desc", {{"Overview", "  \n "}}), Error);
}

TEST_CASE("skills block renders markers, separators, and the empty notice") {
    CHECK(render_skills_block({}) ==
          std::string(kSkillsBeginMarker) + "\n\n(no skills available for this task)\n\n" +
              std::string(kSkillsEndMarker));

    SkillDoc a = sample_doc();
    SkillDoc b = make_skill_doc("other", "another skill",
                                {{"Overview", "one"},
                                 {"When to Apply", "two"},
                                 {"Procedure", "three"},
                                 {"Key Patterns", "four"},
                                 {"Common Pitfalls", "five"}});
    std::vector<SkillDoc> docs{a, b};
    std::string block = render_skills_block(docs);
    CHECK(block.find(serialize_skill(a)) != std::string::npos);
    CHECK(block.find(serialize_skill(b)) != std::string::npos);
    CHECK(block.find("\n---\n\n---\nname: other\n") != std::string::npos);
    CHECK(block.rfind(kSkillsBeginMarker, 0) == 0);
    CHECK(block.find(kSkillsEndMarker) == block.size() - kSkillsEndMarker.size());
}

TEST_CASE("violation rendering names the section or field") {
    std::vector<SkillViolation> vs =
        validate_skill_format("---\nname: x\n---\n\n## Overview\n\nB.\n");
    REQUIRE(!vs.empty());
    bool mentions_description = false;
    for (const std::string& line : render_violations(vs))
        if (line.find("description") != std::string::npos)
            mentions_description = true;
    CHECK(mentions_description);
}
