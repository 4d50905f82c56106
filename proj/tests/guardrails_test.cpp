#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rolerail/guardrails.hpp"
#include "rolerail/http_clients.hpp"
#include "support/test_world.hpp"

using namespace rolerail;

namespace {

RoleCatalog small_catalog() {
    return RoleCatalog{{
        {"Wizard", "are the most versatile spellcasters, learned through long study."},
        {"Warlock", "are spellcasters who bargain with otherworldly patrons for power."},
    }};
}

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
    auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, from.size(), to);
    return text;
}

}  // namespace

TEST_CASE("templates validate placeholder arity", "[guardrails]") {
    CHECK_NOTHROW(default_input_filter_template().validate());
    CHECK_NOTHROW(default_output_filter_template().validate());

    FilterPromptTemplate missing{FilterKind::input, "no placeholders at all"};
    CHECK_THROWS_AS(missing.validate(), Error);
    FilterPromptTemplate doubled{FilterKind::input,
                                 "{{role_description}} {{user_role}} {{user_role}} {{user_input}}"};
    CHECK_THROWS_AS(doubled.validate(), Error);
    FilterPromptTemplate spaced{FilterKind::input, "{{ role_description }} {{ user_role }} {{ user_input }}"};
    CHECK_NOTHROW(spaced.validate());
}

TEST_CASE("shipped template files match the built-in defaults", "[guardrails]") {
    auto input = FilterPromptTemplate::load(testsupport::resource_path("templates/input_filter_prompt.txt"),
                                            FilterKind::input);
    CHECK(input.text == default_input_filter_template().text);
    auto output = FilterPromptTemplate::load(testsupport::resource_path("templates/output_filter_prompt.txt"),
                                             FilterKind::output);
    CHECK(output.text == default_output_filter_template().text);
}

TEST_CASE("input filter prompt rendering", "[guardrails]") {
    RoleCatalog catalog = small_catalog();
    std::string prompt = render_input_filter_prompt(catalog, "Wizard", "How does Cure Wounds work?");

    CHECK(prompt.find("User's role: \"Wizard\"") != std::string::npos);
    CHECK(prompt.find("User message: \"How does Cure Wounds work?\"") != std::string::npos);
    CHECK(prompt.find("Check if the \"User's role\" below is included in the assigned roles") != std::string::npos);
    CHECK(prompt.find("Wizard: are the most versatile spellcasters, learned through long study.") !=
          std::string::npos);
    CHECK(prompt.find("Warlock: are spellcasters who bargain") != std::string::npos);
    CHECK(prompt.find("{{") == std::string::npos);

    SECTION("rendering is deterministic") {
        CHECK(prompt == render_input_filter_prompt(catalog, "Wizard", "How does Cure Wounds work?"));
    }
    SECTION("unknown role is rejected") {
        try {
            render_input_filter_prompt(catalog, "Barbarian", "hello");
            FAIL("expected unknown_role");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::unknown_role);
        }
    }
}

TEST_CASE("output filter prompt rendering", "[guardrails]") {
    RoleCatalog catalog = small_catalog();
    std::string prompt = render_output_filter_prompt(catalog, "Warlock", "Invisibility works as follows: ...");
    CHECK(prompt.find("User's role: \"Warlock\"") != std::string::npos);
    CHECK(prompt.find("Bot response: \"Invisibility works as follows: ...\"") != std::string::npos);
    CHECK(prompt.find("{{") == std::string::npos);
}

TEST_CASE("rendering substitutes values and nothing else", "[guardrails]") {
    // Render with sentinel values, then undo the three substitutions: the
    // result must be byte-identical to the stored template.
    RoleCatalog catalog{{{"@@ROLE@@", "@@DESC@@"}}};
    for (const FilterPromptTemplate* tmpl : {&default_input_filter_template(), &default_output_filter_template()}) {
        std::string rendered = tmpl->render(catalog, "@@ROLE@@", "@@PAYLOAD@@");
        std::string undone = replace_once(rendered, "@@ROLE@@: @@DESC@@", "{{role_description}}");
        undone = replace_once(undone, "@@ROLE@@", "{{user_role}}");
        undone = replace_once(undone, "@@PAYLOAD@@",
                              tmpl->kind == FilterKind::input ? "{{user_input}}" : "{{bot_response}}");
        CHECK(undone == tmpl->text);
    }
}

TEST_CASE("verdict parsing", "[guardrails]") {
    SECTION("exact yes") {
        FilterOutcome o = parse_filter_verdict("Answer: Yes.");
        CHECK(o.decision == AccessLabel::allow);
        CHECK(o.parsed);
    }
    SECTION("no with trailing explanation") {
        FilterOutcome o = parse_filter_verdict("Answer: No. (Because the user's role is not among the assigned roles.)");
        CHECK(o.decision == AccessLabel::block);
        CHECK(o.parsed);
    }
    SECTION("chain-of-thought preamble is tolerated") {
        FilterOutcome o = parse_filter_verdict(
            "The message mentions healing, which maps to Cleric or Paladin.\n"
            "The user's role is Wizard, which is not among them.\nAnswer: No.");
        CHECK(o.decision == AccessLabel::block);
        CHECK(o.parsed);
    }
    SECTION("the final occurrence decides") {
        CHECK(parse_filter_verdict("Answer: Yes. ... on reflection ... Answer: No.").decision == AccessLabel::block);
        CHECK(parse_filter_verdict("Answer: No. ... wait ... Answer: Yes.").decision == AccessLabel::allow);
    }
    SECTION("free-form text blocks with parsed=false") {
        FilterOutcome o = parse_filter_verdict("I believe the wizard may ask this");
        CHECK(o.decision == AccessLabel::block);
        CHECK_FALSE(o.parsed);
    }
    SECTION("near misses are not parsed") {
        for (const std::string s : {"Answer: Yes", "answer: yes.", "Answer:Yes.", "Answer: Maybe.", ""}) {
            FilterOutcome o = parse_filter_verdict(s);
            CHECK(o.decision == AccessLabel::block);
            CHECK_FALSE(o.parsed);
        }
    }
    SECTION("fuzzed completions never crash and never loosely allow") {
        std::mt19937 rng(99);
        const std::vector<std::string> pieces = {"Answer:",  "Yes.",   "No.",       "Answer: Yes.", "Answer: No.",
                                                 "wizard",   "\n",     " ",         "(Because",     ")",
                                                 "Assigned", "Roles:", "Answer: ",  "yes",          "no"};
        std::uniform_int_distribution<std::size_t> piece_dist(0, pieces.size() - 1);
        std::uniform_int_distribution<int> len_dist(0, 8);
        for (int i = 0; i < 500; ++i) {
            std::string s;
            for (int j = 0, n = len_dist(rng); j < n; ++j) s += pieces[piece_dist(rng)];
            FilterOutcome o = parse_filter_verdict(s);
            const auto yes = s.rfind("Answer: Yes.");
            const auto no = s.rfind("Answer: No.");
            const bool oracle_allow = yes != std::string::npos && (no == std::string::npos || yes > no);
            CHECK((o.decision == AccessLabel::allow) == oracle_allow);
            if (!o.parsed) CHECK(o.decision == AccessLabel::block);
        }
    }
}

TEST_CASE("run_filter composes render, chat and parse", "[guardrails]") {
    RoleCatalog catalog = small_catalog();
    ChatParams params;

    SECTION("allow path") {
        ScriptedBackend backend;
        backend.add_script({user_message(render_input_filter_prompt(catalog, "Wizard", "q"))}, "Answer: Yes.");
        FilterRun run = run_filter(backend, default_input_filter_template(), catalog, "Wizard", "q", params);
        CHECK(run.verdict.decision == AccessLabel::allow);
        CHECK(run.verdict.stage == StageId::input_filter);
        CHECK(run.verdict.reason == VerdictReason::filter_decision);
        CHECK(run.outcome.raw_completion == "Answer: Yes.");
    }
    SECTION("block path") {
        ScriptedBackend backend{std::string("Answer: No.")};
        FilterRun run = run_filter(backend, default_output_filter_template(), catalog, "Warlock", "text", params);
        CHECK(run.verdict.decision == AccessLabel::block);
        CHECK(run.verdict.stage == StageId::output_filter);
        CHECK(run.verdict.reason == VerdictReason::filter_decision);
    }
    SECTION("transport failure fails closed") {
        HttpChatBackend backend("http://127.0.0.1:9", "m", "/api/chat", 300);
        FilterRun run = run_filter(backend, default_input_filter_template(), catalog, "Wizard", "q", params);
        CHECK(run.verdict.decision == AccessLabel::block);
        CHECK(run.verdict.reason == VerdictReason::fail_closed);
        CHECK_FALSE(run.outcome.parsed);
    }
    SECTION("script miss fails closed") {
        ScriptedBackend backend;  // empty, no default
        FilterRun run = run_filter(backend, default_input_filter_template(), catalog, "Wizard", "q", params);
        CHECK(run.verdict.decision == AccessLabel::block);
        CHECK(run.verdict.reason == VerdictReason::fail_closed);
    }
    SECTION("exact answers round-trip for every role") {
        auto world = testsupport::TestWorld::load();
        for (const auto& role : world.catalog.roles) {
            for (const std::string answer : {"Answer: Yes.", "Answer: No."}) {
                ScriptedBackend backend{answer};
                FilterRun run =
                    run_filter(backend, default_input_filter_template(), world.catalog, role.name, "any query", params);
                CHECK(run.outcome.parsed);
                CHECK(run.verdict.decision ==
                      (answer == "Answer: Yes." ? AccessLabel::allow : AccessLabel::block));
            }
        }
    }
}
