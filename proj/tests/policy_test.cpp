#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rolerail/policy.hpp"
#include "support/test_world.hpp"

using namespace rolerail;

namespace {

std::string random_text(std::mt19937& rng, std::size_t max_len = 24) {
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _-.,'\"{}";
    std::uniform_int_distribution<std::size_t> len_dist(1, max_len);
    std::uniform_int_distribution<std::size_t> char_dist(0, alphabet.size() - 1);
    std::string out;
    for (std::size_t i = 0, n = len_dist(rng); i < n; ++i) out.push_back(alphabet[char_dist(rng)]);
    return out;
}

}  // namespace

TEST_CASE("validate_catalog accepts a well-formed catalog", "[policy]") {
    RoleCatalog catalog{{{"Wizard", "are the most versatile spellcasters, learned through study."}}};
    CHECK_NOTHROW(validate_catalog(catalog));
}

TEST_CASE("validate_catalog rejects bad catalogs", "[policy]") {
    SECTION("empty catalog") {
        RoleCatalog catalog;
        CHECK_THROWS_MATCHES(validate_catalog(catalog), Error,
                             Catch::Matchers::Predicate<Error>(
                                 [](const Error& e) { return e.code() == Errc::empty_catalog; }));
    }
    SECTION("duplicate role names, case-sensitive") {
        RoleCatalog catalog{{{"Wizard", "a"}, {"Wizard", "b"}}};
        try {
            validate_catalog(catalog);
            FAIL("expected duplicate_role");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::duplicate_role);
        }
        // different case is a different role
        RoleCatalog cased{{{"Wizard", "a"}, {"wizard", "b"}}};
        CHECK_NOTHROW(validate_catalog(cased));
    }
    SECTION("empty description") {
        RoleCatalog catalog{{{"Wizard", ""}}};
        try {
            validate_catalog(catalog);
            FAIL("expected empty_description");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::empty_description);
        }
    }
}

TEST_CASE("verdicts with reason fail_closed always block", "[policy]") {
    for (AccessLabel decision : {AccessLabel::allow, AccessLabel::block}) {
        for (StageId stage : {StageId::input_filter, StageId::retrieval, StageId::static_filter, StageId::responder,
                              StageId::fact_checker, StageId::output_filter}) {
            Verdict v = make_verdict(decision, stage, VerdictReason::fail_closed);
            CHECK(v.decision == AccessLabel::block);
            CHECK(fail_closed(stage).decision == AccessLabel::block);
        }
    }
    // non-fail-closed reasons keep the requested decision
    Verdict allow = make_verdict(AccessLabel::allow, StageId::input_filter, VerdictReason::filter_decision);
    CHECK(allow.decision == AccessLabel::allow);
}

TEST_CASE("document validation", "[policy]") {
    RoleCatalog catalog{{{"Wizard", "w"}, {"Cleric", "c"}}};
    Document doc{"d1", "Title", "body", {"Wizard"}, std::nullopt};
    CHECK_NOTHROW(validate_document(doc, catalog));

    SECTION("unknown role tag") {
        doc.role_tags = {"Barbarian"};
        try {
            validate_document(doc, catalog);
            FAIL("expected unknown_role_tag");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::unknown_role_tag);
        }
    }
    SECTION("empty tag set") {
        doc.role_tags = {};
        CHECK_THROWS_AS(validate_document(doc, catalog), Error);
    }
    SECTION("embedding must be unit length") {
        doc.embedding = std::vector<double>{0.5, 0.5};
        CHECK_THROWS_AS(validate_document(doc, catalog), Error);
        doc.embedding = std::vector<double>{1.0, 0.0};
        CHECK_NOTHROW(validate_document(doc, catalog));
    }
}

TEST_CASE("serialize/parse round-trips preserve structure", "[policy]") {
    std::mt19937 rng(20240811);
    for (int rep = 0; rep < 200; ++rep) {
        RoleCatalog catalog;
        std::size_t roles = 1 + rng() % 4;
        for (std::size_t i = 0; i < roles; ++i) {
            catalog.roles.push_back(Role{"role" + std::to_string(i) + random_text(rng, 6), random_text(rng)});
        }
        CHECK(catalog_from_json(to_json(catalog)) == catalog);

        Document doc{random_text(rng, 8), random_text(rng), random_text(rng, 64), {catalog.roles[0].name}, std::nullopt};
        if (rng() % 2 == 0) {
            doc.embedding = std::vector<double>{1.0, 0.0, 0.0};
        }
        CHECK(document_from_json(to_json(doc)) == doc);

        LabeledQuery query{random_text(rng, 8), random_text(rng), catalog.roles[0].name,
                           rng() % 2 == 0 ? AccessLabel::allow : AccessLabel::block};
        CHECK(query_from_json(to_json(query)) == query);
    }
}

TEST_CASE("schema violations are rejected with schema_error", "[policy]") {
    CHECK_THROWS_AS(document_from_json(json::parse(R"({"id":"x","title":"t","roles":["r"]})")), Error);
    CHECK_THROWS_AS(document_from_json(json::parse(R"({"id":1,"title":"t","body":"b","roles":["r"]})")), Error);
    CHECK_THROWS_AS(query_from_json(json::parse(R"({"id":"x","text":"t","user_role":"r","label":"maybe"})")), Error);
    CHECK_THROWS_AS(role_from_json(json::parse(R"({"name":"x"})")), Error);
    CHECK_THROWS_AS(access_label_from_string("deny"), Error);
}

TEST_CASE("fixture catalog loads and validates", "[policy]") {
    RoleCatalog catalog = load_catalog(testsupport::fixture_path("roles.json"));
    CHECK(catalog.roles.size() == 9);
    CHECK(catalog.contains("Wizard"));
    CHECK(catalog.contains("Artificer"));
    const Role* wizard = catalog.find("Wizard");
    REQUIRE(wizard != nullptr);
    CHECK(wizard->description.rfind("are the most versatile spellcasters", 0) == 0);
    CHECK(catalog.find("Barbarian") == nullptr);
}
