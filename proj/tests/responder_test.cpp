#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rolerail/responder.hpp"
#include "support/test_world.hpp"

using namespace rolerail;

TEST_CASE("responder prompt construction", "[responder]") {
    Document fireball{"sp1", "Fireball", "A bright streak blooms into flame.", {"Wizard"}, std::nullopt};
    Document shield{"sp2", "Shield", "An unseen barrier of force.", {"Wizard"}, std::nullopt};

    SECTION("single document appears verbatim under its title") {
        auto messages = render_responder_prompt("Tell me about Fireball", {fireball});
        REQUIRE(messages.size() == 2);
        CHECK(messages[0].role == ChatRole::system);
        CHECK(messages[1].role == ChatRole::user);
        CHECK(messages[1].content.find("Fireball") != std::string::npos);
        CHECK(messages[1].content.find("A bright streak blooms into flame.") != std::string::npos);
        CHECK(messages[1].content.find("Question: Tell me about Fireball") != std::string::npos);
        CHECK(messages[1].content.find(kNoDocumentsMarker) == std::string::npos);
    }
    SECTION("no documents produces the explicit marker") {
        auto messages = render_responder_prompt("anything", {});
        CHECK(messages[1].content.find(kNoDocumentsMarker) != std::string::npos);
    }
    SECTION("documents keep retrieval rank order") {
        auto messages = render_responder_prompt("q", {shield, fireball});
        auto pos_shield = messages[1].content.find("An unseen barrier");
        auto pos_fire = messages[1].content.find("A bright streak");
        REQUIRE(pos_shield != std::string::npos);
        REQUIRE(pos_fire != std::string::npos);
        CHECK(pos_shield < pos_fire);
    }
}

TEST_CASE("reference alignment scoring", "[responder]") {
    SECTION("response tokens contained in evidence score 1") {
        CHECK(reference_align("flame and ash", "the flame and the ash and more") == Catch::Approx(1.0));
    }
    SECTION("disjoint token sets score 0") {
        CHECK(reference_align("one two three", "four five six") == Catch::Approx(0.0));
    }
    SECTION("half overlap: {a,b,c,d} vs {a,b,x}") {
        CHECK(reference_align("a b c d", "a b x") == Catch::Approx(0.5));
    }
    SECTION("duplicates in the response count once") {
        CHECK(reference_align("a a b b", "a") == Catch::Approx(0.5));
    }
    SECTION("token-free response is an error") {
        for (const std::string bad : {"", "!!!", "  "}) {
            try {
                reference_align(bad, "evidence");
                FAIL("expected empty_response");
            } catch (const Error& e) {
                CHECK(e.code() == Errc::empty_response);
            }
        }
    }
    SECTION("identity and bounds over random strings") {
        std::mt19937 rng(5);
        static const char* words[] = {"ash", "oath", "rune", "gale", "veil", "fang"};
        std::uniform_int_distribution<std::size_t> wd(0, std::size(words) - 1);
        for (int i = 0; i < 100; ++i) {
            std::string a, b;
            for (int j = 0; j < 1 + static_cast<int>(rng() % 6); ++j) a += std::string(words[wd(rng)]) + " ";
            for (int j = 0; j < static_cast<int>(rng() % 6); ++j) b += std::string(words[wd(rng)]) + " ";
            CHECK(reference_align(a, a) == Catch::Approx(1.0));
            double s = reference_align(a, b);
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
        }
    }
}

TEST_CASE("fact check keeps supported responses and substitutes fallback", "[responder]") {
    ReferenceAligner aligner;
    Evidence evidence{{"d1"}, "flame ash ember"};
    const std::string fallback = kDefaultFallbackText;

    SECTION("fully supported response is kept") {
        GroundedResponse g = fact_check(aligner, "flame ash", evidence, 0.6, fallback);
        CHECK(g.text == "flame ash");
        CHECK_FALSE(g.fallback_applied);
        CHECK(g.alignment_score == Catch::Approx(1.0));
        CHECK(g.evidence_ids == std::vector<std::string>{"d1"});
    }
    SECTION("unsupported response is replaced") {
        GroundedResponse g = fact_check(aligner, "thorn gale veil", evidence, 0.6, fallback);
        CHECK(g.text == fallback);
        CHECK(g.fallback_applied);
        CHECK(g.alignment_score == Catch::Approx(0.0));
    }
    SECTION("score exactly at the threshold passes") {
        // two unique tokens, one covered: score 0.5
        GroundedResponse g = fact_check(aligner, "flame thorn", evidence, 0.5, fallback);
        CHECK(g.alignment_score == Catch::Approx(0.5));
        CHECK_FALSE(g.fallback_applied);
        CHECK(g.text == "flame thorn");
    }
    SECTION("empty evidence forces the fallback for any response") {
        GroundedResponse g = fact_check(aligner, "anything at all", Evidence{}, 0.6, fallback);
        CHECK(g.fallback_applied);
        CHECK(g.text == fallback);
    }
    SECTION("empty response propagates") {
        CHECK_THROWS_AS(fact_check(aligner, "", evidence, 0.6, fallback), Error);
    }
    SECTION("threshold out of range is rejected") {
        CHECK_THROWS_AS(fact_check(aligner, "x", evidence, 1.5, fallback), Error);
    }
    SECTION("kept text is always supported at the threshold") {
        std::mt19937 rng(17);
        static const char* words[] = {"ash", "oath", "rune", "gale", "flame", "ember"};
        std::uniform_int_distribution<std::size_t> wd(0, std::size(words) - 1);
        for (int i = 0; i < 200; ++i) {
            std::string response;
            for (int j = 0; j < 1 + static_cast<int>(rng() % 5); ++j) response += std::string(words[wd(rng)]) + " ";
            double threshold = (rng() % 11) / 10.0;
            GroundedResponse g = fact_check(aligner, response, evidence, threshold, fallback);
            if (!g.fallback_applied) {
                CHECK(g.alignment_score >= threshold);
                CHECK(g.text == response);
            } else {
                CHECK(g.alignment_score < threshold);
                CHECK(g.text == fallback);
            }
        }
    }
}
