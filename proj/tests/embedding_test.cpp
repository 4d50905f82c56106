#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rolerail/embedding.hpp"
#include "support/test_world.hpp"

using namespace rolerail;

namespace {

std::string random_words(std::mt19937& rng, std::size_t max_words = 12) {
    static const char* words[] = {"flame", "ward",  "arrow", "stone", "mist", "oath",
                                  "song",  "beast", "rune",  "light", "void", "storm"};
    std::uniform_int_distribution<std::size_t> count_dist(1, max_words);
    std::uniform_int_distribution<std::size_t> word_dist(0, std::size(words) - 1);
    std::string out;
    for (std::size_t i = 0, n = count_dist(rng); i < n; ++i) {
        if (!out.empty()) out += ' ';
        out += words[word_dist(rng)];
    }
    return out;
}

}  // namespace

TEST_CASE("reference embedder basics", "[embedding]") {
    ReferenceEmbedder embedder;

    SECTION("single repeated token fills one bucket with norm 1") {
        // 'a'=97, so "aa" lands in bucket (97+97) % 64 = 2.
        Vec v = embedder.embed("aa aa");
        REQUIRE(v.size() == 64);
        CHECK(v[2] == Catch::Approx(1.0));
        int nonzero = 0;
        for (double x : v) nonzero += (x != 0.0);
        CHECK(nonzero == 1);
    }
    SECTION("deterministic") {
        CHECK(embedder.embed("fireball") == embedder.embed("fireball"));
    }
    SECTION("bag of words ignores order") {
        CHECK(embedder.embed("fire ball") == embedder.embed("ball fire"));
    }
    SECTION("tokenization lowercases and splits on non-alphanumerics") {
        CHECK(embedder.embed("Fire-Ball! 3") == embedder.embed("fire ball 3"));
        CHECK(tokenize("Role: Wizard — arcane") == std::vector<std::string>{"role", "wizard", "arcane"});
    }
    SECTION("token-free input is unembeddable") {
        for (const std::string bad : {"", "   ", "?!...", "—"}) {
            try {
                embedder.embed(bad);
                FAIL("expected unembeddable for '" << bad << "'");
            } catch (const Error& e) {
                CHECK(e.code() == Errc::unembeddable);
            }
        }
    }
    SECTION("output is always unit length") {
        std::mt19937 rng(7);
        for (int i = 0; i < 100; ++i) {
            Vec v = embedder.embed(random_words(rng));
            CHECK(l2_norm(v) == Catch::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("cosine similarity", "[embedding]") {
    SECTION("identity") {
        Vec v{0.3, 0.4, 1.2};
        CHECK(cosine(v, v) == Catch::Approx(1.0));
    }
    SECTION("orthogonal") {
        CHECK(cosine({1.0, 0.0}, {0.0, 1.0}) == Catch::Approx(0.0).margin(1e-15));
    }
    SECTION("hand-computed value: dot 8 over norms 3*3") {
        CHECK(cosine({1.0, 2.0, 2.0}, {2.0, 1.0, 2.0}) == Catch::Approx(8.0 / 9.0).epsilon(1e-15));
    }
    SECTION("dimension mismatch") {
        try {
            cosine({1.0}, {1.0, 2.0});
            FAIL("expected dimension_mismatch");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::dimension_mismatch);
        }
    }
    SECTION("zero vectors rejected") {
        try {
            cosine({0.0, 0.0}, {1.0, 0.0});
            FAIL("expected zero_vector");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::zero_vector);
        }
    }
    SECTION("range stays within [-1, 1]") {
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> dist(-3.0, 3.0);
        for (int rep = 0; rep < 200; ++rep) {
            Vec a(8), b(8);
            for (int i = 0; i < 8; ++i) {
                a[i] = dist(rng);
                b[i] = dist(rng);
            }
            if (l2_norm(a) == 0.0 || l2_norm(b) == 0.0) continue;
            double s = cosine(a, b);
            CHECK(s <= 1.0);
            CHECK(s >= -1.0);
        }
    }
}

TEST_CASE("query augmentation appends role information", "[embedding]") {
    Role wizard{"Wizard", "are the most versatile spellcasters, with a vast array of spells."};

    SECTION("name and description format") {
        std::string out = augment_query("Tell me about Fireball spell", wizard);
        CHECK(out == "Tell me about Fireball spell\nRole: Wizard — are the most versatile spellcasters, with a vast "
                     "array of spells.");
    }
    SECTION("name-only format") {
        CHECK(augment_query("Tell me about Fireball spell", wizard, AugmentStyle::name) ==
              "Tell me about Fireball spell\nRole: Wizard");
    }
    SECTION("original query is always a verbatim prefix") {
        std::mt19937 rng(3);
        for (int i = 0; i < 100; ++i) {
            std::string query = random_words(rng);
            for (AugmentStyle style : {AugmentStyle::name, AugmentStyle::name_and_description}) {
                std::string out = augment_query(query, wizard, style);
                CHECK(out.rfind(query, 0) == 0);
                CHECK(out.size() > query.size());
            }
        }
    }
}
