#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "helpers.hpp"
#include "lemmahead/store.hpp"

using namespace lemmahead;
using testutil::make_chunk;

TEST_CASE("insert then size") {
    KnowledgeBase kb;
    kb.insert({make_chunk("c1"), {1.0, 0.0}});
    CHECK(kb.size() == 1);
    CHECK(kb.dimension() == 2);
}

TEST_CASE("duplicate chunk_id is a conflict and size is unchanged") {
    KnowledgeBase kb;
    kb.insert({make_chunk("c1"), {1.0, 0.0}});
    CHECK_THROWS_AS(kb.insert({make_chunk("c1"), {0.0, 1.0}}), DuplicateChunkError);
    CHECK(kb.size() == 1);
}

TEST_CASE("dimension mismatch on insert") {
    KnowledgeBase kb;
    kb.insert({make_chunk("c1"), {1.0, 0.0}});
    CHECK_THROWS_AS(kb.insert({make_chunk("c2"), {1.0, 0.0, 0.0}}), DimensionMismatchError);
}

TEST_CASE("1000 inserts are all retrievable by id") {
    std::mt19937_64 rng(17);
    auto kb = testutil::random_store(rng, 1000, 8);
    CHECK(kb.size() == 1000);
    std::set<std::string> expected, actual;
    for (size_t i = 0; i < 1000; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "c%05zu", i);
        expected.insert(id);
        REQUIRE(kb.find(id) != nullptr);
        CHECK(kb.find(id)->chunk.chunk_id == id);
    }
    for (const auto& rec : kb.records()) actual.insert(rec.chunk.chunk_id);
    CHECK(expected == actual);
}

TEST_CASE("top_k returns min(k, size)") {
    std::mt19937_64 rng(23);
    KnowledgeBase kb;
    kb.insert({make_chunk("only"), testutil::random_unit_vector(rng, 4)});
    auto hits = kb.top_k(testutil::random_unit_vector(rng, 4), 5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].chunk.chunk_id == "only");
}

TEST_CASE("empty store raises a distinct error") {
    KnowledgeBase kb;
    CHECK_THROWS_AS(kb.top_k({1.0}, 1), EmptyStoreError);
}

TEST_CASE("top_k equals brute-force oracle including tie order") {
    std::mt19937_64 rng(29);
    auto kb = testutil::random_store(rng, 200, 32, /*dup_every=*/7);
    for (int q = 0; q < 10; ++q) {
        auto query = testutil::random_unit_vector(rng, 32);
        auto got = kb.top_k(query, 10);
        auto want = testutil::oracle_top_k(kb, query, 10);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].chunk.chunk_id == want[i].chunk_id);
            CHECK(got[i].score == want[i].score);  // bit-exact
        }
    }
}

TEST_CASE("identical embeddings tie-break by ascending chunk_id") {
    KnowledgeBase kb;
    EmbeddingVector v = normalize_embedding({1.0, 2.0, 3.0});
    kb.insert({make_chunk("zeta"), v});
    kb.insert({make_chunk("alpha"), v});
    auto hits = kb.top_k(v, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].chunk.chunk_id == "alpha");
}

TEST_CASE("monotone k: k results are a prefix of k+1 results") {
    std::mt19937_64 rng(31);
    auto kb = testutil::random_store(rng, 60, 16, /*dup_every=*/5);
    auto query = testutil::random_unit_vector(rng, 16);
    for (size_t k = 1; k < 20; ++k) {
        auto smaller = kb.top_k(query, k);
        auto larger = kb.top_k(query, k + 1);
        REQUIRE(smaller.size() == k);
        for (size_t i = 0; i < k; ++i)
            CHECK(smaller[i].chunk.chunk_id == larger[i].chunk.chunk_id);
    }
}

TEST_CASE("save and load an empty store") {
    testutil::TempDir dir;
    KnowledgeBase kb;
    kb.save(dir.file("empty.lhkb"));
    auto back = KnowledgeBase::load(dir.file("empty.lhkb"));
    CHECK(back.size() == 0);
}

TEST_CASE("round trip preserves rankings bit-exactly") {
    testutil::TempDir dir;
    std::mt19937_64 rng(37);
    auto kb = testutil::random_store(rng, 100, 16, /*dup_every=*/9);
    kb.save(dir.file("store.lhkb"));
    auto back = KnowledgeBase::load(dir.file("store.lhkb"));
    REQUIRE(back.size() == kb.size());
    for (int q = 0; q < 20; ++q) {
        auto query = testutil::random_unit_vector(rng, 16);
        auto before = kb.top_k(query, 10);
        auto after = back.top_k(query, 10);
        REQUIRE(before.size() == after.size());
        for (size_t i = 0; i < before.size(); ++i) {
            CHECK(before[i].chunk.chunk_id == after[i].chunk.chunk_id);
            CHECK(before[i].score == after[i].score);
        }
    }
}

TEST_CASE("store file is JSON lines with a header") {
    testutil::TempDir dir;
    KnowledgeBase kb;
    kb.insert({make_chunk("c1", "some latex"), normalize_embedding({1.0, 1.0})});
    kb.save(dir.file("s.lhkb"));
    auto lines = split_lines(read_file(dir.file("s.lhkb")));
    REQUIRE(lines.size() == 2);
    auto header = nlohmann::json::parse(lines[0]);
    CHECK(header["format"] == "lhkb");
    CHECK(header["version"] == 1);
    CHECK(header["dimension"] == 2);
    CHECK(header["count"] == 1);
    CHECK(header.contains("checksum"));
    auto record = nlohmann::json::parse(lines[1]);
    CHECK(record["chunk_id"] == "c1");
    CHECK(record["embedding"].size() == 2);
}

TEST_CASE("load failures are distinct") {
    testutil::TempDir dir;
    std::mt19937_64 rng(41);
    auto kb = testutil::random_store(rng, 5, 4);
    kb.save(dir.file("good.lhkb"));
    std::string text = read_file(dir.file("good.lhkb"));
    auto lines = split_lines(text);

    SECTION("version mismatch") {
        auto header = nlohmann::json::parse(lines[0]);
        header["version"] = 99;
        std::string out = header.dump();
        for (size_t i = 1; i < lines.size(); ++i) out += "\n" + lines[i];
        write_file(dir.file("v.lhkb"), out + "\n");
        CHECK_THROWS_AS(KnowledgeBase::load(dir.file("v.lhkb")), VersionMismatchError);
    }

    SECTION("truncated file") {
        std::string out = lines[0];
        for (size_t i = 1; i + 1 < lines.size(); ++i) out += "\n" + lines[i];
        write_file(dir.file("t.lhkb"), out + "\n");
        CHECK_THROWS_AS(KnowledgeBase::load(dir.file("t.lhkb")), TruncatedStoreError);
    }

    SECTION("corrupted record names the line") {
        auto broken = lines;
        broken[3] = "{this is not json";
        std::string out;
        for (const auto& l : broken) out += l + "\n";
        write_file(dir.file("c.lhkb"), out);
        try {
            KnowledgeBase::load(dir.file("c.lhkb"));
            FAIL("expected RecordParseError");
        } catch (const RecordParseError& e) {
            CHECK(e.line == 4);  // 1-based, after the header
        }
    }

    SECTION("bit flip in a record fails the checksum") {
        auto flipped = lines;
        size_t pos = flipped[2].find("chunk ");
        REQUIRE(pos != std::string::npos);
        flipped[2][pos] = 'X';
        std::string out;
        for (const auto& l : flipped) out += l + "\n";
        write_file(dir.file("x.lhkb"), out);
        CHECK_THROWS_AS(KnowledgeBase::load(dir.file("x.lhkb")), ChecksumError);
    }

    SECTION("not a store file") {
        write_file(dir.file("nope.lhkb"), "{\"format\":\"other\"}\n");
        CHECK_THROWS_AS(KnowledgeBase::load(dir.file("nope.lhkb")), LoadError);
    }
}
