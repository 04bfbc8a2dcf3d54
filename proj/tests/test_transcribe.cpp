#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "lemmahead/transcribe.hpp"

using namespace lemmahead;

namespace {

PageImage page(const std::string& doc, int n) { return {doc, n, "png"}; }

}  // namespace

TEST_CASE("single page transcription returns the scripted text verbatim") {
    ScriptedChatClient client(std::vector<std::string>{"\\(a^2+b^2=c^2\\)"});
    TranscriptLog log;
    LlmSession session(client, log, {3, 0});
    auto doc = transcribe_pages({page("doc", 1)}, session);
    CHECK(doc.latex == "\\(a^2+b^2=c^2\\)");
    CHECK(doc.origin == DocOrigin::transcribed);
    CHECK(doc.document_id == "doc");
}

TEST_CASE("pages concatenate in page order") {
    ScriptedChatClient client(std::vector<std::string>{"A", "B", "C"});
    TranscriptLog log;
    LlmSession session(client, log, {3, 0});
    auto doc = transcribe_pages({page("doc", 1), page("doc", 2), page("doc", 3)}, session);
    CHECK(doc.latex == "A\nB\nC");
}

TEST_CASE("empty transcription flags the page and leaves a marker") {
    ScriptedChatClient client(std::vector<std::string>{"A", ""});
    TranscriptLog log;
    LlmSession session(client, log, {3, 0});
    IngestReport report;
    auto doc = transcribe_pages({page("doc", 1), page("doc", 2)}, session, &report);
    CHECK(doc.latex.find("A") == 0);
    CHECK(doc.latex.find("% [empty page 2]") != std::string::npos);
    REQUIRE(report.flagged_pages.size() == 1);
    CHECK(report.flagged_pages[0] == 2);
    CHECK(report.pages_total == 2);
}

TEST_CASE("persistent transport failure carries the page number") {
    ScriptedChatClient client(std::vector<ScriptEntry>{{"", "never delivered", 99}});
    TranscriptLog log;
    LlmSession session(client, log, {2, 0});
    try {
        transcribe_pages({page("doc", 7)}, session);
        FAIL("expected IngestError");
    } catch (const IngestError& e) {
        CHECK(e.page_number == 7);
    }
}

TEST_CASE("transient failure is retried and succeeds") {
    ScriptedChatClient client(std::vector<ScriptEntry>{{"", "recovered", 1}});
    TranscriptLog log;
    LlmSession session(client, log, {3, 0});
    auto doc = transcribe_pages({page("doc", 1)}, session);
    CHECK(doc.latex == "recovered");
    CHECK(log.count("transcription", "transport_error") == 1);
    CHECK(log.count("transcription", "ok") == 1);
}

TEST_CASE("page preconditions") {
    ScriptedChatClient client(std::vector<std::string>{"x"});
    TranscriptLog log;
    LlmSession session(client, log, {3, 0});
    CHECK_THROWS_AS(transcribe_pages({}, session), ValidationError);
    CHECK_THROWS_AS(transcribe_pages({page("doc", 2), page("doc", 1)}, session),
                    ValidationError);
}

TEST_CASE("page image files are grouped and ordered") {
    testutil::TempDir dir;
    write_file(dir.file("alg_p2.png"), "img2");
    write_file(dir.file("alg_p1.png"), "img1");
    write_file(dir.file("alg_p10.png"), "img10");
    write_file(dir.file("geo_p1.png"), "g1");
    write_file(dir.file("notes.txt"), "skip me");
    write_file(dir.file("bad_page.png"), "no page suffix");

    auto grouped = load_page_images(dir.path.string());
    REQUIRE(grouped.size() == 2);
    REQUIRE(grouped.count("alg") == 1);
    REQUIRE(grouped["alg"].size() == 3);
    CHECK(grouped["alg"][0].page_number == 1);
    CHECK(grouped["alg"][1].page_number == 2);
    CHECK(grouped["alg"][2].page_number == 10);
    CHECK(grouped["geo"].size() == 1);
}
