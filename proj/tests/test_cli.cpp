#include <catch2/catch_amalgamated.hpp>
#include <sys/stat.h>

#include <sstream>

#include "helpers.hpp"
#include "lemmahead/cli.hpp"

using namespace lemmahead;
namespace cli = lemmahead::cli;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

std::string section(const std::string& title, int filler_words) {
    std::string s = "\\section{" + title + "}\n";
    for (int i = 0; i < filler_words; ++i)
        s += "statement" + std::to_string(i) + " about numbers and inequalities ";
    s += "\n\n";
    return s;
}

std::string write_basic_mock(const testutil::TempDir& dir, const std::string& name,
                             int chat_pairs, int verified_every = 2) {
    nlohmann::ordered_json chat = nlohmann::json::array();
    nlohmann::ordered_json verifier = nlohmann::json::array();
    for (int i = 0; i < chat_pairs; ++i) {
        chat.push_back("informal proof " + std::to_string(i));
        chat.push_back("lean proof " + std::to_string(i));
        verifier.push_back(i % verified_every == 0 ? "verified" : "failed");
    }
    nlohmann::ordered_json j{{"chat", chat},
                             {"embed", {{"mode", "hash"}, {"dim", 16}}},
                             {"verifier", verifier}};
    std::string path = dir.file(name);
    write_file(path, j.dump(2));
    return path;
}

std::string write_dataset(const testutil::TempDir& dir, int n_validation, int n_test) {
    std::string text;
    auto line = [](const std::string& name, const std::string& split) {
        nlohmann::ordered_json j{{"name", name},
                                 {"split", split},
                                 {"informal_statement", "Show that $1+1=2$ for " + name + "."},
                                 {"formal_statement", "theorem " + name + " : true :="}};
        return j.dump() + "\n";
    };
    for (int i = 0; i < n_validation; ++i) text += line("val_" + std::to_string(i), "validation");
    for (int i = 0; i < n_test; ++i) text += line("test_" + std::to_string(i), "test");
    std::string path = dir.file("dataset.jsonl");
    write_file(path, text);
    return path;
}

std::string embed_only_mock(const testutil::TempDir& dir) {
    std::string path = dir.file("embed_mock.json");
    write_file(path, R"({"embed": {"mode": "hash", "dim": 16}})");
    return path;
}

}  // namespace

TEST_CASE("ingest builds a store from a .tex fixture") {
    testutil::TempDir dir;
    std::string tex = dir.file("book.tex");
    write_file(tex, section("Algebra", 40) + section("Geometry", 40) + section("Numbers", 40));
    std::string mock = embed_only_mock(dir);
    std::string store = dir.file("book.lhkb");

    auto res = run_cli({"--mock-script", mock, "--store", store, "ingest", tex});
    CAPTURE(res.err);
    CHECK(res.code == cli::kExitOk);
    CHECK(res.out.find("3 chunks") != std::string::npos);
    auto kb = KnowledgeBase::load(store);
    CHECK(kb.size() == 3);
    CHECK(kb.dimension() == 16);
}

TEST_CASE("ingest with a missing input names the path and exits 2") {
    testutil::TempDir dir;
    auto res = run_cli({"--mock-script", embed_only_mock(dir), "--store", dir.file("s.lhkb"),
                        "ingest", dir.file("missing.tex")});
    CHECK(res.code == cli::kExitUsage);
    CHECK(res.err.find("missing.tex") != std::string::npos);
}

TEST_CASE("ingest refuses to overwrite an existing store without --force") {
    testutil::TempDir dir;
    std::string tex = dir.file("b.tex");
    write_file(tex, section("One", 40));
    std::string mock = embed_only_mock(dir);
    std::string store = dir.file("b.lhkb");

    CHECK(run_cli({"--mock-script", mock, "--store", store, "ingest", tex}).code == 0);
    auto refused = run_cli({"--mock-script", mock, "--store", store, "ingest", tex});
    CHECK(refused.code == cli::kExitUsage);
    CHECK(refused.err.find("--force") != std::string::npos);
    auto forced = run_cli({"--mock-script", mock, "--store", store, "ingest", tex, "--force"});
    CHECK(forced.code == cli::kExitOk);
}

TEST_CASE("query prints all records when k exceeds the store size") {
    testutil::TempDir dir;
    std::string tex = dir.file("b.tex");
    write_file(tex, section("One", 40) + section("Two", 40));
    std::string mock = embed_only_mock(dir);
    std::string store = dir.file("b.lhkb");
    REQUIRE(run_cli({"--mock-script", mock, "--store", store, "ingest", tex}).code == 0);

    auto res = run_cli({"--mock-script", mock, "--store", store, "query", "inequalities",
                        "-k", "50"});
    CHECK(res.code == cli::kExitOk);
    CHECK(res.out.find("1. ") != std::string::npos);
    CHECK(res.out.find("2. ") != std::string::npos);
    CHECK(res.out.find("score=") != std::string::npos);
    // scores printed to 4 decimal places
    size_t pos = res.out.find("score=");
    std::string tail = res.out.substr(pos + 6);
    size_t dot = tail.find('.');
    REQUIRE(dot != std::string::npos);
    CHECK(std::isdigit(static_cast<unsigned char>(tail[dot + 4])));
    CHECK(!std::isdigit(static_cast<unsigned char>(tail[dot + 5])));

    // deterministic across repeated invocations
    auto again = run_cli({"--mock-script", mock, "--store", store, "query", "inequalities",
                          "-k", "50"});
    CHECK(again.out == res.out);
}

TEST_CASE("query ranking matches the oracle on the same store file") {
    testutil::TempDir dir;
    std::string tex = dir.file("b.tex");
    write_file(tex, section("One", 40) + section("Two", 40) + section("Three", 40));
    std::string mock = embed_only_mock(dir);
    std::string store = dir.file("b.lhkb");
    REQUIRE(run_cli({"--mock-script", mock, "--store", store, "ingest", tex}).code == 0);

    auto res = run_cli({"--mock-script", mock, "--store", store, "query", "triangle", "-k", "3"});
    REQUIRE(res.code == cli::kExitOk);

    auto kb = KnowledgeBase::load(store);
    HashEmbedClient embed(16);
    Embedder embedder(embed);
    auto oracle = testutil::oracle_top_k(kb, embedder.embed_text("triangle"), 3);
    // stdout lists ids in oracle order
    size_t at = 0;
    for (const auto& hit : oracle) {
        size_t found = res.out.find(hit.chunk_id, at);
        REQUIRE(found != std::string::npos);
        at = found;
    }
}

TEST_CASE("query on an empty store exits 3") {
    testutil::TempDir dir;
    KnowledgeBase().save(dir.file("empty.lhkb"));
    auto res = run_cli({"--mock-script", embed_only_mock(dir), "--store",
                        dir.file("empty.lhkb"), "query", "anything"});
    CHECK(res.code == cli::kExitEmptyStore);
    CHECK(res.err.find("empty") != std::string::npos);
}

TEST_CASE("prove runs the appendix ipa replay end to end") {
    testutil::TempDir dir;
    // store for retrieval
    {
        KnowledgeBase kb;
        HashEmbedClient embed(16);
        Embedder embedder(embed);
        kb.insert({testutil::make_chunk("ref1", "substitution of values into expressions"),
                   embedder.embed_text("substitution of values into expressions")});
        kb.insert({testutil::make_chunk("ref2", "order of operations in arithmetic"),
                   embedder.embed_text("order of operations in arithmetic")});
        kb.save(dir.file("kb.lhkb"));
    }
    // mock script: appendix chat exchanges + failed x4 then verified
    nlohmann::ordered_json chat = nlohmann::json::array();
    for (const auto& r : testutil::appendix_chat_script()) chat.push_back(r);
    nlohmann::ordered_json j{
        {"chat", chat},
        {"embed", {{"mode", "hash"}, {"dim", 16}}},
        {"verifier", {"failed", "failed", "failed", "failed", "verified"}}};
    write_file(dir.file("appendix.json"), j.dump(2));
    // dataset holding the problem
    std::string dataset = dir.file("dataset.jsonl");
    nlohmann::ordered_json prob = testutil::appendix_problem().to_json();
    write_file(dataset, prob.dump() + "\n");

    auto res = run_cli({"--mock-script", dir.file("appendix.json"), "--store",
                        dir.file("kb.lhkb"), "--runs-dir", dir.file("runs"), "prove",
                        "--problem", "mathd_algebra_419", "--dataset", dataset, "--variant",
                        "ipa", "--sigma", "5", "--run-id", "testrun"});
    CAPTURE(res.err);
    CHECK(res.code == cli::kExitOk);  // verified
    CHECK(res.out.find("verdict: verified") != std::string::npos);

    auto trace = nlohmann::json::parse(
        read_file(dir.file("runs/testrun/mathd_algebra_419.json")));
    CHECK(trace["iterations"].size() == 5);
    CHECK(trace["final_verdict"]["status"] == "verified");
    std::string lean = trace["final_lean_proof"].get<std::string>();
    CHECK(lean.find("data.real.basic") != std::string::npos);
    CHECK(lean.find("mathd_algebra_419") != std::string::npos);
    // transcript written alongside
    CHECK(std::filesystem::exists(dir.file("runs/testrun/transcript.jsonl")));
}

TEST_CASE("prove --no-rag skips retrieval and needs no store") {
    testutil::TempDir dir;
    nlohmann::ordered_json j{{"chat", {"informal", "lean text"}},
                             {"verifier", {"failed"}}};
    write_file(dir.file("m.json"), j.dump());
    auto res = run_cli({"--mock-script", dir.file("m.json"), "--runs-dir", dir.file("runs"),
                        "prove", "--statement", "Show that $1=1$.", "--variant", "basic",
                        "--no-rag", "--run-id", "ctrl"});
    CHECK(res.code == cli::kExitProofFailed);  // verdict failed -> exit 1
    auto trace = nlohmann::json::parse(read_file(dir.file("runs/ctrl/adhoc.json")));
    CHECK(trace["iterations"][0]["degraded_retrieval"] == true);
    CHECK(trace["iterations"][0]["retrieved"].empty());
}

TEST_CASE("prove with an unknown variant is a usage error") {
    testutil::TempDir dir;
    auto res = run_cli({"prove", "--statement", "x", "--variant", "fancy"});
    CHECK(res.code == cli::kExitUsage);
    CHECK(res.err.find("usage error") != std::string::npos);
}

TEST_CASE("eval runs a fixture dataset and writes report files") {
    testutil::TempDir dir;
    std::string dataset = write_dataset(dir, 10, 0);
    // 10 problems x 2 calls, verified on every 2nd problem -> 5/10
    std::string mock = write_basic_mock(dir, "m.json", 10, 2);

    auto res = run_cli({"--mock-script", mock, "--runs-dir", dir.file("runs"), "eval",
                        "--dataset", dataset, "--split", "validation", "--variant", "basic",
                        "--run-id", "evalrun"});
    CAPTURE(res.err);
    CHECK(res.code == cli::kExitOk);
    CHECK(res.out.find("50.0%") != std::string::npos);
    CHECK(std::filesystem::exists(dir.file("runs/evalrun/report.json")));
    CHECK(std::filesystem::exists(dir.file("runs/evalrun/report.md")));

    auto report = nlohmann::json::parse(read_file(dir.file("runs/evalrun/report.json")));
    CHECK(report["total"] == 10);
    CHECK(report["verified_count"] == 5);
    CHECK(report["pass_at_1"] == 0.5);
    CHECK(report["split"] == "validation");
}

TEST_CASE("eval --split test only attempts test problems") {
    testutil::TempDir dir;
    std::string dataset = write_dataset(dir, 3, 2);
    std::string mock = write_basic_mock(dir, "m.json", 2, 1);
    auto res = run_cli({"--mock-script", mock, "--runs-dir", dir.file("runs"), "eval",
                        "--dataset", dataset, "--split", "test", "--variant", "basic",
                        "--run-id", "testonly"});
    CHECK(res.code == cli::kExitOk);
    size_t attempts = 0;
    for (const auto& e :
         std::filesystem::directory_iterator(dir.file("runs/testonly")))
        if (e.path().extension() == ".json" && e.path().filename() != "report.json") {
            ++attempts;
            CHECK(e.path().filename().string().find("test_") == 0);
        }
    CHECK(attempts == 2);
}

TEST_CASE("eval --resume skips persisted attempts") {
    testutil::TempDir dir;
    std::string dataset = write_dataset(dir, 4, 0);
    std::string mock = write_basic_mock(dir, "m.json", 4, 1);
    REQUIRE(run_cli({"--mock-script", mock, "--runs-dir", dir.file("runs"), "eval",
                     "--dataset", dataset, "--variant", "basic", "--run-id", "resumable"})
                .code == 0);
    // resume re-uses persisted attempts; the mock needs no fresh entries
    std::string empty_mock = dir.file("empty.json");
    write_file(empty_mock, R"({"chat": [], "verifier": []})");
    auto res = run_cli({"--mock-script", empty_mock, "--runs-dir", dir.file("runs"), "eval",
                        "--dataset", dataset, "--variant", "basic", "--run-id", "resumable",
                        "--resume"});
    CAPTURE(res.err);
    CHECK(res.code == cli::kExitOk);
    CHECK(res.out.find("[skip] val_0") != std::string::npos);
    CHECK(res.out.find("[skip] val_3") != std::string::npos);
    auto report = nlohmann::json::parse(read_file(dir.file("runs/resumable/report.json")));
    CHECK(report["total"] == 4);
}

TEST_CASE("report re-renders a finished run") {
    testutil::TempDir dir;
    std::string dataset = write_dataset(dir, 2, 0);
    std::string mock = write_basic_mock(dir, "m.json", 2, 1);
    REQUIRE(run_cli({"--mock-script", mock, "--runs-dir", dir.file("runs"), "eval",
                     "--dataset", dataset, "--variant", "basic", "--run-id", "rerender"})
                .code == 0);
    auto res = run_cli({"report", "--run", dir.file("runs/rerender")});
    CHECK(res.code == cli::kExitOk);
    CHECK(res.out.find("100.0%") != std::string::npos);
    CHECK(res.out.find("(cited)") != std::string::npos);
}

TEST_CASE("ingest transcribes a directory of page images") {
    testutil::TempDir dir;
    std::filesystem::create_directories(dir.file("pages"));
    write_file(dir.file("pages/notes_p1.png"), "PNG1");
    write_file(dir.file("pages/notes_p2.png"), "PNG2");

    nlohmann::ordered_json j{
        {"chat",
         {"\\section{Alpha}\nFirst page content about sums of even integers and parity.",
          "Second page content continues the discussion with worked examples at length."}},
        {"embed", {{"mode", "hash"}, {"dim", 16}}}};
    write_file(dir.file("m.json"), j.dump());

    auto res = run_cli({"--mock-script", dir.file("m.json"), "--store", dir.file("s.lhkb"),
                        "ingest", dir.file("pages")});
    CAPTURE(res.err);
    CHECK(res.code == cli::kExitOk);
    auto kb = KnowledgeBase::load(dir.file("s.lhkb"));
    CHECK(kb.size() >= 1);
    // both pages landed in the store, in page order
    bool found = false;
    for (const auto& rec : kb.records()) {
        size_t p1 = rec.chunk.latex.find("First page");
        size_t p2 = rec.chunk.latex.find("Second page");
        if (p1 != std::string::npos && p2 != std::string::npos && p1 < p2) found = true;
    }
    CHECK(found);
}

TEST_CASE("ingest reports pages that transcribe to nothing") {
    testutil::TempDir dir;
    std::filesystem::create_directories(dir.file("pages"));
    write_file(dir.file("pages/doc_p1.png"), "PNG1");
    write_file(dir.file("pages/doc_p2.png"), "PNG2");
    nlohmann::ordered_json j{
        {"chat", {"Plenty of real content transcribed from the first page of the scan.", ""}},
        {"embed", {{"mode", "hash"}, {"dim", 16}}}};
    write_file(dir.file("m.json"), j.dump());
    auto res = run_cli({"--mock-script", dir.file("m.json"), "--store", dir.file("s.lhkb"),
                        "ingest", dir.file("pages")});
    CHECK(res.code == cli::kExitOk);
    CHECK(res.out.find("flagged pages in doc: 2") != std::string::npos);
}

TEST_CASE("ingest rasterizes PDFs through the configured external command") {
    testutil::TempDir dir;
    // fake rasterizer: writes two page images into the output directory
    std::string script = dir.file("rasterize.sh");
    write_file(script,
               "#!/bin/sh\n"
               "out=\"$2\"\n"
               "printf 'PNGA' > \"$out/book_p1.png\"\n"
               "printf 'PNGB' > \"$out/book_p2.png\"\n");
    ::chmod(script.c_str(), 0755);
    write_file(dir.file("c.toml"),
               "rasterizer_cmd = \"sh " + script + " {input} {outdir}\"\n");
    write_file(dir.file("book.pdf"), "%PDF-fake");

    nlohmann::ordered_json j{
        {"chat",
         {"\\section{One}\nTranscribed first page with enough words to stand alone here.",
          "Transcribed second page, also with plenty of content to form a chunk."}},
        {"embed", {{"mode", "hash"}, {"dim", 16}}}};
    write_file(dir.file("m.json"), j.dump());

    auto res = run_cli({"--config", dir.file("c.toml"), "--mock-script", dir.file("m.json"),
                        "--store", dir.file("s.lhkb"), "ingest", dir.file("book.pdf")});
    CAPTURE(res.err);
    CHECK(res.code == cli::kExitOk);
    CHECK(KnowledgeBase::load(dir.file("s.lhkb")).size() >= 1);
}

TEST_CASE("missing subcommand or bad flags are usage errors") {
    CHECK(run_cli({}).code == cli::kExitUsage);
    CHECK(run_cli({"--bogus-flag"}).code == cli::kExitUsage);
    CHECK(run_cli({"eval"}).code == cli::kExitUsage);  // --dataset required
}

TEST_CASE("help exits 0") {
    auto res = run_cli({"--help"});
    CHECK(res.code == cli::kExitOk);
    CHECK(res.out.find("ingest") != std::string::npos);
}
