#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "lemmahead/prompt.hpp"

using namespace lemmahead;

namespace {

PromptTemplate simple(const std::string& text, std::set<std::string> names) {
    PromptTemplate t;
    t.template_id = "t";
    t.placeholders = std::move(names);
    t.messages = {{"user", text}};
    return t;
}

}  // namespace

TEST_CASE("render substitutes declared placeholders verbatim") {
    auto t = simple("Prove: {stmt}", {"stmt"});
    auto out = t.render({{"stmt", "$1+1=2$"}});
    REQUIRE(out.size() == 1);
    CHECK(out[0].text == "Prove: $1+1=2$");
}

TEST_CASE("missing binding names the placeholder") {
    auto t = simple("Prove: {stmt}", {"stmt"});
    try {
        t.render({});
        FAIL("expected RenderError");
    } catch (const RenderError& e) {
        CHECK(e.name == "stmt");
    }
}

TEST_CASE("substitution is single-pass: braces in bindings stay literal") {
    auto t = simple("Say {a}", {"a"});
    auto out = t.render({{"a", "{b} {a}"}});
    CHECK(out[0].text == "Say {b} {a}");
}

TEST_CASE("undeclared braces pass through untouched") {
    auto t = simple("\\begin{theorem} uses {stmt} \\end{theorem}", {"stmt"});
    auto out = t.render({{"stmt", "X"}});
    CHECK(out[0].text == "\\begin{theorem} uses X \\end{theorem}");
}

TEST_CASE("LaTeX content is never escaped or truncated") {
    auto t = simple("{ctx}", {"ctx"});
    std::string latex = "$\\frac{a}{b}$ & 100\\% \"quoted\" \n\\begin{align}x\\end{align}";
    CHECK(t.render({{"ctx", latex}})[0].text == latex);
}

TEST_CASE("template file parsing") {
    auto t = parse_template("demo",
                            "placeholders: name, item\n"
                            "[system]\n"
                            "You are a tester.\n"
                            "[user]\n"
                            "Check {item} for {name}.\n");
    REQUIRE(t.messages.size() == 2);
    CHECK(t.messages[0].role == "system");
    CHECK(t.messages[0].text == "You are a tester.");
    CHECK(t.placeholders == std::set<std::string>{"name", "item"});
    auto out = t.render({{"name", "n"}, {"item", "i"}});
    CHECK(out[1].text == "Check i for n.");
}

TEST_CASE("declared-but-unreferenced placeholder is a template error") {
    CHECK_THROWS_AS(parse_template("bad",
                                   "placeholders: ghost\n"
                                   "[user]\n"
                                   "no placeholder here\n"),
                    TemplateError);
}

TEST_CASE("all builtin templates are well-formed") {
    for (const char* id :
         {"transcription", "segmentation", "keywords", "informal_proof", "formalization"}) {
        auto t = builtin_template(id);
        CHECK(t.template_id == id);
        CHECK(!t.messages.empty());
    }
    CHECK_THROWS_AS(builtin_template("nonexistent"), TemplateError);
}

TEST_CASE("prompt assets on disk match the builtins") {
    for (const char* id :
         {"transcription", "segmentation", "keywords", "informal_proof", "formalization"}) {
        std::string path = std::string(LEMMAHEAD_SOURCE_DIR) + "/assets/prompts/" + id + ".prompt";
        auto from_file = load_template(id, path);
        auto builtin = builtin_template(id);
        CHECK(from_file.placeholders == builtin.placeholders);
        REQUIRE(from_file.messages.size() == builtin.messages.size());
        for (size_t i = 0; i < builtin.messages.size(); ++i) {
            CHECK(from_file.messages[i].role == builtin.messages[i].role);
            CHECK(from_file.messages[i].text == builtin.messages[i].text);
        }
    }
}
