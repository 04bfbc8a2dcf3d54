#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lemmahead/text.hpp"

using namespace lemmahead;

TEST_CASE("normalize_ws collapses space runs and fixes line endings") {
    CHECK(normalize_ws("a  \t b") == "a b");
    CHECK(normalize_ws("a\r\nb\rc") == "a\nb\nc");
    CHECK(normalize_ws("a\n\nb") == "a\n\nb");  // newlines survive
    CHECK(normalize_ws("") == "");
}

TEST_CASE("collapse_ws flattens all whitespace") {
    CHECK(collapse_ws("  a \n\n b\t c  ") == "a b c");
    CHECK(collapse_ws("\n\t ") == "");
}

TEST_CASE("trim") {
    CHECK(trim("  x  ") == "x");
    CHECK(trim("\n\t") == "");
}

TEST_CASE("split_lines") {
    CHECK(split_lines("a\nb\nc") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_lines("a\r\nb") == std::vector<std::string>{"a", "b"});
    CHECK(split_lines("a\n") == std::vector<std::string>{"a"});
}

TEST_CASE("strip_code_fences removes one surrounding fence pair only") {
    CHECK(strip_code_fences("```lean\nimport tactic\n```") == "import tactic");
    CHECK(strip_code_fences("```\nx\n```") == "x");
    CHECK(strip_code_fences("plain text") == "plain text");
    // inner fences untouched
    CHECK(strip_code_fences("```\na\n```inner```\n```") == "a\n```inner```");
    // unterminated fence left as-is
    CHECK(strip_code_fences("```lean\nx") == "```lean\nx");
}

TEST_CASE("quantize9 is idempotent and survives print/parse") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int i = 0; i < 2000; ++i) {
        double x = quantize9(uni(rng));
        CHECK(quantize9(x) == x);
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.9g", x);
        CHECK(std::strtod(buf, nullptr) == x);
    }
    CHECK(quantize9(0.0) == 0.0);
}

TEST_CASE("fnv1a64_hex is stable") {
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
    CHECK(fnv1a64_hex("a") != fnv1a64_hex("b"));
}

TEST_CASE("base64_encode") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
}
