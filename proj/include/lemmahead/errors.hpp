#pragma once

#include <stdexcept>
#include <string>

namespace lemmahead {

// Base for everything raised by this library so callers can catch one type
// at the CLI boundary and map to exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input that violates a documented precondition or invariant.
struct ValidationError : Error {
    using Error::Error;
};

// LaTeX environment balance failure; names the first unmatched environment.
struct LatexBalanceError : ValidationError {
    LatexBalanceError(std::string env, std::size_t pos)
        : ValidationError("unbalanced LaTeX environment '" + env +
                          "' opened at offset " + std::to_string(pos)),
          environment(std::move(env)), offset(pos) {}
    std::string environment;
    std::size_t offset;
};

// Knowledge-base store faults.
struct StoreError : Error {
    using Error::Error;
};

struct DimensionMismatchError : StoreError {
    DimensionMismatchError(std::size_t expect, std::size_t got)
        : StoreError("embedding dimension mismatch: store dimension " +
                     std::to_string(expect) + ", got " + std::to_string(got)),
          expected(expect), actual(got) {}
    std::size_t expected;
    std::size_t actual;
};

struct DuplicateChunkError : StoreError {
    explicit DuplicateChunkError(const std::string& id)
        : StoreError("duplicate chunk_id: " + id), chunk_id(id) {}
    std::string chunk_id;
};

struct EmptyStoreError : StoreError {
    EmptyStoreError() : StoreError("knowledge base is empty") {}
};

// Store-file load faults, one subclass per failure mode.
struct LoadError : StoreError {
    using StoreError::StoreError;
};
struct VersionMismatchError : LoadError {
    VersionMismatchError(int expect, int got)
        : LoadError("store format version mismatch: expected " +
                    std::to_string(expect) + ", file has " + std::to_string(got)) {}
};
struct TruncatedStoreError : LoadError {
    TruncatedStoreError(std::size_t expect, std::size_t got)
        : LoadError("store truncated: header promises " + std::to_string(expect) +
                    " records, file has " + std::to_string(got)) {}
};
struct ChecksumError : LoadError {
    ChecksumError(const std::string& expect, const std::string& got)
        : LoadError("store checksum mismatch: header " + expect + ", computed " + got) {}
};
struct RecordParseError : LoadError {
    RecordParseError(std::size_t line_no, const std::string& why)
        : LoadError("store record at line " + std::to_string(line_no) +
                    " unreadable: " + why),
          line(line_no) {}
    std::size_t line;
};

// Chat / embedding gateway faults.
struct GatewayError : Error {
    using Error::Error;
};
// Transient wire failure; the gateway retries these.
struct TransportError : GatewayError {
    using GatewayError::GatewayError;
};
struct EmptyResponseError : GatewayError {
    EmptyResponseError() : GatewayError("model returned an empty response") {}
};
struct ScriptExhaustedError : GatewayError {
    explicit ScriptExhaustedError(std::size_t calls)
        : GatewayError("scripted mock exhausted after " + std::to_string(calls) +
                       " consumed entries") {}
};

// Prompt-template faults.
struct RenderError : Error {
    explicit RenderError(const std::string& placeholder)
        : Error("unbound placeholder '" + placeholder + "'"), name(placeholder) {}
    std::string name;
};
struct TemplateError : Error {
    using Error::Error;
};

// Ingestion faults; carries the page that failed.
struct IngestError : Error {
    IngestError(int page, const std::string& why)
        : Error("page " + std::to_string(page) + ": " + why), page_number(page) {}
    int page_number;
};

// Verifier faults that are not expressible as a Verdict.
struct VerifierError : Error {
    using Error::Error;
};

// Dataset / problem-file faults.
struct DatasetError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ProcessError : Error {
    using Error::Error;
};

}  // namespace lemmahead
