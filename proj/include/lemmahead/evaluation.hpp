#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "lemmahead/errors.hpp"
#include "lemmahead/pipeline.hpp"
#include "lemmahead/problem.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

// Fraction of verdicts with status=verified; everything else (failed,
// incomplete, timeout, environment_error) counts against.
inline double pass_at_1(const std::vector<Verdict>& verdicts) {
    if (verdicts.empty()) throw ValidationError("pass_at_1 of an empty verdict list");
    size_t verified = 0;
    for (const auto& v : verdicts)
        if (v.status == VerdictStatus::verified) ++verified;
    return static_cast<double>(verified) / static_cast<double>(verdicts.size());
}

inline std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
    return buf;
}

struct PerProblemResult {
    std::string name;
    VerdictStatus status = VerdictStatus::failed;
    int llm_calls = 0;
    long elapsed_ms = 0;
};

struct EvalReport {
    std::string run_id;
    Variant variant = Variant::basic;
    std::string split;  // "validation", "test" or "all"
    size_t total = 0;
    size_t verified_count = 0;
    double pass_at_1_rate = 0.0;
    std::map<std::string, size_t> status_counts;
    std::vector<PerProblemResult> per_problem;
    std::string toolchain_version;
    std::string chat_model;
    std::string embed_model;
    bool internal_verifier_feedback = false;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json per = nlohmann::ordered_json::array();
        for (const auto& p : per_problem)
            per.push_back({{"name", p.name},
                           {"status", to_string(p.status)},
                           {"llm_calls", p.llm_calls},
                           {"elapsed_ms", p.elapsed_ms}});
        nlohmann::ordered_json counts;
        for (const auto& [k, v] : status_counts) counts[k] = v;
        return {{"run_id", run_id},
                {"variant", to_string(variant)},
                {"split", split},
                {"total", total},
                {"verified_count", verified_count},
                {"pass_at_1", pass_at_1_rate},
                {"status_counts", std::move(counts)},
                {"per_problem", std::move(per)},
                {"versions",
                 {{"toolchain", toolchain_version},
                  {"chat_model", chat_model},
                  {"embed_model", embed_model}}},
                {"internal_verifier_feedback", internal_verifier_feedback}};
    }
};

struct EvalOptions {
    std::string out_dir = "runs/run";
    bool resume = false;
    int parallelism = 1;
    std::ostream* progress = nullptr;
};

namespace detail {

inline PerProblemResult summarize_attempt_file(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    PerProblemResult r;
    r.name = j.at("problem").get<std::string>();
    r.status = verdict_status_from_string(j.at("final_verdict").at("status").get<std::string>());
    r.llm_calls = j.value("llm_call_count", 0);
    r.elapsed_ms = j.value("elapsed_ms", 0L);
    return r;
}

}  // namespace detail

// Runs every problem exactly once (Pass@1 discipline), persisting each
// attempt as <out_dir>/<name>.json. With resume on, problems whose attempt
// file already exists are skipped and their persisted verdicts aggregated.
// Per-problem faults become environment_error verdicts rather than aborting
// the batch.
inline EvalReport run_evaluation(const std::vector<Problem>& problems,
                                 const PipelineConfig& config, const PipelineEnv& env,
                                 const EvalOptions& opts) {
    namespace fs = std::filesystem;
    config.check();
    if (env.session == nullptr || env.verifier == nullptr)
        throw ValidationError("evaluation environment incomplete");
    fs::create_directories(opts.out_dir);

    std::mutex io_mu;
    auto note = [&](const std::string& line) {
        if (!opts.progress) return;
        std::lock_guard lock(io_mu);
        (*opts.progress) << line << '\n';
    };

    auto attempt_path = [&](const Problem& p) {
        return (fs::path(opts.out_dir) / (p.name + ".json")).string();
    };

    std::atomic<size_t> cursor{0};
    auto worker = [&] {
        while (true) {
            size_t i = cursor.fetch_add(1);
            if (i >= problems.size()) return;
            const Problem& p = problems[i];
            std::string path = attempt_path(p);
            if (opts.resume && fs::exists(path)) {
                note("[skip] " + p.name + " (attempt already persisted)");
                continue;
            }
            auto start = std::chrono::steady_clock::now();
            nlohmann::ordered_json attempt_json;
            try {
                ProofAttempt attempt = run_pipeline(p, config, env);
                attempt_json = attempt.to_json();
            } catch (const std::exception& e) {
                ProofAttempt failed;
                failed.problem_name = p.name;
                failed.variant = config.variant;
                IterationTrace trace;
                trace.failed_stage = "pipeline";
                trace.verdict = Verdict{VerdictStatus::environment_error,
                                        {{0, 0, e.what(), "error"}},
                                        0};
                failed.final_verdict = *trace.verdict;
                failed.iterations.push_back(std::move(trace));
                attempt_json = failed.to_json();
            }
            long elapsed = static_cast<long>(
                std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - start)
                    .count());
            attempt_json["elapsed_ms"] = elapsed;
            write_file(path, attempt_json.dump(2) + "\n");
            note("[done] " + p.name + ": " +
                 attempt_json.at("final_verdict").at("status").get<std::string>());
        }
    };

    int workers = std::max(1, opts.parallelism);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    EvalReport report;
    report.variant = config.variant;
    report.internal_verifier_feedback =
        config.variant == Variant::ipa && config.include_verifier_feedback;
    report.total = problems.size();
    for (const auto& p : problems) {
        PerProblemResult r = detail::summarize_attempt_file(attempt_path(p));
        ++report.status_counts[to_string(r.status)];
        if (r.status == VerdictStatus::verified) ++report.verified_count;
        report.per_problem.push_back(std::move(r));
    }
    report.pass_at_1_rate =
        report.total == 0
            ? 0.0
            : static_cast<double>(report.verified_count) / static_cast<double>(report.total);
    return report;
}

// Published Pass@1 rates rendered alongside every report, always labeled as
// citations: first table validation split, second table test split.
struct BaselineRow {
    const char* system;
    double percent;
};
inline constexpr BaselineRow kValidationBaselines[] = {
    {"GPT-4", 9.4},
    {"RAG-assisted GPT-4", 2.3},
    {"RAG-assisted GPT-4 with EQG", 25.2},
    {"RAG-assisted GPT-4 with IPA", 40.0},
    {"Human-guided GPT-4", 11.5},
    {"GPT-f", 23.9},
};
inline constexpr BaselineRow kTestBaselines[] = {
    {"GPT-4", 9.0},
    {"RAG-assisted GPT-4", 2.5},
    {"RAG-assisted GPT-4 with EQG", 27.6},
    {"RAG-assisted GPT-4 with IPA", 32.4},
    {"Human-guided GPT-4", 8.6},
    {"GPT-f", 24.6},
};

inline std::string render_report_markdown(const EvalReport& report) {
    std::string md;
    char buf[64];
    md += "# LemmaHead evaluation report\n\n";
    md += "- run: " + report.run_id + "\n";
    md += "- variant: " + to_string(report.variant) + "\n";
    md += "- split: " + report.split + "\n";
    md += "- problems: " + std::to_string(report.total) + "\n";
    md += "- verified: " + std::to_string(report.verified_count) + "\n";
    md += "- Pass@1: " + format_percent(report.pass_at_1_rate) + "\n";
    md += std::string("- internal verifier feedback: ") +
          (report.internal_verifier_feedback ? "on" : "off") + "\n\n";

    md += "## Results\n\n";
    md += "| system | split | Pass@1 |\n|---|---|---|\n";
    md += "| LemmaHead " + to_string(report.variant) + " (this run) | " + report.split +
          " | " + format_percent(report.pass_at_1_rate) + " |\n";
    for (const auto& row : kValidationBaselines) {
        std::snprintf(buf, sizeof buf, "%.1f%%", row.percent);
        md += "| " + std::string(row.system) + " (cited) | validation | " + buf + " |\n";
    }
    for (const auto& row : kTestBaselines) {
        std::snprintf(buf, sizeof buf, "%.1f%%", row.percent);
        md += "| " + std::string(row.system) + " (cited) | test | " + buf + " |\n";
    }
    md += "\nCited rows are published results reported by other systems, not\n";
    md += "outputs of this run.\n\n";

    md += "## Status breakdown\n\n";
    md += "| status | count |\n|---|---|\n";
    for (const auto& [status, count] : report.status_counts)
        md += "| " + status + " | " + std::to_string(count) + " |\n";

    md += "\n## Per problem\n\n";
    md += "| problem | status | llm_calls | elapsed_ms |\n|---|---|---|---|\n";
    for (const auto& p : report.per_problem)
        md += "| " + p.name + " | " + to_string(p.status) + " | " +
              std::to_string(p.llm_calls) + " | " + std::to_string(p.elapsed_ms) + " |\n";

    md += "\n## Versions\n\n";
    md += "- toolchain: " + report.toolchain_version + "\n";
    md += "- chat model: " + report.chat_model + "\n";
    md += "- embed model: " + report.embed_model + "\n";
    return md;
}

inline void write_report_files(const EvalReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    write_file((fs::path(out_dir) / "report.json").string(), report.to_json().dump(2) + "\n");
    write_file((fs::path(out_dir) / "report.md").string(), render_report_markdown(report));
}

}  // namespace lemmahead
