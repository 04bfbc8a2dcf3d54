#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lemmahead/chat.hpp"
#include "lemmahead/corpus.hpp"
#include "lemmahead/errors.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

struct IngestReport {
    std::string document_id;
    int pages_total = 0;
    std::vector<int> flagged_pages;  // pages that transcribed to nothing
};

// Transcribes page images into one LaTeX document, one client call per page,
// reassembled in page order. An empty transcription flags the page and leaves
// an empty-page marker so downstream offsets stay explainable; a transport
// failure (after the session's retries) surfaces as an IngestError carrying
// the page number.
inline LatexDocument transcribe_pages(const std::vector<PageImage>& pages, LlmSession& session,
                                      IngestReport* report = nullptr) {
    if (pages.empty()) throw ValidationError("no pages to transcribe");
    for (size_t i = 0; i < pages.size(); ++i) {
        pages[i].check();
        if (i > 0 && pages[i].page_number < pages[i - 1].page_number)
            throw ValidationError("pages not sorted by page_number");
    }

    LatexDocument doc;
    doc.document_id = pages.front().document_id;
    doc.origin = DocOrigin::transcribed;
    if (report) {
        report->document_id = doc.document_id;
        report->pages_total = static_cast<int>(pages.size());
    }

    for (size_t i = 0; i < pages.size(); ++i) {
        std::string text;
        try {
            text = session.complete("transcription",
                                    {{"page_number", std::to_string(pages[i].page_number)}},
                                    pages[i].image_png);
        } catch (const EmptyResponseError&) {
            text.clear();
        } catch (const GatewayError& e) {
            throw IngestError(pages[i].page_number, e.what());
        }
        if (trim(text).empty()) {
            text = "% [empty page " + std::to_string(pages[i].page_number) + "]";
            if (report) report->flagged_pages.push_back(pages[i].page_number);
        }
        if (i > 0) doc.latex += '\n';
        doc.latex += text;
    }
    return doc;
}

// Collects `<doc_id>_p<page>.png` files from a directory into page lists,
// grouped by document and sorted by page number.
inline std::map<std::string, std::vector<PageImage>> load_page_images(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir);
    std::map<std::string, std::vector<PageImage>> docs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.size() < 5 || name.substr(name.size() - 4) != ".png") continue;
        std::string stem = name.substr(0, name.size() - 4);
        size_t sep = stem.rfind("_p");
        if (sep == std::string::npos) continue;
        std::string digits = stem.substr(sep + 2);
        if (digits.empty() ||
            !std::all_of(digits.begin(), digits.end(),
                         [](char c) { return c >= '0' && c <= '9'; }))
            continue;
        PageImage img;
        img.document_id = stem.substr(0, sep);
        img.page_number = std::stoi(digits);
        img.image_png = read_file(entry.path().string());
        docs[img.document_id].push_back(std::move(img));
    }
    for (auto& [id, pages] : docs)
        std::sort(pages.begin(), pages.end(),
                  [](const PageImage& a, const PageImage& b) {
                      return a.page_number < b.page_number;
                  });
    return docs;
}

}  // namespace lemmahead
