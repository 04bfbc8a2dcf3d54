#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lemmahead/errors.hpp"
#include "lemmahead/text.hpp"

namespace lemmahead {

enum class Split { validation, test };

inline std::string to_string(Split s) {
    return s == Split::validation ? "validation" : "test";
}

inline Split split_from_string(const std::string& s) {
    if (s == "validation" || s == "valid") return Split::validation;
    if (s == "test") return Split::test;
    throw DatasetError("unknown split value: " + s);
}

struct Problem {
    std::string name;
    Split split = Split::validation;
    std::string informal_statement;  // LaTeX
    std::string formal_statement;    // Lean theorem header

    nlohmann::ordered_json to_json() const {
        return {{"name", name},
                {"split", lemmahead::to_string(split)},
                {"informal_statement", informal_statement},
                {"formal_statement", formal_statement}};
    }
};

// Loads a JSON Lines problem file, one {name, split, informal_statement,
// formal_statement} object per line, preserving file order. `split_filter`
// empty means all splits.
inline std::vector<Problem> load_problems(const std::string& path,
                                          std::optional<Split> split_filter = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open problem file: " + path);
    std::vector<Problem> out;
    std::set<std::string> names;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DatasetError("line " + std::to_string(line_no) + ": unparseable record: " +
                               e.what());
        }
        Problem p;
        for (const char* field : {"name", "split", "informal_statement", "formal_statement"})
            if (!j.contains(field))
                throw DatasetError("line " + std::to_string(line_no) + " (" +
                                   j.value("name", "<unnamed>") + "): missing field '" +
                                   field + "'");
        p.name = j["name"].get<std::string>();
        try {
            p.split = split_from_string(j["split"].get<std::string>());
        } catch (const DatasetError& e) {
            throw DatasetError("record '" + p.name + "': " + e.what());
        }
        p.informal_statement = j["informal_statement"].get<std::string>();
        p.formal_statement = j["formal_statement"].get<std::string>();
        if (p.name.empty())
            throw DatasetError("line " + std::to_string(line_no) + ": empty problem name");
        if (trim(p.informal_statement).empty())
            throw DatasetError("record '" + p.name + "': empty informal_statement");
        if (!names.insert(p.name).second)
            throw DatasetError("duplicate problem name: " + p.name);
        if (!split_filter || p.split == *split_filter) out.push_back(std::move(p));
    }
    return out;
}

}  // namespace lemmahead
