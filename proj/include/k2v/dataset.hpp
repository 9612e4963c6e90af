#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "k2v/error.hpp"
#include "k2v/text.hpp"

namespace k2v {

inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kBlankMarker = "{ }";
inline constexpr std::size_t kMaxChecklistItems = 20;

enum class Slot { E1 = 0, E2 = 1, E3 = 2 };

inline std::string_view to_string(Slot s) {
    switch (s) {
    case Slot::E1: return "e1";
    case Slot::E2: return "e2";
    case Slot::E3: return "e3";
    }
    return "e1";
}

inline Slot slot_from_string(std::string_view s) {
    if (s == "e1") return Slot::E1;
    if (s == "e2") return Slot::E2;
    if (s == "e3") return Slot::E3;
    throw Error(ErrorCode::MalformedInput, "masked_slot must be e1, e2 or e3");
}

/// A two-hop path e1 -r1- e2 -r2- e3. Entity fields hold display names;
/// `keys` holds the normalized graph keys.
struct Quintuple {
    std::array<std::string, 3> entities;
    std::array<std::string, 3> keys;
    std::string r1;
    std::string r2;
    std::array<std::string, 3> entity_summaries;
    std::vector<std::string> provenance;

    [[nodiscard]] const std::string& entity(Slot s) const { return entities[static_cast<std::size_t>(s)]; }
    friend bool operator==(const Quintuple&, const Quintuple&) = default;
};

struct Checklist {
    std::string question_id;
    std::vector<std::string> criteria;

    /// Throws EmptyChecklist / MalformedChecklistOutput when invariants fail.
    void validate() const {
        if (criteria.empty()) throw Error(ErrorCode::EmptyChecklist, "checklist for " + question_id + " is empty");
        if (criteria.size() > kMaxChecklistItems)
            throw Error(ErrorCode::MalformedChecklistOutput, "checklist exceeds 20 criteria");
        for (const auto& c : criteria)
            if (trim(c).empty()) throw Error(ErrorCode::MalformedChecklistOutput, "empty criterion");
    }
};

struct QAPair {
    std::string id;
    std::string question;
    std::string answer;
    Slot masked_slot = Slot::E2;
    Quintuple quintuple;
    std::string domain;
    std::optional<Checklist> checklist;
};

inline nlohmann::json to_json(const QAPair& qa) {
    auto checklist = nlohmann::json::array();
    if (qa.checklist)
        for (const auto& c : qa.checklist->criteria) checklist.push_back(c);
    return {{"id", qa.id},
            {"question", qa.question},
            {"answer", qa.answer},
            {"masked_slot", to_string(qa.masked_slot)},
            {"quintuple",
             {{"e1", qa.quintuple.entities[0]},
              {"r1", qa.quintuple.r1},
              {"e2", qa.quintuple.entities[1]},
              {"r2", qa.quintuple.r2},
              {"e3", qa.quintuple.entities[2]}}},
            {"domain", qa.domain},
            {"checklist", std::move(checklist)},
            {"provenance", {{"chunk_ids", qa.quintuple.provenance}}}};
}

inline QAPair qa_from_json(const nlohmann::json& j) {
    QAPair qa;
    try {
        qa.id = j.at("id").get<std::string>();
        qa.question = j.at("question").get<std::string>();
        qa.answer = j.at("answer").get<std::string>();
        qa.masked_slot = slot_from_string(j.value("masked_slot", std::string("e2")));
        qa.domain = j.value("domain", std::string{});
        if (j.contains("quintuple")) {
            const auto& q = j.at("quintuple");
            qa.quintuple.entities = {q.value("e1", std::string{}), q.value("e2", std::string{}), q.value("e3", std::string{})};
            for (std::size_t i = 0; i < 3; ++i) qa.quintuple.keys[i] = normalize_name(qa.quintuple.entities[i]);
            qa.quintuple.r1 = q.value("r1", std::string{});
            qa.quintuple.r2 = q.value("r2", std::string{});
        }
        if (j.contains("provenance"))
            qa.quintuple.provenance = j.at("provenance").value("chunk_ids", std::vector<std::string>{});
        const auto criteria = j.value("checklist", std::vector<std::string>{});
        if (!criteria.empty()) qa.checklist = Checklist{qa.id, criteria};
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::MalformedInput, std::string("QA record: ") + ex.what());
    }
    return qa;
}

/// Read a JSON-lines file; blank lines are skipped.
inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    std::vector<nlohmann::json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::MalformedInput, path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return out;
}

inline std::string to_jsonl(const std::vector<nlohmann::json>& rows) {
    std::string out;
    for (const auto& r : rows) out += r.dump() + "\n";
    return out;
}

inline std::vector<QAPair> load_dataset(const std::filesystem::path& path) {
    std::vector<QAPair> out;
    for (const auto& j : read_jsonl(path)) out.push_back(qa_from_json(j));
    return out;
}

inline std::string serialize_dataset(const std::vector<QAPair>& pairs) {
    std::vector<nlohmann::json> rows;
    rows.reserve(pairs.size());
    for (const auto& p : pairs) rows.push_back(to_json(p));
    return to_jsonl(rows);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace k2v
