#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "k2v/criteria_data.hpp"
#include "k2v/dataset.hpp"
#include "k2v/error.hpp"
#include "k2v/gateway.hpp"
#include "k2v/log.hpp"
#include "k2v/prompts.hpp"

namespace k2v {

struct CriteriaGroup {
    std::string name;
    std::vector<std::string> criteria;
    friend bool operator==(const CriteriaGroup&, const CriteriaGroup&) = default;
};

struct GeneralCriteria {
    std::string domain;
    std::string field;  // expert field named in the checklist prompt; defaults to domain
    std::vector<CriteriaGroup> groups;

    [[nodiscard]] std::size_t criteria_count() const {
        std::size_t n = 0;
        for (const auto& g : groups) n += g.criteria.size();
        return n;
    }

    void validate() const {
        if (groups.empty()) throw Error(ErrorCode::MalformedCriteriaFile, "criteria registry has no groups");
        for (const auto& g : groups) {
            if (g.name.empty() || g.criteria.empty())
                throw Error(ErrorCode::MalformedCriteriaFile, "criteria group '" + g.name + "' is empty");
            for (const auto& c : g.criteria)
                if (trim(c).empty()) throw Error(ErrorCode::MalformedCriteriaFile, "empty criterion in " + g.name);
        }
    }

    friend bool operator==(const GeneralCriteria&, const GeneralCriteria&) = default;
};

inline nlohmann::json to_json(const GeneralCriteria& g) {
    auto groups = nlohmann::json::array();
    for (const auto& grp : g.groups) groups.push_back({{"name", grp.name}, {"criteria", grp.criteria}});
    nlohmann::json j = {{"domain", g.domain}, {"groups", std::move(groups)}};
    if (g.field != g.domain) j["field"] = g.field;
    return j;
}

inline GeneralCriteria criteria_from_json(const nlohmann::json& j) {
    GeneralCriteria g;
    try {
        g.domain = j.at("domain").get<std::string>();
        g.field = j.value("field", g.domain);
        for (const auto& grp : j.at("groups"))
            g.groups.push_back({grp.at("name").get<std::string>(), grp.at("criteria").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::MalformedCriteriaFile, ex.what());
    }
    g.validate();
    return g;
}

inline std::optional<GeneralCriteria> bundled_criteria(std::string_view domain) {
    for (const auto* reg : criteria_data::kBundled) {
        if (reg->domain != domain) continue;
        GeneralCriteria g{std::string(reg->domain), std::string(reg->field), {}};
        for (const auto& grp : reg->groups)
            g.groups.push_back({std::string(grp.name), {grp.criteria.begin(), grp.criteria.end()}});
        return g;
    }
    return std::nullopt;
}

/// A bundled domain name ("agriculture", "medicine", "law") or a path to a criteria JSON file.
inline GeneralCriteria load_general_criteria(const std::string& domain_or_path) {
    if (auto g = bundled_criteria(domain_or_path)) return *g;
    const std::filesystem::path path(domain_or_path);
    if (!std::filesystem::is_regular_file(path))
        throw Error(ErrorCode::UnknownDomain, "no bundled criteria or file named '" + domain_or_path + "'");
    std::ifstream in(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::MalformedCriteriaFile, path.string() + ": " + ex.what());
    }
    return criteria_from_json(j);
}

inline std::string render_criteria(const GeneralCriteria& g) {
    std::string out;
    for (const auto& grp : g.groups) {
        out += grp.name + ":\n";
        for (std::size_t i = 0; i < grp.criteria.size(); ++i)
            out += std::to_string(i + 1) + ". " + grp.criteria[i] + "\n";
        out += "\n";
    }
    return out;
}

inline ChatRequest checklist_request(const QAPair& qa, const GeneralCriteria& g) {
    ChatRequest r;
    r.user_prompt = prompts::fill_template(prompts::kChecklist, std::pair{"field", std::string_view(g.field)},
                                           std::pair{"question", std::string_view(qa.question)},
                                           std::pair{"answer", std::string_view(qa.answer)},
                                           std::pair{"general_criteria", render_criteria(g)});
    r.temperature = kSynthesisTemperature;
    r.max_tokens = 2048;
    r.tag = "checklist:" + qa.id;
    return r;
}

/// Parse a model reply as a JSON array of non-empty strings. Markdown code
/// fences and a trailing comma before ']' are tolerated. Arrays longer than 20
/// are truncated with a warning.
inline std::variant<std::vector<std::string>, Error> parse_checklist_output(const std::string& text) {
    std::string body = trim(text);
    if (body.rfind("```", 0) == 0) {
        const auto first_nl = body.find('\n');
        const auto last_fence = body.rfind("```");
        if (first_nl != std::string::npos && last_fence > first_nl)
            body = trim(std::string_view(body).substr(first_nl + 1, last_fence - first_nl - 1));
    }
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) {
        static const std::regex trailing_comma(R"(,\s*\])");
        j = nlohmann::json::parse(std::regex_replace(body, trailing_comma, "]"), nullptr, false);
    }
    if (j.is_discarded() || !j.is_array())
        return Error(ErrorCode::MalformedChecklistOutput, "checklist output is not a JSON array");
    std::vector<std::string> criteria;
    for (const auto& item : j) {
        if (!item.is_string() || trim(item.get<std::string>()).empty())
            return Error(ErrorCode::MalformedChecklistOutput, "checklist items must be non-empty strings");
        criteria.push_back(item.get<std::string>());
    }
    if (criteria.empty()) return Error(ErrorCode::EmptyChecklist, "model returned an empty checklist");
    if (criteria.size() > kMaxChecklistItems) {
        logger()->warn("checklist has {} criteria; truncating to {}", criteria.size(), kMaxChecklistItems);
        criteria.resize(kMaxChecklistItems);
    }
    return criteria;
}

inline Checklist instantiate_checklist(const QAPair& qa, const GeneralCriteria& g, const Gateway& gateway) {
    if (qa.question.empty() || qa.answer.empty())
        throw Error(ErrorCode::InvalidArgument, "QA pair needs a question and an answer");
    const auto request = checklist_request(qa, g);
    std::variant<std::vector<std::string>, Error> parsed = Error(ErrorCode::MalformedChecklistOutput, "");
    for (int attempt = 0; attempt < 2; ++attempt) {
        parsed = parse_checklist_output(gateway.complete(request).text);
        if (const auto* err = std::get_if<Error>(&parsed); err && err->code() == ErrorCode::MalformedChecklistOutput)
            continue;
        break;
    }
    if (const auto* err = std::get_if<Error>(&parsed)) throw *err;
    Checklist c{qa.id, std::get<std::vector<std::string>>(std::move(parsed))};
    c.validate();
    return c;
}

struct ChecklistFailure {
    std::string question_id;
    ErrorCode reason;
};

struct ChecklistBatchResult {
    std::vector<QAPair> pairs;  // only pairs whose checklist validated, with checklist attached
    std::vector<ChecklistFailure> failures;
};

/// Instantiate checklists for a whole dataset through the gateway's bounded batch.
inline ChecklistBatchResult synth_checklists(const std::vector<QAPair>& pairs, const GeneralCriteria& g,
                                             const Gateway& gateway) {
    ChecklistBatchResult result;
    if (pairs.empty()) return result;
    std::vector<ChatRequest> requests;
    for (const auto& qa : pairs) requests.push_back(checklist_request(qa, g));
    std::vector<std::variant<std::vector<std::string>, Error>> parsed(
        pairs.size(), Error(ErrorCode::MalformedChecklistOutput, "not attempted"));
    std::vector<std::size_t> pending(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) pending[i] = i;
    for (int attempt = 0; attempt < 2 && !pending.empty(); ++attempt) {
        std::vector<ChatRequest> round;
        for (auto i : pending) round.push_back(requests[i]);
        const auto outcomes = gateway.complete_batch(round);
        std::vector<std::size_t> retry;
        for (std::size_t k = 0; k < pending.size(); ++k) {
            const auto i = pending[k];
            parsed[i] = parse_checklist_output(value_or_throw(outcomes[k]).text);
            if (const auto* err = std::get_if<Error>(&parsed[i]); err && err->code() == ErrorCode::MalformedChecklistOutput)
                retry.push_back(i);
        }
        pending = std::move(retry);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (const auto* err = std::get_if<Error>(&parsed[i])) {
            logger()->warn("checklist for {} rejected: {}", pairs[i].id, err->what());
            result.failures.push_back({pairs[i].id, err->code()});
            continue;
        }
        QAPair qa = pairs[i];
        qa.checklist = Checklist{qa.id, std::get<std::vector<std::string>>(parsed[i])};
        result.pairs.push_back(std::move(qa));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Quality assessment
// ---------------------------------------------------------------------------

struct ChecklistQuality {
    double relevance = 0;
    double verifiability = 0;
    double necessity = 0;
};

/// First decimal number in the reply, if any.
inline std::optional<double> parse_score(const std::string& text) {
    static const std::regex number(R"([-+]?\d+(?:\.\d+)?)");
    std::smatch m;
    if (!std::regex_search(text, m, number)) return std::nullopt;
    return std::stod(m.str());
}

inline ChatRequest quality_request(const Checklist& c, const QAPair& qa, const prompts::QualityDimension& dim) {
    std::string items;
    for (std::size_t i = 0; i < c.criteria.size(); ++i) items += std::to_string(i + 1) + ". " + c.criteria[i] + "\n";
    ChatRequest r;
    r.user_prompt = prompts::fill_template(prompts::kChecklistQuality, std::pair{"dimension", dim.name},
                                           std::pair{"definition", dim.definition},
                                           std::pair{"question", std::string_view(qa.question)},
                                           std::pair{"answer", std::string_view(qa.answer)},
                                           std::pair{"checklist", std::string_view(items)});
    r.temperature = kJudgeTemperature;
    r.max_tokens = 16;
    r.tag = "quality:" + std::string(dim.name);
    return r;
}

/// One judge call per dimension (relevance, verifiability, necessity); scores clamped to [1, 5].
inline ChecklistQuality assess_checklist(const Checklist& c, const QAPair& qa, const Gateway& gateway) {
    if (c.criteria.empty()) throw Error(ErrorCode::EmptyChecklist, "cannot assess an empty checklist");
    std::vector<ChatRequest> requests;
    for (const auto& dim : prompts::kQualityDimensions) requests.push_back(quality_request(c, qa, dim));
    const auto outcomes = gateway.complete_batch(requests);
    std::array<double, 3> scores{};
    for (std::size_t d = 0; d < 3; ++d) {
        auto score = parse_score(value_or_throw(outcomes[d]).text);
        if (!score) score = parse_score(gateway.complete(requests[d]).text);
        if (!score)
            throw Error(ErrorCode::UnparseableScore,
                        "no numeric " + std::string(prompts::kQualityDimensions[d].name) + " score");
        if (*score < 1.0 || *score > 5.0) {
            logger()->warn("{} score {} outside [1, 5]; clamped", prompts::kQualityDimensions[d].name, *score);
            score = std::clamp(*score, 1.0, 5.0);
        }
        scores[d] = *score;
    }
    return {scores[0], scores[1], scores[2]};
}

} // namespace k2v
