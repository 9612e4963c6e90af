#pragma once

#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "k2v/audit.hpp"
#include "k2v/checklist.hpp"
#include "k2v/dataset.hpp"
#include "k2v/error.hpp"
#include "k2v/gateway.hpp"
#include "k2v/kg.hpp"
#include "k2v/qa.hpp"
#include "k2v/reward.hpp"
#include "k2v/service.hpp"

// Library entry points behind each CLI subcommand.
namespace k2v {

struct PipelineConfig {
    std::filesystem::path corpus_dir;
    std::filesystem::path kg_path;
    std::filesystem::path dataset_path;
    std::string domain = "general";
    std::size_t count = 0;
    std::uint64_t seed = 0;
    GatewayConfig gateway;
    std::filesystem::path mock_script;
    double alpha = kDefaultAlpha;
    RewardMode mode = RewardMode::Full;
    int judge_retries = 1;
    std::size_t max_chunk_tokens = kDefaultMaxChunkTokens;
};

/// Keys mirror the CLI flags; unknown keys are ignored.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    try {
        c.corpus_dir = j.value("corpus_dir", std::string{});
        c.kg_path = j.value("kg_path", std::string{});
        c.dataset_path = j.value("dataset_path", std::string{});
        c.domain = j.value("domain", c.domain);
        c.count = j.value("count", c.count);
        c.seed = j.value("seed", c.seed);
        if (j.contains("gateway")) from_json(j.at("gateway"), c.gateway);
        c.mock_script = j.value("mock_script", std::string{});
        c.alpha = j.value("alpha", c.alpha);
        if (j.contains("mode")) {
            const auto m = reward_mode_from_string(j.at("mode").get<std::string>());
            if (!m) throw Error(ErrorCode::InvalidArgument, "unknown reward mode in config");
            c.mode = *m;
        }
        c.judge_retries = j.value("judge_retries", c.judge_retries);
        c.max_chunk_tokens = j.value("max_chunk_tokens", c.max_chunk_tokens);
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::InvalidArgument, std::string("config: ") + ex.what());
    }
    return c;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    try {
        return pipeline_config_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::InvalidArgument, path.string() + ": " + ex.what());
    }
}

/// Mock when a script is configured, live otherwise.
inline std::unique_ptr<Gateway> make_gateway(const PipelineConfig& c) {
    auto cfg = c.gateway;
    if (!c.mock_script.empty()) {
        cfg.mode = GatewayMode::Mock;
        return std::make_unique<Gateway>(cfg, MockScript::load(c.mock_script));
    }
    if (cfg.mode == GatewayMode::Mock)
        throw Error(ErrorCode::InvalidArgument, "mock gateway needs --mock-script; live mode needs --endpoint");
    return std::make_unique<Gateway>(cfg);
}

/// UTC timestamp; SOURCE_DATE_EPOCH pins it for reproducible builds.
inline std::string build_timestamp() {
    std::time_t t = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) t = static_cast<std::time_t>(std::atoll(epoch));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct BuildResult {
    KnowledgeGraph kg;
    std::vector<Chunk> chunks;
};

inline BuildResult build_kg(const std::filesystem::path& corpus, const Gateway& gateway,
                            std::size_t max_chunk_tokens = kDefaultMaxChunkTokens) {
    const auto docs = load_corpus(corpus);
    BuildResult r;
    r.chunks = chunk_documents(docs, max_chunk_tokens);
    logger()->info("extracting {} chunks", r.chunks.size());
    r.kg = merge(extract_chunks(r.chunks, gateway));
    r.kg.meta.created_at = build_timestamp();
    r.kg.meta.corpus_hash = corpus_hash(docs);
    r.kg.meta.chunk_count = r.chunks.size();
    return r;
}

struct AuditOptions {
    std::size_t sample_size = 0;  // 0 skips the judged extraction audit
    std::uint64_t seed = 0;
    std::optional<std::pair<long long, long long>> entity_review;    // (consistent, checked)
    std::optional<std::pair<long long, long long>> relation_review;
};

/// Structural metrics, plus judged extraction scores and review consistency when requested.
inline nlohmann::json audit_kg(const KnowledgeGraph& kg, const AuditOptions& opt, const std::vector<Chunk>* chunks = nullptr,
                               const Gateway* gateway = nullptr) {
    nlohmann::json out;
    out["graph"] = to_json(graph_quality(kg));
    out["entities"] = kg.entities.size();
    out["relations"] = kg.relations.size();
    if (opt.sample_size > 0) {
        if (!chunks || !gateway)
            throw Error(ErrorCode::InvalidArgument, "extraction audit needs the corpus and a gateway");
        out["extraction"] = to_json(extraction_audit(kg, *chunks, *gateway, opt.sample_size, opt.seed));
    }
    if (opt.entity_review) out["entity_consistency"] = to_json(consistency_rate(opt.entity_review->first, opt.entity_review->second));
    if (opt.relation_review)
        out["relation_consistency"] = to_json(consistency_rate(opt.relation_review->first, opt.relation_review->second));
    return out;
}

inline std::string sampling_sheet_jsonl(const KnowledgeGraph& kg, std::size_t n_entities, std::size_t n_relations,
                                        std::uint64_t seed) {
    std::vector<nlohmann::json> rows;
    for (const auto& item : sampling_sheet(kg, n_entities, n_relations, seed)) rows.push_back(to_json(item));
    return to_jsonl(rows);
}

/// Responses are JSON lines `{"id","response"}`; each is scored against the dataset pair with the same id.
inline std::vector<nlohmann::json> score_responses(const std::vector<QAPair>& dataset,
                                                   const std::vector<nlohmann::json>& responses, const Gateway& gateway,
                                                   const RewardConfig& config) {
    std::map<std::string, const QAPair*> by_id;
    for (const auto& qa : dataset) by_id[qa.id] = &qa;
    std::vector<nlohmann::json> out;
    for (const auto& row : responses) {
        std::string id;
        std::string text;
        try {
            id = row.at("id").get<std::string>();
            text = row.at("response").get<std::string>();
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::MalformedInput, std::string("response record: ") + ex.what());
        }
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorCode::MalformedInput, "response id '" + id + "' not in dataset");
        out.push_back(score_response_json(id, total_reward(text, *it->second, gateway, config)));
    }
    return out;
}

/// Bench records are `{"id", "text"}` or `{"id", "question"}`.
inline std::vector<BenchSample> bench_from_jsonl(const std::vector<nlohmann::json>& rows) {
    std::vector<BenchSample> out;
    for (const auto& r : rows) {
        try {
            const auto& text = r.contains("text") ? r.at("text") : r.at("question");
            out.push_back({r.at("id").get<std::string>(), text.get<std::string>()});
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::MalformedInput, std::string("bench record: ") + ex.what());
        }
    }
    return out;
}

/// One report per n, over training questions only.
inline std::vector<LeakReport> leakage(const std::vector<QAPair>& train, const std::vector<BenchSample>& bench,
                                       const std::vector<std::size_t>& ns) {
    std::vector<std::string> questions;
    for (const auto& qa : train) questions.push_back(qa.question);
    std::vector<LeakReport> out;
    for (auto n : ns) out.push_back(ngram_leak_check(questions, bench, n));
    return out;
}

} // namespace k2v
