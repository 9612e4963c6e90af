#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "k2v/error.hpp"
#include "k2v/gateway.hpp"
#include "k2v/kg.hpp"
#include "k2v/log.hpp"
#include "k2v/prompts.hpp"
#include "k2v/text.hpp"

namespace k2v {

// ---------------------------------------------------------------------------
// n-gram contamination
// ---------------------------------------------------------------------------

struct BenchSample {
    std::string id;
    std::string text;
};

struct LeakReport {
    std::size_t n = 0;
    std::size_t total_samples = 0;
    std::vector<std::string> leaked_ids;  // in bench order
    std::size_t leaked_count = 0;
};

inline nlohmann::json to_json(const LeakReport& r) {
    return {{"n", r.n}, {"total_samples", r.total_samples}, {"leaked_count", r.leaked_count}, {"leaked_ids", r.leaked_ids}};
}

namespace detail {

inline Hash128 token_hash(std::string_view tok) {
    return {fnv1a64(tok), fnv1a64(tok, mix64(kFnvOffset ^ 0x9e3779b97f4a7c15ULL))};
}

template <Tokenizer Tok>
std::vector<Hash128> token_hashes(const Tok& tok, std::string_view text) {
    std::vector<Hash128> out;
    for (const auto& span : tok(text)) out.push_back(token_hash(text.substr(span.offset, span.length)));
    return out;
}

inline Hash128 ngram_hash(const std::vector<Hash128>& toks, std::size_t start, std::size_t n) {
    Hash128 h{0x6a09e667f3bcc908ULL, 0xbb67ae8584caa73bULL};
    for (std::size_t i = start; i < start + n; ++i) {
        h.hi = mix64(h.hi ^ toks[i].hi) * kFnvPrime;
        h.lo = mix64(h.lo + toks[i].lo) ^ (h.lo >> 17);
    }
    return h;
}

} // namespace detail

/// A bench sample is leaked iff one of its n-token windows also occurs in a training question.
template <Tokenizer Tok = SimpleTokenizer>
LeakReport ngram_leak_check(const std::vector<std::string>& train_questions, const std::vector<BenchSample>& bench,
                            std::size_t n, const Tok& tokenizer = {}) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
    std::unordered_set<Hash128, Hash128Hasher> grams;
    for (const auto& q : train_questions) {
        const auto toks = detail::token_hashes(tokenizer, q);
        for (std::size_t i = 0; i + n <= toks.size(); ++i) grams.insert(detail::ngram_hash(toks, i, n));
    }
    LeakReport r;
    r.n = n;
    r.total_samples = bench.size();
    for (const auto& s : bench) {
        const auto toks = detail::token_hashes(tokenizer, s.text);
        for (std::size_t i = 0; i + n <= toks.size(); ++i) {
            if (grams.contains(detail::ngram_hash(toks, i, n))) {
                r.leaked_ids.push_back(s.id);
                break;
            }
        }
    }
    r.leaked_count = r.leaked_ids.size();
    return r;
}

/// "22,26,30" or "22..30".
inline std::vector<std::size_t> parse_n_list(std::string_view spec) {
    const auto parse_one = [&](std::string_view s) -> std::size_t {
        const auto t = trim(s);
        if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; }))
            throw Error(ErrorCode::InvalidArgument, "bad n value '" + std::string(s) + "'");
        const auto v = std::stoull(t);
        if (v == 0) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
        return static_cast<std::size_t>(v);
    };
    std::vector<std::size_t> out;
    if (const auto dots = spec.find(".."); dots != std::string_view::npos) {
        const auto lo = parse_one(spec.substr(0, dots));
        const auto hi = parse_one(spec.substr(dots + 2));
        if (lo > hi) throw Error(ErrorCode::InvalidArgument, "empty n range " + std::string(spec));
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const auto comma = spec.find(',', pos);
        out.push_back(parse_one(spec.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Graph structure
// ---------------------------------------------------------------------------

struct GraphQualityReport {
    double noise_ratio = 0;
    double lcc_ratio = 0;
    double type_conflict_rate = 0;
};

inline nlohmann::json to_json(const GraphQualityReport& r) {
    return {{"noise_ratio", r.noise_ratio}, {"lcc_ratio", r.lcc_ratio}, {"type_conflict_rate", r.type_conflict_rate}};
}

/// Share of entities with no incident relation.
inline double noise_ratio(const KnowledgeGraph& kg) {
    if (kg.entities.empty()) throw Error(ErrorCode::EmptyGraph, "knowledge graph has no entities");
    std::set<std::string> touched;
    for (const auto& [key, _] : kg.relations) {
        touched.insert(key.first);
        touched.insert(key.second);
    }
    std::size_t isolated = 0;
    for (const auto& [name, _] : kg.entities)
        if (!touched.contains(name)) ++isolated;
    return static_cast<double>(isolated) / static_cast<double>(kg.entities.size());
}

/// Share of entities inside the largest connected component (relations undirected).
inline double lcc_ratio(const KnowledgeGraph& kg) {
    if (kg.entities.empty()) throw Error(ErrorCode::EmptyGraph, "knowledge graph has no entities");
    const auto adj = kg.adjacency();
    std::set<std::string> seen;
    std::size_t best = 0;
    for (const auto& [start, _] : adj) {
        if (seen.contains(start)) continue;
        std::size_t size = 0;
        std::queue<std::string> frontier;
        frontier.push(start);
        seen.insert(start);
        while (!frontier.empty()) {
            const auto cur = frontier.front();
            frontier.pop();
            ++size;
            for (const auto& next : adj.at(cur))
                if (seen.insert(next).second) frontier.push(next);
        }
        best = std::max(best, size);
    }
    return static_cast<double>(best) / static_cast<double>(kg.entities.size());
}

/// Among entities observed in two or more chunks, the share whose types disagree.
inline double type_conflict_rate(const KnowledgeGraph& kg) {
    std::size_t multi = 0;
    std::size_t conflicted = 0;
    for (const auto& [_, e] : kg.entities) {
        if (e.source_chunks().size() < 2) continue;
        ++multi;
        if (e.conflict_flag) ++conflicted;
    }
    if (multi == 0) {
        logger()->warn("no multi-source entities; type conflict rate reported as 0");
        return 0.0;
    }
    return static_cast<double>(conflicted) / static_cast<double>(multi);
}

inline GraphQualityReport graph_quality(const KnowledgeGraph& kg) {
    return {noise_ratio(kg), lcc_ratio(kg), type_conflict_rate(kg)};
}

// ---------------------------------------------------------------------------
// Manual review
// ---------------------------------------------------------------------------

struct ConsistencyReport {
    std::size_t checked = 0;
    std::size_t consistent = 0;
    double rate = 0;
};

inline nlohmann::json to_json(const ConsistencyReport& r) {
    return {{"checked", r.checked}, {"consistent", r.consistent}, {"rate", r.rate}};
}

/// CR = M / N
inline ConsistencyReport consistency_rate(long long m, long long n) {
    if (n <= 0 || m < 0 || m > n)
        throw Error(ErrorCode::InvalidCounts,
                    "need 0 <= m <= n and n > 0, got m=" + std::to_string(m) + " n=" + std::to_string(n));
    return {static_cast<std::size_t>(n), static_cast<std::size_t>(m), static_cast<double>(m) / static_cast<double>(n)};
}

struct SheetItem {
    std::string kind;  // "entity" or "relation"
    std::string label;
    std::string summary;
    std::vector<std::string> chunk_ids;
};

namespace detail {

template <typename T>
std::vector<T> sample_prefix(std::vector<T> pool, std::size_t count, Rng& rng) {
    count = std::min(count, pool.size());
    for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + static_cast<std::size_t>(rng.below(pool.size() - i))]);
    pool.resize(count);
    return pool;
}

} // namespace detail

/// Random entities and relations with their source chunks, for a human reviewer to mark consistent or not.
inline std::vector<SheetItem> sampling_sheet(const KnowledgeGraph& kg, std::size_t n_entities, std::size_t n_relations,
                                             std::uint64_t seed) {
    Rng rng(seed);
    std::vector<const Entity*> entities;
    for (const auto& [_, e] : kg.entities)
        if (!e.placeholder) entities.push_back(&e);
    std::vector<const Relation*> relations;
    for (const auto& [_, r] : kg.relations) relations.push_back(&r);

    std::vector<SheetItem> sheet;
    for (const auto* e : detail::sample_prefix(entities, n_entities, rng)) {
        const auto chunks = e->source_chunks();
        sheet.push_back({"entity", e->display_name + " (" + e->entity_type + ")", e->merged_summary(),
                         {chunks.begin(), chunks.end()}});
    }
    for (const auto* r : detail::sample_prefix(relations, n_relations, rng)) {
        std::set<std::string> chunks;
        for (const auto& s : r->summaries) chunks.insert(s.chunk_id);
        sheet.push_back({"relation", r->source + " -- " + r->target, r->merged_summary(), {chunks.begin(), chunks.end()}});
    }
    return sheet;
}

inline nlohmann::json to_json(const SheetItem& s) {
    return {{"kind", s.kind}, {"label", s.label}, {"summary", s.summary}, {"chunk_ids", s.chunk_ids}, {"consistent", nullptr}};
}

// ---------------------------------------------------------------------------
// Judged extraction accuracy
// ---------------------------------------------------------------------------

struct ExtractionScores {
    double accuracy = 0;
    double completeness = 0;
    double precision = 0;
};

struct ExtractionAuditReport {
    ExtractionScores ner;
    ExtractionScores re;
    std::size_t sampled = 0;
    std::size_t scored = 0;
    std::size_t unparseable = 0;
};

inline nlohmann::json to_json(const ExtractionAuditReport& r) {
    const auto scores = [](const ExtractionScores& s) {
        return nlohmann::json{{"accuracy", s.accuracy}, {"completeness", s.completeness}, {"precision", s.precision}};
    };
    return {{"ner", scores(r.ner)},
            {"re", scores(r.re)},
            {"sampled", r.sampled},
            {"scored", r.scored},
            {"unparseable", r.unparseable}};
}

inline ChatRequest extraction_audit_request(const KnowledgeGraph& kg, const Chunk& chunk) {
    std::string entities;
    for (const auto& [_, e] : kg.entities) {
        if (e.placeholder || !e.source_chunks().contains(chunk.id)) continue;
        std::string desc;
        for (const auto& s : e.summaries)
            if (s.chunk_id == chunk.id) desc = s.text;
        entities += "- " + e.display_name + " (" + e.entity_type + "): " + desc + "\n";
    }
    std::string relations;
    for (const auto& [_, r] : kg.relations) {
        for (const auto& s : r.summaries) {
            if (s.chunk_id != chunk.id) continue;
            relations += "- " + kg.entities.at(r.source).display_name + " -- " + kg.entities.at(r.target).display_name +
                         ": " + s.text + "\n";
            break;
        }
    }
    ChatRequest req;
    req.user_prompt = prompts::fill_template(prompts::kExtractionAudit, std::pair{"chunk_text", std::string_view(chunk.text)},
                                             std::pair{"entities", std::string_view(entities)},
                                             std::pair{"relations", std::string_view(relations)});
    req.temperature = kJudgeTemperature;
    req.max_tokens = 256;
    req.tag = "audit:" + chunk.id;
    return req;
}

namespace detail {

inline std::optional<std::pair<ExtractionScores, ExtractionScores>> parse_audit_reply(const std::string& text) {
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
    const auto j = nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    const auto read = [](const nlohmann::json& o) -> std::optional<ExtractionScores> {
        if (!o.is_object()) return std::nullopt;
        std::array<double, 3> v{};
        const std::array<const char*, 3> keys = {"accuracy", "completeness", "precision"};
        for (std::size_t i = 0; i < 3; ++i) {
            if (!o.contains(keys[i]) || !o.at(keys[i]).is_number()) return std::nullopt;
            v[i] = o.at(keys[i]).get<double>();
            if (!std::isfinite(v[i])) return std::nullopt;
            if (v[i] < 0.0 || v[i] > 1.0) {
                logger()->warn("audit score {} outside [0, 1]; clamped", v[i]);
                v[i] = std::clamp(v[i], 0.0, 1.0);
            }
        }
        return ExtractionScores{v[0], v[1], v[2]};
    };
    if (!j.contains("ner") || !j.contains("re")) return std::nullopt;
    auto ner = read(j.at("ner"));
    auto re = read(j.at("re"));
    if (!ner || !re) return std::nullopt;
    return std::pair{*ner, *re};
}

} // namespace detail

/// Judge a random sample of chunks against what was extracted from them; means over parseable replies.
inline ExtractionAuditReport extraction_audit(const KnowledgeGraph& kg, const std::vector<Chunk>& chunks,
                                              const Gateway& gateway, std::size_t sample_size, std::uint64_t seed) {
    if (sample_size == 0 || sample_size > chunks.size())
        throw Error(ErrorCode::InvalidSampleSize, "sample size " + std::to_string(sample_size) + " with " +
                                                      std::to_string(chunks.size()) + " chunks available");
    std::vector<std::size_t> idx(chunks.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    idx = detail::sample_prefix(std::move(idx), sample_size, rng);

    std::vector<ChatRequest> requests;
    for (auto i : idx) requests.push_back(extraction_audit_request(kg, chunks[i]));
    const auto outcomes = gateway.complete_batch(requests);

    ExtractionAuditReport report;
    report.sampled = sample_size;
    std::array<long double, 6> sums{};
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        const auto parsed = detail::parse_audit_reply(value_or_throw(outcomes[k]).text);
        if (!parsed) {
            logger()->warn("unparseable audit reply for chunk {}; skipped", chunks[idx[k]].id);
            ++report.unparseable;
            continue;
        }
        ++report.scored;
        const auto& [ner, re] = *parsed;
        const std::array<double, 6> v = {ner.accuracy, ner.completeness, ner.precision,
                                         re.accuracy,  re.completeness,  re.precision};
        for (std::size_t i = 0; i < 6; ++i) sums[i] += v[i];
    }
    if (report.scored > 0) {
        std::array<double, 6> mean{};
        for (std::size_t i = 0; i < 6; ++i) mean[i] = static_cast<double>(sums[i] / static_cast<long double>(report.scored));
        report.ner = {mean[0], mean[1], mean[2]};
        report.re = {mean[3], mean[4], mean[5]};
    }
    return report;
}

} // namespace k2v
