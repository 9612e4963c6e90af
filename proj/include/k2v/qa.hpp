#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "k2v/dataset.hpp"
#include "k2v/error.hpp"
#include "k2v/gateway.hpp"
#include "k2v/kg.hpp"
#include "k2v/log.hpp"
#include "k2v/prompts.hpp"
#include "k2v/text.hpp"

namespace k2v {

struct MaskedQuintuple {
    Quintuple masked;  // the masked slot holds kMaskToken and an empty key
    Slot masked_slot = Slot::E2;
    std::string ground_truth;
    std::string mask_token = std::string(kMaskToken);
};

/// Every two-edge path a - pivot - b with a != b, one per unordered endpoint
/// pair (the smaller key is e1). Placeholder entities never appear.
inline std::vector<Quintuple> enumerate_quintuples(const KnowledgeGraph& kg) {
    std::vector<Quintuple> out;
    const auto adj = kg.adjacency();
    const auto usable = [&](const std::string& key) { return !kg.entities.at(key).placeholder; };
    for (const auto& [pivot, neighbors] : adj) {
        if (!usable(pivot)) continue;
        std::vector<std::string> ends;
        for (const auto& n : neighbors)
            if (usable(n)) ends.push_back(n);
        for (std::size_t i = 0; i < ends.size(); ++i) {
            for (std::size_t j = i + 1; j < ends.size(); ++j) {
                const auto& a = ends[i];
                const auto& b = ends[j];
                const Relation* ra = kg.find_relation(a, pivot);
                const Relation* rb = kg.find_relation(pivot, b);
                Quintuple q;
                const std::array<const Entity*, 3> es = {&kg.entities.at(a), &kg.entities.at(pivot), &kg.entities.at(b)};
                std::set<std::string> chunks;
                for (std::size_t s = 0; s < 3; ++s) {
                    q.entities[s] = es[s]->display_name;
                    q.keys[s] = es[s]->name;
                    q.entity_summaries[s] = es[s]->merged_summary();
                    for (const auto& c : es[s]->source_chunks()) chunks.insert(c);
                }
                q.r1 = ra->merged_summary();
                q.r2 = rb->merged_summary();
                for (const auto* r : {ra, rb})
                    for (const auto& s : r->summaries) chunks.insert(s.chunk_id);
                q.provenance.assign(chunks.begin(), chunks.end());
                out.push_back(std::move(q));
            }
        }
    }
    return out;
}

/// Uniform sample without replacement of min(count, available) quintuples.
inline std::vector<Quintuple> sample_quintuples(const KnowledgeGraph& kg, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw Error(ErrorCode::InvalidCount, "count must be positive");
    auto pool = enumerate_quintuples(kg);
    if (pool.empty()) throw Error(ErrorCode::NoPaths, "knowledge graph has no two-edge path");
    if (count > pool.size()) {
        logger()->warn("requested {} quintuples but only {} are available", count, pool.size());
        count = pool.size();
    }
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

/// Pick the masked slot uniformly; slots whose name occurs inside another
/// entity name of the same quintuple are excluded and re-drawn.
inline MaskedQuintuple mask_entity(const Quintuple& q, Rng& rng) {
    std::vector<std::size_t> remaining = {0, 1, 2};
    while (!remaining.empty()) {
        const auto pick = static_cast<std::size_t>(rng.below(remaining.size()));
        const std::size_t slot = remaining[pick];
        const auto key = normalize_name(q.entities[slot]);
        bool collides = key.empty();
        for (std::size_t other = 0; other < 3 && !collides; ++other)
            if (other != slot && normalize_name(q.entities[other]).find(key) != std::string::npos) collides = true;
        if (!collides) {
            MaskedQuintuple m;
            m.masked = q;
            m.masked_slot = static_cast<Slot>(slot);
            m.ground_truth = q.entities[slot];
            m.masked.entities[slot] = std::string(kMaskToken);
            m.masked.keys[slot].clear();
            return m;
        }
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    throw Error(ErrorCode::UnmaskableQuintuple,
                "every entity of (" + q.entities[0] + ", " + q.entities[1] + ", " + q.entities[2] +
                    ") collides with another");
}

inline Quintuple unmask(const MaskedQuintuple& m, const std::string& ground_truth) {
    Quintuple q = m.masked;
    const auto slot = static_cast<std::size_t>(m.masked_slot);
    q.entities[slot] = ground_truth;
    q.keys[slot] = normalize_name(ground_truth);
    return q;
}

namespace detail {

inline std::string replace_all_icase_ascii(const std::string& s, const std::string& needle, std::string_view with) {
    if (needle.empty()) return s;
    const auto lower = [](std::string v) {
        for (auto& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return v;
    };
    const auto hay = lower(s);
    const auto pat = lower(needle);
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto hit = hay.find(pat, pos);
        if (hit == std::string::npos) break;
        out.append(s, pos, hit - pos);
        out.append(with);
        pos = hit + pat.size();
    }
    out.append(s, pos, std::string::npos);
    return out;
}

} // namespace detail

/// Textualization prompt. The masked name is also redacted from the summaries shown to the model.
inline ChatRequest textualize_request(const MaskedQuintuple& m) {
    const auto redact = [&](const std::string& text) {
        return detail::replace_all_icase_ascii(text, m.ground_truth, kMaskToken);
    };
    const auto& q = m.masked;
    std::string entities;
    for (std::size_t i = 0; i < 3; ++i)
        entities += std::to_string(i + 1) + ". " + q.entities[i] + ": " + redact(q.entity_summaries[i]) + "\n";
    std::string relationships = "1. " + q.entities[0] + " -- " + q.entities[1] + ": " + redact(q.r1) + "\n" +
                                "2. " + q.entities[1] + " -- " + q.entities[2] + ": " + redact(q.r2) + "\n";
    ChatRequest r;
    r.user_prompt = prompts::fill_template(prompts::kTextualize, std::pair{"entities", entities},
                                           std::pair{"relationships", relationships});
    r.temperature = kSynthesisTemperature;
    r.tag = "textualize";
    return r;
}

/// Rewrite [MASK] to the blank marker and enforce blank integrity.
inline std::variant<std::string, Error> validate_question(const std::string& model_text, const std::string& answer) {
    auto question = trim(replace_all(model_text, kMaskToken, kBlankMarker));
    if (question.find(kBlankMarker) == std::string::npos)
        return Error(ErrorCode::MissingBlank, "model output has no [MASK]");
    const auto key = normalize_name(answer);
    if (!key.empty() && normalize_name(question).find(key) != std::string::npos)
        return Error(ErrorCode::LeakedAnswer, "question reveals the answer '" + answer + "'");
    return question;
}

/// One model call plus one retry on validation failure.
inline std::string textualize(const MaskedQuintuple& m, const Gateway& gateway) {
    const auto request = textualize_request(m);
    std::variant<std::string, Error> result = Error(ErrorCode::MissingBlank, "not attempted");
    for (int attempt = 0; attempt < 2; ++attempt) {
        result = validate_question(gateway.complete(request).text, m.ground_truth);
        if (auto* q = std::get_if<std::string>(&result)) return std::move(*q);
    }
    throw std::get<Error>(result);
}

struct SynthConfig {
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::string domain = "general";
};

struct Rejection {
    std::string path;  // "e1 | e2 | e3"
    ErrorCode reason;
};

struct SynthResult {
    std::vector<QAPair> pairs;
    std::vector<Rejection> rejections;
};

/// sample -> mask -> textualize. Rejected candidates are replaced from the
/// shuffled pool until `count` pairs exist or the pool runs out.
inline SynthResult synth_dataset(const KnowledgeGraph& kg, const SynthConfig& config, const Gateway& gateway) {
    if (config.count == 0) throw Error(ErrorCode::InvalidCount, "count must be positive");
    const auto pool_size = enumerate_quintuples(kg).size();
    if (pool_size == 0) throw Error(ErrorCode::NoPaths, "knowledge graph has no two-edge path");
    const auto pool = sample_quintuples(kg, pool_size, config.seed);
    Rng mask_rng(mix64(config.seed ^ 0x6d61736b2d726e67ULL));

    SynthResult result;
    const auto describe = [](const Quintuple& q) { return q.entities[0] + " | " + q.entities[1] + " | " + q.entities[2]; };
    std::size_t cursor = 0;
    while (result.pairs.size() < config.count && cursor < pool.size()) {
        const auto need = config.count - result.pairs.size();
        std::vector<MaskedQuintuple> batch;
        while (batch.size() < need && cursor < pool.size()) {
            const auto& q = pool[cursor++];
            try {
                batch.push_back(mask_entity(q, mask_rng));
            } catch (const Error& e) {
                result.rejections.push_back({describe(q), e.code()});
            }
        }
        if (batch.empty()) break;

        std::vector<ChatRequest> requests;
        for (const auto& m : batch) requests.push_back(textualize_request(m));
        std::vector<std::variant<std::string, Error>> validated;
        for (std::size_t i = 0; i < batch.size(); ++i) validated.emplace_back(Error(ErrorCode::MissingBlank, ""));

        std::vector<std::size_t> pending(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) pending[i] = i;
        for (int attempt = 0; attempt < 2 && !pending.empty(); ++attempt) {
            std::vector<ChatRequest> round;
            for (auto i : pending) round.push_back(requests[i]);
            const auto outcomes = gateway.complete_batch(round);
            std::vector<std::size_t> still;
            for (std::size_t k = 0; k < pending.size(); ++k) {
                const auto i = pending[k];
                validated[i] = validate_question(value_or_throw(outcomes[k]).text, batch[i].ground_truth);
                if (std::holds_alternative<Error>(validated[i])) still.push_back(i);
            }
            pending = std::move(still);
        }

        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (const auto* err = std::get_if<Error>(&validated[i])) {
                result.rejections.push_back({describe(unmask(batch[i], batch[i].ground_truth)), err->code()});
                continue;
            }
            QAPair qa;
            qa.id = config.domain + "-" + std::to_string(config.seed) + "-" + std::to_string(result.pairs.size());
            qa.question = std::get<std::string>(validated[i]);
            qa.answer = batch[i].ground_truth;
            qa.masked_slot = batch[i].masked_slot;
            qa.quintuple = unmask(batch[i], batch[i].ground_truth);
            qa.domain = config.domain;
            result.pairs.push_back(std::move(qa));
        }
    }
    if (result.pairs.size() < config.count)
        logger()->warn("produced {} of {} requested QA pairs ({} rejected)", result.pairs.size(), config.count,
                       result.rejections.size());
    return result;
}

} // namespace k2v
