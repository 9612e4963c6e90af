#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "k2v/error.hpp"
#include "k2v/gateway.hpp"
#include "k2v/log.hpp"
#include "k2v/prompts.hpp"
#include "k2v/text.hpp"

namespace k2v {

/// Default chunk size in tokens.
inline constexpr std::size_t kDefaultMaxChunkTokens = 256;

inline constexpr std::array<std::string_view, 14> kEntityTypes = {
    "concept", "date",    "location", "keyword", "organization", "person",     "event",
    "work",    "nature",  "artificial", "science", "technology", "mission", "gene"};

inline bool is_entity_type(std::string_view t) {
    return std::find(kEntityTypes.begin(), kEntityTypes.end(), t) != kEntityTypes.end();
}

// ---------------------------------------------------------------------------
// Corpus and chunking
// ---------------------------------------------------------------------------

struct SourceDocument {
    std::string id;
    std::string text;
    std::string source_path;
};

struct Chunk {
    std::string id;
    std::string text;
    std::string source_path;
    std::size_t token_count = 0;
};

namespace detail {

struct ByteRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Paragraphs end after a whitespace run containing at least two newlines.
// Each range owns its trailing whitespace, so ranges tile the input.
inline std::vector<ByteRange> split_paragraphs(std::string_view text) {
    std::vector<ByteRange> out;
    std::size_t start = 0;
    std::size_t i = 0;
    const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (i < text.size()) {
        if (!is_ws(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        int newlines = 0;
        while (j < text.size() && is_ws(text[j])) newlines += text[j++] == '\n';
        if (newlines >= 2 && j < text.size() && text.find_first_not_of(" \t\n\r\f\v", start) < i) {
            out.push_back({start, j});
            start = j;
        }
        i = j;
    }
    if (start < text.size()) out.push_back({start, text.size()});
    return out;
}

// Sentences end after '.', '!', '?' (or their full-width forms) followed by whitespace.
inline std::vector<ByteRange> split_sentences(std::string_view text, ByteRange para) {
    std::vector<ByteRange> out;
    std::size_t start = para.begin;
    std::size_t i = para.begin;
    const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
    while (i < para.end) {
        std::size_t terminator_len = 0;
        const char c = text[i];
        if (c == '.' || c == '!' || c == '?') terminator_len = 1;
        else if (text.compare(i, 3, "\xE3\x80\x82") == 0 || text.compare(i, 3, "\xEF\xBC\x81") == 0 ||
                 text.compare(i, 3, "\xEF\xBC\x9F") == 0)
            terminator_len = 3;
        if (terminator_len == 0) {
            ++i;
            continue;
        }
        std::size_t j = i + terminator_len;
        const bool full_width = terminator_len == 3;
        if (full_width || (j < para.end && is_ws(text[j]))) {
            while (j < para.end && is_ws(text[j])) ++j;
            out.push_back({start, j});
            start = j;
        }
        i = j;
    }
    if (start < para.end) out.push_back({start, para.end});
    return out;
}

} // namespace detail

/// Split text into chunks of at most `max_tokens` tokens. Boundaries prefer
/// paragraphs, then sentences, then token positions. Chunk texts are
/// contiguous slices whose concatenation equals the input.
template <Tokenizer Tok = SimpleTokenizer>
std::vector<Chunk> chunk_corpus(std::string_view corpus_text, std::size_t max_tokens, const Tok& tokenizer = {},
                                std::string_view doc_id = "doc", std::string_view source_path = {}) {
    if (max_tokens == 0) throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
    if (!is_valid_utf8(corpus_text)) throw Error(ErrorCode::MalformedInput, "corpus is not valid UTF-8");
    if (corpus_text.find_first_not_of(" \t\n\r\f\v") == std::string_view::npos)
        throw Error(ErrorCode::EmptyCorpus, "corpus contains no non-whitespace text");

    const auto count = [&](detail::ByteRange r) {
        return tokenizer(corpus_text.substr(r.begin, r.end - r.begin)).size();
    };

    // Units no larger than max_tokens, in order, tiling the corpus.
    std::vector<detail::ByteRange> units;
    for (const auto& para : detail::split_paragraphs(corpus_text)) {
        if (count(para) <= max_tokens) {
            units.push_back(para);
            continue;
        }
        for (const auto& sentence : detail::split_sentences(corpus_text, para)) {
            if (count(sentence) <= max_tokens) {
                units.push_back(sentence);
                continue;
            }
            const auto spans = tokenizer(corpus_text.substr(sentence.begin, sentence.end - sentence.begin));
            std::size_t piece_begin = sentence.begin;
            for (std::size_t t = max_tokens; t < spans.size(); t += max_tokens) {
                const std::size_t cut = sentence.begin + spans[t].offset;
                units.push_back({piece_begin, cut});
                piece_begin = cut;
            }
            units.push_back({piece_begin, sentence.end});
        }
    }

    std::vector<Chunk> chunks;
    const auto emit = [&](detail::ByteRange r) {
        Chunk c;
        c.id = std::string(doc_id) + "#" + std::to_string(chunks.size());
        c.text = std::string(corpus_text.substr(r.begin, r.end - r.begin));
        c.source_path = std::string(source_path);
        c.token_count = count(r);
        chunks.push_back(std::move(c));
    };

    detail::ByteRange current{units.front().begin, units.front().begin};
    for (const auto& unit : units) {
        const detail::ByteRange candidate{current.begin, unit.end};
        if (current.end == current.begin || count(candidate) <= max_tokens) {
            current = candidate;
        } else {
            emit(current);
            current = unit;
        }
    }
    emit(current);

    // A leading whitespace-only or token-free chunk can only arise from a
    // tokenizer that emits nothing for some text; fold it into its successor.
    for (std::size_t i = 0; i + 1 < chunks.size();) {
        if (chunks[i].token_count == 0) {
            chunks[i + 1].text = chunks[i].text + chunks[i + 1].text;
            chunks.erase(chunks.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
            ++i;
        }
    }
    for (std::size_t i = 0; i < chunks.size(); ++i) chunks[i].id = std::string(doc_id) + "#" + std::to_string(i);
    return chunks;
}

template <Tokenizer Tok = SimpleTokenizer>
std::vector<Chunk> chunk_documents(const std::vector<SourceDocument>& docs, std::size_t max_tokens,
                                   const Tok& tokenizer = {}) {
    std::vector<Chunk> out;
    for (const auto& doc : docs) {
        if (doc.text.find_first_not_of(" \t\n\r\f\v") == std::string::npos) {
            logger()->warn("document '{}' is empty; skipped", doc.id);
            continue;
        }
        auto chunks = chunk_corpus(doc.text, max_tokens, tokenizer, doc.id, doc.source_path);
        std::move(chunks.begin(), chunks.end(), std::back_inserter(out));
    }
    if (out.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus contains no non-whitespace text");
    return out;
}

/// Load a directory of `.txt` files (sorted by name, id = file stem) or a
/// JSON-lines file of `{"id","text"}` records.
inline std::vector<SourceDocument> load_corpus(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    std::vector<SourceDocument> docs;
    const auto read_file = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + p.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            auto text = read_file(f);
            if (!is_valid_utf8(text)) throw Error(ErrorCode::MalformedInput, f.string() + " is not valid UTF-8");
            docs.push_back({f.stem().string(), std::move(text), f.filename().string()});
        }
    } else if (fs::is_regular_file(path)) {
        std::istringstream lines(read_file(path));
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(lines, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                SourceDocument d{j.at("id").get<std::string>(), j.at("text").get<std::string>(),
                                 path.filename().string()};
                if (!is_valid_utf8(d.text)) throw Error(ErrorCode::MalformedInput, "record text is not valid UTF-8");
                docs.push_back(std::move(d));
            } catch (const nlohmann::json::exception& ex) {
                throw Error(ErrorCode::MalformedInput,
                            path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
            }
        }
    } else {
        throw Error(ErrorCode::InvalidArgument, "corpus path does not exist: " + path.string());
    }
    std::set<std::string> ids;
    for (const auto& d : docs)
        if (!ids.insert(d.id).second) throw Error(ErrorCode::MalformedInput, "duplicate document id " + d.id);
    return docs;
}

inline std::string corpus_hash(const std::vector<SourceDocument>& docs) {
    std::uint64_t h = kFnvOffset;
    for (const auto& d : docs) {
        h = fnv1a64(d.id, h);
        h = fnv1a64(std::string_view("\0", 1), h);
        h = fnv1a64(d.text, h);
        h = fnv1a64(std::string_view("\0", 1), h);
    }
    return to_hex(h);
}

// ---------------------------------------------------------------------------
// Extraction wire format
// ---------------------------------------------------------------------------

struct ExtractedEntity {
    std::string name;
    std::string type;
    std::string summary;
};

struct ExtractedRelation {
    std::string source;
    std::string target;
    std::string summary;
};

struct ExtractionRecord {
    std::string chunk_id;
    std::vector<ExtractedEntity> entities;
    std::vector<ExtractedRelation> relations;
    std::vector<std::string> keywords;
    std::size_t skipped_lines = 0;
};

inline constexpr std::string_view kRecordDelimiter = "##";
inline constexpr std::string_view kFieldDelimiter = "<|>";
inline constexpr std::string_view kCompletionMarker = "<|COMPLETE|>";

namespace detail {

inline std::string clean_field(std::string_view f) {
    std::string s = trim(f);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = trim(std::string_view(s).substr(1, s.size() - 2));
    return s;
}

inline std::vector<std::string> split_fields(std::string_view body) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        const auto next = body.find(kFieldDelimiter, pos);
        fields.push_back(clean_field(body.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + kFieldDelimiter.size();
    }
    return fields;
}

// Records inside one segment may be separated by newlines: a line starting
// with '(' after a line ending with ')' starts a new record.
inline std::vector<std::string> split_records(std::string_view segment) {
    std::vector<std::string> records;
    std::string current;
    std::size_t pos = 0;
    while (pos <= segment.size()) {
        const auto nl = segment.find('\n', pos);
        const auto line = segment.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        const auto tline = trim(line);
        const auto tcur = trim(current);
        if (!tline.empty() && tline.front() == '(' && !tcur.empty() && tcur.back() == ')') {
            records.push_back(tcur);
            current.clear();
        }
        if (!current.empty()) current.push_back('\n');
        current.append(line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    if (!trim(current).empty()) records.push_back(trim(current));
    return records;
}

} // namespace detail

/// Total parser for the `##`-delimited extraction format. Malformed records are
/// counted in `skipped_lines`; whitespace-only segments are ignored.
inline ExtractionRecord parse_extraction(std::string_view raw) {
    ExtractionRecord out;
    const std::string text = replace_all(std::string(raw), kCompletionMarker, "\n");
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto next = text.find(kRecordDelimiter, pos);
        const std::string_view segment =
            std::string_view(text).substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        for (const auto& record : detail::split_records(segment)) {
            if (record.size() < 2 || record.front() != '(' || record.back() != ')') {
                ++out.skipped_lines;
                continue;
            }
            const auto fields = detail::split_fields(std::string_view(record).substr(1, record.size() - 2));
            const std::string kind = fields.empty() ? std::string{} : nfc_casefold(fields[0]);
            if (kind == "entity" && fields.size() == 4 && !fields[1].empty() && is_entity_type(nfc_casefold(fields[2]))) {
                out.entities.push_back({fields[1], nfc_casefold(fields[2]), fields[3]});
            } else if (kind == "relationship" && fields.size() == 4 && !fields[1].empty() && !fields[2].empty()) {
                out.relations.push_back({fields[1], fields[2], fields[3]});
            } else if (kind == "content_keywords" && fields.size() == 2 && !fields[1].empty()) {
                out.keywords.push_back(fields[1]);
            } else {
                ++out.skipped_lines;
            }
        }
        if (next == std::string::npos) break;
        pos = next + kRecordDelimiter.size();
    }
    return out;
}

inline ChatRequest extraction_request(const Chunk& chunk) {
    ChatRequest r;
    r.user_prompt = prompts::fill_template(prompts::kExtraction, std::pair{"input_text", trim(chunk.text)});
    r.temperature = kSynthesisTemperature;
    r.max_tokens = 4096;
    r.tag = "extract:" + chunk.id;
    return r;
}

inline ExtractionRecord extract_chunk(const Chunk& chunk, const Gateway& gateway) {
    auto record = parse_extraction(gateway.complete(extraction_request(chunk)).text);
    record.chunk_id = chunk.id;
    if (record.skipped_lines > 0)
        logger()->warn("chunk {}: skipped {} malformed extraction records", chunk.id, record.skipped_lines);
    return record;
}

/// Extract every chunk through the gateway's bounded batch; the first failure propagates.
inline std::vector<ExtractionRecord> extract_chunks(const std::vector<Chunk>& chunks, const Gateway& gateway) {
    if (chunks.empty()) return {};
    std::vector<ChatRequest> requests;
    requests.reserve(chunks.size());
    for (const auto& c : chunks) requests.push_back(extraction_request(c));
    const auto outcomes = gateway.complete_batch(requests);
    std::vector<ExtractionRecord> records;
    records.reserve(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        auto rec = parse_extraction(value_or_throw(outcomes[i]).text);
        rec.chunk_id = chunks[i].id;
        if (rec.skipped_lines > 0)
            logger()->warn("chunk {}: skipped {} malformed extraction records", chunks[i].id, rec.skipped_lines);
        records.push_back(std::move(rec));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Knowledge graph
// ---------------------------------------------------------------------------

struct SourcedText {
    std::string chunk_id;
    std::string text;
    friend auto operator<=>(const SourcedText&, const SourcedText&) = default;
};

struct Entity {
    std::string name;          // normalized merge key
    std::string display_name;  // most frequent surface form
    std::string entity_type;
    std::vector<SourcedText> summaries;
    std::vector<SourcedText> type_observations;
    bool conflict_flag = false;
    bool placeholder = false;

    [[nodiscard]] std::set<std::string> source_chunks() const {
        std::set<std::string> out;
        for (const auto& s : summaries) out.insert(s.chunk_id);
        for (const auto& s : type_observations) out.insert(s.chunk_id);
        return out;
    }

    /// Distinct non-empty summary texts joined in sorted order.
    [[nodiscard]] std::string merged_summary() const {
        std::set<std::string> texts;
        for (const auto& s : summaries)
            if (!trim(s.text).empty()) texts.insert(trim(s.text));
        std::string out;
        for (const auto& t : texts) out += (out.empty() ? "" : " ") + t;
        return out;
    }
};

struct Relation {
    std::string source;  // lexicographically smaller endpoint key
    std::string target;
    std::vector<SourcedText> summaries;

    [[nodiscard]] std::string merged_summary() const {
        std::set<std::string> texts;
        for (const auto& s : summaries)
            if (!trim(s.text).empty()) texts.insert(trim(s.text));
        std::string out;
        for (const auto& t : texts) out += (out.empty() ? "" : " ") + t;
        return out;
    }
};

struct KgMeta {
    std::string created_at;
    std::string corpus_hash;
    std::size_t chunk_count = 0;
};

using RelationKey = std::pair<std::string, std::string>;

inline RelationKey relation_key(const std::string& a, const std::string& b) {
    return a < b ? RelationKey{a, b} : RelationKey{b, a};
}

struct KnowledgeGraph {
    std::map<std::string, Entity> entities;
    std::map<RelationKey, Relation> relations;
    std::vector<SourcedText> content_keywords;
    KgMeta meta;

    /// Sorted neighbor lists keyed by entity name.
    [[nodiscard]] std::map<std::string, std::vector<std::string>> adjacency() const {
        std::map<std::string, std::vector<std::string>> adj;
        for (const auto& [name, _] : entities) adj[name];
        for (const auto& [key, _] : relations) {
            adj[key.first].push_back(key.second);
            adj[key.second].push_back(key.first);
        }
        for (auto& [_, n] : adj) std::sort(n.begin(), n.end());
        return adj;
    }

    [[nodiscard]] const Relation* find_relation(const std::string& a, const std::string& b) const {
        auto it = relations.find(relation_key(a, b));
        return it == relations.end() ? nullptr : &it->second;
    }

    /// Throws MalformedInput if any relation endpoint is missing or a self-loop.
    void check_integrity() const {
        for (const auto& [key, rel] : relations) {
            if (key.first == key.second) throw Error(ErrorCode::MalformedInput, "self-loop relation on " + key.first);
            if (!entities.contains(key.first) || !entities.contains(key.second))
                throw Error(ErrorCode::MalformedInput,
                            "relation endpoint missing: " + key.first + " -- " + key.second);
        }
    }
};

/// Merge per-chunk records into one graph. The result does not depend on record order.
inline KnowledgeGraph merge(const std::vector<ExtractionRecord>& records) {
    struct Accum {
        std::vector<SourcedText> summaries;
        std::vector<SourcedText> types;
        std::map<std::string, std::size_t> surface_forms;
    };
    std::map<std::string, Accum> acc;
    std::map<std::string, std::map<std::string, std::size_t>> endpoint_forms;
    std::map<RelationKey, std::vector<SourcedText>> rel_acc;
    std::map<RelationKey, std::set<std::string>> rel_chunks;
    KnowledgeGraph kg;

    for (const auto& rec : records) {
        for (const auto& e : rec.entities) {
            const auto key = normalize_name(e.name);
            if (key.empty()) continue;
            auto& a = acc[key];
            a.summaries.push_back({rec.chunk_id, e.summary});
            a.types.push_back({rec.chunk_id, e.type});
            ++a.surface_forms[trim(e.name)];
        }
        for (const auto& r : rec.relations) {
            const auto src = normalize_name(r.source);
            const auto tgt = normalize_name(r.target);
            if (src.empty() || tgt.empty()) continue;
            if (src == tgt) {
                logger()->warn("dropping self-loop relation on '{}' (chunk {})", src, rec.chunk_id);
                continue;
            }
            const auto key = relation_key(src, tgt);
            rel_acc[key].push_back({rec.chunk_id, r.summary});
            rel_chunks[key].insert(rec.chunk_id);
            ++endpoint_forms[src][trim(r.source)];
            ++endpoint_forms[tgt][trim(r.target)];
        }
        for (const auto& kw : rec.keywords) kg.content_keywords.push_back({rec.chunk_id, kw});
    }

    const auto pick_form = [](const std::map<std::string, std::size_t>& forms) {
        std::string best;
        std::size_t best_count = 0;
        for (const auto& [form, count] : forms) // map order gives the lexicographic tie-break
            if (count > best_count) best = form, best_count = count;
        return best;
    };

    for (auto& [key, a] : acc) {
        Entity e;
        e.name = key;
        e.display_name = pick_form(a.surface_forms);
        std::sort(a.summaries.begin(), a.summaries.end());
        std::sort(a.types.begin(), a.types.end());
        std::map<std::string, std::size_t> type_counts;
        for (const auto& t : a.types) ++type_counts[t.text];
        e.entity_type = pick_form(type_counts);
        e.conflict_flag = type_counts.size() >= 2;
        e.summaries = std::move(a.summaries);
        e.type_observations = std::move(a.types);
        kg.entities.emplace(key, std::move(e));
    }

    for (auto& [key, summaries] : rel_acc) {
        for (const auto* endpoint : {&key.first, &key.second}) {
            if (kg.entities.contains(*endpoint)) continue;
            Entity p;
            p.name = *endpoint;
            p.display_name = pick_form(endpoint_forms[*endpoint]);
            p.entity_type = "keyword";
            p.placeholder = true;
            kg.entities.emplace(*endpoint, std::move(p));
        }
        for (const auto* endpoint : {&key.first, &key.second}) {
            auto& e = kg.entities.at(*endpoint);
            if (!e.placeholder) continue;
            for (const auto& chunk : rel_chunks[key]) e.summaries.push_back({chunk, ""});
        }
        std::sort(summaries.begin(), summaries.end());
        kg.relations.emplace(key, Relation{key.first, key.second, std::move(summaries)});
    }
    for (auto& [_, e] : kg.entities) {
        if (!e.placeholder) continue;
        std::sort(e.summaries.begin(), e.summaries.end());
        e.summaries.erase(std::unique(e.summaries.begin(), e.summaries.end()), e.summaries.end());
    }
    std::sort(kg.content_keywords.begin(), kg.content_keywords.end());
    std::set<std::string> chunk_ids;
    for (const auto& rec : records) chunk_ids.insert(rec.chunk_id);
    kg.meta.chunk_count = chunk_ids.size();
    return kg;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

inline nlohmann::json sourced_to_json(const std::vector<SourcedText>& v, const char* text_key) {
    auto arr = nlohmann::json::array();
    for (const auto& s : v) arr.push_back({{"chunk_id", s.chunk_id}, {text_key, s.text}});
    return arr;
}

inline std::vector<SourcedText> sourced_from_json(const nlohmann::json& arr, const char* text_key) {
    std::vector<SourcedText> out;
    for (const auto& s : arr) out.push_back({s.at("chunk_id").get<std::string>(), s.at(text_key).get<std::string>()});
    return out;
}

inline nlohmann::json to_json(const KnowledgeGraph& kg) {
    nlohmann::json j;
    auto entities = nlohmann::json::array();
    for (const auto& [_, e] : kg.entities) {
        entities.push_back({{"name", e.name},
                            {"display_name", e.display_name},
                            {"entity_type", e.entity_type},
                            {"summaries", sourced_to_json(e.summaries, "text")},
                            {"type_observations", sourced_to_json(e.type_observations, "type")},
                            {"conflict_flag", e.conflict_flag},
                            {"placeholder", e.placeholder}});
    }
    auto relations = nlohmann::json::array();
    for (const auto& [_, r] : kg.relations)
        relations.push_back({{"source", r.source}, {"target", r.target}, {"summaries", sourced_to_json(r.summaries, "text")}});
    j["entities"] = std::move(entities);
    j["relations"] = std::move(relations);
    j["content_keywords"] = sourced_to_json(kg.content_keywords, "keywords");
    j["meta"] = {{"created_at", kg.meta.created_at},
                 {"corpus_hash", kg.meta.corpus_hash},
                 {"chunk_count", kg.meta.chunk_count}};
    return j;
}

inline KnowledgeGraph kg_from_json(const nlohmann::json& j) {
    KnowledgeGraph kg;
    try {
        for (const auto& je : j.at("entities")) {
            Entity e;
            e.name = je.at("name").get<std::string>();
            e.display_name = je.value("display_name", e.name);
            e.entity_type = je.at("entity_type").get<std::string>();
            e.summaries = sourced_from_json(je.at("summaries"), "text");
            e.type_observations = sourced_from_json(je.value("type_observations", nlohmann::json::array()), "type");
            e.conflict_flag = je.value("conflict_flag", false);
            e.placeholder = je.value("placeholder", false);
            if (e.name.empty()) throw Error(ErrorCode::MalformedInput, "entity with empty name");
            const auto key = e.name;
            if (!kg.entities.emplace(key, std::move(e)).second)
                throw Error(ErrorCode::MalformedInput, "duplicate entity " + key);
        }
        for (const auto& jr : j.at("relations")) {
            Relation r;
            r.source = jr.at("source").get<std::string>();
            r.target = jr.at("target").get<std::string>();
            r.summaries = sourced_from_json(jr.at("summaries"), "text");
            auto key = relation_key(r.source, r.target);
            r.source = key.first;
            r.target = key.second;
            if (!kg.relations.emplace(key, std::move(r)).second)
                throw Error(ErrorCode::MalformedInput, "duplicate relation " + key.first + " -- " + key.second);
        }
        kg.content_keywords = sourced_from_json(j.value("content_keywords", nlohmann::json::array()), "keywords");
        if (j.contains("meta")) {
            const auto& m = j.at("meta");
            kg.meta.created_at = m.value("created_at", std::string{});
            kg.meta.corpus_hash = m.value("corpus_hash", std::string{});
            kg.meta.chunk_count = m.value("chunk_count", std::size_t{0});
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::MalformedInput, std::string("knowledge graph JSON: ") + ex.what());
    }
    kg.check_integrity();
    return kg;
}

inline std::string serialize(const KnowledgeGraph& kg) { return to_json(kg).dump(2) + "\n"; }

inline KnowledgeGraph load_kg(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open knowledge graph " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::MalformedInput, path.string() + ": " + ex.what());
    }
    return kg_from_json(j);
}

} // namespace k2v
