#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"

using namespace k2v;

namespace {

// 99 words and a full stop: exactly 100 tokens under the default tokenizer.
std::string hundred_token_paragraph(char tag) {
    std::string p;
    for (int i = 0; i < 99; ++i) p += std::string(1, tag) + std::to_string(i) + " ";
    p.back() = '.';
    return p;
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExtractionRecord record(std::string chunk, std::vector<ExtractedEntity> ents, std::vector<ExtractedRelation> rels = {}) {
    ExtractionRecord r;
    r.chunk_id = std::move(chunk);
    r.entities = std::move(ents);
    r.relations = std::move(rels);
    return r;
}

} // namespace

TEST(Chunking, ThreeParagraphsPackIntoTwoChunks) {
    const std::string text =
        hundred_token_paragraph('a') + "\n\n" + hundred_token_paragraph('b') + "\n\n" + hundred_token_paragraph('c');
    SimpleTokenizer tok;
    ASSERT_EQ(tok(hundred_token_paragraph('a')).size(), 100u);
    const auto chunks = chunk_corpus(text, 256);
    ASSERT_EQ(chunks.size(), 2u);
    EXPECT_EQ(chunks[0].token_count, 200u);
    EXPECT_EQ(chunks[1].token_count, 100u);
    EXPECT_EQ(chunks[0].id, "doc#0");
    EXPECT_EQ(chunks[1].id, "doc#1");
}

TEST(Chunking, SmallAndEmptyInputs) {
    EXPECT_EQ(chunk_corpus("one two three four five six seven eight nine ten", 256).size(), 1u);
    try {
        chunk_corpus(" \n\t ", 256);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
    }
    EXPECT_THROW(chunk_corpus("text", 0), Error);
    try {
        chunk_corpus("bad \xFF byte", 256);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedInput);
    }
}

TEST(Chunking, ConcatenationAndBoundOnRandomText) {
    Rng rng(21);
    const std::vector<std::string> pieces = {"word", "x", "Long-term", "\xE6\xB0\xB4", ",", ".", " ", " ", "\n", "\n\n", "!"};
    SimpleTokenizer tok;
    for (int round = 0; round < 150; ++round) {
        std::string text = "start ";
        const auto len = 1 + rng.below(600);
        for (std::uint64_t i = 0; i < len; ++i) text += pieces[rng.below(pieces.size())];
        const std::size_t max_tokens = 1 + rng.below(40);
        const auto chunks = chunk_corpus(text, max_tokens);
        std::string joined;
        for (const auto& c : chunks) {
            joined += c.text;
            ASSERT_LE(tok(c.text).size(), max_tokens);
            ASSERT_EQ(tok(c.text).size(), c.token_count);
        }
        ASSERT_EQ(joined, text) << "round " << round;
    }
}

TEST(Chunking, PrefersSentenceBoundaries) {
    const std::string text = "Alpha beta gamma. Delta epsilon zeta. Eta theta iota.";
    const auto chunks = chunk_corpus(text, 8);
    for (const auto& c : chunks) {
        const auto t = trim(c.text);
        EXPECT_EQ(t.back(), '.') << c.text;
    }
}

TEST(Corpus, LoadsDirectoryAndJsonLines) {
    const auto docs = load_corpus(testkit::data_dir() / "mini_corpus");
    ASSERT_EQ(docs.size(), 5u);
    EXPECT_EQ(docs.front().id, "01_trpv4");
    const auto chunks = chunk_documents(docs, kDefaultMaxChunkTokens);
    ASSERT_EQ(chunks.size(), 5u);
    EXPECT_EQ(chunks[2].id, "03_rice_blast#0");

    testkit::TempDir dir;
    {
        std::ofstream out(dir / "c.jsonl");
        out << R"({"id":"a","text":"First doc."})" << "\n\n" << R"({"id":"b","text":"Second doc."})" << "\n";
    }
    const auto jl = load_corpus(dir / "c.jsonl");
    ASSERT_EQ(jl.size(), 2u);
    EXPECT_EQ(jl[1].text, "Second doc.");
    EXPECT_NE(corpus_hash(docs), corpus_hash(jl));
    EXPECT_EQ(corpus_hash(docs), corpus_hash(load_corpus(testkit::data_dir() / "mini_corpus")));

    {
        std::ofstream out(dir / "dup.jsonl");
        out << R"({"id":"a","text":"x"})" << "\n" << R"({"id":"a","text":"y"})" << "\n";
    }
    EXPECT_THROW(load_corpus(dir / "dup.jsonl"), Error);
    {
        std::ofstream out(dir / "broken.jsonl");
        out << "{not json\n";
    }
    EXPECT_THROW(load_corpus(dir / "broken.jsonl"), Error);
    EXPECT_THROW(load_corpus(dir / "missing"), Error);
}

TEST(ParseExtraction, WireFormatExamples) {
    const auto a = parse_extraction(
        "(\"entity\"<|>TRPV4<|>gene<|>calcium channel)##(\"relationship\"<|>TRPV4<|>CMT2C<|>causal mutation)<|COMPLETE|>");
    ASSERT_EQ(a.entities.size(), 1u);
    EXPECT_EQ(a.entities[0].name, "TRPV4");
    EXPECT_EQ(a.entities[0].type, "gene");
    EXPECT_EQ(a.entities[0].summary, "calcium channel");
    ASSERT_EQ(a.relations.size(), 1u);
    EXPECT_EQ(a.relations[0].target, "CMT2C");
    EXPECT_EQ(a.skipped_lines, 0u);

    const auto b = parse_extraction("garbage##(\"entity\"<|>A<|>concept<|>s)");
    EXPECT_EQ(b.entities.size(), 1u);
    EXPECT_EQ(b.skipped_lines, 1u);

    const auto c = parse_extraction("(\"content_keywords\"<|>post-transcriptional control)");
    EXPECT_EQ(c.keywords, std::vector<std::string>{"post-transcriptional control"});
}

TEST(ParseExtraction, EmptyAndMarkerOnly) {
    for (const auto* raw : {"", "<|COMPLETE|>", "  \n##\n  "}) {
        const auto r = parse_extraction(raw);
        EXPECT_TRUE(r.entities.empty() && r.relations.empty() && r.keywords.empty());
        EXPECT_EQ(r.skipped_lines, 0u) << raw;
    }
}

TEST(ParseExtraction, FortySegmentFixture) {
    const auto r = parse_extraction(read_text(testkit::fixture_dir() / "extraction_40.txt"));
    EXPECT_EQ(r.entities.size(), 30u);
    EXPECT_EQ(r.relations.size(), 4u);
    EXPECT_EQ(r.keywords.size(), 2u);
    EXPECT_EQ(r.skipped_lines, 6u);
}

TEST(ParseExtraction, NeverThrowsOnRandomBytes) {
    Rng rng(99);
    const std::vector<std::string> atoms = {"(", ")", "\"entity\"", "\"relationship\"", "<|>", "##", "<|COMPLETE|>",
                                            "gene", "x", " ", "\n", "\xC3\xA9", "\"", "content_keywords"};
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        const auto len = rng.below(40);
        for (std::uint64_t k = 0; k < len; ++k) s += atoms[rng.below(atoms.size())];
        EXPECT_NO_THROW(parse_extraction(s));
    }
}

TEST(ExtractChunk, TagsRecordWithChunkId) {
    MockScript s;
    s.add_rule("Input Text", "(\"entity\"<|>TRPV4<|>gene<|>calcium channel)##(\"relationship\"<|>TRPV4<|>CMT2C<|>causal mutation)<|COMPLETE|>");
    Gateway g(testkit::mock_config(), s);
    const auto r = extract_chunk(Chunk{"doc#3", "TRPV4 text", "", 2}, g);
    EXPECT_EQ(r.chunk_id, "doc#3");
    EXPECT_EQ(r.entities.size(), 1u);
    EXPECT_EQ(r.relations.size(), 1u);

    MockScript empty;
    empty.set_default("");
    Gateway g2(testkit::mock_config(), empty);
    const auto e = extract_chunk(Chunk{"doc#0", "x", "", 1}, g2);
    EXPECT_TRUE(e.entities.empty());
    EXPECT_EQ(e.skipped_lines, 0u);
}

TEST(Merge, SameTypeTwiceIsOneEntity) {
    const auto kg = merge({record("a#0", {{"rice", "concept", "staple"}}), record("b#0", {{"Rice", "concept", "crop"}})});
    ASSERT_EQ(kg.entities.size(), 1u);
    const auto& e = kg.entities.at("rice");
    EXPECT_FALSE(e.conflict_flag);
    EXPECT_EQ(e.summaries.size(), 2u);
    EXPECT_EQ(e.entity_type, "concept");
}

TEST(Merge, TypeConflictTieBreaksLexicographically) {
    const auto kg = merge({record("a#0", {{"TRPV4", "gene", "channel"}}), record("b#0", {{"trpv4", "concept", "x"}})});
    const auto& e = kg.entities.at("trpv4");
    EXPECT_TRUE(e.conflict_flag);
    EXPECT_EQ(e.entity_type, "concept");
    EXPECT_EQ(e.display_name, "TRPV4");

    const auto modal = merge({record("a#0", {{"TRPV4", "gene", "a"}}), record("b#0", {{"TRPV4", "gene", "b"}}),
                              record("c#0", {{"TRPV4", "concept", "c"}})});
    EXPECT_EQ(modal.entities.at("trpv4").entity_type, "gene");
}

TEST(Merge, RelationsByUnorderedPairAndPlaceholders) {
    const auto kg = merge({record("a#0", {{"A", "concept", "s"}, {"B", "concept", "s"}}, {{"A", "B", "first"}}),
                           record("b#0", {}, {{"b", "a", "second"}, {"B", "Spinal Cord", "third"}, {"A", "a", "loop"}})});
    ASSERT_EQ(kg.relations.size(), 2u);
    EXPECT_EQ(kg.find_relation("a", "b")->summaries.size(), 2u);
    EXPECT_EQ(kg.find_relation("b", "a"), kg.find_relation("a", "b"));
    const auto& p = kg.entities.at("spinal cord");
    EXPECT_TRUE(p.placeholder);
    EXPECT_EQ(p.entity_type, "keyword");
    EXPECT_EQ(p.display_name, "Spinal Cord");
    EXPECT_EQ(p.merged_summary(), "");
    EXPECT_NO_THROW(kg.check_integrity());
    EXPECT_EQ(kg.meta.chunk_count, 2u);
}

TEST(Merge, OrderIndependentAndIntegrityHolds) {
    auto g = testkit::mini_gateway();
    const auto chunks = chunk_documents(load_corpus(testkit::data_dir() / "mini_corpus"), kDefaultMaxChunkTokens);
    auto records = extract_chunks(chunks, *g);
    const auto reference = serialize(merge(records));
    Rng rng(4);
    for (int i = 0; i < 25; ++i) {
        for (std::size_t k = records.size(); k > 1; --k) std::swap(records[k - 1], records[rng.below(k)]);
        const auto kg = merge(records);
        EXPECT_NO_THROW(kg.check_integrity());
        EXPECT_EQ(serialize(kg), reference);
    }
}

TEST(Merge, MiniCorpusShape) {
    auto g = testkit::mini_gateway();
    const auto built = build_kg(testkit::data_dir() / "mini_corpus", *g);
    EXPECT_EQ(built.kg.entities.size(), 17u);
    EXPECT_EQ(built.kg.relations.size(), 15u);
    EXPECT_TRUE(built.kg.entities.at("trpv4").conflict_flag);
    EXPECT_TRUE(built.kg.entities.at("spinal cord").placeholder);
    EXPECT_EQ(built.kg.meta.chunk_count, 5u);
}

TEST(KgJson, RoundTripIsByteStable) {
    auto g = testkit::mini_gateway();
    auto kg = build_kg(testkit::data_dir() / "mini_corpus", *g).kg;
    const auto text = serialize(kg);
    const auto back = kg_from_json(nlohmann::json::parse(text));
    EXPECT_EQ(serialize(back), text);

    testkit::TempDir dir;
    {
        std::ofstream out(dir / "kg.json");
        out << text;
    }
    EXPECT_EQ(serialize(load_kg(dir / "kg.json")), text);
}

TEST(KgJson, RejectsDanglingRelation) {
    auto j = to_json(testkit::star_graph());
    j["relations"].push_back({{"source", "hub"}, {"target", "nobody"}, {"summaries", nlohmann::json::array()}});
    try {
        kg_from_json(j);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedInput);
    }
}
