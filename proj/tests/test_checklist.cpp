#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"

using namespace k2v;

namespace {

QAPair dcml_pair() {
    QAPair qa;
    qa.id = "medicine-1-0";
    qa.question = "Fine touch from the lower body first synapses in the { }.";
    qa.answer = "Gracile Nucleus";
    qa.domain = "medicine";
    return qa;
}

std::unique_ptr<Gateway> scripted(std::vector<std::string> replies, std::atomic<int>* calls) {
    GatewayConfig c;
    c.mode = GatewayMode::Live;
    c.max_in_flight = 1;
    auto shared = std::make_shared<std::vector<std::string>>(std::move(replies));
    return std::make_unique<Gateway>(c, std::nullopt, std::make_shared<testkit::FnTransport>([shared, calls](const ChatRequest&) {
                                         const auto i = static_cast<std::size_t>((*calls)++);
                                         return (*shared)[std::min(i, shared->size() - 1)];
                                     }));
}

std::unique_ptr<Gateway> by_dimension(std::map<std::string, std::string> replies) {
    GatewayConfig c;
    c.mode = GatewayMode::Live;
    c.max_in_flight = 1;
    return std::make_unique<Gateway>(c, std::nullopt, std::make_shared<testkit::FnTransport>([replies](const ChatRequest& r) {
                                         for (const auto& [dim, reply] : replies)
                                             if (r.tag == "quality:" + dim) return reply;
                                         return std::string("?");
                                     }));
}

template <class T>
ErrorCode error_code(const std::variant<T, Error>& v) {
    return std::get<Error>(v).code();
}

} // namespace

TEST(Criteria, BundledRegistries) {
    const auto ag = load_general_criteria("agriculture");
    EXPECT_EQ(ag.groups.size(), 5u);
    EXPECT_EQ(ag.criteria_count(), 22u);
    const std::vector<std::string> names = {"Concepts and Knowledge", "Scientific Method and Design",
                                            "Data Processing and Analysis", "Statistics and Evaluation",
                                            "Argumentation and Reasoning"};
    for (std::size_t i = 0; i < names.size(); ++i) EXPECT_EQ(ag.groups[i].name, names[i]);
    EXPECT_EQ(load_general_criteria("medicine").criteria_count(), 25u);
    const auto law = load_general_criteria("law");
    EXPECT_EQ(law.criteria_count(), 20u);
    EXPECT_TRUE(std::any_of(law.groups.begin(), law.groups.end(),
                            [](const CriteriaGroup& g) { return g.name == "Fact and Issue Identification"; }));
}

TEST(Criteria, UnknownAndMalformed) {
    try {
        load_general_criteria("astrology");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownDomain);
    }
    testkit::TempDir dir;
    const auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream(dir / name) << body;
        return (dir / name).string();
    };
    for (const auto& body : {std::string("{not json"), std::string(R"({"domain":"x","groups":[]})"),
                             std::string(R"({"domain":"x","groups":[{"name":"g","criteria":[]}]})"),
                             std::string(R"({"domain":"x","groups":[{"name":"g","criteria":["  "]}]})"),
                             std::string(R"({"groups":[{"name":"g","criteria":["a"]}]})")}) {
        try {
            load_general_criteria(write("bad.json", body));
            FAIL() << body;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::MalformedCriteriaFile) << body;
        }
    }
    const auto custom = load_general_criteria(write("ok.json", R"({"domain":"geo","groups":[{"name":"Maps","criteria":["a","b"]}]})"));
    EXPECT_EQ(custom.field, "geo");
    EXPECT_EQ(custom.criteria_count(), 2u);
}

TEST(Criteria, RegistryRoundTrip) {
    for (const auto* d : {"agriculture", "medicine", "law"}) {
        const auto g = load_general_criteria(d);
        EXPECT_EQ(criteria_from_json(nlohmann::json::parse(to_json(g).dump())), g) << d;
    }
}

TEST(Criteria, PromptInlinesQuestionAnswerAndCriteria) {
    const auto g = load_general_criteria("agriculture");
    const auto r = checklist_request(dcml_pair(), g);
    EXPECT_NE(r.user_prompt.find(dcml_pair().question), std::string::npos);
    EXPECT_NE(r.user_prompt.find("Gracile Nucleus"), std::string::npos);
    EXPECT_NE(r.user_prompt.find("Concepts and Knowledge:\n1. "), std::string::npos);
    EXPECT_EQ(r.user_prompt.find("{general_criteria}"), std::string::npos);
}

TEST(ChecklistParse, AcceptsArraysFencesAndTrailingComma) {
    const auto a = parse_checklist_output(
        R"(["States the DCML pathway ascends ipsilaterally","Identifies the gracile nucleus for lower-body input"])");
    ASSERT_TRUE(std::holds_alternative<std::vector<std::string>>(a));
    EXPECT_EQ(std::get<0>(a).size(), 2u);
    EXPECT_EQ(std::get<0>(a)[0], "States the DCML pathway ascends ipsilaterally");

    const auto fenced = parse_checklist_output("```json\n[\"a\", \"b\",]\n```");
    ASSERT_TRUE(std::holds_alternative<std::vector<std::string>>(fenced));
    EXPECT_EQ(std::get<0>(fenced), (std::vector<std::string>{"a", "b"}));
}

TEST(ChecklistParse, RejectsNonArraysAndEmpty) {
    EXPECT_EQ(error_code(parse_checklist_output("{}")), ErrorCode::MalformedChecklistOutput);
    EXPECT_EQ(error_code(parse_checklist_output("[1, 2]")), ErrorCode::MalformedChecklistOutput);
    EXPECT_EQ(error_code(parse_checklist_output("[\"a\", \" \"]")), ErrorCode::MalformedChecklistOutput);
    EXPECT_EQ(error_code(parse_checklist_output("prose")), ErrorCode::MalformedChecklistOutput);
    EXPECT_EQ(error_code(parse_checklist_output("[]")), ErrorCode::EmptyChecklist);
}

TEST(ChecklistParse, TruncatesAboveTwenty) {
    auto arr = nlohmann::json::array();
    for (int i = 0; i < 25; ++i) arr.push_back("criterion " + std::to_string(i));
    const auto out = parse_checklist_output(arr.dump());
    ASSERT_TRUE(std::holds_alternative<std::vector<std::string>>(out));
    EXPECT_EQ(std::get<0>(out).size(), 20u);
    EXPECT_EQ(std::get<0>(out).back(), "criterion 19");
}

TEST(Instantiate, ReturnsVerbatimCriteria) {
    std::atomic<int> calls{0};
    auto g = scripted({R"(["  Keeps   spacing ", "Second"])"}, &calls);
    const auto c = instantiate_checklist(dcml_pair(), load_general_criteria("medicine"), *g);
    EXPECT_EQ(c.question_id, "medicine-1-0");
    EXPECT_EQ(c.criteria, (std::vector<std::string>{"  Keeps   spacing ", "Second"}));
    EXPECT_EQ(calls.load(), 1);
}

TEST(Instantiate, RetriesMalformedOnceThenThrows) {
    std::atomic<int> calls{0};
    auto g = scripted({"{}"}, &calls);
    try {
        instantiate_checklist(dcml_pair(), load_general_criteria("medicine"), *g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedChecklistOutput);
    }
    EXPECT_EQ(calls.load(), 2);

    calls = 0;
    auto recovers = scripted({"oops", R"(["ok"])"}, &calls);
    EXPECT_EQ(instantiate_checklist(dcml_pair(), load_general_criteria("medicine"), *recovers).criteria.size(), 1u);

    calls = 0;
    auto empty = scripted({"[]"}, &calls);
    try {
        instantiate_checklist(dcml_pair(), load_general_criteria("medicine"), *empty);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyChecklist);
    }
    EXPECT_EQ(calls.load(), 1);
}

TEST(Instantiate, BatchDropsFailuresAndKeepsOrder) {
    GatewayConfig c;
    c.mode = GatewayMode::Live;
    c.max_in_flight = 3;
    Gateway g(c, std::nullopt, std::make_shared<testkit::FnTransport>([](const ChatRequest& r) {
                  if (r.tag == "checklist:q-1") return std::string("[]");
                  if (r.tag == "checklist:q-3") return std::string("not json");
                  return "[\"" + r.tag + "\"]";
              }));
    std::vector<QAPair> pairs;
    for (int i = 0; i < 5; ++i) {
        auto qa = dcml_pair();
        qa.id = "q-" + std::to_string(i);
        pairs.push_back(qa);
    }
    const auto out = synth_checklists(pairs, load_general_criteria("law"), g);
    ASSERT_EQ(out.pairs.size(), 3u);
    EXPECT_EQ(out.pairs[0].id, "q-0");
    EXPECT_EQ(out.pairs[2].id, "q-4");
    EXPECT_EQ(out.pairs[1].checklist->criteria, std::vector<std::string>{"checklist:q-2"});
    ASSERT_EQ(out.failures.size(), 2u);
    EXPECT_EQ(out.failures[0].reason, ErrorCode::EmptyChecklist);
    EXPECT_EQ(out.failures[1].reason, ErrorCode::MalformedChecklistOutput);
}

TEST(Quality, ScoresPerDimension) {
    const Checklist c{"medicine-1-0", {"a", "b"}};
    const auto q = assess_checklist(c, dcml_pair(), *by_dimension({{"Relevance", "5"}, {"Verifiability", "4"}, {"Necessity", "5"}}));
    EXPECT_EQ(q.relevance, 5.0);
    EXPECT_EQ(q.verifiability, 4.0);
    EXPECT_EQ(q.necessity, 5.0);

    const auto precise =
        assess_checklist(c, dcml_pair(), *by_dimension({{"Relevance", "4.37"}, {"Verifiability", "Score: 9"}, {"Necessity", "0"}}));
    EXPECT_DOUBLE_EQ(precise.relevance, 4.37);
    EXPECT_EQ(precise.verifiability, 5.0);
    EXPECT_EQ(precise.necessity, 1.0);
}

TEST(Quality, UnparseableAndEmpty) {
    const Checklist c{"medicine-1-0", {"a"}};
    try {
        assess_checklist(c, dcml_pair(), *by_dimension({{"Relevance", "great"}, {"Verifiability", "4"}, {"Necessity", "5"}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnparseableScore);
    }
    EXPECT_THROW(assess_checklist(Checklist{"x", {}}, dcml_pair(), *testkit::judge_gateway()), Error);
}

TEST(Quality, MiniScriptScoresFour) {
    const Checklist c{"medicine-1-0", {"a", "b"}};
    const auto q = assess_checklist(c, dcml_pair(), *testkit::mini_gateway());
    EXPECT_EQ(q.relevance, 4.0);
    EXPECT_EQ(q.verifiability, 4.0);
    EXPECT_EQ(q.necessity, 4.0);
}
