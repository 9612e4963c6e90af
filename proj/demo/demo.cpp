// Walks the mini corpus through the whole toolkit with the scripted mock gateway.
// Usage: k2v_demo [data-dir]   (defaults to ./data)

#include <cstdio>
#include <filesystem>

#include "k2v/k2v.hpp"

using namespace k2v;

int main(int argc, char** argv) {
    const std::filesystem::path data = argc > 1 ? argv[1] : "data";
    try {
        GatewayConfig cfg;
        cfg.mode = GatewayMode::Mock;
        const Gateway gateway(cfg, MockScript::load((data / "mini_mock_script.json").string()));

        const auto built = build_kg(data / "mini_corpus", gateway);
        const auto quality = graph_quality(built.kg);
        std::printf("graph: %zu entities, %zu relations, lcc %.3f, noise %.3f\n", built.kg.entities.size(),
                    built.kg.relations.size(), quality.lcc_ratio, quality.noise_ratio);

        const auto qa = synth_dataset(built.kg, {4, 7, "medicine"}, gateway).pairs;
        const auto pairs = synth_checklists(qa, load_general_criteria("medicine"), gateway).pairs;
        const auto& first = pairs.front();
        std::printf("\n%s\n  Q: %s\n  A: %s\n  checklist:\n", first.id.c_str(), first.question.c_str(), first.answer.c_str());
        for (const auto& c : first.checklist->criteria) std::printf("   - %s\n", c.c_str());

        const auto item = scoring_item(first);
        const std::string reasoning = "The blank sits between the two named entities, so it must link them.";
        for (const auto& answer : {first.answer, std::string("Something Else")}) {
            const auto response = "<think>" + reasoning + "</think>\n<answer>" + answer + "</answer>";
            for (const auto mode : {RewardMode::Full, RewardMode::NoGate}) {
                const auto r = total_reward(response, item, gateway, {kDefaultAlpha, mode, 1});
                std::printf("answer %-16s mode %-8s format %.2f answer %.2f reasoning %.2f total %.2f\n", answer.c_str(),
                            std::string(to_string(mode)).c_str(), r.format_reward, r.answer_reward, r.reasoning_reward, r.total);
            }
        }

        std::vector<std::string> train;
        for (const auto& p : pairs) train.push_back(p.question);
        const std::vector<BenchSample> bench = {{"copied", pairs.back().question}, {"fresh", "How do volcanoes form island arcs?"}};
        for (const std::size_t n : {4, 8, 30}) {
            const auto leak = ngram_leak_check(train, bench, n);
            std::printf("leakage n=%-2zu %zu of %zu benchmark samples overlap\n", n, leak.leaked_count, leak.total_samples);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 0;
}
