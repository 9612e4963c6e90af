#pragma once

// Helpers shared by the unit tests and the acceptance binary. The oracles here
// are written independently of the library code they check.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "k2v/k2v.hpp"

namespace k2v::testkit {

inline std::filesystem::path data_dir() { return K2V_DATA_DIR; }
inline std::filesystem::path golden_dir() { return K2V_GOLDEN_DIR; }
inline std::filesystem::path fixture_dir() { return K2V_FIXTURE_DIR; }
inline std::filesystem::path cli_path() { return K2V_CLI_PATH; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("k2v-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Answers every request from a function; lets tests run the gateway's live path without sockets.
class FnTransport : public Transport {
public:
    explicit FnTransport(std::function<std::string(const ChatRequest&)> fn) : fn_(std::move(fn)) {}
    std::string post(const ChatRequest& request, const GatewayConfig&) override { return fn_(request); }

private:
    std::function<std::string(const ChatRequest&)> fn_;
};

/// Criteria whose text carries the judge's reply after "=> ", so one rule serves any verdict vector.
inline std::string criterion_with_reply(std::size_t i, std::string_view reply) {
    return "Criterion number " + std::to_string(i) + " is satisfied => " + std::string(reply);
}

inline std::vector<std::string> criteria_for(const std::vector<int>& verdicts) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < verdicts.size(); ++i) out.push_back(criterion_with_reply(i, verdicts[i] ? "yes" : "NO"));
    return out;
}

/// Judge reply encoded in the criterion line of the judge prompt.
inline std::string judge_reply_from_prompt(const std::string& prompt) {
    const auto at = prompt.find("criterion: ");
    if (at == std::string::npos) return "unexpected prompt";
    const auto arrow = prompt.find("=> ", at);
    const auto eol = prompt.find('\n', at);
    if (arrow == std::string::npos || arrow > eol) return "unexpected prompt";
    return prompt.substr(arrow + 3, eol - arrow - 3);
}

inline MockScript judge_mock_script() {
    MockScript s;
    s.add_rule("criterion: [^\\n]*=> ([^\\n]*)", "$1");
    return s;
}

inline GatewayConfig mock_config(int max_in_flight = 4) {
    GatewayConfig c;
    c.mode = GatewayMode::Mock;
    c.max_in_flight = max_in_flight;
    return c;
}

/// Mock-mode gateway that answers judge prompts from the criterion text.
inline std::unique_ptr<Gateway> judge_gateway(int max_in_flight = 4) {
    return std::make_unique<Gateway>(mock_config(max_in_flight), judge_mock_script());
}

/// Live-mode gateway over FnTransport answering judge prompts; fast path for large property runs.
inline std::unique_ptr<Gateway> fast_judge_gateway() {
    GatewayConfig c;
    c.mode = GatewayMode::Live;
    c.max_in_flight = 1;
    return std::make_unique<Gateway>(
        c, std::nullopt, std::make_shared<FnTransport>([](const ChatRequest& r) { return judge_reply_from_prompt(r.user_prompt); }));
}

inline std::unique_ptr<Gateway> mini_gateway(int max_in_flight = 4) {
    return std::make_unique<Gateway>(mock_config(max_in_flight), MockScript::load((data_dir() / "mini_mock_script.json").string()));
}

inline std::string strict_response(std::string_view think, std::string_view answer) {
    return "<think>" + std::string(think) + "</think>\n<answer>" + std::string(answer) + "</answer>";
}

// ---------------------------------------------------------------------------
// Graph builders
// ---------------------------------------------------------------------------

inline Entity make_entity(const std::string& name, const std::string& type = "concept",
                          const std::vector<std::string>& chunks = {"c#0"}) {
    Entity e;
    e.name = normalize_name(name);
    e.display_name = name;
    e.entity_type = type;
    for (const auto& c : chunks) {
        e.summaries.push_back({c, name + " summary"});
        e.type_observations.push_back({c, type});
    }
    return e;
}

/// Graph over entities "n0".."n{count-1}" with the given undirected edges.
inline KnowledgeGraph graph_from_edges(std::size_t count, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    KnowledgeGraph kg;
    for (std::size_t i = 0; i < count; ++i) {
        auto e = make_entity("n" + std::to_string(i));
        kg.entities.emplace(e.name, e);
    }
    for (const auto& [a, b] : edges) {
        if (a == b) continue;
        const auto key = relation_key("n" + std::to_string(a), "n" + std::to_string(b));
        Relation r{key.first, key.second, {{"c#0", key.first + " to " + key.second}}};
        kg.relations.emplace(key, r);
    }
    return kg;
}

/// A center linked to three leaves: exactly three two-edge paths, all through the center.
inline KnowledgeGraph star_graph() {
    KnowledgeGraph kg;
    for (const auto* n : {"Hub", "Alpha", "Beta", "Gamma"}) {
        auto e = make_entity(n);
        kg.entities.emplace(e.name, e);
    }
    for (const auto* leaf : {"alpha", "beta", "gamma"}) {
        const auto key = relation_key("hub", leaf);
        kg.relations.emplace(key, Relation{key.first, key.second, {{"c#0", std::string("hub links ") + leaf}}});
    }
    return kg;
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Reward written straight from the mode table, without the library's helpers.
inline double oracle_total(bool strict, bool correct, const std::vector<int>& verdicts, double alpha,
                           const std::string& mode) {
    double format = strict ? 0.75 : 0.0;
    double p = 0.0;
    if (!verdicts.empty()) {
        int s = 0;
        for (int v : verdicts) s += v;
        p = static_cast<double>(s) / static_cast<double>(verdicts.size());
    }
    double answer = 0.0;
    double reason = 0.0;
    if (mode == "full") {
        answer = correct ? alpha : 0.0;
        reason = correct ? p : 0.0;
    } else if (mode == "no_gate") {
        answer = correct ? alpha : 0.0;
        reason = p;
    } else if (mode == "answer_only") {
        answer = correct ? alpha : 0.0;
    } else if (mode == "reason_only") {
        reason = p;
    }
    return format + answer + reason;
}

/// Token strings from a whitespace+punctuation split, written with std::isspace/std::ispunct on ASCII text.
inline std::vector<std::string> ascii_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            if (!cur.empty()) out.push_back(cur), cur.clear();
        } else if (std::ispunct(c)) {
            if (!cur.empty()) out.push_back(cur), cur.clear();
            out.emplace_back(1, ch);
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

/// Sliding-window comparison of token vectors; no hashing.
inline std::vector<std::string> oracle_leaked(const std::vector<std::string>& train, const std::vector<BenchSample>& bench,
                                              std::size_t n) {
    std::vector<std::vector<std::string>> train_toks;
    for (const auto& t : train) train_toks.push_back(ascii_tokens(t));
    std::vector<std::string> leaked;
    for (const auto& s : bench) {
        const auto b = ascii_tokens(s.text);
        bool hit = false;
        for (std::size_t i = 0; !hit && i + n <= b.size(); ++i) {
            for (const auto& t : train_toks) {
                for (std::size_t j = 0; !hit && j + n <= t.size(); ++j)
                    hit = std::equal(b.begin() + static_cast<std::ptrdiff_t>(i), b.begin() + static_cast<std::ptrdiff_t>(i + n),
                                     t.begin() + static_cast<std::ptrdiff_t>(j));
                if (hit) break;
            }
        }
        if (hit) leaked.push_back(s.id);
    }
    return leaked;
}

/// Union-find over vertex indices.
class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }
    std::size_t largest() {
        std::size_t best = 0;
        for (std::size_t i = 0; i < parent_.size(); ++i)
            if (find(i) == i) best = std::max(best, size_[i]);
        return best;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

/// Unique undirected two-edge paths (a, pivot, b) with a < b, by brute force over all triples.
inline std::set<std::tuple<std::string, std::string, std::string>> oracle_paths(const KnowledgeGraph& kg) {
    std::vector<std::string> names;
    for (const auto& [n, e] : kg.entities)
        if (!e.placeholder) names.push_back(n);
    const auto linked = [&](const std::string& a, const std::string& b) { return kg.relations.contains(relation_key(a, b)); };
    std::set<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& p : names)
        for (const auto& a : names)
            for (const auto& b : names)
                if (a < b && a != p && b != p && linked(a, p) && linked(p, b)) out.insert({a, p, b});
    return out;
}

/// Run a shell command, returning its exit status.
inline int run_command(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

inline std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

/// Names of the files the golden pipeline writes, in pipeline order.
inline const std::vector<std::string>& golden_files() {
    static const std::vector<std::string> files = {"kg.json", "qa.jsonl", "qa_checklists.jsonl", "scores.jsonl", "audit.json"};
    return files;
}

/// Run the mini-corpus pipeline through the CLI into `dir` with a pinned timestamp. Returns the first nonzero exit code.
inline int run_golden_pipeline(const std::filesystem::path& dir) {
    const std::string env = "SOURCE_DATE_EPOCH=1700000000 ";
    const std::string k2v = env + quote(cli_path()) + " ";
    const std::string mock = " --mock-script " + quote(data_dir() / "mini_mock_script.json") + " 2>/dev/null";
    const std::vector<std::string> steps = {
        "build-kg --corpus " + quote(data_dir() / "mini_corpus") + " --out " + quote(dir / "kg.json"),
        "synth-qa --kg " + quote(dir / "kg.json") + " --count 4 --seed 7 --domain medicine --out " + quote(dir / "qa.jsonl"),
        "synth-checklists --dataset " + quote(dir / "qa.jsonl") + " --domain medicine --out " + quote(dir / "qa_checklists.jsonl"),
        "score --dataset " + quote(dir / "qa_checklists.jsonl") + " --responses " + quote(data_dir() / "mini_responses.jsonl") +
            " --out " + quote(dir / "scores.jsonl"),
        "audit-kg --kg " + quote(dir / "kg.json") + " --corpus " + quote(data_dir() / "mini_corpus") +
            " --sample-size 3 --seed 7 --review-entities 194/200 --review-relations 191/200 --out " + quote(dir / "audit.json"),
    };
    for (const auto& step : steps)
        if (const int rc = run_command(k2v + step + mock); rc != 0) return rc;
    return 0;
}

} // namespace k2v::testkit
