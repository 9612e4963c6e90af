#pragma once

#include <atomic>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "k2v/error.hpp"
#include "k2v/gateway.hpp"
#include "k2v/log.hpp"
#include "k2v/reward.hpp"

namespace k2v {

inline constexpr std::string_view kDefaultServiceAddr = "127.0.0.1:8731";

struct ScoreRequest {
    std::optional<std::string> id;
    std::string question;
    std::string ground_truth;
    std::string response_text;
    std::vector<std::string> checklist;
    RewardMode mode = RewardMode::Full;
    double alpha = kDefaultAlpha;
};

/// Schema check only (400 on failure). Invariants such as a non-empty checklist are left to scoring (422).
inline ScoreRequest score_request_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::MalformedInput, "score request must be a JSON object");
    const auto text = [&](const char* key) {
        if (!j.contains(key)) throw Error(ErrorCode::MalformedInput, std::string("missing field '") + key + "'");
        if (!j.at(key).is_string()) throw Error(ErrorCode::MalformedInput, std::string("field '") + key + "' must be a string");
        return j.at(key).get<std::string>();
    };
    ScoreRequest r;
    if (j.contains("id") && !j.at("id").is_null()) {
        if (!j.at("id").is_string()) throw Error(ErrorCode::MalformedInput, "field 'id' must be a string");
        r.id = j.at("id").get<std::string>();
    }
    r.question = text("question");
    r.ground_truth = text("ground_truth");
    r.response_text = text("response_text");
    if (j.contains("checklist")) {
        const auto& c = j.at("checklist");
        if (!c.is_array()) throw Error(ErrorCode::MalformedInput, "field 'checklist' must be an array of strings");
        for (const auto& item : c) {
            if (!item.is_string()) throw Error(ErrorCode::MalformedInput, "field 'checklist' must be an array of strings");
            r.checklist.push_back(item.get<std::string>());
        }
    }
    if (j.contains("mode") && !j.at("mode").is_null()) {
        if (!j.at("mode").is_string()) throw Error(ErrorCode::MalformedInput, "field 'mode' must be a string");
        const auto mode = reward_mode_from_string(j.at("mode").get<std::string>());
        if (!mode) throw Error(ErrorCode::MalformedInput, "unknown mode '" + j.at("mode").get<std::string>() + "'");
        r.mode = *mode;
    }
    if (j.contains("alpha") && !j.at("alpha").is_null()) {
        if (!j.at("alpha").is_number()) throw Error(ErrorCode::MalformedInput, "field 'alpha' must be a number");
        r.alpha = j.at("alpha").get<double>();
    }
    return r;
}

inline nlohmann::json to_json(const ScoreRequest& r) {
    nlohmann::json j = {{"question", r.question},
                        {"ground_truth", r.ground_truth},
                        {"response_text", r.response_text},
                        {"checklist", r.checklist},
                        {"mode", to_string(r.mode)},
                        {"alpha", r.alpha}};
    if (r.id) j["id"] = *r.id;
    return j;
}

inline nlohmann::json score_response_json(const std::optional<std::string>& id, const RewardBreakdown& b) {
    auto verdicts = nlohmann::json::array();
    for (const auto& v : b.verdicts) verdicts.push_back(v.value);
    nlohmann::json j;
    j["id"] = id ? nlohmann::json(*id) : nlohmann::json(nullptr);
    j["format_reward"] = b.format_reward;
    j["answer_reward"] = b.answer_reward;
    j["reasoning_reward"] = b.reasoning_reward;
    j["total"] = b.total;
    j["pass_rate"] = b.pass_rate;
    j["answer_correct"] = b.answer_correct;
    j["verdicts"] = std::move(verdicts);
    j["parse"] = {{"think_present", b.parsed.think_text.has_value()},
                  {"answer_present", b.parsed.answer_text.has_value()},
                  {"extracted_answer", b.parsed.answer_text ? nlohmann::json(*b.parsed.answer_text) : nlohmann::json(nullptr)}};
    return j;
}

inline int http_status_for(const Error& e) {
    if (e.is_gateway_failure()) return 502;
    switch (e.code()) {
    case ErrorCode::MalformedInput: return 400;
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptyChecklist: return 422;
    default: return 500;
    }
}

inline nlohmann::json error_json(const Error& e) {
    return {{"error", {{"code", to_string(e.code())}, {"message", e.what()}, {"status", http_status_for(e)}}}};
}

struct HttpReply {
    int status = 200;
    std::string body;
};

/// Stateless scoring front end. Transport-independent so it can be tested without sockets.
class RewardService {
public:
    explicit RewardService(const Gateway& gateway, int judge_retries = 1)
        : gateway_(gateway), judge_retries_(judge_retries) {}

    /// Score one request; throws Error on schema, invariant or gateway failure.
    [[nodiscard]] nlohmann::json score(const ScoreRequest& r) const {
        RewardConfig cfg{r.alpha, r.mode, judge_retries_};
        ScoringItem item{r.question, r.ground_truth, r.checklist};
        return score_response_json(r.id, total_reward(r.response_text, item, gateway_, cfg));
    }

    [[nodiscard]] HttpReply handle(std::string_view method, std::string_view path, std::string_view body) const {
        if (path == "/healthz") {
            if (method != "GET") return method_not_allowed();
            return {200, nlohmann::json{{"status", "ok"}, {"mode", to_string(gateway_.mode())}}.dump()};
        }
        if (path == "/v1/score") {
            if (method != "POST") return method_not_allowed();
            return handle_score(body);
        }
        if (path == "/v1/score/batch") {
            if (method != "POST") return method_not_allowed();
            return handle_batch(body);
        }
        return {404, error_body("not_found", "no route for " + std::string(path))};
    }

    [[nodiscard]] const Gateway& gateway() const noexcept { return gateway_; }

private:
    static std::string error_body(std::string_view code, const std::string& message) {
        return nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump();
    }

    static HttpReply method_not_allowed() { return {405, error_body("method_not_allowed", "method not allowed")}; }

    static std::optional<nlohmann::json> parse_body(std::string_view body) {
        auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded()) return std::nullopt;
        return j;
    }

    [[nodiscard]] nlohmann::json score_or_error(const nlohmann::json& item) const {
        try {
            return score(score_request_from_json(item));
        } catch (const Error& e) {
            if (e.is_gateway_failure()) logger()->error("judge gateway failure: {}", e.what());
            return error_json(e);
        }
    }

    [[nodiscard]] HttpReply handle_score(std::string_view body) const {
        const auto j = parse_body(body);
        if (!j) return {400, error_body("malformed_input", "body is not valid JSON")};
        auto out = score_or_error(*j);
        if (out.contains("error")) return {out["error"]["status"].get<int>(), out.dump()};
        return {200, out.dump()};
    }

    [[nodiscard]] HttpReply handle_batch(std::string_view body) const {
        const auto j = parse_body(body);
        if (!j) return {400, error_body("malformed_input", "body is not valid JSON")};
        if (!j->is_array()) return {400, error_body("malformed_input", "batch body must be a JSON array")};
        if (j->empty()) return {400, error_body("malformed_input", "batch must contain at least one request")};

        std::vector<nlohmann::json> results(j->size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < j->size(); i = next++) results[i] = score_or_error((*j)[i]);
        };
        const auto workers = std::min<std::size_t>(static_cast<std::size_t>(gateway_.config().max_in_flight), j->size());
        if (workers <= 1) {
            worker();
        } else {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        }
        return {200, nlohmann::json(results).dump()};
    }

    const Gateway& gateway_;
    int judge_retries_;
};

/// "host:port" split; the port must be 0..65535.
inline std::pair<std::string, int> parse_addr(std::string_view addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string_view::npos || colon == 0)
        throw Error(ErrorCode::InvalidArgument, "address must be host:port, got '" + std::string(addr) + "'");
    const auto port_text = std::string(addr.substr(colon + 1));
    char* end = nullptr;
    const long port = std::strtol(port_text.c_str(), &end, 10);
    if (port_text.empty() || *end != '\0' || port < 0 || port > 65535)
        throw Error(ErrorCode::InvalidArgument, "bad port in '" + std::string(addr) + "'");
    return {std::string(addr.substr(0, colon)), static_cast<int>(port)};
}

/// Flag value, else K2V_ADDR, else the default.
inline std::string resolve_addr(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("K2V_ADDR"); env && *env) return env;
    return std::string(kDefaultServiceAddr);
}

/// HTTP binding of RewardService. No authentication: meant for a trusted network next to the trainer.
class ServiceServer {
public:
    explicit ServiceServer(const RewardService& service) : service_(service) {
        const auto route = [this](const httplib::Request& req, httplib::Response& res) {
            const auto reply = service_.handle(req.method, req.path, req.body);
            res.status = reply.status;
            res.set_content(reply.body, "application/json");
        };
        for (const auto* path : {"/healthz", "/v1/score", "/v1/score/batch"}) {
            server_.Get(path, route);
            server_.Post(path, route);
        }
        server_.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (res.status == 404) {
                res.set_content(nlohmann::json{{"error", {{"code", "not_found"}, {"message", "no route for " + req.path}}}}.dump(),
                                "application/json");
            }
        });
    }

    /// Bind without serving; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port) {
        const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (bound < 0) throw Error(ErrorCode::TransportError, "cannot bind " + host + ":" + std::to_string(port));
        return bound;
    }

    /// Blocks until stop().
    void serve() { server_.listen_after_bind(); }

    void stop() { server_.stop(); }
    void wait_until_ready() const { server_.wait_until_ready(); }

private:
    const RewardService& service_;
    httplib::Server server_;
};

} // namespace k2v
