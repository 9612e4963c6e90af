#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "k2v/error.hpp"
#include "k2v/log.hpp"
#include "k2v/text.hpp"

namespace k2v {

inline constexpr double kSynthesisTemperature = 0.7;
inline constexpr double kJudgeTemperature = 0.0;

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = kSynthesisTemperature;
    int max_tokens = 1024;
    std::string tag;

    void validate() const {
        if (user_prompt.empty()) throw Error(ErrorCode::InvalidArgument, "user_prompt must be non-empty");
        if (!(temperature >= 0.0 && temperature <= 2.0))
            throw Error(ErrorCode::InvalidArgument, "temperature must be within [0, 2]");
        if (max_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
    }
};

struct ChatResponse {
    std::string text;
    std::string model_id;
    std::int64_t latency_ms = 0;
};

enum class GatewayMode { Live, Mock };

inline std::string_view to_string(GatewayMode mode) { return mode == GatewayMode::Live ? "live" : "mock"; }

struct GatewayConfig {
    std::string endpoint_url;
    std::string model = "default";
    std::string api_key_env_var = "K2V_API_KEY";
    int max_in_flight = 4;
    int max_retries = 3;
    int backoff_base_ms = 200;
    int timeout_ms = 120000;
    GatewayMode mode = GatewayMode::Mock;
};

inline void from_json(const nlohmann::json& j, GatewayConfig& c) {
    c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
    c.model = j.value("model", c.model);
    c.api_key_env_var = j.value("api_key_env_var", c.api_key_env_var);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_base_ms = j.value("backoff_base_ms", c.backoff_base_ms);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    if (j.contains("mode")) {
        const auto mode = j.at("mode").get<std::string>();
        if (mode == "live") c.mode = GatewayMode::Live;
        else if (mode == "mock") c.mode = GatewayMode::Mock;
        else throw Error(ErrorCode::InvalidArgument, "gateway mode must be 'live' or 'mock'");
    }
}

/// Stable 64-bit fingerprint of (system_prompt, user_prompt). Temperature and tag are ignored.
inline std::uint64_t fingerprint(std::string_view system_prompt, std::string_view user_prompt) {
    std::uint64_t h = fnv1a64(std::to_string(system_prompt.size()));
    h = fnv1a64(":", h);
    h = fnv1a64(system_prompt, h);
    return fnv1a64(user_prompt, h);
}

inline std::uint64_t fingerprint(const ChatRequest& r) { return fingerprint(r.system_prompt, r.user_prompt); }

// ---------------------------------------------------------------------------
// Mock script
// ---------------------------------------------------------------------------

/// Canned responses for offline runs. Lookup order: exact fingerprint, then the
/// first rule whose regex matches the user prompt (response may use $1.. captures),
/// then the default response.
class MockScript {
public:
    void add(std::string_view system_prompt, std::string_view user_prompt, std::string response) {
        entries_[fingerprint(system_prompt, user_prompt)] = std::move(response);
    }
    void add_fingerprint(std::uint64_t fp, std::string response) { entries_[fp] = std::move(response); }
    void add_rule(const std::string& pattern, std::string response) {
        rules_.push_back({pattern, std::regex(pattern, std::regex::ECMAScript), std::move(response)});
    }
    void set_default(std::string response) { default_ = std::move(response); }

    [[nodiscard]] std::optional<std::string> lookup(const ChatRequest& request) const {
        if (auto it = entries_.find(fingerprint(request)); it != entries_.end()) return it->second;
        for (const auto& rule : rules_) {
            std::smatch m;
            if (std::regex_search(request.user_prompt, m, rule.re)) return m.format(rule.response);
        }
        return default_;
    }

    [[nodiscard]] bool empty() const { return entries_.empty() && rules_.empty() && !default_; }

    /// `{"entries":[{"system":..,"user":..,"response":..} | {"fingerprint":"hex","response":..}],
    ///   "rules":[{"match":regex,"response":..}], "default":text}`
    static MockScript from_json(const nlohmann::json& j) {
        MockScript script;
        try {
            for (const auto& e : j.value("entries", nlohmann::json::array())) {
                if (e.contains("fingerprint")) {
                    script.add_fingerprint(std::stoull(e.at("fingerprint").get<std::string>(), nullptr, 16),
                                           e.at("response").get<std::string>());
                } else {
                    script.add(e.value("system", std::string{}), e.at("user").get<std::string>(),
                               e.at("response").get<std::string>());
                }
            }
            for (const auto& r : j.value("rules", nlohmann::json::array()))
                script.add_rule(r.at("match").get<std::string>(), r.at("response").get<std::string>());
            if (j.contains("default") && !j.at("default").is_null()) script.set_default(j.at("default").get<std::string>());
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::MalformedInput, std::string("mock script: ") + ex.what());
        } catch (const std::regex_error& ex) {
            throw Error(ErrorCode::MalformedInput, std::string("mock script rule regex: ") + ex.what());
        }
        return script;
    }

    static MockScript load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open mock script " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::MalformedInput, "mock script " + path + ": " + ex.what());
        }
        return from_json(j);
    }

private:
    struct Rule {
        std::string pattern;
        std::regex re;
        std::string response;
    };
    std::map<std::uint64_t, std::string> entries_;
    std::vector<Rule> rules_;
    std::optional<std::string> default_;
};

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

/// One attempt at a chat completion. Implementations throw Error with
/// TransportError / RateLimited for retryable failures, HttpError otherwise.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string post(const ChatRequest& request, const GatewayConfig& config) = 0;
};

struct ParsedUrl {
    std::string scheme_host_port;
    std::string path;
};

inline ParsedUrl parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint_url lacks a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline nlohmann::json chat_request_body(const ChatRequest& request, const std::string& model) {
    nlohmann::json messages = nlohmann::json::array();
    if (!request.system_prompt.empty()) messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
    return {{"model", model},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
}

class HttpTransport : public Transport {
public:
    std::string post(const ChatRequest& request, const GatewayConfig& config) override {
        const auto url = parse_url(config.endpoint_url);
        httplib::Client client(url.scheme_host_port);
        const auto timeout = std::chrono::milliseconds(config.timeout_ms);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        httplib::Headers headers;
        if (const char* key = std::getenv(config.api_key_env_var.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);

        const auto body = chat_request_body(request, config.model).dump();
        auto res = client.Post(url.path, headers, body, "application/json");
        if (!res) throw Error(ErrorCode::TransportError, "request failed: " + httplib::to_string(res.error()));
        if (res->status == 429) throw Error(ErrorCode::RateLimited, "HTTP 429");
        if (res->status >= 500) throw Error(ErrorCode::TransportError, "HTTP " + std::to_string(res->status));
        if (res->status != 200)
            throw Error(ErrorCode::HttpError, "HTTP " + std::to_string(res->status) + ": " + res->body);
        try {
            const auto j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::HttpError, std::string("unexpected response body: ") + ex.what());
        }
    }
};

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

class Gateway {
public:
    using Outcome = std::variant<ChatResponse, Error>;

    Gateway(GatewayConfig config, std::optional<MockScript> script = std::nullopt,
            std::shared_ptr<Transport> transport = nullptr)
        : config_(std::move(config)), script_(std::move(script)), transport_(std::move(transport)) {
        if (config_.max_in_flight <= 0) throw Error(ErrorCode::InvalidArgument, "max_in_flight must be positive");
        if (config_.max_retries < 0) throw Error(ErrorCode::InvalidArgument, "max_retries must be non-negative");
        if (config_.backoff_base_ms <= 0) throw Error(ErrorCode::InvalidArgument, "backoff_base_ms must be positive");
        if (config_.mode == GatewayMode::Mock && !script_)
            throw Error(ErrorCode::InvalidArgument, "mock mode requires a mock script");
        if (config_.mode == GatewayMode::Live) {
            if (config_.endpoint_url.empty() && !transport_)
                throw Error(ErrorCode::InvalidArgument, "live mode requires endpoint_url");
            if (!transport_) transport_ = std::make_shared<HttpTransport>();
        }
    }

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    [[nodiscard]] const GatewayConfig& config() const noexcept { return config_; }
    [[nodiscard]] GatewayMode mode() const noexcept { return config_.mode; }

    ChatResponse complete(const ChatRequest& request) const {
        request.validate();
        Slot slot(*this);
        const auto start = std::chrono::steady_clock::now();
        ChatResponse response;
        if (config_.mode == GatewayMode::Mock) {
            auto text = script_->lookup(request);
            if (!text) {
                throw Error(ErrorCode::MissingScriptEntry,
                            "no scripted response for fingerprint " + to_hex(fingerprint(request)) +
                                (request.tag.empty() ? "" : " (" + request.tag + ")"));
            }
            response.text = std::move(*text);
            response.model_id = "mock";
        } else {
            response.text = post_with_retries(request);
            response.model_id = config_.model;
        }
        response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
        return response;
    }

    /// Positional results; an error in one item never aborts the others.
    std::vector<Outcome> complete_batch(const std::vector<ChatRequest>& requests) const {
        if (requests.empty()) throw Error(ErrorCode::InvalidArgument, "complete_batch needs at least one request");
        std::vector<std::optional<Outcome>> slots(requests.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < requests.size(); i = next++) {
                try {
                    slots[i].emplace(complete(requests[i]));
                } catch (const Error& e) {
                    slots[i].emplace(e);
                } catch (const std::exception& e) {
                    slots[i].emplace(Error(ErrorCode::TransportError, e.what()));
                }
            }
        };
        const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config_.max_in_flight), requests.size());
        if (workers <= 1) {
            worker();
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        }
        std::vector<Outcome> out;
        out.reserve(requests.size());
        for (auto& s : slots) out.push_back(std::move(*s));
        return out;
    }

    /// Total completions started since construction (including failed ones).
    [[nodiscard]] std::uint64_t calls() const noexcept { return calls_.load(); }
    /// Highest number of simultaneously outstanding completions observed.
    [[nodiscard]] int peak_in_flight() const noexcept { return peak_.load(); }

private:
    // RAII counting limiter: blocks until fewer than max_in_flight calls are outstanding.
    class Slot {
    public:
        explicit Slot(const Gateway& g) : g_(g) {
            std::unique_lock lock(g_.mutex_);
            g_.cv_.wait(lock, [&] { return g_.in_flight_ < g_.config_.max_in_flight; });
            ++g_.in_flight_;
            int peak = g_.peak_.load();
            while (g_.in_flight_ > peak && !g_.peak_.compare_exchange_weak(peak, g_.in_flight_)) {
            }
            ++g_.calls_;
        }
        ~Slot() {
            {
                std::lock_guard lock(g_.mutex_);
                --g_.in_flight_;
            }
            g_.cv_.notify_one();
        }
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;

    private:
        const Gateway& g_;
    };

    std::string post_with_retries(const ChatRequest& request) const {
        for (int attempt = 0;; ++attempt) {
            try {
                return transport_->post(request, config_);
            } catch (const Error& e) {
                const bool retryable = e.code() == ErrorCode::TransportError || e.code() == ErrorCode::RateLimited;
                if (!retryable) throw;
                if (attempt >= config_.max_retries) {
                    throw Error(ErrorCode::TransportError,
                                "giving up after " + std::to_string(attempt + 1) + " attempts: " + e.what());
                }
                const auto delay = std::chrono::milliseconds(static_cast<std::int64_t>(config_.backoff_base_ms)
                                                             << std::min(attempt, 20));
                logger()->warn("gateway attempt {} failed ({}); retrying in {} ms", attempt + 1, e.what(),
                               delay.count());
                std::this_thread::sleep_for(delay);
            }
        }
    }

    GatewayConfig config_;
    std::optional<MockScript> script_;
    std::shared_ptr<Transport> transport_;

    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    mutable int in_flight_ = 0;
    mutable std::atomic<int> peak_{0};
    mutable std::atomic<std::uint64_t> calls_{0};
};

/// Unwrap a batch outcome, rethrowing its error.
inline const ChatResponse& value_or_throw(const Gateway::Outcome& outcome) {
    if (const auto* err = std::get_if<Error>(&outcome)) throw *err;
    return std::get<ChatResponse>(outcome);
}

} // namespace k2v
