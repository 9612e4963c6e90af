#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "k2v/dataset.hpp"
#include "k2v/error.hpp"
#include "k2v/gateway.hpp"
#include "k2v/log.hpp"
#include "k2v/prompts.hpp"
#include "k2v/text.hpp"

namespace k2v {

inline constexpr double kFormatReward = 0.75;
inline constexpr double kDefaultAlpha = 6.0;

// ---------------------------------------------------------------------------
// Response template
// ---------------------------------------------------------------------------

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

struct ParsedResponse {
    std::string raw;
    std::optional<std::string> think_text;
    std::optional<std::string> answer_text;
    bool strict_format = false;
};

namespace detail {

inline bool is_ascii_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) ++n;
    return n;
}

inline std::optional<std::string> between(std::string_view s, std::string_view open, std::string_view close) {
    const auto a = s.find(open);
    if (a == std::string_view::npos) return std::nullopt;
    const auto b = s.find(close, a + open.size());
    if (b == std::string_view::npos) return std::nullopt;
    return trim(s.substr(a + open.size(), b - a - open.size()));
}

// `<think>` THINK `</think>` WS `<answer>` ANSWER `</answer>`, each tag exactly once,
// surrounded only by optional whitespace.
inline bool matches_template(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_ascii_ws(s[b])) ++b;
    while (e > b && is_ascii_ws(s[e - 1])) --e;
    const auto body = s.substr(b, e - b);
    for (const auto tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose})
        if (count_occurrences(body, tag) != 1) return false;
    if (body.substr(0, kThinkOpen.size()) != kThinkOpen) return false;
    const auto think_close = body.find(kThinkClose);
    std::size_t i = think_close + kThinkClose.size();
    while (i < body.size() && is_ascii_ws(body[i])) ++i;
    if (body.substr(i, kAnswerOpen.size()) != kAnswerOpen) return false;
    const auto answer_close = body.find(kAnswerClose);
    return answer_close > i && answer_close + kAnswerClose.size() == body.size();
}

} // namespace detail

/// Total: never throws. Think/answer are extracted best-effort even when the template is violated.
inline ParsedResponse parse_response(std::string_view raw) {
    ParsedResponse p;
    p.raw = std::string(raw);
    p.think_text = detail::between(raw, kThinkOpen, kThinkClose);
    p.answer_text = detail::between(raw, kAnswerOpen, kAnswerClose);
    p.strict_format = detail::matches_template(raw);
    return p;
}

inline double format_reward(const ParsedResponse& p) { return p.strict_format ? kFormatReward : 0.0; }

/// Rule-based answer check on normalized text.
inline bool answer_correct(const std::optional<std::string>& predicted, std::string_view ground_truth) {
    const auto truth = normalize_answer(ground_truth);
    if (truth.empty()) throw Error(ErrorCode::InvalidArgument, "ground truth must be non-empty");
    if (!predicted) return false;
    return normalize_answer(*predicted) == truth;
}

// ---------------------------------------------------------------------------
// Judge
// ---------------------------------------------------------------------------

struct Verdict {
    std::size_t criterion_index = 0;
    int value = 0;
    std::string judge_raw;
    bool unparsed = false;  // judge never answered yes/no; value defaulted to 0
};

inline ChatRequest judge_request(std::string_view reasoning, std::string_view question, std::string_view answer,
                                 std::string_view criterion) {
    ChatRequest r;
    r.user_prompt = prompts::fill_template(prompts::kJudge, std::pair{"question", question}, std::pair{"answer", answer},
                                           std::pair{"criterion", criterion}, std::pair{"reasoning", reasoning});
    r.temperature = kJudgeTemperature;
    r.max_tokens = 8;
    r.tag = "judge";
    return r;
}

/// "yes" -> 1, "no" -> 0 after trimming and case folding; anything else is unparsed.
inline std::optional<int> parse_verdict(std::string_view text) {
    const auto v = nfc_casefold(trim(text));
    if (v == "yes") return 1;
    if (v == "no") return 0;
    return std::nullopt;
}

/// The question/answer/checklist a response is scored against.
struct ScoringItem {
    std::string question;
    std::string answer;
    std::vector<std::string> criteria;
};

inline ScoringItem scoring_item(const QAPair& qa) {
    return {qa.question, qa.answer, qa.checklist ? qa.checklist->criteria : std::vector<std::string>{}};
}

inline Verdict judge_criterion(std::string_view reasoning, const QAPair& qa, std::string_view criterion,
                               const Gateway& gateway, int retries = 1) {
    if (trim(criterion).empty()) throw Error(ErrorCode::InvalidArgument, "criterion must be non-empty");
    const auto request = judge_request(reasoning, qa.question, qa.answer, criterion);
    Verdict v;
    for (int attempt = 0; attempt <= retries; ++attempt) {
        v.judge_raw = gateway.complete(request).text;
        if (auto parsed = parse_verdict(v.judge_raw)) {
            v.value = *parsed;
            return v;
        }
    }
    v.value = 0;
    v.unparsed = true;
    logger()->warn("judge reply '{}' is neither yes nor no; verdict defaults to 0", v.judge_raw);
    return v;
}

/// Judge every criterion as one ordered batch; unparsed replies are re-asked up to `retries` times.
inline std::vector<Verdict> judge_all(std::string_view reasoning, const ScoringItem& item, const Gateway& gateway,
                                      int retries) {
    std::vector<ChatRequest> requests;
    for (const auto& c : item.criteria) {
        if (trim(c).empty()) throw Error(ErrorCode::InvalidArgument, "criterion must be non-empty");
        requests.push_back(judge_request(reasoning, item.question, item.answer, c));
    }
    std::vector<Verdict> verdicts(requests.size());
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        verdicts[i].criterion_index = i;
        pending.push_back(i);
    }
    for (int attempt = 0; attempt <= retries && !pending.empty(); ++attempt) {
        std::vector<ChatRequest> round;
        for (auto i : pending) round.push_back(requests[i]);
        const auto outcomes = gateway.complete_batch(round);
        std::vector<std::size_t> again;
        for (std::size_t k = 0; k < pending.size(); ++k) {
            auto& v = verdicts[pending[k]];
            v.judge_raw = value_or_throw(outcomes[k]).text;
            if (auto parsed = parse_verdict(v.judge_raw)) v.value = *parsed;
            else again.push_back(pending[k]);
        }
        pending = std::move(again);
    }
    for (auto i : pending) {
        verdicts[i].value = 0;
        verdicts[i].unparsed = true;
        logger()->warn("judge reply '{}' for criterion {} is neither yes nor no; verdict defaults to 0",
                       verdicts[i].judge_raw, i);
    }
    return verdicts;
}

/// p = (1/k) * sum(v_i)
inline double pass_rate(const std::vector<Verdict>& verdicts) {
    if (verdicts.empty()) throw Error(ErrorCode::EmptyChecklist, "pass rate of an empty checklist");
    int sum = 0;
    for (const auto& v : verdicts) sum += v.value;
    return static_cast<double>(sum) / static_cast<double>(verdicts.size());
}

// ---------------------------------------------------------------------------
// Answer-gated total
// ---------------------------------------------------------------------------

enum class RewardMode {
    Full,        // reasoning = 1(correct) * p
    NoGate,      // reasoning = p regardless of correctness
    AnswerOnly,  // reasoning forced to 0, judge never called
    ReasonOnly,  // answer reward forced to 0, reasoning = p
};

inline std::string_view to_string(RewardMode m) {
    switch (m) {
    case RewardMode::Full: return "full";
    case RewardMode::NoGate: return "no_gate";
    case RewardMode::AnswerOnly: return "answer_only";
    case RewardMode::ReasonOnly: return "reason_only";
    }
    return "full";
}

inline std::optional<RewardMode> reward_mode_from_string(std::string_view s) {
    if (s == "full") return RewardMode::Full;
    if (s == "no_gate") return RewardMode::NoGate;
    if (s == "answer_only") return RewardMode::AnswerOnly;
    if (s == "reason_only") return RewardMode::ReasonOnly;
    return std::nullopt;
}

struct RewardConfig {
    double alpha = kDefaultAlpha;
    RewardMode mode = RewardMode::Full;
    int judge_retries = 1;

    void validate() const {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
        if (judge_retries < 0) throw Error(ErrorCode::InvalidArgument, "judge_retries must be non-negative");
    }
};

struct RewardBreakdown {
    double format_reward = 0;
    double answer_reward = 0;
    double reasoning_reward = 0;
    double pass_rate = 0;
    double total = 0;
    bool answer_correct = false;
    std::vector<Verdict> verdicts;
    ParsedResponse parsed;
};

/// Whether the checklist must be judged. Under the full mode a wrong answer
/// short-circuits: its reasoning reward is 0 whatever the verdicts.
constexpr bool needs_judging(RewardMode mode, bool correct) noexcept {
    switch (mode) {
    case RewardMode::Full: return correct;
    case RewardMode::NoGate:
    case RewardMode::ReasonOnly: return true;
    case RewardMode::AnswerOnly: return false;
    }
    return false;
}

/// Combine already-computed components. `p` is ignored when the mode/correctness pair needs no judging.
inline void combine_reward(RewardBreakdown& out, bool strict_format, bool correct, double p, const RewardConfig& cfg) {
    out.format_reward = strict_format ? kFormatReward : 0.0;
    out.answer_correct = correct;
    out.answer_reward = (correct && cfg.mode != RewardMode::ReasonOnly) ? cfg.alpha : 0.0;
    out.pass_rate = needs_judging(cfg.mode, correct) ? p : 0.0;
    out.reasoning_reward = out.pass_rate;
    out.total = out.format_reward + out.answer_reward + out.reasoning_reward;
}

inline RewardBreakdown total_reward(std::string_view raw, const ScoringItem& item, const Gateway& gateway,
                                    const RewardConfig& config) {
    config.validate();
    if (trim(item.answer).empty()) throw Error(ErrorCode::InvalidArgument, "ground truth must be non-empty");
    if (item.criteria.empty() && config.mode != RewardMode::AnswerOnly)
        throw Error(ErrorCode::EmptyChecklist, "mode " + std::string(to_string(config.mode)) + " needs a checklist");
    RewardBreakdown out;
    out.parsed = parse_response(raw);
    const bool correct = answer_correct(out.parsed.answer_text, item.answer);
    double p = 0.0;
    if (needs_judging(config.mode, correct)) {
        const std::string reasoning = out.parsed.think_text.value_or(out.parsed.raw);
        out.verdicts = judge_all(reasoning, item, gateway, config.judge_retries);
        p = pass_rate(out.verdicts);
    }
    combine_reward(out, out.parsed.strict_format, correct, p, config);
    return out;
}

inline RewardBreakdown total_reward(std::string_view raw, const QAPair& qa, const Gateway& gateway,
                                    const RewardConfig& config) {
    return total_reward(raw, scoring_item(qa), gateway, config);
}

} // namespace k2v
