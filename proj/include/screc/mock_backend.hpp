#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "screc/backend.hpp"

namespace screc {

struct MockUserConfig {
    double beta = 1.0;  // rationality; 0 = uniform over actions
    std::vector<DialogueState> action_space;
    uint64_t seed = 0;

    void validate() const {
        if (beta < 0.0) throw config_error("beta must be >= 0");
        if (action_space.empty()) throw config_error("action_space must be non-empty");
    }
};

// log pi(observed | item, polarity) under a softmax policy with utility
// sign(polarity) * beta * compat(action, item). An observed state outside the
// action space is scored as an appended extra action.
inline double mock_state_loglik(const MockUserConfig& config, const PolicyQuery& query) {
    config.validate();
    const double sign = query.polarity == HypothesisPolarity::like ? 1.0 : -1.0;
    std::vector<double> scores;
    scores.reserve(config.action_space.size() + 1);
    std::ptrdiff_t observed_index = -1;
    for (std::size_t i = 0; i < config.action_space.size(); ++i) {
        scores.push_back(sign * config.beta * compat(config.action_space[i], query.item));
        if (observed_index < 0 && config.action_space[i] == query.observed_state)
            observed_index = static_cast<std::ptrdiff_t>(i);
    }
    if (observed_index < 0) {
        observed_index = static_cast<std::ptrdiff_t>(scores.size());
        scores.push_back(sign * config.beta * compat(query.observed_state, query.item));
    }
    const double peak = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += std::exp(s - peak);
    return scores[static_cast<std::size_t>(observed_index)] - (peak + std::log(sum));
}

// Deterministic stand-in for the remote policy/generation service. State
// scoring is the rational-user softmax; transition logits come from a
// per-(dialogue, turn) script and default to a confident no; generation
// answers the two prompt conventions it recognises and otherwise echoes.
class MockBackend : public Backend {
public:
    explicit MockBackend(MockUserConfig config) : config_(std::move(config)) {
        config_.validate();
    }

    double state_loglik(const PolicyQuery& query) override {
        return mock_state_loglik(config_, query);
    }

    void script_transition(const std::string& dialogue_id, int turn, TransitionInference inf) {
        std::lock_guard lock(mutex_);
        transitions_[key(dialogue_id, turn)] = std::move(inf);
    }

    TransitionInference transition_inference(const TurnContext& ctx,
                                             const SceneProfile&) override {
        std::lock_guard lock(mutex_);
        auto it = transitions_.find(key(ctx.dialogue_id, ctx.t));
        if (it != transitions_.end()) return it->second;
        return TransitionInference{-10.0, 10.0, ""};  // stay in the current scene
    }

    void push_reply(std::string text) {
        std::lock_guard lock(mutex_);
        replies_.push_back(std::move(text));
    }

    // The next n generate_text calls throw transport_error.
    void fail_generations(int n) {
        std::lock_guard lock(mutex_);
        fail_generations_ = n;
    }

    std::string generate_text(const std::string& prompt, const DecodingParams& params) override {
        params.validate();
        {
            std::lock_guard lock(mutex_);
            if (fail_generations_ > 0) {
                --fail_generations_;
                throw transport_error("mock generation failure");
            }
            if (!replies_.empty()) {
                std::string reply = std::move(replies_.front());
                replies_.pop_front();
                return reply;
            }
        }
        if (prompt.rfind("Extract the dialogue state", 0) == 0) return extract_state(prompt);
        if (prompt.find("\nRecommended items: ") != std::string::npos)
            return recommend_from_prompt(prompt);
        return "Okay.";
    }

    const MockUserConfig& config() const { return config_; }

private:
    static std::string key(const std::string& dialogue_id, int turn) {
        return dialogue_id + "#" + std::to_string(turn);
    }

    static std::string line_after(const std::string& text, const std::string& tag) {
        auto pos = text.find(tag);
        if (pos == std::string::npos) return "";
        pos += tag.size();
        auto end = text.find('\n', pos);
        return text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    }

    // Keyword spotting over the advertised slot values; every value whose
    // tokens all occur in the utterance becomes a slot pair.
    static std::string extract_state(const std::string& prompt) {
        const std::string vocab = line_after(prompt, "Known slot values: ");
        const std::string utterance = line_after(prompt, "Utterance: ");
        const auto words = tokenize(utterance);
        auto has_word = [&](const std::string& w) {
            return std::find(words.begin(), words.end(), w) != words.end();
        };
        std::string slots;
        std::size_t start = 0;
        while (start < vocab.size()) {
            auto stop = vocab.find("; ", start);
            std::string entry = vocab.substr(
                start, stop == std::string::npos ? std::string::npos : stop - start);
            start = stop == std::string::npos ? vocab.size() : stop + 2;
            auto eq = entry.find('=');
            if (eq == std::string::npos) continue;
            const auto value_words = tokenize(entry.substr(eq + 1));
            if (value_words.empty()) continue;
            bool all = true;
            for (const auto& w : value_words) all = all && has_word(w);
            if (!all) continue;
            if (!slots.empty()) slots += "; ";
            slots += entry;
        }
        if (slots.empty()) return "OTHER |";
        return "INFORM:GET | " + slots;
    }

    // Reads the "id (descriptor); ..." recommendation line back out of the
    // prompt and phrases it; "(none)" never reaches the backend.
    static std::string recommend_from_prompt(const std::string& prompt) {
        const std::string line = line_after(prompt, "\nRecommended items: ");
        std::vector<std::string> descriptors;
        std::size_t start = 0;
        while (start < line.size()) {
            auto open = line.find('(', start);
            if (open == std::string::npos) break;
            auto close = line.find(')', open);
            if (close == std::string::npos) break;
            descriptors.push_back(line.substr(open + 1, close - open - 1));
            start = close + 1;
        }
        return recommendation_template(descriptors);
    }

    MockUserConfig config_;
    std::map<std::string, TransitionInference> transitions_;
    std::deque<std::string> replies_;
    int fail_generations_ = 0;
    std::mutex mutex_;
};

}  // namespace screc
