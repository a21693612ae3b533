#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "screc/catalog.hpp"
#include "screc/dialogue.hpp"
#include "screc/error.hpp"

namespace screc {

enum class HypothesisPolarity { like, dislike };

inline const char* polarity_name(HypothesisPolarity p) {
    return p == HypothesisPolarity::like ? "like" : "dislike";
}

struct PolicyQuery {
    TurnContext context;
    Item item;
    HypothesisPolarity polarity = HypothesisPolarity::like;
    std::vector<DialogueState> prior_states;  // belief context a_{<t}
    DialogueState observed_state;
};

struct DecodingParams {
    double top_p = 0.75;
    int top_k = 40;
    double temperature = 0.7;
    int max_tokens = 256;

    void validate() const {
        if (!(top_p > 0.0 && top_p <= 1.0)) throw config_error("top_p must be in (0, 1]");
        if (top_k <= 0) throw config_error("top_k must be positive");
        if (!(temperature > 0.0)) throw config_error("temperature must be positive");
        if (max_tokens <= 0) throw config_error("max_tokens must be positive");
    }
};

struct RemoteBackendConfig {
    std::string endpoint;
    double timeout_seconds = 10.0;
    int retries = 2;
    int max_in_flight = 8;

    void validate() const {
        if (retries < 0 || retries > 5) throw config_error("retries must be in [0, 5]");
        if (endpoint.empty()) throw config_error("endpoint must be set");
        if (max_in_flight < 1 || max_in_flight > 1024)
            throw config_error("max_in_flight must be in [1, 1024]");
    }
};

struct TransitionInference {
    double z_yes = 0.0;
    double z_no = 0.0;
    std::string target_profile_text;
};

// Policy and generation backend. Implementations must tolerate concurrent
// calls; the mock is pure, the remote client bounds in-flight requests.
class Backend {
public:
    virtual ~Backend() = default;

    // log pi(observed_state | item, polarity, context, prior_states), <= 0.
    virtual double state_loglik(const PolicyQuery& query) = 0;

    // Raw decision logits plus the generated target-profile text.
    virtual TransitionInference transition_inference(const TurnContext& ctx,
                                                     const SceneProfile& current_profile) = 0;

    virtual std::string generate_text(const std::string& prompt, const DecodingParams& params) = 0;
};

// Signed attribute-compatibility count: +1 per slot pair matching the item's
// value (case-insensitive), -1 per slot present on both with a different
// value, 0 for slots the item lacks.
inline int compat(const DialogueState& state, const Item& item) {
    int score = 0;
    for (const auto& [slot, value] : state.slots) {
        auto it = item.attributes.find(to_lower(slot));
        if (it == item.attributes.end()) continue;
        score += (to_lower(it->second) == to_lower(value)) ? 1 : -1;
    }
    return score;
}

// Phrasing shared by the mock generator and the deterministic fallback path,
// so a generation outage degrades to the same surface form.
inline std::string recommendation_template(const std::vector<std::string>& descriptors) {
    if (descriptors.empty()) return "I have no recommendation for this scene.";
    return "I recommend the " + join(descriptors, ", the ") + ".";
}

inline std::string dst_prompt(const std::string& utterance, const Scene& scene,
                              const StateSchema& schema) {
    std::string vocab;
    for (const auto& item : scene.items) {
        for (const auto& [slot, value] : item.attributes) {
            std::string entry = slot + "=" + to_lower(value);
            if (vocab.find(entry) == std::string::npos) {
                if (!vocab.empty()) vocab += "; ";
                vocab += entry;
            }
        }
    }
    std::string intents = join(schema.intents, ", ");
    return "Extract the dialogue state of the utterance as INTENT | slot=value; ...\n"
           "Intents: " + intents + "\n"
           "Known slot values: " + vocab + "\n"
           "Utterance: " + utterance + "\n"
           "State:";
}

// One state per user turn. Corpus-provided gold states take precedence; free
// text goes through the backend and invalid generations are repaired to
// ("OTHER", []) with a warning.
inline std::vector<DialogueState> track_states(const Conversation& conv, Backend& backend,
                                               const Scene& scene,
                                               const StateSchema& schema = default_schema(),
                                               Warnings* warnings = nullptr) {
    std::vector<DialogueState> states;
    DecodingParams params;
    for (const auto& turn : conv.turns) {
        if (turn.speaker != Speaker::user) continue;
        if (turn.state) {
            states.push_back(*turn.state);
            continue;
        }
        std::string generated;
        try {
            generated = backend.generate_text(dst_prompt(turn.text, scene, schema), params);
            states.push_back(parse_state(generated, schema));
        } catch (const transport_error&) {
            throw;
        } catch (const std::exception& e) {
            warn(warnings, "turn " + std::to_string(turn.index) + " of " + conv.dialogue_id +
                               ": unparseable state \"" + generated + "\" (" + e.what() +
                               "); repaired to OTHER");
            states.push_back(DialogueState{"OTHER", {}});
        }
    }
    return states;
}

}  // namespace screc
