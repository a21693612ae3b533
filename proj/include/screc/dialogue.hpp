#pragma once

#include <optional>
#include <string>
#include <vector>

#include "screc/catalog.hpp"
#include "screc/error.hpp"
#include "screc/util.hpp"

namespace screc {

struct DialogueState {
    std::string intent;  // uppercase, from the schema intents or "OTHER"
    std::vector<std::pair<std::string, std::string>> slots;  // order is semantic

    bool operator==(const DialogueState& other) const {
        return intent == other.intent && slots == other.slots;
    }
};

struct StateSchema {
    std::vector<std::string> intents;
    std::vector<std::string> slots;

    bool has_intent(const std::string& intent) const {
        return std::find(intents.begin(), intents.end(), intent) != intents.end();
    }
    bool has_slot(const std::string& slot) const {
        return std::find(slots.begin(), slots.end(), slot) != slots.end();
    }
};

// Intents and slots of the shopping-domain schema. Both lists are open-ended
// in the corpora, so OTHER / "other" act as escapes.
inline const StateSchema& default_schema() {
    static const StateSchema schema{
        {"INFORM:GET", "REQUEST:COMPARE", "REQUEST:ADD_TO_CART", "INFORM:REFINE",
         "REQUEST:DISAMBIGUATE", "ASK:GET", "INFORM:DISAMBIGUATE", "REQUEST:GET", "OTHER"},
        {"asset type", "customer review", "available sizes", "color", "pattern", "brand",
         "sleeve length", "type", "price", "size", "customer rating", "materials", "other"}};
    return schema;
}

enum class Speaker { user, system };

struct Turn {
    int index = 0;  // 1-based; a user turn and its system reply share an index
    Speaker speaker = Speaker::user;
    std::string text;
    std::optional<DialogueState> state;
};

struct Conversation {
    std::string dialogue_id;
    std::vector<Turn> turns;

    int user_turn_count() const {
        int n = 0;
        for (const auto& t : turns)
            if (t.speaker == Speaker::user) ++n;
        return n;
    }
};

struct TurnContext {
    std::string dialogue_id;
    int t = 0;  // 1-based user-turn index
    std::vector<Turn> history;  // turns with index < t plus the user turn at t
    const Scene* scene = nullptr;
    const SceneProfile* profile = nullptr;
};

namespace detail {

inline std::string unescape_value(const std::string& raw, std::size_t offset) {
    std::string out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\\') {
            if (i + 1 >= raw.size())
                throw parse_error("dangling escape at offset " + std::to_string(offset + i));
            out.push_back(raw[i + 1]);
            ++i;
        } else {
            out.push_back(raw[i]);
        }
    }
    return out;
}

inline std::string escape_value(const std::string& value) {
    std::string out;
    for (char c : value) {
        if (c == ';' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

// Splits "a; b; c" on unescaped semicolons, keeping offsets for error messages.
inline std::vector<std::pair<std::string, std::size_t>> split_pairs(const std::string& body,
                                                                    std::size_t base) {
    std::vector<std::pair<std::string, std::size_t>> parts;
    std::string cur;
    std::size_t start = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] == '\\' && i + 1 < body.size()) {
            cur.push_back(body[i]);
            cur.push_back(body[i + 1]);
            ++i;
        } else if (body[i] == ';') {
            parts.emplace_back(cur, base + start);
            cur.clear();
            start = i + 1;
        } else {
            cur.push_back(body[i]);
        }
    }
    parts.emplace_back(cur, base + start);
    return parts;
}

}  // namespace detail

// Canonical serialization: `INTENT | slot=value; slot=value`, empty slot list
// rendered as `INTENT |`. Values escape `;` and `\` with a backslash.
inline std::string serialize_state(const DialogueState& state) {
    std::string out = state.intent + " |";
    for (std::size_t i = 0; i < state.slots.size(); ++i) {
        out += (i == 0 ? " " : "; ");
        out += state.slots[i].first + "=" + detail::escape_value(state.slots[i].second);
    }
    return out;
}

inline DialogueState parse_state(const std::string& text, const StateSchema& schema) {
    std::size_t bar = text.find('|');
    if (bar == std::string::npos)
        throw parse_error("missing '|' delimiter in state \"" + text + "\"");
    DialogueState state;
    state.intent = trim(text.substr(0, bar));
    std::transform(state.intent.begin(), state.intent.end(), state.intent.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (state.intent.empty()) throw parse_error("empty intent in state \"" + text + "\"");
    if (!schema.has_intent(state.intent))
        throw schema_error("unknown intent \"" + state.intent + "\"");
    std::string body = text.substr(bar + 1);
    if (trim(body).empty()) return state;
    for (const auto& [part, offset] : detail::split_pairs(body, bar + 1)) {
        std::string pair = trim(part);
        if (pair.empty())
            throw parse_error("empty slot pair at offset " + std::to_string(offset));
        std::size_t eq = pair.find('=');
        if (eq == std::string::npos)
            throw parse_error("missing '=' in slot pair at offset " + std::to_string(offset));
        std::string slot = to_lower(trim(pair.substr(0, eq)));
        if (slot.empty())
            throw parse_error("empty slot name at offset " + std::to_string(offset));
        state.slots.emplace_back(slot, detail::unescape_value(pair.substr(eq + 1), offset + eq + 1));
    }
    return state;
}

// History for the t-th user turn: all turns with index < t, both speakers,
// plus the user turn at t itself.
inline TurnContext context_at(const Conversation& conv, int t, const Scene& scene,
                              const SceneProfile& profile) {
    const int T = conv.user_turn_count();
    if (t < 1 || t > T)
        throw bounds_error("turn " + std::to_string(t) + " out of range [1, " + std::to_string(T) +
                           "] in dialogue " + conv.dialogue_id);
    TurnContext ctx;
    ctx.dialogue_id = conv.dialogue_id;
    ctx.t = t;
    ctx.scene = &scene;
    ctx.profile = &profile;
    for (const auto& turn : conv.turns) {
        if (turn.index < t || (turn.index == t && turn.speaker == Speaker::user))
            ctx.history.push_back(turn);
    }
    return ctx;
}

struct ConversationIssue {
    std::string dialogue_id;
    int index;
    std::string message;
};

/// Non-fatal structure checks: alternation breaks and index gaps are flagged,
// not rejected (corpora may merge consecutive turns).
inline std::vector<ConversationIssue> validate_conversation(const Conversation& conv) {
    std::vector<ConversationIssue> issues;
    int last_index = 0;
    Speaker last_speaker = Speaker::system;
    for (const auto& turn : conv.turns) {
        if (turn.index != last_index && turn.index != last_index + 1)
            issues.push_back({conv.dialogue_id, turn.index,
                              "non-contiguous turn index " + std::to_string(turn.index)});
        if (turn.speaker == last_speaker)
            issues.push_back({conv.dialogue_id, turn.index,
                              turn.speaker == Speaker::user ? "consecutive user turns"
                                                            : "consecutive system turns"});
        last_index = turn.index;
        last_speaker = turn.speaker;
    }
    if (conv.turns.empty())
        issues.push_back({conv.dialogue_id, 0, "conversation has no turns"});
    return issues;
}

}  // namespace screc
