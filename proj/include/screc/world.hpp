#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "screc/backend.hpp"
#include "screc/catalog.hpp"
#include "screc/corpus.hpp"
#include "screc/mock_backend.hpp"
#include "screc/util.hpp"

namespace screc {

struct SyntheticWorldConfig {
    int n_scenes = 4;
    int items_per_scene = 10;
    int n_attributes = 2;  // slots per item, from the fixed slot list
    int n_turns = 4;       // user turns per episode
    int episodes = 20;
    double beta = 1.0;
    uint64_t seed = 7;

    void validate() const {
        if (n_scenes < 1) throw config_error("n_scenes must be >= 1");
        if (items_per_scene < 1) throw config_error("items_per_scene must be >= 1");
        if (n_attributes < 1 || n_attributes > 6)
            throw config_error("n_attributes must be in [1, 6]");
        if (n_turns < 1) throw config_error("n_turns must be >= 1");
        if (episodes < 1) throw config_error("episodes must be >= 1");
        if (beta < 0.0) throw config_error("beta must be >= 0");
        double combos = std::pow(5.0, n_attributes);
        if (items_per_scene > combos)
            throw config_error("items_per_scene exceeds distinct attribute combinations");
    }
};

namespace worldgen {

struct SlotValues {
    const char* slot;
    const char* values[5];
};

// Fixed vocabulary, five values per slot. Items drawn from it are always
// fully attributed over the slots in play, which keeps the per-item
// normaliser of the user policy identical across items.
inline const std::vector<SlotValues>& slot_table() {
    static const std::vector<SlotValues> table{
        {"color", {"red", "blue", "grey", "green", "black"}},
        {"type", {"jacket", "hat", "shoes", "dress", "coat"}},
        {"pattern", {"plain", "striped", "floral", "checkered", "dotted"}},
        {"brand", {"northlane", "cozyco", "trailmax", "urbanedge", "parkrow"}},
        {"size", {"xs", "s", "m", "l", "xl"}},
        {"materials", {"cotton", "wool", "leather", "denim", "linen"}},
    };
    return table;
}

inline std::string pad2(int n) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", n);
    return buf;
}

}  // namespace worldgen

struct EpisodeTurn {
    DialogueState observed;
    std::string text;
    bool transition = false;  // the scene switches going into this turn
};

struct Episode {
    std::string episode_id;
    std::string start_scene;
    std::string final_scene;
    std::string target_item;   // gold item, lives in final_scene
    int transition_turn = 0;   // 1-based user turn, 0 = no transition
    std::vector<EpisodeTurn> turns;
};

struct World {
    Environment env;
    std::vector<DialogueState> action_space;
    std::vector<Episode> episodes;
    double beta = 1.0;
    uint64_t seed = 0;
};

// Deterministic world: scenes of fully-attributed items, a single-slot
// action space, and episodes whose user turns are sampled from the rational
// like-policy toward a hidden target item. Odd episodes switch scenes at the
// middle turn when the world is big enough to allow it.
inline World make_world(const SyntheticWorldConfig& config) {
    config.validate();
    const auto& table = worldgen::slot_table();
    World world;
    world.beta = config.beta;
    world.seed = config.seed;
    SplitMix64 rng(config.seed);

    const int n_combos = static_cast<int>(std::pow(5.0, config.n_attributes) + 0.5);
    int item_counter = 0;
    for (int s = 0; s < config.n_scenes; ++s) {
        Scene scene;
        scene.scene_id = "s" + worldgen::pad2(s);
        std::vector<int> combos(static_cast<std::size_t>(n_combos));
        for (int i = 0; i < n_combos; ++i) combos[static_cast<std::size_t>(i)] = i;
        for (std::size_t i = 0; i < combos.size(); ++i)
            std::swap(combos[i], combos[i + rng.uniform_int(combos.size() - i)]);
        for (int i = 0; i < config.items_per_scene; ++i) {
            Item item;
            item.item_id = "it" + worldgen::pad2(item_counter++);
            int code = combos[static_cast<std::size_t>(i)];
            for (int a = 0; a < config.n_attributes; ++a) {
                const auto& sv = table[static_cast<std::size_t>(a)];
                item.attributes[sv.slot] = sv.values[code % 5];
                code /= 5;
            }
            scene.items.push_back(std::move(item));
        }
        world.env.scenes.push_back(std::move(scene));
    }

    for (int a = 0; a < config.n_attributes; ++a) {
        const auto& sv = table[static_cast<std::size_t>(a)];
        for (int v = 0; v < 5; ++v)
            world.action_space.push_back(DialogueState{"INFORM:GET", {{sv.slot, sv.values[v]}}});
    }

    const bool transitions_possible = config.n_scenes >= 2 && config.n_turns >= 2;
    auto sample_action = [&](const Item& target) {
        std::vector<double> weights;
        weights.reserve(world.action_space.size());
        double total = 0.0;
        for (const auto& a : world.action_space) {
            const double w = std::exp(config.beta * compat(a, target));
            weights.push_back(w);
            total += w;
        }
        double u = rng.uniform() * total;
        std::size_t pick = 0;
        for (; pick + 1 < weights.size(); ++pick) {
            if (u < weights[pick]) break;
            u -= weights[pick];
        }
        return world.action_space[pick];
    };

    for (int e = 0; e < config.episodes; ++e) {
        Episode ep;
        ep.episode_id = "ep" + worldgen::pad2(e);
        const auto start = rng.uniform_int(static_cast<std::size_t>(config.n_scenes));
        ep.start_scene = world.env.scenes[start].scene_id;
        const bool with_transition = transitions_possible && (e % 2 == 1);
        std::size_t final_idx = start;
        if (with_transition) {
            ep.transition_turn = config.n_turns / 2 + 1;
            final_idx = rng.uniform_int(static_cast<std::size_t>(config.n_scenes) - 1);
            if (final_idx >= start) ++final_idx;
        }
        ep.final_scene = world.env.scenes[final_idx].scene_id;
        const Scene& start_scene = world.env.scenes[start];
        const Scene& final_scene = world.env.scenes[final_idx];
        const Item& pre_target =
            start_scene.items[rng.uniform_int(start_scene.items.size())];
        const Item& final_target =
            final_scene.items[rng.uniform_int(final_scene.items.size())];
        ep.target_item = final_target.item_id;
        for (int t = 1; t <= config.n_turns; ++t) {
            EpisodeTurn turn;
            turn.transition = ep.transition_turn != 0 && t == ep.transition_turn;
            const Item& target =
                (ep.transition_turn != 0 && t < ep.transition_turn) ? pre_target : final_target;
            turn.observed = sample_action(target);
            turn.text = "Looking for " + turn.observed.slots.front().second + ".";
            ep.turns.push_back(std::move(turn));
        }
        world.episodes.push_back(std::move(ep));
    }
    return world;
}

// Registers the scripted decision logits for every transition turn: a strong
// yes with the target scene's canonical profile as the retrieval query.
inline void script_world(MockBackend& backend, const World& world) {
    for (const auto& ep : world.episodes) {
        if (ep.transition_turn == 0) continue;
        const Scene* scene = world.env.find_scene(ep.final_scene);
        const SceneProfile profile = build_profile(*scene);
        backend.script_transition(ep.episode_id, ep.transition_turn,
                                  TransitionInference{10.0, -10.0, profile.canonical_text});
    }
}

inline MockUserConfig world_mock_config(const World& world) {
    MockUserConfig config;
    config.beta = world.beta;
    config.action_space = world.action_space;
    config.seed = world.seed;
    return config;
}

// Corpus form of the same world: each episode becomes a dialogue whose user
// turns carry gold states and whose closing system turn is the gold
// response; the gold item is attached to the final user turn.
inline Corpus world_to_corpus(const World& world) {
    Corpus corpus;
    corpus.env = world.env;
    for (const auto& ep : world.episodes) {
        Dialogue dialogue;
        auto& conv = dialogue.conversation;
        conv.dialogue_id = ep.episode_id;
        const Scene* final_scene = world.env.find_scene(ep.final_scene);
        const Item* target = final_scene->find_item(ep.target_item);
        for (std::size_t i = 0; i < ep.turns.size(); ++i) {
            const int t = static_cast<int>(i) + 1;
            Turn user;
            user.index = t;
            user.speaker = Speaker::user;
            user.text = ep.turns[i].text;
            user.state = ep.turns[i].observed;
            conv.turns.push_back(std::move(user));
            const bool in_final =
                ep.transition_turn == 0 || t >= ep.transition_turn;
            dialogue.scene_by_user_turn.push_back(in_final ? ep.final_scene : ep.start_scene);
            Turn system;
            system.index = t;
            system.speaker = Speaker::system;
            system.text = i + 1 == ep.turns.size()
                              ? recommendation_template({item_descriptor(*target)})
                              : "Okay.";
            conv.turns.push_back(std::move(system));
        }
        dialogue.gold_items[static_cast<int>(ep.turns.size())] = {ep.target_item};
        corpus.dialogues.push_back(std::move(dialogue));
    }
    return corpus;
}

// Content fingerprint for determinism checks: equal seeds must reproduce it
// bit for bit, different seeds should not.
inline uint64_t world_digest(const World& world) {
    std::string blob = environment_to_json(world.env).dump();
    blob += "|beta=" + format_g17(world.beta);
    for (const auto& a : world.action_space) blob += "|" + serialize_state(a);
    for (const auto& ep : world.episodes) {
        blob += "|" + ep.episode_id + ":" + ep.start_scene + ">" + ep.final_scene + ":" +
                ep.target_item + "@" + std::to_string(ep.transition_turn);
        for (const auto& turn : ep.turns)
            blob += ";" + serialize_state(turn.observed) + "/" + turn.text;
    }
    return fnv1a64(blob);
}

}  // namespace screc
