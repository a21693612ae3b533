#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "screc/error.hpp"
#include "screc/util.hpp"

namespace screc {

struct Item {
    std::string item_id;
    // Slot names are stored lowercased; values verbatim.
    std::map<std::string, std::string> attributes;
    std::optional<double> price;
    std::optional<std::vector<double>> position;
};

struct Scene {
    std::string scene_id;
    std::vector<Item> items;
    std::string image_ref;        // opaque locator, never interpreted
    std::string spatial_notes;

    const Item* find_item(const std::string& item_id) const {
        for (const auto& it : items)
            if (it.item_id == item_id) return &it;
        return nullptr;
    }
};

struct Environment {
    std::vector<Scene> scenes;
    std::string schema_version = "1";

    const Scene* find_scene(const std::string& scene_id) const {
        for (const auto& s : scenes)
            if (s.scene_id == scene_id) return &s;
        return nullptr;
    }

    const Item* find_item(const std::string& scene_id, const std::string& item_id) const {
        const Scene* s = find_scene(scene_id);
        if (!s) return nullptr;
        for (const auto& it : s->items)
            if (it.item_id == item_id) return &it;
        return nullptr;
    }

    std::size_t total_items() const {
        std::size_t n = 0;
        for (const auto& s : scenes) n += s.items.size();
        return n;
    }
};

struct SceneProfile {
    std::string scene_id;
    std::string summary;
    // Sorted ascending by item_id.
    std::vector<std::pair<std::string, std::map<std::string, std::string>>> item_catalog;
    std::string canonical_text;
};

// Short human description of an item, e.g. "red jacket". Falls back to the
// bare type or color, then to "item".
inline std::string item_descriptor(const Item& item) {
    std::string color, type;
    auto itc = item.attributes.find("color");
    if (itc != item.attributes.end()) color = to_lower(itc->second);
    auto itt = item.attributes.find("type");
    if (itt != item.attributes.end()) type = to_lower(itt->second);
    if (!color.empty() && !type.empty()) return color + " " + type;
    if (!type.empty()) return type;
    if (!color.empty()) return color;
    return "item";
}

// Canonical grammar:
//   SCENE <scene_id> :: <summary> :: ITEMS [ <id> { slot=value; ... } | ... ]
// Items ascending by item_id, slots ascending by slot name, slot names
// lowercase, single spaces. Deterministic across runs and platforms.
inline std::string canonical_profile_text(const SceneProfile& profile) {
    std::string out = "SCENE " + profile.scene_id + " :: " + profile.summary + " :: ITEMS [ ";
    auto catalog = profile.item_catalog;
    std::sort(catalog.begin(), catalog.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    out += join(catalog.begin(), catalog.end(), " | ", [](const auto& entry) {
        std::string item = entry.first + " { ";
        item += join(entry.second.begin(), entry.second.end(), "; ", [](const auto& kv) {
            return to_lower(kv.first) + "=" + kv.second;
        });
        item += entry.second.empty() ? "}" : " }";
        return item;
    });
    out += " ]";
    return out;
}

inline std::string rule_based_summary(const Scene& scene) {
    std::set<std::string> descriptors;
    for (const auto& item : scene.items) descriptors.insert(item_descriptor(item));
    std::string joined = join(descriptors.begin(), descriptors.end(), ", ",
                              [](const std::string& d) { return d; });
    return "Scene with " + std::to_string(scene.items.size()) + " items: " + joined;
}

using Summarizer = std::function<std::string(const Scene&)>;

// Builds the textual situated profile for a scene. The item catalog always
// mirrors the scene's items exactly; the summary comes from the summarizer
// when one is supplied and falls back to the rule-based sentence on failure.
inline SceneProfile build_profile(const Scene& scene, const Summarizer& summarizer = nullptr,
                                  Warnings* warnings = nullptr) {
    SceneProfile profile;
    profile.scene_id = scene.scene_id;
    if (summarizer) {
        try {
            profile.summary = summarizer(scene);
        } catch (const std::exception& e) {
            warn(warnings, "summarizer failed for scene " + scene.scene_id + " (" + e.what() +
                               "); using rule-based summary");
            profile.summary = rule_based_summary(scene);
        }
    } else {
        profile.summary = rule_based_summary(scene);
    }
    for (const auto& item : scene.items)
        profile.item_catalog.emplace_back(item.item_id, item.attributes);
    std::sort(profile.item_catalog.begin(), profile.item_catalog.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    profile.canonical_text = canonical_profile_text(profile);
    return profile;
}

struct ValidationEntry {
    enum class Severity { warning, error };
    Severity severity;
    std::string path;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;

    bool ok() const { return entries.empty(); }
    std::size_t error_count() const {
        std::size_t n = 0;
        for (const auto& e : entries)
            if (e.severity == ValidationEntry::Severity::error) ++n;
        return n;
    }
};

// The slot vocabulary used for schema checks lives in dialogue.hpp; the
// catalog validator takes it as a plain list to stay self-contained.
inline ValidationReport validate_environment(const Environment& env,
                                             const std::vector<std::string>& known_slots = {}) {
    ValidationReport report;
    std::set<std::string> scene_ids;
    for (const auto& scene : env.scenes) {
        const std::string path = "scenes/" + scene.scene_id;
        if (!scene_ids.insert(scene.scene_id).second)
            report.entries.push_back({ValidationEntry::Severity::error, path, "duplicate scene_id"});
        if (scene.items.empty())
            report.entries.push_back({ValidationEntry::Severity::error, path, "scene has zero items"});
        std::set<std::string> item_ids;
        for (const auto& item : scene.items) {
            const std::string ipath = path + "/items/" + item.item_id;
            if (item.item_id.empty())
                report.entries.push_back({ValidationEntry::Severity::error, ipath, "empty item_id"});
            if (!item_ids.insert(item.item_id).second)
                report.entries.push_back({ValidationEntry::Severity::error, ipath, "duplicate item_id"});
            if (!known_slots.empty()) {
                for (const auto& [slot, value] : item.attributes) {
                    (void)value;
                    bool known = std::find(known_slots.begin(), known_slots.end(), slot) !=
                                 known_slots.end();
                    if (!known && slot != "other")
                        report.entries.push_back({ValidationEntry::Severity::warning, ipath,
                                                  "unknown slot \"" + slot + "\""});
                }
            }
        }
    }
    return report;
}

namespace detail {

inline Item parse_item(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw parse_error("expected item object at " + path);
    if (!j.contains("item_id") || !j["item_id"].is_string())
        throw parse_error("missing item_id at " + path);
    Item item;
    item.item_id = j["item_id"].get<std::string>();
    if (j.contains("attributes")) {
        if (!j["attributes"].is_object())
            throw parse_error("attributes must be an object at " + path);
        for (const auto& [slot, value] : j["attributes"].items()) {
            if (!value.is_string())
                throw parse_error("attribute value for \"" + slot + "\" must be a string at " + path);
            item.attributes[to_lower(slot)] = value.get<std::string>();
        }
    }
    if (j.contains("price") && !j["price"].is_null()) {
        if (!j["price"].is_number()) throw parse_error("price must be a number at " + path);
        item.price = j["price"].get<double>();
    }
    if (j.contains("position") && !j["position"].is_null()) {
        if (!j["position"].is_array()) throw parse_error("position must be an array at " + path);
        std::vector<double> pos;
        for (const auto& v : j["position"]) {
            if (!v.is_number()) throw parse_error("position entries must be numbers at " + path);
            pos.push_back(v.get<double>());
        }
        item.position = std::move(pos);
    }
    return item;
}

}  // namespace detail

inline Environment environment_from_json(const nlohmann::json& doc, const std::string& source) {
    if (!doc.is_object() || !doc.contains("scenes") || !doc["scenes"].is_array())
        throw parse_error("expected top-level \"scenes\" array in " + source);
    Environment env;
    if (doc.contains("schema_version") && doc["schema_version"].is_string())
        env.schema_version = doc["schema_version"].get<std::string>();
    std::set<std::string> scene_ids;
    std::size_t idx = 0;
    for (const auto& js : doc["scenes"]) {
        const std::string path = source + "#scenes[" + std::to_string(idx) + "]";
        if (!js.is_object() || !js.contains("scene_id") || !js["scene_id"].is_string())
            throw parse_error("missing scene_id at " + path);
        Scene scene;
        scene.scene_id = js["scene_id"].get<std::string>();
        if (!scene_ids.insert(scene.scene_id).second)
            throw schema_error("duplicate scene_id \"" + scene.scene_id + "\" at " + path);
        if (js.contains("image_ref") && js["image_ref"].is_string())
            scene.image_ref = js["image_ref"].get<std::string>();
        if (js.contains("spatial_notes") && js["spatial_notes"].is_string())
            scene.spatial_notes = js["spatial_notes"].get<std::string>();
        if (js.contains("items")) {
            if (!js["items"].is_array()) throw parse_error("items must be an array at " + path);
            std::set<std::string> item_ids;
            std::size_t iidx = 0;
            for (const auto& ji : js["items"]) {
                Item item =
                    detail::parse_item(ji, path + "/items[" + std::to_string(iidx) + "]");
                if (!item_ids.insert(item.item_id).second)
                    throw schema_error("duplicate item_id \"" + item.item_id + "\" in scene \"" +
                                       scene.scene_id + "\" at " + path);
                scene.items.push_back(std::move(item));
                ++iidx;
            }
        }
        env.scenes.push_back(std::move(scene));
        ++idx;
    }
    if (env.scenes.empty()) throw schema_error("environment has no scenes in " + source);
    return env;
}

inline Environment load_environment(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw parse_error("cannot open environment file " + path);
    std::string data;
    char buf[1 << 16];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) data.append(buf, n);
    std::fclose(f);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(data);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error("malformed environment file " + path + ": " + e.what());
    }
    return environment_from_json(doc, path);
}

// Canonical serialization: fixed key order, items and attributes in stored
// order (attributes are already sorted maps). load -> serialize -> load is
// the identity on this form.
inline nlohmann::ordered_json environment_to_json(const Environment& env) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = env.schema_version;
    doc["scenes"] = nlohmann::ordered_json::array();
    for (const auto& scene : env.scenes) {
        nlohmann::ordered_json js;
        js["scene_id"] = scene.scene_id;
        js["image_ref"] = scene.image_ref;
        js["spatial_notes"] = scene.spatial_notes;
        js["items"] = nlohmann::ordered_json::array();
        for (const auto& item : scene.items) {
            nlohmann::ordered_json ji;
            ji["item_id"] = item.item_id;
            ji["attributes"] = nlohmann::ordered_json::object();
            for (const auto& [slot, value] : item.attributes) ji["attributes"][slot] = value;
            if (item.price) ji["price"] = *item.price;
            if (item.position) ji["position"] = *item.position;
            js["items"].push_back(std::move(ji));
        }
        doc["scenes"].push_back(std::move(js));
    }
    return doc;
}

}  // namespace screc
