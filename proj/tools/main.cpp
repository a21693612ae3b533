// Command-line front end: dataset ingestion, index and reranker training,
// corpus evaluation, synthetic benchmarking, and an interactive chat loop.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "screc/screc.hpp"

namespace {

void write_json_file(const std::string& path, const nlohmann::ordered_json& doc) {
    std::ofstream out(path);
    if (!out) throw screc::contract_error("cannot write " + path);
    out << doc.dump(2) << "\n";
}

void print_warnings(const screc::Warnings& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

screc::PipelineConfig pipeline_config(int k, int coarse_n, int dimension, double tau,
                                      double epsilon, double gamma) {
    screc::PipelineConfig config;
    config.rec.k = k;
    config.rec.epsilon = epsilon;
    config.rec.gamma = gamma;
    config.retrieval.coarse_n = coarse_n;
    config.retrieval.dimension = dimension;
    config.tau = tau;
    return config;
}

// The mock user policy needs an action space; the corpus's own gold states
// are the natural one.
std::vector<screc::DialogueState> corpus_action_space(const screc::Corpus& corpus) {
    std::vector<screc::DialogueState> actions;
    for (const auto& d : corpus.dialogues) {
        for (const auto& turn : d.conversation.turns) {
            if (!turn.state) continue;
            if (std::find(actions.begin(), actions.end(), *turn.state) == actions.end())
                actions.push_back(*turn.state);
        }
    }
    if (actions.empty())
        throw screc::contract_error(
            "corpus has no annotated states; the mock backend needs them as its action space");
    return actions;
}

void apply_transition_script(screc::MockBackend& backend, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw screc::contract_error("cannot read transition script " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw screc::parse_error("malformed transition script " + path + ": " + e.what());
    }
    for (const auto& [dialogue_id, turns] : doc.items()) {
        for (const auto& [turn, spec] : turns.items()) {
            screc::TransitionInference inf;
            inf.z_yes = spec.value("z_yes", 0.0);
            inf.z_no = spec.value("z_no", 0.0);
            inf.target_profile_text = spec.value("target_profile", std::string{});
            backend.script_transition(dialogue_id, std::atoi(turn.c_str()), inf);
        }
    }
}

nlohmann::ordered_json ranking_rows(const std::vector<screc::DialogueResult>& dialogues) {
    auto rows = nlohmann::ordered_json::array();
    for (const auto& d : dialogues) {
        nlohmann::ordered_json row;
        row["dialogue_id"] = d.dialogue_id;
        row["final_scene"] = d.final_scene;
        row["scene_match"] = d.scene_match;
        row["ranking"] = d.final_ranking;
        row["response"] = d.response;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"situated conversational recommendation engine"};
    app.require_subcommand(1);

    std::vector<std::string> inputs;
    std::string out_path, env_out, index_out, params_out, report_out;
    std::string endpoint, backend_kind = "mock", ground = "predicted", split_ratio;
    std::string transition_script, scene_id, env_path;
    int k = 5, coarse_n = 10, dimension = 64, epochs = 500, n_bins = 10;
    int episodes = 20, n_scenes = 4, items_per_scene = 10, n_attributes = 2, n_turns = 4;
    int threads = 1;
    double tau = 0.5, epsilon = 1e-9, gamma = 1.0, beta = 1.0, lr = 0.1, h = 1e-6, tol = 1e-4;
    uint64_t seed = 7;
    bool script_gold = false, use_remote_embedder = false;

    auto* ingest = app.add_subcommand("ingest", "validate dataset files and report stats");
    ingest->add_option("--input", inputs, "dataset JSON files")->required();
    ingest->add_option("--out", out_path, "stats report JSON");
    ingest->add_option("--env-out", env_out, "canonical environment JSON");

    auto* index_cmd = app.add_subcommand("index", "build and save the scene vector index");
    index_cmd->add_option("--input", inputs, "dataset JSON files")->required();
    index_cmd->add_option("--out", index_out, "index file")->required();
    index_cmd->add_option("--dimension", dimension, "embedding dimension");

    auto* train = app.add_subcommand("train-reranker", "fit the bilinear reranker on corpus transitions");
    train->add_option("--input", inputs, "dataset JSON files")->required();
    train->add_option("--out", params_out, "parameter file")->required();
    train->add_option("--report", report_out, "training report JSON");
    train->add_option("--dimension", dimension, "embedding dimension");
    train->add_option("--epochs", epochs, "training epochs");
    train->add_option("--lr", lr, "learning rate");
    train->add_option("--seed", seed, "init seed");
    train->add_option("--coarse-n", coarse_n, "coarse candidate count");

    auto* evaluate = app.add_subcommand("evaluate", "replay a corpus through the engine");
    evaluate->add_option("--input", inputs, "dataset JSON files")->required();
    evaluate->add_option("--out", report_out, "report JSON");
    evaluate->add_option("--backend", backend_kind, "mock or remote")
        ->check(CLI::IsMember({"mock", "remote"}));
    evaluate->add_option("--endpoint", endpoint, "remote backend endpoint (or SCREC_ENDPOINT)");
    evaluate->add_option("--ground", ground, "grounding source: predicted or gold")
        ->check(CLI::IsMember({"predicted", "gold"}));
    evaluate->add_option("--split-ratio", split_ratio,
                         "a:b transition:retention balanced subset, e.g. 1:1");
    evaluate->add_option("--seed", seed, "split sampling seed");
    evaluate->add_option("--k", k, "recommendation list length");
    evaluate->add_option("--N", coarse_n, "coarse candidate count");
    evaluate->add_option("--dimension", dimension, "embedding dimension");
    evaluate->add_option("--tau", tau, "transition threshold");
    evaluate->add_option("--epsilon", epsilon, "likelihood floor");
    evaluate->add_option("--gamma", gamma, "evidence discount");
    evaluate->add_option("--beta", beta, "mock user rationality");
    evaluate->add_option("--reranker", params_out, "trained reranker parameter file");
    evaluate->add_option("--transition-script", transition_script,
                         "scripted decision logits JSON (mock backend)");
    evaluate->add_flag("--script-gold", script_gold,
                       "script the mock decision head from corpus ground truth");
    evaluate->add_flag("--remote-embedder", use_remote_embedder,
                       "embed profiles via the remote /embed route");

    auto* simulate = app.add_subcommand("simulate", "benchmark on a generated world");
    simulate->add_option("--out", report_out, "report JSON");
    simulate->add_option("--episodes", episodes, "episode count");
    simulate->add_option("--scenes", n_scenes, "scene count");
    simulate->add_option("--items", items_per_scene, "items per scene");
    simulate->add_option("--attributes", n_attributes, "attributes per item");
    simulate->add_option("--turns", n_turns, "user turns per episode");
    simulate->add_option("--beta", beta, "user rationality");
    simulate->add_option("--seed", seed, "world seed");
    simulate->add_option("--threads", threads, "episode workers");
    simulate->add_option("--k", k, "recommendation list length");
    simulate->add_option("--tau", tau, "transition threshold");

    auto* chat = app.add_subcommand("chat", "interactive dialogue loop");
    chat->add_option("--backend", backend_kind, "mock or remote")
        ->check(CLI::IsMember({"mock", "remote"}));
    chat->add_option("--endpoint", endpoint, "remote backend endpoint (or SCREC_ENDPOINT)");
    chat->add_option("--env", env_path, "environment JSON (default: built-in demo world)");
    chat->add_option("--scene", scene_id, "starting scene");
    chat->add_option("--k", k, "recommendation list length");
    chat->add_option("--beta", beta, "mock user rationality");

    auto* grad = app.add_subcommand("grad-check", "verify reranker gradients numerically");
    grad->add_option("--dimension", dimension, "embedding dimension");
    grad->add_option("--seed", seed, "probe seed");
    grad->add_option("--step", h, "finite-difference step");
    grad->add_option("--tol", tol, "max relative error allowed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            screc::Warnings warnings;
            screc::Corpus corpus = screc::ingest_dataset(inputs, screc::default_schema(), &warnings);
            print_warnings(warnings);
            const auto s = screc::stats(corpus);
            const auto report = screc::validate_environment(corpus.env, screc::default_schema().slots);
            for (const auto& entry : report.entries)
                std::cerr << (entry.severity == screc::ValidationEntry::Severity::error
                                  ? "error: "
                                  : "warning: ")
                          << entry.path << ": " << entry.message << "\n";
            nlohmann::ordered_json doc;
            doc["stats"] = {{"n_dialogues", s.n_dialogues},
                            {"n_utterances", s.n_utterances},
                            {"n_scenes", s.n_scenes},
                            {"n_items", s.n_items}};
            doc["validation_errors"] = report.error_count();
            doc["warnings"] = warnings.size();
            std::cout << doc.dump(2) << "\n";
            if (!out_path.empty()) write_json_file(out_path, doc);
            if (!env_out.empty())
                write_json_file(env_out, screc::environment_to_json(corpus.env));
            return report.ok() ? 0 : 1;
        }

        if (*index_cmd) {
            screc::Corpus corpus = screc::ingest_dataset(inputs);
            screc::HashingEmbedder embedder(dimension);
            std::vector<screc::SceneProfile> profiles;
            for (const auto& scene : corpus.env.scenes)
                profiles.push_back(screc::build_profile(scene));
            const auto index = screc::build_index(profiles, embedder);
            screc::save_index(index, index_out);
            std::cout << "indexed " << index.size() << " scenes at dimension "
                      << index.dimension << " -> " << index_out << "\n";
            return 0;
        }

        if (*train) {
            screc::Corpus corpus = screc::ingest_dataset(inputs);
            screc::MockUserConfig mock_config;
            mock_config.action_space = {screc::DialogueState{"OTHER", {}}};
            screc::MockBackend backend(mock_config);  // never queried during training
            auto config = pipeline_config(k, coarse_n, dimension, tau, epsilon, gamma);
            screc::Pipeline pipeline = screc::make_pipeline(corpus.env, backend, config);
            const auto examples = screc::make_rerank_examples(corpus, pipeline);
            if (examples.empty())
                throw screc::contract_error("corpus has no usable transition turns to train on");
            screc::RerankerTrainConfig train_config;
            train_config.learning_rate = lr;
            train_config.epochs = epochs;
            train_config.seed = seed;
            const auto result = screc::train_reranker(examples, dimension, train_config);
            screc::save_reranker(result.params, params_out);
            const double check = screc::reranker_grad_check(result.params, examples.front());
            nlohmann::ordered_json doc;
            doc["examples"] = examples.size();
            doc["epochs"] = result.trace.size();
            doc["initial_loss"] = result.trace.front();
            doc["final_loss"] = result.trace.back();
            doc["grad_check_max_rel_error"] = check;
            std::cout << doc.dump(2) << "\n";
            if (!report_out.empty()) write_json_file(report_out, doc);
            return 0;
        }

        if (*evaluate) {
            screc::Warnings warnings;
            screc::Corpus corpus = screc::ingest_dataset(inputs, screc::default_schema(), &warnings);
            print_warnings(warnings);
            auto config = pipeline_config(k, coarse_n, dimension, tau, epsilon, gamma);
            std::vector<std::string> selected;
            if (!split_ratio.empty()) {
                const auto colon = split_ratio.find(':');
                if (colon == std::string::npos)
                    throw screc::config_error("--split-ratio must look like a:b");
                const int ra = std::atoi(split_ratio.substr(0, colon).c_str());
                const int rb = std::atoi(split_ratio.substr(colon + 1).c_str());
                const auto split = screc::balance_split(corpus, ra, rb, seed);
                selected = split.transition_ids;
                selected.insert(selected.end(), split.retention_ids.begin(),
                                split.retention_ids.end());
                std::cout << "balanced subset: " << split.transition_ids.size()
                          << " transition + " << split.retention_ids.size() << " retention\n";
            }
            std::unique_ptr<screc::Backend> backend;
            std::unique_ptr<screc::RemoteBackend> remote;
            std::shared_ptr<screc::Embedder> embedder;
            if (backend_kind == "remote") {
                if (endpoint.empty())
                    if (const char* env = std::getenv("SCREC_ENDPOINT")) endpoint = env;
                screc::RemoteBackendConfig rc;
                rc.endpoint = endpoint;
                remote = std::make_unique<screc::RemoteBackend>(rc);
                if (use_remote_embedder)
                    embedder = std::make_shared<screc::RemoteEmbedder>(*remote, dimension);
            } else {
                screc::MockUserConfig mock_config;
                mock_config.beta = beta;
                mock_config.action_space = corpus_action_space(corpus);
                auto mock = std::make_unique<screc::MockBackend>(mock_config);
                if (!transition_script.empty())
                    apply_transition_script(*mock, transition_script);
                if (script_gold) {
                    screc::Pipeline probe = screc::make_pipeline(corpus.env, *mock, config);
                    screc::script_from_corpus(*mock, corpus, probe);
                }
                backend = std::move(mock);
            }
            screc::Backend& chosen = remote ? static_cast<screc::Backend&>(*remote) : *backend;
            auto result = screc::evaluate_corpus(corpus, chosen, config, ground == "gold",
                                                 selected, embedder);
            std::cout << screc::report_table(result.report);
            nlohmann::ordered_json doc = screc::report_json(result.report);
            doc["dialogues"] = ranking_rows(result.dialogues);
            if (!report_out.empty()) write_json_file(report_out, doc);
            return 0;
        }

        if (*simulate) {
            screc::SyntheticWorldConfig wc;
            wc.episodes = episodes;
            wc.n_scenes = n_scenes;
            wc.items_per_scene = items_per_scene;
            wc.n_attributes = n_attributes;
            wc.n_turns = n_turns;
            wc.beta = beta;
            wc.seed = seed;
            const auto world = screc::make_world(wc);
            auto config = pipeline_config(k, coarse_n, dimension, tau, epsilon, gamma);
            const auto result = screc::simulate_benchmark(world, config, threads);
            std::size_t matches = 0;
            for (const auto& ep : result.episodes) matches += ep.scene_match ? 1 : 0;
            std::cout << screc::report_table(result.report);
            std::cout << "scene_match: " << matches << "/" << result.episodes.size() << "\n";
            char digest[32];
            std::snprintf(digest, sizeof digest, "%016llx",
                          static_cast<unsigned long long>(screc::world_digest(world)));
            std::cout << "world_digest: " << digest << "\n";
            if (!report_out.empty()) {
                nlohmann::ordered_json doc = screc::report_json(result.report);
                doc["world_digest"] = digest;
                auto rows = nlohmann::ordered_json::array();
                for (const auto& ep : result.episodes) {
                    nlohmann::ordered_json row;
                    row["episode_id"] = ep.episode_id;
                    row["final_scene"] = ep.final_scene;
                    row["scene_match"] = ep.scene_match;
                    row["ranking"] = ep.final_ranking;
                    rows.push_back(std::move(row));
                }
                doc["episodes"] = std::move(rows);
                write_json_file(report_out, doc);
            }
            return 0;
        }

        if (*chat) {
            screc::Environment env;
            std::unique_ptr<screc::Backend> owned;
            std::unique_ptr<screc::RemoteBackend> remote;
            std::unique_ptr<screc::World> world;
            if (!env_path.empty()) env = screc::load_environment(env_path);
            if (backend_kind == "remote") {
                if (endpoint.empty())
                    if (const char* e = std::getenv("SCREC_ENDPOINT")) endpoint = e;
                screc::RemoteBackendConfig rc;
                rc.endpoint = endpoint;
                remote = std::make_unique<screc::RemoteBackend>(rc);
                if (env_path.empty())
                    throw screc::config_error("remote chat needs --env");
            } else {
                if (env_path.empty()) {
                    screc::SyntheticWorldConfig wc;
                    wc.beta = beta;
                    world = std::make_unique<screc::World>(screc::make_world(wc));
                    env = world->env;
                    auto mock =
                        std::make_unique<screc::MockBackend>(screc::world_mock_config(*world));
                    screc::script_world(*mock, *world);
                    owned = std::move(mock);
                } else {
                    screc::MockUserConfig mock_config;
                    mock_config.beta = beta;
                    for (const auto& scene : env.scenes)
                        for (const auto& item : scene.items)
                            for (const auto& [slot, value] : item.attributes) {
                                screc::DialogueState s{"INFORM:GET", {{slot, value}}};
                                if (std::find(mock_config.action_space.begin(),
                                              mock_config.action_space.end(),
                                              s) == mock_config.action_space.end())
                                    mock_config.action_space.push_back(s);
                            }
                    owned = std::make_unique<screc::MockBackend>(mock_config);
                }
            }
            screc::Backend& chosen =
                remote ? static_cast<screc::Backend&>(*remote) : *owned;
            auto config = pipeline_config(k, coarse_n, dimension, tau, epsilon, gamma);
            screc::Pipeline pipeline = screc::make_pipeline(env, chosen, config);
            std::string start = scene_id.empty() ? env.scenes.front().scene_id : scene_id;
            screc::DialogueRun run = screc::begin_dialogue(pipeline, "chat", start);
            std::cout << "scene " << run.scene->scene_id << " ("
                      << run.scene->items.size() << " items). :scene <id>, :trace, :quit\n";
            screc::TurnLog last;
            std::string line;
            while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
                if (line == ":quit") break;
                if (line == ":trace") {
                    nlohmann::ordered_json trace = screc::session_snapshot(run.session);
                    trace["last_transition_probability"] =
                        last.transition.decision.probability;
                    trace["last_regrounded"] = last.regrounded;
                    std::cout << trace.dump(2) << "\n";
                    continue;
                }
                if (line.rfind(":scene ", 0) == 0) {
                    const std::string target = line.substr(7);
                    screc::reground_run(pipeline, run, target);
                    std::cout << "moved to " << target << "\n";
                    continue;
                }
                if (line.empty()) continue;
                screc::TurnInput input;
                input.text = line;
                last = screc::run_turn(pipeline, run, input);
                print_warnings(last.warnings);
                if (last.regrounded)
                    std::cout << "[moved to " << run.scene->scene_id << "]\n";
                std::cout << last.response << "\n";
            }
            return 0;
        }

        if (*grad) {
            screc::SplitMix64 rng(seed);
            screc::RerankerParams params = screc::RerankerParams::zero(dimension);
            for (auto& w : params.weights) w = rng.uniform_range(-0.5, 0.5);
            params.bias = rng.uniform_range(-0.5, 0.5);
            screc::RerankExample ex;
            const auto d = static_cast<std::size_t>(dimension);
            ex.query.resize(d);
            for (auto& x : ex.query) x = rng.uniform_range(-1.0, 1.0);
            for (int c = 0; c < 4; ++c) {
                screc::EmbeddingVector vec(d);
                for (auto& x : vec) x = rng.uniform_range(-1.0, 1.0);
                ex.pool.push_back(std::move(vec));
            }
            ex.gold_index = 0;
            const double worst = screc::reranker_grad_check(params, ex, h);
            std::printf("max relative error: %.3e (tolerance %.1e)\n", worst, tol);
            return worst <= tol ? 0 : 1;
        }
    } catch (const screc::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
