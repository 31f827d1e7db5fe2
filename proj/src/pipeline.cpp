#include "sceneforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sceneforge/errors.hpp"
#include "sceneforge/http_client.hpp"
#include "sceneforge/ply.hpp"

namespace sceneforge {

using nlohmann::json;

RunConfig::RunConfig() {
    for (SpatialPredicate p : kAllPredicates) predicate_mix.emplace_back(p, 1.0);
}

std::filesystem::path RunConfig::pool_path() const {
    const std::filesystem::path p(pool_dir);
    return p.is_absolute() ? p : run_dir / p;
}

std::filesystem::path RunConfig::scenes_path() const {
    const std::filesystem::path p(scenes_dir);
    return p.is_absolute() ? p : run_dir / p;
}

namespace {

const std::map<std::string, ViewPose>& named_views() {
    static const std::map<std::string, ViewPose> views = [] {
        std::map<std::string, ViewPose> v;
        for (const ViewPose& pose : canonical_views()) v.emplace(pose.name, pose);
        v.emplace("right", ViewPose("right", {-1, 0, 0}, {0, 0, 1}));
        v.emplace("bottom", ViewPose("bottom", {0, 0, 1}, {0, 1, 0}));
        return v;
    }();
    return views;
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
    json distinctions = json::object();
    for (const auto& [d, w] : cfg.distinction_weights) distinctions[to_string(d)] = w;
    json counts = json::array();
    for (const auto& [n, w] : cfg.distractor_counts) counts.push_back({n, w});
    json mix = json::array();
    for (const auto& [p, w] : cfg.predicate_mix) mix.push_back({to_string(p), w});
    json views = json::array();
    for (const ViewPose& v : cfg.annotation.views) views.push_back(v.name);

    json j = {
        {"seed", cfg.seed},
        {"run_dir", cfg.run_dir.string()},
        {"pool_dir", cfg.pool_dir},
        {"scenes_dir", cfg.scenes_dir},
        {"distinctions", distinctions},
        {"distractor_counts", counts},
        {"predicate_mix", mix},
        {"clearance", cfg.clearance},
        {"color_same_max", cfg.color_same_max},
        {"color_diff_min", cfg.color_diff_min},
        {"annotation",
         {{"qa_rounds", cfg.annotation.qa_rounds},
          {"views", views},
          {"iter_rounds", cfg.annotation.iter_rounds},
          {"max_answer_words", cfg.annotation.max_answer_words},
          {"image_size", cfg.annotation.image_width},
          {"prompts",
           {{"version", cfg.annotation.prompts.version},
            {"describe", cfg.annotation.prompts.describe_prompt},
            {"question_seed", cfg.annotation.prompts.question_seed},
            {"sum_p2", cfg.annotation.prompts.sum_p2},
            {"sum_p3", cfg.annotation.prompts.sum_p3}}}}},
        {"client",
         {{"kind", cfg.client.kind},
          {"endpoint", cfg.client.endpoint},
          {"model", cfg.client.model},
          {"key_env", cfg.client.key_env}}},
        {"synthetic",
         {{"floor_size", cfg.background.floor_size},
          {"floor_points", cfg.background.floor_points},
          {"clutter_objects", cfg.background.clutter_objects},
          {"target_diag_min", cfg.background.target_diag_min},
          {"target_diag_max", cfg.background.target_diag_max}}},
    };
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
    const json j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    RunConfig cfg;
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("run_dir")) cfg.run_dir = j.at("run_dir").get<std::string>();
    if (j.contains("pool_dir")) cfg.pool_dir = j.at("pool_dir").get<std::string>();
    if (j.contains("scenes_dir")) cfg.scenes_dir = j.at("scenes_dir").get<std::string>();
    if (j.contains("distinctions")) {
        cfg.distinction_weights.clear();
        for (const auto& [key, value] : j.at("distinctions").items()) {
            cfg.distinction_weights[distinction_from_string(key)] = value.get<double>();
        }
    }
    if (j.contains("distractor_counts")) {
        cfg.distractor_counts.clear();
        for (const auto& pair : j.at("distractor_counts")) {
            cfg.distractor_counts.emplace_back(pair.at(0).get<std::size_t>(), pair.at(1).get<double>());
        }
    }
    if (j.contains("predicate_mix")) {
        cfg.predicate_mix.clear();
        for (const auto& pair : j.at("predicate_mix")) {
            cfg.predicate_mix.emplace_back(predicate_from_string(pair.at(0).get<std::string>()),
                                           pair.at(1).get<double>());
        }
    }
    if (j.contains("clearance")) cfg.clearance = j.at("clearance").get<double>();
    if (j.contains("color_same_max")) cfg.color_same_max = j.at("color_same_max").get<double>();
    if (j.contains("color_diff_min")) cfg.color_diff_min = j.at("color_diff_min").get<double>();
    if (j.contains("annotation")) {
        const json& a = j.at("annotation");
        if (a.contains("qa_rounds")) cfg.annotation.qa_rounds = a.at("qa_rounds").get<int>();
        if (a.contains("iter_rounds")) cfg.annotation.iter_rounds = a.at("iter_rounds").get<int>();
        if (a.contains("max_answer_words")) {
            cfg.annotation.max_answer_words = a.at("max_answer_words").get<int>();
        }
        if (a.contains("image_size")) {
            cfg.annotation.image_width = a.at("image_size").get<int>();
            cfg.annotation.image_height = cfg.annotation.image_width;
        }
        if (a.contains("views")) {
            cfg.annotation.views.clear();
            for (const auto& name : a.at("views")) {
                const auto it = named_views().find(name.get<std::string>());
                if (it == named_views().end()) {
                    throw Error("unknown view name '" + name.get<std::string>() + "'");
                }
                cfg.annotation.views.push_back(it->second);
            }
        }
        if (a.contains("prompts")) {
            const json& p = a.at("prompts");
            if (p.contains("version")) cfg.annotation.prompts.version = p.at("version").get<std::string>();
            if (p.contains("describe")) {
                cfg.annotation.prompts.describe_prompt = p.at("describe").get<std::string>();
            }
            if (p.contains("question_seed")) {
                cfg.annotation.prompts.question_seed = p.at("question_seed").get<std::string>();
            }
            if (p.contains("sum_p2")) cfg.annotation.prompts.sum_p2 = p.at("sum_p2").get<std::string>();
            if (p.contains("sum_p3")) cfg.annotation.prompts.sum_p3 = p.at("sum_p3").get<std::string>();
        }
    }
    if (j.contains("client")) {
        const json& c = j.at("client");
        if (c.contains("kind")) cfg.client.kind = c.at("kind").get<std::string>();
        if (c.contains("endpoint")) cfg.client.endpoint = c.at("endpoint").get<std::string>();
        if (c.contains("model")) cfg.client.model = c.at("model").get<std::string>();
        if (c.contains("key_env")) cfg.client.key_env = c.at("key_env").get<std::string>();
        if (cfg.client.kind != "mock" && cfg.client.kind != "http") {
            throw Error("client.kind must be 'mock' or 'http', got '" + cfg.client.kind + "'");
        }
    }
    if (j.contains("synthetic")) {
        const json& s = j.at("synthetic");
        if (s.contains("floor_size")) cfg.background.floor_size = s.at("floor_size").get<double>();
        if (s.contains("floor_points")) {
            cfg.background.floor_points = s.at("floor_points").get<std::size_t>();
        }
        if (s.contains("clutter_objects")) {
            cfg.background.clutter_objects = s.at("clutter_objects").get<int>();
        }
        if (s.contains("target_diag_min")) {
            cfg.background.target_diag_min = s.at("target_diag_min").get<double>();
        }
        if (s.contains("target_diag_max")) {
            cfg.background.target_diag_max = s.at("target_diag_max").get<double>();
        }
    }

    auto check_weights = [](const auto& pairs, const char* what) {
        double total = 0.0;
        for (const auto& [_, w] : pairs) {
            if (w < 0.0) throw Error(std::string(what) + " weights must be >= 0");
            total += w;
        }
        if (total <= 0.0) throw Error(std::string(what) + " weights must not all be zero");
    };
    check_weights(cfg.distinction_weights, "distinction");
    check_weights(cfg.distractor_counts, "distractor count");
    check_weights(cfg.predicate_mix, "predicate");
    if (!(cfg.color_same_max < cfg.color_diff_min)) {
        throw Error("color_same_max must be below color_diff_min");
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from_json(read_file(path));
}

std::string example_config_text() {
    return R"(// Run configuration. All keys are optional; the values below are the defaults.
{
  // Master seed: every scene, placement and mock transcript derives from it.
  "seed": 7,
  // All artifacts live under this directory.
  "run_dir": "runs/demo",
  // Object pool and scene output locations, relative to run_dir.
  "pool_dir": "pool",
  "scenes_dir": "scenes",
  // Relative weights of the four distinction types between target and distractors.
  "distinctions": {
    "location": 1,
    "location+shape": 1,
    "location+color": 1,
    "location+class": 1
  },
  // Distractor-count distribution: pairs of [count, weight].
  "distractor_counts": [[2,1],[3,1],[4,1],[5,1],[6,1],[7,1],[8,1],[9,1],[10,1]],
  // Relative weights of the 13 spatial predicates: pairs of [name, weight].
  // between binds 2 distractors, surrounded 4, the rest 1.
  "predicate_mix": [
    ["left",1],["right",1],["front",1],["back",1],["above",1],["below",1],
    ["upper_left",1],["upper_right",1],["lower_left",1],["lower_right",1],
    ["between",1],["surrounded",1],["near",1]
  ],
  // Minimum gap enforced by placement, meters.
  "clearance": 0.05,
  // Mean-color thresholds on the 0-255 RGB L2 scale: at most color_same_max
  // counts as the same color, at least color_diff_min as a different one.
  "color_same_max": 30,
  "color_diff_min": 80,
  "annotation": {
    "qa_rounds": 6,
    "views": ["front", "left", "back", "top"],
    "iter_rounds": 3,
    "max_answer_words": 60,
    "image_size": 192
  },
  // "mock" needs no network; "http" posts to {endpoint}/v1/chat/completions
  // with the API key taken from the key_env environment variable.
  "client": { "kind": "mock" },
  // Synthetic backdrop used when scenes are generated straight from the pool.
  "synthetic": {
    "floor_size": 6.0,
    "floor_points": 4096,
    "clutter_objects": 2,
    "target_diag_min": 0.8,
    "target_diag_max": 1.4
  }
}
)";
}

std::string manifest_to_json(const DatasetManifest& m) {
    json entries = json::array();
    for (const ManifestEntry& e : m.entries) {
        entries.push_back({{"id", e.id},
                           {"path", e.path},
                           {"distinction", to_string(e.distinction)},
                           {"num_distractors", e.num_distractors},
                           {"annotated", e.annotated}});
    }
    json j = {{"version", m.version},
              {"seed", m.seed},
              {"config", json::parse(m.config_snapshot)},
              {"entries", entries}};
    return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
    const json j = json::parse(text);
    DatasetManifest m;
    m.version = j.at("version").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_snapshot = j.at("config").dump(2) + "\n";
    for (const json& e : j.at("entries")) {
        m.entries.push_back({e.at("id").get<std::string>(), e.at("path").get<std::string>(),
                             distinction_from_string(e.at("distinction").get<std::string>()),
                             e.at("num_distractors").get<std::size_t>(), e.at("annotated").get<bool>()});
    }
    return m;
}

void save_manifest(const RunConfig& cfg, const DatasetManifest& m) {
    write_file(cfg.run_dir / "manifest.json", manifest_to_json(m));
}

DatasetManifest load_manifest(const RunConfig& cfg) {
    return manifest_from_json(read_file(cfg.run_dir / "manifest.json"));
}

namespace {

template <typename T>
T weighted_draw(const std::vector<std::pair<T, double>>& weights, Rng& rng) {
    double total = 0.0;
    for (const auto& [_, w] : weights) total += w;
    double x = rng.uniform(0.0, total);
    for (const auto& [value, w] : weights) {
        x -= w;
        if (x < 0.0) return value;
    }
    return weights.back().first;
}

}  // namespace

SceneSpec draw_scene_spec(const RunConfig& cfg, const Pool& pool, std::uint64_t scene_seed,
                          std::string scene_id, std::string* target_record_id) {
    if (pool.empty()) throw Error("object pool is empty");
    Rng rng(derive_seed(scene_seed, "spec"));

    std::vector<std::pair<DistinctionType, double>> dist_weights(cfg.distinction_weights.begin(),
                                                                 cfg.distinction_weights.end());
    const DistinctionType distinction = weighted_draw(dist_weights, rng);
    const std::size_t num_distractors = weighted_draw(cfg.distractor_counts, rng);

    // Fill the distractor budget with predicates. Near reads ambiguously when
    // target and distractor share a class ("the chair near the chair"), so it
    // is reserved for scenes whose distractors have a different class.
    std::vector<PredicateAssignment> predicates;
    std::size_t remaining = num_distractors;
    while (remaining > 0) {
        std::vector<std::pair<SpatialPredicate, double>> feasible;
        for (const auto& [pred, weight] : cfg.predicate_mix) {
            if (weight <= 0.0) continue;
            if (pred == SpatialPredicate::Near && distinction != DistinctionType::LocationClass) continue;
            if (predicate_arity(pred).min <= remaining) feasible.emplace_back(pred, weight);
        }
        if (feasible.empty()) {
            throw Error("predicate mix cannot fill a budget of " + std::to_string(remaining));
        }
        const SpatialPredicate pred = weighted_draw(feasible, rng);
        const std::size_t consumed = predicate_arity(pred).min;
        predicates.push_back({pred, consumed});
        remaining -= consumed;
    }

    const ObjectRecord& target = pool.records()[rng.uniform_index(pool.size())];
    if (target_record_id != nullptr) *target_record_id = target.id;

    SceneSpec spec;
    spec.scene_id = std::move(scene_id);
    spec.background = "synthetic:" + target.id;
    spec.target_instance = 1;
    spec.target_class = target.class_label;
    spec.distinction = distinction;
    spec.num_distractors = num_distractors;
    spec.predicates = std::move(predicates);
    spec.clearance = cfg.clearance;
    spec.color_same_max = cfg.color_same_max;
    spec.color_diff_min = cfg.color_diff_min;
    spec.seed = scene_seed;
    return spec;
}

namespace {

struct SceneTask {
    std::size_t index = 0;
    std::optional<ManifestEntry> entry;
    std::string failure;
};

SceneTask build_one_scene(const RunConfig& cfg, const Pool& pool, std::uint64_t master_seed,
                          std::size_t index) {
    SceneTask task;
    task.index = index;
    char name[16];
    std::snprintf(name, sizeof(name), "s%05zu", index);

    const int retry_budget = 8;
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < retry_budget; ++attempt) {
        const std::uint64_t scene_seed =
            derive_seed(derive_seed(master_seed, "scene", index), "attempt", attempt);
        try {
            std::string target_id;
            SceneSpec spec = draw_scene_spec(cfg, pool, scene_seed, name, &target_id);
            const ObjectRecord* target = pool.find(target_id);
            const SyntheticBackground backdrop =
                synthesize_background(*target, pool, derive_seed(scene_seed, "background"), cfg.background);
            spec.target_instance = backdrop.target_instance;
            Scene scene = assemble(spec, pool, backdrop.scene);
            if (matching_objects(scene) != 1) {
                throw NonUniqueDescription("scene layout fits more than one object");
            }
            save_scene(cfg.scenes_path(), scene);
            ManifestEntry entry;
            entry.id = scene.scene_id;
            entry.path = cfg.scenes_dir + "/" + scene.scene_id + ".ply";
            entry.distinction = spec.distinction;
            entry.num_distractors = spec.num_distractors;
            entry.annotated = false;
            task.entry = std::move(entry);
            return task;
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    task.failure = std::string(name) + ": " + last_error;
    return task;
}

void run_parallel(std::size_t count, int jobs, const std::function<void(std::size_t)>& work) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const int n = std::min<int>(jobs, static_cast<int>(count));
    workers.reserve(n);
    for (int t = 0; t < n; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) work(i);
        });
    }
    for (std::thread& w : workers) w.join();
}

}  // namespace

GenerateReport generate_scenes(const RunConfig& cfg, const Pool& pool, std::size_t count,
                               std::uint64_t seed, int jobs) {
    if (pool.empty()) throw Error("object pool is empty");
    std::filesystem::create_directories(cfg.scenes_path());

    std::vector<SceneTask> tasks(count);
    run_parallel(count, jobs,
                 [&](std::size_t i) { tasks[i] = build_one_scene(cfg, pool, seed, i); });

    GenerateReport report;
    report.requested = count;
    DatasetManifest manifest;
    manifest.seed = seed;
    manifest.config_snapshot = run_config_to_json(cfg);
    for (SceneTask& task : tasks) {
        if (task.entry) {
            ++report.succeeded;
            ++report.table[{to_string(task.entry->distinction), task.entry->num_distractors}];
            manifest.entries.push_back(std::move(*task.entry));
        } else {
            report.failures.push_back(task.failure);
        }
    }
    save_manifest(cfg, manifest);
    return report;
}

namespace {

ClientPair make_clients(const RunConfig& cfg, std::uint64_t scene_seed) {
    if (cfg.client.kind == "http") {
        return http_clients(cfg.client.endpoint, cfg.client.model, cfg.client.key_env);
    }
    return mock_clients(scene_seed);
}

}  // namespace

AnnotateReport annotate_scenes(const RunConfig& cfg, int jobs) {
    DatasetManifest manifest = load_manifest(cfg);
    AnnotateReport report;

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        if (manifest.entries[i].annotated) {
            ++report.skipped;
        } else {
            todo.push_back(i);
        }
    }

    struct AnnotateTask {
        std::optional<std::string> line;
        std::string failure;
    };
    std::vector<AnnotateTask> tasks(todo.size());

    run_parallel(todo.size(), jobs, [&](std::size_t t) {
        const ManifestEntry& entry = manifest.entries[todo[t]];
        AnnotateTask& task = tasks[t];
        try {
            const Scene scene = load_scene(cfg.scenes_path(), entry.id);
            ClientPair clients = make_clients(cfg, derive_seed(manifest.seed, "annotate", todo[t]));
            auto [annotation, transcript] = annotate_scene(scene, clients, cfg.annotation);
            write_file(cfg.run_dir / "transcripts" / (entry.id + ".json"), transcript_json(transcript));
            task.line = annotation_jsonl_line(annotation);
        } catch (const std::exception& e) {
            task.failure = entry.id + ": " + e.what();
        }
    });

    std::string lines;
    const auto annotations_path = cfg.run_dir / "annotations.jsonl";
    if (std::filesystem::exists(annotations_path)) lines = read_file(annotations_path);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (tasks[t].line) {
            lines += *tasks[t].line;
            lines += '\n';
            manifest.entries[todo[t]].annotated = true;
            ++report.annotated;
        } else {
            report.failures.push_back(tasks[t].failure);
        }
    }
    write_file(annotations_path, lines);
    save_manifest(cfg, manifest);
    return report;
}

std::vector<GroundingSample> load_grounding_samples(const RunConfig& cfg) {
    const DatasetManifest manifest = load_manifest(cfg);
    std::map<std::string, const ManifestEntry*> by_id;
    for (const ManifestEntry& e : manifest.entries) by_id[e.id] = &e;

    std::vector<GroundingSample> samples;
    std::istringstream in(read_file(cfg.run_dir / "annotations.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const Annotation ann = annotation_from_jsonl_line(line);
        const auto it = by_id.find(ann.scene_id);
        if (it == by_id.end()) throw Error("annotation references unknown scene " + ann.scene_id);
        GroundingSample s;
        s.scene_id = ann.scene_id;
        s.text = ann.text;
        s.gt_box = ann.target_box;
        s.num_distractors = it->second->num_distractors;
        s.distinction = it->second->distinction;
        samples.push_back(std::move(s));
    }
    return samples;
}

Prediction baseline_nearest_same_class(const Scene& scene) {
    const Vec3 anchor = scene.background_points.empty() ? scene.target_box.center()
                                                        : centroid(scene.background_points);
    const PlacedObject* best = nullptr;
    double best_d = 1e300;
    for (const PlacedObject& obj : scene.objects) {
        if (obj.class_label != scene.target().class_label) continue;
        const double d = (obj.box.center() - anchor).norm();
        if (d < best_d) {
            best_d = d;
            best = &obj;
        }
    }
    return Prediction{scene.scene_id, best != nullptr ? best->box : scene.target_box};
}

}  // namespace sceneforge
