// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criterion 3 drives the real CLI binary (path via --cli).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "sceneforge/annotator.hpp"
#include "sceneforge/eval.hpp"
#include "sceneforge/integrator.hpp"
#include "sceneforge/pipeline.hpp"
#include "sceneforge/ply.hpp"

namespace fs = std::filesystem;
using namespace sceneforge;

namespace {

std::string g_cli;
int g_failed = 0;

void criterion(int number, const std::string& name, const std::function<std::string()>& body) {
    std::string detail;
    bool ok = true;
    try {
        detail = body();
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    if (!detail.empty() && detail[0] == '!') {
        ok = false;
        detail = detail.substr(1);
    }
    std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.empty() ? "" : " - ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failed;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sceneforge-acceptance-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_in(const fs::path& cwd, const std::string& cmd) {
    const std::string full = "cd " + cwd.string() + " && " + cmd + " >/dev/null 2>&1";
    const int status = std::system(full.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string tree_fingerprint(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const fs::path& f : files) {
        const std::string rel = fs::relative(f, dir).string();
        h = fnv1a(rel.data(), rel.size(), h);
        const std::string body = read_file(f);
        h = fnv1a(body.data(), body.size(), h);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Pool acceptance_pool() {
    DemoPoolConfig cfg;  // 4 classes x 3 shapes x 4 colors x 12 = 576 objects
    return build_demo_pool(cfg, 2024);
}

// Shared 500-scene batch for criteria 1 and 2.
struct Batch {
    RunConfig cfg;
    GenerateReport report;
    double seconds = 0.0;
};

Batch g_batch;

std::string build_batch(const Pool& pool) {
    g_batch.cfg.run_dir = fresh_dir("batch");
    g_batch.cfg.seed = 20240;
    const auto t0 = std::chrono::steady_clock::now();
    g_batch.report = generate_scenes(g_batch.cfg, pool, 500, g_batch.cfg.seed, 1);
    g_batch.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (g_batch.report.succeeded != 500) {
        return "!only " + std::to_string(g_batch.report.succeeded) + "/500 scenes succeeded";
    }
    return "";
}

}  // namespace

// --- criterion 1: generation round-trip -------------------------------------

static std::string criterion_generation(const Pool& pool) {
    if (pool.size() < 40) return "!pool too small";
    std::set<std::string> classes;
    for (const ObjectRecord& r : pool.records()) classes.insert(r.class_label);
    if (classes.size() < 4) return "!fewer than 4 classes";

    const std::string err = build_batch(pool);
    if (!err.empty()) return err;
    if (g_batch.seconds >= 120.0) {
        return "!generation took " + std::to_string(g_batch.seconds) + "s (budget 120s)";
    }

    // Independent re-check of every declared predicate on the reloaded scenes.
    const DatasetManifest manifest = load_manifest(g_batch.cfg);
    std::map<SpatialPredicate, std::size_t> exercised;
    std::size_t groups_checked = 0, groups_true = 0;
    for (const ManifestEntry& entry : manifest.entries) {
        const Scene scene = load_scene(g_batch.cfg.scenes_path(), entry.id);
        const Aabb target_box = aabb(scene.target().cloud);
        std::map<int, std::pair<SpatialPredicate, std::vector<Aabb>>> groups;
        for (const PlacedObject& obj : scene.objects) {
            if (obj.role != Role::Distractor) continue;
            groups[obj.predicate_group].first = *obj.predicate;
            groups[obj.predicate_group].second.push_back(aabb(obj.cloud));
        }
        for (const auto& [g, data] : groups) {
            ++groups_checked;
            ++exercised[data.first];
            if (evaluate_predicate(data.first, target_box, data.second, scene.spec.clearance)) {
                ++groups_true;
            }
        }
    }
    if (groups_true != groups_checked) {
        return "!" + std::to_string(groups_checked - groups_true) + " of " +
               std::to_string(groups_checked) + " predicate groups failed re-evaluation";
    }
    for (SpatialPredicate p : kAllPredicates) {
        if (exercised[p] < 10) {
            return "!predicate '" + to_string(p) + "' exercised only " +
                   std::to_string(exercised[p]) + " times";
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "500 scenes in %.1fs, %zu predicate groups all true, min count ok",
                  g_batch.seconds, groups_checked);
    return buf;
}

// --- criterion 2: distinction contract --------------------------------------

static std::string criterion_distinction() {
    const DatasetManifest manifest = load_manifest(g_batch.cfg);
    std::size_t checked = 0, violations = 0;
    for (const ManifestEntry& entry : manifest.entries) {
        const Scene scene = load_scene(g_batch.cfg.scenes_path(), entry.id);

        RetrievalSpec rspec;
        rspec.target.id = "(target)";
        rspec.target.class_label = scene.target().class_label;
        rspec.target.mean_color = mean_color(scene.target().cloud);
        rspec.target.shape = classify_shape(scene.target().cloud);
        rspec.distinction = scene.spec.distinction;
        rspec.color_same_max = scene.spec.color_same_max;
        rspec.color_diff_min = scene.spec.color_diff_min;

        for (const PlacedObject& obj : scene.objects) {
            if (obj.role != Role::Distractor) continue;
            ObjectRecord as_record;
            as_record.id = obj.record_id;
            as_record.class_label = obj.class_label;
            as_record.mean_color = mean_color(obj.cloud);
            as_record.shape = classify_shape(obj.cloud);
            ++checked;
            if (!Pool::satisfies(as_record, rspec)) ++violations;
        }
    }
    if (violations > 0) {
        return "!" + std::to_string(violations) + " of " + std::to_string(checked) +
               " distractors violate their constraint row";
    }
    return std::to_string(checked) + " distractors audited, 0 violations";
}

// --- criterion 3: determinism through the CLI --------------------------------

static std::string criterion_determinism(const Pool& pool) {
    const fs::path root = fresh_dir("determinism");
    const fs::path shared_pool = root / "pool";
    save_pool(shared_pool, pool);

    const std::string config_text =
        "{\n"
        "  \"seed\": 7,\n"
        "  \"run_dir\": \"run\",\n"
        "  \"pool_dir\": \"" + shared_pool.string() + "\",\n"
        "  \"annotation\": {\"qa_rounds\": 2, \"iter_rounds\": 2, \"image_size\": 64},\n"
        "  \"synthetic\": {\"floor_points\": 2048}\n"
        "}\n";

    for (const char* side : {"a", "b"}) {
        const fs::path cwd = root / side;
        fs::create_directories(cwd);
        write_file(cwd / "config.json", config_text);
        if (run_in(cwd, g_cli + " --config config.json generate --count 100 --seed 7") != 0) {
            return std::string("!generate failed in ") + side;
        }
        if (run_in(cwd, g_cli + " --config config.json annotate --client mock") != 0) {
            return std::string("!annotate failed in ") + side;
        }
    }
    if (tree_fingerprint(root / "a" / "run") != tree_fingerprint(root / "b" / "run")) {
        return "!the two runs differ";
    }
    fs::remove_all(root);
    return "two generate+annotate runs are byte-identical";
}

// --- criterion 4: metric correctness -----------------------------------------

static std::string criterion_metrics() {
    // Oracle predictor.
    std::vector<GroundingSample> samples;
    std::vector<Prediction> oracle;
    for (int i = 0; i < 10; ++i) {
        GroundingSample s;
        s.scene_id = "m" + std::to_string(i);
        s.gt_box = Aabb{{3.0 * i, 0, 0}, {3.0 * i + 1, 1, 1}};
        samples.push_back(s);
        oracle.push_back({s.scene_id, s.gt_box});
    }
    const EvalResult perfect = grounding_accuracy(samples, oracle);
    if (perfect.acc_25 != 1.0 || perfect.acc_50 != 1.0) return "!oracle predictor not (1.0, 1.0)";

    // Boxes translated to the hand-computed IoU of 1/15.
    std::vector<GroundingSample> one;
    GroundingSample s115;
    s115.scene_id = "x";
    s115.gt_box = Aabb{{0, 0, 0}, {2, 2, 2}};
    one.push_back(s115);
    const EvalResult low = grounding_accuracy(one, {{"x", Aabb{{1, 1, 1}, {3, 3, 3}}}});
    if (low.acc_25 != 0.0 || low.acc_50 != 0.0) return "!IoU 1/15 case not (0.0, 0.0)";

    // Constructed IoUs {0.30, 0.60}: offset o gives (1-o)/(1+o) for unit cubes.
    auto shifted = [](double x, double iou_target) {
        const double o = (1.0 - iou_target) / (1.0 + iou_target);
        return Aabb{{x + o, 0, 0}, {x + o + 1, 1, 1}};
    };
    std::vector<GroundingSample> mix;
    for (int i = 0; i < 2; ++i) {
        GroundingSample s;
        s.scene_id = "mix" + std::to_string(i);
        s.gt_box = Aabb{{5.0 * i, 0, 0}, {5.0 * i + 1, 1, 1}};
        mix.push_back(s);
    }
    const EvalResult both = grounding_accuracy(
        mix, {{"mix0", shifted(0.0, 0.30)}, {"mix1", shifted(5.0, 0.60)}});
    if (both.acc_25 != 1.0 || both.acc_50 != 0.5) return "!IoU {0.30, 0.60} mix not (1.0, 0.5)";

    // Segmentation vs the brute-force set oracle.
    Rng rng(404);
    std::vector<std::vector<int>> gt, pred;
    for (int i = 0; i < 50; ++i) {
        const std::size_t n = 4 + rng.uniform_index(300);
        const int parts = 1 + static_cast<int>(rng.uniform_index(4));
        std::vector<int> g(n), p(n);
        for (std::size_t k = 0; k < n; ++k) {
            g[k] = static_cast<int>(rng.uniform_index(parts));
            p[k] = static_cast<int>(rng.uniform_index(parts + 1));
        }
        gt.push_back(std::move(g));
        pred.push_back(std::move(p));
    }
    const SegScore score = segmentation_miou(gt, pred);
    double oracle_mean = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        std::set<int> labels(gt[i].begin(), gt[i].end());
        double sum = 0.0;
        for (int label : labels) {
            std::set<std::size_t> gs, ps;
            for (std::size_t k = 0; k < gt[i].size(); ++k) {
                if (gt[i][k] == label) gs.insert(k);
                if (pred[i][k] == label) ps.insert(k);
            }
            std::size_t inter = 0;
            for (std::size_t k : gs) inter += ps.count(k);
            sum += static_cast<double>(inter) / static_cast<double>(gs.size() + ps.size() - inter);
        }
        const double inst = sum / static_cast<double>(labels.size());
        if (std::abs(inst - score.per_instance[i]) > 1e-9) return "!per-instance IoU deviates from the set oracle";
        oracle_mean += inst;
    }
    if (std::abs(score.miou_i - 100.0 * oracle_mean / gt.size()) > 1e-9) {
        return "!miou_i deviates from the set oracle";
    }
    return "grounding and segmentation metrics match their oracles";
}

// --- criterion 5: annotation loop shape --------------------------------------

static std::string criterion_annotation(const Pool& pool) {
    RunConfig cfg;
    cfg.run_dir = fresh_dir("annotation");
    cfg.seed = 515;
    // Defaults already give qa_rounds=6, 4 views, iter_rounds=3.
    const GenerateReport report = generate_scenes(cfg, pool, 200, cfg.seed, 1);
    if (report.succeeded != 200) {
        return "!only " + std::to_string(report.succeeded) + "/200 scenes generated";
    }
    const AnnotateReport ann = annotate_scenes(cfg, 1);
    if (ann.annotated != 200 || !ann.failures.empty()) {
        return "!annotated " + std::to_string(ann.annotated) + "/200, " +
               std::to_string(ann.failures.size()) + " failures";
    }

    const DatasetManifest manifest = load_manifest(cfg);
    std::size_t pairs_checked = 0, unique_ok = 0;
    for (const ManifestEntry& entry : manifest.entries) {
        const Scene scene = load_scene(cfg.scenes_path(), entry.id);
        if (matching_objects(scene) == 1) ++unique_ok;

        const std::string transcript_text = read_file(cfg.run_dir / "transcripts" / (entry.id + ".json"));
        // Count pairs, slots and accepted captions from the stored JSON text.
        std::size_t pos = 0;
        std::size_t pair_count = 0;
        while ((pos = transcript_text.find("\"pair_id\"", pos)) != std::string::npos) {
            ++pair_count;
            ++pos;
        }
        if (pair_count != entry.num_distractors) return "!pair count mismatch in " + entry.id;

        std::size_t slot_count = 0;
        pos = 0;
        while ((pos = transcript_text.find("\"target_description\"", pos)) != std::string::npos) {
            ++slot_count;
            ++pos;
        }
        if (slot_count != pair_count * 6 * 4) return "!view-slot count mismatch in " + entry.id;

        std::size_t accepted = 0;
        pos = 0;
        while ((pos = transcript_text.find("\"accepted\": true", pos)) != std::string::npos) {
            ++accepted;
            ++pos;
        }
        if (accepted > pair_count * 72) return "!accepted captions exceed 72 per pair in " + entry.id;
        pairs_checked += pair_count;
    }
    if (unique_ok != manifest.entries.size()) {
        return "!" + std::to_string(manifest.entries.size() - unique_ok) +
               " scenes fail the uniqueness check";
    }
    fs::remove_all(cfg.run_dir);
    return std::to_string(pairs_checked) + " pair transcripts have 6x4 slots and <=72 captions; uniqueness 100%";
}

// --- criterion 6: difficulty axis --------------------------------------------

static std::string criterion_difficulty() {
    DemoPoolConfig pool_cfg;
    pool_cfg.classes = {"chair", "table"};
    pool_cfg.per_cell = 12;
    pool_cfg.points = 512;
    const Pool pool = build_demo_pool(pool_cfg, 606);

    std::map<std::size_t, double> acc_by_k;
    for (std::size_t k = 2; k <= 10; ++k) {
        RunConfig cfg;
        cfg.run_dir = fresh_dir("difficulty-" + std::to_string(k));
        cfg.seed = 6000 + k;
        cfg.distinction_weights = {{DistinctionType::Location, 1.0}};
        cfg.distractor_counts = {{k, 1.0}};
        cfg.background.floor_points = 2048;
        const GenerateReport report = generate_scenes(cfg, pool, 200, cfg.seed, 1);
        if (report.succeeded < 190) {
            return "!k=" + std::to_string(k) + ": only " + std::to_string(report.succeeded) +
                   "/200 scenes";
        }
        const DatasetManifest manifest = load_manifest(cfg);
        std::vector<GroundingSample> samples;
        std::vector<Prediction> predictions;
        for (const ManifestEntry& entry : manifest.entries) {
            const Scene scene = load_scene(cfg.scenes_path(), entry.id);
            GroundingSample s;
            s.scene_id = scene.scene_id;
            s.gt_box = scene.target_box;
            s.num_distractors = k;
            samples.push_back(s);
            predictions.push_back(baseline_nearest_same_class(scene));
        }
        acc_by_k[k] = grounding_accuracy(samples, predictions).acc_25;
        fs::remove_all(cfg.run_dir);
    }

    std::string curve;
    for (const auto& [k, acc] : acc_by_k) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%zu:%.2f ", k, acc);
        curve += buf;
    }
    for (std::size_t k = 2; k < 10; ++k) {
        if (acc_by_k[k + 1] > acc_by_k[k] + 0.05) {
            return "!accuracy rises from k=" + std::to_string(k) + " to k=" + std::to_string(k + 1) +
                   " beyond the noise band (" + curve + ")";
        }
    }
    if (acc_by_k[10] >= acc_by_k[2]) return "!no end-to-end decline (" + curve + ")";
    return "baseline acc@0.25 non-increasing: " + curve;
}

// --- criterion 7: geometry property suite ------------------------------------

static std::string criterion_properties() {
    Rng rng(707);
    auto random_box = [&] {
        const Vec3 a{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        return Aabb{a, {a.x + rng.uniform(0.01, 4), a.y + rng.uniform(0.01, 4), a.z + rng.uniform(0.01, 4)}};
    };
    for (int i = 0; i < 10000; ++i) {
        const Aabb a = random_box(), b = random_box();
        const double ab = iou(a, b), ba = iou(b, a);
        if (ab != ba || ab < 0.0 || ab > 1.0 || iou(a, a) != 1.0) return "!iou property violated";
    }

    for (int i = 0; i < 10000; ++i) {
        PointCloud pc;
        for (int k = 0; k < 12; ++k) {
            pc.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}, {0, 0, 0});
        }
        const PointCloud rotated = reorient(pc, rng.uniform(0, 2 * M_PI));
        const double factor = rng.uniform(0.3, 3.0);
        const PointCloud scaled = rescale_to(pc, factor * aabb(pc).diagonal());
        for (std::size_t x = 0; x < pc.size(); ++x) {
            for (std::size_t y = x + 1; y < pc.size(); ++y) {
                const double d0 = (pc.xyz[x] - pc.xyz[y]).norm();
                if (std::abs((rotated.xyz[x] - rotated.xyz[y]).norm() - d0) > 1e-9) {
                    return "!reorient is not an isometry";
                }
                if (std::abs((scaled.xyz[x] - scaled.xyz[y]).norm() - factor * d0) > 1e-9 * (1 + d0)) {
                    return "!rescale is not a single-factor similarity";
                }
            }
        }
    }

    {
        PointCloud pool_cloud;
        for (int k = 0; k < 50; ++k) {
            pool_cloud.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)}, {1, 1, 1});
        }
        std::vector<std::array<double, 3>> all;
        for (const Vec3& p : pool_cloud.xyz) all.push_back({p.x, p.y, p.z});
        std::sort(all.begin(), all.end());
        for (int i = 0; i < 10000; ++i) {
            const std::size_t n = 1 + rng.uniform_index(pool_cloud.size());
            const PointCloud sub = resample(pool_cloud, n, rng.next_u64());
            if (sub.size() != n) return "!resample size violated";
            for (const Vec3& p : sub.xyz) {
                if (!std::binary_search(all.begin(), all.end(), std::array<double, 3>{p.x, p.y, p.z})) {
                    return "!resample produced a foreign point";
                }
            }
        }
    }

    for (int i = 0; i < 10000; ++i) {
        std::vector<GroundingSample> samples;
        std::vector<Prediction> preds;
        const std::size_t n = 2 + rng.uniform_index(12);
        for (std::size_t k = 0; k < n; ++k) {
            GroundingSample s;
            s.scene_id = "p" + std::to_string(k);
            s.gt_box = Aabb{{2.0 * k, 0, 0}, {2.0 * k + 1, 1, 1}};
            s.num_distractors = 2 + rng.uniform_index(9);
            s.distinction = kAllDistinctions[rng.uniform_index(4)];
            samples.push_back(s);
            if (rng.uniform() < 0.85) {
                preds.push_back({s.scene_id, Aabb{{2.0 * k + rng.uniform(0, 1.2), 0, 0},
                                                  {2.0 * k + rng.uniform(0, 1.2) + 1, 1, 1}}});
            }
        }
        const EvalResult overall = grounding_accuracy(samples, preds);
        if (overall.acc_50 > overall.acc_25) return "!acc_50 exceeds acc_25";
        const EvalResult grouped = breakdown(samples, preds, BreakdownAxis::Distractors);
        double weighted = 0.0;
        std::size_t total = 0;
        for (const EvalGroup& g : grouped.groups) {
            weighted += g.acc_25 * static_cast<double>(g.n);
            total += g.n;
        }
        if (total != overall.n || std::abs(weighted / total - overall.acc_25) > 1e-9) {
            return "!breakdown recombination violated";
        }
    }
    return "40000 randomized property cases, zero failures";
}

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; i += 2) {
        if (std::string(argv[i]) == "--cli") g_cli = argv[i + 1];
    }
    if (g_cli.empty()) {
        std::cerr << "usage: acceptance --cli <path-to-sceneforge-binary>\n";
        return 2;
    }
    g_cli = fs::absolute(g_cli).string();  // criterion 3 runs it from other directories

    const Pool pool = acceptance_pool();

    criterion(1, "generation round-trip", [&] { return criterion_generation(pool); });
    criterion(2, "distinction contract", [] { return criterion_distinction(); });
    criterion(3, "determinism", [&] { return criterion_determinism(pool); });
    criterion(4, "metric correctness", [] { return criterion_metrics(); });
    criterion(5, "annotation loop shape", [&] { return criterion_annotation(pool); });
    criterion(6, "difficulty axis", [] { return criterion_difficulty(); });
    criterion(7, "geometry property suite", [] { return criterion_properties(); });

    fs::remove_all(g_batch.cfg.run_dir);
    if (g_failed > 0) {
        std::printf("%d criterion(s) failed\n", g_failed);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
