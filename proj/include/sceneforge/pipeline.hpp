#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sceneforge/annotator.hpp"
#include "sceneforge/eval.hpp"
#include "sceneforge/integrator.hpp"
#include "sceneforge/synthetic.hpp"

namespace sceneforge {

struct ClientConfig {
    std::string kind = "mock";  // "mock" or "http"
    std::string endpoint;
    std::string model;
    std::string key_env = "SCENEFORGE_API_KEY";
};

/// Run-wide configuration; the JSON form (with // comments allowed) is the
/// single config file the CLI consumes, and its snapshot inside the dataset
/// manifest is sufficient to regenerate a run bit for bit.
struct RunConfig {
    std::uint64_t seed = 1;
    std::filesystem::path run_dir = "run";
    std::string pool_dir = "pool";     // relative to run_dir unless absolute
    std::string scenes_dir = "scenes";
    std::map<DistinctionType, double> distinction_weights = {
        {DistinctionType::Location, 1.0},
        {DistinctionType::LocationShape, 1.0},
        {DistinctionType::LocationColor, 1.0},
        {DistinctionType::LocationClass, 1.0},
    };
    std::vector<std::pair<std::size_t, double>> distractor_counts = {
        {2, 1}, {3, 1}, {4, 1}, {5, 1}, {6, 1}, {7, 1}, {8, 1}, {9, 1}, {10, 1}};
    std::vector<std::pair<SpatialPredicate, double>> predicate_mix;  // default: all 13 at 1
    double clearance = 0.05;
    double color_same_max = 30.0;
    double color_diff_min = 80.0;
    AnnotationConfig annotation;
    ClientConfig client;
    BackgroundConfig background;

    RunConfig();

    std::filesystem::path pool_path() const;
    std::filesystem::path scenes_path() const;
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

/// Annotated example config, suitable as a starting point.
std::string example_config_text();

struct ManifestEntry {
    std::string id;
    std::string path;  // scene PLY, relative to run_dir
    DistinctionType distinction = DistinctionType::Location;
    std::size_t num_distractors = 0;
    bool annotated = false;
};

struct DatasetManifest {
    int version = 1;
    std::uint64_t seed = 0;
    std::string config_snapshot;  // JSON text of the RunConfig
    std::vector<ManifestEntry> entries;
};

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);
void save_manifest(const RunConfig& cfg, const DatasetManifest& m);
DatasetManifest load_manifest(const RunConfig& cfg);

struct GenerateReport {
    std::size_t requested = 0;
    std::size_t succeeded = 0;
    // (distinction, num_distractors) -> scene count
    std::map<std::pair<std::string, std::size_t>, std::size_t> table;
    std::vector<std::string> failures;
};

/// Generates `count` scenes from the configured distributions into
/// cfg.scenes_path(), writes the dataset manifest, and returns the summary.
/// Failed draws are logged and resampled up to a per-scene retry budget.
/// Deterministic for fixed (cfg, seed) regardless of the job count.
GenerateReport generate_scenes(const RunConfig& cfg, const Pool& pool, std::size_t count,
                               std::uint64_t seed, int jobs);

struct AnnotateReport {
    std::size_t annotated = 0;
    std::size_t skipped = 0;
    std::vector<std::string> failures;
};

/// Annotates every manifest entry not yet marked annotated; resumable.
/// Writes annotations.jsonl (one line per scene) and one transcript file per
/// scene under transcripts/.
AnnotateReport annotate_scenes(const RunConfig& cfg, int jobs);

/// Grounding samples for evaluation: annotations joined with the manifest
/// for the grouping attributes.
std::vector<GroundingSample> load_grounding_samples(const RunConfig& cfg);

/// Scripted baseline: predicts the box of the same-class object whose center
/// is nearest to the centroid of the scene's background points.
Prediction baseline_nearest_same_class(const Scene& scene);

/// Draws the per-scene recipe (distinction, distractor count, predicates,
/// target) exactly as generate_scenes does; exposed for tests.
SceneSpec draw_scene_spec(const RunConfig& cfg, const Pool& pool, std::uint64_t scene_seed,
                          std::string scene_id, std::string* target_record_id = nullptr);

}  // namespace sceneforge
