#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sceneforge/errors.hpp"
#include "sceneforge/http_client.hpp"
#include "sceneforge/pipeline.hpp"
#include "sceneforge/ply.hpp"

namespace fs = std::filesystem;
using namespace sceneforge;

// Operational exit codes (CLI11 reports its own for bad flags):
//   2 - input parse failure (ingest)
//   3 - generation failure
//   4 - client configuration failure
//   5 - evaluation input failure
namespace {

constexpr int kExitParse = 2;
constexpr int kExitGenerate = 3;
constexpr int kExitClient = 4;
constexpr int kExitEvaluate = 5;

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

RunConfig resolve_config(const GlobalArgs& args) {
    RunConfig cfg = args.config_path.empty() ? RunConfig{} : load_run_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    return cfg;
}

int cmd_ingest(const GlobalArgs& globals, const std::vector<std::string>& files,
               const std::string& class_label, const std::string& provenance_name,
               const std::string& source, const std::string& mapping_path,
               const std::string& pool_override) {
    RunConfig cfg;
    try {
        cfg = resolve_config(globals);
    } catch (const std::exception& e) {
        std::cerr << "config: " << e.what() << "\n";
        return kExitParse;
    }
    const fs::path pool_dir = pool_override.empty() ? cfg.pool_path() : fs::path(pool_override);

    nlohmann::json mapping;
    if (!mapping_path.empty()) {
        try {
            mapping = nlohmann::json::parse(read_file(mapping_path), nullptr, true, true);
        } catch (const std::exception& e) {
            std::cerr << mapping_path << ": " << e.what() << "\n";
            return kExitParse;
        }
    }

    Pool pool;
    if (fs::exists(pool_dir / "manifest.jsonl")) {
        try {
            pool = load_pool(pool_dir);
        } catch (const std::exception& e) {
            std::cerr << pool_dir.string() << ": " << e.what() << "\n";
            return kExitParse;
        }
    }
    const std::size_t before = pool.size();

    for (const std::string& file : files) {
        std::string cls = class_label;
        Provenance prov = Provenance::RealScan;
        std::string src = source;
        try {
            prov = provenance_from_string(provenance_name);
            const std::string name = fs::path(file).filename().string();
            if (mapping.contains(name)) {
                const auto& row = mapping.at(name);
                cls = row.at("class").get<std::string>();
                if (row.contains("provenance")) {
                    prov = provenance_from_string(row.at("provenance").get<std::string>());
                }
                if (row.contains("source")) src = row.at("source").get<std::string>();
            }
            if (cls.empty()) throw Error("no class label (use --class or --mapping)");
            pool.add(ingest(file, cls, prov, src));
        } catch (const std::exception& e) {
            std::cerr << file << ": " << e.what() << "\n";
            return kExitParse;
        }
    }

    try {
        save_pool(pool_dir, pool);
    } catch (const std::exception& e) {
        std::cerr << pool_dir.string() << ": " << e.what() << "\n";
        return kExitParse;
    }
    std::printf("pool %s: %zu objects (%zu new)\n", pool_dir.string().c_str(), pool.size(),
                pool.size() - before);
    return 0;
}

int cmd_generate(const GlobalArgs& globals, std::size_t count) {
    RunConfig cfg;
    Pool pool;
    try {
        cfg = resolve_config(globals);
        pool = load_pool(cfg.pool_path());
        if (pool.empty()) throw Error("object pool is empty");
    } catch (const std::exception& e) {
        std::cerr << "generate: " << e.what() << "\n";
        return kExitGenerate;
    }

    GenerateReport report;
    try {
        report = generate_scenes(cfg, pool, count, cfg.seed, globals.jobs);
    } catch (const std::exception& e) {
        std::cerr << "generate: " << e.what() << "\n";
        return kExitGenerate;
    }

    std::printf("generated %zu/%zu scenes into %s\n", report.succeeded, report.requested,
                cfg.scenes_path().string().c_str());
    std::printf("%-16s %12s %8s\n", "distinction", "distractors", "scenes");
    for (const auto& [key, n] : report.table) {
        std::printf("%-16s %12zu %8zu\n", key.first.c_str(), key.second, n);
    }
    for (const std::string& f : report.failures) std::cerr << "failed " << f << "\n";
    if (report.succeeded * 10 < report.requested * 9) {
        std::cerr << "generate: fewer than 90% of requested scenes succeeded\n";
        return kExitGenerate;
    }
    return 0;
}

int cmd_annotate(const GlobalArgs& globals, const std::string& client_override) {
    RunConfig cfg;
    try {
        cfg = resolve_config(globals);
    } catch (const std::exception& e) {
        std::cerr << "annotate: " << e.what() << "\n";
        return kExitClient;
    }
    if (!client_override.empty()) {
        if (client_override != "mock" && client_override != "http") {
            std::cerr << "annotate: --client must be 'mock' or 'http'\n";
            return kExitClient;
        }
        cfg.client.kind = client_override;
    }
    if (cfg.client.kind == "http") {
        if (cfg.client.endpoint.empty()) {
            std::cerr << "annotate: http client needs an endpoint in the config\n";
            return kExitClient;
        }
        if (!http_key_available(cfg.client.key_env)) {
            std::cerr << "annotate: environment variable '" << cfg.client.key_env << "' is not set\n";
            return kExitClient;
        }
    }

    AnnotateReport report;
    try {
        report = annotate_scenes(cfg, globals.jobs);
    } catch (const std::exception& e) {
        std::cerr << "annotate: " << e.what() << "\n";
        return 1;
    }
    std::printf("annotated %zu scenes (%zu already done)\n", report.annotated, report.skipped);
    for (const std::string& f : report.failures) std::cerr << "failed " << f << "\n";
    return report.failures.empty() ? 0 : 1;
}

void print_eval(const char* label, const EvalResult& r) {
    std::printf("%-18s %6s %9s %9s\n", label, "n", "acc@0.25", "acc@0.50");
    std::printf("%-18s %6zu %9.4f %9.4f\n", "overall", r.n, r.acc_25, r.acc_50);
    for (const EvalGroup& g : r.groups) {
        std::printf("%-18s %6zu %9.4f %9.4f\n", g.key.c_str(), g.n, g.acc_25, g.acc_50);
    }
}

int cmd_evaluate(const GlobalArgs& globals, const std::string& predictions_path,
                 const std::string& by, const std::string& seg_gt, const std::string& seg_pred,
                 const std::string& out_override) {
    RunConfig cfg;
    try {
        cfg = resolve_config(globals);
    } catch (const std::exception& e) {
        std::cerr << "evaluate: " << e.what() << "\n";
        return kExitEvaluate;
    }
    const fs::path reports = out_override.empty() ? cfg.run_dir / "reports" : fs::path(out_override);

    try {
        if (!seg_gt.empty() || !seg_pred.empty()) {
            if (seg_gt.empty() || seg_pred.empty()) {
                throw Error("segmentation scoring needs both --seg-gt and --seg-pred");
            }
            auto read_labels = [](const fs::path& file) {
                std::vector<int> labels;
                std::istringstream in(read_file(file));
                std::string line;
                while (std::getline(in, line)) {
                    if (!line.empty()) labels.push_back(std::stoi(line));
                }
                return labels;
            };
            std::vector<std::vector<int>> gt, pred;
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(seg_gt)) {
                if (e.is_regular_file()) files.push_back(e.path());
            }
            std::sort(files.begin(), files.end());
            if (files.empty()) throw Error("no label files under " + seg_gt);
            for (const fs::path& f : files) {
                gt.push_back(read_labels(f));
                pred.push_back(read_labels(fs::path(seg_pred) / f.filename()));
            }
            const SegScore score = segmentation_miou(gt, pred);
            write_file(reports / "segmentation.csv", seg_csv(score));
            std::printf("instances %zu  miou_i %.4f%%\n", score.per_instance.size(), score.miou_i);
            return 0;
        }

        if (predictions_path.empty()) throw Error("grounding evaluation needs --predictions");
        const std::vector<GroundingSample> samples = load_grounding_samples(cfg);
        const std::vector<Prediction> predictions = parse_predictions_jsonl(read_file(predictions_path));

        const EvalResult overall = grounding_accuracy(samples, predictions);
        write_file(reports / "overall.csv", eval_csv(overall));
        print_eval("grounding", overall);

        std::stringstream axes(by);
        std::string axis;
        while (std::getline(axes, axis, ',')) {
            if (axis.empty()) continue;
            BreakdownAxis a;
            if (axis == "distractors") a = BreakdownAxis::Distractors;
            else if (axis == "distinction") a = BreakdownAxis::Distinction;
            else throw Error("unknown breakdown axis '" + axis + "'");
            const EvalResult r = breakdown(samples, predictions, a);
            write_file(reports / ("by_" + axis + ".csv"), eval_csv(r));
            std::printf("\n");
            print_eval(("by " + axis).c_str(), r);
        }
    } catch (const std::exception& e) {
        std::cerr << "evaluate: " << e.what() << "\n";
        return kExitEvaluate;
    }
    return 0;
}

int cmd_stats(const GlobalArgs& globals) {
    RunConfig cfg;
    try {
        cfg = resolve_config(globals);
    } catch (const std::exception& e) {
        std::cerr << "stats: " << e.what() << "\n";
        return 1;
    }
    if (fs::exists(cfg.pool_path() / "manifest.jsonl")) {
        const Pool pool = load_pool(cfg.pool_path());
        std::printf("pool %s: %zu objects\n", cfg.pool_path().string().c_str(), pool.size());
        std::printf("%-12s %6s %7s %7s %7s %6s %9s %5s\n", "class", "total", "cuboid", "lshape",
                    "sphere", "other", "real_scan", "cad");
        for (const PoolStatsRow& row : pool_stats(pool)) {
            auto shape_count = [&](ShapeCategory s) {
                const auto it = row.by_shape.find(s);
                return it == row.by_shape.end() ? std::size_t{0} : it->second;
            };
            std::printf("%-12s %6zu %7zu %7zu %7zu %6zu %9zu %5zu\n", row.class_label.c_str(),
                        row.total, shape_count(ShapeCategory::Cuboid), shape_count(ShapeCategory::LShape),
                        shape_count(ShapeCategory::Sphere), shape_count(ShapeCategory::Other),
                        row.real_scan, row.cad);
        }
    } else {
        std::printf("no pool at %s\n", cfg.pool_path().string().c_str());
    }
    if (fs::exists(cfg.run_dir / "manifest.json")) {
        const DatasetManifest manifest = load_manifest(cfg);
        std::size_t annotated = 0;
        std::map<std::string, std::size_t> by_distinction;
        for (const ManifestEntry& e : manifest.entries) {
            annotated += e.annotated;
            ++by_distinction[to_string(e.distinction)];
        }
        std::printf("dataset: %zu scenes (%zu annotated), seed %llu\n", manifest.entries.size(),
                    annotated, static_cast<unsigned long long>(manifest.seed));
        for (const auto& [key, n] : by_distinction) std::printf("  %-16s %6zu\n", key.c_str(), n);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sceneforge: point-cloud scene synthesis and grounding evaluation"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    GlobalArgs globals;
    app.add_option("--config", globals.config_path, "run configuration file (JSON, // comments allowed)");
    app.add_option("--seed", globals.seed, "override the configured master seed");
    app.add_option("--jobs", globals.jobs, "worker count (output is identical for any value)")
        ->check(CLI::PositiveNumber);

    auto* ingest_cmd = app.add_subcommand("ingest", "add object PLY files to the candidates pool");
    std::vector<std::string> ingest_files;
    std::string ingest_class, ingest_provenance = "RealScan", ingest_source = "local";
    std::string ingest_mapping, ingest_pool;
    ingest_cmd->add_option("files", ingest_files, "object PLY files")->required();
    ingest_cmd->add_option("--class", ingest_class, "class label for all files");
    ingest_cmd->add_option("--provenance", ingest_provenance, "RealScan or CAD");
    ingest_cmd->add_option("--source", ingest_source, "dataset name to record");
    ingest_cmd->add_option("--mapping", ingest_mapping, "JSON file mapping file names to class/provenance/source");
    ingest_cmd->add_option("--pool", ingest_pool, "pool directory (overrides config)");

    auto* generate_cmd = app.add_subcommand("generate", "assemble scenes from the pool");
    std::size_t generate_count = 0;
    generate_cmd->add_option("--count", generate_count, "number of scenes")->required();

    auto* annotate_cmd = app.add_subcommand("annotate", "produce grounding annotations for generated scenes");
    std::string annotate_client;
    annotate_cmd->add_option("--client", annotate_client, "mock or http (overrides config)");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "score predictions against the dataset");
    std::string eval_predictions, eval_by, eval_seg_gt, eval_seg_pred, eval_out;
    evaluate_cmd->add_option("--predictions", eval_predictions, "predictions JSONL file");
    evaluate_cmd->add_option("--by", eval_by, "comma list of breakdown axes: distractors,distinction");
    evaluate_cmd->add_option("--seg-gt", eval_seg_gt, "directory of ground-truth part label files");
    evaluate_cmd->add_option("--seg-pred", eval_seg_pred, "directory of predicted part label files");
    evaluate_cmd->add_option("--out", eval_out, "report directory (default <run_dir>/reports)");

    auto* stats_cmd = app.add_subcommand("stats", "summarize the pool and dataset");

    CLI11_PARSE(app, argc, argv);

    if (ingest_cmd->parsed()) {
        return cmd_ingest(globals, ingest_files, ingest_class, ingest_provenance, ingest_source,
                          ingest_mapping, ingest_pool);
    }
    if (generate_cmd->parsed()) return cmd_generate(globals, generate_count);
    if (annotate_cmd->parsed()) return cmd_annotate(globals, annotate_client);
    if (evaluate_cmd->parsed()) {
        return cmd_evaluate(globals, eval_predictions, eval_by, eval_seg_gt, eval_seg_pred, eval_out);
    }
    if (stats_cmd->parsed()) return cmd_stats(globals);
    return 0;
}
