#pragma once

#include <string>
#include <vector>

#include "sceneforge/annotator.hpp"
#include "sceneforge/geometry.hpp"
#include "sceneforge/object_pool.hpp"

namespace sceneforge {

/// One grounding task instance: scene + text + ground-truth box, with the
/// grouping attributes the breakdowns report on.
struct GroundingSample {
    std::string scene_id;
    std::string text;
    Aabb gt_box;
    std::size_t num_distractors = 0;
    DistinctionType distinction = DistinctionType::Location;
};

struct Prediction {
    std::string scene_id;
    Aabb pred_box;
};

struct EvalGroup {
    std::string key;
    std::size_t n = 0;
    double acc_25 = 0.0;
    double acc_50 = 0.0;
};

struct EvalResult {
    double acc_25 = 0.0;
    double acc_50 = 0.0;
    std::size_t n = 0;
    std::vector<EvalGroup> groups;  // empty unless a breakdown was requested
};

enum class BreakdownAxis { Distractors, Distinction };

/// Acc@0.25 / Acc@0.5 in a single pass. A sample without a prediction scores
/// IoU 0; a scene with two predictions is DuplicatePrediction.
EvalResult grounding_accuracy(const std::vector<GroundingSample>& samples,
                              const std::vector<Prediction>& predictions);

/// Same metrics with one row per group value; the group-weighted mean of the
/// rows reproduces the overall numbers.
EvalResult breakdown(const std::vector<GroundingSample>& samples,
                     const std::vector<Prediction>& predictions, BreakdownAxis axis);

/// Part-segmentation score: per instance, IoU is averaged over the part
/// labels present in the ground truth; miou_i is the mean over instances,
/// in percent.
struct SegScore {
    double miou_i = 0.0;                // percent
    std::vector<double> per_instance;   // each in [0, 1]
};

SegScore segmentation_miou(const std::vector<std::vector<int>>& gt_parts,
                           const std::vector<std::vector<int>>& pred_parts);

/// Line-delimited JSON {"scene_id", "pred_box": [6 floats]}. Throws Error
/// naming the first malformed line, DuplicatePrediction on repeats.
std::vector<Prediction> parse_predictions_jsonl(const std::string& text);

/// One annotation as a JSONL line (scene_id, target_id, text,
/// location_phrase, distinction, target_box, transcript_ref).
std::string annotation_jsonl_line(const Annotation& ann);
Annotation annotation_from_jsonl_line(const std::string& line);

std::string eval_csv(const EvalResult& result);
std::string seg_csv(const SegScore& score);

}  // namespace sceneforge
