#include "sceneforge/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "sceneforge/errors.hpp"

namespace sceneforge {

using nlohmann::json;

namespace {

std::unordered_map<std::string, Aabb> prediction_index(const std::vector<Prediction>& predictions) {
    std::unordered_map<std::string, Aabb> by_scene;
    by_scene.reserve(predictions.size());
    for (const Prediction& p : predictions) {
        if (!by_scene.emplace(p.scene_id, p.pred_box).second) throw DuplicatePrediction(p.scene_id);
    }
    return by_scene;
}

EvalResult accuracy_over(const std::vector<const GroundingSample*>& samples,
                         const std::unordered_map<std::string, Aabb>& by_scene) {
    EvalResult res;
    res.n = samples.size();
    if (samples.empty()) return res;
    std::size_t hit25 = 0, hit50 = 0;
    for (const GroundingSample* s : samples) {
        double v = 0.0;
        if (auto it = by_scene.find(s->scene_id); it != by_scene.end()) {
            v = iou(it->second, s->gt_box);
        }
        if (v >= 0.25) ++hit25;
        if (v >= 0.5) ++hit50;
    }
    res.acc_25 = static_cast<double>(hit25) / static_cast<double>(samples.size());
    res.acc_50 = static_cast<double>(hit50) / static_cast<double>(samples.size());
    return res;
}

}  // namespace

EvalResult grounding_accuracy(const std::vector<GroundingSample>& samples,
                              const std::vector<Prediction>& predictions) {
    const auto by_scene = prediction_index(predictions);
    std::vector<const GroundingSample*> all;
    all.reserve(samples.size());
    for (const GroundingSample& s : samples) all.push_back(&s);
    return accuracy_over(all, by_scene);
}

EvalResult breakdown(const std::vector<GroundingSample>& samples,
                     const std::vector<Prediction>& predictions, BreakdownAxis axis) {
    const auto by_scene = prediction_index(predictions);
    std::vector<const GroundingSample*> all;
    all.reserve(samples.size());
    for (const GroundingSample& s : samples) all.push_back(&s);
    EvalResult overall = accuracy_over(all, by_scene);

    std::map<std::string, std::vector<const GroundingSample*>> grouped;
    for (const GroundingSample& s : samples) {
        std::string key;
        if (axis == BreakdownAxis::Distractors) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%03zu", s.num_distractors);  // zero-pad for map order
            key = buf;
        } else {
            key = to_string(s.distinction);
        }
        grouped[key].push_back(&s);
    }
    for (const auto& [key, members] : grouped) {
        const EvalResult r = accuracy_over(members, by_scene);
        std::string label = key;
        if (axis == BreakdownAxis::Distractors) label = std::to_string(std::stoul(key));
        overall.groups.push_back(EvalGroup{label, r.n, r.acc_25, r.acc_50});
    }
    return overall;
}

SegScore segmentation_miou(const std::vector<std::vector<int>>& gt_parts,
                           const std::vector<std::vector<int>>& pred_parts) {
    if (gt_parts.size() != pred_parts.size()) throw LengthMismatch(pred_parts.size(), gt_parts.size());
    SegScore score;
    score.per_instance.reserve(gt_parts.size());
    for (std::size_t i = 0; i < gt_parts.size(); ++i) {
        const auto& gt = gt_parts[i];
        const auto& pred = pred_parts[i];
        if (gt.size() != pred.size()) throw LengthMismatch(pred.size(), gt.size());
        const std::set<int> labels(gt.begin(), gt.end());
        if (labels.empty()) {
            score.per_instance.push_back(0.0);
            continue;
        }
        double sum = 0.0;
        for (int label : labels) {
            std::size_t inter = 0, uni = 0;
            for (std::size_t k = 0; k < gt.size(); ++k) {
                const bool g = gt[k] == label;
                const bool p = pred[k] == label;
                inter += g && p;
                uni += g || p;
            }
            sum += static_cast<double>(inter) / static_cast<double>(uni);
        }
        score.per_instance.push_back(sum / static_cast<double>(labels.size()));
    }
    double total = 0.0;
    for (double v : score.per_instance) total += v;
    score.miou_i = score.per_instance.empty()
                       ? 0.0
                       : 100.0 * total / static_cast<double>(score.per_instance.size());
    return score;
}

namespace {

Aabb box_from_array(const json& j) {
    if (!j.is_array() || j.size() != 6) throw Error("box must be an array of 6 numbers");
    for (const auto& v : j) {
        if (!v.is_number()) throw Error("box must be an array of 6 numbers");
    }
    return Aabb{{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()},
                {j[3].get<double>(), j[4].get<double>(), j[5].get<double>()}};
}

json box_to_array(const Aabb& b) {
    return json::array({b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z});
}

}  // namespace

std::vector<Prediction> parse_predictions_jsonl(const std::string& text) {
    std::vector<Prediction> out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            Prediction p;
            p.scene_id = j.at("scene_id").get<std::string>();
            p.pred_box = box_from_array(j.at("pred_box"));
            if (!seen.insert(p.scene_id).second) throw DuplicatePrediction(p.scene_id);
            out.push_back(std::move(p));
        } catch (const DuplicatePrediction&) {
            throw;
        } catch (const std::exception& e) {
            throw Error("predictions line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string annotation_jsonl_line(const Annotation& ann) {
    json j = {
        {"scene_id", ann.scene_id},
        {"target_id", ann.target_id},
        {"text", ann.text},
        {"location_phrase", ann.location_phrase},
        {"distinction", to_string(ann.distinction)},
        {"target_box", box_to_array(ann.target_box)},
        {"transcript_ref", ann.transcript_ref},
    };
    return j.dump();
}

Annotation annotation_from_jsonl_line(const std::string& line) {
    const json j = json::parse(line);
    Annotation ann;
    ann.scene_id = j.at("scene_id").get<std::string>();
    ann.target_id = j.at("target_id").get<std::string>();
    ann.text = j.at("text").get<std::string>();
    ann.location_phrase = j.at("location_phrase").get<std::string>();
    ann.distinction = distinction_from_string(j.at("distinction").get<std::string>());
    ann.target_box = box_from_array(j.at("target_box"));
    ann.transcript_ref = j.at("transcript_ref").get<std::string>();
    return ann;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string eval_csv(const EvalResult& result) {
    std::string out = "group,n,acc25,acc50\n";
    out += "overall," + std::to_string(result.n) + "," + fmt(result.acc_25) + "," + fmt(result.acc_50) + "\n";
    for (const EvalGroup& g : result.groups) {
        out += g.key + "," + std::to_string(g.n) + "," + fmt(g.acc_25) + "," + fmt(g.acc_50) + "\n";
    }
    return out;
}

std::string seg_csv(const SegScore& score) {
    std::string out = "n,miou_i\n";
    out += std::to_string(score.per_instance.size()) + "," + fmt(score.miou_i) + "\n";
    return out;
}

}  // namespace sceneforge
