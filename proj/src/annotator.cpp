#include "sceneforge/annotator.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sceneforge/errors.hpp"

namespace sceneforge {

using nlohmann::json;

namespace {

std::string replace_all(std::string text, const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
    return text;
}

std::size_t word_count(const std::string& s) {
    std::istringstream iss(s);
    std::string w;
    std::size_t n = 0;
    while (iss >> w) ++n;
    return n;
}

template <typename F>
auto with_retry(F&& f, int round, const std::string& what) {
    try {
        return f();
    } catch (const std::exception&) {
        try {
            return f();
        } catch (const std::exception& e) {
            throw ClientFailure(round, what + ": " + e.what());
        }
    }
}

ObjectFacts facts_for(const PointCloud& cloud, const std::string& class_label) {
    ObjectFacts f;
    f.class_label = class_label;
    f.color_name = color_name(mean_color(cloud));
    f.shape = classify_shape(cloud);
    const Aabb box = aabb(cloud);
    f.diagonal = box.diagonal();
    f.height = box.size().z;
    return f;
}

}  // namespace

std::string color_name(const Rgb& color) {
    static const std::vector<std::pair<const char*, Rgb>> palette = {
        {"black", {20, 20, 20}},    {"white", {245, 245, 245}}, {"gray", {150, 150, 150}},
        {"red", {200, 30, 30}},     {"green", {40, 160, 60}},   {"blue", {40, 60, 200}},
        {"yellow", {230, 220, 40}}, {"orange", {240, 150, 40}}, {"purple", {140, 60, 170}},
        {"brown", {121, 85, 61}},   {"pink", {240, 160, 190}},  {"cyan", {60, 200, 220}},
    };
    const char* best = "gray";
    double best_d = 1e300;
    for (const auto& [name, rgb] : palette) {
        const double d = color_distance(color, rgb);
        if (d < best_d) {
            best_d = d;
            best = name;
        }
    }
    return best;
}

std::string shape_word(ShapeCategory shape) {
    switch (shape) {
        case ShapeCategory::Cuboid: return "cuboid";
        case ShapeCategory::LShape: return "l-shaped";
        case ShapeCategory::Sphere: return "spherical";
        case ShapeCategory::Other: return "irregular";
    }
    return "irregular";
}

PromptSet default_prompts() {
    PromptSet p;
    p.version = "v1";
    p.describe_prompt =
        "[describe] State the object's class if recognizable, then its color, overall shape and "
        "approximate size, in one sentence.";
    p.question_seed =
        "[ask round={round} check={iteration}] The image shows the target object on the left and a "
        "distractor on the right. Pick a single attribute and ask one question comparing the two "
        "objects on it. Ask about an attribute not yet settled by the previous exchanges.\n"
        "Previous exchanges:\n{history}";
    p.sum_p2 =
        "[condense] Rewrite the notes below as a minimal list: keep each distinct observation about "
        "class, color, shape, size, height or parts exactly once, one per line, and drop anything "
        "about unspecified aspects such as texture.\n---\n{items}";
    p.sum_p3 =
        "[final] Using only the notes below, write one short description of what distinguishes the "
        "target from the distractor.\n--target--\n{target}\n--distractor--\n{distractor}\n--pair--\n"
        "{pair}";
    return p;
}

std::size_t PairTranscript::accepted_captions() const {
    std::size_t n = 0;
    for (const ViewSlot& slot : slots) {
        for (const QAEntry& e : slot.qa) {
            if (e.accepted) ++n;
        }
    }
    return n;
}

IterCapResult iter_cap(const Image& image, int iter_rounds, const ClientPair& clients,
                       const AnnotationConfig& cfg, int round, int view) {
    if (iter_rounds < 1) throw Error("iter_cap requires iter_rounds >= 1");
    IterCapResult res;
    std::string history;
    for (int iter = 1; iter <= iter_rounds; ++iter) {
        std::string prompt = cfg.prompts.question_seed;
        prompt = replace_all(prompt, "{round}", std::to_string(round));
        prompt = replace_all(prompt, "{iteration}", std::to_string(iter));
        prompt = replace_all(prompt, "{history}", history.empty() ? "(none)" : history);

        const std::string question = with_retry([&] { return clients.language->complete(prompt); },
                                                round, "question generation");

        QAEntry entry;
        entry.round = round;
        entry.view = view;
        entry.iteration = iter;
        entry.question = question;

        std::string answer = with_retry([&] { return clients.vision->describe(image, question); },
                                        round, "difference capture");
        if (word_count(answer) > static_cast<std::size_t>(cfg.max_answer_words)) {
            // Verbose answers are asked again once, then dropped.
            ++entry.rejections;
            entry.rejection_reason =
                "verbose answer (" + std::to_string(word_count(answer)) + " words)";
            answer = with_retry([&] { return clients.vision->describe(image, question); }, round,
                                "difference capture");
        }
        if (word_count(answer) > static_cast<std::size_t>(cfg.max_answer_words)) {
            ++entry.rejections;
            entry.answer = answer;
            entry.accepted = false;
        } else {
            entry.answer = answer;
            entry.accepted = true;
            res.captions.push_back(answer);
            history += "Q: " + question + "\nA: " + answer + "\n";
        }
        res.entries.push_back(std::move(entry));
    }
    return res;
}

namespace {

std::string summarize(const ClientPair& clients, const AnnotationConfig& cfg,
                      const std::vector<std::string>& items, int round) {
    std::string joined;
    for (const std::string& it : items) {
        joined += it;
        joined += '\n';
    }
    const std::string prompt = replace_all(cfg.prompts.sum_p2, "{items}", joined);
    return with_retry([&] { return clients.language->complete(prompt); }, round, "summarization");
}

}  // namespace

std::pair<DistinctionSummary, PairTranscript> annotate_pair(const PointCloud& target_cloud,
                                                            const PointCloud& distractor_cloud,
                                                            const ClientPair& clients,
                                                            const AnnotationConfig& cfg,
                                                            const PairContext& ctx) {
    if (cfg.qa_rounds < 1) throw Error("annotation requires qa_rounds >= 1");
    if (cfg.views.empty()) throw Error("annotation requires at least one view");

    const ObjectFacts target_facts = facts_for(target_cloud, ctx.target_class);
    const ObjectFacts distractor_facts = facts_for(distractor_cloud, ctx.distractor_class);

    std::vector<Image> target_images, distractor_images, pair_images;
    for (const ViewPose& view : cfg.views) {
        Image ti = render_view({target_cloud}, view, cfg.image_width, cfg.image_height);
        Image di = render_view({distractor_cloud}, view, cfg.image_width, cfg.image_height);
        Image pi = concat_horizontal(ti, di);
        clients.vision->observe(ti, target_facts);
        clients.vision->observe(di, distractor_facts);
        clients.vision->observe_pair(pi, target_facts, distractor_facts);
        target_images.push_back(std::move(ti));
        distractor_images.push_back(std::move(di));
        pair_images.push_back(std::move(pi));
    }

    PairTranscript transcript;
    transcript.pair_id = ctx.pair_id;
    transcript.target_id = ctx.target_id;
    transcript.distractor_id = ctx.distractor_id;

    std::vector<std::string> target_desc, distractor_desc, captions_all;
    std::string pair_sum, target_sum, distractor_sum;

    for (int round = 1; round <= cfg.qa_rounds; ++round) {
        for (std::size_t v = 0; v < cfg.views.size(); ++v) {
            ViewSlot slot;
            slot.round = round;
            slot.view = static_cast<int>(v);
            try {
                slot.target_description = with_retry(
                    [&] { return clients.vision->describe(target_images[v], cfg.prompts.describe_prompt); },
                    round, "target view description");
                slot.distractor_description = with_retry(
                    [&] { return clients.vision->describe(distractor_images[v], cfg.prompts.describe_prompt); },
                    round, "distractor view description");
                IterCapResult cap = iter_cap(pair_images[v], cfg.iter_rounds, clients, cfg, round,
                                             static_cast<int>(v));
                slot.qa = std::move(cap.entries);
                for (std::string& c : cap.captions) captions_all.push_back(std::move(c));
            } catch (const ClientFailure& e) {
                throw ClientFailure(round, "view '" + cfg.views[v].name + "': " + e.what());
            }
            target_desc.push_back(slot.target_description);
            distractor_desc.push_back(slot.distractor_description);
            transcript.slots.push_back(std::move(slot));
        }
        pair_sum = summarize(clients, cfg, captions_all, round);
        target_sum = summarize(clients, cfg, target_desc, round);
        distractor_sum = summarize(clients, cfg, distractor_desc, round);
    }

    std::string final_prompt = cfg.prompts.sum_p3;
    final_prompt = replace_all(final_prompt, "{target}", target_sum);
    final_prompt = replace_all(final_prompt, "{distractor}", distractor_sum);
    final_prompt = replace_all(final_prompt, "{pair}", pair_sum);
    const std::string combined = with_retry([&] { return clients.language->complete(final_prompt); },
                                            cfg.qa_rounds, "final distillation");

    // Summaries should stay extractive: words in the final description ought
    // to come from accepted captions or view descriptions. Guaranteed for the
    // mock; only worth a warning for live clients.
    {
        std::string source;
        for (const std::string& c : captions_all) source += c + " ";
        for (const std::string& d : target_desc) source += d + " ";
        for (const std::string& d : distractor_desc) source += d + " ";
        std::istringstream words(combined);
        std::string word;
        while (words >> word) {
            if (source.find(word) == std::string::npos) {
                std::fprintf(stderr, "warning: pair %s summary introduces '%s' absent from all captions\n",
                             ctx.pair_id.c_str(), word.c_str());
                break;
            }
        }
    }

    DistinctionSummary summary;
    summary.pair_id = ctx.pair_id;
    summary.target_summary = target_sum;
    summary.distractor_summary = distractor_sum;
    summary.combined = combined;

    auto mentions = [&](std::initializer_list<const char*> words) {
        for (const char* w : words) {
            if (combined.find(w) != std::string::npos) return true;
        }
        return false;
    };
    if (mentions({"shape", "cuboid", "l-shaped", "spherical", "irregular"})) {
        summary.dimensions_covered.insert("shape");
    }
    if (mentions({"color"}) || combined.find(target_facts.color_name) != std::string::npos ||
        combined.find(distractor_facts.color_name) != std::string::npos) {
        summary.dimensions_covered.insert("color");
    }
    if (mentions({"size", "larger", "smaller", "taller", "shorter", "height", "meters"})) {
        summary.dimensions_covered.insert("size");
    }
    if (mentions({"part"})) summary.dimensions_covered.insert("part");
    if (summary.dimensions_covered.empty() || mentions({"material", "no salient difference"})) {
        summary.dimensions_covered.insert("other");
    }
    return {std::move(summary), std::move(transcript)};
}

std::string transcript_json(const SceneTranscript& t) {
    json pairs = json::array();
    for (const PairTranscript& pt : t.pairs) {
        json slots = json::array();
        for (const ViewSlot& slot : pt.slots) {
            json qa = json::array();
            for (const QAEntry& e : slot.qa) {
                qa.push_back({
                    {"round", e.round},
                    {"view", e.view},
                    {"iteration", e.iteration},
                    {"question", e.question},
                    {"answer", e.answer},
                    {"accepted", e.accepted},
                    {"rejections", e.rejections},
                    {"rejection_reason", e.rejection_reason},
                });
            }
            slots.push_back({
                {"round", slot.round},
                {"view", slot.view},
                {"target_description", slot.target_description},
                {"distractor_description", slot.distractor_description},
                {"qa", std::move(qa)},
            });
        }
        pairs.push_back({
            {"pair_id", pt.pair_id},
            {"target_id", pt.target_id},
            {"distractor_id", pt.distractor_id},
            {"slots", std::move(slots)},
        });
    }
    return json{{"scene_id", t.scene_id}, {"pairs", std::move(pairs)}}.dump(2) + "\n";
}

std::string with_article(const std::string& word) {
    static const std::string vowels = "aeiou";
    // "l-shaped" is pronounced el-shaped.
    const bool an = !word.empty() && (vowels.find(word[0]) != std::string::npos ||
                                      word.rfind("l-", 0) == 0);
    return (an ? "an " : "a ") + word;
}

std::string location_phrase(SpatialPredicate pred, const std::vector<std::string>& classes) {
    const PredicateArity arity = predicate_arity(pred);
    if (classes.size() < arity.min || classes.size() > arity.max) {
        throw ArityMismatch("location phrase for '" + to_string(pred) + "' needs " +
                            std::to_string(arity.min) + (arity.max == arity.min ? "" : "+") +
                            " classes, got " + std::to_string(classes.size()));
    }
    // Vocabulary v1: exactly one phrase per predicate.
    switch (pred) {
        case SpatialPredicate::Left: return "to the left of the " + classes[0];
        case SpatialPredicate::Right: return "to the right of the " + classes[0];
        case SpatialPredicate::Front: return "in front of the " + classes[0];
        case SpatialPredicate::Back: return "behind the " + classes[0];
        case SpatialPredicate::Above: return "above the " + classes[0];
        case SpatialPredicate::Below: return "below the " + classes[0];
        case SpatialPredicate::UpperLeft: return "to the upper left of the " + classes[0];
        case SpatialPredicate::UpperRight: return "to the upper right of the " + classes[0];
        case SpatialPredicate::LowerLeft: return "to the lower left of the " + classes[0];
        case SpatialPredicate::LowerRight: return "to the lower right of the " + classes[0];
        case SpatialPredicate::Near: return "near the " + classes[0];
        case SpatialPredicate::Between:
            if (classes[0] == classes[1]) return "between the two " + classes[0] + "s";
            return "between the " + classes[0] + " and the " + classes[1];
        case SpatialPredicate::Surrounded: {
            std::vector<std::string> distinct;
            for (const std::string& c : classes) {
                if (std::find(distinct.begin(), distinct.end(), c) == distinct.end()) distinct.push_back(c);
            }
            std::string joined = distinct[0] + "s";
            for (std::size_t i = 1; i < distinct.size(); ++i) joined += " and " + distinct[i] + "s";
            return "surrounded by the " + joined;
        }
    }
    throw Error("unhandled predicate");
}

namespace {

struct PredicateGroup {
    SpatialPredicate predicate;
    std::vector<const PlacedObject*> members;
};

std::vector<PredicateGroup> predicate_groups(const Scene& scene) {
    std::map<int, PredicateGroup> groups;
    for (const PlacedObject& obj : scene.objects) {
        if (obj.role != Role::Distractor || !obj.predicate) continue;
        PredicateGroup& g = groups[obj.predicate_group];
        g.predicate = *obj.predicate;
        g.members.push_back(&obj);
    }
    std::vector<PredicateGroup> out;
    for (auto& [_, g] : groups) out.push_back(std::move(g));
    return out;
}

// Whether `subject` can claim the group's phrase: some choice of other scene
// objects with the mentioned classes makes the predicate true of it.
bool group_satisfiable(const Scene& scene, const PlacedObject& subject, const PredicateGroup& group) {
    const double clearance = scene.spec.clearance;
    std::vector<const PlacedObject*> others;
    for (const PlacedObject& obj : scene.objects) {
        if (&obj != &subject) others.push_back(&obj);
    }
    const PredicateArity arity = predicate_arity(group.predicate);

    if (arity.min == 1 && arity.max == 1) {
        const std::string& ref_class = group.members[0]->class_label;
        for (const PlacedObject* o : others) {
            if (o->class_label != ref_class) continue;
            if (evaluate_predicate(group.predicate, subject.box, {o->box}, clearance)) return true;
        }
        return false;
    }
    if (group.predicate == SpatialPredicate::Between) {
        const std::string& c0 = group.members[0]->class_label;
        const std::string& c1 = group.members[1]->class_label;
        for (std::size_t i = 0; i < others.size(); ++i) {
            for (std::size_t j = i + 1; j < others.size(); ++j) {
                const bool class_fit =
                    (others[i]->class_label == c0 && others[j]->class_label == c1) ||
                    (others[i]->class_label == c1 && others[j]->class_label == c0);
                if (!class_fit) continue;
                if (evaluate_predicate(SpatialPredicate::Between, subject.box,
                                       {others[i]->box, others[j]->box}, clearance)) {
                    return true;
                }
            }
        }
        return false;
    }
    // Surrounded: take every other object of a mentioned class; the quadrant
    // test is monotone in participants.
    std::vector<std::string> ref_classes;
    for (const PlacedObject* m : group.members) ref_classes.push_back(m->class_label);
    std::vector<Aabb> boxes;
    for (const PlacedObject* o : others) {
        if (std::find(ref_classes.begin(), ref_classes.end(), o->class_label) != ref_classes.end()) {
            boxes.push_back(o->box);
        }
    }
    if (boxes.size() < arity.min) return false;
    return evaluate_predicate(SpatialPredicate::Surrounded, subject.box, boxes, clearance);
}

}  // namespace

std::size_t matching_objects(const Scene& scene) {
    const PlacedObject& target = scene.target();
    const auto groups = predicate_groups(scene);
    std::size_t matches = 0;
    for (const PlacedObject& candidate : scene.objects) {
        if (candidate.class_label != target.class_label) continue;
        if (scene.spec.distinction == DistinctionType::LocationShape && candidate.shape != target.shape) {
            continue;
        }
        if (scene.spec.distinction == DistinctionType::LocationColor &&
            color_distance(candidate.mean_color, target.mean_color) > scene.spec.color_same_max) {
            continue;
        }
        bool all = true;
        for (const PredicateGroup& g : groups) {
            if (!group_satisfiable(scene, candidate, g)) {
                all = false;
                break;
            }
        }
        if (all) ++matches;
    }
    return matches;
}

Annotation compose_annotation(const Scene& scene, const std::vector<DistinctionSummary>& summaries,
                              const AnnotationConfig& cfg) {
    (void)cfg;
    const PlacedObject& target = scene.target();
    const std::size_t distractors = scene.objects.size() - 1;
    if (summaries.size() != distractors) {
        throw Error("expected one summary per distractor pair (" + std::to_string(distractors) +
                    "), got " + std::to_string(summaries.size()));
    }

    std::string clause;
    switch (scene.spec.distinction) {
        case DistinctionType::Location:
        case DistinctionType::LocationClass:
            break;  // the location phrase (and class) carry the distinction
        case DistinctionType::LocationShape:
            clause = " with " + with_article(shape_word(target.shape)) + " shape";
            break;
        case DistinctionType::LocationColor:
            clause = " with " + with_article(color_name(target.mean_color)) + " color";
            break;
    }

    std::string phrases;
    for (const auto& g : predicate_groups(scene)) {
        std::vector<std::string> classes;
        for (const PlacedObject* m : g.members) classes.push_back(m->class_label);
        const std::string phrase = location_phrase(g.predicate, classes);
        phrases += phrases.empty() ? phrase : " and " + phrase;
    }

    const std::size_t matches = matching_objects(scene);
    if (matches != 1) {
        throw NonUniqueDescription("annotation for scene " + scene.scene_id + " fits " +
                                   std::to_string(matches) + " objects");
    }

    Annotation ann;
    ann.scene_id = scene.scene_id;
    ann.target_id = target.record_id;
    ann.text = "the " + target.class_label + (clause.empty() ? "" : clause + ",") + " " + phrases;
    ann.location_phrase = phrases;
    ann.distinction = scene.spec.distinction;
    ann.target_box = scene.target_box;
    ann.transcript_ref = "transcripts/" + scene.scene_id + ".json";
    return ann;
}

std::pair<Annotation, SceneTranscript> annotate_scene(const Scene& scene, const ClientPair& clients,
                                                      const AnnotationConfig& cfg) {
    SceneTranscript transcript;
    transcript.scene_id = scene.scene_id;
    std::vector<DistinctionSummary> summaries;
    const PlacedObject& target = scene.target();
    std::size_t pair_index = 0;
    for (const PlacedObject& obj : scene.objects) {
        if (obj.role != Role::Distractor) continue;
        PairContext ctx;
        ctx.pair_id = scene.scene_id + "-p" + std::to_string(pair_index++);
        ctx.target_id = target.record_id;
        ctx.distractor_id = obj.record_id;
        ctx.target_class = target.class_label;
        ctx.distractor_class = obj.class_label;
        auto [summary, pair_transcript] = annotate_pair(target.cloud, obj.cloud, clients, cfg, ctx);
        summaries.push_back(std::move(summary));
        transcript.pairs.push_back(std::move(pair_transcript));
    }
    Annotation ann = compose_annotation(scene, summaries, cfg);
    return {std::move(ann), std::move(transcript)};
}

}  // namespace sceneforge
