#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sceneforge/render.hpp"
#include "sceneforge/scene.hpp"

namespace sceneforge {

/// Facts about a rendered object, emitted by render bookkeeping so that the
/// deterministic mock clients can answer from structure instead of pixels.
struct ObjectFacts {
    std::string class_label;
    std::string color_name;
    ShapeCategory shape = ShapeCategory::Other;
    double diagonal = 0.0;  // meters
    double height = 0.0;    // meters
};

/// Two-capability chat interface: describe() is the vision-language role,
/// complete() the language-only role. observe*() is the side channel the
/// renderer uses to hand facts to mock clients; live clients ignore it.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string describe(const Image& image, const std::string& prompt) = 0;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual void observe(const Image& /*image*/, const ObjectFacts& /*facts*/) {}
    virtual void observe_pair(const Image& /*image*/, const ObjectFacts& /*target*/,
                              const ObjectFacts& /*distractor*/) {}
};

struct ClientPair {
    std::shared_ptr<ChatClient> vision;
    std::shared_ptr<ChatClient> language;
};

/// Prompt texts are versioned so transcripts stay reproducible across
/// releases.
struct PromptSet {
    std::string version;
    std::string describe_prompt;
    std::string question_seed;  // placeholders: {round}, {iteration}, {history}
    std::string sum_p2;         // placeholder: {items}
    std::string sum_p3;         // placeholders: {target}, {distractor}, {pair}
};

PromptSet default_prompts();

struct AnnotationConfig {
    int qa_rounds = 6;
    std::vector<ViewPose> views = canonical_views();
    int iter_rounds = 3;
    int max_answer_words = 60;
    PromptSet prompts = default_prompts();
    int image_width = 192;
    int image_height = 192;
};

/// One question/answer exchange inside iter_cap. `rejections` counts verbose
/// answers that were discarded before (or instead of) the accepted one.
struct QAEntry {
    int round = 0;
    int view = 0;
    int iteration = 0;
    std::string question;
    std::string answer;
    bool accepted = false;
    int rejections = 0;
    std::string rejection_reason;
};

/// One (round, view) slot of the annotation loop.
struct ViewSlot {
    int round = 0;
    int view = 0;
    std::string target_description;
    std::string distractor_description;
    std::vector<QAEntry> qa;
};

struct PairTranscript {
    std::string pair_id;
    std::string target_id;
    std::string distractor_id;
    std::vector<ViewSlot> slots;  // qa_rounds x |views|, in (round, view) order
    std::size_t accepted_captions() const;
};

struct SceneTranscript {
    std::string scene_id;
    std::vector<PairTranscript> pairs;
};

std::string transcript_json(const SceneTranscript& t);

struct DistinctionSummary {
    std::string pair_id;
    std::string target_summary;
    std::string distractor_summary;
    std::string combined;
    std::set<std::string> dimensions_covered;  // subset of {shape,color,size,part,other}
};

struct Annotation {
    std::string scene_id;
    std::string target_id;
    std::string text;
    std::string location_phrase;
    DistinctionType distinction = DistinctionType::Location;
    Aabb target_box;
    std::string transcript_ref;
};

struct IterCapResult {
    std::vector<std::string> captions;
    std::vector<QAEntry> entries;
};

/// Iterative difference capture on one (concatenated) image: iter_rounds
/// question/answer exchanges, each question produced by the language client
/// from the running Q&A history. Answers beyond cfg.max_answer_words are
/// rejected and re-asked once, then dropped. A client exception is retried
/// once, then surfaces as ClientFailure.
IterCapResult iter_cap(const Image& image, int iter_rounds, const ClientPair& clients,
                       const AnnotationConfig& cfg, int round = 1, int view = 0);

struct PairContext {
    std::string pair_id;
    std::string target_id;
    std::string distractor_id;
    std::string target_class;
    std::string distractor_class;
};

/// The per-pair annotation loop: for every round and view, describe target
/// and distractor, then run iter_cap on the side-by-side image; after each
/// round condense the accumulated captions, and after the last round distill
/// the final distinction description.
std::pair<DistinctionSummary, PairTranscript> annotate_pair(const PointCloud& target_cloud,
                                                            const PointCloud& distractor_cloud,
                                                            const ClientPair& clients,
                                                            const AnnotationConfig& cfg,
                                                            const PairContext& ctx = {});

inline constexpr const char* kLocationVocabularyVersion = "v1";

/// Deterministic phrase for a predicate and the classes of the distractors
/// it binds (vocabulary v1). Throws ArityMismatch when the class count does
/// not fit the predicate.
std::string location_phrase(SpatialPredicate pred, const std::vector<std::string>& distractor_classes);

/// Number of scene objects satisfying the annotation's structured fields
/// (class, distinction attribute, every predicate phrase). A sound
/// annotation fits exactly one: the target.
std::size_t matching_objects(const Scene& scene);

/// Composes the final grounding text: class mention, distilled distinction
/// clause(s), then the location phrase(s); a plain location distinction
/// relies on the phrase alone. Throws NonUniqueDescription when the text's
/// structured fields fit more than one object in the scene.
Annotation compose_annotation(const Scene& scene, const std::vector<DistinctionSummary>& summaries,
                              const AnnotationConfig& cfg);

/// Runs annotate_pair over every (target, distractor) pair of the scene and
/// composes the annotation.
std::pair<Annotation, SceneTranscript> annotate_scene(const Scene& scene, const ClientPair& clients,
                                                      const AnnotationConfig& cfg);

/// Deterministic mock clients: the vision mock answers from rendered-object
/// facts, the language mock cycles a fixed attribute list for questions and
/// summarizes extractively.
ClientPair mock_clients(std::uint64_t seed);

/// Nearest named color on the 0-255 RGB scale.
std::string color_name(const Rgb& color);

/// Human word for a shape category ("cuboid", "l-shaped", ...).
std::string shape_word(ShapeCategory shape);

/// Prefixes the english indefinite article ("a chair", "an orange ...").
std::string with_article(const std::string& word);

}  // namespace sceneforge
