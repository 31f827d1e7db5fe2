#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "sceneforge/annotator.hpp"
#include "sceneforge/errors.hpp"

namespace sceneforge {

namespace {

const std::vector<std::string> kAttributeCycle = {"height", "color", "shape",
                                                  "parts",  "size",  "material"};

constexpr double kSizeTolerance = 0.08;  // relative difference treated as "same"

bool facts_equal(const ObjectFacts& a, const ObjectFacts& b) {
    auto close = [](double x, double y) {
        const double m = std::max(std::abs(x), std::abs(y));
        return m <= 0.0 || std::abs(x - y) <= kSizeTolerance * m;
    };
    return a.class_label == b.class_label && a.color_name == b.color_name && a.shape == b.shape &&
           close(a.diagonal, b.diagonal) && close(a.height, b.height);
}

std::string format_meters(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

int parse_marker_int(const std::string& prompt, const std::string& key) {
    const std::size_t pos = prompt.find(key);
    if (pos == std::string::npos) return -1;
    return std::atoi(prompt.c_str() + pos + key.size());
}

std::string section(const std::string& prompt, const std::string& open, const std::string& close) {
    const std::size_t a = prompt.find(open);
    if (a == std::string::npos) return {};
    const std::size_t start = a + open.size();
    const std::size_t b = close.empty() ? std::string::npos : prompt.find(close, start);
    return prompt.substr(start, b == std::string::npos ? std::string::npos : b - start);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream iss(text);
    std::string line;
    while (std::getline(iss, line)) {
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

/// Answers from rendered-object facts keyed by image content.
class MockVisionClient final : public ChatClient {
public:
    explicit MockVisionClient(std::uint64_t seed) : seed_(seed) {}

    void observe(const Image& image, const ObjectFacts& facts) override {
        single_[image_hash(image)] = facts;
    }
    void observe_pair(const Image& image, const ObjectFacts& target,
                      const ObjectFacts& distractor) override {
        pairs_[image_hash(image)] = {target, distractor};
    }

    std::string describe(const Image& image, const std::string& prompt) override {
        const std::uint64_t key = image_hash(image);
        if (auto it = pairs_.find(key); it != pairs_.end()) {
            return compare(it->second.first, it->second.second, prompt);
        }
        if (auto it = single_.find(key); it != single_.end()) {
            const ObjectFacts& f = it->second;
            return with_article(f.color_name) + " " + shape_word(f.shape) +
                   (f.class_label.empty() ? std::string(" object") : " " + f.class_label) + " about " +
                   format_meters(f.diagonal) + " meters across and " + format_meters(f.height) +
                   " meters tall.";
        }
        return "an object rendered as a sparse point cloud.";
    }

    std::string complete(const std::string&) override {
        throw Error("vision mock has no language-only capability");
    }

private:
    std::string compare(const ObjectFacts& t, const ObjectFacts& d, const std::string& question) {
        if (facts_equal(t, d)) return "no salient difference between the two objects.";
        auto asked = [&](const std::string& word) { return question.find(word) != std::string::npos; };
        if (asked("height")) {
            if (t.height > d.height * (1.0 + kSizeTolerance)) {
                return "the left object is taller than the right object.";
            }
            if (d.height > t.height * (1.0 + kSizeTolerance)) {
                return "the left object is shorter than the right object.";
            }
            return "the two objects are about the same height.";
        }
        if (asked("color")) {
            if (t.color_name != d.color_name) {
                return "the left object is " + t.color_name + " while the right object is " +
                       d.color_name + ".";
            }
            return "both objects are " + t.color_name + ".";
        }
        if (asked("shape")) {
            if (t.shape != d.shape) {
                return "the left object has a " + shape_word(t.shape) +
                       " shape while the right object has a " + shape_word(d.shape) + " shape.";
            }
            return "both objects have a " + shape_word(t.shape) + " shape.";
        }
        if (asked("parts")) {
            if (t.class_label != d.class_label && !t.class_label.empty() && !d.class_label.empty()) {
                return "the parts differ: the left object reads as a " + t.class_label +
                       " and the right one as a " + d.class_label + ".";
            }
            return "no part-level difference is visible.";
        }
        if (asked("size")) {
            if (t.diagonal > d.diagonal * (1.0 + kSizeTolerance)) {
                return "the left object is larger than the right object, about " +
                       format_meters(t.diagonal) + " versus " + format_meters(d.diagonal) + " meters.";
            }
            if (d.diagonal > t.diagonal * (1.0 + kSizeTolerance)) {
                return "the left object is smaller than the right object, about " +
                       format_meters(t.diagonal) + " versus " + format_meters(d.diagonal) + " meters.";
            }
            return "the two objects are about the same size.";
        }
        if (asked("material")) {
            return "material cues are not visible in the point rendering.";
        }
        return "the objects differ in overall appearance.";
    }

    std::uint64_t seed_;
    std::unordered_map<std::uint64_t, ObjectFacts> single_;
    std::unordered_map<std::uint64_t, std::pair<ObjectFacts, ObjectFacts>> pairs_;
};

/// Cycles attributes for questions and summarizes extractively: outputs are
/// always token subsets of the prompt inputs.
class MockLanguageClient final : public ChatClient {
public:
    explicit MockLanguageClient(std::uint64_t seed) : seed_(seed) {}

    std::string describe(const Image&, const std::string&) override {
        throw Error("language mock has no vision capability");
    }

    std::string complete(const std::string& prompt) override {
        if (prompt.rfind("[ask", 0) == 0) {
            const int round = std::max(1, parse_marker_int(prompt, "round="));
            const std::string& attribute = kAttributeCycle[(round - 1) % kAttributeCycle.size()];
            return "focusing only on " + attribute + ": how do the two objects compare?";
        }
        if (prompt.rfind("[condense]", 0) == 0) {
            return condense(section(prompt, "---\n", ""));
        }
        if (prompt.rfind("[final]", 0) == 0) {
            return distill(prompt);
        }
        throw Error("language mock cannot interpret prompt: " + prompt.substr(0, 32));
    }

private:
    static std::string condense(const std::string& body) {
        std::vector<std::string> kept;
        for (const std::string& line : split_lines(body)) {
            if (std::find(kept.begin(), kept.end(), line) == kept.end()) kept.push_back(line);
        }
        std::string out;
        for (const std::string& line : kept) {
            out += line;
            out += '\n';
        }
        if (!out.empty()) out.pop_back();
        return out;
    }

    static std::string distill(const std::string& prompt) {
        const std::string pair = section(prompt, "--pair--\n", "");
        const std::string target = section(prompt, "--target--\n", "\n--distractor--");
        std::vector<std::string> picked;
        auto is_difference = [](const std::string& line) {
            return line.find(" while ") != std::string::npos ||
                   line.find(" than ") != std::string::npos ||
                   line.find("differ") != std::string::npos ||
                   line.find("no salient difference") != std::string::npos;
        };
        for (const std::string& line : split_lines(pair)) {
            if (is_difference(line) && std::find(picked.begin(), picked.end(), line) == picked.end()) {
                picked.push_back(line);
            }
        }
        if (picked.empty()) picked = split_lines(pair);
        if (picked.empty()) picked = split_lines(target);
        std::string out;
        for (const std::string& line : picked) {
            out += out.empty() ? line : " " + line;
        }
        return out.empty() ? "no salient difference between the two objects." : out;
    }

    std::uint64_t seed_;
};

}  // namespace

ClientPair mock_clients(std::uint64_t seed) {
    return ClientPair{std::make_shared<MockVisionClient>(seed),
                      std::make_shared<MockLanguageClient>(derive_seed(seed, "language"))};
}

}  // namespace sceneforge
