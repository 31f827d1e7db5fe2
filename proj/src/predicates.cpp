#include "sceneforge/predicates.hpp"

#include <cmath>

#include "sceneforge/errors.hpp"

namespace sceneforge {

std::string to_string(SpatialPredicate p) {
    switch (p) {
        case SpatialPredicate::Left: return "left";
        case SpatialPredicate::Right: return "right";
        case SpatialPredicate::Front: return "front";
        case SpatialPredicate::Back: return "back";
        case SpatialPredicate::Above: return "above";
        case SpatialPredicate::Below: return "below";
        case SpatialPredicate::UpperLeft: return "upper_left";
        case SpatialPredicate::UpperRight: return "upper_right";
        case SpatialPredicate::LowerLeft: return "lower_left";
        case SpatialPredicate::LowerRight: return "lower_right";
        case SpatialPredicate::Between: return "between";
        case SpatialPredicate::Surrounded: return "surrounded";
        case SpatialPredicate::Near: return "near";
    }
    return "near";
}

SpatialPredicate predicate_from_string(const std::string& s) {
    for (SpatialPredicate p : kAllPredicates) {
        if (to_string(p) == s) return p;
    }
    throw Error("unknown spatial predicate '" + s + "'");
}

PredicateArity predicate_arity(SpatialPredicate p) {
    switch (p) {
        case SpatialPredicate::Between: return {2, 2};
        case SpatialPredicate::Surrounded: return {4, static_cast<std::size_t>(-1)};
        default: return {1, 1};
    }
}

std::vector<std::pair<int, int>> predicate_axes(SpatialPredicate p) {
    switch (p) {
        case SpatialPredicate::Left: return {{0, -1}};
        case SpatialPredicate::Right: return {{0, +1}};
        case SpatialPredicate::Front: return {{1, -1}};
        case SpatialPredicate::Back: return {{1, +1}};
        case SpatialPredicate::Above: return {{2, +1}};
        case SpatialPredicate::Below: return {{2, -1}};
        case SpatialPredicate::UpperLeft: return {{2, +1}, {0, -1}};
        case SpatialPredicate::UpperRight: return {{2, +1}, {0, +1}};
        case SpatialPredicate::LowerLeft: return {{2, -1}, {0, -1}};
        case SpatialPredicate::LowerRight: return {{2, -1}, {0, +1}};
        default: return {};
    }
}

bool evaluate_predicate(SpatialPredicate pred, const Aabb& target_box,
                        const std::vector<Aabb>& distractor_boxes, double clearance) {
    const PredicateArity arity = predicate_arity(pred);
    if (distractor_boxes.size() < arity.min || distractor_boxes.size() > arity.max) {
        throw ArityMismatch("predicate '" + to_string(pred) + "' binds " +
                            std::to_string(arity.min) +
                            (arity.max == static_cast<std::size_t>(-1)
                                 ? "+"
                                 : (arity.max == arity.min ? "" : ".." + std::to_string(arity.max))) +
                            " distractors, got " + std::to_string(distractor_boxes.size()));
    }

    for (const Aabb& box : distractor_boxes) {
        if (intersection_volume(target_box, box) > 0.0) return false;
    }

    const Vec3 tc = target_box.center();
    const auto axes = predicate_axes(pred);
    if (!axes.empty()) {
        const Vec3 dc = distractor_boxes.front().center();
        const Vec3 delta = dc - tc;
        bool participating[3] = {false, false, false};
        for (const auto& [axis, sign] : axes) participating[axis] = true;
        for (const auto& [axis, sign] : axes) {
            const double s = sign * delta[axis];
            if (s <= clearance) return false;
            for (int other = 0; other < 3; ++other) {
                if (!participating[other] && s <= std::abs(delta[other])) return false;
            }
        }
        return true;
    }

    switch (pred) {
        case SpatialPredicate::Between: {
            const Vec3 p1 = distractor_boxes[0].center();
            const Vec3 p2 = distractor_boxes[1].center();
            const Vec3 seg = p2 - p1;
            const double len2 = seg.dot(seg);
            if (len2 <= 0.0) return false;
            const double proj = (tc - p1).dot(seg) / len2;
            if (proj <= 0.0 || proj >= 1.0) return false;
            const Vec3 closest = p1 + seg * proj;
            return (tc - closest).norm() <= clearance;
        }
        case SpatialPredicate::Surrounded: {
            bool quadrant[4] = {false, false, false, false};
            for (const Aabb& box : distractor_boxes) {
                const Vec3 d = box.center() - tc;
                if (d.x == 0.0 || d.y == 0.0) continue;
                const int q = (d.x > 0.0 ? 0 : 1) + (d.y > 0.0 ? 0 : 2);
                quadrant[q] = true;
            }
            return quadrant[0] && quadrant[1] && quadrant[2] && quadrant[3];
        }
        case SpatialPredicate::Near: {
            const Aabb& d = distractor_boxes.front();
            const double dist = (d.center() - tc).norm();
            return dist <= 0.5 * (target_box.diagonal() + d.diagonal()) + clearance;
        }
        default: return false;
    }
}

}  // namespace sceneforge
