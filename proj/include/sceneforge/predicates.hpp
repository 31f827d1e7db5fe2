#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "sceneforge/geometry.hpp"

namespace sceneforge {

/// The 13 placement relations: 6 axis primitives, 4 diagonal pairs, plus
/// Between, Surrounded and Near. Directions follow the project frame
/// (left = -x, right = +x, front = -y, back = +y, up = +z, down = -z).
enum class SpatialPredicate {
    Left, Right, Front, Back, Above, Below,
    UpperLeft, UpperRight, LowerLeft, LowerRight,
    Between, Surrounded, Near,
};

inline constexpr std::array<SpatialPredicate, 13> kAllPredicates = {
    SpatialPredicate::Left, SpatialPredicate::Right, SpatialPredicate::Front,
    SpatialPredicate::Back, SpatialPredicate::Above, SpatialPredicate::Below,
    SpatialPredicate::UpperLeft, SpatialPredicate::UpperRight, SpatialPredicate::LowerLeft,
    SpatialPredicate::LowerRight, SpatialPredicate::Between, SpatialPredicate::Surrounded,
    SpatialPredicate::Near,
};

std::string to_string(SpatialPredicate p);
SpatialPredicate predicate_from_string(const std::string& s);

struct PredicateArity {
    std::size_t min = 1;
    std::size_t max = 1;
};

/// Distractors one predicate instance binds: Between exactly 2, Surrounded
/// at least 4, everything else exactly 1.
PredicateArity predicate_arity(SpatialPredicate p);

/// Participating (axis, sign) pairs for the primitive-based predicates;
/// empty for Between / Surrounded / Near.
std::vector<std::pair<int, int>> predicate_axes(SpatialPredicate p);

/// Geometric truth of a predicate from boxes alone. Every predicate also
/// requires the target box to be disjoint from each participating distractor
/// box. Primitive-based predicates use axis dominance: the signed center
/// delta along each participating axis must exceed the clearance and the
/// absolute delta along every non-participating axis. Throws ArityMismatch
/// when the distractor count does not fit the predicate.
bool evaluate_predicate(SpatialPredicate pred, const Aabb& target_box,
                        const std::vector<Aabb>& distractor_boxes, double clearance);

}  // namespace sceneforge
