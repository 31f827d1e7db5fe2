#pragma once

#include <stdexcept>
#include <string>

namespace sceneforge {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- geometry ---
struct EmptyCloud : Error {
    EmptyCloud() : Error("operation requires a non-empty point cloud") {}
    explicit EmptyCloud(const std::string& msg) : Error(msg) {}
};
struct TooFewPoints : Error {
    TooFewPoints(std::size_t have, std::size_t need)
        : Error("too few points: have " + std::to_string(have) + ", need " + std::to_string(need)) {}
};
struct DegenerateCloud : Error {
    explicit DegenerateCloud(const std::string& msg) : Error(msg) {}
};

// --- PLY parsing; each carries the first offending line ---
struct MalformedHeader : Error {
    MalformedHeader(std::size_t line, const std::string& what)
        : Error("malformed header (line " + std::to_string(line) + "): " + what), line(line) {}
    std::size_t line;
};
struct UnsupportedProperty : Error {
    UnsupportedProperty(std::size_t line, const std::string& what)
        : Error("unsupported property (line " + std::to_string(line) + "): " + what), line(line) {}
    std::size_t line;
};
struct TruncatedBody : Error {
    TruncatedBody(std::size_t line, const std::string& what)
        : Error("truncated body (line " + std::to_string(line) + "): " + what), line(line) {}
    std::size_t line;
};

// --- retrieval / placement ---
struct InsufficientCandidates : Error {
    InsufficientCandidates(std::size_t found, std::size_t needed)
        : Error("insufficient candidates: found " + std::to_string(found) +
                ", needed " + std::to_string(needed)),
          found(found), needed(needed) {}
    std::size_t found;
    std::size_t needed;
};
struct PlacementInfeasible : Error {
    explicit PlacementInfeasible(const std::string& msg) : Error(msg) {}
};
struct UnknownInstance : Error {
    explicit UnknownInstance(int id) : Error("unknown instance id " + std::to_string(id)) {}
};
struct ArityMismatch : Error {
    explicit ArityMismatch(const std::string& msg) : Error(msg) {}
};
struct CaseViolation : Error {
    explicit CaseViolation(const std::string& msg) : Error(msg) {}
};

// --- annotation ---
struct ClientFailure : Error {
    ClientFailure(int round, const std::string& msg)
        : Error("chat client failed (round " + std::to_string(round) + "): " + msg), round(round) {}
    int round;
};
struct NonUniqueDescription : Error {
    explicit NonUniqueDescription(const std::string& msg) : Error(msg) {}
};

// --- evaluation ---
struct DuplicatePrediction : Error {
    explicit DuplicatePrediction(const std::string& scene_id)
        : Error("duplicate prediction for scene " + scene_id) {}
};
struct LengthMismatch : Error {
    LengthMismatch(std::size_t got, std::size_t want)
        : Error("label array length mismatch: " + std::to_string(got) + " vs " + std::to_string(want)) {}
};

}  // namespace sceneforge
