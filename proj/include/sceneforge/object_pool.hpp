#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "sceneforge/geometry.hpp"

namespace sceneforge {

enum class Provenance { RealScan, CAD };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// A pooled object: geometry plus the collation features retrieval runs on.
struct ObjectRecord {
    std::string id;  // content hash of the cloud
    std::string class_label;
    Provenance provenance = Provenance::RealScan;
    Rgb mean_color;
    ShapeCategory shape = ShapeCategory::Other;
    PointCloud cloud;
    std::string source;  // dataset name
};

enum class DistinctionType { Location, LocationShape, LocationColor, LocationClass };

std::string to_string(DistinctionType d);
DistinctionType distinction_from_string(const std::string& s);
inline constexpr std::array<DistinctionType, 4> kAllDistinctions = {
    DistinctionType::Location, DistinctionType::LocationShape,
    DistinctionType::LocationColor, DistinctionType::LocationClass};

/// What to retrieve relative to a target object. Thresholds operate on the
/// 0-255 RGB L2 scale.
struct RetrievalSpec {
    ObjectRecord target;
    DistinctionType distinction = DistinctionType::Location;
    double color_same_max = 30.0;
    double color_diff_min = 80.0;
    std::size_t count = 1;
};

/// Object candidates pool indexed by (class, shape, color cell of side 32
/// per channel). Immutable once built; concurrent retrieval is safe.
class Pool {
public:
    /// Adds a record; duplicates (same id) are ignored. Returns the stored
    /// index.
    std::size_t add(ObjectRecord rec);

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::vector<ObjectRecord>& records() const { return records_; }
    const ObjectRecord* find(const std::string& id) const;

    /// Candidate indices passing the spec's constraint row, gathered through
    /// the feature index (equivalent to a full scan; see tests).
    std::vector<std::size_t> match(const RetrievalSpec& spec) const;

    /// Direct per-record constraint check, shared with the post-hoc audit.
    static bool satisfies(const ObjectRecord& candidate, const RetrievalSpec& spec);

private:
    using IndexKey = std::tuple<std::string, int, int, int, int>;
    static IndexKey key_for(const ObjectRecord& rec);

    std::vector<ObjectRecord> records_;
    std::map<IndexKey, std::vector<std::size_t>> index_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Builds a record from a cloud: id = content hash, features computed.
/// Throws TooFewPoints when the cloud is too small to classify.
ObjectRecord make_record(PointCloud cloud, const std::string& class_label, Provenance provenance,
                         const std::string& source);

/// Parses an object PLY and collates it. Parse errors propagate.
ObjectRecord ingest(const std::filesystem::path& path, const std::string& class_label,
                    Provenance provenance, const std::string& source);

/// Picks spec.count distractors for spec.target: all real-scanned qualifiers
/// are exhausted before CAD ones, ties broken by a seeded shuffle over
/// id-sorted candidates. The target itself is never returned. Throws
/// InsufficientCandidates when fewer than spec.count records qualify.
std::vector<ObjectRecord> retrieve(const Pool& pool, const RetrievalSpec& spec, std::uint64_t seed);

struct PoolStatsRow {
    std::string class_label;
    std::size_t total = 0;
    std::map<ShapeCategory, std::size_t> by_shape;
    std::size_t real_scan = 0;
    std::size_t cad = 0;
};

/// Per-class summary; row totals sum to the pool size.
std::vector<PoolStatsRow> pool_stats(const Pool& pool);

/// Pool directory layout: one <id>.ply per object plus manifest.jsonl with
/// one record per line (id, class, provenance, source, mean_color, shape).
void save_pool(const std::filesystem::path& dir, const Pool& pool);
Pool load_pool(const std::filesystem::path& dir);

}  // namespace sceneforge
