#include "sceneforge/object_pool.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sceneforge/errors.hpp"
#include "sceneforge/ply.hpp"

namespace sceneforge {

using nlohmann::json;

std::string to_string(Provenance p) { return p == Provenance::RealScan ? "RealScan" : "CAD"; }

Provenance provenance_from_string(const std::string& s) {
    if (s == "RealScan") return Provenance::RealScan;
    if (s == "CAD") return Provenance::CAD;
    throw Error("unknown provenance '" + s + "'");
}

std::string to_string(DistinctionType d) {
    switch (d) {
        case DistinctionType::Location: return "location";
        case DistinctionType::LocationShape: return "location+shape";
        case DistinctionType::LocationColor: return "location+color";
        case DistinctionType::LocationClass: return "location+class";
    }
    return "location";
}

DistinctionType distinction_from_string(const std::string& s) {
    for (DistinctionType d : kAllDistinctions) {
        if (to_string(d) == s) return d;
    }
    throw Error("unknown distinction type '" + s + "'");
}

Pool::IndexKey Pool::key_for(const ObjectRecord& rec) {
    return {rec.class_label, static_cast<int>(rec.shape), rec.mean_color.r / 32,
            rec.mean_color.g / 32, rec.mean_color.b / 32};
}

std::size_t Pool::add(ObjectRecord rec) {
    auto it = by_id_.find(rec.id);
    if (it != by_id_.end()) return it->second;
    const std::size_t idx = records_.size();
    by_id_.emplace(rec.id, idx);
    index_[key_for(rec)].push_back(idx);
    records_.push_back(std::move(rec));
    return idx;
}

const ObjectRecord* Pool::find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

bool Pool::satisfies(const ObjectRecord& c, const RetrievalSpec& spec) {
    const ObjectRecord& t = spec.target;
    if (c.id == t.id) return false;
    const double cd = color_distance(c.mean_color, t.mean_color);
    switch (spec.distinction) {
        case DistinctionType::Location:
            return c.class_label == t.class_label && c.shape == t.shape && cd <= spec.color_same_max;
        case DistinctionType::LocationShape:
            return c.class_label == t.class_label && cd <= spec.color_same_max && c.shape != t.shape;
        case DistinctionType::LocationColor:
            return c.class_label == t.class_label && c.shape == t.shape && cd >= spec.color_diff_min;
        case DistinctionType::LocationClass:
            return c.class_label != t.class_label && c.shape == t.shape;
    }
    return false;
}

std::vector<std::size_t> Pool::match(const RetrievalSpec& spec) const {
    if (!(spec.color_same_max < spec.color_diff_min)) {
        throw Error("retrieval spec requires color_same_max < color_diff_min");
    }
    std::vector<std::size_t> out;
    auto consider_cell = [&](const std::vector<std::size_t>& cell) {
        for (std::size_t idx : cell) {
            if (satisfies(records_[idx], spec)) out.push_back(idx);
        }
    };

    const ObjectRecord& t = spec.target;
    switch (spec.distinction) {
        case DistinctionType::Location:
        case DistinctionType::LocationShape: {
            // Walk the class's cells, skipping color cells that cannot hold a
            // point within color_same_max of the target color.
            auto cell_in_range = [&](int cell, int channel) {
                const int lo = std::max(0, (channel - static_cast<int>(spec.color_same_max)) / 32);
                const int hi = std::min(7, (channel + static_cast<int>(spec.color_same_max)) / 32);
                return cell >= lo && cell <= hi;
            };
            const bool want_same_shape = spec.distinction == DistinctionType::Location;
            auto it = index_.lower_bound(IndexKey{t.class_label, 0, 0, 0, 0});
            for (; it != index_.end() && std::get<0>(it->first) == t.class_label; ++it) {
                const auto& [cls, shp, r, g, b] = it->first;
                if ((shp == static_cast<int>(t.shape)) != want_same_shape) continue;
                if (!cell_in_range(r, t.mean_color.r) || !cell_in_range(g, t.mean_color.g) ||
                    !cell_in_range(b, t.mean_color.b)) {
                    continue;
                }
                consider_cell(it->second);
            }
            break;
        }
        case DistinctionType::LocationColor: {
            // Complement color region: walk every cell of the class.
            auto it = index_.lower_bound(IndexKey{t.class_label, 0, 0, 0, 0});
            for (; it != index_.end() && std::get<0>(it->first) == t.class_label; ++it) {
                consider_cell(it->second);
            }
            break;
        }
        case DistinctionType::LocationClass: {
            for (const auto& [key, cell] : index_) {
                if (std::get<0>(key) == t.class_label) continue;
                if (std::get<1>(key) != static_cast<int>(t.shape)) continue;
                consider_cell(cell);
            }
            break;
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ObjectRecord make_record(PointCloud cloud, const std::string& class_label, Provenance provenance,
                         const std::string& source) {
    ObjectRecord rec;
    rec.id = content_hash(cloud);
    rec.class_label = class_label;
    rec.provenance = provenance;
    rec.mean_color = mean_color(cloud);
    rec.shape = classify_shape(cloud);
    rec.cloud = std::move(cloud);
    rec.source = source;
    return rec;
}

ObjectRecord ingest(const std::filesystem::path& path, const std::string& class_label,
                    Provenance provenance, const std::string& source) {
    return make_record(load_ply(path), class_label, provenance, source);
}

std::vector<ObjectRecord> retrieve(const Pool& pool, const RetrievalSpec& spec, std::uint64_t seed) {
    if (spec.count < 1) throw Error("retrieval spec requires count >= 1");
    std::vector<std::size_t> cand = pool.match(spec);
    if (cand.size() < spec.count) throw InsufficientCandidates(cand.size(), spec.count);

    // Two-tier order: every RealScan qualifier before any CAD one. Within a
    // tier the id-sorted list is shuffled by the seed.
    auto tier = [&](std::size_t idx) {
        return pool.records()[idx].provenance == Provenance::RealScan ? 0 : 1;
    };
    std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
        const int ta = tier(a), tb = tier(b);
        if (ta != tb) return ta < tb;
        return pool.records()[a].id < pool.records()[b].id;
    });
    const auto split = std::find_if(cand.begin(), cand.end(), [&](std::size_t i) { return tier(i) == 1; });
    Rng rng(seed);
    std::vector<std::size_t> real(cand.begin(), split), cad(split, cand.end());
    rng.shuffle(real);
    rng.shuffle(cad);

    std::vector<ObjectRecord> out;
    out.reserve(spec.count);
    for (std::size_t i : real) {
        if (out.size() == spec.count) break;
        out.push_back(pool.records()[i]);
    }
    for (std::size_t i : cad) {
        if (out.size() == spec.count) break;
        out.push_back(pool.records()[i]);
    }
    return out;
}

std::vector<PoolStatsRow> pool_stats(const Pool& pool) {
    std::map<std::string, PoolStatsRow> rows;
    for (const ObjectRecord& rec : pool.records()) {
        PoolStatsRow& row = rows[rec.class_label];
        row.class_label = rec.class_label;
        ++row.total;
        ++row.by_shape[rec.shape];
        if (rec.provenance == Provenance::RealScan) ++row.real_scan;
        else ++row.cad;
    }
    std::vector<PoolStatsRow> out;
    out.reserve(rows.size());
    for (auto& [_, row] : rows) out.push_back(std::move(row));
    return out;
}

void save_pool(const std::filesystem::path& dir, const Pool& pool) {
    std::filesystem::create_directories(dir);
    std::vector<const ObjectRecord*> sorted;
    sorted.reserve(pool.size());
    for (const ObjectRecord& rec : pool.records()) sorted.push_back(&rec);
    std::sort(sorted.begin(), sorted.end(),
              [](const ObjectRecord* a, const ObjectRecord* b) { return a->id < b->id; });

    std::string manifest;
    for (const ObjectRecord* rec : sorted) {
        save_ply(dir / (rec->id + ".ply"), rec->cloud);
        json line = {
            {"id", rec->id},
            {"class", rec->class_label},
            {"provenance", to_string(rec->provenance)},
            {"source", rec->source},
            {"mean_color", {rec->mean_color.r, rec->mean_color.g, rec->mean_color.b}},
            {"shape", to_string(rec->shape)},
        };
        manifest += line.dump();
        manifest += '\n';
    }
    write_file(dir / "manifest.jsonl", manifest);
}

Pool load_pool(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.jsonl";
    if (!std::filesystem::exists(manifest_path)) {
        throw Error("pool manifest not found: " + manifest_path.string());
    }
    Pool pool;
    std::istringstream in(read_file(manifest_path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        const std::string id = j.at("id").get<std::string>();
        PointCloud cloud = load_ply(dir / (id + ".ply"));
        // Features are recomputed from geometry so the record invariants hold
        // even if the manifest was edited by hand.
        ObjectRecord rec = make_record(std::move(cloud), j.at("class").get<std::string>(),
                                       provenance_from_string(j.at("provenance").get<std::string>()),
                                       j.at("source").get<std::string>());
        if (rec.id != id) {
            throw Error("pool entry " + id + " does not match its geometry hash " + rec.id);
        }
        pool.add(std::move(rec));
    }
    return pool;
}

}  // namespace sceneforge
