#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "sceneforge/geometry.hpp"

namespace sceneforge {

/// Parses an ASCII PLY. Vertex elements must declare x, y, z (float or
/// double) and red, green, blue (uchar); optional int properties
/// `instance_id` and `part_label` are preserved, anything else is parsed and
/// dropped. Non-vertex elements are skipped. Throws MalformedHeader,
/// UnsupportedProperty or TruncatedBody, each naming the first offending
/// line.
PointCloud parse_ply(std::string_view bytes);

/// Writes an ASCII PLY with double-precision coordinates (shortest exact
/// decimal form), so parse_ply(serialize_ply(pc)) reproduces pc bit for bit.
std::string serialize_ply(const PointCloud& pc);

PointCloud load_ply(const std::filesystem::path& path);
void save_ply(const std::filesystem::path& path, const PointCloud& pc);

/// Reads a whole file into a string; throws Error when unreadable.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace sceneforge
