#include "sceneforge/ply.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

#include "sceneforge/errors.hpp"

namespace sceneforge {

namespace {

bool is_float_type(const std::string& t) {
    return t == "float" || t == "float32" || t == "double" || t == "float64";
}
bool is_uchar_type(const std::string& t) { return t == "uchar" || t == "uint8"; }
bool is_int_type(const std::string& t) {
    return t == "char" || t == "uchar" || t == "short" || t == "ushort" || t == "int" ||
           t == "uint" || t == "int8" || t == "uint8" || t == "int16" || t == "uint16" ||
           t == "int32" || t == "uint32";
}
bool is_scalar_type(const std::string& t) { return is_float_type(t) || is_int_type(t); }

struct Property {
    std::string type;
    std::string name;
    bool is_list = false;
    std::size_t decl_line = 0;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> props;
};

// Token scanner over the body region that tracks line numbers for error
// reporting.
class TokenScanner {
public:
    TokenScanner(std::string_view text, std::size_t pos, std::size_t line)
        : text_(text), pos_(pos), line_(line) {}

    bool next(std::string_view& tok) {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            if (text_[pos_] == '\n') ++line_;
            ++pos_;
        }
        if (pos_ >= text_.size()) return false;
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        tok = text_.substr(start, pos_ - start);
        return true;
    }

    std::size_t line() const { return line_; }

private:
    std::string_view text_;
    std::size_t pos_;
    std::size_t line_;
};

double parse_double_token(TokenScanner& sc, const std::string& what) {
    std::string_view tok;
    if (!sc.next(tok)) throw TruncatedBody(sc.line(), "unexpected end of file, expected " + what);
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size()) {
        throw TruncatedBody(sc.line(), "cannot parse '" + std::string(tok) + "' as " + what);
    }
    if (!std::isfinite(v)) {
        throw TruncatedBody(sc.line(), "non-finite value '" + std::string(tok) + "' for " + what);
    }
    return v;
}

long parse_int_token(TokenScanner& sc, const std::string& what) {
    std::string_view tok;
    if (!sc.next(tok)) throw TruncatedBody(sc.line(), "unexpected end of file, expected " + what);
    long v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size()) {
        throw TruncatedBody(sc.line(), "cannot parse '" + std::string(tok) + "' as " + what);
    }
    return v;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string t;
    while (iss >> t) out.push_back(t);
    return out;
}

}  // namespace

PointCloud parse_ply(std::string_view bytes) {
    // --- header ---
    std::size_t pos = 0;
    std::size_t line_no = 0;
    auto next_line = [&](std::string& out) {
        if (pos >= bytes.size()) return false;
        ++line_no;
        std::size_t nl = bytes.find('\n', pos);
        if (nl == std::string_view::npos) nl = bytes.size();
        out.assign(bytes.substr(pos, nl - pos));
        if (!out.empty() && out.back() == '\r') out.pop_back();
        pos = nl < bytes.size() ? nl + 1 : bytes.size();
        return true;
    };

    std::string line;
    if (!next_line(line) || split_ws(line) != std::vector<std::string>{"ply"}) {
        throw MalformedHeader(1, "expected 'ply' magic");
    }

    std::vector<Element> elements;
    bool format_seen = false;
    bool header_done = false;
    std::size_t end_header_line = 0;
    while (next_line(line)) {
        const auto tok = split_ws(line);
        if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "end_header") {
            header_done = true;
            end_header_line = line_no;
            break;
        }
        if (tok[0] == "format") {
            if (tok.size() != 3 || tok[1] != "ascii") {
                throw UnsupportedProperty(line_no, "only 'format ascii 1.0' is supported: '" + line + "'");
            }
            format_seen = true;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw MalformedHeader(line_no, "bad element declaration: '" + line + "'");
            Element el;
            el.name = tok[1];
            try {
                el.count = std::stoul(tok[2]);
            } catch (const std::exception&) {
                throw MalformedHeader(line_no, "bad element count: '" + line + "'");
            }
            elements.push_back(std::move(el));
        } else if (tok[0] == "property") {
            if (elements.empty()) throw MalformedHeader(line_no, "property before any element");
            Property p;
            p.decl_line = line_no;
            if (tok.size() == 5 && tok[1] == "list") {
                p.is_list = true;
                p.type = tok[3];
                p.name = tok[4];
            } else if (tok.size() == 3) {
                p.type = tok[1];
                p.name = tok[2];
                if (!is_scalar_type(p.type)) {
                    throw UnsupportedProperty(line_no, "unknown property type '" + p.type + "'");
                }
            } else {
                throw MalformedHeader(line_no, "bad property declaration: '" + line + "'");
            }
            elements.back().props.push_back(std::move(p));
        } else {
            throw MalformedHeader(line_no, "unrecognized header line: '" + line + "'");
        }
    }
    if (!header_done) throw MalformedHeader(line_no, "missing end_header");
    if (!format_seen) throw MalformedHeader(end_header_line, "missing format declaration");

    const Element* vertex = nullptr;
    for (const Element& el : elements) {
        if (el.name == "vertex") {
            vertex = &el;
            break;
        }
    }
    if (!vertex) {
        throw MalformedHeader(end_header_line, "no vertex element declared (mesh-only or empty file)");
    }

    // Resolve vertex columns.
    int col_x = -1, col_y = -1, col_z = -1, col_r = -1, col_g = -1, col_b = -1;
    int col_instance = -1, col_part = -1;
    for (std::size_t i = 0; i < vertex->props.size(); ++i) {
        const Property& p = vertex->props[i];
        if (p.is_list) {
            throw UnsupportedProperty(p.decl_line, "list property '" + p.name + "' in vertex element");
        }
        auto need_float = [&](int& slot) {
            if (!is_float_type(p.type)) {
                throw UnsupportedProperty(p.decl_line, "property '" + p.name + "' must be float, got '" + p.type + "'");
            }
            slot = static_cast<int>(i);
        };
        auto need_uchar = [&](int& slot) {
            if (!is_uchar_type(p.type)) {
                throw UnsupportedProperty(p.decl_line, "property '" + p.name + "' must be uchar, got '" + p.type + "'");
            }
            slot = static_cast<int>(i);
        };
        if (p.name == "x") need_float(col_x);
        else if (p.name == "y") need_float(col_y);
        else if (p.name == "z") need_float(col_z);
        else if (p.name == "red") need_uchar(col_r);
        else if (p.name == "green") need_uchar(col_g);
        else if (p.name == "blue") need_uchar(col_b);
        else if (p.name == "instance_id") {
            if (!is_int_type(p.type)) {
                throw UnsupportedProperty(p.decl_line, "instance_id must be an integer type, got '" + p.type + "'");
            }
            col_instance = static_cast<int>(i);
        } else if (p.name == "part_label") {
            if (!is_int_type(p.type)) {
                throw UnsupportedProperty(p.decl_line, "part_label must be an integer type, got '" + p.type + "'");
            }
            col_part = static_cast<int>(i);
        }
        // other properties (nx, alpha, ...) are read and dropped
    }
    auto require_col = [&](int col, const char* name) {
        if (col < 0) {
            throw MalformedHeader(end_header_line, std::string("vertex element missing required property '") + name + "'");
        }
    };
    require_col(col_x, "x");
    require_col(col_y, "y");
    require_col(col_z, "z");
    require_col(col_r, "red");
    require_col(col_g, "green");
    require_col(col_b, "blue");

    // --- body ---
    TokenScanner sc(bytes, pos, line_no);
    PointCloud pc;
    pc.xyz.reserve(vertex->count);
    pc.rgb.reserve(vertex->count);
    if (col_instance >= 0) pc.instance.reserve(vertex->count);
    if (col_part >= 0) pc.part.reserve(vertex->count);

    for (const Element& el : elements) {
        if (&el == vertex) {
            for (std::size_t row = 0; row < el.count; ++row) {
                Vec3 p;
                Rgb c;
                int inst = 0, part = 0;
                for (std::size_t i = 0; i < el.props.size(); ++i) {
                    const int col = static_cast<int>(i);
                    if (col == col_x) p.x = parse_double_token(sc, "x");
                    else if (col == col_y) p.y = parse_double_token(sc, "y");
                    else if (col == col_z) p.z = parse_double_token(sc, "z");
                    else if (col == col_r || col == col_g || col == col_b) {
                        const long v = parse_int_token(sc, "color channel");
                        if (v < 0 || v > 255) {
                            throw TruncatedBody(sc.line(), "color channel " + std::to_string(v) + " outside [0,255]");
                        }
                        if (col == col_r) c.r = static_cast<std::uint8_t>(v);
                        else if (col == col_g) c.g = static_cast<std::uint8_t>(v);
                        else c.b = static_cast<std::uint8_t>(v);
                    } else if (col == col_instance) {
                        inst = static_cast<int>(parse_int_token(sc, "instance_id"));
                    } else if (col == col_part) {
                        part = static_cast<int>(parse_int_token(sc, "part_label"));
                    } else if (el.props[i].is_list) {
                        const long n = parse_int_token(sc, "list count");
                        for (long k = 0; k < n; ++k) parse_double_token(sc, "list entry");
                    } else {
                        parse_double_token(sc, "property " + el.props[i].name);
                    }
                }
                pc.push_back(p, c);
                if (col_instance >= 0) pc.instance.push_back(inst);
                if (col_part >= 0) pc.part.push_back(part);
            }
            break;  // anything after the vertex element is ignored
        }
        // Skip a preceding element row by row.
        for (std::size_t row = 0; row < el.count; ++row) {
            for (const Property& p : el.props) {
                if (p.is_list) {
                    const long n = parse_int_token(sc, "list count");
                    for (long k = 0; k < n; ++k) parse_double_token(sc, "list entry");
                } else {
                    parse_double_token(sc, "property " + p.name);
                }
            }
        }
    }
    return pc;
}

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, p);
}

}  // namespace

std::string serialize_ply(const PointCloud& pc) {
    std::string out;
    out.reserve(64 + pc.size() * 48);
    out += "ply\nformat ascii 1.0\nelement vertex ";
    out += std::to_string(pc.size());
    out += "\nproperty double x\nproperty double y\nproperty double z\n";
    out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (pc.has_instances()) out += "property int instance_id\n";
    if (pc.has_parts()) out += "property int part_label\n";
    out += "end_header\n";
    for (std::size_t i = 0; i < pc.size(); ++i) {
        append_double(out, pc.xyz[i].x);
        out += ' ';
        append_double(out, pc.xyz[i].y);
        out += ' ';
        append_double(out, pc.xyz[i].z);
        out += ' ';
        out += std::to_string(pc.rgb[i].r);
        out += ' ';
        out += std::to_string(pc.rgb[i].g);
        out += ' ';
        out += std::to_string(pc.rgb[i].b);
        if (pc.has_instances()) {
            out += ' ';
            out += std::to_string(pc.instance[i]);
        }
        if (pc.has_parts()) {
            out += ' ';
            out += std::to_string(pc.part[i]);
        }
        out += '\n';
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("short write: " + path.string());
}

PointCloud load_ply(const std::filesystem::path& path) { return parse_ply(read_file(path)); }

void save_ply(const std::filesystem::path& path, const PointCloud& pc) {
    write_file(path, serialize_ply(pc));
}

}  // namespace sceneforge
