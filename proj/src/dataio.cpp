#include "pairval/dataio.hpp"

#include <png.h>

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "json.hpp"
#include "pairval/errors.hpp"

namespace pairval {

namespace fs = std::filesystem;
using json = nlohmann::json;

const ManifestEntry* DatasetManifest::find(const std::string& id) const {
    for (const auto& e : entries) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorCode::io, "cannot write " + tmp.string());
        out << contents;
        out.flush();
        require(static_cast<bool>(out), ErrorCode::io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    require(!ec, ErrorCode::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open manifest " + path.string());
    const fs::path base = path.parent_path();

    DatasetManifest manifest;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = csv::trim_eol(line);
        if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
        if (view.empty()) continue;
        auto fields = csv::split_row(view);
        if (!header_seen) {
            header_seen = true;
            require(fields.size() >= 3 && fields[0] == "id" && fields[1] == "original" &&
                        fields[2] == "transformed" && (fields.size() == 3 || fields[3] == "label"),
                    ErrorCode::parse,
                    path.string() + ":" + std::to_string(line_no) +
                        ": expected header id,original,transformed,label");
            continue;
        }
        require(fields.size() == 3 || fields.size() == 4, ErrorCode::parse,
                path.string() + ":" + std::to_string(line_no) + ": expected 3 or 4 fields, got " +
                    std::to_string(fields.size()));
        ManifestEntry entry;
        entry.id = fields[0];
        require(!entry.id.empty(), ErrorCode::parse,
                path.string() + ":" + std::to_string(line_no) + ": empty id");
        if (fields.size() == 4 && !fields[3].empty()) {
            entry.label = parse_label(fields[3]);
            require(entry.label.has_value(), ErrorCode::parse,
                    path.string() + ":" + std::to_string(line_no) + ": bad label '" + fields[3] + "'");
        }
        require(seen.insert(entry.id).second, ErrorCode::duplicate_id,
                path.string() + ":" + std::to_string(line_no) + ": duplicate id \"" + entry.id + "\"");
        entry.original = fs::path(fields[1]).is_absolute() ? fs::path(fields[1]) : base / fields[1];
        entry.transformed = fs::path(fields[2]).is_absolute() ? fs::path(fields[2]) : base / fields[2];
        for (const auto& p : {entry.original, entry.transformed}) {
            require(fs::exists(p), ErrorCode::not_found,
                    path.string() + ":" + std::to_string(line_no) + ": missing image file " + p.string());
        }
        manifest.entries.push_back(std::move(entry));
    }
    require(header_seen, ErrorCode::parse, path.string() + ": empty manifest");
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
    // Relative entries are already relative to the manifest; absolute ones are
    // rewritten relative to it when they live underneath.
    const fs::path base = fs::absolute(path).parent_path();
    std::ostringstream out;
    out << "id,original,transformed,label\n";
    for (const auto& e : manifest.entries) {
        auto rel = [&](const fs::path& p) {
            if (!p.is_absolute()) return p.generic_string();
            const auto r = p.lexically_relative(base);
            const bool inside = !r.empty() && *r.begin() != "..";
            return (inside ? r : p).generic_string();
        };
        out << csv::quote(e.id) << ',' << csv::quote(rel(e.original)) << ','
            << csv::quote(rel(e.transformed)) << ',' << (e.label ? to_string(*e.label) : "") << '\n';
    }
    write_file_atomic(path, out.str());
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    require(png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()) != 0,
            ErrorCode::unsupported_format, std::string("not a readable PNG: ") + png.message);
    if (png.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&png);
        fail(ErrorCode::unsupported_format, "unsupported PNG bit depth (16-bit); 8-bit required");
    }
    const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;
    Image img(static_cast<int>(png.width), static_cast<int>(png.height), channels);
    png_color black{0, 0, 0};
    if (png_image_finish_read(&png, &black, img.data.data(), 0, nullptr) == 0) {
        std::string msg = png.message;
        png_image_free(&png);
        fail(ErrorCode::unsupported_format, "PNG decode failed: " + msg);
    }
    return img;
}

Image load_image(const fs::path& path) {
    auto raw = read_file(path);
    try {
        return decode_png(std::vector<std::uint8_t>(raw.begin(), raw.end()));
    } catch (const Error& e) {
        fail(e.code(), path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width);
    png.height = static_cast<png_uint_32>(img.height);
    png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    require(png_image_write_to_memory(&png, nullptr, &size, 0, img.data.data(), 0, nullptr) != 0,
            ErrorCode::io, std::string("PNG sizing failed: ") + png.message);
    std::vector<std::uint8_t> out(size);
    require(png_image_write_to_memory(&png, out.data(), &size, 0, img.data.data(), 0, nullptr) != 0,
            ErrorCode::io, std::string("PNG encode failed: ") + png.message);
    out.resize(size);
    return out;
}

void save_image(const Image& img, const fs::path& path) {
    auto bytes = encode_png(img);
    write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    Image gray(img.width, img.height, 1);
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        // Weights in thousandths so half-up rounding is exact.
        const unsigned luma = 299u * img.data[3 * i] + 587u * img.data[3 * i + 1] + 114u * img.data[3 * i + 2];
        gray.data[i] = static_cast<std::uint8_t>((luma + 500u) / 1000u);
    }
    return gray;
}

ImagePair load_pair(const ManifestEntry& entry) {
    ImagePair pair{entry.id, load_image(entry.original), load_image(entry.transformed), entry.label};
    require(pair.original.same_shape(pair.transformed), ErrorCode::dimension_mismatch,
            "pair \"" + entry.id + "\": original is " + std::to_string(pair.original.width) + "x" +
                std::to_string(pair.original.height) + "x" + std::to_string(pair.original.channels) +
                " but transformed is " + std::to_string(pair.transformed.width) + "x" +
                std::to_string(pair.transformed.height) + "x" + std::to_string(pair.transformed.channels));
    return pair;
}

std::vector<ImagePair> load_pairs(const DatasetManifest& manifest) {
    std::vector<ImagePair> pairs;
    pairs.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) pairs.push_back(load_pair(e));
    return pairs;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorCode::parse,
            where + ": bad number '" + s + "'");
    return v;
}

}  // namespace

void save_metric_cache(const MetricCache& cache, const fs::path& path) {
    std::ostringstream out;
    json meta = {{"format", "pairval-metric-cache"},
                 {"version", 1},
                 {"fingerprint", cache.fingerprint},
                 {"seed", cache.seed}};
    out << '#' << meta.dump() << '\n';
    out << "id";
    for (auto name : kMetricNames) out << ',' << name;
    out << '\n';
    for (const auto& [id, mv] : cache.rows) {
        require(mv.all_finite(), ErrorCode::numeric, "non-finite metric value for pair \"" + id + "\"");
        out << csv::quote(id);
        for (double v : mv.values) out << ',' << format_double(v);
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

MetricCache load_metric_cache(const fs::path& path, const std::string& expected_fingerprint) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open metric cache " + path.string());
    MetricCache cache;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && line.starts_with("#"), ErrorCode::parse,
            path.string() + ": missing '#' metadata line");
    json meta;
    try {
        meta = json::parse(csv::trim_eol(line).substr(1));
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, path.string() + ": bad metadata: " + e.what());
    }
    cache.fingerprint = meta.value("fingerprint", "");
    cache.seed = meta.value("seed", std::uint64_t{0});
    if (!expected_fingerprint.empty() && cache.fingerprint != expected_fingerprint) {
        fail(ErrorCode::stale_cache, path.string() +
                                         ": metric cache is stale (fingerprint differs from current metric "
                                         "configuration); recompute it");
    }
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse, path.string() + ": missing header");
    auto header = csv::split_row(csv::trim_eol(line));
    require(header.size() == kMetricCount + 1 && header[0] == "id", ErrorCode::parse,
            path.string() + ": unexpected header");
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        require(header[i + 1] == kMetricNames[i], ErrorCode::parse,
                path.string() + ": unexpected column " + header[i + 1]);
    }
    int line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = csv::trim_eol(line);
        if (view.empty()) continue;
        auto fields = csv::split_row(view);
        const std::string where = path.string() + ":" + std::to_string(line_no);
        require(fields.size() == kMetricCount + 1, ErrorCode::parse, where + ": wrong field count");
        MetricVector mv;
        for (std::size_t i = 0; i < kMetricCount; ++i) mv.values[i] = parse_double(fields[i + 1], where);
        require(mv.all_finite(), ErrorCode::numeric, where + ": non-finite metric value");
        require(cache.rows.emplace(fields[0], mv).second, ErrorCode::duplicate_id,
                where + ": duplicate id \"" + fields[0] + "\"");
    }
    return cache;
}

}  // namespace pairval
