#include "vidtext/frame_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <regex>
#include <sstream>

namespace vidtext {
namespace fs = std::filesystem;

namespace {

struct FilenameTemplate {
    std::string prefix;
    std::string suffix;
    int width = 0;
    bool zero_pad = false;
};

FilenameTemplate parse_template(std::string_view pattern) {
    const auto pct = pattern.find('%');
    if (pct == std::string_view::npos) {
        throw ContractError("frame pattern needs one integer field, got \"" + std::string(pattern) + "\"");
    }
    FilenameTemplate t;
    t.prefix = std::string(pattern.substr(0, pct));
    std::size_t i = pct + 1;
    if (i < pattern.size() && pattern[i] == '0') {
        t.zero_pad = true;
        ++i;
    }
    while (i < pattern.size() && pattern[i] >= '0' && pattern[i] <= '9') {
        t.width = t.width * 10 + (pattern[i] - '0');
        ++i;
    }
    if (i >= pattern.size() || pattern[i] != 'd') {
        throw ContractError("frame pattern field must be %d / %0Nd, got \"" + std::string(pattern) + "\"");
    }
    t.suffix = std::string(pattern.substr(i + 1));
    if (t.suffix.find('%') != std::string::npos || t.prefix.find('%') != std::string::npos) {
        throw ContractError("frame pattern must contain exactly one field");
    }
    return t;
}

std::string regex_escape(const std::string& s) {
    static const std::string special = R"(\^$.|?*+()[]{})";
    std::string out;
    for (char c : s) {
        if (special.find(c) != std::string::npos) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

std::vector<unsigned char> read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RgbFrame decode_ppm(const std::vector<unsigned char>& bytes, const fs::path& file, int index) {
    std::size_t pos = 2;
    auto next_token = [&]() -> long {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        long v = 0;
        bool any = false;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + (bytes[pos] - '0');
            ++pos;
            any = true;
            if (v > 1'000'000) break;
        }
        if (!any) throw IoError("malformed PPM header in " + file.string());
        return v;
    };
    const long w = next_token();
    const long h = next_token();
    const long maxval = next_token();
    ++pos;  // single whitespace after maxval
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) {
        throw IoError("unsupported PPM header in " + file.string());
    }
    const std::size_t bps = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3 * bps;
    if (bytes.size() < pos + need) throw IoError("truncated PPM data in " + file.string());

    std::vector<Rgb> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    auto sample = [&](std::size_t k) -> std::uint8_t {
        long v = bps == 2 ? (bytes[pos + 2 * k] << 8) | bytes[pos + 2 * k + 1] : bytes[pos + k];
        if (maxval == 255) return static_cast<std::uint8_t>(v);
        return static_cast<std::uint8_t>(std::lround(static_cast<double>(v) * 255.0 / static_cast<double>(maxval)));
    };
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = Rgb{sample(3 * i), sample(3 * i + 1), sample(3 * i + 2)};
    }
    return RgbFrame(static_cast<int>(w), static_cast<int>(h), index, std::move(px));
}

struct PngReadDeleter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadDeleter() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngSource {
    const std::vector<unsigned char>* bytes;
    std::size_t pos;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t n) {
    auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
    if (src->pos + n > src->bytes->size()) png_error(png, "unexpected end of PNG data");
    std::copy_n(src->bytes->data() + src->pos, n, out);
    src->pos += n;
}

RgbFrame decode_png(const std::vector<unsigned char>& bytes, const fs::path& file, int index) {
    PngReadDeleter guard;
    guard.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!guard.png) throw IoError("libpng init failed for " + file.string());
    guard.info = png_create_info_struct(guard.png);
    if (!guard.info) throw IoError("libpng init failed for " + file.string());

    PngSource src{&bytes, 0};
    std::vector<png_bytep> rows;
    std::vector<unsigned char> buffer;
    png_uint_32 w = 0;
    png_uint_32 h = 0;

    if (setjmp(png_jmpbuf(guard.png))) {
        throw IoError("cannot decode PNG " + file.string());
    }
    png_set_read_fn(guard.png, &src, png_read_from_memory);
    png_read_info(guard.png, guard.info);
    w = png_get_image_width(guard.png, guard.info);
    h = png_get_image_height(guard.png, guard.info);
    const int color = png_get_color_type(guard.png, guard.info);
    const int depth = png_get_bit_depth(guard.png, guard.info);

    if (depth == 16) png_set_strip_16(guard.png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(guard.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(guard.png);
    if (png_get_valid(guard.png, guard.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(guard.png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(guard.png);
    png_set_strip_alpha(guard.png);
    png_read_update_info(guard.png, guard.info);

    const png_size_t stride = png_get_rowbytes(guard.png, guard.info);
    if (stride != static_cast<png_size_t>(w) * 3) png_error(guard.png, "unexpected row layout");
    buffer.resize(stride * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = buffer.data() + y * stride;
    png_read_image(guard.png, rows.data());
    png_read_end(guard.png, nullptr);

    std::vector<Rgb> px(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < px.size(); ++i) {
        px[i] = Rgb{buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
    }
    return RgbFrame(static_cast<int>(w), static_cast<int>(h), index, std::move(px));
}

void write_png_rows(const fs::path& file, int width, int height, int color_type, int channels,
                    std::span<const std::uint8_t> data) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(file.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw IoError("cannot write " + file.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng init failed for " + file.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("cannot encode PNG " + file.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(data.data() + y * stride));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

std::string format_frame_name(std::string_view pattern, int n) {
    const FilenameTemplate t = parse_template(pattern);
    std::string digits = std::to_string(n);
    if (static_cast<int>(digits.size()) < t.width) {
        digits.insert(0, static_cast<std::size_t>(t.width) - digits.size(), t.zero_pad ? '0' : ' ');
    }
    return t.prefix + digits + t.suffix;
}

RgbFrame load_image(const fs::path& file, int index) {
    const std::vector<unsigned char> bytes = read_file(file);
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) {
        return decode_png(bytes, file, index);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
        return decode_ppm(bytes, file, index);
    }
    throw IoError("undecodable image (expected PNG or P6): " + file.string());
}

std::vector<RgbFrame> load_frame_sequence(const fs::path& directory, std::string_view pattern) {
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) {
        throw IoError("frames directory not found: " + directory.string());
    }
    const FilenameTemplate t = parse_template(pattern);
    const std::regex re(regex_escape(t.prefix) + "([0-9]+)" + regex_escape(t.suffix));

    std::map<long long, fs::path> numbered;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        std::smatch m;
        if (std::regex_match(name, m, re)) {
            numbered.emplace(std::stoll(m[1].str()), entry.path());
        }
    }
    if (numbered.empty()) {
        throw IoError("no frames matched \"" + std::string(pattern) + "\" in " + directory.string());
    }

    long long expected = numbered.begin()->first;
    for (const auto& [n, path] : numbered) {
        if (n != expected) {
            throw IoError("missing frame index " + std::to_string(expected) + " in " + directory.string());
        }
        ++expected;
    }

    std::vector<RgbFrame> frames;
    frames.reserve(numbered.size());
    int index = 0;
    for (const auto& [n, path] : numbered) {
        frames.push_back(load_image(path, index++));
    }
    return frames;
}

GrayFrame to_grayscale(const RgbFrame& frame) {
    GrayFrame out(frame.width(), frame.height(), frame.index());
    auto src = frame.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double y = 0.299 * src[i].r + 0.587 * src[i].g + 0.114 * src[i].b;
        dst[i] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(y), 0, 255));
    }
    return out;
}

HsvPixel rgb_to_hsv(double r, double g, double b) {
    auto in_unit = [](double c) { return c >= 0.0 && c <= 1.0; };
    if (!in_unit(r) || !in_unit(g) || !in_unit(b)) {
        throw ContractError("rgb_to_hsv components must lie in [0,1]");
    }
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    HsvPixel hsv;
    hsv.v = mx;
    if (delta <= 0.0) {
        return hsv;
    }
    hsv.s = delta / mx;
    double sector = 0.0;
    if (mx == r) {
        sector = (g - b) / delta;
        if (sector < 0.0) sector += 6.0;
    } else if (mx == g) {
        sector = (b - r) / delta + 2.0;
    } else {
        sector = (r - g) / delta + 4.0;
    }
    hsv.h = sector / 6.0;
    if (hsv.h >= 1.0) hsv.h = 0.0;
    return hsv;
}

void write_png(const fs::path& file, const RgbFrame& frame) {
    std::vector<std::uint8_t> data;
    data.reserve(frame.pixels().size() * 3);
    for (const Rgb& p : frame.pixels()) {
        data.push_back(p.r);
        data.push_back(p.g);
        data.push_back(p.b);
    }
    write_png_rows(file, frame.width(), frame.height(), PNG_COLOR_TYPE_RGB, 3, data);
}

void write_png(const fs::path& file, const GrayFrame& frame) {
    write_png_rows(file, frame.width(), frame.height(), PNG_COLOR_TYPE_GRAY, 1, frame.pixels());
}

void write_ppm(const fs::path& file, const RgbFrame& frame) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    out << "P6\n" << frame.width() << ' ' << frame.height() << "\n255\n";
    for (const Rgb& p : frame.pixels()) {
        const char px[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
        out.write(px, 3);
    }
    if (!out) throw IoError("write failed: " + file.string());
}

void write_pgm(const fs::path& file, int width, int height, std::span<const std::uint8_t> gray) {
    if (gray.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ContractError("write_pgm: data length does not match dimensions");
    }
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
    if (!out) throw IoError("write failed: " + file.string());
}

RgbFrame crop(const RgbFrame& frame, const Box& box) {
    if (!box.inside(frame.width(), frame.height())) {
        throw ContractError("crop box outside frame");
    }
    RgbFrame out(box.w, box.h, frame.index());
    for (int y = 0; y < box.h; ++y) {
        for (int x = 0; x < box.w; ++x) {
            out.at(x, y) = frame.at(box.x + x, box.y + y);
        }
    }
    return out;
}

}  // namespace vidtext
