// Copyright (c) 2026 strokesynth contributors
// SPDX-License-Identifier: Apache-2.0

#include "strokesynth/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <png.h>

#include "strokesynth/errors.hpp"

namespace strokesynth {

namespace {

std::filesystem::path temp_sibling(const std::string& path) {
    return std::filesystem::path(path).concat(".tmp");
}

void rename_over(const std::filesystem::path& from, const std::string& to) {
    std::error_code ec;
    std::filesystem::rename(from, to, ec);
    if (ec) {
        std::filesystem::remove(from);
        throw IoError("cannot move temp file onto " + to + ": " + ec.message());
    }
}

std::uint8_t to_byte(float v) {
    const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

void append_float(std::ostringstream& os, float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", static_cast<double>(v));
    os << buf;
}

} // namespace

Tensor decode_png(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("no such file: " + path);
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
        const std::string message = image.message;
        png_image_free(&image);
        throw ParseError("cannot decode " + path + ": " + message);
    }
    if ((image.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
        png_image_free(&image);
        throw UnsupportedError("16-bit PNG is not supported: " + path);
    }
    image.format = PNG_FORMAT_RGBA;
    const std::int64_t w = image.width;
    const std::int64_t h = image.height;
    std::vector<std::uint8_t> rgba(static_cast<std::size_t>(PNG_IMAGE_SIZE(image)));
    if (png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr) == 0) {
        const std::string message = image.message;
        png_image_free(&image);
        throw ParseError("cannot decode " + path + ": " + message);
    }

    std::vector<float> out(static_cast<std::size_t>(3 * h * w));
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            const std::size_t px = static_cast<std::size_t>((y * w + x) * 4);
            const float a = static_cast<float>(rgba[px + 3]) / 255.0f;
            for (std::int64_t c = 0; c < 3; ++c) {
                const float v = static_cast<float>(rgba[px + static_cast<std::size_t>(c)]) / 255.0f;
                out[static_cast<std::size_t>(c * h * w + y * w + x)] = a * v + (1.0f - a);
            }
        }
    }
    return Tensor::from_data({3, h, w}, std::move(out));
}

void encode_png(const Tensor& img, const std::string& path) {
    if (img.shape().size() != 3 || img.shape()[0] != 3) {
        throw ShapeError("encode_png: expected a (3,H,W) tensor");
    }
    const std::int64_t h = img.shape()[1];
    const std::int64_t w = img.shape()[2];
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(3 * h * w));
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            for (std::int64_t c = 0; c < 3; ++c) {
                rgb[static_cast<std::size_t>((y * w + x) * 3 + c)] =
                    to_byte(img.values()[static_cast<std::size_t>(c * h * w + y * w + x)]);
            }
        }
    }

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = PNG_FORMAT_RGB;
    const auto tmp = temp_sibling(path);
    if (png_image_write_to_file(&image, tmp.c_str(), 0, rgb.data(), 0, nullptr) == 0) {
        const std::string message = image.message;
        png_image_free(&image);
        std::filesystem::remove(tmp);
        throw IoError("cannot write " + path + ": " + message);
    }
    rename_over(tmp, path);
}

std::string drawing_to_svg(const Drawing& d) {
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << d.width << "\" height=\""
       << d.height << "\" viewBox=\"0 0 " << d.width << " " << d.height << "\">\n";
    os << "<rect width=\"" << d.width << "\" height=\"" << d.height << "\" fill=\"rgb("
       << static_cast<int>(to_byte(d.background[0])) << ","
       << static_cast<int>(to_byte(d.background[1])) << ","
       << static_cast<int>(to_byte(d.background[2])) << ")\"/>\n";
    for (const Stroke& s : d.strokes) {
        os << "<path d=\"M ";
        append_float(os, s.control[0].x);
        os << ' ';
        append_float(os, s.control[0].y);
        os << " C";
        for (int j = 1; j < 4; ++j) {
            os << ' ';
            append_float(os, s.control[static_cast<std::size_t>(j)].x);
            os << ' ';
            append_float(os, s.control[static_cast<std::size_t>(j)].y);
        }
        os << "\" fill=\"none\" stroke=\"rgb(" << static_cast<int>(to_byte(s.color[0])) << ","
           << static_cast<int>(to_byte(s.color[1])) << "," << static_cast<int>(to_byte(s.color[2]))
           << ")\" stroke-opacity=\"";
        append_float(os, s.color[3]);
        os << "\" stroke-width=\"";
        append_float(os, 2.0f * s.radius);
        os << "\" stroke-linecap=\"round\" stroke-linejoin=\"round\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void export_svg(const Drawing& d, const std::string& path) {
    write_file_atomic(path, drawing_to_svg(d));
}

std::string history_to_csv(const std::vector<IterationRecord>& history) {
    std::ostringstream os;
    os << "iter,content,style,combined,phase\n";
    char buf[32];
    const auto cell = [&](float v) {
        if (std::isnan(v)) {
            os << "nan";
        } else {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
            os << buf;
        }
    };
    for (std::size_t i = 0; i < history.size(); ++i) {
        os << i << ',';
        cell(history[i].losses.content);
        os << ',';
        cell(history[i].losses.style);
        os << ',';
        cell(history[i].losses.combined);
        os << ',' << phase_name(history[i].phase) << '\n';
    }
    return os.str();
}

void export_history_csv(const std::vector<IterationRecord>& history, const std::string& path) {
    write_file_atomic(path, history_to_csv(history));
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const auto tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out.good()) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        out << contents;
        out.flush();
        if (!out.good()) {
            std::filesystem::remove(tmp);
            throw IoError("failed writing " + tmp.string());
        }
    }
    rename_over(tmp, path);
}

} // namespace strokesynth
