#include "cevr/io.hpp"

#include <png.h>
// jpeglib.h expects FILE and size_t to be declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cevr/error.hpp"

namespace cevr {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return ext;
}

LdrImage from_interleaved(const std::vector<std::uint8_t>& bytes, int height, int width) {
    Image img(height, width, 3);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = bytes[i + c] / 255.0;
        }
    }
    return LdrImage(std::move(img));
}

LdrImage load_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        fail(ErrorKind::UnsupportedFormat,
             "cannot decode PNG " + path.string() + ": " + image.message);
    }
    const bool linear = (image.format & PNG_FORMAT_FLAG_LINEAR) != 0;
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    if (linear || !color || alpha) {
        png_image_free(&image);
        fail(ErrorKind::UnsupportedFormat,
             path.string() + ": expected 8-bit RGB PNG (" +
                 (linear ? "16-bit" : (!color ? "grayscale" : "has alpha")) + ")");
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(ErrorKind::IoFailure, "failed reading " + path.string() + ": " + msg);
    }
    return from_interleaved(bytes, static_cast<int>(image.height), static_cast<int>(image.width));
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

LdrImage load_jpeg(const std::filesystem::path& path) {
    std::FILE* file = std::fopen(path.c_str(), "rb");
    if (!file) fail(ErrorKind::IoFailure, "cannot open " + path.string());

    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    std::vector<std::uint8_t> bytes;
    int height = 0, width = 0;
    std::string problem;
    if (setjmp(err.jump)) {
        problem = err.message;
    } else {
        jpeg_create_decompress(&cinfo);
        jpeg_stdio_src(&cinfo, file);
        jpeg_read_header(&cinfo, TRUE);
        if (cinfo.num_components != 3 || cinfo.data_precision != 8) {
            problem = "expected 8-bit 3-channel JPEG";
        } else {
            cinfo.out_color_space = JCS_RGB;
            jpeg_start_decompress(&cinfo);
            height = static_cast<int>(cinfo.output_height);
            width = static_cast<int>(cinfo.output_width);
            bytes.resize(static_cast<std::size_t>(height) * width * 3);
            while (cinfo.output_scanline < cinfo.output_height) {
                JSAMPROW row = bytes.data() +
                               static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
                jpeg_read_scanlines(&cinfo, &row, 1);
            }
            jpeg_finish_decompress(&cinfo);
        }
    }
    jpeg_destroy_decompress(&cinfo);
    std::fclose(file);
    if (!problem.empty()) fail(ErrorKind::UnsupportedFormat, path.string() + ": " + problem);
    return from_interleaved(bytes, height, width);
}

}  // namespace

LdrImage load_ldr(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        fail(ErrorKind::FileNotFound, "no such image file: " + path.string());
    }
    const std::string ext = lower_extension(path);
    if (ext == ".png") return load_png(path);
    if (ext == ".jpg" || ext == ".jpeg") return load_jpeg(path);
    fail(ErrorKind::UnsupportedFormat, "unsupported image extension: " + path.string());
}

std::uint8_t quantize_level(double v) {
    const double scaled = std::floor(v * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

void save_ldr(const LdrImage& image, const std::filesystem::path& path) {
    require(lower_extension(path) == ".png", ErrorKind::UnsupportedFormat,
            "LDR output must be .png: " + path.string());
    const int h = image.height(), w = image.width();
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
            for (int c = 0; c < 3; ++c) bytes[i + c] = quantize_level(image.at(c, y, x));
        }
    }
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(w);
    png.height = static_cast<png_uint_32>(h);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
        const std::string msg = png.message;
        png_image_free(&png);
        fail(ErrorKind::IoFailure, "cannot write " + path.string() + ": " + msg);
    }
}

Rgbe rgbe_encode(double r, double g, double b) {
    const double v = std::max({r, g, b});
    if (v < 1e-32) return {0, 0, 0, 0};
    int exponent = 0;
    const double mantissa = std::frexp(v, &exponent);
    const double scale = mantissa * 256.0 / v;
    auto byte = [&](double c) {
        return static_cast<std::uint8_t>(std::clamp(c * scale, 0.0, 255.0));
    };
    return {byte(r), byte(g), byte(b), static_cast<std::uint8_t>(exponent + 128)};
}

std::array<double, 3> rgbe_decode(const Rgbe& px) {
    if (px[3] == 0) return {0.0, 0.0, 0.0};
    const double f = std::ldexp(1.0, static_cast<int>(px[3]) - (128 + 8));
    return {(px[0] + 0.5) * f, (px[1] + 0.5) * f, (px[2] + 0.5) * f};
}

void write_radiance_rgbe(const RadianceMap& radiance, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoFailure, "cannot write " + path.string());
    const int h = radiance.height(), w = radiance.width();
    out << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << h << " +X " << w << "\n";
    std::vector<char> row(static_cast<std::size_t>(w) * 4);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Rgbe px =
                rgbe_encode(radiance.at(0, y, x), radiance.at(1, y, x), radiance.at(2, y, x));
            std::memcpy(&row[static_cast<std::size_t>(x) * 4], px.data(), 4);
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    if (!out) fail(ErrorKind::IoFailure, "failed writing " + path.string());
}

RadianceMap read_radiance_rgbe(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::FileNotFound, "no such HDR file: " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("#?", 0) != 0) fail(ErrorKind::UnsupportedFormat, path.string() + ": not RGBE");
    bool format_ok = false;
    while (std::getline(in, line) && !line.empty()) {
        if (line == "FORMAT=32-bit_rle_rgbe") format_ok = true;
    }
    require(format_ok, ErrorKind::UnsupportedFormat, path.string() + ": missing RGBE FORMAT line");
    std::getline(in, line);
    std::istringstream res(line);
    std::string ytag, xtag;
    int h = 0, w = 0;
    res >> ytag >> h >> xtag >> w;
    require(ytag == "-Y" && xtag == "+X" && h > 0 && w > 0, ErrorKind::UnsupportedFormat,
            path.string() + ": unsupported resolution line '" + line + "'");

    const double floor_value = std::ldexp(0.5, -135);
    Image img(h, w, 3);
    std::vector<std::uint8_t> scan(static_cast<std::size_t>(w) * 4);
    auto get = [&]() {
        const int ch = in.get();
        if (ch == EOF) fail(ErrorKind::IoFailure, path.string() + ": truncated RGBE data");
        return static_cast<std::uint8_t>(ch);
    };
    for (int y = 0; y < h; ++y) {
        std::array<std::uint8_t, 4> head{get(), get(), get(), get()};
        const bool rle = w >= 8 && w < 32768 && head[0] == 2 && head[1] == 2 &&
                         (head[2] & 0x80) == 0 && ((head[2] << 8) | head[3]) == w;
        if (rle) {
            for (int c = 0; c < 4; ++c) {
                int x = 0;
                while (x < w) {
                    int count = get();
                    if (count > 128) {
                        count -= 128;
                        const std::uint8_t value = get();
                        require(x + count <= w, ErrorKind::UnsupportedFormat, "bad RLE run");
                        for (int k = 0; k < count; ++k) scan[(x++) * 4 + c] = value;
                    } else {
                        require(count > 0 && x + count <= w, ErrorKind::UnsupportedFormat,
                                "bad RLE dump");
                        for (int k = 0; k < count; ++k) scan[(x++) * 4 + c] = get();
                    }
                }
            }
        } else {
            std::copy(head.begin(), head.end(), scan.begin());
            for (std::size_t i = 4; i < scan.size(); ++i) scan[i] = get();
        }
        for (int x = 0; x < w; ++x) {
            const Rgbe px{scan[x * 4], scan[x * 4 + 1], scan[x * 4 + 2], scan[x * 4 + 3]};
            const auto rgb = rgbe_decode(px);
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = std::max(rgb[c], floor_value);
        }
    }
    return RadianceMap(std::move(img));
}

}  // namespace cevr
