#include "regcd/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "regcd/errors.hpp"

namespace regcd {

namespace {

// ---- NetPBM (binary P5/P6) ----

// Skips whitespace and '#' comments between header tokens.
int next_pnm_token(std::istream& in, const std::string& path) {
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (!std::isspace(ch)) {
            break;
        }
        ch = in.get();
    }
    if (ch == EOF) throw DecodeError(path + ": truncated header");
    std::string token;
    while (ch != EOF && !std::isspace(ch)) {
        token.push_back(static_cast<char>(ch));
        ch = in.get();
    }
    try {
        std::size_t used = 0;
        const int value = std::stoi(token, &used);
        if (used != token.size() || value < 0) throw std::invalid_argument(token);
        return value;
    } catch (const std::exception&) {
        throw DecodeError(path + ": malformed header token '" + token + "'");
    }
}

Raster load_pnm(std::ifstream& in, const std::string& path, int channels) {
    const int width = next_pnm_token(in, path);
    const int height = next_pnm_token(in, path);
    const int maxval = next_pnm_token(in, path);
    if (width < 1 || height < 1)
        throw DecodeError(path + ": non-positive dimensions " + std::to_string(width) + "x" +
                          std::to_string(height));
    if (maxval != 255)
        throw DecodeError(path + ": unsupported maxval " + std::to_string(maxval) +
                          " (only 255 supported)");
    Raster img(width, height, channels);
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.data.size())
        throw DecodeError(path + ": truncated pixel data (" + std::to_string(in.gcount()) +
                          " of " + std::to_string(img.data.size()) + " bytes)");
    return img;
}

// ---- PNG via libpng ----

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Raster load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw DecodeError(path + ": cannot open file");

    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw DecodeError(path + ": libpng init failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw DecodeError(path + ": libpng init failed");
    if (setjmp(png_jmpbuf(r.png))) throw DecodeError(path + ": corrupt PNG stream");

    png_init_io(r.png, fp.get());
    png_read_info(r.png, r.info);

    const int bit_depth = png_get_bit_depth(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);
    if (bit_depth == 16)
        throw DecodeError(path + ": unsupported bit depth 16 (only 8-bit supported)");
    // Normalize everything 8-bit-representable down to gray8 or rgb8.
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
    png_read_update_info(r.png, r.info);

    const png_uint_32 width = png_get_image_width(r.png, r.info);
    const png_uint_32 height = png_get_image_height(r.png, r.info);
    const int out_channels = png_get_channels(r.png, r.info);
    if (out_channels != 1 && out_channels != 3)
        throw DecodeError(path + ": unsupported channel count " + std::to_string(out_channels));

    Raster img(static_cast<int>(width), static_cast<int>(height), out_channels);
    std::vector<png_bytep> rows(height);
    const std::size_t stride = static_cast<std::size_t>(width) * out_channels;
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = img.data.data() + y * stride;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
    return img;
}

} // namespace

Raster load_raster(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError(path + ": cannot open file");
    unsigned char magic[8] = {};
    in.read(reinterpret_cast<char*>(magic), 8);
    const std::streamsize got = in.gcount();

    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (got >= 8 && std::memcmp(magic, png_sig, 8) == 0) {
        in.close();
        return load_png(path);
    }
    if (got >= 2 && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) {
        in.clear();
        in.seekg(2);
        return load_pnm(in, path, magic[1] == '5' ? 1 : 3);
    }
    throw DecodeError(path + ": unrecognized format (expected PNG or binary NetPBM P5/P6)");
}

void save_png(const Raster& img, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw DecodeError(path + ": cannot open file for writing");

    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw DecodeError(path + ": libpng init failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw DecodeError(path + ": libpng init failed");
    if (setjmp(png_jmpbuf(w.png))) throw DecodeError(path + ": PNG write failed");

    png_init_io(w.png, fp.get());
    png_set_IHDR(w.png, w.info, img.width, img.height, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);

    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.data.data() + y * stride);
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

void save_pnm(const Raster& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DecodeError(path + ": cannot open file for writing");
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw DecodeError(path + ": write failed");
}

} // namespace regcd
