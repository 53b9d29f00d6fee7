#include "proxyworld/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace pw {

float sample_bilinear(const Image& img, double u, double v, int channel) {
    const int w = img.width;
    const int h = img.height;
    // wrap u into [0,1)
    u -= std::floor(u);
    const double fx = u * w - 0.5;
    const double fy = (1.0 - v) * h - 0.5;
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0;
    const double ty = fy - y0;
    const int xa = ((x0 % w) + w) % w;
    const int xb = (xa + 1) % w;
    const int ya = std::clamp(y0, 0, h - 1);
    const int yb = std::clamp(y0 + 1, 0, h - 1);
    const double top = img.at(xa, ya, channel) * (1.0 - tx) + img.at(xb, ya, channel) * tx;
    const double bot = img.at(xa, yb, channel) * (1.0 - tx) + img.at(xb, yb, channel) * tx;
    return static_cast<float>(top * (1.0 - ty) + bot * ty);
}

float sample_nearest(const Image& img, double u, double v, int channel) {
    const int w = img.width;
    const int h = img.height;
    u -= std::floor(u);
    int x = static_cast<int>(u * w);
    int y = static_cast<int>((1.0 - v) * h);
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return img.at(x, y, channel);
}

namespace {

int png_color_type(int channels) {
    switch (channels) {
        case 1: return PNG_COLOR_TYPE_GRAY;
        case 2: return PNG_COLOR_TYPE_GRAY_ALPHA;
        case 3: return PNG_COLOR_TYPE_RGB;
        case 4: return PNG_COLOR_TYPE_RGBA;
        default: throw BadImage("png: unsupported channel count");
    }
}

std::vector<uint8_t> pack_rows(const Image& img, int bit_depth) {
    const size_t stride = static_cast<size_t>(img.width) * img.channels * (bit_depth / 8);
    std::vector<uint8_t> out(stride * img.height);
    const float scale = bit_depth == 8 ? 255.0f : 65535.0f;
    size_t k = 0;
    for (float f : img.data) {
        const float c = std::clamp(f, 0.0f, 1.0f);
        const uint32_t q = static_cast<uint32_t>(std::lround(c * scale));
        if (bit_depth == 8) {
            out[k++] = static_cast<uint8_t>(q);
        } else {
            out[k++] = static_cast<uint8_t>(q >> 8);  // PNG is big-endian
            out[k++] = static_cast<uint8_t>(q & 0xff);
        }
    }
    return out;
}

struct PngWriteCtx {
    std::vector<uint8_t>* out;
};

void png_mem_write(png_structp png, png_bytep data, png_size_t len) {
    auto* ctx = static_cast<PngWriteCtx*>(png_get_io_ptr(png));
    ctx->out->insert(ctx->out->end(), data, data + len);
}

void png_mem_flush(png_structp) {}

struct PngReadCtx {
    const std::vector<uint8_t>* in;
    size_t pos;
};

void png_mem_read(png_structp png, png_bytep data, png_size_t len) {
    auto* ctx = static_cast<PngReadCtx*>(png_get_io_ptr(png));
    if (ctx->pos + len > ctx->in->size()) png_error(png, "read past end");
    std::memcpy(data, ctx->in->data() + ctx->pos, len);
    ctx->pos += len;
}

void encode_png_impl(const Image& img, int bit_depth, std::vector<uint8_t>& out) {
    if (img.empty()) throw BadImage("png: empty image");
    if (bit_depth != 8 && bit_depth != 16) throw BadImage("png: bit depth must be 8 or 16");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw BadImage("png: encode failed");
    }
    PngWriteCtx ctx{&out};
    png_set_write_fn(png, &ctx, png_mem_write, png_mem_flush);
    png_set_IHDR(png, info, img.width, img.height, bit_depth, png_color_type(img.channels),
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> rows = pack_rows(img, bit_depth);
    const size_t stride = static_cast<size_t>(img.width) * img.channels * (bit_depth / 8);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, rows.data() + stride * y);
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

Image decode_png_impl(const std::vector<uint8_t>& bytes) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw BadImage("png: decode failed");
    }
    PngReadCtx ctx{&bytes, 0};
    png_set_read_fn(png, &ctx, png_mem_read);
    png_read_info(png, info);

    const int width = png_get_image_width(png, info);
    const int height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    Image img(width, height, channels);
    const size_t stride = png_get_rowbytes(png, info);
    std::vector<uint8_t> row(stride);
    const float scale = bit_depth == 8 ? 1.0f / 255.0f : 1.0f / 65535.0f;
    for (int y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < channels; ++c) {
                uint32_t q;
                if (bit_depth == 8) {
                    q = row[static_cast<size_t>(x) * channels + c];
                } else {
                    const size_t k = (static_cast<size_t>(x) * channels + c) * 2;
                    q = (static_cast<uint32_t>(row[k]) << 8) | row[k + 1];
                }
                img.at(x, y, c) = q * scale;
            }
        }
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace

std::vector<uint8_t> encode_png(const Image& img, int bit_depth) {
    std::vector<uint8_t> out;
    encode_png_impl(img, bit_depth, out);
    return out;
}

Image decode_png(const std::vector<uint8_t>& bytes) { return decode_png_impl(bytes); }

void save_png(const std::string& path, const Image& img, int bit_depth) {
    std::vector<uint8_t> bytes = encode_png(img, bit_depth);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw BadImage("png: cannot open for write: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Image load_png(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw BadImage("png: cannot open: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

void save_raw_float(const std::string& base_path, const Image& img) {
    {
        std::ofstream f(base_path + ".f32", std::ios::binary);
        if (!f) throw BadImage("raw: cannot open for write: " + base_path);
        f.write(reinterpret_cast<const char*>(img.data.data()),
                static_cast<std::streamsize>(img.data.size() * sizeof(float)));
    }
    nlohmann::json header{{"width", img.width}, {"height", img.height}, {"channels", img.channels}};
    std::ofstream h(base_path + ".json");
    h << header.dump(2) << "\n";
}

Image load_raw_float(const std::string& base_path) {
    std::ifstream h(base_path + ".json");
    if (!h) throw BadImage("raw: missing header: " + base_path + ".json");
    nlohmann::json header = nlohmann::json::parse(h);
    Image img(header.at("width").get<int>(), header.at("height").get<int>(),
              header.at("channels").get<int>());
    std::ifstream f(base_path + ".f32", std::ios::binary);
    if (!f) throw BadImage("raw: missing data: " + base_path + ".f32");
    f.read(reinterpret_cast<char*>(img.data.data()),
           static_cast<std::streamsize>(img.data.size() * sizeof(float)));
    if (static_cast<size_t>(f.gcount()) != img.data.size() * sizeof(float))
        throw BadImage("raw: truncated data: " + base_path);
    return img;
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::vector<uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= bytes.size()) {
        const uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kB64[(n >> 18) & 63]);
        out.push_back(kB64[(n >> 12) & 63]);
        out.push_back(kB64[(n >> 6) & 63]);
        out.push_back(kB64[n & 63]);
        i += 3;
    }
    const size_t rem = bytes.size() - i;
    if (rem == 1) {
        const uint32_t n = bytes[i] << 16;
        out.push_back(kB64[(n >> 18) & 63]);
        out.push_back(kB64[(n >> 12) & 63]);
        out += "==";
    } else if (rem == 2) {
        const uint32_t n = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kB64[(n >> 18) & 63]);
        out.push_back(kB64[(n >> 12) & 63]);
        out.push_back(kB64[(n >> 6) & 63]);
        out += "=";
    }
    return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = value(c);
        if (v < 0) throw BadImage("base64: invalid character");
        acc = (acc << 6) | static_cast<uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<uint8_t>((acc >> bits) & 0xff));
        }
    }
    return out;
}

}  // namespace pw
