#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pw {

// All-float raster, row-major interleaved channels. Color and alpha live in
// [0,1]; depth carries meters.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {}

    float& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    bool empty() const { return data.empty(); }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

// Depth sentinel for sky pixels. Encoded as a finite reserved value so
// polynomial fitting never sees NaN/inf.
constexpr float kSkyDepth = 1e9f;
inline bool is_sky(float d) { return d >= kSkyDepth; }

struct BadImage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Equirectangular raster: width must be exactly 2x height, 1..4 channels.
struct ErpImage : Image {
    ErpImage() = default;
    ErpImage(int w, int h, int c, float fill = 0.0f) : Image(w, h, c, fill) { validate(); }
    explicit ErpImage(Image img) : Image(std::move(img)) { validate(); }

    void validate() const {
        if (width != 2 * height)
            throw BadImage("ErpImage: width must be 2x height, got " +
                           std::to_string(width) + "x" + std::to_string(height));
        if (channels < 1 || channels > 4)
            throw BadImage("ErpImage: channels must be 1..4");
        if (data.size() != static_cast<size_t>(width) * height * channels)
            throw BadImage("ErpImage: data size mismatch");
    }
};

// Bilinear sample with horizontal wrap and vertical clamp (texture repeat
// warping mode along u). u,v in [0,1); v=0 is the bottom row of the sphere
// (nadir), i.e. row height-1 of the raster.
float sample_bilinear(const Image& img, double u, double v, int channel);
float sample_nearest(const Image& img, double u, double v, int channel);

// PNG I/O via libpng. bit_depth 8 or 16; values clamped to [0,1].
void save_png(const std::string& path, const Image& img, int bit_depth = 8);
Image load_png(const std::string& path);

// Raw little-endian float32 dump with a JSON sidecar header
// {width,height,channels}; the interchange format for depth maps.
void save_raw_float(const std::string& base_path, const Image& img);
Image load_raw_float(const std::string& base_path);

// In-memory PNG for the HTTP backend protocol.
std::vector<uint8_t> encode_png(const Image& img, int bit_depth = 8);
Image decode_png(const std::vector<uint8_t>& bytes);

std::string base64_encode(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> base64_decode(const std::string& text);

}  // namespace pw
