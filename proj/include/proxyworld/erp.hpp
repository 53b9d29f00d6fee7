#pragma once

#include <stdexcept>
#include <vector>

#include "proxyworld/geometry.hpp"
#include "proxyworld/image.hpp"

namespace pw::erp {

struct ZeroVector : std::runtime_error {
    ZeroVector() : std::runtime_error("direction vector has near-zero length") {}
};
struct BadTiling : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CoverageGap : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Camera frame: -z forward, +x right, +y up.
//   u = atan2(x, -z) / 2pi + 1/2   (wrapped into [0,1))
//   v = asin(y / |p|) / pi + 1/2   (0 = nadir, 1 = zenith)
Vec2 dir_to_uv(Vec3 dir);
Vec3 uv_to_dir(Vec2 uv);

// uv of the pixel center; row 0 is the top of the raster (zenith side).
inline Vec2 pixel_center_uv(int x, int y, int width, int height) {
    return {(x + 0.5) / width, 1.0 - (y + 0.5) / height};
}

struct Tile {
    int x_origin = 0;  // wrapped modulo source width
    Image patch;
};

struct TileSet {
    int tile_size = 0;
    int overlap = 0;
    int source_width = 0;
    int source_height = 0;
    std::vector<Tile> tiles;
};

// Splits into vertically-full tiles every stride = tile_size - overlap
// columns; the last tile wraps past column width-1 back to 0 (circular
// padding), so every column is covered and the seam is inside a tile.
TileSet tile_split(const Image& img, int tile_size, int overlap);

// Folds tiles back with linear-ramp weights over shared columns. The ramps
// partition unity, and blending is computed as a + t*(b - a), so unmodified
// tiles reconstruct the source bit-exactly.
Image tile_merge(const TileSet& tiles, int width, int height);

enum class Face { PosX, NegX, PosY, NegY, PosZ, NegZ };

struct CubemapFace {
    Face id = Face::NegZ;
    int resolution = 0;
    Image data;
};

// Direction through texel (i,j) of a face, OpenGL cubemap orientation.
Vec3 face_texel_dir(Face face, double i, double j, int resolution);

// Each texel bilinearly sampled from the ERP along the face direction.
// The NegY face is the bottom area handed to the repaint backend.
CubemapFace to_cubemap_face(const Image& img, Face face, int resolution);

}  // namespace pw::erp
