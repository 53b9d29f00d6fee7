#include "proxyworld/erp.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pw::erp {

Vec2 dir_to_uv(Vec3 dir) {
    const double len = length(dir);
    if (len < 1e-9) throw ZeroVector();
    const double y = std::clamp(dir.y / len, -1.0, 1.0);
    double u = std::atan2(dir.x, -dir.z) / kTwoPi + 0.5;
    const double v = std::asin(y) / kPi + 0.5;
    u -= std::floor(u);
    if (u >= 1.0) u = 0.0;  // guard against 1.0 after rounding
    return {u, v};
}

Vec3 uv_to_dir(Vec2 uv) {
    const double azimuth = (uv.x - 0.5) * kTwoPi;
    const double elevation = (uv.y - 0.5) * kPi;
    const double ch = std::cos(elevation);
    return {std::sin(azimuth) * ch, std::sin(elevation), -std::cos(azimuth) * ch};
}

TileSet tile_split(const Image& img, int tile_size, int overlap) {
    if (tile_size <= 0 || tile_size > img.width)
        throw BadTiling("tile_size must be in [1, width]");
    if (overlap < 0 || overlap >= tile_size)
        throw BadTiling("overlap must be in [0, tile_size)");
    const int stride = tile_size - overlap;
    if (stride <= 0) throw BadTiling("stride must be positive");

    TileSet set;
    set.tile_size = tile_size;
    set.overlap = overlap;
    set.source_width = img.width;
    set.source_height = img.height;

    const int count = (img.width + stride - 1) / stride;
    set.tiles.reserve(count);
    for (int i = 0; i < count; ++i) {
        Tile tile;
        tile.x_origin = i * stride;
        tile.patch = Image(tile_size, img.height, img.channels);
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < tile_size; ++x) {
                const int sx = (tile.x_origin + x) % img.width;
                for (int c = 0; c < img.channels; ++c)
                    tile.patch.at(x, y, c) = img.at(sx, y, c);
            }
        }
        set.tiles.push_back(std::move(tile));
    }
    return set;
}

Image tile_merge(const TileSet& set, int width, int height) {
    if (set.tiles.empty()) throw CoverageGap("no tiles");
    const int channels = set.tiles.front().patch.channels;
    for (const Tile& t : set.tiles)
        if (t.patch.height != height || t.patch.channels != channels)
            throw CoverageGap("inconsistent tile dimensions");

    Image out(width, height, channels);
    std::vector<uint8_t> covered(static_cast<size_t>(width), 0);

    const size_t n = set.tiles.size();
    for (size_t i = 0; i < n; ++i) {
        const Tile& tile = set.tiles[i];
        const int tw = tile.patch.width;
        for (int x = 0; x < tw; ++x) {
            const int gx = (tile.x_origin + x) % width;
            // Weight of the incoming tile at this column. Fresh columns are
            // written directly; columns already holding data are folded with a
            // ramp that rises across the shared run, so consecutive ramps sum
            // to one.
            double t = 1.0;
            bool blend = false;
            if (covered[gx]) {
                blend = true;
                if (i + 1 < n || gx >= tile.x_origin) {
                    // left-edge overlap with the previous tile
                    t = (x + 1.0) / (set.overlap + 1.0);
                } else {
                    // wrapped run of the final tile: fade it out toward the
                    // columns the first tile owns
                    const int wrap_len = tile.x_origin + tw - width;
                    t = 1.0 - (gx + 1.0) / (wrap_len + 1.0);
                }
                t = std::clamp(t, 0.0, 1.0);
            }
            for (int y = 0; y < height; ++y) {
                for (int c = 0; c < channels; ++c) {
                    const float incoming = tile.patch.at(x, y, c);
                    if (!blend) {
                        out.at(gx, y, c) = incoming;
                    } else {
                        float& acc = out.at(gx, y, c);
                        acc = static_cast<float>(acc + t * (incoming - acc));
                    }
                }
            }
            covered[gx] = 1;
        }
    }
    for (int x = 0; x < width; ++x)
        if (!covered[x]) throw CoverageGap("column " + std::to_string(x) + " uncovered");
    return out;
}

Vec3 face_texel_dir(Face face, double i, double j, int resolution) {
    const double s = 2.0 * (i + 0.5) / resolution - 1.0;
    const double t = 2.0 * (j + 0.5) / resolution - 1.0;
    switch (face) {
        case Face::PosX: return normalized({1.0, -t, -s});
        case Face::NegX: return normalized({-1.0, -t, s});
        case Face::PosY: return normalized({s, 1.0, t});
        case Face::NegY: return normalized({s, -1.0, -t});
        case Face::PosZ: return normalized({s, -t, 1.0});
        case Face::NegZ: return normalized({-s, -t, -1.0});
    }
    return {0, 0, -1};
}

CubemapFace to_cubemap_face(const Image& img, Face face, int resolution) {
    if (resolution <= 0) throw BadTiling("cubemap resolution must be positive");
    CubemapFace out;
    out.id = face;
    out.resolution = resolution;
    out.data = Image(resolution, resolution, img.channels);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int j = 0; j < resolution; ++j) {
        for (int i = 0; i < resolution; ++i) {
            const Vec2 uv = dir_to_uv(face_texel_dir(face, i, j, resolution));
            for (int c = 0; c < img.channels; ++c)
                out.data.at(i, j, c) = sample_bilinear(img, uv.x, uv.y, c);
        }
    }
    return out;
}

}  // namespace pw::erp
