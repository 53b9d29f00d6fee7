#pragma once

#include <optional>

#include "proxyworld/genbridge.hpp"
#include "proxyworld/image.hpp"

namespace pw::gen {

// Three-label raster: fg=1, unknown=0.5, bg=0. Exactly those values.
struct Trimap {
    Image labels;
};

// fg = erode(mask), bg = complement of dilate(mask), unknown = the band in
// between. Morphology wraps horizontally (panoramic masks).
Trimap build_trimap(const Image& mask, int dilate_px, int erode_px);

// Tile-based matting: tiles fan out to the backend's matte kind and merge
// with partition-of-unity blending. Output alpha is pinned to 1 on fg labels
// and 0 on bg labels regardless of backend behavior.
ErpImage matte_terrain(Backend& backend, const ErpImage& pano, const Trimap& trimap,
                       int tile_size, int overlap);

// Straight-alpha RGBA texture; premultiplication is never stored.
struct RgbaTexture {
    Image rgba;  // 4 channels

    int width() const { return rgba.width; }
    int height() const { return rgba.height; }
};

RgbaTexture make_rgba(const Image& rgb, const Image& alpha);

// out = mask*fg.rgb + (1-mask)*bg, per pixel.
Image composite_over(const RgbaTexture& fg, const Image& bg, const Image& mask);

// Staged context-aware synthesis: alpha sketch (or the template's alpha),
// background injection into an empty canvas, texture generation, then alpha
// refinement. Final alpha support is clipped to dilate(M_c, refine_margin).
RgbaTexture synthesize_asset_rgba(Backend& backend, const std::string& prompt,
                                  const Image& background_ref,
                                  const std::optional<Image>& template_alpha, uint64_t seed,
                                  int refine_margin = 4);

}  // namespace pw::gen
