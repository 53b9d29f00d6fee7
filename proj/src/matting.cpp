#include "proxyworld/matting.hpp"

#include <algorithm>
#include <cmath>

#include "proxyworld/erp.hpp"
#include "proxyworld/imageops.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pw::gen {

Trimap build_trimap(const Image& mask, int dilate_px, int erode_px) {
    if (dilate_px < 0 || erode_px < 0) throw BadRequest("trimap radii must be >= 0");
    const Image fg = erode(mask, erode_px);
    const Image grown = dilate(mask, dilate_px);
    Trimap out;
    out.labels = Image(mask.width, mask.height, 1);
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            if (fg.at(x, y, 0) > 0.5f) out.labels.at(x, y, 0) = 1.0f;
            else if (grown.at(x, y, 0) > 0.5f) out.labels.at(x, y, 0) = 0.5f;
            else out.labels.at(x, y, 0) = 0.0f;
        }
    }
    return out;
}

ErpImage matte_terrain(Backend& backend, const ErpImage& pano, const Trimap& trimap,
                       int tile_size, int overlap) {
    if (trimap.labels.width != pano.width || trimap.labels.height != pano.height)
        throw DimMismatch("matte: trimap dims disagree with panorama");

    const erp::TileSet pano_tiles = erp::tile_split(pano, tile_size, overlap);
    const erp::TileSet tri_tiles = erp::tile_split(trimap.labels, tile_size, overlap);

    // Tile borders lack context, so each matte tile is trimmed before merging
    // and only the trusted center of the shared run is blended.
    const int blend = std::min(8, overlap);
    const int trim = (overlap - blend) / 2;

    erp::TileSet alpha_tiles;
    alpha_tiles.tile_size = tile_size - 2 * trim;
    alpha_tiles.overlap = blend;
    alpha_tiles.source_width = pano.width;
    alpha_tiles.source_height = pano.height;
    alpha_tiles.tiles.resize(pano_tiles.tiles.size());

    const int n = static_cast<int>(pano_tiles.tiles.size());
    std::exception_ptr tile_error;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < n; ++i) {
        try {
            GenRequest req;
            req.kind = Kind::matte;
            req.condition_image = &pano_tiles.tiles[i].patch;
            req.condition_mask = &tri_tiles.tiles[i].patch;
            req.seed = 0;
            req.width = tile_size;
            req.height = pano.height;
            Image alpha = backend.generate(req);
            if (alpha.width != tile_size || alpha.height != pano.height || alpha.channels != 1)
                throw BackendMalformedReply("matte tile returned wrong dimensions");
            Image trimmed(tile_size - 2 * trim, pano.height, 1);
            for (int y = 0; y < trimmed.height; ++y)
                for (int x = 0; x < trimmed.width; ++x)
                    trimmed.at(x, y, 0) = alpha.at(x + trim, y, 0);
            alpha_tiles.tiles[i].x_origin =
                (pano_tiles.tiles[i].x_origin + trim) % pano.width;
            alpha_tiles.tiles[i].patch = std::move(trimmed);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            if (!tile_error) tile_error = std::current_exception();
        }
    }
    if (tile_error) std::rethrow_exception(tile_error);

    Image merged = erp::tile_merge(alpha_tiles, pano.width, pano.height);
    // contract boundary: fg stays 1 and bg stays 0 for every backend
    for (int y = 0; y < merged.height; ++y) {
        for (int x = 0; x < merged.width; ++x) {
            const float label = trimap.labels.at(x, y, 0);
            if (label > 0.75f) merged.at(x, y, 0) = 1.0f;
            else if (label < 0.25f) merged.at(x, y, 0) = 0.0f;
            else merged.at(x, y, 0) = std::clamp(merged.at(x, y, 0), 0.0f, 1.0f);
        }
    }
    return ErpImage(std::move(merged));
}

RgbaTexture make_rgba(const Image& rgb, const Image& alpha) {
    if (rgb.width != alpha.width || rgb.height != alpha.height)
        throw DimMismatch("make_rgba: dims disagree");
    RgbaTexture out;
    out.rgba = Image(rgb.width, rgb.height, 4);
    for (int y = 0; y < rgb.height; ++y) {
        for (int x = 0; x < rgb.width; ++x) {
            for (int c = 0; c < 3; ++c)
                out.rgba.at(x, y, c) = rgb.at(x, y, std::min(c, rgb.channels - 1));
            out.rgba.at(x, y, 3) = std::clamp(alpha.at(x, y, 0), 0.0f, 1.0f);
        }
    }
    return out;
}

Image composite_over(const RgbaTexture& fg, const Image& bg, const Image& mask) {
    if (fg.width() != bg.width || fg.height() != bg.height || mask.width != bg.width ||
        mask.height != bg.height)
        throw DimMismatch("composite_over: dims disagree");
    Image out(bg.width, bg.height, 3);
    for (int y = 0; y < bg.height; ++y) {
        for (int x = 0; x < bg.width; ++x) {
            const float m = mask.at(x, y, 0);
            for (int c = 0; c < 3; ++c) {
                const float f = fg.rgba.at(x, y, c);
                const float b = bg.at(x, y, std::min(c, bg.channels - 1));
                out.at(x, y, c) = m * f + (1.0f - m) * b;
            }
        }
    }
    return out;
}

RgbaTexture synthesize_asset_rgba(Backend& backend, const std::string& prompt,
                                  const Image& background_ref,
                                  const std::optional<Image>& template_alpha, uint64_t seed,
                                  int refine_margin) {
    if (background_ref.empty()) throw BadRequest("synthesize_asset_rgba: background required");
    const int w = background_ref.width;
    const int h = background_ref.height;

    // stage 1: alpha sketch M_c, skipped when the template supplies one
    Image mask_mc;
    if (template_alpha) {
        mask_mc = extract_channel(*template_alpha, template_alpha->channels - 1);
    } else {
        GenRequest req;
        req.kind = Kind::asset_alpha;
        req.prompt = prompt;
        req.seed = seed;
        req.width = w;
        req.height = h;
        mask_mc = backend.generate(req);
        if (mask_mc.width != w || mask_mc.height != h || mask_mc.channels != 1)
            throw BackendMalformedReply("asset_alpha returned wrong dimensions");
    }
    bool any = false;
    for (float v : mask_mc.data)
        if (v > 0.0f) { any = true; break; }
    if (!any) throw MissingAlpha();

    // stage 2: inject the background into an empty canvas guided by M_c
    RgbaTexture empty;
    empty.rgba = Image(w, h, 4, 0.0f);
    const Image canvas = composite_over(empty, background_ref, mask_mc);

    // stage 3: texture synthesis on the canvas
    GenRequest tex_req;
    tex_req.kind = Kind::asset_texture;
    tex_req.prompt = prompt;
    tex_req.condition_image = &canvas;
    tex_req.condition_mask = &mask_mc;
    tex_req.seed = seed;
    tex_req.width = w;
    tex_req.height = h;
    const Image texture = backend.generate(tex_req);
    if (texture.width != w || texture.height != h || texture.channels != 3)
        throw BackendMalformedReply("asset_texture returned wrong dimensions");

    // stage 4: alpha refinement
    GenRequest ref_req;
    ref_req.kind = Kind::asset_refine;
    ref_req.prompt = prompt;
    ref_req.condition_image = &texture;
    ref_req.condition_mask = &mask_mc;
    ref_req.seed = seed;
    ref_req.width = w;
    ref_req.height = h;
    Image refined = backend.generate(ref_req);
    if (refined.width != w || refined.height != h || refined.channels != 1)
        throw BackendMalformedReply("asset_refine returned wrong dimensions");

    // refinement may move the boundary, but never past the dilated sketch
    Image mc_bin(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            mc_bin.at(x, y, 0) = mask_mc.at(x, y, 0) > 0.0f ? 1.0f : 0.0f;
    const Image support = dilate(mc_bin, refine_margin);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (support.at(x, y, 0) < 0.5f) refined.at(x, y, 0) = 0.0f;

    return make_rgba(texture, refined);
}

}  // namespace pw::gen
