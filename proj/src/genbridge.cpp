#include "proxyworld/genbridge.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "httplib.h"
#include "json.hpp"
#include "proxyworld/geometry.hpp"
#include "proxyworld/imageops.hpp"

namespace pw::gen {

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::panorama: return "panorama";
        case Kind::outpaint: return "outpaint";
        case Kind::asset_alpha: return "asset_alpha";
        case Kind::asset_texture: return "asset_texture";
        case Kind::asset_refine: return "asset_refine";
        case Kind::repaint_tile: return "repaint_tile";
        case Kind::upscale: return "upscale";
        case Kind::matte: return "matte";
    }
    return "unknown";
}

Kind kind_from_name(const std::string& name) {
    for (Kind k : {Kind::panorama, Kind::outpaint, Kind::asset_alpha, Kind::asset_texture,
                   Kind::asset_refine, Kind::repaint_tile, Kind::upscale, Kind::matte})
        if (name == kind_name(k)) return k;
    throw BadRequest("unknown request kind: " + name);
}

void validate_request(const GenRequest& req) {
    auto need = [&](const Image* img, const char* what) {
        if (!img || img->empty())
            throw BadRequest(std::string(kind_name(req.kind)) + " requires " + what);
    };
    switch (req.kind) {
        case Kind::panorama: need(req.condition_depth, "condition_depth"); break;
        case Kind::outpaint:
            need(req.condition_image, "condition_image");
            need(req.condition_mask, "condition_mask");
            break;
        case Kind::asset_alpha: break;
        case Kind::asset_texture:
            need(req.condition_image, "condition_image");
            need(req.condition_mask, "condition_mask");
            break;
        case Kind::asset_refine:
            need(req.condition_image, "condition_image");
            need(req.condition_mask, "condition_mask");
            break;
        case Kind::repaint_tile: need(req.condition_image, "condition_image"); break;
        case Kind::upscale: need(req.condition_image, "condition_image"); break;
        case Kind::matte:
            need(req.condition_image, "condition_image");
            need(req.condition_mask, "condition_mask");
            break;
    }
    if (req.width <= 0 || req.height <= 0) throw BadRequest("request dims must be positive");
}

Image Backend::generate(const GenRequest& req) {
    validate_request(req);
    {
        std::lock_guard<std::mutex> lock(log_mutex_);
        log_.push_back(req.kind);
    }
    return run(req);
}

std::vector<Kind> Backend::call_log() const {
    std::lock_guard<std::mutex> lock(log_mutex_);
    return log_;
}

void Backend::clear_log() {
    std::lock_guard<std::mutex> lock(log_mutex_);
    log_.clear();
}

namespace {

uint64_t prompt_hash(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Tileable value noise, smoothstep-interpolated lattice of hashed values.
double value_noise(uint64_t seed, double x, double y, int period) {
    const auto fade = [](double t) { return t * t * (3.0 - 2.0 * t); };
    const double fx = x * period;
    const double fy = y * period;
    const int ix = static_cast<int>(std::floor(fx));
    const int iy = static_cast<int>(std::floor(fy));
    const double tx = fade(fx - ix);
    const double ty = fade(fy - iy);
    auto lattice = [&](int gx, int gy) {
        return hash_unit(seed, ((gx % period) + period) % period, ((gy % period) + period) % period);
    };
    const double a = lattice(ix, iy);
    const double b = lattice(ix + 1, iy);
    const double c = lattice(ix, iy + 1);
    const double d = lattice(ix + 1, iy + 1);
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

struct Palette {
    float r, g, b;
};

Palette palette_from_hash(uint64_t h) {
    return {0.25f + 0.5f * static_cast<float>((h & 0xff) / 255.0),
            0.25f + 0.5f * static_cast<float>(((h >> 8) & 0xff) / 255.0),
            0.25f + 0.5f * static_cast<float>(((h >> 16) & 0xff) / 255.0)};
}

Image stub_panorama(const GenRequest& req) {
    const Image& depth = *req.condition_depth;
    Image out(req.width, req.height, 3);
    const uint64_t noise_seed = hash_combine(req.seed, prompt_hash(req.prompt));
    // depth band shading: near ground warm, far cool, sky bright
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const double u = (x + 0.5) / out.width;
            const double v = (y + 0.5) / out.height;
            const float d = depth.at(std::min(x * depth.width / out.width, depth.width - 1),
                                     std::min(y * depth.height / out.height, depth.height - 1), 0);
            const double n = value_noise(noise_seed, u, v, 16);
            float r, g, b;
            if (is_sky(d)) {
                r = 0.45f;
                g = 0.62f;
                b = 0.85f;
            } else if (d < 10.0f) {
                r = 0.35f;
                g = 0.30f;
                b = 0.20f;
            } else if (d < 50.0f) {
                r = 0.25f;
                g = 0.38f;
                b = 0.18f;
            } else {
                r = 0.35f;
                g = 0.40f;
                b = 0.45f;
            }
            const float shade = static_cast<float>(0.7 + 0.3 * n);
            out.at(x, y, 0) = std::clamp(r * shade, 0.0f, 1.0f);
            out.at(x, y, 1) = std::clamp(g * shade, 0.0f, 1.0f);
            out.at(x, y, 2) = std::clamp(b * shade, 0.0f, 1.0f);
        }
    }
    // regional prompts: deterministic tint inside each mask
    for (const RegionPrompt& region : req.region_prompts) {
        const Palette tint = palette_from_hash(prompt_hash(region.text));
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                const int mx = std::min(x * region.mask.width / out.width, region.mask.width - 1);
                const int my = std::min(y * region.mask.height / out.height, region.mask.height - 1);
                if (region.mask.at(mx, my, 0) <= 0.5f) continue;
                out.at(x, y, 0) = std::clamp(0.7f * out.at(x, y, 0) + 0.3f * tint.r, 0.0f, 1.0f);
                out.at(x, y, 1) = std::clamp(0.7f * out.at(x, y, 1) + 0.3f * tint.g, 0.0f, 1.0f);
                out.at(x, y, 2) = std::clamp(0.7f * out.at(x, y, 2) + 0.3f * tint.b, 0.0f, 1.0f);
            }
        }
    }
    return out;
}

Image stub_outpaint(const GenRequest& req) {
    // x-invariant gradient so the panorama stays horizontally seamless
    Image out(req.width, req.height, 3);
    Rng rng(hash_combine(req.seed, prompt_hash("sky")));
    const float top[3] = {static_cast<float>(0.2 + 0.2 * rng.next_double()),
                          static_cast<float>(0.4 + 0.2 * rng.next_double()),
                          static_cast<float>(0.7 + 0.25 * rng.next_double())};
    const float bot[3] = {static_cast<float>(0.6 + 0.3 * rng.next_double()),
                          static_cast<float>(0.7 + 0.2 * rng.next_double()),
                          static_cast<float>(0.8 + 0.15 * rng.next_double())};
    for (int y = 0; y < out.height; ++y) {
        const float t = (y + 0.5f) / out.height;
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = top[c] * (1.0f - t) + bot[c] * t;
    }
    return out;
}

Image stub_asset_alpha(const GenRequest& req) {
    Image out(req.width, req.height, 1, 0.0f);
    Rng rng(hash_combine(req.seed, prompt_hash(req.prompt)));
    const int blobs = 2 + static_cast<int>(rng.next_int(0, 2));
    for (int b = 0; b < blobs; ++b) {
        const double cx = 0.35 + 0.3 * rng.next_double();
        const double cy = 0.30 + 0.3 * rng.next_double();
        const double rx = 0.10 + 0.15 * rng.next_double();
        const double ry = 0.15 + 0.20 * rng.next_double();
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                const double dx = ((x + 0.5) / out.width - cx) / rx;
                const double dy = ((y + 0.5) / out.height - cy) / ry;
                const double r2 = dx * dx + dy * dy;
                if (r2 >= 1.0) continue;
                const float a = static_cast<float>(std::min(1.0, 1.6 * (1.0 - std::sqrt(r2))));
                out.at(x, y, 0) = std::max(out.at(x, y, 0), a);
            }
        }
    }
    return out;
}

Image stub_asset_texture(const GenRequest& req) {
    const Image& canvas = *req.condition_image;
    const Image& mask = *req.condition_mask;
    Image out(req.width, req.height, 3);
    const uint64_t noise_seed = hash_combine(req.seed, prompt_hash(req.prompt));
    const Palette pal = palette_from_hash(prompt_hash(req.prompt));
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const float m = mask.at(std::min(x, mask.width - 1), std::min(y, mask.height - 1), 0);
            const double n =
                value_noise(noise_seed, (x + 0.5) / out.width, (y + 0.5) / out.height, 24);
            const float shade = static_cast<float>(0.55 + 0.45 * n);
            float base[3] = {pal.r * shade, pal.g * shade, pal.b * shade};
            for (int c = 0; c < 3; ++c) {
                const float ctx = canvas.at(std::min(x, canvas.width - 1),
                                            std::min(y, canvas.height - 1),
                                            std::min(c, canvas.channels - 1));
                out.at(x, y, c) = std::clamp(m * base[c] + (1.0f - m) * ctx, 0.0f, 1.0f);
            }
        }
    }
    return out;
}

Image stub_asset_refine(const GenRequest& req) {
    // gentle cleanup: 1px blur keeps the support within a 1-texel growth
    Image alpha = extract_channel(*req.condition_mask, 0);
    Image blurred = box_blur(alpha, 1);
    for (float& v : blurred.data) v = std::clamp(v * 1.15f, 0.0f, 1.0f);
    return blurred;
}

Image stub_repaint(const GenRequest& req) {
    Image out = *req.condition_image;
    const uint64_t noise_seed = hash_combine(req.seed, prompt_hash(req.prompt) ^ 0x7177ull);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const double n =
                value_noise(noise_seed, (x + 0.5) / out.width, (y + 0.5) / out.height, 32);
            for (int c = 0; c < out.channels; ++c) {
                out.at(x, y, c) =
                    std::clamp(out.at(x, y, c) + 0.05f * (static_cast<float>(n) - 0.5f), 0.0f, 1.0f);
            }
        }
    }
    return out;
}

// Chebyshev distance ratio inside the unknown band; the tile-based matte
// stub. Distances are capped at kMatteContext texels, which keeps every
// output value a function of a bounded local window: tiles then agree exactly
// wherever their crops share that window.
constexpr int kMatteContext = 4;

Image stub_matte(const GenRequest& req) {
    const Image& trimap = *req.condition_mask;
    const int w = trimap.width;
    const int h = trimap.height;
    constexpr int kFar = 1 << 28;
    std::vector<int> dist_fg(static_cast<size_t>(w) * h, kFar);
    std::vector<int> dist_bg(static_cast<size_t>(w) * h, kFar);
    auto idx = [&](int x, int y) { return static_cast<size_t>(y) * w + x; };

    // two-pass chamfer distance transform (chessboard metric)
    auto chamfer = [&](std::vector<int>& dist) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                int d = dist[idx(x, y)];
                if (x > 0) d = std::min(d, dist[idx(x - 1, y)] + 1);
                if (y > 0) {
                    d = std::min(d, dist[idx(x, y - 1)] + 1);
                    if (x > 0) d = std::min(d, dist[idx(x - 1, y - 1)] + 1);
                    if (x + 1 < w) d = std::min(d, dist[idx(x + 1, y - 1)] + 1);
                }
                dist[idx(x, y)] = d;
            }
        }
        for (int y = h - 1; y >= 0; --y) {
            for (int x = w - 1; x >= 0; --x) {
                int d = dist[idx(x, y)];
                if (x + 1 < w) d = std::min(d, dist[idx(x + 1, y)] + 1);
                if (y + 1 < h) {
                    d = std::min(d, dist[idx(x, y + 1)] + 1);
                    if (x + 1 < w) d = std::min(d, dist[idx(x + 1, y + 1)] + 1);
                    if (x > 0) d = std::min(d, dist[idx(x - 1, y + 1)] + 1);
                }
                dist[idx(x, y)] = d;
            }
        }
    };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float label = trimap.at(x, y, 0);
            if (label > 0.75f) dist_fg[idx(x, y)] = 0;
            else if (label < 0.25f) dist_bg[idx(x, y)] = 0;
        }
    }
    chamfer(dist_fg);
    chamfer(dist_bg);

    Image alpha(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float label = trimap.at(x, y, 0);
            if (label > 0.75f) {
                alpha.at(x, y, 0) = 1.0f;
            } else if (label < 0.25f) {
                alpha.at(x, y, 0) = 0.0f;
            } else {
                const int df = std::min(dist_fg[idx(x, y)], kMatteContext);
                const int db = std::min(dist_bg[idx(x, y)], kMatteContext);
                alpha.at(x, y, 0) = static_cast<float>(db) / (df + db);
            }
        }
    }
    return alpha;
}

}  // namespace

Image StubBackend::run(const GenRequest& req) {
    switch (req.kind) {
        case Kind::panorama: return stub_panorama(req);
        case Kind::outpaint: return stub_outpaint(req);
        case Kind::asset_alpha: return stub_asset_alpha(req);
        case Kind::asset_texture: return stub_asset_texture(req);
        case Kind::asset_refine: return stub_asset_refine(req);
        case Kind::repaint_tile: return stub_repaint(req);
        case Kind::upscale: return resize_bicubic(*req.condition_image, req.width, req.height);
        case Kind::matte: return stub_matte(req);
    }
    throw BadRequest("unhandled stub kind");
}

namespace {

nlohmann::json raster_to_json(const Image& img) {
    const int depth_bits = img.channels == 1 ? 16 : 8;
    return base64_encode(encode_png(img, depth_bits));
}

// Depth conditions are normalized to [0,1] before the 16-bit PNG encode; real
// generator stacks renormalize anyway, and sky stays at white.
Image normalize_depth_for_wire(const Image& depth) {
    float lo = kSkyDepth, hi = 0.0f;
    for (float d : depth.data) {
        if (is_sky(d)) continue;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    Image out(depth.width, depth.height, 1);
    const float span = hi > lo ? hi - lo : 1.0f;
    for (size_t i = 0; i < depth.data.size(); ++i)
        out.data[i] = is_sky(depth.data[i]) ? 1.0f : (depth.data[i] - lo) / span;
    return out;
}

}  // namespace

std::string request_to_wire_json(const GenRequest& req) {
    nlohmann::json j;
    j["kind"] = kind_name(req.kind);
    j["prompt"] = req.prompt;
    j["seed"] = req.seed;
    j["width"] = req.width;
    j["height"] = req.height;
    nlohmann::json conditions = nlohmann::json::object();
    if (req.condition_depth)
        conditions["depth"] = raster_to_json(normalize_depth_for_wire(*req.condition_depth));
    if (req.condition_image) conditions["image"] = raster_to_json(*req.condition_image);
    if (req.condition_mask) conditions["mask"] = raster_to_json(*req.condition_mask);
    if (!req.region_prompts.empty()) {
        nlohmann::json regions = nlohmann::json::array();
        for (const RegionPrompt& r : req.region_prompts)
            regions.push_back({{"mask", raster_to_json(r.mask)}, {"text", r.text}});
        conditions["regions"] = regions;
    }
    j["conditions"] = conditions;
    return j.dump();
}

GenRequest wire_json_to_request(const std::string& body, std::vector<Image>& raster_storage) {
    nlohmann::json j = nlohmann::json::parse(body);
    GenRequest req;
    req.kind = kind_from_name(j.at("kind").get<std::string>());
    req.prompt = j.value("prompt", "");
    req.seed = j.value("seed", 0ull);
    req.width = j.at("width").get<int>();
    req.height = j.at("height").get<int>();
    raster_storage.reserve(raster_storage.size() + 3 + 8);
    const auto conditions = j.value("conditions", nlohmann::json::object());
    auto decode = [&](const char* key) -> const Image* {
        if (!conditions.contains(key)) return nullptr;
        raster_storage.push_back(decode_png(base64_decode(conditions.at(key).get<std::string>())));
        return &raster_storage.back();
    };
    req.condition_depth = decode("depth");
    req.condition_image = decode("image");
    req.condition_mask = decode("mask");
    if (conditions.contains("regions")) {
        for (const auto& r : conditions.at("regions")) {
            RegionPrompt rp;
            rp.mask = decode_png(base64_decode(r.at("mask").get<std::string>()));
            rp.text = r.value("text", "");
            req.region_prompts.push_back(std::move(rp));
        }
    }
    return req;
}

RemoteBackend::RemoteBackend(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

Image RemoteBackend::run(const GenRequest& req) {
    const std::string body = request_to_wire_json(req);
    std::string reply;
    bool ok = false;
    for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
        httplib::Client client(base_url_);
        client.set_connection_timeout(timeout_seconds_, 0);
        client.set_read_timeout(timeout_seconds_, 0);
        auto res = client.Post("/generate", body, "application/json");
        if (res && res->status == 200) {
            reply = res->body;
            ok = true;
        }
    }
    if (!ok) throw BackendUnavailable("backend at " + base_url_ + " unreachable");

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(reply);
    } catch (const std::exception&) {
        throw BackendMalformedReply("reply is not valid JSON");
    }
    if (!j.contains("image") || !j.contains("width") || !j.contains("height") ||
        !j.contains("channels"))
        throw BackendMalformedReply("reply missing image/width/height/channels");
    Image img;
    try {
        img = decode_png(base64_decode(j.at("image").get<std::string>()));
    } catch (const std::exception& e) {
        throw BackendMalformedReply(std::string("reply image undecodable: ") + e.what());
    }
    if (img.width != j.at("width").get<int>() || img.height != j.at("height").get<int>() ||
        img.channels != j.at("channels").get<int>())
        throw BackendMalformedReply("reply dims disagree with payload");
    return img;
}

ErpImage generate_base_panorama(Backend& backend, const Image& depth,
                                const std::string& global_prompt,
                                const std::vector<RegionPrompt>& region_prompts, uint64_t seed,
                                bool upscale_2x) {
    GenRequest req;
    req.kind = Kind::panorama;
    req.prompt = global_prompt;
    req.region_prompts = region_prompts;
    req.condition_depth = &depth;
    req.seed = seed;
    req.width = depth.width;
    req.height = depth.height;
    Image pano = backend.generate(req);
    if (pano.width != req.width || pano.height != req.height || pano.channels != 3)
        throw BackendMalformedReply("panorama stage returned wrong dimensions");

    if (upscale_2x) {
        GenRequest up;
        up.kind = Kind::upscale;
        up.prompt = global_prompt;
        up.condition_image = &pano;
        up.seed = seed;
        up.width = 2 * pano.width;
        up.height = 2 * pano.height;
        Image big = backend.generate(up);
        if (big.width != up.width || big.height != up.height || big.channels != 3)
            throw BackendMalformedReply("upscale stage returned wrong dimensions");
        return ErpImage(std::move(big));
    }
    return ErpImage(std::move(pano));
}

ErpImage outpaint_sky(Backend& backend, const ErpImage& pano, const ErpImage& terrain_mask,
                      uint64_t seed) {
    if (pano.width != terrain_mask.width || pano.height != terrain_mask.height)
        throw DimMismatch("outpaint: mask dims disagree with panorama");
    GenRequest req;
    req.kind = Kind::outpaint;
    req.prompt = "sky";
    req.condition_image = &pano;
    req.condition_mask = &terrain_mask;
    req.seed = seed;
    req.width = pano.width;
    req.height = pano.height;
    Image fill = backend.generate(req);
    if (fill.width != pano.width || fill.height != pano.height || fill.channels != 3)
        throw BackendMalformedReply("outpaint stage returned wrong dimensions");

    ErpImage out = pano;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            if (terrain_mask.at(x, y, 0) > 0.5f)
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = fill.at(x, y, c);
    return out;
}

Image repaint_masked(Backend& backend, const Image& img, const Image& mask,
                     const std::string& prompt, uint64_t seed) {
    if (img.width != mask.width || img.height != mask.height)
        throw DimMismatch("repaint: mask dims disagree with image");
    GenRequest req;
    req.kind = Kind::repaint_tile;
    req.prompt = prompt;
    req.condition_image = &img;
    req.condition_mask = &mask;
    req.seed = seed;
    req.width = img.width;
    req.height = img.height;
    Image painted = backend.generate(req);
    if (painted.width != img.width || painted.height != img.height ||
        painted.channels != img.channels)
        throw BackendMalformedReply("repaint stage returned wrong dimensions");
    Image out = img;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            if (mask.at(x, y, 0) > 0.5f)
                for (int c = 0; c < out.channels; ++c) out.at(x, y, c) = painted.at(x, y, c);
    return out;
}

}  // namespace pw::gen
