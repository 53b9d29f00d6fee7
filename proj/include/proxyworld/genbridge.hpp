#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxyworld/image.hpp"

namespace pw::gen {

struct BackendUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BackendMalformedReply : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingAlpha : std::runtime_error {
    MissingAlpha() : std::runtime_error("alpha synthesis stage returned an empty mask") {}
};
struct DimMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadRequest : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Generator stages behind the backend. matte rides the same protocol as the
// generative kinds so remote matting models can plug into the tile loop.
enum class Kind {
    panorama,
    outpaint,
    asset_alpha,
    asset_texture,
    asset_refine,
    repaint_tile,
    upscale,
    matte,
};

const char* kind_name(Kind k);
Kind kind_from_name(const std::string& name);

struct RegionPrompt {
    Image mask;
    std::string text;
};

struct GenRequest {
    Kind kind = Kind::panorama;
    std::string prompt;
    std::vector<RegionPrompt> region_prompts;
    const Image* condition_depth = nullptr;
    const Image* condition_image = nullptr;
    const Image* condition_mask = nullptr;
    uint64_t seed = 0;
    int width = 0;
    int height = 0;
};

// Throws BadRequest when a kind-specific required condition is missing
// (panorama needs depth, asset_texture needs image + mask, ...).
void validate_request(const GenRequest& req);

// Shareable generative backend. generate() validates, dispatches and records
// the call kind; the log lets tests audit staging order.
class Backend {
public:
    virtual ~Backend() = default;

    Image generate(const GenRequest& req);

    std::vector<Kind> call_log() const;
    void clear_log();

protected:
    virtual Image run(const GenRequest& req) = 0;

private:
    mutable std::mutex log_mutex_;
    std::vector<Kind> log_;
};

// Deterministic procedural stand-in: every output is a pure function of
// (request, seed). The generators are documented closed forms:
//   panorama     value noise shaded by depth bands; region prompts add a
//                prompt-hash tint inside their masks
//   outpaint     x-invariant vertical gradient between two seeded colors
//   asset_alpha  union of seeded soft ellipses centered in frame
//   asset_texture prompt-hash palette modulated by value noise inside the
//                mask, canvas passthrough outside
//   asset_refine 1px box blur of the incoming alpha
//   repaint_tile input plus +/-0.05 seeded detail noise
//   upscale      bicubic x2
//   matte        fg/bg distance ratio ramp inside the unknown band
class StubBackend : public Backend {
protected:
    Image run(const GenRequest& req) override;
};

// JSON-over-HTTP client for real generator stacks. POSTs to <base_url>/generate
// with {kind,prompt,seed,width,height,conditions:{depth?,image?,mask?,regions?[]}},
// rasters as base64 PNG; expects {image,width,height,channels}. One retry on
// transport failure, then BackendUnavailable.
class RemoteBackend : public Backend {
public:
    explicit RemoteBackend(std::string base_url, int timeout_seconds = 300);

protected:
    Image run(const GenRequest& req) override;

private:
    std::string base_url_;
    int timeout_seconds_;
};

// Serializes a request to the wire JSON (exposed for the test server and the
// remote agent, which shares the protocol with kind=agent_*).
std::string request_to_wire_json(const GenRequest& req);
GenRequest wire_json_to_request(const std::string& body, std::vector<Image>& raster_storage);

// --- panorama-facing operations -------------------------------------------

// Two-stage synthesis: conditional generator at depth resolution,
// then the upscaling stage (stub: bicubic x2). Output dims are checked against
// the contract; a lying backend raises BackendMalformedReply.
ErpImage generate_base_panorama(Backend& backend, const Image& depth,
                                const std::string& global_prompt,
                                const std::vector<RegionPrompt>& region_prompts, uint64_t seed,
                                bool upscale_2x = true);

// mask=1 pixels are filled by the backend, mask=0 pixels are preserved from
// the panorama bit-exactly; the result is the pure sky texture.
ErpImage outpaint_sky(Backend& backend, const ErpImage& pano, const ErpImage& terrain_mask,
                      uint64_t seed = 0);

// Repaint under a mask: backend output inside, input preserved bit-exactly
// outside.
Image repaint_masked(Backend& backend, const Image& img, const Image& mask,
                     const std::string& prompt, uint64_t seed);

}  // namespace pw::gen
