#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <atomic>
#include <cmath>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "proxyworld/geometry.hpp"
#include "proxyworld/genbridge.hpp"
#include "proxyworld/imageops.hpp"
#include "proxyworld/matting.hpp"

using namespace pw;
using namespace pw::gen;

namespace {

ErpImage noise_depth(int height, uint64_t seed) {
    ErpImage depth(2 * height, height, 1);
    Rng rng(seed);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < 2 * height; ++x)
            depth.at(x, y, 0) =
                y < height / 3 ? kSkyDepth : static_cast<float>(2.0 + 60.0 * rng.next_double());
    return depth;
}

double channel_mean(const Image& img, int c) {
    double acc = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) acc += img.at(x, y, c);
    return acc / (static_cast<double>(img.width) * img.height);
}

}  // namespace

TEST_CASE("stub backend is deterministic per (request, seed)") {
    StubBackend backend;
    const ErpImage depth = noise_depth(32, 1);
    const ErpImage a = generate_base_panorama(backend, depth, "misty valley", {}, 7);
    const ErpImage b = generate_base_panorama(backend, depth, "misty valley", {}, 7);
    REQUIRE(a.data.size() == b.data.size());
    CHECK(std::equal(a.data.begin(), a.data.end(), b.data.begin()));

    const ErpImage c = generate_base_panorama(backend, depth, "misty valley", {}, 8);
    CHECK_FALSE(std::equal(a.data.begin(), a.data.end(), c.data.begin()));
}

TEST_CASE("panorama staging: generator then upscale, dims checked") {
    StubBackend backend;
    const ErpImage depth = noise_depth(32, 2);
    const ErpImage pano = generate_base_panorama(backend, depth, "p", {}, 1);
    CHECK(pano.width == 2 * depth.width);
    CHECK(pano.height == 2 * depth.height);
    const auto log = backend.call_log();
    REQUIRE(log.size() == 2);
    CHECK(log[0] == Kind::panorama);
    CHECK(log[1] == Kind::upscale);
}

TEST_CASE("region prompts tint their masked area") {
    StubBackend backend;
    const ErpImage depth = noise_depth(32, 3);
    RegionPrompt region;
    region.mask = Image(depth.width, depth.height, 1, 1.0f);  // full frame
    region.text = "crimson autumn foliage";
    const ErpImage plain = generate_base_panorama(backend, depth, "p", {}, 5, false);
    const ErpImage tinted = generate_base_panorama(backend, depth, "p", {region}, 5, false);
    // the documented stub rule blends 30% of a prompt-hash tint into the mask
    double shift = 0.0;
    for (int c = 0; c < 3; ++c) shift += std::abs(channel_mean(tinted, c) - channel_mean(plain, c));
    CHECK(shift > 0.01);
}

TEST_CASE("missing required conditions are rejected") {
    StubBackend backend;
    GenRequest req;
    req.kind = Kind::panorama;
    req.width = 64;
    req.height = 32;
    CHECK_THROWS_AS(backend.generate(req), BadRequest);

    req.kind = Kind::asset_texture;
    CHECK_THROWS_AS(backend.generate(req), BadRequest);
}

TEST_CASE("outpaint preserves unmasked pixels bit-exactly") {
    StubBackend backend;
    const ErpImage depth = noise_depth(24, 4);
    const ErpImage pano = generate_base_panorama(backend, depth, "p", {}, 3, false);

    SUBCASE("all-zero mask returns the panorama untouched") {
        ErpImage mask(pano.width, pano.height, 1, 0.0f);
        const ErpImage out = outpaint_sky(backend, pano, mask);
        CHECK(std::equal(out.data.begin(), out.data.end(), pano.data.begin()));
    }
    SUBCASE("all-one mask synthesizes everything, horizontally seamless") {
        ErpImage mask(pano.width, pano.height, 1, 1.0f);
        const ErpImage out = outpaint_sky(backend, pano, mask, 11);
        for (int y = 0; y < out.height; ++y)
            for (int c = 0; c < 3; ++c)
                CHECK(std::abs(out.at(0, y, c) - out.at(out.width - 1, y, c)) < 1e-6);
    }
    SUBCASE("mixed mask only touches masked pixels") {
        ErpImage mask(pano.width, pano.height, 1, 0.0f);
        for (int y = 0; y < pano.height / 2; ++y)
            for (int x = 0; x < pano.width; ++x) mask.at(x, y, 0) = 1.0f;
        const ErpImage out = outpaint_sky(backend, pano, mask, 11);
        for (int y = pano.height / 2; y < pano.height; ++y)
            for (int x = 0; x < pano.width; ++x)
                for (int c = 0; c < 3; ++c) CHECK(out.at(x, y, c) == pano.at(x, y, c));
    }
}

TEST_CASE("repaint only alters masked pixels, bit-exactly") {
    StubBackend backend;
    Image img(64, 48, 3);
    Rng rng(40);
    for (float& v : img.data) v = static_cast<float>(rng.next_double());
    Image mask(64, 48, 1, 0.0f);
    for (int y = 10; y < 30; ++y)
        for (int x = 20; x < 50; ++x) mask.at(x, y, 0) = 1.0f;

    const Image out = repaint_masked(backend, img, mask, "detail", 6);
    int changed = 0;
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 64; ++x) {
            const bool inside = mask.at(x, y, 0) > 0.5f;
            for (int c = 0; c < 3; ++c) {
                if (!inside) CHECK(out.at(x, y, c) == img.at(x, y, c));
                else if (out.at(x, y, c) != img.at(x, y, c)) ++changed;
            }
        }
    CHECK(changed > 0);
}

TEST_CASE("trimap construction") {
    SUBCASE("zero radii leave no unknown band") {
        Image mask(32, 16, 1, 0.0f);
        for (int x = 8; x < 24; ++x) mask.at(x, 8, 0) = 1.0f;
        const Trimap tri = build_trimap(mask, 0, 0);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 32; ++x) {
                const float v = tri.labels.at(x, y, 0);
                CHECK((v == 0.0f || v == 1.0f));
                CHECK((v == 1.0f) == (mask.at(x, y, 0) > 0.5f));
            }
    }
    SUBCASE("single pixel, dilate 1: unknown ring is the 8-neighborhood") {
        Image mask(16, 16, 1, 0.0f);
        mask.at(8, 8, 0) = 1.0f;
        const Trimap tri = build_trimap(mask, 1, 0);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                const float v = tri.labels.at(x, y, 0);
                const int d = std::max(std::abs(x - 8), std::abs(y - 8));
                if (d == 0) CHECK(v == 1.0f);
                else if (d == 1) CHECK(v == 0.5f);
                else CHECK(v == 0.0f);
            }
    }
    SUBCASE("containment property on random masks") {
        Rng rng(21);
        for (int trial = 0; trial < 5; ++trial) {
            Image mask(48, 24, 1);
            for (float& v : mask.data) v = rng.next_double() < 0.4 ? 1.0f : 0.0f;
            const Trimap tri = build_trimap(mask, 2, 2);
            for (int y = 0; y < 24; ++y)
                for (int x = 0; x < 48; ++x) {
                    const float label = tri.labels.at(x, y, 0);
                    const bool in_mask = mask.at(x, y, 0) > 0.5f;
                    if (label == 1.0f) CHECK(in_mask);        // fg subset of mask
                    if (in_mask) CHECK(label >= 0.5f);        // mask subset of fg+unknown
                }
        }
    }
}

TEST_CASE("matte_terrain") {
    StubBackend backend;
    const int height = 64;
    ErpImage pano(2 * height, height, 3, 0.5f);
    // terrain mask: lower half plus a bumpy ridge
    Image mask(2 * height, height, 1, 0.0f);
    for (int x = 0; x < 2 * height; ++x) {
        const int ridge = height / 2 + static_cast<int>(6.0 * std::sin(x * 0.2));
        for (int y = ridge; y < height; ++y) mask.at(x, y, 0) = 1.0f;
    }

    SUBCASE("empty unknown band returns the fg labels exactly") {
        const Trimap tri = build_trimap(mask, 0, 0);
        const ErpImage alpha = matte_terrain(backend, pano, tri, 64, 16);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < 2 * height; ++x)
                CHECK(alpha.at(x, y, 0) == (mask.at(x, y, 0) > 0.5f ? 1.0f : 0.0f));
    }
    SUBCASE("alpha stays in range, pinned on fg and bg") {
        const Trimap tri = build_trimap(mask, 4, 4);
        const ErpImage alpha = matte_terrain(backend, pano, tri, 64, 16);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < 2 * height; ++x) {
                const float a = alpha.at(x, y, 0);
                CHECK(a >= 0.0f);
                CHECK(a <= 1.0f);
                const float label = tri.labels.at(x, y, 0);
                if (label == 1.0f) CHECK(a == 1.0f);
                if (label == 0.0f) CHECK(a == 0.0f);
            }
    }
    SUBCASE("tile seams do not add discontinuities") {
        const Trimap tri = build_trimap(mask, 4, 4);
        const ErpImage alpha = matte_terrain(backend, pano, tri, 64, 16);
        // max adjacent-column jump inside shared (multi-tile) columns vs body
        const int width = 2 * height;
        const int stride = 64 - 16;
        const int tiles = (width + stride - 1) / stride;
        std::vector<int> cover(width, 0);
        for (int t = 0; t < tiles; ++t)
            for (int i = 0; i < 64; ++i) cover[(t * stride + i) % width]++;
        auto in_overlap = [&](int x) { return cover[x] >= 2 || cover[(x + 1) % width] >= 2; };
        double max_overlap = 0.0, max_body = 0.0;
        for (int x = 0; x + 1 < 2 * height; ++x) {
            double max_jump = 0.0;
            for (int y = 0; y < height; ++y)
                max_jump = std::max(max_jump, static_cast<double>(std::abs(
                                                  alpha.at(x + 1, y, 0) - alpha.at(x, y, 0))));
            if (in_overlap(x)) max_overlap = std::max(max_overlap, max_jump);
            else max_body = std::max(max_body, max_jump);
        }
        CHECK(max_overlap <= max_body + 1e-6);
    }
}

TEST_CASE("composite_over") {
    RgbaTexture fg;
    fg.rgba = Image(8, 8, 4, 1.0f);
    Image bg(8, 8, 3, 0.0f);
    SUBCASE("mask zero keeps the background") {
        Image mask(8, 8, 1, 0.0f);
        const Image out = composite_over(fg, bg, mask);
        for (float v : out.data) CHECK(v == 0.0f);
    }
    SUBCASE("mask one keeps the foreground") {
        Image mask(8, 8, 1, 1.0f);
        const Image out = composite_over(fg, bg, mask);
        for (float v : out.data) CHECK(v == 1.0f);
    }
    SUBCASE("half mask blends exactly") {
        Image mask(8, 8, 1, 0.5f);
        const Image out = composite_over(fg, bg, mask);
        for (float v : out.data) CHECK(v == 0.5f);
    }
    SUBCASE("dimension mismatch throws") {
        Image mask(4, 4, 1, 0.5f);
        CHECK_THROWS_AS(composite_over(fg, bg, mask), DimMismatch);
    }
}

TEST_CASE("synthesize_asset_rgba staging") {
    StubBackend backend;
    Image background(96, 96, 3, 0.4f);

    SUBCASE("template alpha skips the first stage: exactly 2 backend calls") {
        backend.clear_log();
        Image template_alpha(96, 96, 1, 0.0f);
        for (int y = 20; y < 76; ++y)
            for (int x = 30; x < 66; ++x) template_alpha.at(x, y, 0) = 1.0f;
        const RgbaTexture out =
            synthesize_asset_rgba(backend, "pine", background, template_alpha, 3);
        const auto log = backend.call_log();
        REQUIRE(log.size() == 2);
        CHECK(log[0] == Kind::asset_texture);
        CHECK(log[1] == Kind::asset_refine);
        CHECK(out.width() == 96);
    }
    SUBCASE("without template alpha the order is alpha, texture, refine") {
        backend.clear_log();
        (void)synthesize_asset_rgba(backend, "pine", background, std::nullopt, 3);
        const auto log = backend.call_log();
        REQUIRE(log.size() == 3);
        CHECK(log[0] == Kind::asset_alpha);
        CHECK(log[1] == Kind::asset_texture);
        CHECK(log[2] == Kind::asset_refine);
    }
    SUBCASE("deterministic per seed") {
        const RgbaTexture a = synthesize_asset_rgba(backend, "bush", background, std::nullopt, 9);
        const RgbaTexture b = synthesize_asset_rgba(backend, "bush", background, std::nullopt, 9);
        CHECK(std::equal(a.rgba.data.begin(), a.rgba.data.end(), b.rgba.data.begin()));
    }
    SUBCASE("alpha support contained in the dilated sketch over 10 seeds") {
        for (uint64_t seed = 0; seed < 10; ++seed) {
            backend.clear_log();
            GenRequest sketch_req;
            sketch_req.kind = Kind::asset_alpha;
            sketch_req.prompt = "shrub";
            sketch_req.seed = seed;
            sketch_req.width = 96;
            sketch_req.height = 96;
            const Image sketch = backend.generate(sketch_req);  // same M_c the stage-1 call yields

            const int margin = 4;
            const RgbaTexture out =
                synthesize_asset_rgba(backend, "shrub", background, std::nullopt, seed, margin);
            Image sketch_bin(96, 96, 1);
            for (int y = 0; y < 96; ++y)
                for (int x = 0; x < 96; ++x)
                    sketch_bin.at(x, y, 0) = sketch.at(x, y, 0) > 0.0f ? 1.0f : 0.0f;
            const Image allowed = dilate(sketch_bin, margin);
            for (int y = 0; y < 96; ++y)
                for (int x = 0; x < 96; ++x)
                    if (out.rgba.at(x, y, 3) > 0.0f) CHECK(allowed.at(x, y, 0) == 1.0f);
        }
    }
    SUBCASE("empty alpha mask raises MissingAlpha") {
        Image empty_alpha(96, 96, 1, 0.0f);
        CHECK_THROWS_AS(synthesize_asset_rgba(backend, "x", background, empty_alpha, 1),
                        MissingAlpha);
    }
}

TEST_CASE("remote backend over a local endpoint") {
    // local server: echoes a stub render for good requests, lies about
    // dimensions when the prompt says so
    httplib::Server server;
    StubBackend stub;
    server.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
        std::vector<Image> storage;
        GenRequest parsed = wire_json_to_request(req.body, storage);
        const Image img = stub.generate(parsed);
        nlohmann::json reply;
        reply["image"] = base64_encode(encode_png(img, 8));
        reply["width"] = parsed.prompt == "lie about dims" ? img.width + 7 : img.width;
        reply["height"] = img.height;
        reply["channels"] = img.channels;
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    RemoteBackend remote("http://127.0.0.1:" + std::to_string(port), 10);
    const ErpImage depth = noise_depth(16, 5);

    SUBCASE("well-formed replies round-trip") {
        GenRequest req;
        req.kind = Kind::panorama;
        req.prompt = "ok";
        req.condition_depth = &depth;
        req.seed = 2;
        req.width = depth.width;
        req.height = depth.height;
        const Image out = remote.generate(req);
        CHECK(out.width == depth.width);
        CHECK(out.height == depth.height);
        CHECK(out.channels == 3);
    }
    SUBCASE("dimension lies raise BackendMalformedReply") {
        GenRequest req;
        req.kind = Kind::panorama;
        req.prompt = "lie about dims";
        req.condition_depth = &depth;
        req.seed = 2;
        req.width = depth.width;
        req.height = depth.height;
        CHECK_THROWS_AS(remote.generate(req), BackendMalformedReply);
    }
    SUBCASE("unreachable endpoint raises BackendUnavailable after retry") {
        RemoteBackend dead("http://127.0.0.1:1", 1);
        GenRequest req;
        req.kind = Kind::panorama;
        req.prompt = "x";
        req.condition_depth = &depth;
        req.width = depth.width;
        req.height = depth.height;
        CHECK_THROWS_AS(dead.generate(req), BackendUnavailable);
    }

    server.stop();
    server_thread.join();
}
