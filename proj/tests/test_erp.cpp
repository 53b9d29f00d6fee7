#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "proxyworld/erp.hpp"
#include "proxyworld/erp_render.hpp"

using namespace pw;

namespace {

TerrainMesh tessellated_plane(int cells, double half) {
    TerrainMesh mesh;
    const int n = cells + 1;
    for (int iz = 0; iz < n; ++iz)
        for (int ix = 0; ix < n; ++ix)
            mesh.vertices.push_back(
                {-half + 2.0 * half * ix / cells, 0.0, -half + 2.0 * half * iz / cells});
    for (int iz = 0; iz < cells; ++iz)
        for (int ix = 0; ix < cells; ++ix) {
            const int a = iz * n + ix;
            mesh.triangles.push_back({a, a + n, a + 1});
            mesh.triangles.push_back({a + 1, a + n, a + n + 1});
        }
    return mesh;
}

}  // namespace

TEST_CASE("dir_to_uv anchor directions") {
    const Vec2 center = erp::dir_to_uv({0, 0, -1});
    CHECK(center.x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(center.y == doctest::Approx(0.5).epsilon(1e-12));

    const Vec2 right = erp::dir_to_uv({1, 0, 0});
    CHECK(right.x == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(right.y == doctest::Approx(0.5).epsilon(1e-12));

    const Vec2 zenith = erp::dir_to_uv({0, 1, 0});
    CHECK(zenith.y == doctest::Approx(1.0).epsilon(1e-12));

    const Vec2 nadir = erp::dir_to_uv({0, -1, 0});
    CHECK(nadir.y == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("dir_to_uv rejects zero vectors") {
    CHECK_THROWS_AS(erp::dir_to_uv({0, 0, 0}), erp::ZeroVector);
    CHECK_THROWS_AS(erp::dir_to_uv({1e-10, 0, 0}), erp::ZeroVector);
}

TEST_CASE("uv_to_dir anchors") {
    const Vec3 fwd = erp::uv_to_dir({0.5, 0.5});
    CHECK(fwd.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fwd.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fwd.z == doctest::Approx(-1.0).epsilon(1e-12));

    const Vec3 right = erp::uv_to_dir({0.75, 0.5});
    CHECK(right.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(right.z) < 1e-12);
}

TEST_CASE("uv round trip away from poles") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const Vec2 uv{rng.next_double(), 0.001 + 0.998 * rng.next_double()};
        const Vec2 back = erp::dir_to_uv(erp::uv_to_dir(uv));
        CHECK(std::abs(back.x - uv.x) < 1e-6);
        CHECK(std::abs(back.y - uv.y) < 1e-6);
    }
}

TEST_CASE("direction round trip away from poles") {
    Rng rng(13);
    for (int i = 0; i < 1000; ++i) {
        Vec3 d{rng.next_double() * 2 - 1, rng.next_double() * 2 - 1, rng.next_double() * 2 - 1};
        if (length(d) < 1e-3) continue;
        d = normalized(d);
        if (std::abs(d.y) > 0.998) continue;
        const Vec3 back = erp::uv_to_dir(erp::dir_to_uv(d));
        CHECK(length(back - d) < 1e-6);
    }
}

TEST_CASE("render_depth on the analytic plane") {
    const TerrainMesh mesh = tessellated_plane(64, 500.0);
    const TriBvh bvh(mesh.vertices, mesh.triangles);
    const Vec3 origin{0, 2, 0};
    const int height = 256;
    const ErpImage depth = erp::render_depth(mesh, bvh, origin, height);
    REQUIRE(depth.width == 2 * height);

    // nadir pixel: straight drop
    CHECK(depth.at(depth.width / 2, height - 1, 0) == doctest::Approx(2.0).epsilon(1e-4));

    // 45 degrees below the horizon: 2*sqrt(2)
    const Ray diag{origin, erp::uv_to_dir({0.5, 0.25})};
    const RayHit hit = bvh.nearest(diag);
    REQUIRE(hit.valid());
    CHECK(hit.t == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-6));

    // full-frame analytic oracle where the hit stays well inside the plane
    int checked = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < depth.width; x += 7) {
            const Vec2 uv = erp::pixel_center_uv(x, y, depth.width, height);
            const double expected = oracle::plane_depth(uv.y, origin.y);
            if (!std::isfinite(expected)) {
                CHECK(is_sky(depth.at(x, y, 0)));
                continue;
            }
            if (expected * std::cos((uv.y - 0.5) * kPi) > 300.0) continue;
            CHECK(std::abs(depth.at(x, y, 0) - expected) < 1e-4);
            ++checked;
        }
    }
    CHECK(checked > 4000);

    // depth positivity
    for (float d : depth.data)
        if (!is_sky(d)) CHECK(d > 0.0f);
}

TEST_CASE("render_depth rejects degenerate meshes") {
    TerrainMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    mesh.triangles = {{0, 1, 2}};  // collinear
    CHECK_THROWS_AS(erp::render_depth_serial(mesh, {0, 1, 0}, 16), erp::DegenerateMesh);
}

TEST_CASE("tile_split arithmetic") {
    ErpImage img(4096, 2048, 1);
    const erp::TileSet tiles = erp::tile_split(img, 1024, 128);
    REQUIRE(tiles.tiles.size() == 5);
    const int expected[5] = {0, 896, 1792, 2688, 3584};
    for (int i = 0; i < 5; ++i) CHECK(tiles.tiles[i].x_origin == expected[i]);
    // last tile wraps 512 columns past the right edge
    CHECK(tiles.tiles.back().x_origin + 1024 - 4096 == 512);

    std::vector<int> cover(4096, 0);
    for (const auto& t : tiles.tiles)
        for (int x = 0; x < 1024; ++x) cover[(t.x_origin + x) % 4096]++;
    for (int c : cover) CHECK(c >= 1);
}

TEST_CASE("tile_split degenerate parameters") {
    ErpImage img(256, 128, 1);
    SUBCASE("zero overlap partitions exactly") {
        const erp::TileSet tiles = erp::tile_split(img, 64, 0);
        REQUIRE(tiles.tiles.size() == 4);
        std::vector<int> cover(256, 0);
        for (const auto& t : tiles.tiles)
            for (int x = 0; x < 64; ++x) cover[(t.x_origin + x) % 256]++;
        for (int c : cover) CHECK(c == 1);
    }
    SUBCASE("tile_size == width is identity") {
        const erp::TileSet tiles = erp::tile_split(img, 256, 0);
        REQUIRE(tiles.tiles.size() == 1);
        CHECK(tiles.tiles[0].x_origin == 0);
    }
    SUBCASE("bad tiling throws") {
        CHECK_THROWS_AS(erp::tile_split(img, 64, 64), erp::BadTiling);
        CHECK_THROWS_AS(erp::tile_split(img, 300, 0), erp::BadTiling);
        CHECK_THROWS_AS(erp::tile_split(img, 64, -1), erp::BadTiling);
    }
}

TEST_CASE("tile merge reconstructs unmodified tiles bit-exactly") {
    Rng rng(99);
    for (int trial = 0; trial < 12; ++trial) {
        const int height = 16 + static_cast<int>(rng.next_int(0, 48));
        const int width = 2 * height;
        const int channels = 1 + static_cast<int>(rng.next_int(0, 2));
        ErpImage img(width, height, channels);
        for (float& v : img.data) v = static_cast<float>(rng.next_double());
        // columns 0 and width-1 differ, exercising wrap continuity
        img.at(0, 0, 0) = 0.125f;
        img.at(width - 1, 0, 0) = 0.875f;

        const int tile = 8 + static_cast<int>(rng.next_int(0, width - 9));
        const int overlap = static_cast<int>(rng.next_int(0, tile - 1));
        const erp::TileSet tiles = erp::tile_split(img, tile, overlap);
        const Image merged = erp::tile_merge(tiles, width, height);
        REQUIRE(merged.data.size() == img.data.size());
        bool identical = true;
        for (size_t i = 0; i < img.data.size(); ++i)
            if (merged.data[i] != img.data[i]) identical = false;
        CHECK(identical);
    }
}

TEST_CASE("tile merge weights partition unity") {
    ErpImage ones(512, 256, 1, 1.0f);
    erp::TileSet tiles = erp::tile_split(ones, 128, 32);
    const Image merged = erp::tile_merge(tiles, 512, 256);
    for (float v : merged.data) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("tile merge blends constant tiles linearly") {
    erp::TileSet set;
    set.tile_size = 8;
    set.overlap = 4;
    set.source_width = 12;
    set.source_height = 2;
    erp::Tile a;
    a.x_origin = 0;
    a.patch = Image(8, 2, 1, 0.0f);
    erp::Tile b;
    b.x_origin = 4;
    b.patch = Image(8, 2, 1, 1.0f);
    set.tiles = {a, b};
    const Image merged = erp::tile_merge(set, 12, 2);
    // overlap columns 4..7 ramp from a toward b, strictly inside (0,1)
    float prev = 0.0f;
    for (int x = 4; x < 8; ++x) {
        const float v = merged.at(x, 0, 0);
        CHECK(v > prev);
        CHECK(v < 1.0f);
        prev = v;
    }
    CHECK(merged.at(0, 0, 0) == 0.0f);
    CHECK(merged.at(11, 0, 0) == 1.0f);
}

TEST_CASE("tile merge reports coverage gaps") {
    erp::TileSet set;
    set.tile_size = 4;
    set.overlap = 0;
    set.source_width = 16;
    set.source_height = 2;
    erp::Tile t;
    t.x_origin = 0;
    t.patch = Image(4, 2, 1, 0.5f);
    set.tiles = {t};
    CHECK_THROWS_AS(erp::tile_merge(set, 16, 2), erp::CoverageGap);
}

TEST_CASE("cubemap extraction") {
    SUBCASE("constant ERP gives a constant face") {
        ErpImage img(64, 32, 3, 0.25f);
        const erp::CubemapFace face = erp::to_cubemap_face(img, erp::Face::PosX, 16);
        for (float v : face.data.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
    }
    SUBCASE("uv-as-color: NegZ center equals the ERP center sample") {
        ErpImage img(256, 128, 2);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                const Vec2 uv = erp::pixel_center_uv(x, y, img.width, img.height);
                img.at(x, y, 0) = static_cast<float>(uv.x);
                img.at(x, y, 1) = static_cast<float>(uv.y);
            }
        const int res = 64;
        const erp::CubemapFace face = erp::to_cubemap_face(img, erp::Face::NegZ, res);
        const float u = face.data.at(res / 2, res / 2, 0);
        const float v = face.data.at(res / 2, res / 2, 1);
        CHECK(u == doctest::Approx(0.5).epsilon(0.02));
        CHECK(v == doctest::Approx(0.5).epsilon(0.02));
    }
    SUBCASE("face texel directions round-trip within one texel") {
        const int res = 32;
        for (erp::Face face : {erp::Face::PosX, erp::Face::NegX, erp::Face::PosY, erp::Face::NegY,
                               erp::Face::PosZ, erp::Face::NegZ}) {
            for (int corner = 0; corner < 4; ++corner) {
                const int i = corner % 2 == 0 ? 0 : res - 1;
                const int j = corner / 2 == 0 ? 0 : res - 1;
                const Vec3 dir = erp::face_texel_dir(face, i, j, res);
                const Vec2 uv = erp::dir_to_uv(dir);
                const Vec3 back = erp::uv_to_dir(uv);
                // a texel on a 256x128 ERP subtends about 2pi/256 radians
                CHECK(length(back - dir) < kTwoPi / 256.0);
            }
        }
    }
}
