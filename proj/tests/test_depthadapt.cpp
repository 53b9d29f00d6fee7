#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <functional>

#include "doctest.h"
#include "oracles.hpp"
#include "proxyworld/depthadapt.hpp"

using namespace pw;
using namespace pw::depthadapt;

namespace {

DepthThumb thumb_from(const std::string& id, const std::function<float(int, int)>& f) {
    DepthThumb t;
    t.id = id;
    for (int y = 0; y < kThumbHeight; ++y)
        for (int x = 0; x < kThumbWidth; ++x) t.samples[y * kThumbWidth + x] = f(x, y);
    return t;
}

std::vector<DepthThumb> random_library(uint64_t seed, int count) {
    std::vector<DepthThumb> lib;
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "lib_%03d", i);
        lib.push_back(thumb_from(name, [&](int, int) {
            return static_cast<float>(1.0 + 40.0 * rng.next_double());
        }));
    }
    return lib;
}

}  // namespace

TEST_CASE("retrieval basics") {
    auto lib = random_library(1, 8);
    SUBCASE("identical query returns that entry with similarity 1") {
        const DepthThumb query = lib[3];
        const DepthThumb& best = retrieve_reference(query, lib);
        CHECK(best.id == "lib_003");
        CHECK(cosine_centered(query, best) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("orthogonal vectors score zero") {
        // after mean subtraction: a = [1,-1,0,...], b = [1,1,-1,-1,0...] -> dot 0
        DepthThumb a = thumb_from("a", [](int x, int y) {
            const int i = y * kThumbWidth + x;
            return i == 0 ? 2.0f : (i == 1 ? 0.0f : 1.0f);
        });
        DepthThumb b = thumb_from("b", [](int x, int y) {
            const int i = y * kThumbWidth + x;
            if (i == 0 || i == 1) return 2.0f;
            if (i == 2 || i == 3) return 0.0f;
            return 1.0f;
        });
        CHECK(cosine_centered(a, b) == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("empty library throws") {
        std::vector<DepthThumb> empty;
        CHECK_THROWS_AS(retrieve_reference(lib[0], empty), EmptyLibrary);
    }
    SUBCASE("zero-variance query throws") {
        const DepthThumb flat = thumb_from("flat", [](int, int) { return 5.0f; });
        CHECK_THROWS_AS(retrieve_reference(flat, lib), DegenerateQuery);
    }
}

TEST_CASE("retrieval matches the exhaustive scan on a 50-entry library") {
    const auto lib = random_library(77, 50);
    Rng rng(88);
    for (int q = 0; q < 20; ++q) {
        const DepthThumb query = thumb_from("q", [&](int, int) {
            return static_cast<float>(1.0 + 40.0 * rng.next_double());
        });
        const DepthThumb* best = nullptr;
        double best_sim = -2.0;
        for (const auto& cand : lib) {
            const double sim = cosine_centered(query, cand);
            if (sim > best_sim || (sim == best_sim && best && cand.id < best->id)) {
                best = &cand;
                best_sim = sim;
            }
        }
        CHECK(retrieve_reference(query, lib).id == best->id);
    }
}

TEST_CASE("retrieval argmax is invariant to positive library scaling") {
    const auto lib = random_library(31, 20);
    auto scaled = lib;
    for (auto& t : scaled)
        for (auto& s : t.samples) s *= 3.75f;
    Rng rng(32);
    for (int q = 0; q < 10; ++q) {
        const DepthThumb query = thumb_from("q", [&](int, int) {
            return static_cast<float>(1.0 + 40.0 * rng.next_double());
        });
        CHECK(retrieve_reference(query, lib).id == retrieve_reference(query, scaled).id);
    }
}

TEST_CASE("fit_remap recovers exact relationships") {
    Rng rng(5);
    const DepthThumb src = thumb_from("src", [&](int, int) {
        return static_cast<float>(1.0 + 30.0 * rng.next_double());
    });

    SUBCASE("identity: remapped thumb equals the source") {
        const RemapPolynomial poly = fit_remap(src, src);
        CHECK(poly.residual_rms < 1e-6);
        double rms = 0.0;
        for (float s : src.samples) {
            const double mapped = poly.eval_meters(s);
            rms += (mapped - s) * (mapped - s);
        }
        rms = std::sqrt(rms / kThumbSamples);
        CHECK(rms < 1e-6);
        CHECK(poly.monotonic);
    }
    SUBCASE("affine 2s+1 recovered exactly in meters") {
        DepthThumb ref = src;
        ref.id = "ref";
        for (auto& s : ref.samples) s = 2.0f * s + 1.0f;
        const RemapPolynomial poly = fit_remap(src, ref);
        const auto meters = poly.coeffs_in_meters();
        CHECK(std::abs(meters[0]) < 1e-6);
        CHECK(std::abs(meters[1]) < 1e-6);
        CHECK(meters[2] == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(meters[3] == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("noisy cubic: residual within 1e-9 of the normal-equations oracle") {
        Rng noise(6);
        DepthThumb ref;
        ref.id = "ref";
        std::vector<double> xs, ys;
        for (int i = 0; i < kThumbSamples; ++i) {
            const double x = (src.samples[i] - 1.0) / 30.0;
            const double y =
                0.3 * x * x * x - 0.2 * x * x + 1.4 * x + 0.05 + 0.01 * (noise.next_double() - 0.5);
            ref.samples[i] = static_cast<float>(y);
        }
        const RemapPolynomial poly = fit_remap(src, ref);
        // oracle over the same normalized samples
        for (int i = 0; i < kThumbSamples; ++i) {
            xs.push_back((src.samples[i] - poly.src_min) / (poly.src_max - poly.src_min));
            ys.push_back(ref.samples[i]);
        }
        const oracle::CubicFit fit = oracle::normal_equations_cubic(xs, ys);
        CHECK(poly.residual_rms <= fit.residual_rms + 1e-9);
        CHECK(std::abs(poly.residual_rms - fit.residual_rms) < 1e-9);
    }
    SUBCASE("rank deficiency with fewer than 4 distinct sources") {
        DepthThumb flat3 = thumb_from("flat3", [](int x, int) {
            return static_cast<float>(1 + (x % 3));
        });
        CHECK_THROWS_AS(fit_remap(flat3, flat3), RankDeficient);
    }
}

TEST_CASE("apply_remap") {
    Image depth(64, 32, 1);
    Rng rng(9);
    for (float& d : depth.data) d = static_cast<float>(2.0 + 50.0 * rng.next_double());
    depth.at(0, 0, 0) = kSkyDepth;
    depth.at(5, 3, 0) = kSkyDepth;

    SUBCASE("identity polynomial passes non-sky pixels through") {
        RemapPolynomial poly;
        poly.c1 = 1.0;
        poly.src_min = 0.0;
        poly.src_max = 1.0;
        poly.ref_max = 1e6;
        const Image out = apply_remap(poly, depth);
        for (size_t i = 0; i < depth.data.size(); ++i) {
            if (is_sky(depth.data[i])) CHECK(out.data[i] == depth.data[i]);
            else CHECK(out.data[i] == doctest::Approx(depth.data[i]).epsilon(1e-6));
        }
    }
    SUBCASE("sky pixels survive any polynomial") {
        RemapPolynomial poly;
        poly.c3 = -5.0;
        poly.c0 = 3.0;
        poly.src_min = 2.0;
        poly.src_max = 52.0;
        poly.ref_max = 10.0;
        const Image out = apply_remap(poly, depth);
        CHECK(out.at(0, 0, 0) == kSkyDepth);
        CHECK(out.at(5, 3, 0) == kSkyDepth);
    }
    SUBCASE("output is clamped, finite and non-negative") {
        RemapPolynomial poly;
        poly.c3 = -100.0;
        poly.c2 = 80.0;
        poly.c1 = -60.0;
        poly.c0 = 5.0;
        poly.src_min = 2.0;
        poly.src_max = 52.0;
        poly.ref_max = 8.0;
        const Image out = apply_remap(poly, depth);
        for (float v : out.data) {
            CHECK(std::isfinite(v));
            if (!is_sky(v)) {
                CHECK(v >= 0.0f);
                CHECK(v <= 1.05f * 8.0f + 1e-6f);
            }
        }
    }
    SUBCASE("full-resolution remap re-thumbnailed matches the fit prediction") {
        // a spatially smooth depth field, so thumb cells represent their pixels
        Image smooth(128, 64, 1);
        for (int y = 0; y < smooth.height; ++y)
            for (int x = 0; x < smooth.width; ++x) {
                const double u = (x + 0.5) / smooth.width;
                const double v = (y + 0.5) / smooth.height;
                smooth.at(x, y, 0) = static_cast<float>(
                    12.0 + 8.0 * std::sin(kTwoPi * u) * std::cos(kPi * v) + 3.0 * v);
            }
        const DepthThumb src = make_thumb(smooth, "src");
        Rng noise(10);
        DepthThumb ref = src;
        ref.id = "ref";
        for (auto& s : ref.samples)
            s = 0.5f * s + 4.0f + 0.02f * static_cast<float>(noise.next_double());
        const RemapPolynomial poly = fit_remap(src, ref);
        const Image remapped = apply_remap(poly, smooth);
        const DepthThumb re_thumbed = make_thumb(remapped, "re");
        for (int i = 0; i < kThumbSamples; ++i) {
            const double predicted = poly.eval_meters(src.samples[i]);
            CHECK(std::abs(re_thumbed.samples[i] - predicted) <
                  poly.residual_rms + 1e-3 + 0.02);
        }
    }
}

TEST_CASE("synthetic library persists through disk round trip") {
    namespace fs = std::filesystem;
    const auto lib = synthetic_reference_library(4242, 16);
    REQUIRE(lib.size() == 16);
    for (const auto& t : lib)
        for (float s : t.samples) CHECK(std::isfinite(s));

    const std::string dir = (fs::temp_directory_path() / "pw_depth_lib_test").string();
    fs::remove_all(dir);
    save_library(dir, lib);
    const auto loaded = load_library(dir);
    REQUIRE(loaded.size() == lib.size());
    for (size_t i = 0; i < lib.size(); ++i) {
        CHECK(loaded[i].id == lib[i].id);
        for (int k = 0; k < kThumbSamples; ++k) CHECK(loaded[i].samples[k] == lib[i].samples[k]);
    }
    fs::remove_all(dir);
}
