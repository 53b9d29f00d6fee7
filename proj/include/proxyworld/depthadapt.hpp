#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxyworld/image.hpp"

namespace pw::depthadapt {

struct EmptyLibrary : std::runtime_error {
    EmptyLibrary() : std::runtime_error("depth reference library is empty") {}
};
struct DegenerateQuery : std::runtime_error {
    DegenerateQuery() : std::runtime_error("query thumb has zero variance") {}
};
struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr int kThumbWidth = 32;
constexpr int kThumbHeight = 16;
constexpr int kThumbSamples = kThumbWidth * kThumbHeight;

struct DepthThumb {
    std::string id;
    std::array<float, kThumbSamples> samples{};
};

// Block-averaged 32x16 downsample; sky samples are excluded from each block
// mean and a block of pure sky stays at the sentinel.
DepthThumb make_thumb(const Image& depth, const std::string& id);

// argmax of cosine similarity on mean-subtracted sample vectors, ties broken
// by id. Raw depth vectors are dominated by their mean, hence the centering.
const DepthThumb& retrieve_reference(const DepthThumb& query,
                                     const std::vector<DepthThumb>& library);

double cosine_centered(const DepthThumb& a, const DepthThumb& b);

// Cubic mapping over src depth normalized to [0,1]; applied to full-res maps
// after fitting on thumbs.
struct RemapPolynomial {
    double c3 = 0, c2 = 0, c1 = 1, c0 = 0;  // over normalized src
    double src_min = 0, src_max = 1;
    double ref_max = 1;        // clamp ceiling source
    double residual_rms = 0;   // over the fitted samples
    bool monotonic = true;     // diagnostic only, not enforced

    double eval_normalized(double x) const { return ((c3 * x + c2) * x + c1) * x + c0; }
    double eval_meters(double d) const {
        return eval_normalized((d - src_min) / (src_max - src_min));
    }
    // coefficients of the same cubic expressed directly over meters
    std::array<double, 4> coeffs_in_meters() const;
};

// Least-squares cubic ref = P(normalize(src)) via Householder QR; samples
// where either thumb holds the sky sentinel are excluded pairwise.
RemapPolynomial fit_remap(const DepthThumb& src, const DepthThumb& ref);

// P applied per pixel to non-sky samples, clamped to [0, 1.05*ref_max]; sky
// sentinel preserved.
Image apply_remap(const RemapPolynomial& poly, const Image& depth);

// The on-disk stand-in for the estimated-depth training set: smooth
// disparity-like maps d_est = a/(d+b) + low-frequency noise over synthetic
// ground profiles.
std::vector<DepthThumb> synthetic_reference_library(uint64_t seed, int count = 16);

void save_library(const std::string& dir, const std::vector<DepthThumb>& thumbs);
std::vector<DepthThumb> load_library(const std::string& dir);

}  // namespace pw::depthadapt
