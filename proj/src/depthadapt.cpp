#include "proxyworld/depthadapt.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "proxyworld/geometry.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pw::depthadapt {

DepthThumb make_thumb(const Image& depth, const std::string& id) {
    DepthThumb thumb;
    thumb.id = id;
    for (int ty = 0; ty < kThumbHeight; ++ty) {
        for (int tx = 0; tx < kThumbWidth; ++tx) {
            const int x0 = tx * depth.width / kThumbWidth;
            const int x1 = (tx + 1) * depth.width / kThumbWidth;
            const int y0 = ty * depth.height / kThumbHeight;
            const int y1 = (ty + 1) * depth.height / kThumbHeight;
            double acc = 0.0;
            int n = 0;
            for (int y = y0; y < std::max(y1, y0 + 1); ++y) {
                for (int x = x0; x < std::max(x1, x0 + 1); ++x) {
                    const float d = depth.at(std::min(x, depth.width - 1),
                                             std::min(y, depth.height - 1), 0);
                    if (is_sky(d)) continue;
                    acc += d;
                    ++n;
                }
            }
            thumb.samples[ty * kThumbWidth + tx] =
                n > 0 ? static_cast<float>(acc / n) : kSkyDepth;
        }
    }
    return thumb;
}

double cosine_centered(const DepthThumb& a, const DepthThumb& b) {
    double ma = 0, mb = 0;
    for (int i = 0; i < kThumbSamples; ++i) {
        ma += a.samples[i];
        mb += b.samples[i];
    }
    ma /= kThumbSamples;
    mb /= kThumbSamples;
    double dot = 0, na = 0, nb = 0;
    for (int i = 0; i < kThumbSamples; ++i) {
        const double xa = a.samples[i] - ma;
        const double xb = b.samples[i] - mb;
        dot += xa * xb;
        na += xa * xa;
        nb += xb * xb;
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

const DepthThumb& retrieve_reference(const DepthThumb& query,
                                     const std::vector<DepthThumb>& library) {
    if (library.empty()) throw EmptyLibrary();
    double qmean = 0;
    for (float s : query.samples) qmean += s;
    qmean /= kThumbSamples;
    double qvar = 0;
    for (float s : query.samples) qvar += (s - qmean) * (s - qmean);
    if (qvar <= 0.0) throw DegenerateQuery();

    const DepthThumb* best = nullptr;
    double best_sim = -2.0;
    for (const DepthThumb& cand : library) {
        const double sim = cosine_centered(query, cand);
        if (sim > best_sim || (sim == best_sim && best && cand.id < best->id)) {
            best = &cand;
            best_sim = sim;
        }
    }
    return *best;
}

namespace {

// Householder QR solve of the Nx4 Vandermonde system; returns coefficients
// (c3,c2,c1,c0) and the residual sum of squares.
void qr_solve_cubic(const std::vector<double>& xs, const std::vector<double>& ys,
                    std::array<double, 4>& coeffs, double& ssr) {
    const int n = static_cast<int>(xs.size());
    constexpr int m = 4;
    std::vector<double> a(static_cast<size_t>(n) * m);
    std::vector<double> rhs(ys);
    for (int i = 0; i < n; ++i) {
        const double x = xs[i];
        a[i * m + 0] = x * x * x;
        a[i * m + 1] = x * x;
        a[i * m + 2] = x;
        a[i * m + 3] = 1.0;
    }
    for (int k = 0; k < m; ++k) {
        double norm = 0.0;
        for (int i = k; i < n; ++i) norm += a[i * m + k] * a[i * m + k];
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw RankDeficient("design matrix is rank deficient");
        if (a[k * m + k] > 0) norm = -norm;
        // v = x - norm*e_k, normalized so v[k] = 1
        const double vk = a[k * m + k] - norm;
        std::vector<double> v(n - k);
        v[0] = 1.0;
        for (int i = k + 1; i < n; ++i) v[i - k] = a[i * m + k] / vk;
        double vtv = 0.0;
        for (double e : v) vtv += e * e;
        const double beta = 2.0 / vtv;
        for (int j = k; j < m; ++j) {
            double dot = 0.0;
            for (int i = k; i < n; ++i) dot += v[i - k] * a[i * m + j];
            dot *= beta;
            for (int i = k; i < n; ++i) a[i * m + j] -= dot * v[i - k];
        }
        double dot = 0.0;
        for (int i = k; i < n; ++i) dot += v[i - k] * rhs[i];
        dot *= beta;
        for (int i = k; i < n; ++i) rhs[i] -= dot * v[i - k];
    }
    // back substitution; column order (x^3,x^2,x,1) matches (c3,c2,c1,c0)
    for (int k = m - 1; k >= 0; --k) {
        double s = rhs[k];
        for (int j = k + 1; j < m; ++j) s -= a[k * m + j] * coeffs[j];
        if (std::abs(a[k * m + k]) < 1e-12) throw RankDeficient("zero pivot in QR solve");
        coeffs[k] = s / a[k * m + k];
    }
    ssr = 0.0;
    for (int i = m; i < n; ++i) ssr += rhs[i] * rhs[i];
}

}  // namespace

RemapPolynomial fit_remap(const DepthThumb& src, const DepthThumb& ref) {
    std::vector<double> raw_src, raw_ref;
    raw_src.reserve(kThumbSamples);
    for (int i = 0; i < kThumbSamples; ++i) {
        if (is_sky(src.samples[i]) || is_sky(ref.samples[i])) continue;
        raw_src.push_back(src.samples[i]);
        raw_ref.push_back(ref.samples[i]);
    }
    std::set<double> distinct(raw_src.begin(), raw_src.end());
    if (distinct.size() < 4)
        throw RankDeficient("fewer than 4 distinct source depths after sky exclusion");

    RemapPolynomial poly;
    poly.src_min = *distinct.begin();
    poly.src_max = *distinct.rbegin();
    poly.ref_max = *std::max_element(raw_ref.begin(), raw_ref.end());
    const double span = poly.src_max - poly.src_min;

    std::vector<double> xs(raw_src.size());
    for (size_t i = 0; i < raw_src.size(); ++i) xs[i] = (raw_src[i] - poly.src_min) / span;

    std::array<double, 4> coeffs{};
    double ssr = 0.0;
    qr_solve_cubic(xs, raw_ref, coeffs, ssr);
    poly.c3 = coeffs[0];
    poly.c2 = coeffs[1];
    poly.c1 = coeffs[2];
    poly.c0 = coeffs[3];
    poly.residual_rms = std::sqrt(ssr / static_cast<double>(xs.size()));

    poly.monotonic = true;
    for (int i = 0; i <= 64; ++i) {
        const double x = i / 64.0;
        const double d1 = (3.0 * poly.c3 * x + 2.0 * poly.c2) * x + poly.c1;
        if (d1 < 0.0) {
            poly.monotonic = false;
            break;
        }
    }
    return poly;
}

std::array<double, 4> RemapPolynomial::coeffs_in_meters() const {
    const double a = 1.0 / (src_max - src_min);
    const double b = -src_min / (src_max - src_min);
    return {
        c3 * a * a * a,
        3.0 * c3 * a * a * b + c2 * a * a,
        3.0 * c3 * a * b * b + 2.0 * c2 * a * b + c1 * a,
        c3 * b * b * b + c2 * b * b + c1 * b + c0,
    };
}

Image apply_remap(const RemapPolynomial& poly, const Image& depth) {
    Image out = depth;
    const double hi = 1.05 * poly.ref_max;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const float d = depth.at(x, y, 0);
            if (is_sky(d)) continue;
            const double mapped = poly.eval_meters(d);
            out.at(x, y, 0) = static_cast<float>(std::clamp(mapped, 0.0, hi));
        }
    }
    return out;
}

std::vector<DepthThumb> synthetic_reference_library(uint64_t seed, int count) {
    std::vector<DepthThumb> out;
    out.reserve(count);
    for (int k = 0; k < count; ++k) {
        Rng rng(hash_combine(seed, 0x5eedul + k));
        const double a = 5.0 + 25.0 * rng.next_double();
        const double b = 0.5 + 2.5 * rng.next_double();
        const double eye = 1.2 + 1.0 * rng.next_double();
        const double bump = 0.5 + 2.0 * rng.next_double();
        const uint64_t noise_seed = rng.next_u64();

        DepthThumb thumb;
        thumb.id = "synth_" + std::to_string(k);
        for (int y = 0; y < kThumbHeight; ++y) {
            for (int x = 0; x < kThumbWidth; ++x) {
                const double v = 1.0 - (y + 0.5) / kThumbHeight;
                const double elev = (v - 0.5) * kPi;
                // ground-plane metric depth below the horizon, far dome above
                double d;
                if (elev < -0.02) {
                    d = eye / std::sin(-elev);
                    d += bump * hash_unit(noise_seed, x / 4, y / 4);
                    d = std::min(d, 400.0);
                } else {
                    d = 400.0;
                }
                const double est = a / (d + b) + 0.01 * a * hash_unit(noise_seed ^ 0x9e37ull, x, y);
                thumb.samples[y * kThumbWidth + x] = static_cast<float>(est);
            }
        }
        out.push_back(std::move(thumb));
    }
    return out;
}

void save_library(const std::string& dir, const std::vector<DepthThumb>& thumbs) {
    std::filesystem::create_directories(dir);
    nlohmann::json index;
    index["thumbs"] = nlohmann::json::array();
    for (const DepthThumb& t : thumbs) {
        Image img(kThumbWidth, kThumbHeight, 1);
        std::copy(t.samples.begin(), t.samples.end(), img.data.begin());
        save_raw_float(dir + "/" + t.id, img);
        index["thumbs"].push_back(t.id);
    }
    std::ofstream f(dir + "/index.json");
    f << index.dump(2) << "\n";
}

std::vector<DepthThumb> load_library(const std::string& dir) {
    std::ifstream f(dir + "/index.json");
    if (!f) throw std::runtime_error("depth library: cannot open " + dir + "/index.json");
    nlohmann::json index = nlohmann::json::parse(f);
    std::vector<DepthThumb> out;
    for (const auto& id : index.at("thumbs")) {
        const Image img = load_raw_float(dir + "/" + id.get<std::string>());
        if (img.width != kThumbWidth || img.height != kThumbHeight || img.channels != 1)
            throw std::runtime_error("depth library: bad thumb dimensions for " +
                                     id.get<std::string>());
        DepthThumb t;
        t.id = id.get<std::string>();
        std::copy(img.data.begin(), img.data.end(), t.samples.begin());
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace pw::depthadapt
