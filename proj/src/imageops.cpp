#include "proxyworld/imageops.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pw {

namespace {

inline int wrap_i(int x, int n) { return ((x % n) + n) % n; }
inline int clamp_i(int y, int n) { return std::clamp(y, 0, n - 1); }

Image blur_pass_h(const Image& img, int radius, bool threaded) {
    Image out(img.width, img.height, img.channels);
    const double inv = 1.0 / (2 * radius + 1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (threaded)
#else
    (void)threaded;
#endif
    for (int y = 0; y < img.height; ++y) {
        for (int c = 0; c < img.channels; ++c) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) acc += img.at(wrap_i(k, img.width), y, c);
            out.at(0, y, c) = static_cast<float>(acc * inv);
            for (int x = 1; x < img.width; ++x) {
                acc += img.at(wrap_i(x + radius, img.width), y, c);
                acc -= img.at(wrap_i(x - radius - 1, img.width), y, c);
                out.at(x, y, c) = static_cast<float>(acc * inv);
            }
        }
    }
    return out;
}

Image blur_pass_v(const Image& img, int radius, bool wrap_vertical, bool threaded) {
    Image out(img.width, img.height, img.channels);
    const double inv = 1.0 / (2 * radius + 1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (threaded)
#else
    (void)threaded;
#endif
    for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < img.channels; ++c) {
            auto row = [&](int y) {
                return img.at(x, wrap_vertical ? wrap_i(y, img.height) : clamp_i(y, img.height), c);
            };
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) acc += row(k);
            out.at(x, 0, c) = static_cast<float>(acc * inv);
            for (int y = 1; y < img.height; ++y) {
                acc += row(y + radius);
                acc -= row(y - radius - 1);
                out.at(x, y, c) = static_cast<float>(acc * inv);
            }
        }
    }
    return out;
}

enum class Morph { dilate, erode };

Image morph_pass(const Image& img, int radius, Morph op, bool vertical, bool threaded) {
    Image out(img.width, img.height, 1);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (threaded)
#else
    (void)threaded;
#endif
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            bool hit = op == Morph::erode;
            for (int k = -radius; k <= radius; ++k) {
                const bool v = vertical
                                   ? img.at(x, clamp_i(y + k, img.height), 0) > 0.5f
                                   : img.at(wrap_i(x + k, img.width), y, 0) > 0.5f;
                if (op == Morph::dilate) {
                    if (v) { hit = true; break; }
                } else {
                    if (!v) { hit = false; break; }
                }
            }
            out.at(x, y, 0) = hit ? 1.0f : 0.0f;
        }
    }
    return out;
}

Image morph(const Image& mask, int radius, Morph op, bool threaded) {
    if (radius <= 0) {
        Image out(mask.width, mask.height, 1);
        for (int y = 0; y < mask.height; ++y)
            for (int x = 0; x < mask.width; ++x)
                out.at(x, y, 0) = mask.at(x, y, 0) > 0.5f ? 1.0f : 0.0f;
        return out;
    }
    return morph_pass(morph_pass(mask, radius, op, false, threaded), radius, op, true, threaded);
}

double cubic_weight(double t) {
    // Catmull-Rom
    const double a = -0.5;
    t = std::abs(t);
    if (t < 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
    if (t < 2.0) return a * t * t * t - 5.0 * a * t * t + 8.0 * a * t - 4.0 * a;
    return 0.0;
}

}  // namespace

Image box_blur(const Image& img, int radius, bool wrap_vertical) {
    if (radius <= 0) return img;
    return blur_pass_v(blur_pass_h(img, radius, true), radius, wrap_vertical, true);
}

Image box_blur_serial(const Image& img, int radius, bool wrap_vertical) {
    if (radius <= 0) return img;
    return blur_pass_v(blur_pass_h(img, radius, false), radius, wrap_vertical, false);
}

Image dilate(const Image& mask, int radius) { return morph(mask, radius, Morph::dilate, true); }
Image erode(const Image& mask, int radius) { return morph(mask, radius, Morph::erode, true); }
Image dilate_serial(const Image& mask, int radius) {
    return morph(mask, radius, Morph::dilate, false);
}
Image erode_serial(const Image& mask, int radius) {
    return morph(mask, radius, Morph::erode, false);
}

Image resize_bicubic(const Image& img, int new_width, int new_height) {
    Image out(new_width, new_height, img.channels);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < new_height; ++y) {
        const double sy = (y + 0.5) * img.height / new_height - 0.5;
        const int iy = static_cast<int>(std::floor(sy));
        const double fy = sy - iy;
        for (int x = 0; x < new_width; ++x) {
            const double sx = (x + 0.5) * img.width / new_width - 0.5;
            const int ix = static_cast<int>(std::floor(sx));
            const double fx = sx - ix;
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                double wsum = 0.0;
                for (int m = -1; m <= 2; ++m) {
                    const double wy = cubic_weight(m - fy);
                    if (wy == 0.0) continue;
                    const int yy = clamp_i(iy + m, img.height);
                    for (int n = -1; n <= 2; ++n) {
                        const double wx = cubic_weight(n - fx);
                        if (wx == 0.0) continue;
                        const double w = wx * wy;
                        acc += w * img.at(wrap_i(ix + n, img.width), yy, c);
                        wsum += w;
                    }
                }
                out.at(x, y, c) = static_cast<float>(acc / wsum);
            }
        }
    }
    return out;
}

Image extract_channel(const Image& img, int channel) {
    Image out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) out.at(x, y, 0) = img.at(x, y, channel);
    return out;
}

}  // namespace pw
