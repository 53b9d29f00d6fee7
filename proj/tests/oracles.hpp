// Test-only oracles, kept independent of the implementation paths they check.
#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "proxyworld/geometry.hpp"

namespace oracle {

// Dense normal-equations cubic fit (A^T A x = A^T y via Gaussian elimination
// with partial pivoting). The production path uses Householder QR.
struct CubicFit {
    double c3, c2, c1, c0;
    double residual_rms;
};

inline CubicFit normal_equations_cubic(const std::vector<double>& xs,
                                       const std::vector<double>& ys) {
    const size_t n = xs.size();
    double ata[4][4] = {};
    double aty[4] = {};
    for (size_t i = 0; i < n; ++i) {
        const double x = xs[i];
        const double row[4] = {x * x * x, x * x, x, 1.0};
        for (int r = 0; r < 4; ++r) {
            aty[r] += row[r] * ys[i];
            for (int c = 0; c < 4; ++c) ata[r][c] += row[r] * row[c];
        }
    }
    // Gaussian elimination, partial pivot
    double m[4][5];
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) m[r][c] = ata[r][c];
        m[r][4] = aty[r];
    }
    for (int k = 0; k < 4; ++k) {
        int pivot = k;
        for (int r = k + 1; r < 4; ++r)
            if (std::abs(m[r][k]) > std::abs(m[pivot][k])) pivot = r;
        for (int c = 0; c < 5; ++c) std::swap(m[k][c], m[pivot][c]);
        if (std::abs(m[k][k]) < 1e-14) throw std::runtime_error("normal equations singular");
        for (int r = k + 1; r < 4; ++r) {
            const double f = m[r][k] / m[k][k];
            for (int c = k; c < 5; ++c) m[r][c] -= f * m[k][c];
        }
    }
    double sol[4];
    for (int k = 3; k >= 0; --k) {
        double s = m[k][4];
        for (int c = k + 1; c < 4; ++c) s -= m[k][c] * sol[c];
        sol[k] = s / m[k][k];
    }
    double ssr = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double x = xs[i];
        const double fit = ((sol[0] * x + sol[1]) * x + sol[2]) * x + sol[3];
        ssr += (fit - ys[i]) * (fit - ys[i]);
    }
    return {sol[0], sol[1], sol[2], sol[3], std::sqrt(ssr / static_cast<double>(n))};
}

// Iterative radix-2 FFT for the spectral-ordering check.
inline void fft(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    if (n < 2) return;
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * pw::kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Mean spectral centroid over all rows of a single-channel square raster.
inline double spectral_centroid_rows(const std::vector<float>& data, int width, int height,
                                     int channel, int channels) {
    double num = 0.0, den = 0.0;
    for (int y = 0; y < height; ++y) {
        std::vector<std::complex<double>> row(width);
        double mean = 0.0;
        for (int x = 0; x < width; ++x)
            mean += data[(static_cast<size_t>(y) * width + x) * channels + channel];
        mean /= width;
        for (int x = 0; x < width; ++x)
            row[x] = data[(static_cast<size_t>(y) * width + x) * channels + channel] - mean;
        fft(row);
        for (int f = 1; f < width / 2; ++f) {
            const double p = std::norm(row[f]);
            num += f * p;
            den += p;
        }
    }
    return den > 0 ? num / den : 0.0;
}

// Analytic depth of the plane y=0 seen from `eye_y` along the direction of an
// ERP uv; +inf when the ray points at or above the horizon.
inline double plane_depth(double v, double eye_y) {
    const double elevation = (v - 0.5) * pw::kPi;
    if (elevation >= -1e-12) return std::numeric_limits<double>::infinity();
    return eye_y / std::sin(-elevation);
}

}  // namespace oracle
