#pragma once

#include "proxyworld/image.hpp"

namespace pw {

// Box blur over a (2*radius+1)^2 window. Horizontal edges always wrap;
// vertical edges clamp for ERP rasters and wrap for periodic top-down maps.
// Separable two-pass; the _serial variants are the reference implementations
// kept for tests and the kernel benchmark.
Image box_blur(const Image& img, int radius, bool wrap_vertical = false);
Image box_blur_serial(const Image& img, int radius, bool wrap_vertical = false);

// Binary morphology with a square (Chebyshev) structuring element, wrap-aware
// horizontally, clamped vertically. Input treated as mask>0.5.
Image dilate(const Image& mask, int radius);
Image erode(const Image& mask, int radius);
Image dilate_serial(const Image& mask, int radius);
Image erode_serial(const Image& mask, int radius);

// Bicubic (Catmull-Rom) resize, horizontal wrap / vertical clamp.
Image resize_bicubic(const Image& img, int new_width, int new_height);

Image extract_channel(const Image& img, int channel);

}  // namespace pw
