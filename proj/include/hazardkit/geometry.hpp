// SPDX-License-Identifier: Apache-2.0
// Ratio-coordinate boxes, pixel projection, margins, and IoU.
#pragma once

#include <optional>

namespace hazardkit::vision {

// Center + size as fractions of the image dimensions.
struct RatioBBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
};

struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool operator==(const PixelRect&) const = default;
};

// Shrinks w/h into (0,1] and shifts the center so the whole box lies inside
// the unit square (a center of 1.3 ends up with its right edge at 1.0).
// Returns nullopt for degenerate sizes (w or h <= 0).
std::optional<RatioBBox> clamp_ratio_bbox(const RatioBBox& box);

// Rounds edges to pixels and clamps to the image, enforcing x0 < x1 and
// y0 < y1 (at least one pixel of extent). width/height must be >= 1.
PixelRect ratio_to_pixels(const RatioBBox& box, int width, int height);

// Expands the rect by margin_fraction of its own extent on every side,
// clamped to the image.
PixelRect expand_with_margin(const PixelRect& rect, double margin_fraction, int width,
                             int height);

// Standard intersection-over-union in ratio space.
double iou(const RatioBBox& a, const RatioBBox& b);

// Maps a box given relative to a crop rect back into full-image ratio space.
RatioBBox crop_relative_to_full(const RatioBBox& crop_relative, const PixelRect& crop, int width,
                                int height);

// Projects a full-image ratio box into a box relative to the crop rect.
RatioBBox full_to_crop_relative(const RatioBBox& full, const PixelRect& crop, int width,
                                int height);

}  // namespace hazardkit::vision
