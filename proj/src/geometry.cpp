// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace hazardkit::vision {

std::optional<RatioBBox> clamp_ratio_bbox(const RatioBBox& box) {
    if (!(box.w > 0.0) || !(box.h > 0.0)) {
        return std::nullopt;
    }
    RatioBBox out = box;
    out.w = std::min(out.w, 1.0);
    out.h = std::min(out.h, 1.0);
    out.cx = std::clamp(out.cx, out.w / 2.0, 1.0 - out.w / 2.0);
    out.cy = std::clamp(out.cy, out.h / 2.0, 1.0 - out.h / 2.0);
    return out;
}

PixelRect ratio_to_pixels(const RatioBBox& box, int width, int height) {
    PixelRect rect;
    rect.x0 = static_cast<int>(std::lround((box.cx - box.w / 2.0) * width));
    rect.x1 = static_cast<int>(std::lround((box.cx + box.w / 2.0) * width));
    rect.y0 = static_cast<int>(std::lround((box.cy - box.h / 2.0) * height));
    rect.y1 = static_cast<int>(std::lround((box.cy + box.h / 2.0) * height));
    rect.x0 = std::clamp(rect.x0, 0, width);
    rect.x1 = std::clamp(rect.x1, 0, width);
    rect.y0 = std::clamp(rect.y0, 0, height);
    rect.y1 = std::clamp(rect.y1, 0, height);
    if (rect.x0 >= rect.x1) {
        if (rect.x1 < width) ++rect.x1;
        else rect.x0 = rect.x1 - 1;
    }
    if (rect.y0 >= rect.y1) {
        if (rect.y1 < height) ++rect.y1;
        else rect.y0 = rect.y1 - 1;
    }
    return rect;
}

PixelRect expand_with_margin(const PixelRect& rect, double margin_fraction, int width,
                             int height) {
    const int dx = static_cast<int>(std::lround(margin_fraction * rect.width()));
    const int dy = static_cast<int>(std::lround(margin_fraction * rect.height()));
    PixelRect out;
    out.x0 = std::clamp(rect.x0 - dx, 0, width);
    out.x1 = std::clamp(rect.x1 + dx, 0, width);
    out.y0 = std::clamp(rect.y0 - dy, 0, height);
    out.y1 = std::clamp(rect.y1 + dy, 0, height);
    return out;
}

double iou(const RatioBBox& a, const RatioBBox& b) {
    const double ax0 = a.cx - a.w / 2.0, ax1 = a.cx + a.w / 2.0;
    const double ay0 = a.cy - a.h / 2.0, ay1 = a.cy + a.h / 2.0;
    const double bx0 = b.cx - b.w / 2.0, bx1 = b.cx + b.w / 2.0;
    const double by0 = b.cy - b.h / 2.0, by1 = b.cy + b.h / 2.0;
    const double ix = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
    const double iy = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
    const double inter = ix * iy;
    const double uni = a.w * a.h + b.w * b.h - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

RatioBBox crop_relative_to_full(const RatioBBox& crop_relative, const PixelRect& crop, int width,
                                int height) {
    const double cw = crop.width();
    const double ch = crop.height();
    RatioBBox out;
    out.cx = (crop.x0 + crop_relative.cx * cw) / width;
    out.cy = (crop.y0 + crop_relative.cy * ch) / height;
    out.w = crop_relative.w * cw / width;
    out.h = crop_relative.h * ch / height;
    return out;
}

RatioBBox full_to_crop_relative(const RatioBBox& full, const PixelRect& crop, int width,
                                int height) {
    const double cw = crop.width();
    const double ch = crop.height();
    RatioBBox out;
    out.cx = (full.cx * width - crop.x0) / cw;
    out.cy = (full.cy * height - crop.y0) / ch;
    out.w = full.w * width / cw;
    out.h = full.h * height / ch;
    return out;
}

}  // namespace hazardkit::vision
