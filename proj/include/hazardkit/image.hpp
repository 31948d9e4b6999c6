// SPDX-License-Identifier: Apache-2.0
// Thin image wrapper (decode/encode, resize, crop, drawing) over OpenCV.
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazardkit/geometry.hpp"

namespace cv {
class Mat;
}

namespace hazardkit::vision {

class ImageDecodeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

// Deterministic stroke color per taxonomy family (1-based id).
Rgb family_color(int family_id);

class Image {
  public:
    Image();
    Image(const Image& other);
    Image& operator=(const Image& other);
    Image(Image&&) noexcept;
    Image& operator=(Image&&) noexcept;
    ~Image();

    static Image decode(std::span<const std::uint8_t> bytes);  // throws ImageDecodeError
    static Image load(const std::filesystem::path& path);
    static Image solid(int width, int height, Rgb fill);

    int width() const;
    int height() const;

    std::vector<std::uint8_t> encode_png() const;
    std::vector<std::uint8_t> encode_jpeg(int quality = 90) const;

    // Longest side capped at max_dim, aspect preserved; no-op when already
    // within bounds.
    Image downscale_to_max(int max_dim) const;

    Image crop(const PixelRect& rect) const;

    void draw_rect(const PixelRect& rect, Rgb color, int thickness);
    // Filled label box anchored at (x, y) growing downward.
    void draw_label(const std::string& text, int x, int y, Rgb color);

    Rgb pixel(int x, int y) const;

  private:
    explicit Image(cv::Mat mat);
    std::unique_ptr<cv::Mat> mat_;
};

}  // namespace hazardkit::vision
