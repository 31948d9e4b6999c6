// SPDX-License-Identifier: Apache-2.0
#include "hazardkit/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "hazardkit/util.hpp"

namespace hazardkit::vision {

Rgb family_color(int family_id) {
    // Nine visually distinct strokes, indexed by family id.
    static constexpr Rgb kPalette[9] = {
        {230, 25, 75},   // red
        {60, 180, 75},   // green
        {255, 225, 25},  // yellow
        {0, 130, 200},   // blue
        {245, 130, 48},  // orange
        {145, 30, 180},  // purple
        {70, 240, 240},  // cyan
        {240, 50, 230},  // magenta
        {128, 128, 0},   // olive
    };
    int index = family_id >= 1 ? (family_id - 1) % 9 : 0;
    return kPalette[index];
}

Image::Image() : mat_(std::make_unique<cv::Mat>()) {}
Image::Image(cv::Mat mat) : mat_(std::make_unique<cv::Mat>(std::move(mat))) {}
Image::Image(const Image& other) : mat_(std::make_unique<cv::Mat>(other.mat_->clone())) {}
Image& Image::operator=(const Image& other) {
    if (this != &other) {
        *mat_ = other.mat_->clone();
    }
    return *this;
}
Image::Image(Image&&) noexcept = default;
Image& Image::operator=(Image&&) noexcept = default;
Image::~Image() = default;

Image Image::decode(std::span<const std::uint8_t> bytes) {
    cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1,
                   const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat mat = cv::imdecode(buffer, cv::IMREAD_COLOR);
    if (mat.empty()) {
        throw ImageDecodeError("cannot decode image bytes");
    }
    return Image(std::move(mat));
}

Image Image::load(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes = util::read_binary_file(path);
    try {
        return decode(bytes);
    } catch (const ImageDecodeError&) {
        throw ImageDecodeError("cannot decode image file: " + path.string());
    }
}

Image Image::solid(int width, int height, Rgb fill) {
    return Image(cv::Mat(height, width, CV_8UC3, cv::Scalar(fill.b, fill.g, fill.r)));
}

int Image::width() const { return mat_->cols; }
int Image::height() const { return mat_->rows; }

std::vector<std::uint8_t> Image::encode_png() const {
    std::vector<std::uint8_t> out;
    if (!cv::imencode(".png", *mat_, out, {cv::IMWRITE_PNG_COMPRESSION, 6})) {
        throw ImageDecodeError("png encode failed");
    }
    return out;
}

std::vector<std::uint8_t> Image::encode_jpeg(int quality) const {
    std::vector<std::uint8_t> out;
    if (!cv::imencode(".jpg", *mat_, out, {cv::IMWRITE_JPEG_QUALITY, quality})) {
        throw ImageDecodeError("jpeg encode failed");
    }
    return out;
}

Image Image::downscale_to_max(int max_dim) const {
    const int longest = std::max(width(), height());
    if (longest <= max_dim) {
        return *this;
    }
    const double scale = static_cast<double>(max_dim) / longest;
    cv::Mat resized;
    cv::resize(*mat_, resized,
               cv::Size(std::max(1, static_cast<int>(std::lround(width() * scale))),
                        std::max(1, static_cast<int>(std::lround(height() * scale)))),
               0, 0, cv::INTER_AREA);
    return Image(std::move(resized));
}

Image Image::crop(const PixelRect& rect) const {
    cv::Rect roi(rect.x0, rect.y0, rect.width(), rect.height());
    return Image(cv::Mat(*mat_, roi).clone());
}

void Image::draw_rect(const PixelRect& rect, Rgb color, int thickness) {
    cv::rectangle(*mat_, cv::Point(rect.x0, rect.y0), cv::Point(rect.x1 - 1, rect.y1 - 1),
                  cv::Scalar(color.b, color.g, color.r), thickness);
}

void Image::draw_label(const std::string& text, int x, int y, Rgb color) {
    constexpr int font = cv::FONT_HERSHEY_SIMPLEX;
    constexpr double scale = 0.45;
    constexpr int text_thickness = 1;
    int baseline = 0;
    cv::Size size = cv::getTextSize(text, font, scale, text_thickness, &baseline);
    const int pad = 3;
    cv::Point origin(std::max(0, x), std::max(0, y));
    cv::rectangle(*mat_, origin,
                  cv::Point(origin.x + size.width + 2 * pad, origin.y + size.height + baseline + 2 * pad),
                  cv::Scalar(color.b, color.g, color.r), cv::FILLED);
    // Black on bright strokes, white on dark ones.
    const int luma = 299 * color.r + 587 * color.g + 114 * color.b;
    cv::Scalar text_color = luma > 128000 ? cv::Scalar(0, 0, 0) : cv::Scalar(255, 255, 255);
    cv::putText(*mat_, text, cv::Point(origin.x + pad, origin.y + pad + size.height), font, scale,
                text_color, text_thickness, cv::LINE_8);
}

Rgb Image::pixel(int x, int y) const {
    const auto& px = mat_->at<cv::Vec3b>(y, x);
    return Rgb{px[2], px[1], px[0]};
}

}  // namespace hazardkit::vision
