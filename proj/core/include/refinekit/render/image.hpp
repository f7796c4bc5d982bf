#pragma once

#include "refinekit/doc/css.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace refinekit::render {

inline constexpr std::size_t kPixelBudget = 1003520;

// Row-major 8-bit RGB.
struct RasterImage {
    int width = 1;
    int height = 1;
    std::vector<std::uint8_t> pixels = std::vector<std::uint8_t>(3, 255);

    RasterImage() = default;
    RasterImage(int w, int h, css::Rgb fill = {255, 255, 255});

    std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

    css::Rgb pixel(int x, int y) const
    {
        const auto* p = &pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3];
        return {p[0], p[1], p[2]};
    }
    void set_pixel(int x, int y, css::Rgb c)
    {
        auto* p = &pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }

    // Fills the pixel rectangle [x0, x1) x [y0, y1), clipped to the image.
    void fill_rect(int x0, int y0, int x1, int y1, css::Rgb c);

    bool operator==(const RasterImage&) const = default;
};

// Output dimensions of fit_pixel_budget for a w x h input.
std::pair<int, int> fit_dimensions(int w, int h, std::size_t budget = kPixelBudget);

// Scale factor fit_pixel_budget applies (1 when the image already fits).
double budget_scale(int w, int h, std::size_t budget = kPixelBudget);

// Uniform area-averaging downscale to at most `budget` pixels; identity when
// the image already fits.
RasterImage fit_pixel_budget(const RasterImage& img, std::size_t budget = kPixelBudget);

// Area-averaging resample to exact dimensions (down or up).
RasterImage resample(const RasterImage& img, int w, int h);

// True when fewer than 0.5% of pixels differ from the dominant corner color
// by more than 8/255 in any channel.
bool is_blank(const RasterImage& img);

// Pixels that differ in any channel; every pixel counts when the dimensions
// differ.
std::size_t differing_pixels(const RasterImage& a, const RasterImage& b);

std::vector<std::uint8_t> encode_png(const RasterImage& img);
RasterImage decode_png(std::span<const std::uint8_t> bytes);
void write_png(const std::filesystem::path& path, const RasterImage& img);
RasterImage read_png(const std::filesystem::path& path);

} // namespace refinekit::render
