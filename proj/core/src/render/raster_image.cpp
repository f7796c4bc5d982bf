#include "refinekit/render/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace refinekit::render {

RasterImage::RasterImage(int w, int h, css::Rgb fill)
    : width(w), height(h)
{
    if (w < 1 || h < 1)
        throw std::invalid_argument("RasterImage: dimensions must be positive");
    pixels.resize(area() * 3);
    for (std::size_t i = 0; i < area(); ++i) {
        pixels[i * 3] = fill.r;
        pixels[i * 3 + 1] = fill.g;
        pixels[i * 3 + 2] = fill.b;
    }
}

void RasterImage::fill_rect(int x0, int y0, int x1, int y1, css::Rgb c)
{
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, width);
    y1 = std::min(y1, height);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
            set_pixel(x, y, c);
}

double budget_scale(int w, int h, std::size_t budget)
{
    double area = static_cast<double>(w) * static_cast<double>(h);
    if (area <= static_cast<double>(budget))
        return 1.0;
    return std::sqrt(static_cast<double>(budget) / area);
}

std::pair<int, int> fit_dimensions(int w, int h, std::size_t budget)
{
    if (budget < 1)
        throw std::invalid_argument("fit_pixel_budget: budget must be at least 1");
    if (static_cast<std::size_t>(w) * static_cast<std::size_t>(h) <= budget)
        return {w, h};
    double f = budget_scale(w, h, budget);
    int nw = std::max(1, static_cast<int>(std::floor(w * f)));
    int nh = std::max(1, static_cast<int>(std::floor(h * f)));
    // Guard against the product creeping over the budget through rounding
    // in f; shrink the longer side first.
    while (static_cast<std::size_t>(nw) * static_cast<std::size_t>(nh) > budget) {
        if (nw >= nh && nw > 1)
            --nw;
        else
            --nh;
    }
    return {nw, nh};
}

namespace {

// Per-axis area-averaging weights: output index i covers source interval
// [i * scale, (i + 1) * scale).
struct AxisWeights {
    std::vector<int> first;
    std::vector<std::vector<double>> weights;
};

AxisWeights axis_weights(int src, int dst)
{
    AxisWeights a;
    a.first.resize(static_cast<std::size_t>(dst));
    a.weights.resize(static_cast<std::size_t>(dst));
    double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
        double lo = i * scale;
        double hi = (i + 1) * scale;
        if (scale < 1.0) {
            // Upsampling: nearest source pixel.
            int s = std::min(src - 1, static_cast<int>(std::floor((i + 0.5) * scale)));
            a.first[static_cast<std::size_t>(i)] = s;
            a.weights[static_cast<std::size_t>(i)] = {1.0};
            continue;
        }
        int s0 = static_cast<int>(std::floor(lo));
        int s1 = std::min(src, static_cast<int>(std::ceil(hi)));
        a.first[static_cast<std::size_t>(i)] = s0;
        auto& w = a.weights[static_cast<std::size_t>(i)];
        for (int s = s0; s < s1; ++s)
            w.push_back((std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s))) / scale);
    }
    return a;
}

} // namespace

RasterImage resample(const RasterImage& img, int w, int h)
{
    if (w == img.width && h == img.height)
        return img;
    auto wx = axis_weights(img.width, w);
    auto wy = axis_weights(img.height, h);
    std::vector<double> rows(static_cast<std::size_t>(img.height) * static_cast<std::size_t>(w) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc[3] = {0, 0, 0};
            const auto& ws = wx.weights[static_cast<std::size_t>(x)];
            for (std::size_t k = 0; k < ws.size(); ++k) {
                auto c = img.pixel(wx.first[static_cast<std::size_t>(x)] + static_cast<int>(k), y);
                acc[0] += ws[k] * c.r;
                acc[1] += ws[k] * c.g;
                acc[2] += ws[k] * c.b;
            }
            auto* r = &rows[(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) * 3];
            r[0] = acc[0];
            r[1] = acc[1];
            r[2] = acc[2];
        }
    }
    RasterImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const auto& ws = wy.weights[static_cast<std::size_t>(y)];
        for (int x = 0; x < w; ++x) {
            double acc[3] = {0, 0, 0};
            for (std::size_t k = 0; k < ws.size(); ++k) {
                int sy = wy.first[static_cast<std::size_t>(y)] + static_cast<int>(k);
                const auto* r = &rows[(static_cast<std::size_t>(sy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) * 3];
                acc[0] += ws[k] * r[0];
                acc[1] += ws[k] * r[1];
                acc[2] += ws[k] * r[2];
            }
            auto ch = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
            out.set_pixel(x, y, {ch(acc[0]), ch(acc[1]), ch(acc[2])});
        }
    }
    return out;
}

RasterImage fit_pixel_budget(const RasterImage& img, std::size_t budget)
{
    auto [w, h] = fit_dimensions(img.width, img.height, budget);
    return resample(img, w, h);
}

bool is_blank(const RasterImage& img)
{
    std::array<css::Rgb, 4> corners = {img.pixel(0, 0), img.pixel(img.width - 1, 0), img.pixel(0, img.height - 1),
                                       img.pixel(img.width - 1, img.height - 1)};
    css::Rgb dominant = corners[0];
    int best = 0;
    for (const auto& c : corners) {
        int n = static_cast<int>(std::count(corners.begin(), corners.end(), c));
        if (n > best) {
            best = n;
            dominant = c;
        }
    }
    std::size_t differing = 0;
    for (std::size_t i = 0; i < img.area(); ++i) {
        const auto* p = &img.pixels[i * 3];
        if (std::abs(p[0] - dominant.r) > 8 || std::abs(p[1] - dominant.g) > 8 || std::abs(p[2] - dominant.b) > 8)
            ++differing;
    }
    return static_cast<double>(differing) < 0.005 * static_cast<double>(img.area());
}

std::size_t differing_pixels(const RasterImage& a, const RasterImage& b)
{
    if (a.width != b.width || a.height != b.height)
        return std::max(a.area(), b.area());
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.area(); ++i)
        if (a.pixels[i * 3] != b.pixels[i * 3] || a.pixels[i * 3 + 1] != b.pixels[i * 3 + 1] ||
            a.pixels[i * 3 + 2] != b.pixels[i * 3 + 2])
            ++n;
    return n;
}

} // namespace refinekit::render
