#include "refinekit/similarity/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace refinekit::similarity {

namespace {

double luminance(const std::uint8_t* p) { return (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0; }

} // namespace

Embedding fallback_embed(const render::RasterImage& input)
{
    auto img = render::fit_pixel_budget(input);
    const int w = img.width, h = img.height;
    std::vector<double> lum(img.area());
    for (std::size_t i = 0; i < lum.size(); ++i)
        lum[i] = luminance(&img.pixels[i * 3]);

    Embedding v(kFallbackDim, 0.0);
    for (int row = 0; row < kFallbackGrid; ++row) {
        const int y0 = row * h / kFallbackGrid, y1 = (row + 1) * h / kFallbackGrid;
        for (int col = 0; col < kFallbackGrid; ++col) {
            const int x0 = col * w / kFallbackGrid, x1 = (col + 1) * w / kFallbackGrid;
            double* f = &v[static_cast<std::size_t>(row * kFallbackGrid + col) * 6];
            const double n = static_cast<double>(x1 - x0) * static_cast<double>(y1 - y0);
            if (n <= 0)
                continue;
            double r = 0, g = 0, b = 0, l = 0, l2 = 0, gx = 0, gy = 0;
            std::size_t nx = 0, ny = 0;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
                    r += img.pixels[i * 3];
                    g += img.pixels[i * 3 + 1];
                    b += img.pixels[i * 3 + 2];
                    l += lum[i];
                    l2 += lum[i] * lum[i];
                    if (x + 1 < x1) {
                        gx += std::abs(lum[i + 1] - lum[i]);
                        ++nx;
                    }
                    if (y + 1 < y1) {
                        gy += std::abs(lum[i + static_cast<std::size_t>(w)] - lum[i]);
                        ++ny;
                    }
                }
            }
            f[0] = r / n / 255.0;
            f[1] = g / n / 255.0;
            f[2] = b / n / 255.0;
            const double mean = l / n;
            f[3] = std::sqrt(std::max(0.0, l2 / n - mean * mean));
            f[4] = nx ? gx / static_cast<double>(nx) : 0.0;
            f[5] = ny ? gy / static_cast<double>(ny) : 0.0;
        }
    }
    v[kFallbackBiasIndex] = 1.0;
    double norm = 0;
    for (double x : v)
        norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v)
        x /= norm;
    return v;
}

double cosine(const Embedding& a, const Embedding& b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0)
        return 0;
    return dot / std::sqrt(na * nb);
}

double similarity(const render::RasterImage& a, const render::RasterImage& b, EmbeddingProvider& provider)
{
    return std::clamp(cosine(provider.embed(a), provider.embed(b)), 0.0, 1.0);
}

std::unique_ptr<EmbeddingProvider> make_embedder(const std::string& spec)
{
    if (spec.empty() || spec == "fallback")
        return std::make_unique<FallbackEmbedder>();
    RemoteEmbedder::Options o;
    o.endpoint = spec;
    return std::make_unique<RemoteEmbedder>(o);
}

} // namespace refinekit::similarity
