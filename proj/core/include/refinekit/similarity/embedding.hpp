#pragma once

#include "refinekit/render/image.hpp"
#include "refinekit/render/provider.hpp"

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace refinekit::similarity {

using Embedding = std::vector<double>; // unit L2 norm

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dimension() const = 0;
    // Same image ⇒ same vector. Implementations must be safe to call from
    // several threads.
    virtual Embedding embed(const render::RasterImage& img) = 0;
};

inline constexpr std::size_t kFallbackDim = 512;
inline constexpr int kFallbackGrid = 8;
inline constexpr std::size_t kFallbackBiasIndex = kFallbackGrid * kFallbackGrid * 6;

// Closed-form features of the budget-fitted image on an 8x8 grid. Per cell,
// in order: mean R, G, B in [0,1]; luminance standard deviation; mean absolute
// horizontal and vertical luminance steps. Cell c = row*8 + col occupies
// indices [6c, 6c+6). Index 384 holds a constant 1 so that no image maps to
// the zero vector; the rest is zero. The whole vector is L2-normalized.
Embedding fallback_embed(const render::RasterImage& img);

class FallbackEmbedder final : public EmbeddingProvider {
public:
    std::string name() const override { return "fallback"; }
    std::size_t dimension() const override { return kFallbackDim; }
    Embedding embed(const render::RasterImage& img) override { return fallback_embed(img); }
};

// Client of the remote scorer: POST /embed (PNG body) and GET /health.
// Received vectors are checked for a stable dimension, unit norm within 1e-5
// and a checksum equal to the sha256 of the sent bytes; any violation, HTTP
// failure or timeout raises ProviderUnavailable. At most max_in_flight
// requests run concurrently.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    struct Options {
        std::string endpoint = "http://127.0.0.1:8000";
        std::chrono::milliseconds timeout{30000};
        int max_in_flight = 4;
    };

    struct Health {
        std::string status;
        std::string model;
        std::size_t dim = 0;
    };

    explicit RemoteEmbedder(Options options);
    ~RemoteEmbedder() override;

    std::string name() const override;
    // Dimension reported by the service; queried on first use.
    std::size_t dimension() const override;
    Embedding embed(const render::RasterImage& img) override;
    Health health() const;

private:
    struct State;
    Options options_;
    std::unique_ptr<State> state_;
};

// Cosine of two vectors of equal dimension (0 when either is zero).
double cosine(const Embedding& a, const Embedding& b);

// clamp(cosine(embed(a), embed(b)), 0, 1).
double similarity(const render::RasterImage& a, const render::RasterImage& b, EmbeddingProvider& provider);

// Fills each block box, rounded outward to whole pixels, with the per-channel
// median of the 2-px frame around it (taken from the unmasked image; the
// inner 2-px rim when the box leaves no outer frame). Boxes are in image
// pixel coordinates.
render::RasterImage mask_text_regions(const render::RasterImage& img, const render::BlockExtract& blocks);

// "fallback" gives a FallbackEmbedder, anything else is taken as a remote
// endpoint URL.
std::unique_ptr<EmbeddingProvider> make_embedder(const std::string& spec);

} // namespace refinekit::similarity
