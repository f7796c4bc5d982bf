#pragma once

#include "refinekit/render/provider.hpp"

namespace refinekit::render {

// Built-in software renderer: resolves inline and internal CSS, lays out
// block, inline, flex, grid and table content, and rasterizes text as fixed
// per-character glyph patterns. Output is a pure function of (html,
// viewport), identical across machines. Stateless and safe to share between
// threads.
class LayoutRasterProvider final : public RenderProvider {
public:
    struct Options {
        int max_height = 16384;
    };

    LayoutRasterProvider() = default;
    explicit LayoutRasterProvider(Options options) : options_(options) {}

    std::string name() const override { return "raster"; }
    RenderResult render(std::string_view html, const Viewport& viewport) override;

private:
    Options options_;
};

} // namespace refinekit::render
