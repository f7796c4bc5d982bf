#pragma once

#include "refinekit/render/provider.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace refinekit::render {

// Replays stored renders keyed by fixture_key(html, viewport). Each entry is
// a pair of files in the fixture directory: <key>.png and <key>.blocks.jsonl.
//
// With a record-through provider, misses are rendered by it and written to
// the directory before being returned; without one, a miss throws
// ProviderUnavailable. Lookups are stateless and safe from several threads;
// the record-through provider must itself be thread safe or wrapped.
class FixtureRenderProvider final : public RenderProvider {
public:
    explicit FixtureRenderProvider(std::filesystem::path dir, std::shared_ptr<RenderProvider> record_through = nullptr);

    std::string name() const override { return "fixture"; }
    RenderResult render(std::string_view html, const Viewport& viewport) override;

    bool contains(std::string_view html, const Viewport& viewport) const;
    const std::filesystem::path& directory() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::shared_ptr<RenderProvider> record_through_;
};

// sha256 over the document text followed by "\n<width>x<height>".
std::string fixture_key(std::string_view html, const Viewport& viewport);

} // namespace refinekit::render
