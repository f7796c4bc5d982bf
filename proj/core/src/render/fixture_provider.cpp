#include "refinekit/render/fixture_provider.hpp"

#include "refinekit/digest.hpp"
#include "refinekit/error.hpp"
#include "refinekit/io.hpp"

namespace refinekit::render {

std::string fixture_key(std::string_view html, const Viewport& viewport)
{
    std::string material(html);
    material += "\n" + std::to_string(viewport.width) + "x" + std::to_string(viewport.height);
    return sha256_hex(material);
}

FixtureRenderProvider::FixtureRenderProvider(std::filesystem::path dir, std::shared_ptr<RenderProvider> record_through)
    : dir_(std::move(dir)), record_through_(std::move(record_through))
{
}

bool FixtureRenderProvider::contains(std::string_view html, const Viewport& viewport) const
{
    auto key = fixture_key(html, viewport);
    return std::filesystem::exists(dir_ / (key + ".png")) && std::filesystem::exists(dir_ / (key + ".blocks.jsonl"));
}

RenderResult FixtureRenderProvider::render(std::string_view html, const Viewport& viewport)
{
    auto key = fixture_key(html, viewport);
    auto png = dir_ / (key + ".png");
    auto blocks = dir_ / (key + ".blocks.jsonl");
    if (std::filesystem::exists(png) && std::filesystem::exists(blocks))
        return {read_png(png), read_blocks(blocks)};
    if (!record_through_)
        throw ProviderUnavailable("fixture: no stored render for key " + key);
    auto result = record_through_->render(html, viewport);
    write_blocks(blocks, result.blocks);
    write_png(png, result.image);
    return result;
}

} // namespace refinekit::render
