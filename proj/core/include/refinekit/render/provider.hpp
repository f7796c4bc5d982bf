#pragma once

#include "refinekit/doc/html_document.hpp"
#include "refinekit/render/image.hpp"

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace refinekit::render {

struct Viewport {
    int width = 1280;
    int height = 720;

    bool operator==(const Viewport&) const = default;
};

struct BBox {
    double x = 0, y = 0, w = 0, h = 0;

    double area() const { return w * h; }
    double cx() const { return x + w / 2; }
    double cy() const { return y + h / 2; }
    bool operator==(const BBox&) const = default;
};

// One visible text-bearing element: the union box of its own text runs, the
// whitespace-collapsed text of those runs, and its computed color.
struct Block {
    std::string path; // element NodePath, "/"-joined
    BBox bbox;
    std::string text;
    css::Rgb color;

    bool operator==(const Block&) const = default;
};

using BlockExtract = std::vector<Block>;

struct RenderResult {
    RasterImage image;
    BlockExtract blocks;
};

struct ProviderCapabilities {
    Viewport viewport;
    std::chrono::milliseconds timeout{30000};
};

// Turns a complete HTML document into a full-page screenshot plus block
// geometry. Implementations must be deterministic per (html, viewport).
// A single instance is used by one caller at a time unless it documents
// otherwise; RenderPool multiplexes several instances.
class RenderProvider {
public:
    virtual ~RenderProvider() = default;
    virtual std::string name() const = 0;
    // Throws RenderTimeout or ProviderUnavailable.
    virtual RenderResult render(std::string_view html, const Viewport& viewport) = 0;
};

// Throws IncompleteDocument when the text fails is_complete.
RenderResult render_html(std::string_view html, RenderProvider& provider, const Viewport& viewport = {});
RenderResult render(const doc::HtmlDocument& doc, RenderProvider& provider, const Viewport& viewport = {});

// Fixed-size pool of provider sessions. render() blocks until a session is
// free; results are independent of which session served the call.
class RenderPool {
public:
    explicit RenderPool(std::vector<std::unique_ptr<RenderProvider>> sessions);

    RenderResult render(std::string_view html, const Viewport& viewport = {});
    std::size_t size() const { return sessions_.size(); }

private:
    std::vector<std::unique_ptr<RenderProvider>> sessions_;
    std::vector<bool> busy_;
    std::mutex mu_;
    std::condition_variable cv_;
};

// Box coordinates multiplied by f, matching an image scaled by f.
BlockExtract scale_blocks(const BlockExtract& blocks, double f);

std::string block_to_json(const Block& b);
Block block_from_json(std::string_view line);
void write_blocks(const std::filesystem::path& path, const BlockExtract& blocks);
BlockExtract read_blocks(const std::filesystem::path& path);

std::string path_to_string(const doc::NodePath& p);

} // namespace refinekit::render
