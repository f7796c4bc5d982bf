#include "refinekit/render/provider.hpp"

#include "refinekit/doc/preprocess.hpp"
#include "refinekit/error.hpp"
#include "refinekit/io.hpp"

#include "json.hpp"

namespace refinekit::render {

using nlohmann::json;

RenderResult render_html(std::string_view html, RenderProvider& provider, const Viewport& viewport)
{
    if (!doc::is_complete(html))
        throw IncompleteDocument("render: document lacks <html> or </html>");
    return provider.render(html, viewport);
}

RenderResult render(const doc::HtmlDocument& d, RenderProvider& provider, const Viewport& viewport)
{
    return render_html(doc::serialize(d), provider, viewport);
}

RenderPool::RenderPool(std::vector<std::unique_ptr<RenderProvider>> sessions)
    : sessions_(std::move(sessions)), busy_(sessions_.size(), false)
{
    if (sessions_.empty())
        throw std::invalid_argument("RenderPool needs at least one session");
}

RenderResult RenderPool::render(std::string_view html, const Viewport& viewport)
{
    std::size_t slot = 0;
    {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] {
            for (std::size_t i = 0; i < busy_.size(); ++i) {
                if (!busy_[i]) {
                    slot = i;
                    return true;
                }
            }
            return false;
        });
        busy_[slot] = true;
    }
    struct Release {
        RenderPool* pool;
        std::size_t slot;
        ~Release()
        {
            {
                std::lock_guard lock(pool->mu_);
                pool->busy_[slot] = false;
            }
            pool->cv_.notify_one();
        }
    } release{this, slot};
    return render_html(html, *sessions_[slot], viewport);
}

BlockExtract scale_blocks(const BlockExtract& blocks, double f)
{
    BlockExtract out = blocks;
    for (auto& b : out)
        b.bbox = {b.bbox.x * f, b.bbox.y * f, b.bbox.w * f, b.bbox.h * f};
    return out;
}

std::string block_to_json(const Block& b)
{
    json j = {
        {"path", b.path},
        {"bbox", {b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h}},
        {"text", b.text},
        {"color", {b.color.r, b.color.g, b.color.b}},
    };
    return j.dump();
}

Block block_from_json(std::string_view line)
{
    try {
        auto j = json::parse(line);
        Block b;
        b.path = j.at("path").get<std::string>();
        const auto& box = j.at("bbox");
        b.bbox = {box.at(0).get<double>(), box.at(1).get<double>(), box.at(2).get<double>(), box.at(3).get<double>()};
        b.text = j.at("text").get<std::string>();
        const auto& c = j.at("color");
        b.color = {c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(), c.at(2).get<std::uint8_t>()};
        return b;
    } catch (const json::exception& e) {
        throw FormatError(std::string("block record: ") + e.what());
    }
}

void write_blocks(const std::filesystem::path& path, const BlockExtract& blocks)
{
    std::vector<std::string> lines;
    lines.reserve(blocks.size());
    for (const auto& b : blocks)
        lines.push_back(block_to_json(b));
    write_lines(path, lines);
}

BlockExtract read_blocks(const std::filesystem::path& path)
{
    BlockExtract out;
    for (const auto& line : read_lines(path))
        out.push_back(block_from_json(line));
    return out;
}

std::string path_to_string(const doc::NodePath& p)
{
    std::string s;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i)
            s.push_back('/');
        s += std::to_string(p[i]);
    }
    return s;
}

} // namespace refinekit::render
