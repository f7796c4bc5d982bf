#include "refinekit/similarity/embedding.hpp"

#include <algorithm>
#include <cmath>

namespace refinekit::similarity {

namespace {

struct Rect {
    int x0, y0, x1, y1;
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

std::uint8_t median(std::vector<std::uint8_t>& v)
{
    auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

} // namespace

render::RasterImage mask_text_regions(const render::RasterImage& img, const render::BlockExtract& blocks)
{
    constexpr int kFrame = 2;
    auto out = img;
    for (const auto& b : blocks) {
        Rect box{std::max(0, static_cast<int>(std::floor(b.bbox.x))), std::max(0, static_cast<int>(std::floor(b.bbox.y))),
                 std::min(img.width, static_cast<int>(std::ceil(b.bbox.x + b.bbox.w))),
                 std::min(img.height, static_cast<int>(std::ceil(b.bbox.y + b.bbox.h)))};
        if (box.x0 >= box.x1 || box.y0 >= box.y1)
            continue;
        Rect outer{std::max(0, box.x0 - kFrame), std::max(0, box.y0 - kFrame), std::min(img.width, box.x1 + kFrame),
                   std::min(img.height, box.y1 + kFrame)};
        std::vector<std::uint8_t> ch[3];
        for (int y = outer.y0; y < outer.y1; ++y)
            for (int x = outer.x0; x < outer.x1; ++x)
                if (!box.contains(x, y)) {
                    auto p = img.pixel(x, y);
                    ch[0].push_back(p.r);
                    ch[1].push_back(p.g);
                    ch[2].push_back(p.b);
                }
        if (ch[0].empty()) {
            Rect inner{box.x0 + kFrame, box.y0 + kFrame, box.x1 - kFrame, box.y1 - kFrame};
            for (int y = box.y0; y < box.y1; ++y)
                for (int x = box.x0; x < box.x1; ++x)
                    if (!inner.contains(x, y)) {
                        auto p = img.pixel(x, y);
                        ch[0].push_back(p.r);
                        ch[1].push_back(p.g);
                        ch[2].push_back(p.b);
                    }
        }
        out.fill_rect(box.x0, box.y0, box.x1, box.y1, {median(ch[0]), median(ch[1]), median(ch[2])});
    }
    return out;
}

} // namespace refinekit::similarity
